"""Incremental loading with full Newton-Raphson iterations."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import Discretization
from .constitutive import MaterialNonconvergenceError, MaterialState

log = logging.getLogger(__name__)

E_TOL = 1e-7
NRI_MAX = 70


class LinearSolveError(RuntimeError):
    pass


@dataclass(frozen=True)
class LoadProgram:
    """Load levels ``p_min, p_min + dp, ..., p_max`` applied from the unloaded state.

    Steps are numbered from 1 in schedule order; a zero level is skipped
    because the initial state already satisfies it.
    """

    p_min: float
    p_max: float
    dp: float

    def __post_init__(self):
        if not self.dp > 0:
            raise ValueError("load increment must be positive")
        if self.p_max < self.p_min:
            raise ValueError("p_max must not be below p_min")

    @property
    def n_levels(self) -> int:
        return int(round((self.p_max - self.p_min) / self.dp)) + 1

    def steps(self) -> list[tuple[int, float]]:
        levels = [self.p_min + k * self.dp for k in range(self.n_levels)]
        levels = [p for p in levels if p != 0]
        return list(enumerate(levels, start=1))


@dataclass
class StepRecord:
    step: int
    load: float
    residuals: list = field(default_factory=list)
    rho: list = field(default_factory=list)
    converged: bool = False
    n_plastic: int = 0
    message: str = ""

    @property
    def iterations(self) -> int:
        """Number of linear solves performed."""
        return max(len(self.residuals) - 1, 0)

    @property
    def plastic(self) -> bool:
        return self.n_plastic > 0


@dataclass
class SolveReport:
    steps: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return bool(self.steps) and all(s.converged for s in self.steps)

    def plastic_steps(self) -> list:
        return [s for s in self.steps if s.plastic]

    def iteration_stats(self):
        """``(i_min, i_max, median)`` over plastic steps, or None."""
        its = [s.iterations for s in self.plastic_steps()]
        if not its:
            return None
        return min(its), max(its), float(np.median(its))

    def nr_order(self, steps=None) -> float:
        """Mean measured order over the given (default: plastic) steps."""
        recs = self.plastic_steps() if steps is None else steps
        ks = [measure_nr_order(s.rho) for s in recs]
        ks = [k for k in ks if np.isfinite(k)]
        return float(np.mean(ks)) if ks else float("nan")

    def to_text(self) -> str:
        lines = ["step iter residual"]
        for s in self.steps:
            for i, e in enumerate(s.residuals):
                lines.append(f"{s.step} {i} {e:.6e}")
        lines.append("")
        lines.append("# summary")
        lines.append("step load iterations converged n_plastic")
        for s in self.steps:
            lines.append(f"{s.step} {s.load:.10g} {s.iterations} {int(s.converged)} {s.n_plastic}")
        stats = self.iteration_stats()
        if stats is not None:
            lines.append(f"# i_min={stats[0]} i_max={stats[1]} i_median={stats[2]:g}")
        lines.append(f"# converged={int(self.converged)}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        lines = ["step,load,iterations,converged,n_plastic,final_residual,nr_order"]
        for s in self.steps:
            res = s.residuals[-1] if s.residuals else float("nan")
            lines.append(f"{s.step},{s.load:.10g},{s.iterations},{int(s.converged)},{s.n_plastic},"
                         f"{res:.6e},{measure_nr_order(s.rho):.6g}")
        return "\n".join(lines) + "\n"


def measure_nr_order(rho) -> float:
    """Order ``k`` from a least-squares fit of ``log rho_{i+1}`` against ``log rho_i``.

    The fit uses the strictly decreasing positive run that ends at the last
    value, i.e. the asymptotic part of the history; fewer than three usable
    values give NaN.
    """
    rho = np.asarray(rho, dtype=float)
    run: list = []
    for v in rho[::-1]:
        if not (v > 0 and np.isfinite(v)) or (run and v <= run[-1]):
            break
        run.append(v)
    run = run[::-1]
    if len(run) < 3:
        return float("nan")
    x = np.log(run[:-1])
    y = np.log(run[1:])
    return float(np.polyfit(x, y, 1)[0])


def newton_step(K: sp.spmatrix, r: np.ndarray) -> np.ndarray:
    """Solve ``K du = -r`` with a sparse LU factorization."""
    try:
        lu = spla.splu(sp.csc_matrix(K), permc_spec="COLAMD")
        du = lu.solve(-r)
    except RuntimeError as exc:
        raise LinearSolveError(f"sparse factorization failed: {exc}") from exc
    if not np.all(np.isfinite(du)):
        raise LinearSolveError("linear solve produced non-finite values")
    return du


@dataclass
class SolveResult:
    u: np.ndarray
    states: dict
    report: SolveReport


def _norm(disc: Discretization, r, f_ext, force_rows_only):
    rows = disc.balance_rows if force_rows_only else slice(None)
    nf = np.linalg.norm(f_ext[rows])
    nr = np.linalg.norm(r[rows])
    return nr / nf if nf > 0 else nr


def solve_increment(disc: Discretization, u_n: np.ndarray, committed: dict, load: float,
                    record: StepRecord, tol: float = E_TOL, max_iter: int = NRI_MAX,
                    force_rows_only: bool = False):
    """Newton iterations for one load level; never mutates ``committed``."""
    du = np.zeros_like(u_n)
    states = tangents = None
    for it in range(max_iter + 1):
        states, tangents = disc.update_states(committed, du)
        r, f_ext = disc.residual(states, u_n + du, load)
        record.residuals.append(float(_norm(disc, r, f_ext, force_rows_only)))
        record.rho.append(float(np.max(np.abs(r))))
        if not np.isfinite(record.residuals[-1]):
            record.message = "non-finite residual"
            break
        if record.residuals[-1] <= tol:
            record.converged = True
            break
        if it == max_iter:
            record.message = f"not converged in {max_iter} iterations"
            break
        K = disc.tangent(tangents).K
        du = du + newton_step(K, r)
    record.n_plastic = int(sum(np.count_nonzero(tangents[k].plastic)
                               for k in disc.formulation_sets))
    return u_n + du, states


def run_load_program(disc: Discretization, program: LoadProgram, tol: float = E_TOL,
                     max_iter: int = NRI_MAX, force_rows_only: bool = False,
                     on_commit: Optional[Callable] = None) -> SolveResult:
    """Apply the load program; stop at the first failed increment.

    ``on_commit(step, load, u, states)`` is called after every accepted step.
    """
    u = np.zeros(2 * disc.n_nodes)
    committed = disc.initial_states()
    report = SolveReport()
    for n, load in program.steps():
        rec = StepRecord(n, load)
        report.steps.append(rec)
        try:
            u_new, states = solve_increment(disc, u, committed, load, rec, tol, max_iter,
                                            force_rows_only)
        except (LinearSolveError, MaterialNonconvergenceError) as exc:
            rec.message = str(exc)
            log.warning("step %d failed: %s", n, exc)
            break
        if not rec.converged:
            log.warning("step %d (load %g) failed: %s", n, load, rec.message)
            break
        u, committed = u_new, states
        log.info("step %d load %g: %d iterations, %d plastic points", n, load,
                 rec.iterations, rec.n_plastic)
        if on_commit is not None:
            on_commit(n, load, u, committed)
    return SolveResult(u, committed, report)


def solve_linear(disc: Discretization, load: float = 1.0) -> SolveResult:
    """One Newton step from the unloaded state (the linear discrete solution)."""
    committed = disc.initial_states()
    u0 = np.zeros(2 * disc.n_nodes)
    states, tangents = disc.update_states(committed, u0)
    r, _ = disc.residual(states, u0, load)
    u = newton_step(disc.tangent(tangents).K, r)
    states, _ = disc.update_states(committed, u)
    rec = StepRecord(1, load)
    r, f_ext = disc.residual(states, u, load)
    rec.residuals.append(float(_norm(disc, r, f_ext, False)))
    rec.converged = True
    return SolveResult(u, states, SolveReport([rec]))
