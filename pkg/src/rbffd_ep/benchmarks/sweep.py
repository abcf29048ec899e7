"""Cartesian parameter sweeps over benchmark cases."""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..assembly import ApproachConfig, Discretization
from ..solver import run_load_program, solve_linear
from .cases import BenchmarkCase
from .metrics import DENSE_LIMIT, aid_metric, condition_number, e2_norm, fit_slope

log = logging.getLogger(__name__)

CELL_KEYS = ("approach", "h", "p", "alpha_d", "alpha_s")


@dataclass(frozen=True)
class SweepSpec:
    case: BenchmarkCase
    h: tuple = (0.066, 0.033, 0.0165)
    p: tuple = (2,)
    approach: tuple = ("composed",)
    alpha_d: tuple = (0.5,)
    alpha_s: tuple = (0.0,)
    m: int = 3
    p_fd: int = 2
    seed: int = 0
    kappa: bool = False
    dense_limit: int = DENSE_LIMIT

    def __post_init__(self):
        for name in CELL_KEYS:
            if len(getattr(self, name)) == 0:
                raise ValueError(f"sweep grid {name} is empty")

    def cells(self) -> list[dict]:
        grid = [getattr(self, k) for k in CELL_KEYS]
        return [dict(zip(CELL_KEYS, vals)) for vals in itertools.product(*grid)]


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)
    slopes: list = field(default_factory=list)

    def to_csv(self, metric: str) -> str:
        cols = list(CELL_KEYS) + ["n_nodes", metric, "error"]
        lines = [",".join(cols)]
        for r in self.rows:
            lines.append(",".join(_fmt(r.get(c, "")) for c in cols))
        return "\n".join(lines) + "\n"

    def slopes_csv(self) -> str:
        cols = [k for k in CELL_KEYS if k != "h"] + ["slope"]
        lines = [",".join(cols)]
        for s in self.slopes:
            lines.append(",".join(_fmt(s[c]) for c in cols))
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v).replace(",", ";")


def run_cell(spec: SweepSpec, cell: dict, cloud) -> dict:
    row = dict(cell, n_nodes=len(cloud), error="")
    try:
        cfg = ApproachConfig(cell["approach"], p=cell["p"], m=spec.m, alpha_d=cell["alpha_d"],
                             p_fd=spec.p_fd, alpha_s=cell["alpha_s"])
        disc = Discretization(spec.case.problem(cloud), cfg)
        if spec.case.model.plastic:
            res = run_load_program(disc, spec.case.program)
            its = [s.iterations for s in res.report.steps]
            row["iterations"] = float(np.sum(its))
            row["converged"] = int(res.report.converged)
            load = res.report.steps[-1].load
        else:
            res = solve_linear(disc, 1.0)
            load = 1.0
        u = res.u.reshape(-1, 2)
        ue = spec.case.exact_displacement(cloud.points, load)
        if ue is not None:
            row["e2"] = e2_norm(u, ue)
        row["e_int"] = aid_metric(u, cloud.points, disc.supports, cfg.basis, cfg.m,
                                  cloud.inner_index)
        if spec.kappa:
            K = disc.tangent(disc.update_states(disc.initial_states(), np.zeros(u.size))[1]).K
            row["kappa"] = condition_number(K, spec.dense_limit)
    except Exception as exc:  # a failed cell must not stop the sweep
        log.warning("sweep cell %s failed: %s", cell, exc)
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Run every cell; one node cloud per ``h`` is shared across cells."""
    clouds = {h: spec.case.cloud(h, spec.seed) for h in spec.h}
    cells = spec.cells()
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            rows = list(ex.map(lambda c: run_cell(spec, c, clouds[c["h"]]), cells))
    else:
        rows = [run_cell(spec, c, clouds[c["h"]]) for c in cells]
    result = SweepResult(rows)
    if len(spec.h) > 1:
        others = [k for k in CELL_KEYS if k != "h"]
        groups: dict = {}
        for r in rows:
            groups.setdefault(tuple(r[k] for k in others), []).append(r)
        for key, grp in groups.items():
            hs = [r["h"] for r in grp]
            es = [r.get("e2", float("nan")) for r in grp]
            result.slopes.append(dict(zip(others, key), slope=fit_slope(hs, es)))
    return result
