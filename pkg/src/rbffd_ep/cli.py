"""Command-line runs: configuration parsing, solves, sweeps and artifact output.

Configuration files are flat ``key = value`` lines; ``#`` starts a comment
and lists are comma separated. Example::

    case = annulus_plastic
    approach = hybrid
    h = 0.025
    alpha_s = 0.5
    load = 8, 10.5, 0.1
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import math
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from threadpoolctl import threadpool_limits

from .approximation import InvalidConfigurationError
from .assembly import (ALPHA_D_MODES, APPROACHES, ApproachConfig, ConfigurationWarning,
                       Discretization)
from .benchmarks.cases import CASE_IDS, BenchmarkCase, build_case
from .benchmarks.metrics import e2_norm
from .benchmarks.sweep import SweepSpec, run_sweep
from .checks import run_checks
from .constitutive import InvalidMaterialError
from .geometry import spacing_from_density
from .solver import E_TOL, NRI_MAX, LoadProgram, run_load_program, solve_linear

log = logging.getLogger(__name__)

REQUIRED_KEYS = ("case", "approach", "h or rho")
PLASTIC_CASES = ("annulus_plastic", "plate_hole_plastic")
PLANE_STRESS_CASES = ("timoshenko", "plate_hole")
# keys that take a comma-separated grid in sweeps
GRID_KEYS = ("approach", "h", "p", "alpha_d", "alpha_s")
FIELD_HEADER = "# x y u1 u2 s11 s22 s33 s12 epbar"


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


@dataclass(frozen=True)
class RunConfig:
    """Validated run description; grid keys hold tuples."""

    case: str
    approach: tuple
    h: Optional[tuple] = None
    rho: Optional[tuple] = None
    p: tuple = (2,)
    m: int = 3
    p_fd: int = 2
    alpha_d: tuple = (0.5,)
    alpha_d_mode: str = "clamp"
    alpha_s: tuple = (0.0,)
    seed: int = 0
    load: Optional[tuple] = None
    e_tol: float = E_TOL
    nri_max: int = NRI_MAX
    residual_rows: str = "all"
    plane: Optional[str] = None
    E: float = 1.0
    nu: float = 0.3
    sigma_y0: Optional[float] = None
    H: Optional[float] = None
    kappa: bool = False
    workers: int = 1
    output: str = "out"

    @property
    def plastic(self) -> bool:
        return self.case in PLASTIC_CASES

    @property
    def spacings(self) -> tuple:
        if self.h is not None:
            return self.h
        return tuple(spacing_from_density(r) for r in self.rho)

    def benchmark(self) -> BenchmarkCase:
        kwargs = {"E": self.E, "nu": self.nu}
        if self.plastic:
            kwargs.update(sigma_y0=self.sigma_y0, H=self.H, program=LoadProgram(*self.load))
        return build_case(self.case, **kwargs)

    def approach_config(self, approach=None, p=None, alpha_d=None, alpha_s=None) -> ApproachConfig:
        return ApproachConfig(approach or self.approach[0], p=self.p[0] if p is None else p,
                              m=self.m, p_fd=self.p_fd,
                              alpha_d=self.alpha_d[0] if alpha_d is None else alpha_d,
                              alpha_s=self.alpha_s[0] if alpha_s is None else alpha_s,
                              alpha_d_mode=self.alpha_d_mode)


def _case_defaults(case: str) -> dict:
    if case == "annulus_plastic":
        return {"load": (8.0, 10.5, 0.1), "sigma_y0": 20.0, "H": 0.0, "plane": "plane_strain"}
    if case == "plate_hole_plastic":
        return {"load": (0.0, 0.1, 0.01), "sigma_y0": 0.1, "H": 0.25, "plane": "plane_strain"}
    plane = "plane_stress" if case in PLANE_STRESS_CASES else "plane_strain"
    return {"load": None, "sigma_y0": None, "H": None, "plane": plane}


def _to_float(key, text):
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(key, f"expected a number, got {text!r}") from None
    if not math.isfinite(v):
        raise ConfigError(key, "must be finite")
    return v


def _to_int(key, text):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(key, f"expected an integer, got {text!r}") from None


def _to_bool(key, text):
    low = text.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ConfigError(key, f"expected true or false, got {text!r}")


def _choice(choices):
    def conv(key, text):
        if text not in choices:
            raise ConfigError(key, f"must be one of {', '.join(choices)}; got {text!r}")
        return text
    return conv


def _to_str(key, text):
    return text


# key -> (converter, is list)
_SCHEMA = {
    "case": (_choice(CASE_IDS), False),
    "approach": (_choice(APPROACHES), True),
    "h": (_to_float, True),
    "rho": (_to_float, True),
    "p": (_to_int, True),
    "m": (_to_int, False),
    "p_fd": (_to_int, False),
    "alpha_d": (_to_float, True),
    "alpha_d_mode": (_choice(ALPHA_D_MODES), False),
    "alpha_s": (_to_float, True),
    "seed": (_to_int, False),
    "load": (_to_float, True),
    "e_tol": (_to_float, False),
    "nri_max": (_to_int, False),
    "residual_rows": (_choice(("all", "force")), False),
    "plane": (_choice(("plane_strain", "plane_stress")), False),
    "E": (_to_float, False),
    "nu": (_to_float, False),
    "sigma_y0": (_to_float, False),
    "H": (_to_float, False),
    "kappa": (_to_bool, False),
    "workers": (_to_int, False),
    "output": (_to_str, False),
}


def _read_pairs(text: str) -> dict:
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _SCHEMA:
            raise ConfigError(key, f"unknown key; valid keys are {', '.join(_SCHEMA)}")
        if key in pairs:
            raise ConfigError(key, "given more than once")
        if not value:
            raise ConfigError(key, "empty value")
        conv, is_list = _SCHEMA[key]
        if is_list:
            items = [s.strip() for s in value.split(",")]
            if any(not s for s in items):
                raise ConfigError(key, "empty list entry")
            pairs[key] = tuple(conv(key, s) for s in items)
        else:
            pairs[key] = conv(key, value)
    return pairs


def _positive(pairs, key):
    vals = pairs[key] if isinstance(pairs[key], tuple) else (pairs[key],)
    if not all(v > 0 for v in vals):
        raise ConfigError(key, "must be positive")


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration document.

    Raises
    ------
    ConfigError
        Unknown key, malformed or out-of-range value, or an inconsistent
        combination. The message starts with the offending key.
    """
    pairs = _read_pairs(text)
    missing = [k for k in ("case", "approach") if k not in pairs]
    if "h" not in pairs and "rho" not in pairs:
        missing.append("h or rho")
    if missing:
        raise ConfigError(missing[0], f"missing required key(s): {', '.join(missing)} "
                          f"(required: {', '.join(REQUIRED_KEYS)})")
    if "h" in pairs and "rho" in pairs:
        raise ConfigError("rho", "give either h or rho, not both")

    case = pairs["case"]
    defaults = _case_defaults(case)
    plastic = case in PLASTIC_CASES
    for key in ("h", "rho", "E", "e_tol", "nri_max", "workers"):
        if key in pairs:
            _positive(pairs, key)
    if "sigma_y0" in pairs:
        if not plastic:
            raise ConfigError("sigma_y0", f"case {case} is elastic; plastic cases are "
                              f"{', '.join(PLASTIC_CASES)}")
        _positive(pairs, "sigma_y0")
    if "H" in pairs:
        if not plastic:
            raise ConfigError("H", f"case {case} is elastic")
        if pairs["H"] < 0:
            raise ConfigError("H", "softening (H < 0) is not supported")
    if "load" in pairs:
        if not plastic:
            raise ConfigError("load", f"case {case} is solved at unit load")
        if len(pairs["load"]) != 3:
            raise ConfigError("load", "expected p_min, p_max, dp")
        p_min, p_max, dp = pairs["load"]
        if not dp > 0:
            raise ConfigError("load", "dp must be positive")
        if p_max < p_min:
            raise ConfigError("load", "p_max must not be below p_min")
    if "plane" in pairs and pairs["plane"] != defaults["plane"]:
        if plastic:
            raise ConfigError("plane", "plane_stress is inconsistent with an elasto-plastic case")
        raise ConfigError("plane", f"the reference solution of case {case} is {defaults['plane']}")
    if "nu" in pairs and not -1 < pairs["nu"] < 0.5:
        raise ConfigError("nu", "must lie in (-1, 0.5)")
    if "seed" in pairs and pairs["seed"] < 0:
        raise ConfigError("seed", "must be nonnegative")

    values = {k: defaults[k] for k in ("load", "sigma_y0", "H", "plane")}
    values.update(pairs)
    cfg = RunConfig(**values)
    return _validate_approaches(cfg)


def _validate_approaches(cfg: RunConfig) -> RunConfig:
    """Build every ApproachConfig once so range errors and clamps surface early."""
    clamped = []
    for a in cfg.alpha_d:
        for approach in cfg.approach:
            for p in cfg.p:
                for s in cfg.alpha_s:
                    try:
                        with warnings.catch_warnings():
                            warnings.simplefilter("ignore")
                            ac = cfg.approach_config(approach, p, a, s)
                    except InvalidConfigurationError as exc:
                        raise ConfigError(_guess_key(str(exc)), str(exc)) from None
        clamped.append(ac.alpha_d)
    if tuple(clamped) != cfg.alpha_d:
        # one warning per run, attributed to the configuration
        for a, c in zip(cfg.alpha_d, clamped):
            if a != c:
                warnings.warn(f"alpha_d={a} exceeds {c} for p_fd={cfg.p_fd}; clamped to {c}",
                              ConfigurationWarning, stacklevel=3)
        cfg = dataclasses.replace(cfg, alpha_d=tuple(clamped))
    try:
        cfg.benchmark()
    except InvalidMaterialError as exc:
        raise ConfigError(_guess_key(str(exc)), str(exc)) from None
    return cfg


def _guess_key(message: str) -> str:
    for key in sorted(_SCHEMA, key=len, reverse=True):
        if message.startswith(key) or f" {key} " in f" {message} ":
            return key
    return "config"


def _fmt_value(v) -> str:
    if isinstance(v, tuple):
        return ", ".join(_fmt_value(x) for x in v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_config(cfg: RunConfig) -> str:
    """Effective configuration as a parseable document (defaults included)."""
    lines = []
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if v is None:
            continue
        if not cfg.plastic and f.name in ("load", "sigma_y0", "H"):
            continue
        lines.append(f"{f.name} = {_fmt_value(v)}")
    return "\n".join(lines) + "\n"


# -- artifacts ---------------------------------------------------------------


def field_dump(points, u, states) -> str:
    """Point-cloud text with one ``x y u1 u2 s11 s22 s33 s12 epbar`` row per node."""
    u = np.asarray(u).reshape(-1, 2)
    rows = np.column_stack([points, u, states.stress, states.epbar])
    body = "\n".join(" ".join(f"{v:.17g}" for v in row) for row in rows)
    return FIELD_HEADER + "\n" + body + "\n"


def _write(path: Path, text: str):
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _single(cfg: RunConfig):
    for key in GRID_KEYS:
        vals = getattr(cfg, key)
        if vals is not None and len(vals) != 1:
            raise ConfigError(key, "solve takes a single value; lists are for sweeps")
    if cfg.rho is not None and len(cfg.rho) != 1:
        raise ConfigError("rho", "solve takes a single value; lists are for sweeps")


def run_solve(cfg: RunConfig, out: Path) -> int:
    _single(cfg)
    case = cfg.benchmark()
    h = cfg.spacings[0]
    cloud = case.cloud(h, cfg.seed)
    _write(out / "nodes.txt", cloud.to_text())
    disc = Discretization(case.problem(cloud), cfg.approach_config())

    def commit(step, load, u, states):
        _write(out / f"field_{step:04d}.txt", field_dump(cloud.points, u, states["nodes"]))

    if case.model.plastic:
        res = run_load_program(disc, case.program, tol=cfg.e_tol, max_iter=cfg.nri_max,
                               force_rows_only=cfg.residual_rows == "force", on_commit=commit)
    else:
        res = solve_linear(disc, 1.0)
        commit(1, 1.0, res.u, res.states)
    text = res.report.to_text()
    exact = case.exact_displacement(cloud.points, 1.0)
    if exact is not None:
        text += f"e2 {e2_norm(res.u, exact):.10g}\n"
    _write(out / "report.csv", res.report.to_csv())
    _write(out / "report.txt", text)
    print(text, end="")
    return 0 if res.report.converged else 1


def run_sweep_verb(cfg: RunConfig, out: Path) -> int:
    case = cfg.benchmark()
    spec = SweepSpec(case, h=cfg.spacings, p=cfg.p, approach=cfg.approach, alpha_d=cfg.alpha_d,
                     alpha_s=cfg.alpha_s, m=cfg.m, p_fd=cfg.p_fd, seed=cfg.seed, kappa=cfg.kappa)
    result = run_sweep(spec, workers=cfg.workers)
    metrics = ["e_int"]
    if case.exact_displacement(np.ones((1, 2)) * 1.5) is not None:
        metrics.insert(0, "e2")
    if cfg.kappa:
        metrics.append("kappa")
    if case.model.plastic:
        metrics += ["iterations", "converged"]
    for metric in metrics:
        _write(out / f"{metric}.csv", result.to_csv(metric))
    if result.slopes:
        _write(out / "slopes.csv", result.slopes_csv())
    failed = [r for r in result.rows if r["error"]]
    for r in failed:
        print(f"cell failed: {r['error']}", file=sys.stderr)
    return 1 if failed else 0


def run_gen_nodes(cfg: RunConfig, out: Path) -> int:
    _single(cfg)
    cloud = cfg.benchmark().cloud(cfg.spacings[0], cfg.seed)
    _write(out / "nodes.txt", cloud.to_text())
    print(f"{len(cloud)} nodes ({cloud.n_boundary} boundary)")
    return 0


def run_check(seed: int, out: Optional[Path]) -> int:
    results = run_checks(seed)
    text = "\n".join(r.line() for r in results) + "\n"
    print(text, end="")
    if out is not None:
        _write(out / "check.txt", text)
    return 0 if all(r.passed for r in results) else 1


def run(verb: str, cfg: Optional[RunConfig], out: Optional[Path] = None) -> int:
    """Execute ``verb``; returns the process exit status."""
    if out is None:
        out = Path(cfg.output)
    else:
        cfg = dataclasses.replace(cfg, output=str(out))
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror or exc}") from exc
    _write(out / "config.txt", format_config(cfg))
    if verb == "solve":
        return run_solve(cfg, out)
    if verb == "sweep":
        return run_sweep_verb(cfg, out)
    if verb == "gen-nodes":
        return run_gen_nodes(cfg, out)
    raise ValueError(f"unknown verb {verb!r}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rbffd-ep", description=__doc__.split("\n")[0])
    ap.add_argument("verb", choices=("solve", "sweep", "gen-nodes", "check"))
    ap.add_argument("--config", type=Path, help="key = value configuration file")
    ap.add_argument("--out", type=Path, help="output directory (overrides 'output')")
    ap.add_argument("--seed", type=int, help="node generation seed (overrides 'seed')")
    ap.add_argument("--threads", type=int, help="limit BLAS/LAPACK threads")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = None
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            print(f"error: cannot read {args.config}: {exc.strerror or exc}", file=sys.stderr)
            return 2
        try:
            cfg = parse_config(text)
        except ConfigError as exc:
            print(f"error: {args.config}: {exc}", file=sys.stderr)
            return 2
    elif args.verb != "check":
        print("error: --config is required for this verb", file=sys.stderr)
        return 2
    if cfg is not None and args.seed is not None:
        if args.seed < 0:
            print("error: --seed must be nonnegative", file=sys.stderr)
            return 2
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return 2
    with threadpool_limits(limits=args.threads):
        try:
            if args.verb == "check":
                seed = args.seed if args.seed is not None else (cfg.seed if cfg else 0)
                if args.out is not None:
                    args.out.mkdir(parents=True, exist_ok=True)
                return run_check(seed, args.out)
            return run(args.verb, cfg, args.out)
        except (ConfigError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2


if __name__ == "__main__":
    sys.exit(main())
