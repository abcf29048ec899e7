"""Self-checks of the numerical building blocks (the ``check`` CLI verb)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .approximation import BASIC, AugmentationBasis, basic_weights, build_supports
from .benchmarks.analytic import (AnnulusParams, PlateParams, annulus_exact, plate_hole_exact,
                                  plate_hole_stress, timoshenko_exact, BeamParams)
from .constitutive import (Hardening, MaterialModel, MaterialState, elastic_tensor, return_map,
                           yield_function)
from .geometry import generate_nodes, rectangle, density_from_spacing

FD_STEPS = (1e-6, 1e-7, 1e-8)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    limit: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.value:.3e} (limit {self.limit:.1e})"


def polynomial_reproduction_error(p: int, m: int = 3, h: float = 0.1, seed: int = 0,
                                  n_eval: int = 50) -> float:
    """Worst relative error of derivative weights on monomials of degree <= p."""
    rng = np.random.default_rng(seed)
    cloud = generate_nodes(rectangle(1.0, 1.0, density_from_spacing(h)), seed)
    pts = cloud.points
    basis = AugmentationBasis(p)
    sup = build_supports(pts, 2 * basis.size + 1)
    owners = rng.choice(np.flatnonzero(cloud.kind == 2), n_eval)
    ev = pts[owners] + rng.uniform(-0.5, 0.5, (n_eval, 2)) * cloud.spacing[owners, None]
    w = basic_weights(pts, sup, owners, ev[:, None], basis, m)[:, 0]  # (E, 6, n)
    worst = 0.0
    for a, b in basis.exponents:
        vals = pts[:, 0] ** a * pts[:, 1] ** b
        approx = np.einsum("ekn,en->ek", w, vals[sup.indices[owners]])
        exact = np.stack([_monomial_derivative(ev, a, b, d) for d in BASIC], axis=1)
        scale = max(np.max(np.abs(exact)), 1.0)
        worst = max(worst, float(np.max(np.abs(approx - exact)) / scale))
    return worst


def _monomial_derivative(x, a, b, d):
    da, db = d
    if da > a or db > b:
        return np.zeros(len(x))
    ca = np.prod(np.arange(a - da + 1, a + 1)) if da else 1
    cb = np.prod(np.arange(b - db + 1, b + 1)) if db else 1
    return ca * cb * x[:, 0] ** (a - da) * x[:, 1] ** (b - db)


def cto_fd_error(state: MaterialState, dstrain, model: MaterialModel,
                 steps=FD_STEPS) -> float:
    """Relative error of the consistent tangent against central differences.

    Returns the smallest error over the step sweep.
    """
    dstrain = np.asarray(dstrain, dtype=float)
    _, tan = return_map(state, dstrain, model)
    D = tan.D
    best = np.inf
    for delta in steps:
        D_fd = np.empty((4, 4))
        for j in range(4):
            e = np.zeros(4)
            e[j] = delta
            sp_, _ = return_map(state, dstrain + e, model)
            sm_, _ = return_map(state, dstrain - e, model)
            D_fd[:, j] = (sp_.stress - sm_.stress) / (2 * delta)
        best = min(best, float(np.linalg.norm(D_fd - D) / np.linalg.norm(D)))
    return best


def kuhn_tucker_violations(n: int = 10_000, seed: int = 0) -> dict:
    """Randomized return-map calls; returns the worst value of each condition."""
    rng = np.random.default_rng(seed)
    E, nu, sy = 200.0, 0.3, 1.0
    models = [MaterialModel(E, nu, sy), MaterialModel(E, nu, sy, Hardening("linear", 20.0))]
    worst = {"phi": 0.0, "dgamma_neg": 0.0, "complementarity": 0.0, "trace_dep": 0.0,
             "split": 0.0}
    per = n // len(models)
    for model in models:
        # admissible committed states with a plastic history
        state, _ = return_map(MaterialState.zeros(per), rng.normal(0, 1e-2, (per, 4)), model)
        de = rng.normal(0, 5e-3, (per, 4)) * rng.uniform(0, 1, (per, 1))
        new, tan = return_map(state, de, model)
        phi = yield_function(new.stress, new.epbar, model)
        dg = tan.dgamma
        dep = new.plastic_strain - state.plastic_strain
        worst["phi"] = max(worst["phi"], float(np.max(phi)) / model.sigma_y0)
        worst["dgamma_neg"] = max(worst["dgamma_neg"], float(np.max(-dg)))
        worst["complementarity"] = max(worst["complementarity"],
                                       float(np.max(np.abs(dg * phi))) / model.sigma_y0)
        worst["trace_dep"] = max(worst["trace_dep"], float(np.max(np.abs(dep[:, :3].sum(1)))))
        worst["split"] = max(worst["split"], float(np.max(np.abs(
            new.strain - new.elastic_strain - new.plastic_strain))))
    return worst


def _equilibrium_residual(u_fn, lam, mu, x, h=1e-4) -> float:
    """Max |div sigma| of a plane-strain displacement field by central differences."""
    def grad(f, x):
        ex, ey = np.array([h, 0.0]), np.array([0.0, h])
        return (f(x + ex) - f(x - ex)) / (2 * h), (f(x + ey) - f(x - ey)) / (2 * h)

    def stress(x):
        (u1x, u2x), (u1y, u2y) = [np.moveaxis(g, -1, 0) for g in grad(u_fn, x)]
        tr = u1x + u2y
        return np.stack([lam * tr + 2 * mu * u1x, lam * tr + 2 * mu * u2y,
                         mu * (u1y + u2x)], axis=-1)

    sx, sy = grad(stress, x)
    r1 = sx[:, 0] + sy[:, 2]
    r2 = sx[:, 2] + sy[:, 1]
    return float(np.max(np.hypot(r1, r2)))


def analytic_equilibrium_residuals(seed: int = 0) -> dict:
    """Equilibrium residual of each closed-form field at random interior points."""
    rng = np.random.default_rng(seed)
    out = {}
    bp = BeamParams()
    nu = bp.nu
    mu = bp.E / (2 * (1 + nu))
    lam_ps = 2 * mu * nu / (1 - nu)  # plane-stress effective lambda
    x = rng.uniform([0.1, 0.05], [1.9, 0.45], (50, 2))
    out["timoshenko"] = _equilibrium_residual(
        lambda p: np.stack(timoshenko_exact(p[..., 0], p[..., 1], bp), axis=-1), lam_ps, mu, x)
    pp = PlateParams()
    mu = pp.G
    lam_ps = 2 * mu * pp.nu / (1 - pp.nu)
    r = rng.uniform(0.6, 2.0, 50)
    t = rng.uniform(0.05, 1.5, 50)
    x = np.column_stack([r * np.cos(t), r * np.sin(t)])

    def plate_u(p):
        rr, tt = np.hypot(p[..., 0], p[..., 1]), np.arctan2(p[..., 1], p[..., 0])
        return np.stack(plate_hole_exact(rr, tt, pp), axis=-1)

    out["plate_hole"] = _equilibrium_residual(plate_u, lam_ps, mu, x)
    ap = AnnulusParams()
    r = rng.uniform(1.1, 1.9, 50)
    x = np.column_stack([r * np.cos(t), r * np.sin(t)])

    def ann_u(p):
        rr = np.hypot(p[..., 0], p[..., 1])
        return p / rr[..., None] * annulus_exact(rr, ap)[..., None]

    out["annulus"] = _equilibrium_residual(ann_u, ap.lam, ap.G, x)
    # traction-free hole edge of the plate
    th = rng.uniform(0, np.pi / 2, 20)
    pts = pp.R_i * np.column_stack([np.cos(th), np.sin(th)])
    s11, s22, s12 = plate_hole_stress(pts[:, 0], pts[:, 1], pp)
    n = -pts / pp.R_i
    out["plate_hole_traction"] = float(np.max(np.hypot(s11 * n[:, 0] + s12 * n[:, 1],
                                                       s12 * n[:, 0] + s22 * n[:, 1])))
    return out


def run_checks(seed: int = 0) -> list[CheckResult]:
    results = []
    for p in (2, 3, 4):
        err = polynomial_reproduction_error(p, seed=seed)
        results.append(CheckResult(f"polynomial reproduction p={p}", err <= 1e-9, err, 1e-9))
    rng = np.random.default_rng(seed)
    for label, model, scale in (
            ("elastic", MaterialModel(200.0, 0.3, 1.0), 1e-4),
            ("perfectly plastic", MaterialModel(200.0, 0.3, 1.0), 2e-2),
            ("hardening", MaterialModel(200.0, 0.3, 1.0, Hardening("linear", 20.0)), 2e-2)):
        de = rng.normal(0, scale, 4)
        err = cto_fd_error(MaterialState.zeros(), de, model)
        results.append(CheckResult(f"tangent vs finite differences ({label})", err <= 1e-5,
                                   err, 1e-5))
    kt = kuhn_tucker_violations(10_000, seed)
    limits = {"phi": 1e-9, "dgamma_neg": 0.0, "complementarity": 1e-9, "trace_dep": 1e-12,
              "split": 1e-12}
    for k, v in kt.items():
        results.append(CheckResult(f"return map {k}", v <= limits[k], v, limits[k]))
    for k, v in analytic_equilibrium_residuals(seed).items():
        results.append(CheckResult(f"analytic field {k}", v <= 1e-5, v, 1e-5))
    return results
