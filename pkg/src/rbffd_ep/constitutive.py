"""Small-strain von Mises plasticity with isotropic hardening.

Voigt-4 ordering is ``(11, 22, 33, 12)``. Strains carry the engineering
shear ``gamma_12 = 2 eps_12``; stresses carry ``sigma_12``. All functions
accept a single point (trailing shape ``(4,)``) or a batch ``(..., 4)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

VOIGT_ONE = np.array([1.0, 1.0, 1.0, 0.0])
# deviatoric projector mapping engineering strain to stress-like components
I_DEV = np.diag([1.0, 1.0, 1.0, 0.5]) - np.outer(VOIGT_ONE, VOIGT_ONE) / 3.0

NEWTON_MAX_ITER = 50
NEWTON_RTOL = 1e-12


class InvalidMaterialError(ValueError):
    pass


class MaterialNonconvergenceError(RuntimeError):
    def __init__(self, point: int, residual: float):
        super().__init__(f"return map did not converge at point {point} (residual {residual:.3g})")
        self.point = point


class DegenerateFlowError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Hardening:
    """Yield stress as a function of accumulated plastic strain.

    ``kind`` is ``"constant"`` (``H = 0``), ``"linear"`` (slope ``modulus``)
    or ``"piecewise"`` (``points`` as ``(epbar, sigma_y)`` rows starting at
    ``epbar = 0``, extended linearly past the last point).
    """

    kind: str = "constant"
    modulus: float = 0.0
    points: tuple = ()

    def __post_init__(self):
        if self.kind not in ("constant", "linear", "piecewise"):
            raise InvalidMaterialError(f"unknown hardening kind {self.kind!r}")
        if self.kind == "linear" and self.modulus < 0:
            raise InvalidMaterialError("softening (H < 0) is not supported")
        if self.kind == "piecewise":
            pts = np.asarray(self.points, dtype=float)
            if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
                raise InvalidMaterialError("piecewise hardening needs >= 2 (epbar, sigma_y) rows")
            if pts[0, 0] != 0 or np.any(np.diff(pts[:, 0]) <= 0):
                raise InvalidMaterialError("piecewise epbar must start at 0 and increase")
            if np.any(np.diff(pts[:, 1]) < 0):
                raise InvalidMaterialError("piecewise yield stress must be nondecreasing")

    def _table(self):
        pts = np.asarray(self.points, dtype=float)
        return pts[:, 0], pts[:, 1], np.diff(pts[:, 1]) / np.diff(pts[:, 0])

    def increase(self, ep):
        """``sigma_y(ep) - sigma_y(0)``."""
        ep = np.asarray(ep, dtype=float)
        if self.kind == "constant":
            return np.zeros_like(ep)
        if self.kind == "linear":
            return self.modulus * ep
        x, y, s = self._table()
        seg = np.clip(np.searchsorted(x, ep, side="right") - 1, 0, len(s) - 1)
        return y[seg] - y[0] + s[seg] * (ep - x[seg])

    def slope(self, ep):
        ep = np.asarray(ep, dtype=float)
        if self.kind == "constant":
            return np.zeros_like(ep)
        if self.kind == "linear":
            return np.full_like(ep, self.modulus)
        x, _, s = self._table()
        seg = np.clip(np.searchsorted(x, ep, side="right") - 1, 0, len(s) - 1)
        return s[seg]


@dataclass(frozen=True)
class MaterialModel:
    """Isotropic material; ``sigma_y0 = inf`` means purely elastic."""

    E: float
    nu: float
    sigma_y0: float = np.inf
    hardening: Hardening = field(default_factory=Hardening)
    plane: str = "plane_strain"

    def __post_init__(self):
        if not self.E > 0:
            raise InvalidMaterialError("E must be positive")
        if self.nu >= 0.5:
            raise InvalidMaterialError("nu = 0.5 is the incompressible limit; not supported")
        if not self.nu > -1:
            raise InvalidMaterialError("nu must exceed -1")
        if not self.sigma_y0 > 0:
            raise InvalidMaterialError("sigma_y0 must be positive")
        if self.plane not in ("plane_strain", "plane_stress"):
            raise InvalidMaterialError(f"unknown plane mode {self.plane!r}")
        if self.plane == "plane_stress" and self.plastic:
            raise InvalidMaterialError("plane-stress plasticity is not supported")

    @property
    def plastic(self) -> bool:
        return bool(np.isfinite(self.sigma_y0))

    @property
    def mu(self) -> float:
        return self.E / (2.0 * (1.0 + self.nu))

    G = mu

    @property
    def lam(self) -> float:
        return self.nu * self.E / ((1.0 + self.nu) * (1.0 - 2.0 * self.nu))

    @property
    def bulk(self) -> float:
        return self.lam + 2.0 * self.mu / 3.0

    def sigma_y(self, ep):
        return self.sigma_y0 + self.hardening.increase(ep)

    def hardening_modulus(self, ep):
        return self.hardening.slope(ep)


@dataclass(frozen=True)
class MaterialState:
    """State at one or many material points (arrays of shape (..., 4) and (...))."""

    stress: np.ndarray
    strain: np.ndarray
    elastic_strain: np.ndarray
    plastic_strain: np.ndarray
    epbar: np.ndarray

    @classmethod
    def zeros(cls, shape=()) -> "MaterialState":
        if isinstance(shape, int):
            shape = (shape,)
        z = np.zeros(tuple(shape) + (4,))
        return cls(z, z.copy(), z.copy(), z.copy(), np.zeros(shape))

    def __len__(self):
        return len(self.epbar)

    def take(self, idx) -> "MaterialState":
        return MaterialState(self.stress[idx], self.strain[idx], self.elastic_strain[idx],
                             self.plastic_strain[idx], self.epbar[idx])


@dataclass(frozen=True)
class TangentOperator:
    D: np.ndarray
    plastic: np.ndarray
    dgamma: np.ndarray


def elastic_tensor(model: MaterialModel) -> np.ndarray:
    """Voigt-4 elastic matrix (plane strain, or plane stress for elastic runs)."""
    if model.plane == "plane_stress":
        c = model.E / (1.0 - model.nu**2)
        return np.array([
            [c, c * model.nu, 0.0, 0.0],
            [c * model.nu, c, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, model.mu],
        ])
    mu, lam = model.mu, model.lam
    D = np.full((4, 4), 0.0)
    D[:3, :3] = lam
    D[[0, 1, 2], [0, 1, 2]] = 2.0 * mu + lam
    D[3, 3] = mu
    return D


def deviator(stress):
    stress = np.asarray(stress, dtype=float)
    p = stress[..., :3].sum(axis=-1) / 3.0
    return stress - p[..., None] * VOIGT_ONE


def j2(s):
    s = np.asarray(s, dtype=float)
    return 0.5 * np.sum(s[..., :3] ** 2, axis=-1) + s[..., 3] ** 2


def von_mises(stress):
    return np.sqrt(3.0 * j2(deviator(stress)))


def yield_function(stress, epbar, model: MaterialModel):
    return von_mises(stress) - model.sigma_y(epbar)


def consistent_tangent(s_trial, dgamma, model: MaterialModel, epbar=0.0) -> np.ndarray:
    """Algorithmic tangent for the radial return (batched).

    ``epbar`` is the updated accumulated plastic strain at which the
    hardening modulus is evaluated.
    """
    s_trial = np.asarray(s_trial, dtype=float)
    dgamma = np.asarray(dgamma, dtype=float)
    if np.any(dgamma < 0):
        raise ValueError("plastic multiplier must be nonnegative")
    De = elastic_tensor(model)
    D = np.broadcast_to(De, dgamma.shape + (4, 4)).copy()
    act = dgamma > 0
    if not np.any(act):
        return D
    s = np.broadcast_to(s_trial, dgamma.shape + (4,))[act]
    q = np.sqrt(3.0 * j2(s))
    if np.any(q == 0):
        raise DegenerateFlowError("zero trial deviator with positive plastic multiplier")
    H = model.hardening_modulus(np.broadcast_to(np.asarray(epbar, dtype=float), dgamma.shape)[act])
    D[act] = _plastic_tangent(s, q, dgamma[act], H, model)
    return D


def _radial_return(s_tr, q_tr, ep_n, model: MaterialModel, ids):
    """Scalar Newton for the plastic multiplier, vectorised over points."""
    G = model.G
    dg = np.zeros_like(q_tr)
    # relative to the trial stress so round-off in q_tr cannot stall the iteration
    tol = NEWTON_RTOL * np.maximum(model.sigma_y0, q_tr)
    active = np.ones(q_tr.shape, dtype=bool)
    for _ in range(NEWTON_MAX_ITER):
        f = q_tr - 3.0 * G * dg - model.sigma_y(ep_n + dg)
        active = np.abs(f) > tol
        if not np.any(active):
            break
        H = model.hardening_modulus(ep_n + dg)
        dg = np.where(active, dg + f / (3.0 * G + H), dg)
    else:
        f = q_tr - 3.0 * G * dg - model.sigma_y(ep_n + dg)
        bad = np.flatnonzero(np.abs(f) > tol)
        if len(bad):
            raise MaterialNonconvergenceError(int(ids[bad[0]]), float(f[bad[0]]))
    if np.any(dg < 0):
        raise RuntimeError("negative plastic multiplier")
    return dg


def return_map(state: MaterialState, dstrain, model: MaterialModel, ids=None):
    """Elastic predictor / plastic corrector from a committed state.

    Returns the updated state and the consistent tangent. ``ids`` labels the
    points in nonconvergence errors.
    """
    dstrain = np.asarray(dstrain, dtype=float)
    De = elastic_tensor(model)
    strain = state.strain + dstrain
    stress = state.stress + dstrain @ De.T
    shape = state.epbar.shape
    dgamma = np.zeros(shape)
    plastic_strain = np.array(state.plastic_strain, dtype=float, copy=True)
    epbar = np.array(state.epbar, dtype=float, copy=True)
    D = np.broadcast_to(De, shape + (4, 4)).copy()
    if model.plastic:
        s_tr = deviator(stress)
        q_tr = np.sqrt(3.0 * j2(s_tr))
        phi = q_tr - model.sigma_y(state.epbar)
        yielding = phi > 0
        if np.any(yielding):
            if ids is None:
                ids = np.arange(int(np.prod(shape))).reshape(shape)
            ids = np.broadcast_to(np.asarray(ids), shape)
            s = s_tr[yielding]
            q = q_tr[yielding]
            ep_n = state.epbar[yielding]
            dg = _radial_return(s, q, ep_n, model, ids[yielding])
            G = model.G
            factor = 1.0 - 3.0 * G * dg / q
            p = stress[yielding][..., :3].sum(axis=-1) / 3.0
            stress[yielding] = factor[:, None] * s + p[:, None] * VOIGT_ONE
            flow = 1.5 * dg[:, None] / q[:, None] * s
            flow[:, 3] *= 2.0  # engineering shear
            plastic_strain[yielding] = plastic_strain[yielding] + flow
            epbar[yielding] = ep_n + dg
            dgamma[yielding] = dg
            D[yielding] = _plastic_tangent(s, q, dg, model.hardening_modulus(ep_n + dg), model)
    new = MaterialState(stress, strain, strain - plastic_strain, plastic_strain, epbar)
    return new, TangentOperator(D, dgamma > 0, dgamma)


def _plastic_tangent(s, q, dg, H, model: MaterialModel):
    G = model.G
    De = elastic_tensor(model)
    norm = np.sqrt(np.sum(s[:, :3] ** 2, axis=-1) + 2.0 * s[:, 3] ** 2)
    n = s / norm[:, None]
    a = 6.0 * G**2 * dg / q
    b = 6.0 * G**2 * (dg / q - 1.0 / (3.0 * G + H))
    return De - a[:, None, None] * I_DEV + b[:, None, None] * n[:, :, None] * n[:, None, :]
