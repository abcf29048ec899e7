"""Error norms and diagnostics: e2, line errors, interface mismatch, conditioning."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from ..approximation import I0, AugmentationBasis, Supports, basic_weights

DENSE_LIMIT = 6000
LINE_SAMPLES = 200


class UndefinedNormError(ValueError):
    pass


@dataclass
class ErrorReport:
    e2: float = float("nan")
    line: np.ndarray = field(default_factory=lambda: np.zeros(0))
    e_int: float = float("nan")
    kappa: float = float("nan")
    slopes: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("e2", "e_int"):
            v = getattr(self, name)
            if np.isfinite(v) and v < 0:
                raise ValueError(f"{name} must be nonnegative")
        if np.isfinite(self.kappa) and self.kappa < 1:
            raise ValueError("condition number must be >= 1")


def e2_norm(u, u_exact) -> float:
    """Relative discrete L2 error over all points; both arrays are (N, 2)."""
    u = np.asarray(u, dtype=float).reshape(-1, 2)
    ue = np.asarray(u_exact, dtype=float).reshape(-1, 2)
    den = np.sum(ue**2)
    if den == 0:
        raise UndefinedNormError("exact field vanishes identically")
    return float(np.sqrt(np.sum((u - ue) ** 2) / den))


def line_error(values, reference) -> np.ndarray:
    """Pointwise ``|y - y_ref| / |y_ref|``; samples with ``y_ref == 0`` are NaN."""
    y = np.asarray(values, dtype=float)
    ref = np.asarray(reference, dtype=float)
    out = np.full(np.broadcast(y, ref).shape, np.nan)
    ok = ref != 0
    out[ok] = np.abs(y - ref)[ok] / np.abs(ref)[ok]
    return out


def mid_angle_line(r_inner: float, r_outer: float, angle: float, n: int = LINE_SAMPLES):
    """Equally spaced samples on the radial line at half of ``angle``."""
    r = np.linspace(r_inner, r_outer, n)
    phi = 0.5 * angle
    return r, np.column_stack([r * np.cos(phi), r * np.sin(phi)])


def local_interpolate(points, supports: Supports, basis: AugmentationBasis, m: int, values,
                      query, owners=None) -> np.ndarray:
    """Evaluate nodal ``values`` at ``query`` with local interpolants.

    Each query point uses the support of ``owners`` (default: its nearest
    node). ``values`` is (N,) or (N, k).
    """
    points = np.asarray(points, dtype=float)
    query = np.asarray(query, dtype=float).reshape(-1, 2)
    if owners is None:
        _, owners = cKDTree(points).query(query)
    owners = np.asarray(owners, dtype=int)
    w = basic_weights(points, supports, owners, query[:, None, :], basis, m, orders=1)[:, 0, I0]
    vals = np.asarray(values, dtype=float)
    gathered = vals[supports.indices[owners]]
    return np.einsum("qn,qn...->q...", w, gathered)


def splitting_pairs(points, inner) -> np.ndarray:
    """Neighbour ``n(l)`` for every inner node ``l`` with unique unordered pairs.

    When the nearest node already claimed ``l`` as its own partner, the
    next nearest is taken instead.
    """
    points = np.asarray(points, dtype=float)
    inner = np.asarray(inner, dtype=int)
    tree = cKDTree(points)
    claimed: set = set()
    partner = np.empty(len(inner), dtype=int)
    k = 8
    for i, l in enumerate(inner):
        while True:
            _, idx = tree.query(points[l], k=min(k, len(points)))
            cand = [int(j) for j in np.atleast_1d(idx) if j != l and (min(j, l), max(j, l)) not in claimed]
            if cand or k >= len(points):
                break
            k *= 2
        if not cand:
            raise ValueError(f"no free neighbour for node {l}")
        j = cand[0]
        claimed.add((min(j, l), max(j, l)))
        partner[i] = j
    return partner


def aid_metric(u, points, supports: Supports, basis: AugmentationBasis, m: int, inner) -> float:
    """Mismatch of neighbouring local interpolants at splitting points.

    ``u`` is (N, 2). For each inner node ``l`` with partner ``n(l)`` the
    splitting point is the midpoint; it is evaluated with both supports.
    """
    points = np.asarray(points, dtype=float)
    u = np.asarray(u, dtype=float).reshape(-1, 2)
    inner = np.asarray(inner, dtype=int)
    if len(inner) == 0:
        raise ValueError("no inner nodes")
    partner = splitting_pairs(points, inner)
    mid = 0.5 * (points[inner] + points[partner])
    u_l = local_interpolate(points, supports, basis, m, u, mid, owners=inner)
    u_n = local_interpolate(points, supports, basis, m, u, mid, owners=partner)
    den = np.sum(u_l**2)
    if den == 0:
        raise UndefinedNormError("interpolated field vanishes at all splitting points")
    return float(np.sqrt(np.sum((u_l - u_n) ** 2) / den))


def condition_number(K, dense_limit: int = DENSE_LIMIT) -> float:
    """``sigma_max / sigma_min`` from a dense SVD."""
    n = K.shape[0]
    if max(K.shape) > dense_limit:
        raise ValueError(f"matrix of size {n} exceeds the dense limit {dense_limit}")
    A = K.toarray() if sp.issparse(K) else np.asarray(K, dtype=float)
    s = np.linalg.svd(A, compute_uv=False)
    if s[-1] == 0:
        return float("inf")
    return float(s[0] / s[-1])


def corner_extrapolation_error(u, points, supports: Supports, basis: AugmentationBasis, m: int,
                               corners, exact, owners=None) -> np.ndarray:
    """Single-point relative error of ``u`` extrapolated to each corner.

    ``exact`` maps (k, 2) corner positions to (k, 2) displacements.
    """
    corners = np.asarray(corners, dtype=float).reshape(-1, 2)
    ue = np.asarray(exact(corners), dtype=float).reshape(-1, 2)
    uc = local_interpolate(points, supports, basis, m, np.asarray(u).reshape(-1, 2), corners, owners)
    den = np.linalg.norm(ue, axis=1)
    if np.any(den == 0):
        raise UndefinedNormError("exact displacement vanishes at a corner")
    return np.linalg.norm(uc - ue, axis=1) / den


def fit_slope(h, err) -> float:
    """Least-squares slope of ``log err`` against ``log h``."""
    h = np.asarray(h, dtype=float)
    err = np.asarray(err, dtype=float)
    ok = np.isfinite(err) & (err > 0)
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(h[ok]), np.log(err[ok]), 1)[0])
