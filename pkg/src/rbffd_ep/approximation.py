"""Local supports and augmented polyharmonic-spline (PHS) operator weights.

Every support is solved in coordinates shifted to its center node and scaled
by the support size ``h_l``, so the PHS is ``(r / h_l)**m`` and the monomials
are well scaled. Weights for the six basic derivatives
``(1, d/dx, d/dy, d2/dx2, d2/dxdy, d2/dy2)`` are produced together; any
linear operator of order <= 2 is a combination of those.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial
from typing import Mapping

import numpy as np
from scipy.spatial import cKDTree

BASIC = ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))
I0, DX, DY, DXX, DXY, DYY = range(6)

RCOND_MIN = 1e-14
_CHUNK = 2048


class InvalidConfigurationError(ValueError):
    pass


class SingularStencilError(np.linalg.LinAlgError):
    """Local interpolation matrix of a support is numerically singular."""

    def __init__(self, node: int, rcond: float):
        super().__init__(f"singular stencil at node {node} (rcond={rcond:.3g})")
        self.node = node
        self.rcond = rcond


@dataclass(frozen=True)
class AugmentationBasis:
    """Monomials of total degree <= ``degree`` in two variables, graded order.

    ``degree=-1`` gives the empty basis (pure PHS).
    """

    degree: int

    @property
    def exponents(self) -> np.ndarray:
        ex = [(d - j, j) for d in range(self.degree + 1) for j in range(d + 1)]
        return np.array(ex, dtype=int).reshape(-1, 2)

    @property
    def size(self) -> int:
        return comb(self.degree + 2, 2) if self.degree >= 0 else 0

    def evaluate(self, xi: np.ndarray, deriv: tuple[int, int] = (0, 0)) -> np.ndarray:
        """Derivative ``deriv`` of every monomial at local points ``xi`` (..., 2)."""
        xi = np.asarray(xi, dtype=float)
        a, b = deriv
        out = np.zeros(xi.shape[:-1] + (self.size,))
        for k, (i, j) in enumerate(self.exponents):
            if i < a or j < b:
                continue
            c = factorial(i) // factorial(i - a) * factorial(j) // factorial(j - b)
            out[..., k] = c * xi[..., 0] ** (i - a) * xi[..., 1] ** (j - b)
        return out


def support_size_for(degree: int) -> int:
    """Default support size ``2M + 1``."""
    return 2 * AugmentationBasis(degree).size + 1


def _check_order(m: int):
    if m < 1 or m % 2 == 0:
        raise InvalidConfigurationError(f"PHS order must be odd and positive, got {m}")


def phs_value(r, scale: float, m: int):
    """``(r / scale)**m``."""
    _check_order(m)
    if not scale > 0:
        raise InvalidConfigurationError("support scale must be positive")
    return (np.asarray(r, dtype=float) / scale) ** m


def phs_derivatives(offset: np.ndarray, m: int) -> np.ndarray:
    """The six basic derivatives of ``|x|**m`` at ``offset`` (..., 2) -> (..., 6).

    Derivatives of order k are exact for m > k; terms that are 0/0 at the
    origin are set to their limit 0.
    """
    _check_order(m)
    dx = offset[..., 0]
    dy = offset[..., 1]
    r = np.hypot(dx, dy)
    zero = r == 0
    rs = np.where(zero, 1.0, r)
    rm2 = np.where(zero, 0.0, rs ** (m - 2))
    rm4 = np.where(zero, 0.0, rs ** (m - 4))
    out = np.empty(offset.shape[:-1] + (6,))
    out[..., I0] = r**m
    out[..., DX] = m * rm2 * dx
    out[..., DY] = m * rm2 * dy
    out[..., DXX] = m * rm2 + m * (m - 2) * rm4 * dx * dx
    out[..., DXY] = m * (m - 2) * rm4 * dx * dy
    out[..., DYY] = m * rm2 + m * (m - 2) * rm4 * dy * dy
    return out


@dataclass(frozen=True)
class SupportDomain:
    center: int
    indices: np.ndarray
    scale: float

    @property
    def size(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class Supports:
    """Supports of all nodes at once: ``indices[l, 0] == l``."""

    indices: np.ndarray
    scale: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)

    def __getitem__(self, l: int) -> SupportDomain:
        return SupportDomain(l, self.indices[l], float(self.scale[l]))


def _support_scale(points: np.ndarray, indices: np.ndarray) -> np.ndarray:
    d2 = np.sum((points[indices[:, 1:]] - points[indices[:, :1]]) ** 2, axis=-1)
    n = indices.shape[1]
    return np.sqrt(d2.sum(axis=1) / max(n - 1, 1))


def build_supports(points: np.ndarray, size: int) -> Supports:
    """Each node plus its ``size - 1`` nearest neighbours."""
    points = np.asarray(points, dtype=float)
    if size > len(points):
        raise InvalidConfigurationError(f"support size {size} exceeds node count {len(points)}")
    if size < 1:
        raise InvalidConfigurationError("support size must be positive")
    _, idx = cKDTree(points).query(points, k=size)
    idx = np.asarray(idx).reshape(len(points), size)
    # the center must come first even when another node ties at distance 0
    own = np.arange(len(points))
    if np.any(idx[:, 0] != own):
        for l in np.flatnonzero(idx[:, 0] != own):
            row = [j for j in idx[l] if j != l]
            idx[l] = [l] + row[: size - 1]
    return Supports(idx, _support_scale(points, idx))


def build_support(points: np.ndarray, l: int, size: int) -> SupportDomain:
    points = np.asarray(points, dtype=float)
    if size > len(points):
        raise InvalidConfigurationError(f"support size {size} exceeds node count {len(points)}")
    d = np.linalg.norm(points - points[l], axis=1)
    d[l] = -1.0
    idx = np.argsort(d, kind="stable")[:size]
    return SupportDomain(l, idx, float(_support_scale(points, idx[None])[0]))


def _local_coordinates(points, indices, scale):
    return (points[indices] - points[indices[..., :1]]) / scale[..., None, None]


def interpolation_matrices(local: np.ndarray, basis: AugmentationBasis, m: int) -> np.ndarray:
    """Augmented PHS matrices ``[[Phi, P], [P^T, 0]]`` for local coordinates (G, n, 2)."""
    g, n, _ = local.shape
    M = basis.size
    A = np.zeros((g, n + M, n + M))
    diff = local[:, :, None, :] - local[:, None, :, :]
    A[:, :n, :n] = np.linalg.norm(diff, axis=-1) ** m
    if M:
        P = basis.evaluate(local)
        A[:, :n, n:] = P
        A[:, n:, :n] = np.swapaxes(P, 1, 2)
    return A


def assemble_interpolation_matrix(points, support: SupportDomain, basis: AugmentationBasis,
                                  m: int, check: bool = True) -> np.ndarray:
    _check_order(m)
    if support.size < basis.size:
        raise InvalidConfigurationError(
            f"support of node {support.center} has {support.size} nodes, needs >= {basis.size}")
    scale = np.array([support.scale if support.scale > 0 else 1.0])
    local = _local_coordinates(np.asarray(points, dtype=float), support.indices[None], scale)
    A = interpolation_matrices(local, basis, m)
    if check:
        _check_conditioning(A, np.array([support.center]))
    return A[0]


def _check_conditioning(A: np.ndarray, centers: np.ndarray):
    s = np.linalg.svd(A, compute_uv=False)
    with np.errstate(divide="ignore", invalid="ignore"):
        rcond = np.where(s[:, 0] > 0, s[:, -1] / s[:, 0], 0.0)
    bad = np.flatnonzero(~(rcond >= RCOND_MIN))
    if len(bad):
        raise SingularStencilError(int(centers[bad[0]]), float(rcond[bad[0]]))


def basic_weights(points: np.ndarray, supports: Supports, owners: np.ndarray,
                  eval_points: np.ndarray, basis: AugmentationBasis, m: int,
                  orders: int = 2) -> np.ndarray:
    """Weights of the basic derivatives at evaluation points.

    ``owners`` (G,) selects the support used for each group of ``E``
    evaluation points ``eval_points`` (G, E, 2). Returns (G, E, 6, n) with
    physical-unit derivative weights; second-order slots are zero when
    ``orders < 2``.
    """
    _check_order(m)
    points = np.asarray(points, dtype=float)
    owners = np.asarray(owners, dtype=int)
    eval_points = np.asarray(eval_points, dtype=float)
    if eval_points.ndim == 2:
        eval_points = eval_points[:, None, :]
    g, e, _ = eval_points.shape
    n = supports.indices.shape[1]
    if n < basis.size:
        raise InvalidConfigurationError(f"support size {n} is below the {basis.size} monomials")
    n_ops = 3 if orders < 2 else 6
    out = np.zeros((g, e, 6, n))
    for lo in range(0, g, _CHUNK):
        sl = slice(lo, min(lo + _CHUNK, g))
        own = owners[sl]
        idx = supports.indices[own]
        scale = supports.scale[own]
        local = _local_coordinates(points, idx, scale)
        A = interpolation_matrices(local, basis, m)
        _check_conditioning(A, own)
        xi = (eval_points[sl] - points[idx[:, :1]]) / scale[:, None, None]
        # right-hand sides: L phi_i(xi) and L p_k(xi) per basic operator
        offs = xi[:, :, None, :] - local[:, None, :, :]
        rhs_phi = phs_derivatives(offs, m)[..., :n_ops]  # (G, E, n, ops)
        rhs = np.zeros((len(own), e, n_ops, n + basis.size))
        rhs[..., :n] = np.swapaxes(rhs_phi, 2, 3)
        if basis.size:
            for k in range(n_ops):
                rhs[:, :, k, n:] = basis.evaluate(xi, BASIC[k])
        b = rhs.reshape(len(own), e * n_ops, n + basis.size).transpose(0, 2, 1)
        w = np.linalg.solve(A, b)[:, :n, :]
        w = w.transpose(0, 2, 1).reshape(len(own), e, n_ops, n)
        order = np.array([sum(d) for d in BASIC[:n_ops]])
        out[sl, :, :n_ops, :] = w / scale[:, None, None, None] ** order[None, None, :, None]
    return out


Operator = Mapping[tuple[int, int], float]

IDENTITY: Operator = {(0, 0): 1.0}
D_X: Operator = {(1, 0): 1.0}
D_Y: Operator = {(0, 1): 1.0}
LAPLACIAN: Operator = {(2, 0): 1.0, (0, 2): 1.0}


@dataclass(frozen=True)
class StencilWeights:
    indices: np.ndarray
    weights: np.ndarray

    def apply(self, values: np.ndarray):
        return np.tensordot(self.weights, np.asarray(values)[self.indices], axes=([-1], [0]))


def operator_weights(points, support: SupportDomain, basis: AugmentationBasis, m: int,
                     operator: Operator, eval_point) -> StencilWeights:
    """Weights of a scalar linear operator (order <= 2) for one support."""
    for d in operator:
        if d not in BASIC:
            raise InvalidConfigurationError(f"unsupported derivative {d}")
    sup = Supports(support.indices[None], np.array([support.scale]))
    w = basic_weights(points, sup, np.array([0]), np.asarray(eval_point, dtype=float)[None, None],
                      basis, m)[0, 0]
    total = sum(c * w[BASIC.index(d)] for d, c in operator.items())
    return StencilWeights(support.indices, np.asarray(total))
