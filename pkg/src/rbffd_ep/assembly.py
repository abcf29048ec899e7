"""Global tangent matrices and residuals for the direct, composed and hybrid approaches.

Unknowns are interleaved nodal displacements, ``u[2 l + c]``. Every boundary
node owns two boundary-condition rows, every other node two balance rows.
Material states live on evaluation-point sets:

``nodes``
    all collocation nodes; the balance points of direct and composed, and
    output monitors for hybrid.
``bc``
    boundary nodes shifted inward by ``alpha_s * h`` along the normal,
    where traction and free-slip rows are collocated.
``sn``
    hybrid secondary nodes around each balance node.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .approximation import (
    DX, DXX, DXY, DY, DYY, I0, AugmentationBasis, InvalidConfigurationError, Supports,
    basic_weights, build_supports, support_size_for,
)
from .constitutive import MaterialModel, MaterialState, TangentOperator, elastic_tensor, return_map
from .geometry import BC_TAGS, BOUNDARY, NodeCloud

log = logging.getLogger(__name__)

APPROACHES = ("direct", "composed", "hybrid")
ALPHA_D_MODES = ("clamp", "per_node")
# offsets in units of delta and central-difference coefficients per axis
FD_STENCILS = {
    2: (np.array([1.0, -1.0]), np.array([0.5, -0.5])),
    4: (np.array([-2.0, -1.0, 1.0, 2.0]), np.array([1.0, -8.0, 8.0, -1.0]) / 12.0),
}


class ConfigurationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ApproachConfig:
    """Discretization choices.

    ``alpha_d_mode="clamp"`` limits ``alpha_d`` globally to its maximum;
    ``"per_node"`` keeps the requested value and falls back to the maximum
    only at nodes whose secondary nodes would leave the domain.
    """

    approach: str = "composed"
    p: int = 2
    m: int = 3
    support_size: Optional[int] = None
    alpha_d: float = 0.5
    p_fd: int = 2
    alpha_s: float = 0.0
    alpha_d_mode: str = "clamp"

    def __post_init__(self):
        if self.approach not in APPROACHES:
            raise InvalidConfigurationError(f"approach must be one of {APPROACHES}")
        if self.p_fd not in FD_STENCILS:
            raise InvalidConfigurationError("p_fd must be 2 or 4")
        if self.m < 1 or self.m % 2 == 0:
            raise InvalidConfigurationError("m must be odd and positive")
        if self.p < -1:
            raise InvalidConfigurationError("p must be >= -1")
        if not self.alpha_d > 0:
            raise InvalidConfigurationError("alpha_d must be positive")
        if self.alpha_s < 0:
            raise InvalidConfigurationError("alpha_s must be nonnegative")
        if self.alpha_d_mode not in ALPHA_D_MODES:
            raise InvalidConfigurationError(f"alpha_d_mode must be one of {ALPHA_D_MODES}")
        if self.support_size is None:
            object.__setattr__(self, "support_size", support_size_for(self.p))
        if self.alpha_d_mode == "clamp" and self.alpha_d > self.alpha_d_max:
            warnings.warn(f"alpha_d={self.alpha_d} exceeds {self.alpha_d_max} for p_fd={self.p_fd};"
                          " clamped", ConfigurationWarning, stacklevel=3)
            object.__setattr__(self, "alpha_d", self.alpha_d_max)

    @property
    def alpha_d_max(self) -> float:
        return 1.0 if self.p_fd == 2 else 0.5

    @property
    def basis(self) -> AugmentationBasis:
        return AugmentationBasis(self.p)


def _zero_field(points, load):
    return np.zeros((len(points), 2))


def _zero_boundary(points, normals, load, segments):
    return np.zeros((len(points), 2))


@dataclass(frozen=True)
class Problem:
    """Node cloud, material and boundary data.

    Boundary callables receive positions, outward normals, the scalar load
    parameter and the names of the boundary segments the nodes lie on, and
    return (K, 2) arrays. The body force receives positions and load.
    """

    cloud: NodeCloud
    model: MaterialModel
    dirichlet: Callable = _zero_boundary
    traction: Callable = _zero_boundary
    body_force: Callable = _zero_field


def shifted_eval_point(p, n, alpha_s: float, h):
    """Boundary collocation point moved inward by ``alpha_s * h``."""
    return np.asarray(p, dtype=float) - alpha_s * np.asarray(h, dtype=float)[..., None] * np.asarray(n)


@dataclass(frozen=True)
class EvalSet:
    """Evaluation points sharing the support of their owner node."""

    owner: np.ndarray
    points: np.ndarray
    strain: sp.csr_matrix  # (4K, 2N) Voigt strain operator
    interp: sp.csr_matrix  # (2K, 2N) displacement interpolation

    def __len__(self):
        return len(self.owner)


@dataclass(frozen=True)
class SecondaryNodeSet:
    """Hybrid secondary nodes: ``n_dp`` per balance node, row-major."""

    center: np.ndarray
    offsets: np.ndarray  # (Nbal, n_dp, 2)
    delta: np.ndarray  # (Nbal,)
    alpha: np.ndarray  # (Nbal,)
    fd: sp.csr_matrix  # (2 Nbal, 4 Nbal n_dp) divergence from SN stresses

    @property
    def n_dp(self) -> int:
        return self.offsets.shape[1]


@dataclass
class TangentAssembly:
    K: sp.csr_matrix
    r: np.ndarray
    f_ext: np.ndarray
    balance_rows: np.ndarray
    K_sigma: Optional[sp.csr_matrix] = None
    K_div: Optional[sp.csr_matrix] = None


def block_diagonal(blocks: np.ndarray) -> sp.csr_matrix:
    """Sparse block-diagonal matrix from (K, a, b) blocks."""
    k, a, b = blocks.shape
    rows = np.repeat(np.arange(k * a), b)
    cols = (np.arange(k)[:, None, None] * b + np.arange(b)[None, None, :]).repeat(a, axis=1).ravel()
    return sp.csr_matrix((blocks.ravel(), (rows, cols)), shape=(k * a, k * b))


def _strain_operator(idx, wx, wy, n_nodes):
    """(4K, 2N) map from displacements to Voigt strain (engineering shear)."""
    k, n = idx.shape
    base = 4 * np.arange(k)[:, None]
    c0, c1 = 2 * idx, 2 * idx + 1
    rows = np.concatenate([np.broadcast_to(base, (k, n)), np.broadcast_to(base + 1, (k, n)),
                           np.broadcast_to(base + 3, (k, n)), np.broadcast_to(base + 3, (k, n))])
    cols = np.concatenate([c0, c1, c0, c1])
    vals = np.concatenate([wx, wy, wy, wx])
    return sp.csr_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=(4 * k, 2 * n_nodes))


def _interp_operator(idx, w, n_nodes):
    k, n = idx.shape
    base = 2 * np.arange(k)[:, None]
    rows = np.concatenate([np.broadcast_to(base, (k, n)), np.broadcast_to(base + 1, (k, n))])
    cols = np.concatenate([2 * idx, 2 * idx + 1])
    vals = np.concatenate([w, w])
    return sp.csr_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=(2 * k, 2 * n_nodes))


def _divergence_operator(idx, wx, wy, n_cols_points):
    """(2K, 4P): nodal force components from Voigt stresses at points ``idx``."""
    k, n = idx.shape
    base = 2 * np.arange(k)[:, None]
    r0 = np.broadcast_to(base, (k, n))
    r1 = np.broadcast_to(base + 1, (k, n))
    rows = np.concatenate([r0, r0, r1, r1])
    cols = np.concatenate([4 * idx, 4 * idx + 3, 4 * idx + 3, 4 * idx + 1])
    vals = np.concatenate([wx, wy, wx, wy])
    return sp.csr_matrix((vals.ravel(), (rows.ravel(), cols.ravel())),
                         shape=(2 * k, 4 * n_cols_points))


def traction_matrix(normals) -> np.ndarray:
    """(K, 2, 4) map from Voigt stress to the traction ``sigma . n``."""
    n = np.asarray(normals, dtype=float)
    T = np.zeros(n.shape[:-1] + (2, 4))
    T[..., 0, 0] = n[..., 0]
    T[..., 0, 3] = n[..., 1]
    T[..., 1, 1] = n[..., 1]
    T[..., 1, 3] = n[..., 0]
    return T


class Discretization:
    """State-independent operators of one approach on one node cloud."""

    def __init__(self, problem: Problem, config: ApproachConfig):
        self.problem = problem
        self.config = config
        cloud = problem.cloud
        self.cloud = cloud
        self.n_nodes = N = len(cloud)
        bc_tags = set(cloud.bc[cloud.kind == BOUNDARY])
        unknown = bc_tags - set(BC_TAGS)
        if unknown:
            raise InvalidConfigurationError(f"unknown boundary condition tag(s) {sorted(unknown)}")
        if config.support_size > N:
            raise InvalidConfigurationError(
                f"support size {config.support_size} exceeds node count {N}")
        self.supports: Supports = build_supports(cloud.points, config.support_size)
        self.boundary = cloud.boundary_index
        self.balance = cloud.inner_index
        basis, m = config.basis, config.m
        pts = cloud.points
        idx = self.supports.indices

        orders = 2 if config.approach == "direct" else 1
        w = basic_weights(pts, self.supports, np.arange(N), pts, basis, m, orders=orders)[:, 0]
        self.node_weights = w
        self.sets: dict[str, EvalSet] = {
            "nodes": EvalSet(np.arange(N), pts, _strain_operator(idx, w[:, DX], w[:, DY], N),
                             _interp_operator(idx, w[:, I0], N)),
        }
        self.stiffness = float(elastic_tensor(problem.model)[0, 0])

        # boundary-condition points
        b = self.boundary
        h_b = cloud.spacing[b]
        bpts = shifted_eval_point(pts[b], cloud.normals[b], config.alpha_s, h_b)
        if config.alpha_s > 0 and cloud.domain is not None:
            inside = cloud.domain.strictly_contains(bpts)
            if not np.all(inside):
                bad = b[np.flatnonzero(~inside)[0]]
                raise InvalidConfigurationError(
                    f"shifted boundary point of node {bad} lies outside the domain "
                    f"(alpha_s={config.alpha_s})")
        wb = basic_weights(pts, self.supports, b, bpts, basis, m, orders=1)[:, 0]
        self.sets["bc"] = EvalSet(b, bpts, _strain_operator(idx[b], wb[:, DX], wb[:, DY], N),
                                  _interp_operator(idx[b], wb[:, I0], N))
        self._setup_bc_rows()

        if config.approach == "hybrid":
            self.secondary = self._setup_secondary()
        elif config.approach == "composed":
            self.K_div = _divergence_operator(idx[self.balance], w[self.balance, DX],
                                              w[self.balance, DY], N)
        else:
            self.K_div = _divergence_operator(idx[self.balance], w[self.balance, DX],
                                              w[self.balance, DY], N)
            self._setup_direct()

        rows_bal = np.stack([2 * self.balance, 2 * self.balance + 1], axis=1).ravel()
        rows_bc = np.stack([2 * b, 2 * b + 1], axis=1).ravel()
        self.balance_rows = rows_bal
        self.bc_rows = rows_bc
        self._P_bal = sp.csr_matrix((np.ones(len(rows_bal)), (rows_bal, np.arange(len(rows_bal)))),
                                    shape=(2 * N, len(rows_bal)))
        self._P_bc = sp.csr_matrix((np.ones(len(rows_bc)), (rows_bc, np.arange(len(rows_bc)))),
                                   shape=(2 * N, len(rows_bc)))

    # -- setup -------------------------------------------------------------

    def _setup_bc_rows(self):
        """Per boundary row: coefficients on interpolated u and on stress, plus scale."""
        cloud, b = self.cloud, self.boundary
        nb = len(b)
        n = cloud.normals[b]
        t = np.column_stack([-n[:, 1], n[:, 0]])
        tags = cloud.bc[b]
        Au = np.zeros((nb, 2, 2))
        As = np.zeros((nb, 2, 4))
        lh = self.supports.scale[b]
        s_disp = self.stiffness / lh**2
        s_trac = 1.0 / lh
        scale = np.zeros((nb, 2))
        T = traction_matrix(n)
        dir_ = tags == "dirichlet"
        tr = tags == "traction"
        fs = tags == "free_slip"
        Au[dir_] = np.eye(2)
        scale[dir_] = s_disp[dir_, None]
        As[tr] = T[tr]
        scale[tr] = s_trac[tr, None]
        Au[fs, 0, :] = n[fs]
        As[fs, 1, :] = np.einsum("ki,kij->kj", t[fs], T[fs])
        scale[fs, 0] = s_disp[fs]
        scale[fs, 1] = s_trac[fs]
        self.bc_tags = tags
        seg = cloud.segment[b]
        if cloud.domain is not None:
            names = [cloud.domain.segments[i].name if i >= 0 else "" for i in seg]
        else:
            names = [""] * nb
        self.bc_segments = np.array(names, dtype=object)
        self._bc_Au = block_diagonal(Au)
        self._bc_As = block_diagonal(As)
        self.bc_scale = scale.ravel()

    def _setup_secondary(self) -> SecondaryNodeSet:
        cfg, cloud = self.config, self.cloud
        bal = self.balance
        steps, coef = FD_STENCILS[cfg.p_fd]
        axes = np.array([[1.0, 0.0], [0.0, 1.0]])
        # unit offsets ordered x-axis first, then y-axis
        unit = np.concatenate([steps[:, None] * axes[0], steps[:, None] * axes[1]])
        n_dp = len(unit)
        h = cloud.spacing[bal]
        alpha = np.full(len(bal), cfg.alpha_d)
        domain = cloud.domain

        def outside(a):
            if domain is None:
                return np.zeros(len(bal), dtype=bool)
            sn = cloud.points[bal, None, :] + (a * h)[:, None, None] * unit[None]
            ok = domain.strictly_contains(sn.reshape(-1, 2)).reshape(len(bal), n_dp)
            return ~ok.all(axis=1)

        bad = outside(alpha)
        if cfg.alpha_d_mode == "per_node" and cfg.alpha_d > cfg.alpha_d_max and bad.any():
            alpha[bad] = cfg.alpha_d_max
            bad = outside(alpha)
        shrunk = 0
        while bad.any():
            shrunk += int(bad.sum())
            alpha[bad] *= 0.5
            bad = outside(alpha)
        if shrunk:
            warnings.warn(f"secondary nodes outside the domain; alpha_d reduced at "
                          f"{np.count_nonzero(alpha < min(cfg.alpha_d, cfg.alpha_d_max))} nodes",
                          ConfigurationWarning, stacklevel=3)
        delta = alpha * h
        offsets = delta[:, None, None] * unit[None]
        sn_pts = cloud.points[bal, None, :] + offsets
        w = basic_weights(cloud.points, self.supports, bal, sn_pts, cfg.basis, cfg.m, orders=1)
        idx = np.repeat(self.supports.indices[bal], n_dp, axis=0)
        wsn = w.reshape(-1, 6, w.shape[-1])
        N = self.n_nodes
        self.sets["sn"] = EvalSet(np.repeat(bal, n_dp), sn_pts.reshape(-1, 2),
                                  _strain_operator(idx, wsn[:, DX], wsn[:, DY], N),
                                  _interp_operator(idx, wsn[:, I0], N))
        # FD divergence: x-axis SNs differentiate in x, y-axis SNs in y
        k = len(steps)
        cx = np.concatenate([coef, np.zeros(k)])[None, :] / delta[:, None]
        cy = np.concatenate([np.zeros(k), coef])[None, :] / delta[:, None]
        sn_index = np.arange(len(bal) * n_dp).reshape(len(bal), n_dp)
        fd = _divergence_operator(sn_index, cx, cy, len(bal) * n_dp)
        return SecondaryNodeSet(bal, offsets, delta, alpha, fd)

    def _setup_direct(self):
        idx, w = self.supports.indices, self.node_weights
        N = self.n_nodes
        bal = self.balance
        self._dx_weights = w[bal, DX]
        self._dy_weights = w[bal, DY]
        # strain gradients: d/dx eps and d/dy eps at balance nodes
        self._strain_dx = _strain_operator(idx[bal], w[bal, DXX], w[bal, DXY], N)
        self._strain_dy = _strain_operator(idx[bal], w[bal, DXY], w[bal, DYY], N)
        De = elastic_tensor(self.problem.model)
        self._K_direct_el = self._direct_balance(np.broadcast_to(De, (N, 4, 4)))
        self._K_div_De = (self.K_div @ block_diagonal(np.broadcast_to(De, (N, 4, 4)))).tocsr()

    # -- evaluation ----------------------------------------------------------

    def set_names(self) -> tuple[str, ...]:
        return tuple(self.sets)

    @property
    def formulation_sets(self) -> tuple[str, ...]:
        """Sets whose stresses enter the residual; hybrid nodal states only monitor."""
        if self.config.approach == "hybrid":
            return ("bc", "sn")
        return ("nodes", "bc")

    def strains(self, name: str, u: np.ndarray) -> np.ndarray:
        return (self.sets[name].strain @ u).reshape(-1, 4)

    def initial_states(self) -> dict[str, MaterialState]:
        return {k: MaterialState.zeros(len(s)) for k, s in self.sets.items()}

    def update_states(self, committed: dict[str, MaterialState], du: np.ndarray):
        """Return-map every set from the committed states with increment ``du``."""
        states, tangents = {}, {}
        model = self.problem.model
        for name, es in self.sets.items():
            ids = es.owner
            states[name], tangents[name] = return_map(committed[name], self.strains(name, du),
                                                      model, ids=ids)
        return states, tangents

    def bc_targets(self, load: float) -> np.ndarray:
        """Prescribed values per boundary row, evaluated at the boundary nodes."""
        cloud, b = self.cloud, self.boundary
        pts, n = cloud.points[b], cloud.normals[b]
        g = np.zeros((len(b), 2))
        tags, names = self.bc_tags, self.bc_segments
        d = tags == "dirichlet"
        if d.any():
            g[d] = self.problem.dirichlet(pts[d], n[d], load, names[d])
        t = tags == "traction"
        if t.any():
            g[t] = self.problem.traction(pts[t], n[t], load, names[t])
        return g.ravel()

    def body_force(self, load: float) -> np.ndarray:
        return np.asarray(self.problem.body_force(self.cloud.points[self.balance], load)).ravel()

    def internal_force(self, states: dict[str, MaterialState], u: np.ndarray) -> np.ndarray:
        """Balance-row internal force ``div sigma``.

        The direct approach writes ``sigma = De (eps - eps_p)`` and applies
        second-derivative weights to ``u`` and first-derivative weights to
        ``De eps_p``; this is exact for elastic states but not consistent
        with its plastic tangent.
        """
        if self.config.approach == "hybrid":
            return self.secondary.fd @ states["sn"].stress.ravel()
        if self.config.approach == "direct":
            return (self._K_direct_el @ u
                    - self._K_div_De @ states["nodes"].plastic_strain.ravel())
        return self.K_div @ states["nodes"].stress.ravel()

    def bc_values(self, states, u) -> np.ndarray:
        u_bc = self.sets["bc"].interp @ u
        return self._bc_Au @ u_bc + self._bc_As @ states["bc"].stress.ravel()

    def residual(self, states, u, load) -> tuple[np.ndarray, np.ndarray]:
        """Global residual and external-force vector in global row order."""
        N = self.n_nodes
        r = np.zeros(2 * N)
        f_ext = np.zeros(2 * N)
        fb = self.body_force(load)
        g = self.bc_targets(load)
        r[self.balance_rows] = self.internal_force(states, u) + fb
        r[self.bc_rows] = self.bc_scale * (self.bc_values(states, u) - g)
        f_ext[self.balance_rows] = -fb
        f_ext[self.bc_rows] = self.bc_scale * g
        return r, f_ext

    def tangent(self, tangents: dict[str, TangentOperator], states=None) -> TangentAssembly:
        cfg = self.config
        es_bc = self.sets["bc"]
        D_bc = block_diagonal(tangents["bc"].D)
        K_bc = self._bc_Au @ es_bc.interp + self._bc_As @ (D_bc @ es_bc.strain)
        K_bc = sp.diags(self.bc_scale) @ K_bc
        K_sigma = K_div = None
        if cfg.approach == "hybrid":
            es = self.sets["sn"]
            K_bal = self.secondary.fd @ (block_diagonal(tangents["sn"].D) @ es.strain)
        elif cfg.approach == "composed":
            K_sigma = (block_diagonal(tangents["nodes"].D) @ self.sets["nodes"].strain).tocsr()
            K_div = self.K_div
            K_bal = K_div @ K_sigma
        else:
            K_bal = self._direct_balance(tangents["nodes"].D)
        K = (self._P_bal @ K_bal + self._P_bc @ K_bc).tocsr()
        return TangentAssembly(K, None, None, self.balance_rows, K_sigma, K_div)

    def _direct_balance(self, D: np.ndarray) -> sp.csr_matrix:
        """(div D) : grad_s + D : grad grad_s at balance nodes."""
        bal = self.balance
        idx = self.supports.indices[bal]
        Dn = D[idx]  # (Nbal, n, 4, 4)
        dDx = np.einsum("kn,knab->kab", self._dx_weights, Dn)
        dDy = np.einsum("kn,knab->kab", self._dy_weights, Dn)
        Dl = D[bal]
        Qx = np.array([[1.0, 0, 0, 0], [0, 0, 0, 1.0]])
        Qy = np.array([[0, 0, 0, 1.0], [0, 1.0, 0, 0]])
        A_grad = Qx @ dDx + Qy @ dDy  # (Nbal, 2, 4) acting on strain
        A_x = Qx @ Dl  # acting on d/dx strain
        A_y = Qy @ Dl
        eps = self.sets["nodes"].strain[np.concatenate([4 * bal[:, None] + np.arange(4)]).ravel()]
        return (block_diagonal(A_grad) @ eps + block_diagonal(A_x) @ self._strain_dx
                + block_diagonal(A_y) @ self._strain_dy).tocsr()

    def assemble(self, states, tangents, u, load) -> TangentAssembly:
        ta = self.tangent(tangents)
        ta.r, ta.f_ext = self.residual(states, u, load)
        return ta


def assemble_bc_rows(disc: Discretization, tangents, states, u, load):
    """BC rows of the tangent and residual (row order of ``disc.bc_rows``)."""
    ta = disc.tangent(tangents)
    r, _ = disc.residual(states, u, load)
    return ta.K[disc.bc_rows], r[disc.bc_rows]


def _elastic_tangents(disc: Discretization, D_field=None):
    out = {}
    De = elastic_tensor(disc.problem.model)
    for name, es in disc.sets.items():
        D = np.broadcast_to(De, (len(es), 4, 4)).copy()
        if name == "nodes" and D_field is not None:
            D = np.asarray(D_field, dtype=float)
        out[name] = TangentOperator(D, np.zeros(len(es), bool), np.zeros(len(es)))
    return out


def assemble_direct(problem: Problem, config: ApproachConfig, D_field=None) -> TangentAssembly:
    """Direct-approach tangent for a given per-node tangent field (elastic by default)."""
    disc = Discretization(problem, _with_approach(config, "direct"))
    return disc.tangent(_elastic_tangents(disc, D_field))


def assemble_composed(problem: Problem, config: ApproachConfig, D_field=None) -> TangentAssembly:
    disc = Discretization(problem, _with_approach(config, "composed"))
    return disc.tangent(_elastic_tangents(disc, D_field))


def assemble_hybrid(problem: Problem, config: ApproachConfig) -> TangentAssembly:
    disc = Discretization(problem, _with_approach(config, "hybrid"))
    return disc.tangent(_elastic_tangents(disc))


def _with_approach(config: ApproachConfig, approach: str) -> ApproachConfig:
    if config.approach == approach:
        return config
    from dataclasses import replace
    return replace(config, approach=approach)


def internal_force_and_residual(disc: Discretization, states, u, load, force_rows_only=False,
                                abs_threshold: float = 1e-12):
    """Residual vector and its relative norm.

    The norm covers all rows, or balance rows only. When the external-force
    vector vanishes the absolute norm is returned instead, and zero is
    reported below ``abs_threshold``.
    """
    r, f_ext = disc.residual(states, u, load)
    rows = disc.balance_rows if force_rows_only else slice(None)
    nf = np.linalg.norm(f_ext[rows])
    nr = np.linalg.norm(r[rows])
    if nf > 0:
        return r, nr / nf
    return r, (nr if nr > abs_threshold else 0.0)


def dump_matrix(K: sp.spmatrix) -> str:
    """Coordinate text ``row col value``."""
    coo = sp.coo_matrix(K)
    order = np.lexsort((coo.col, coo.row))
    return "".join(f"{r} {c} {v:.17g}\n" for r, c, v in
                   zip(coo.row[order], coo.col[order], coo.data[order]))
