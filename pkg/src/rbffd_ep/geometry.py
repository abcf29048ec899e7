"""Scattered node generation on parameterized 2D domains.

Boundary nodes are marched along each curve by arc length, an inner-boundary
layer is offset one spacing along the inward normal, and the remaining
interior is filled by rejection sampling and relaxed with a short-range
repulsion.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Sequence, Union

import numpy as np
import shapely
from scipy.spatial import cKDTree

log = logging.getLogger(__name__)

THETA = math.sqrt(2.0 / math.sqrt(3.0))
# interior nodes keep this many local spacings from the boundary while relaxing
INTERIOR_CLEARANCE = 0.8

BC_TAGS = ("dirichlet", "traction", "free_slip")

BOUNDARY, INNER_BOUNDARY, INTERIOR = 0, 1, 2
KIND_NAMES = ("boundary", "inner_boundary", "interior")

_CURVE_SAMPLES = 4001

Density = Union[float, Callable[[np.ndarray], np.ndarray]]


class GeometryWarning(UserWarning):
    """Node generation completed with a degraded result."""


class InvalidGeometryError(ValueError):
    pass


def spacing_from_density(rho):
    """Nodal spacing ``h = theta / sqrt(rho)`` of a hexagonal lattice."""
    rho = np.asarray(rho, dtype=float)
    if np.any(~(rho > 0)):
        raise InvalidGeometryError("node density must be positive")
    h = THETA / np.sqrt(rho)
    return float(h) if h.ndim == 0 else h


def density_from_spacing(h: float) -> float:
    if not h > 0:
        raise InvalidGeometryError("spacing must be positive")
    return (THETA / h) ** 2


@dataclass(frozen=True)
class Segment:
    """One boundary curve ``t -> position(t)`` on ``[t0, t1]``.

    The loop formed by consecutive segments must be counter-clockwise; the
    outward normal is then the tangent rotated by -90 degrees.
    """

    position: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]
    t_range: tuple[float, float]
    bc: str
    name: str = ""

    def __post_init__(self):
        if self.bc not in BC_TAGS:
            raise InvalidGeometryError(f"unknown BC tag {self.bc!r} on segment {self.name!r}")

    def normal(self, t) -> np.ndarray:
        d = np.atleast_2d(self.derivative(np.atleast_1d(t)))
        n = np.column_stack([d[:, 1], -d[:, 0]])
        return n / np.linalg.norm(n, axis=1, keepdims=True)

    @cached_property
    def _arc_table(self) -> tuple[np.ndarray, np.ndarray]:
        t = np.linspace(*self.t_range, _CURVE_SAMPLES)
        speed = np.linalg.norm(self.derivative(t), axis=1)
        s = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * np.diff(t))])
        return t, s

    @property
    def length(self) -> float:
        return float(self._arc_table[1][-1])

    def t_at_arclength(self, s) -> np.ndarray:
        t, sa = self._arc_table
        return np.interp(s, sa, t)


def line(a, b, bc: str, name: str = "") -> Segment:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = b - a
    return Segment(
        position=lambda t: a + np.multiply.outer(np.asarray(t, dtype=float), d),
        derivative=lambda t: np.broadcast_to(d, (np.size(t), 2)).copy(),
        t_range=(0.0, 1.0),
        bc=bc,
        name=name,
    )


def arc(center, radius: float, angle0: float, angle1: float, bc: str, name: str = "") -> Segment:
    """Circular arc traversed from ``angle0`` to ``angle1`` (either direction)."""
    c = np.asarray(center, dtype=float)

    def position(t):
        t = np.asarray(t, dtype=float)
        return c + radius * np.stack([np.cos(t), np.sin(t)], axis=-1)

    def derivative(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        sign = 1.0 if angle1 > angle0 else -1.0
        return sign * radius * np.stack([-np.sin(t), np.cos(t)], axis=-1)

    # parameterize directly by angle; derivative sign keeps orientation
    if angle1 > angle0:
        return Segment(position, derivative, (angle0, angle1), bc, name)

    def position_rev(t):
        return position(angle0 - (np.asarray(t, dtype=float) - angle1))

    def derivative_rev(t):
        return derivative(angle0 - (np.atleast_1d(np.asarray(t, dtype=float)) - angle1))

    return Segment(position_rev, derivative_rev, (angle1, angle0), bc, name)


@dataclass(frozen=True)
class DomainSpec:
    """Closed counter-clockwise loop of segments plus a node density [1/m^2]."""

    segments: tuple[Segment, ...]
    density: Density

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise InvalidGeometryError("domain needs at least one segment")
        ends = [(s.position(np.array([s.t_range[0]]))[0], s.position(np.array([s.t_range[1]]))[0])
                for s in self.segments]
        scale = max(s.length for s in self.segments)
        for k, (_, end) in enumerate(ends):
            start_next = ends[(k + 1) % len(ends)][0]
            if np.linalg.norm(end - start_next) > 1e-9 * scale:
                raise InvalidGeometryError(f"segments {k} and {(k + 1) % len(ends)} are not joined")
        if not self.polygon.is_valid:
            raise InvalidGeometryError("boundary loop self-intersects")
        if self._signed_area < 0:
            raise InvalidGeometryError("boundary loop must be counter-clockwise")

    def rho(self, points) -> np.ndarray:
        points = np.atleast_2d(points)
        if callable(self.density):
            return np.asarray(self.density(points), dtype=float) * np.ones(len(points))
        return np.full(len(points), float(self.density))

    def spacing(self, points) -> np.ndarray:
        return spacing_from_density(self.rho(points))

    @cached_property
    def _outline(self) -> np.ndarray:
        parts = []
        for s in self.segments:
            t = np.linspace(*s.t_range, _CURVE_SAMPLES)
            parts.append(s.position(t)[:-1])
        return np.concatenate(parts)

    @cached_property
    def _signed_area(self) -> float:
        x, y = self._outline.T
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @cached_property
    def polygon(self) -> shapely.Polygon:
        poly = shapely.Polygon(self._outline)
        shapely.prepare(poly)
        return poly

    @cached_property
    def _outline_tree(self) -> cKDTree:
        return cKDTree(self._outline)

    @property
    def area(self) -> float:
        return float(self.polygon.area)

    def distance_to_boundary(self, points) -> np.ndarray:
        points = np.atleast_2d(points)
        if len(points) == 0:
            return np.zeros(0)
        outline = self._outline
        n = len(outline)
        _, k = self._outline_tree.query(points)
        best = np.full(len(points), np.inf)
        # exact distance to the two polyline edges sharing the nearest vertex
        for a, b in ((k - 1) % n, k), (k, (k + 1) % n):
            pa, pb = outline[a], outline[b]
            e = pb - pa
            t = np.clip(np.einsum("ij,ij->i", points - pa, e) / np.einsum("ij,ij->i", e, e), 0.0, 1.0)
            best = np.minimum(best, np.linalg.norm(points - pa - t[:, None] * e, axis=1))
        return best

    def contains(self, points, tol: float = 0.0) -> np.ndarray:
        """Inside the closed domain, counting points within ``tol`` of the boundary."""
        points = np.atleast_2d(points)
        inside = shapely.contains_xy(self.polygon, points[:, 0], points[:, 1])
        if tol > 0:
            inside |= self.distance_to_boundary(points) <= tol
        return inside

    def strictly_contains(self, points, margin: float = 0.0) -> np.ndarray:
        points = np.atleast_2d(points)
        inside = shapely.contains_xy(self.polygon, points[:, 0], points[:, 1])
        if margin > 0:
            inside &= self.distance_to_boundary(points) > margin
        return inside


@dataclass(frozen=True)
class NodeCloud:
    """Scattered node arrangement; treated as immutable once built."""

    points: np.ndarray
    kind: np.ndarray
    normals: np.ndarray
    bc: np.ndarray
    spacing: np.ndarray
    segment: np.ndarray
    domain: DomainSpec | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for name in ("points", "kind", "normals", "bc", "spacing", "segment"):
            arr = np.asarray(getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def n_boundary(self) -> int:
        return int(np.count_nonzero(self.kind == BOUNDARY))

    @property
    def n_inner(self) -> int:
        """Nodes carrying the balance equation (inner-boundary layer plus interior)."""
        return int(np.count_nonzero(self.kind != BOUNDARY))

    @property
    def boundary_index(self) -> np.ndarray:
        return np.flatnonzero(self.kind == BOUNDARY)

    @property
    def inner_index(self) -> np.ndarray:
        return np.flatnonzero(self.kind != BOUNDARY)

    @property
    def h(self) -> float:
        """Average nodal spacing."""
        return float(np.mean(self.spacing))

    def to_text(self) -> str:
        rows = []
        for p, k, n, b in zip(self.points, self.kind, self.normals, self.bc):
            rows.append(
                f"{p[0]:.17g} {p[1]:.17g} {KIND_NAMES[k]} {n[0]:.17g} {n[1]:.17g} {b if b else '-'}"
            )
        return "\n".join(rows) + "\n"

    @classmethod
    def from_text(cls, text: str, domain: DomainSpec | None = None) -> "NodeCloud":
        pts, kinds, normals, bcs = [], [], [], []
        for line_ in text.splitlines():
            if not line_.strip() or line_.lstrip().startswith("#"):
                continue
            x, y, k, nx, ny, b = line_.split()
            pts.append((float(x), float(y)))
            kinds.append(KIND_NAMES.index(k))
            normals.append((float(nx), float(ny)))
            bcs.append("" if b == "-" else b)
        pts = np.array(pts, dtype=float).reshape(-1, 2)
        kinds = np.array(kinds, dtype=np.int8)
        segment = np.full(len(pts), -1)
        if domain is not None:
            segment = _nearest_segment(domain, pts, kinds)
            spacing = domain.spacing(pts)
        else:
            spacing = _spacing_from_neighbors(pts)
        return cls(pts, kinds, np.array(normals).reshape(-1, 2), np.array(bcs, dtype=object),
                   spacing, segment, domain)


def _spacing_from_neighbors(points: np.ndarray) -> np.ndarray:
    if len(points) < 2:
        return np.ones(len(points))
    d, _ = cKDTree(points).query(points, k=2)
    return d[:, 1]


def _nearest_segment(domain: DomainSpec, points, kinds) -> np.ndarray:
    seg = np.full(len(points), -1)
    idx = np.flatnonzero(kinds == BOUNDARY)
    if len(idx) == 0:
        return seg
    dists = []
    for s in domain.segments:
        line_ = shapely.LineString(s.position(np.linspace(*s.t_range, _CURVE_SAMPLES)))
        dists.append(shapely.distance(shapely.points(points[idx]), line_))
    seg[idx] = np.argmin(np.array(dists), axis=0)
    return seg


def _empty_cloud(domain: DomainSpec) -> NodeCloud:
    return NodeCloud(np.zeros((0, 2)), np.zeros(0, dtype=np.int8), np.zeros((0, 2)),
                     np.zeros(0, dtype=object), np.zeros(0), np.zeros(0, dtype=int), domain)


def _concat(cloud: NodeCloud, points, kind, normals, bc, segment) -> NodeCloud:
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(points)
    spacing = cloud.domain.spacing(points) if n else np.zeros(0)
    return NodeCloud(
        np.concatenate([cloud.points, points]),
        np.concatenate([cloud.kind, np.full(n, kind, dtype=np.int8)]),
        np.concatenate([cloud.normals, np.asarray(normals, dtype=float).reshape(-1, 2)]),
        np.concatenate([cloud.bc, np.asarray(bc, dtype=object).reshape(-1)]),
        np.concatenate([cloud.spacing, spacing]),
        np.concatenate([cloud.segment, np.asarray(segment, dtype=int).reshape(-1)]),
        cloud.domain,
    )


def place_boundary_nodes(domain: DomainSpec) -> NodeCloud:
    """March nodes along every segment by arc length.

    Each open segment is split into intervals of about one local spacing and
    nodes go to the interior division points, so segment junctions (corners)
    get no node and the first node sits about ``h`` from each corner. A single
    closed segment gets equally spaced nodes all around.
    """
    pts, nrm, bcs, segs = [], [], [], []
    closed = len(domain.segments) == 1
    for k, s in enumerate(domain.segments):
        t, sa = s._arc_table
        h = domain.spacing(s.position(t))
        # node count measure: integral of ds / h(s)
        count = np.concatenate([[0.0], np.cumsum(0.5 * (1 / h[1:] + 1 / h[:-1]) * np.diff(sa))])
        n_int = int(round(count[-1]))
        if closed:
            n_int = max(n_int, 3)
            targets = np.arange(n_int) * count[-1] / n_int
        elif n_int < 2:
            if count[-1] < 1.0:
                warnings.warn(f"segment {s.name or k} shorter than the local spacing; "
                              "placing a single midpoint node", GeometryWarning, stacklevel=2)
            targets = np.array([0.5 * count[-1]])
        else:
            targets = np.arange(1, n_int) * count[-1] / n_int
        tn = np.interp(targets, count, t)
        pts.append(s.position(tn))
        nrm.append(s.normal(tn))
        bcs += [s.bc] * len(tn)
        segs += [k] * len(tn)
    return _concat(_empty_cloud(domain), np.concatenate(pts), BOUNDARY, np.concatenate(nrm), bcs, segs)


def place_inner_boundary_nodes(cloud: NodeCloud) -> NodeCloud:
    """Offset every boundary node by one local spacing against its normal."""
    domain = cloud.domain
    b = cloud.boundary_index
    h = cloud.spacing[b]
    cand = cloud.points[b] - h[:, None] * cloud.normals[b]
    ok = domain.strictly_contains(cand, margin=0.25 * h.min())
    if not np.all(ok):
        warnings.warn(f"{np.count_nonzero(~ok)} inner-boundary nodes fall outside the domain "
                      "and were skipped", GeometryWarning, stacklevel=2)
    keep = []
    tree = cKDTree(cloud.points)
    for i in np.flatnonzero(ok):
        near = tree.query_ball_point(cand[i], 0.5 * h[i])
        near_new = [j for j in keep if np.linalg.norm(cand[j] - cand[i]) < 0.5 * h[i]]
        if near or near_new:
            log.debug("inner-boundary node %d dropped: too close to an existing node", i)
            continue
        keep.append(i)
    keep = np.array(keep, dtype=int)
    n = len(keep)
    return _concat(cloud, cand[keep], INNER_BOUNDARY, np.zeros((n, 2)), [""] * n, [-1] * n)


def _interior_count(domain: DomainSpec, inset: float, rng: np.random.Generator) -> int:
    region = domain.polygon.buffer(-inset)
    if region.is_empty:
        return 0
    if not callable(domain.density):
        return int(round(region.area * float(domain.density)))
    xmin, ymin, xmax, ymax = region.bounds
    samples = rng.uniform((xmin, ymin), (xmax, ymax), size=(200_000, 2))
    inside = shapely.contains_xy(region, samples[:, 0], samples[:, 1])
    box = (xmax - xmin) * (ymax - ymin)
    return int(round(box * np.mean(domain.rho(samples) * inside)))


def fill_and_relax_interior(cloud: NodeCloud, seed: int = 0, max_sweeps: int = 200) -> NodeCloud:
    """Fill the region inside the inner-boundary layer and relax by repulsion.

    Boundary and inner-boundary nodes stay frozen. Forces fall off as 1/r^2
    and are cut at three spacings; steps are capped at 0.2 h.
    """
    domain = cloud.domain
    rng = np.random.default_rng(seed)
    h_ref = float(np.min(cloud.spacing)) if len(cloud) else float(np.min(domain.spacing(domain._outline)))
    target = _interior_count(domain, 1.5 * h_ref, rng)
    if target == 0:
        return cloud

    xmin, ymin, xmax, ymax = domain.polygon.bounds
    rho_max = float(np.max(domain.rho(domain._outline)))
    if callable(domain.density):
        probe = rng.uniform((xmin, ymin), (xmax, ymax), size=(20_000, 2))
        rho_max = max(rho_max, float(np.max(domain.rho(probe))))
    accepted = []
    n_acc = 0
    while n_acc < target:
        cand = rng.uniform((xmin, ymin), (xmax, ymax), size=(max(4 * (target - n_acc), 64), 2))
        h = domain.spacing(cand)
        ok = domain.strictly_contains(cand) & (domain.distance_to_boundary(cand) >= 1.5 * h)
        ok &= rng.uniform(size=len(cand)) * rho_max <= domain.rho(cand)
        cand = cand[ok][: target - n_acc]
        accepted.append(cand)
        n_acc += len(cand)
    interior = np.concatenate(accepted)

    frozen = cloud.points
    n_frozen = len(frozen)
    pts = np.concatenate([frozen, interior])
    h_all = np.concatenate([cloud.spacing, domain.spacing(interior)])
    movable = np.arange(n_frozen, len(pts))
    converged = False
    for sweep in range(max_sweeps):
        tree = cKDTree(pts)
        pairs = tree.query_pairs(3.0 * float(h_all.max()), output_type="ndarray")
        i, j = pairs[:, 0], pairs[:, 1]
        d = pts[i] - pts[j]
        r = np.linalg.norm(d, axis=1)
        hij = 0.5 * (h_all[i] + h_all[j])
        live = r < 3.0 * hij
        i, j, d, r, hij = i[live], j[live], d[live], r[live], hij[live]
        # shifted so the force vanishes continuously at the cutoff
        f = ((hij / r) ** 2 - 1.0 / 9.0) / r
        fx = np.bincount(i, f * d[:, 0], len(pts)) - np.bincount(j, f * d[:, 0], len(pts))
        fy = np.bincount(i, f * d[:, 1], len(pts)) - np.bincount(j, f * d[:, 1], len(pts))
        step = 0.1 * h_all[movable, None] * np.column_stack([fx[movable], fy[movable]])
        size = np.linalg.norm(step, axis=1)
        cap = 0.2 * h_all[movable]
        step *= np.minimum(1.0, cap / np.maximum(size, 1e-300))[:, None]
        for _ in range(4):
            trial = pts[movable] + step
            bad = ~(domain.strictly_contains(trial)
                    & (domain.distance_to_boundary(trial) >= INTERIOR_CLEARANCE * h_all[movable]))
            if not bad.any():
                break
            step[bad] *= 0.5
        else:
            step[bad] = 0.0
        pts[movable] += step
        moved = np.linalg.norm(step, axis=1) / h_all[movable]
        if moved.max(initial=0.0) < 0.01:
            converged = True
            break
    if not converged:
        warnings.warn(f"repulsion relaxation stopped after {max_sweeps} sweeps "
                      f"(last max step {moved.max():.3g} h)", GeometryWarning, stacklevel=2)
    log.debug("relaxation finished after %d sweeps", sweep + 1)
    n = len(movable)
    return _concat(cloud, pts[movable], INTERIOR, np.zeros((n, 2)), [""] * n, [-1] * n)


def generate_nodes(domain: DomainSpec, seed: int = 0) -> NodeCloud:
    cloud = place_boundary_nodes(domain)
    cloud = place_inner_boundary_nodes(cloud)
    return fill_and_relax_interior(cloud, seed)


def nearest_neighbor_distance(points: np.ndarray) -> np.ndarray:
    d, _ = cKDTree(points).query(points, k=2)
    return d[:, 1]


def annulus_sector(r_inner: float, r_outer: float, angle: float, density: Density,
                   inner_bc: str = "traction", outer_bc: str = "traction",
                   cut_bc: str = "free_slip") -> DomainSpec:
    """Annulus section between polar angles 0 and ``angle``."""
    c, s = math.cos(angle), math.sin(angle)
    return DomainSpec(
        (
            line((r_inner, 0.0), (r_outer, 0.0), cut_bc, "bottom"),
            arc((0.0, 0.0), r_outer, 0.0, angle, outer_bc, "outer"),
            line((r_outer * c, r_outer * s), (r_inner * c, r_inner * s), cut_bc, "side"),
            arc((0.0, 0.0), r_inner, angle, 0.0, inner_bc, "inner"),
        ),
        density,
    )


def rectangle(width: float, height: float, density: Density,
              bcs: Sequence[str] = ("traction", "traction", "traction", "dirichlet")) -> DomainSpec:
    """Rectangle ``[0, width] x [0, height]``; BCs ordered bottom, right, top, left."""
    w, ht = width, height
    names = ("bottom", "right", "top", "left")
    corners = [(0.0, 0.0), (w, 0.0), (w, ht), (0.0, ht)]
    segs = tuple(line(corners[k], corners[(k + 1) % 4], bcs[k], names[k]) for k in range(4))
    return DomainSpec(segs, density)


def plate_with_hole(width: float, radius: float, density: Density) -> DomainSpec:
    """Quarter of a square plate ``[0, width]^2`` with a hole of ``radius`` at the origin."""
    w, a = width, radius
    return DomainSpec(
        (
            line((a, 0.0), (w, 0.0), "free_slip", "bottom"),
            line((w, 0.0), (w, w), "traction", "right"),
            line((w, w), (0.0, w), "traction", "top"),
            line((0.0, w), (0.0, a), "free_slip", "left"),
            arc((0.0, 0.0), a, math.pi / 2, 0.0, "traction", "hole"),
        ),
        density,
    )


def with_spacing(domain: DomainSpec, h: float) -> DomainSpec:
    return replace(domain, density=density_from_spacing(h))
