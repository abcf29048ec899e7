"""Benchmark problem definitions: geometry, boundary data, material and references."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..assembly import Problem
from ..constitutive import Hardening, MaterialModel
from ..geometry import (DomainSpec, NodeCloud, annulus_sector, density_from_spacing,
                        generate_nodes, plate_with_hole, rectangle)
from ..solver import LoadProgram
from .analytic import (AnnulusParams, BeamParams, PlateParams, annulus_exact, plate_hole_exact,
                       plate_hole_stress, timoshenko_exact, timoshenko_stress)

CASE_IDS = ("timoshenko", "plate_hole", "annulus", "annulus_plastic", "plate_hole_plastic")


def _traction_from_stress(stress: Callable) -> Callable:
    def traction(points, normals, load, segments):
        s11, s22, s12 = stress(points[:, 0], points[:, 1])
        n1, n2 = normals[:, 0], normals[:, 1]
        return load * np.column_stack([s11 * n1 + s12 * n2, s12 * n1 + s22 * n2])
    return traction


@dataclass(frozen=True)
class BenchmarkCase:
    """One benchmark: geometry parameters, material, BC layout and reference field.

    Lengths in m, stresses and moduli in Pa. The load parameter scales
    ``F0``, ``sigma_inf`` or ``p0`` depending on the case.
    """

    case_id: str
    geometry: dict
    model: MaterialModel
    program: LoadProgram = LoadProgram(1.0, 1.0, 1.0)
    params: object = None
    angle: float = math.pi / 2
    corners: tuple = field(default=())

    def __post_init__(self):
        if self.case_id not in CASE_IDS:
            raise ValueError(f"unknown case {self.case_id!r}; expected one of {CASE_IDS}")
        for k, v in self.geometry.items():
            if not v > 0:
                raise ValueError(f"geometry parameter {k} must be positive")
        g = self.geometry
        if "R_o" in g and not g["R_i"] < g["R_o"]:
            raise ValueError("R_i must be smaller than R_o")
        if "width" in g and not g["R_i"] < g["width"]:
            raise ValueError("hole radius must be smaller than the plate width")

    def domain(self, h: float) -> DomainSpec:
        g, rho = self.geometry, density_from_spacing(h)
        if self.case_id == "timoshenko":
            return rectangle(g["L"], g["D"], rho)
        if self.case_id.startswith("plate_hole"):
            return plate_with_hole(g["width"], g["R_i"], rho)
        return annulus_sector(g["R_i"], g["R_o"], self.angle, rho)

    def cloud(self, h: float, seed: int = 0) -> NodeCloud:
        return generate_nodes(self.domain(h), seed)

    def problem(self, cloud: NodeCloud) -> Problem:
        if self.case_id == "timoshenko":
            bp = self.params

            def dirichlet(points, normals, load, segments):
                return load * np.column_stack(timoshenko_exact(points[:, 0], points[:, 1], bp))

            stress = lambda x1, x2: timoshenko_stress(x1, x2, bp)  # noqa: E731
            return Problem(cloud, self.model, dirichlet=dirichlet,
                           traction=_traction_from_stress(stress))
        if self.case_id.startswith("plate_hole"):
            pp = self.params
            stress = lambda x1, x2: plate_hole_stress(x1, x2, pp)  # noqa: E731
            return Problem(cloud, self.model, traction=_traction_from_stress(stress))

        def pressure(points, normals, load, segments):
            return -load * normals * (segments == "inner")[:, None]

        return Problem(cloud, self.model, traction=pressure)

    def exact_displacement(self, points, load: float = 1.0) -> Optional[np.ndarray]:
        """Closed-form (N, 2) displacement at ``load``; None for plastic cases."""
        if self.model.plastic:
            return None
        points = np.asarray(points, dtype=float)
        x1, x2 = points[:, 0], points[:, 1]
        if self.case_id == "timoshenko":
            return load * np.column_stack(timoshenko_exact(x1, x2, self.params))
        if self.case_id == "plate_hole":
            r, th = np.hypot(x1, x2), np.arctan2(x2, x1)
            return load * np.column_stack(plate_hole_exact(r, th, self.params))
        r = np.hypot(x1, x2)
        ur = load * annulus_exact(np.clip(r, self.geometry["R_i"], self.geometry["R_o"]),
                                  self.params)
        return points / r[:, None] * ur[:, None]


def timoshenko(L: float = 2.0, D: float = 0.5, F0: float = 1.0, E: float = 1.0,
               nu: float = 0.3) -> BenchmarkCase:
    """Cantilever clamped (exact displacement) at x1 = 0, exact tractions elsewhere."""
    bp = BeamParams(L, D, F0, E, nu)
    return BenchmarkCase("timoshenko", {"L": L, "D": D, "F0": F0},
                         MaterialModel(E, nu, plane="plane_stress"), params=bp)


def plate_hole(width: float = 2.0, R_i: float = 0.5, sigma_inf: float = 1.0, E: float = 1.0,
               nu: float = 0.3) -> BenchmarkCase:
    """Quarter plate with symmetry cuts, exact Kirsch tractions on the outer edges."""
    pp = PlateParams(R_i, sigma_inf, E, nu, "plane_stress")
    return BenchmarkCase("plate_hole", {"width": width, "R_i": R_i, "sigma_inf": sigma_inf},
                         MaterialModel(E, nu, plane="plane_stress"), params=pp)


def _annulus_corners(R_i, R_o, angle):
    c, s = math.cos(angle), math.sin(angle)
    return ((R_i, 0.0), (R_o, 0.0), (R_o * c, R_o * s), (R_i * c, R_i * s))


def annulus(R_i: float = 1.0, R_o: float = 2.0, p0: float = 1.0, E: float = 1.0,
            nu: float = 0.3, angle: float = math.pi / 2) -> BenchmarkCase:
    """Quarter annulus under inner pressure, plane strain, free-slip cuts."""
    ap = AnnulusParams(R_i, R_o, p0, E, nu)
    return BenchmarkCase("annulus", {"R_i": R_i, "R_o": R_o, "p0": p0},
                         MaterialModel(E, nu), params=ap, angle=angle,
                         corners=_annulus_corners(R_i, R_o, angle))


def annulus_plastic(R_i: float = 1.0, R_o: float = 2.0, E: float = 1.0, nu: float = 0.3,
                    sigma_y0: float = 20.0, H: float = 0.0, angle: float = math.pi / 6,
                    program: LoadProgram = LoadProgram(8.0, 10.5, 0.1)) -> BenchmarkCase:
    hard = Hardening("linear", H) if H > 0 else Hardening()
    ap = AnnulusParams(R_i, R_o, 1.0, E, nu)
    return BenchmarkCase("annulus_plastic", {"R_i": R_i, "R_o": R_o},
                         MaterialModel(E, nu, sigma_y0, hard), program=program, params=ap,
                         angle=angle, corners=_annulus_corners(R_i, R_o, angle))


def plate_hole_plastic(width: float = 2.0, R_i: float = 0.5, E: float = 1.0, nu: float = 0.3,
                       sigma_y0: float = 0.1, H: float = 0.25,
                       program: LoadProgram = LoadProgram(0.0, 0.1, 0.01)) -> BenchmarkCase:
    """Plane-strain plate loaded by Kirsch tractions scaled by ``sigma_inf``."""
    hard = Hardening("linear", H) if H > 0 else Hardening()
    pp = PlateParams(R_i, 1.0, E, nu, "plane_strain")
    return BenchmarkCase("plate_hole_plastic", {"width": width, "R_i": R_i},
                         MaterialModel(E, nu, sigma_y0, hard), program=program, params=pp)


BUILDERS = {
    "timoshenko": timoshenko,
    "plate_hole": plate_hole,
    "annulus": annulus,
    "annulus_plastic": annulus_plastic,
    "plate_hole_plastic": plate_hole_plastic,
}


def build_case(case_id: str, **kwargs) -> BenchmarkCase:
    if case_id not in BUILDERS:
        raise ValueError(f"unknown case {case_id!r}; expected one of {CASE_IDS}")
    return BUILDERS[case_id](**kwargs)
