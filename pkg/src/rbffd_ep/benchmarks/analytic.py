"""Closed-form elastic solutions used as references."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class BeamParams:
    L: float = 2.0
    D: float = 0.5
    F0: float = 1.0
    E: float = 1.0
    nu: float = 0.3

    @property
    def I(self) -> float:
        return self.D**3 / 12.0


def timoshenko_exact(x1, x2, params: BeamParams = BeamParams()):
    """Plane-stress cantilever displacement (cubic polynomial)."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    L, D, F0, E, nu, I = params.L, params.D, params.F0, params.E, params.nu, params.I
    c = F0 / (6.0 * E * I)
    y = x2 - D / 2.0
    u1 = c * y * ((6.0 * L - 3.0 * x1) * x1 + (2.0 + nu) * (x2**2 - D * x2))
    u2 = -c * (3.0 * nu * y**2 * (L - x1) + (4.0 + 5.0 * nu) * D**2 * x1 / 4.0
               + (3.0 * L - x1) * x1**2)
    return u1, u2


def timoshenko_stress(x1, x2, params: BeamParams = BeamParams()):
    """``(s11, s22, s12)`` of the cantilever field."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    L, D, F0, I = params.L, params.D, params.F0, params.I
    s11 = F0 * (L - x1) * (x2 - D / 2.0) / I
    s12 = F0 * x2 * (x2 - D) / (2.0 * I)
    return s11, np.zeros_like(s11 + s12), s12


@dataclass(frozen=True)
class PlateParams:
    R_i: float = 0.5
    sigma_inf: float = 1.0
    E: float = 1.0
    nu: float = 0.3
    plane: str = "plane_stress"

    @property
    def G(self) -> float:
        return self.E / (2.0 * (1.0 + self.nu))

    @property
    def beta(self) -> float:
        if self.plane == "plane_stress":
            return (3.0 - self.nu) / (1.0 + self.nu)
        return 3.0 - 4.0 * self.nu


def plate_hole_exact(r, theta, params: PlateParams = PlateParams()):
    """Displacement of an infinite plate with a hole under remote tension along x1."""
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    a = params.R_i
    if np.any(r < a * (1.0 - 1e-12)):
        raise DomainError("r must not be smaller than the hole radius")
    b = params.beta
    c = params.sigma_inf * a / (8.0 * params.G)
    u1 = c * ((b + 1.0) * r / a * np.cos(theta)
              + 2.0 * a / r * ((b + 1.0) * np.cos(theta) + np.cos(3 * theta))
              - 2.0 * (a / r) ** 3 * np.cos(3 * theta))
    u2 = c * ((b - 3.0) * r / a * np.sin(theta)
              + 2.0 * a / r * ((1.0 - b) * np.sin(theta) + np.sin(3 * theta))
              - 2.0 * (a / r) ** 3 * np.sin(3 * theta))
    return u1, u2


def plate_hole_stress_polar(r, theta, params: PlateParams = PlateParams()):
    """``(s_rr, s_tt, s_rt)`` of the Kirsch solution."""
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    q = (params.R_i / r) ** 2
    c2, s2 = np.cos(2 * theta), np.sin(2 * theta)
    s = params.sigma_inf
    srr = 0.5 * s * (1 - q) + 0.5 * s * (1 + 3 * q**2 - 4 * q) * c2
    stt = 0.5 * s * (1 + q) - 0.5 * s * (1 + 3 * q**2) * c2
    srt = -0.5 * s * (1 - 3 * q**2 + 2 * q) * s2
    return srr, stt, srt


def polar_to_cartesian_stress(srr, stt, srt, theta):
    c, s = np.cos(theta), np.sin(theta)
    s11 = srr * c * c + stt * s * s - 2 * srt * s * c
    s22 = srr * s * s + stt * c * c + 2 * srt * s * c
    s12 = (srr - stt) * s * c + srt * (c * c - s * s)
    return s11, s22, s12


def cartesian_to_polar_stress(s11, s22, s12, theta):
    c, s = np.cos(theta), np.sin(theta)
    srr = s11 * c * c + s22 * s * s + 2 * s12 * s * c
    stt = s11 * s * s + s22 * c * c - 2 * s12 * s * c
    srt = (s22 - s11) * s * c + s12 * (c * c - s * s)
    return srr, stt, srt


def plate_hole_stress(x1, x2, params: PlateParams = PlateParams()):
    r = np.hypot(x1, x2)
    th = np.arctan2(x2, x1)
    return polar_to_cartesian_stress(*plate_hole_stress_polar(r, th, params), th)


@dataclass(frozen=True)
class AnnulusParams:
    R_i: float = 1.0
    R_o: float = 2.0
    p0: float = 1.0
    E: float = 1.0
    nu: float = 0.3

    @property
    def G(self) -> float:
        return self.E / (2.0 * (1.0 + self.nu))

    @property
    def lam(self) -> float:
        return self.nu * self.E / ((1.0 + self.nu) * (1.0 - 2.0 * self.nu))

    def lame_constants(self):
        d = self.R_o**2 - self.R_i**2
        A = self.p0 * self.R_i**2 / d
        B = self.p0 * self.R_i**2 * self.R_o**2 / d
        return A, B


def annulus_exact(r, params: AnnulusParams = AnnulusParams()):
    """Radial displacement of the pressurized thick cylinder (plane strain)."""
    r = np.asarray(r, dtype=float)
    tol = 1e-9 * params.R_o
    if np.any(r < params.R_i - tol) or np.any(r > params.R_o + tol):
        raise DomainError("r outside [R_i, R_o]")
    A, B = params.lame_constants()
    return A * r / (2.0 * (params.G + params.lam)) + B / (2.0 * params.G * r)


def annulus_stress_polar(r, params: AnnulusParams = AnnulusParams()):
    """``(s_rr, s_tt, s_zz)``; ``s_zz`` follows from plane strain."""
    r = np.asarray(r, dtype=float)
    A, B = params.lame_constants()
    srr = A - B / r**2
    stt = A + B / r**2
    return srr, stt, params.nu * (srr + stt)


def annulus_yield_pressure(params: AnnulusParams, sigma_y0: float) -> float:
    """Pressure at which the inner surface first reaches the von Mises limit."""
    unit = AnnulusParams(params.R_i, params.R_o, 1.0, params.E, params.nu)
    srr, stt, szz = annulus_stress_polar(params.R_i, unit)
    m = (srr + stt + szz) / 3.0
    q = np.sqrt(1.5 * ((srr - m) ** 2 + (stt - m) ** 2 + (szz - m) ** 2))
    return float(sigma_y0 / q)
