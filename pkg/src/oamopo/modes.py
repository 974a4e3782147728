"""First-order transverse mode algebra.

A field in the first-order mode subspace is a complex superposition of the
two Laguerre-Gauss modes with topological charge +1 and -1.  This module
evaluates the spatial profiles, converts mode amplitudes to Stokes
parameters and to polar/azimuth coordinates on the mode Poincare sphere,
and projects onto the six analyzer modes (HG at 0/45/90/135 degrees, LG+,
LG-) used to define the Stokes parameters operationally.

Conventions
-----------
* ``psi_pm(rho, az) = N (rho/w) exp(+-i az) exp(-rho^2/w^2)`` at the waist
  plane, ``N = 2/(w sqrt(pi))`` so the profile is unit-normalized over the
  plane.
* ``HG_t = (e^{+it} psi_+ + e^{-it} psi_-)/sqrt(2)``.  With this phase
  choice the analyzer-intensity definition of the Stokes parameters agrees
  exactly with the coherence form ``p1 + i p2 = 2 c_+ c_-^* / I``.
* A sphere point (theta, phi) maps to the mode
  ``(cos(theta/2) e^{-i phi/2}, sin(theta/2) e^{+i phi/2})``, whose Stokes
  vector is ``(sin t cos f, -sin t sin f, cos t)``.  Both poles carry
  azimuth 0 by convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Unit-norm tolerance for Stokes vectors of pure modes.
STOKES_NORM_TOL = 1e-12

_ANALYZERS = ("hg0", "hg45", "hg90", "hg135", "lg+", "lg-")


@dataclass(frozen=True)
class ModeVector:
    """Complex amplitudes of a first-order field in the LG+/LG- basis."""

    c_plus: complex
    c_minus: complex

    @property
    def intensity(self) -> float:
        return abs(self.c_plus) ** 2 + abs(self.c_minus) ** 2

    def as_array(self) -> np.ndarray:
        return np.array([self.c_plus, self.c_minus], dtype=complex)

    def scaled(self, factor: complex) -> "ModeVector":
        return ModeVector(self.c_plus * factor, self.c_minus * factor)

    def overlap(self, other: "ModeVector") -> complex:
        """Inner product <self|other> (conjugate-linear in self)."""
        return (np.conj(self.c_plus) * other.c_plus
                + np.conj(self.c_minus) * other.c_minus)


@dataclass(frozen=True)
class StokesVector:
    p1: float
    p2: float
    p3: float

    def __post_init__(self):
        if self.p1 ** 2 + self.p2 ** 2 + self.p3 ** 2 > 1.0 + STOKES_NORM_TOL:
            raise ValueError("Stokes vector lies outside the unit ball")

    def as_array(self) -> np.ndarray:
        return np.array([self.p1, self.p2, self.p3])

    @property
    def norm(self) -> float:
        return math.sqrt(self.p1 ** 2 + self.p2 ** 2 + self.p3 ** 2)


@dataclass(frozen=True)
class SpherePoint:
    """Polar angle theta in [0, pi], azimuth phi in (-pi, pi]."""

    theta: float
    phi: float

    def __post_init__(self):
        if not -1e-12 <= self.theta <= math.pi + 1e-12:
            raise ValueError(f"theta={self.theta} outside [0, pi]")
        theta = min(max(self.theta, 0.0), math.pi)
        object.__setattr__(self, "theta", theta)
        phi = math.remainder(self.phi, 2 * math.pi)  # (-pi, pi] up to sign of pi
        if phi <= -math.pi:
            phi = math.pi
        if min(theta, math.pi - theta) < 1e-15:
            phi = 0.0  # azimuth is degenerate at the poles
        object.__setattr__(self, "phi", phi)

    def cartesian(self) -> np.ndarray:
        """Unit Stokes vector of the point: (sin t cos f, -sin t sin f, cos t)."""
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi),
                         -st * math.sin(self.phi),
                         math.cos(self.theta)])

    def mirrored(self) -> "SpherePoint":
        """Reflection through the equatorial plane: theta -> pi - theta."""
        return SpherePoint(math.pi - self.theta, self.phi)


@dataclass(frozen=True)
class GridSpec:
    """Square sampling grid centered on the beam axis.

    ``half_width`` is in units of the waist ``w``; pixel centers span
    (-half_width*w, +half_width*w) with midpoint spacing, so discrete sums
    times ``pixel_area`` approximate plane integrals.
    """

    n: int = 256
    half_width: float = 3.0
    waist: float = 1.0

    def __post_init__(self):
        if self.n < 16:
            raise ValueError("grid must have at least 16 pixels per side")
        if self.half_width <= 0 or self.waist <= 0:
            raise ValueError("half_width and waist must be positive")

    @property
    def pixel_size(self) -> float:
        return 2.0 * self.half_width * self.waist / self.n

    @property
    def pixel_area(self) -> float:
        return self.pixel_size ** 2

    def axis(self) -> np.ndarray:
        extent = self.half_width * self.waist
        return -extent + (np.arange(self.n) + 0.5) * self.pixel_size

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.axis()
        return np.meshgrid(x, x, indexing="xy")


def lg_field(sign: int, x, y, grid: GridSpec):
    """Waist-plane LG profile with topological charge ``sign`` (+1 or -1).

    Accepts scalars or numpy arrays for x, y.  Unit-normalized over the
    infinite plane.
    """
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    w = grid.waist
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    rho = np.hypot(x, y)
    az = np.arctan2(y, x)
    norm = 2.0 / (w * math.sqrt(math.pi))
    value = norm * (rho / w) * np.exp(sign * 1j * az) * np.exp(-(rho / w) ** 2)
    if value.ndim == 0:
        return complex(value)
    return value


def hg_field(angle: float, x, y, grid: GridSpec):
    """First-order HG profile with lobes along azimuth ``-angle``.

    HG_t = (e^{+it} psi_+ + e^{-it} psi_-)/sqrt(2); unit-normalized.
    """
    plus = lg_field(+1, x, y, grid)
    minus = lg_field(-1, x, y, grid)
    return (np.exp(1j * angle) * plus + np.exp(-1j * angle) * minus) / math.sqrt(2)


def analyzer_mode(name: str) -> ModeVector:
    """Mode vector of one of the six Stokes analyzers."""
    if name not in _ANALYZERS:
        raise ValueError(f"unknown analyzer {name!r}; expected one of {_ANALYZERS}")
    if name == "lg+":
        return ModeVector(1.0, 0.0)
    if name == "lg-":
        return ModeVector(0.0, 1.0)
    t = math.radians(float(name[2:]))
    r = 1.0 / math.sqrt(2)
    return ModeVector(r * np.exp(1j * t), r * np.exp(-1j * t))


def project_intensity(v: ModeVector, analyzer: str) -> float:
    """Squared modulus of the coefficient of ``analyzer`` in ``v``."""
    a = analyzer_mode(analyzer)
    return float(abs(a.overlap(v)) ** 2)


def stokes_from_mode(v: ModeVector) -> StokesVector:
    """Stokes parameters of a nonzero mode (coherence form)."""
    intensity = v.intensity
    if intensity <= 0.0:
        raise ValueError("Stokes parameters are undefined at zero intensity")
    cross = v.c_plus * np.conj(v.c_minus)
    return StokesVector(
        2.0 * cross.real / intensity,
        2.0 * cross.imag / intensity,
        (abs(v.c_plus) ** 2 - abs(v.c_minus) ** 2) / intensity,
    )


def stokes_from_projections(v: ModeVector) -> StokesVector:
    """Stokes parameters from analyzer intensities (operational form).

    Normalized intensity differences over the three analyzer pairs; agrees
    with :func:`stokes_from_mode` to rounding for every nonzero mode.
    """
    i = {name: project_intensity(v, name) for name in _ANALYZERS}
    return StokesVector(
        (i["hg0"] - i["hg90"]) / (i["hg0"] + i["hg90"]),
        (i["hg45"] - i["hg135"]) / (i["hg45"] + i["hg135"]),
        (i["lg+"] - i["lg-"]) / (i["lg+"] + i["lg-"]),
    )


def mode_from_sphere(pt: SpherePoint, intensity: float = 1.0) -> ModeVector:
    """Mode with given total intensity at a Poincare-sphere point."""
    if intensity < 0:
        raise ValueError("intensity must be nonnegative")
    amp = math.sqrt(intensity)
    half_t = pt.theta / 2.0
    half_f = pt.phi / 2.0
    return ModeVector(
        amp * math.cos(half_t) * np.exp(-1j * half_f),
        amp * math.sin(half_t) * np.exp(+1j * half_f),
    )


def sphere_from_stokes(s: StokesVector) -> SpherePoint:
    """Inverse of the sphere -> Stokes map for unit Stokes vectors."""
    if abs(s.norm - 1.0) > 1e-9:
        raise ValueError(f"Stokes vector has norm {s.norm}, expected 1")
    theta = math.acos(min(max(s.p3, -1.0), 1.0))
    if min(theta, math.pi - theta) < 1e-15:
        return SpherePoint(theta, 0.0)  # pole convention
    return SpherePoint(theta, math.atan2(-s.p2, s.p1))
