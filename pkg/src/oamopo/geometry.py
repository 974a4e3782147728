"""Closed paths on the mode Poincare sphere and their geometric phases.

A cyclic transformation of a first-order mode traces a closed path on the
sphere and imprints a geometric phase equal to minus half the enclosed
signed solid angle.  Paths here are piecewise geodesic between listed
vertices.  Two independent evaluations are provided: the signed
spherical-polygon area (triangle fan with l'Huilier excesses) and a
discrete connection phase summed over overlaps of densely sampled modes.

Sign conventions: the solid angle is positive for counterclockwise
circulation seen from outside the sphere, and is reported in (-2 pi, 2 pi]
(the orientation-signed area of the smaller enclosed region; a full
equatorial loop returns +2 pi).  Reflection through the equatorial plane
reverses orientation, so a mirrored path acquires the opposite phase.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .modes import SpherePoint, StokesVector, mode_from_sphere, sphere_from_stokes

_DEDUPE_TOL = 1e-12


@dataclass(frozen=True)
class SpherePath:
    """Ordered vertices joined by great-circle arcs shorter than pi."""

    vertices: tuple[SpherePoint, ...]
    closed: bool = True

    def __post_init__(self):
        verts = list(self.vertices)
        if not verts:
            raise ValueError("path needs at least one vertex")
        cart = [v.cartesian() for v in verts]
        # drop consecutive duplicates and an explicit terminal closure
        keep = [0]
        for i in range(1, len(verts)):
            if np.linalg.norm(cart[i] - cart[keep[-1]]) > _DEDUPE_TOL:
                keep.append(i)
        if self.closed and len(keep) > 1:
            if np.linalg.norm(cart[keep[-1]] - cart[keep[0]]) <= _DEDUPE_TOL:
                keep.pop()
        verts = tuple(verts[i] for i in keep)
        object.__setattr__(self, "vertices", verts)
        if self.closed:
            if len(verts) < 3:
                raise ValueError("closed paths need at least 3 distinct vertices")
            for u, v in self._edges():
                if np.dot(u, v) <= -1.0 + 1e-12:
                    raise ValueError("antipodal consecutive vertices: arc ambiguous")

    def _edges(self):
        cart = self.cartesian()
        pairs = list(zip(cart, np.roll(cart, -1, axis=0)))
        return pairs if self.closed else pairs[:-1]

    def cartesian(self) -> np.ndarray:
        return np.array([v.cartesian() for v in self.vertices])

    def reversed(self) -> "SpherePath":
        return SpherePath(tuple(reversed(self.vertices)), self.closed)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["theta", "phi"])
            for v in self.vertices:
                writer.writerow([repr(v.theta), repr(v.phi)])

    @classmethod
    def from_csv(cls, path, closed: bool = True) -> "SpherePath":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if [h.strip().lower() for h in header[:2]] != ["theta", "phi"]:
                raise ValueError("path CSV must start with a 'theta,phi' header")
            verts = [SpherePoint(float(r[0]), float(r[1])) for r in reader if r]
        return cls(tuple(verts), closed)


def lune_path(delta_phi: float, phi0: float = 0.0) -> SpherePath:
    """Wedge bounded by two meridians and the equator, area = delta_phi.

    Starts at the north pole, descends the meridian at phi0 + delta_phi,
    returns along the equator to phi0 and closes over the pole.  Oriented
    so the enclosed solid angle is +delta_phi for delta_phi in (0, 2 pi).
    """
    if not 0.0 < delta_phi < 2.0 * math.pi:
        raise ValueError("delta_phi must lie in (0, 2*pi)")
    n_equator = max(1, math.ceil(delta_phi / (math.pi / 2)))
    azimuths = phi0 + delta_phi * (1.0 - np.arange(n_equator + 1) / n_equator)
    verts = [SpherePoint(0.0, 0.0)]
    verts += [SpherePoint(math.pi / 2, float(p)) for p in azimuths]
    return SpherePath(tuple(verts))


def octant_path() -> SpherePath:
    """Positively oriented eighth of the sphere (solid angle +pi/2)."""
    return SpherePath((
        SpherePoint(math.pi / 2, 0.0),
        SpherePoint(0.0, 0.0),
        SpherePoint(math.pi / 2, math.pi / 2),
    ))


def equator_path(n_vertices: int = 8) -> SpherePath:
    """Full equatorial loop with increasing azimuth (solid angle +2 pi)."""
    phis = -math.pi + 2 * math.pi * np.arange(n_vertices) / n_vertices
    return SpherePath(tuple(SpherePoint(math.pi / 2, float(p)) for p in phis))


def preset_path(spec: str) -> SpherePath:
    """Parse a named preset: 'lune:DPHI', 'octant' or 'equator'."""
    if spec == "octant":
        return octant_path()
    if spec == "equator":
        return equator_path()
    if spec.startswith("lune:"):
        return lune_path(float(spec.split(":", 1)[1]))
    raise ValueError(f"unknown path preset {spec!r}")


def _triangle_excess(r: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    """Signed solid angle of the geodesic triangle (r, a, b).

    l'Huilier's theorem for the magnitude, orientation of (r, a, b) for
    the sign; degenerate triangles contribute zero.
    """
    ca, cb, cc = np.dot(a, b), np.dot(r, b), np.dot(r, a)
    la = math.acos(min(max(ca, -1.0), 1.0))
    lb = math.acos(min(max(cb, -1.0), 1.0))
    lc = math.acos(min(max(cc, -1.0), 1.0))
    s = 0.5 * (la + lb + lc)
    under = (math.tan(0.5 * s) * math.tan(0.5 * (s - la))
             * math.tan(0.5 * (s - lb)) * math.tan(0.5 * (s - lc)))
    if under <= 0.0:
        return 0.0
    excess = 4.0 * math.atan(math.sqrt(under))
    orient = np.dot(r, np.cross(a, b))
    return math.copysign(excess, orient) if orient != 0.0 else 0.0


def _reference_point(cart: np.ndarray) -> np.ndarray:
    # Newell-style area vector points into the region the path encircles
    # counterclockwise; fall back to the vertex centroid, then to +z.
    area = np.cross(cart, np.roll(cart, -1, axis=0)).sum(axis=0)
    if np.linalg.norm(area) > 1e-9:
        return area / np.linalg.norm(area)
    centroid = cart.sum(axis=0)
    if np.linalg.norm(centroid) > 1e-9:
        return centroid / np.linalg.norm(centroid)
    return np.array([0.0, 0.0, 1.0])


def solid_angle(path: SpherePath) -> float:
    """Signed solid angle enclosed by a closed path, in (-2 pi, 2 pi]."""
    if not path.closed:
        raise ValueError("solid angle requires a closed path")
    cart = path.cartesian()
    ref = _reference_point(cart)
    total = sum(_triangle_excess(ref, a, b)
                for a, b in zip(cart, np.roll(cart, -1, axis=0)))
    # fan sum from an interior point covers the encircled region in
    # (0, 4 pi); fold to the orientation-signed smaller-region value
    if total > 2.0 * math.pi + 1e-12:
        total -= 4.0 * math.pi
    elif total < -(2.0 * math.pi + 1e-12):
        total += 4.0 * math.pi
    return total


class PhaseResult(NamedTuple):
    raw: float       # -solid_angle/2, unwrapped
    wrapped: float   # same value reduced to (-pi, pi]


def _wrap_pi(x: float) -> float:
    wrapped = math.remainder(x, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped = math.pi
    return wrapped


def geometric_phase(path: SpherePath) -> PhaseResult:
    """Geometric phase of a cyclic mode transformation: minus half the
    enclosed solid angle."""
    gamma = -0.5 * solid_angle(path)
    return PhaseResult(gamma, _wrap_pi(gamma))


def _slerp(u: np.ndarray, v: np.ndarray, fractions: np.ndarray) -> np.ndarray:
    dot = min(max(float(np.dot(u, v)), -1.0), 1.0)
    angle = math.acos(dot)
    if angle < 1e-15:
        return np.broadcast_to(u, (len(fractions), 3)).copy()
    s = math.sin(angle)
    w1 = np.sin((1.0 - fractions) * angle) / s
    w2 = np.sin(fractions * angle) / s
    return np.outer(w1, u) + np.outer(w2, v)


def sample_path(path: SpherePath, segments_per_arc: int) -> np.ndarray:
    """Unit vectors sampled uniformly (in angle) along each geodesic arc.

    For a closed path the start point is not repeated at the end.
    """
    cart = path.cartesian()
    pieces = []
    edges = list(zip(cart, np.roll(cart, -1, axis=0)))
    if not path.closed:
        edges = edges[:-1]
    fractions = np.arange(segments_per_arc) / segments_per_arc
    for u, v in edges:
        pieces.append(_slerp(u, v, fractions))
    if not path.closed:
        pieces.append(cart[-1][None, :])
    return np.vstack(pieces)


def berry_connection_phase(path: SpherePath, segments_per_arc: int = 10_000) -> float:
    """Discrete connection phase: sum of overlap arguments of the modes at
    densely sampled path points, closed around the loop.

    Independent check of :func:`geometric_phase`; agrees with -solid/2
    modulo 2 pi (the branch is fixed only mod 2 pi for loops enclosing a
    hemisphere or more).
    """
    if not path.closed:
        raise ValueError("connection phase requires a closed path")
    if segments_per_arc < 10:
        raise ValueError("need at least 10 segments per arc")
    points = sample_path(path, segments_per_arc)
    modes = np.array([
        mode_from_sphere(sphere_from_stokes(StokesVector(*p))).as_array()
        for p in points
    ])
    nxt = np.roll(modes, -1, axis=0)
    overlaps = np.sum(np.conj(modes) * nxt, axis=1)
    return float(np.sum(np.angle(overlaps)))


def mirror_path(path: SpherePath) -> SpherePath:
    """Reflection through the equatorial plane, vertex order preserved."""
    return SpherePath(tuple(v.mirrored() for v in path.vertices), path.closed)


class ConjugatePhases(NamedTuple):
    gamma_signal: float
    gamma_idler: float

    @property
    def relative(self) -> float:
        return self.gamma_idler - self.gamma_signal


def conjugation_pair(path: SpherePath) -> ConjugatePhases:
    """Geometric phases of signal and idler for a cyclic injection sweep.

    The idler mirrors the signal path through the equator, reversing the
    circulation, so its phase is exactly opposite and the relative phase
    gained per cycle equals the enclosed solid angle.  The independent
    mirror-path computation certifies the opposition; for a loop enclosing
    exactly a hemisphere the two orientations coincide modulo a full turn,
    so the check is made mod 2 pi and the returned pair is exact.
    """
    gamma_s = geometric_phase(path).raw
    gamma_mirror = geometric_phase(mirror_path(path)).raw
    if abs(math.remainder(gamma_mirror + gamma_s, 2.0 * math.pi)) > 1e-9:
        raise AssertionError(
            f"mirror phases fail conjugation: {gamma_s} vs {gamma_mirror}"
        )
    return ConjugatePhases(gamma_s, -gamma_s)
