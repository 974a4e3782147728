"""Mutual interference of the down-converted beams on a virtual camera.

Signal and idler are synthesized on a common grid (equal waists, perfect
overlap, co-polarized) and superposed; for opposite-charge beams the
cross term produces a petal pattern whose orientation follows half the
relative phase.  A cyclic adiabatic injection sweep leaves exactly such a
relative phase between the beams (opposite geometric phases), so the
memory of the cycle shows up as a rigid rotation of the pattern.

The rotation estimator samples the azimuthal intensity profile on the
brightest ring, cross-correlates the before/after profiles, and reports
the shift reduced to the fundamental domain of the pattern's dominant
azimuthal harmonic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import SpherePath, conjugation_pair
from .modes import GridSpec, ModeVector, lg_field
from .steady import injected_steady
from .dynamics import OpoParams

AZIMUTHAL_BINS = 720


@dataclass(frozen=True)
class FieldMap:
    grid: GridSpec
    values: np.ndarray  # (n, n) complex samples

    def __post_init__(self):
        if self.values.shape != (self.grid.n, self.grid.n):
            raise ValueError("field samples do not match the grid")

    @property
    def power(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.pixel_area)


@dataclass(frozen=True)
class IntensityMap:
    grid: GridSpec
    values: np.ndarray  # (n, n) nonnegative reals

    def __post_init__(self):
        if self.values.shape != (self.grid.n, self.grid.n):
            raise ValueError("intensity samples do not match the grid")
        if np.any(self.values < 0):
            raise ValueError("negative intensity")

    @property
    def total(self) -> float:
        return float(np.sum(self.values) * self.grid.pixel_area)


def synthesize_field(v: ModeVector, extra_phase: float, grid: GridSpec) -> FieldMap:
    """Transverse field of a mode on the grid, with a global phase applied."""
    xx, yy = grid.mesh()
    values = (v.c_plus * lg_field(+1, xx, yy, grid)
              + v.c_minus * lg_field(-1, xx, yy, grid))
    return FieldMap(grid, np.exp(1j * extra_phase) * values)


def intensity(field: FieldMap) -> IntensityMap:
    return IntensityMap(field.grid, np.abs(field.values) ** 2)


def mutual_interference(signal: FieldMap, idler: FieldMap) -> IntensityMap:
    """Pixel-wise |E_s + E_i|^2 for equal-power co-polarized superposition."""
    if signal.grid != idler.grid:
        raise ValueError("signal and idler grids differ")
    return IntensityMap(signal.grid, np.abs(signal.values + idler.values) ** 2)


def _azimuthal_profile(imap: IntensityMap, radius: float,
                       bins: int = AZIMUTHAL_BINS) -> np.ndarray:
    """Bilinear samples of the map on a ring of given radius."""
    grid = imap.grid
    angles = 2 * math.pi * np.arange(bins) / bins
    xs = radius * np.cos(angles)
    ys = radius * np.sin(angles)
    extent = grid.half_width * grid.waist
    # pixel-center coordinates: x = -extent + (i + 0.5) * dx
    fx = (xs + extent) / grid.pixel_size - 0.5
    fy = (ys + extent) / grid.pixel_size - 0.5
    x0 = np.clip(np.floor(fx).astype(int), 0, grid.n - 2)
    y0 = np.clip(np.floor(fy).astype(int), 0, grid.n - 2)
    tx = np.clip(fx - x0, 0.0, 1.0)
    ty = np.clip(fy - y0, 0.0, 1.0)
    v = imap.values
    # row index = y, column index = x (meshgrid 'xy' layout)
    top = v[y0, x0] * (1 - tx) + v[y0, x0 + 1] * tx
    bot = v[y0 + 1, x0] * (1 - tx) + v[y0 + 1, x0 + 1] * tx
    return top * (1 - ty) + bot * ty


def _brightest_ring_radius(imap: IntensityMap) -> float:
    grid = imap.grid
    xx, yy = grid.mesh()
    rho = np.hypot(xx, yy)
    edges = np.linspace(0.0, grid.half_width * grid.waist, grid.n // 2)
    which = np.digitize(rho.ravel(), edges)
    sums = np.bincount(which, weights=imap.values.ravel(), minlength=len(edges) + 1)
    counts = np.bincount(which, minlength=len(edges) + 1)
    means = np.where(counts > 0, sums / np.maximum(counts, 1), 0.0)
    means[0] = means[len(edges)] = 0.0  # center pixel bin and overflow bin
    k = int(np.argmax(means))
    return 0.5 * (edges[k - 1] + edges[min(k, len(edges) - 1)])


def _dominant_harmonic(profile: np.ndarray) -> int:
    spectrum = np.abs(np.fft.rfft(profile - profile.mean()))
    spectrum[0] = 0.0
    return int(np.argmax(spectrum))


def pattern_rotation(before: IntensityMap, after: IntensityMap,
                     bins: int = AZIMUTHAL_BINS) -> float:
    """Rigid rotation angle carrying ``before`` onto ``after``.

    Cross-correlation of azimuthal profiles on the brightest ring; the
    argmax shift is reduced to (-pi/m, pi/m] where m is the dominant
    azimuthal harmonic (m = 2 for opposite unit charges), since rotations
    differing by 2 pi / m are indistinguishable for such patterns.
    """
    if before.grid != after.grid:
        raise ValueError("maps live on different grids")
    radius = _brightest_ring_radius(before)
    prof_before = _azimuthal_profile(before, radius, bins)
    prof_after = _azimuthal_profile(after, radius, bins)
    pb = prof_before - prof_before.mean()
    pa = prof_after - prof_after.mean()
    # circular cross-correlation via FFT; corr[k] = sum pa(x) pb(x - k)
    corr = np.fft.irfft(np.fft.rfft(pa) * np.conj(np.fft.rfft(pb)), n=bins)
    if np.ptp(corr) <= 1e-6 * max(1.0, float(np.max(np.abs(corr)))):
        raise ValueError("no azimuthal fringes; rotation undefined")
    m = _dominant_harmonic(prof_before)
    if m == 0:
        raise ValueError("no azimuthal fringes; rotation undefined")
    shift = (2 * math.pi / bins) * int(np.argmax(corr))
    period = 2 * math.pi / m
    folded = math.remainder(shift, period)
    if folded <= -period / 2:
        folded += period
    return folded


def render_cycle(params: OpoParams, alpha_p_in: float, I_s_in: float,
                 path: SpherePath, grid: GridSpec,
                 ) -> tuple[IntensityMap, IntensityMap, float]:
    """Mutual interference before and after one cyclic injection sweep.

    The beams are the stationary down-converted fields at the starting
    vertex; the cycle multiplies them by their (opposite) geometric
    phases.  Returns both frames and the measured pattern rotation.
    """
    if not path.closed:
        raise ValueError("render_cycle needs a closed path")
    start = path.vertices[0]
    sol = injected_steady(params, alpha_p_in, I_s_in, start)
    state = sol.as_five_mode()
    pair = conjugation_pair(path)
    sig0 = synthesize_field(state.signal, 0.0, grid)
    idl0 = synthesize_field(state.idler, 0.0, grid)
    sig1 = synthesize_field(state.signal, pair.gamma_signal, grid)
    idl1 = synthesize_field(state.idler, pair.gamma_idler, grid)
    before = mutual_interference(sig0, idl0)
    after = mutual_interference(sig1, idl1)
    return before, after, pattern_rotation(before, after)
