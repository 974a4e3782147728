"""Stationary operating points of the free-running and injected OPO.

Resonant operation only (both detunings zero).  The free-running states
form a degenerate family: pump clipped at kappa/chi, total down-converted
intensity fixed, but the split between the two charge sectors and one
relative phase left free.  With a signal seed the degeneracy is lifted;
the intracavity pump modulus solves a quintic polynomial and the
down-converted amplitudes follow in closed form.

Phase gauge: the pump drive and the seed amplitude are taken real and
nonnegative throughout; all other phases are determined by the equations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dynamics import FiveModeState, OpoParams, from_rotated_basis
from .modes import SpherePoint, StokesVector

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class QuinticCoeffs:
    """Reduced drive strengths of the injected steady-state problem.

    a is the pump drive in field units (intracavity pump when undepleted),
    b the seed drive, clip = kappa/chi the saturated pump amplitude.  The
    stationary pump modulus x solves

        b^2 x + (x - a) (x - clip)^2 (x + clip)^2 = 0.
    """

    a: float
    b: float
    clip: float

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise ValueError("a and b must be nonnegative")
        if self.clip <= 0:
            raise ValueError("clip must be positive")

    @classmethod
    def from_params(cls, params: OpoParams, alpha_p_in: float,
                    seed_intensity: float) -> "QuinticCoeffs":
        seed_amp = math.sqrt(seed_intensity)
        return cls(
            a=params.eta_p * abs(alpha_p_in) / params.kappa_p,
            b=(params.eta_s * params.kappa * seed_amp
               / (params.chi * math.sqrt(params.kappa * params.kappa_p))),
            clip=params.kappa / params.chi,
        )

    def monomial_coefficients(self) -> np.ndarray:
        """Coefficients from degree 0 to 5 of the expanded polynomial."""
        a, c = self.a, self.clip
        return np.array([
            -a * c ** 4,
            c ** 4 + self.b ** 2,
            2 * a * c ** 2,
            -2 * c ** 2,
            -a,
            1.0,
        ])

    def evaluate(self, x: float) -> float:
        return (self.b ** 2 * x
                + (x - self.a) * (x - self.clip) ** 2 * (x + self.clip) ** 2)

    @property
    def scale(self) -> float:
        m = max(1.0, self.a, self.b, self.clip)
        return m ** 5


def quintic_real_roots(q: QuinticCoeffs) -> list[float]:
    """All real nonnegative roots (with multiplicity), ascending.

    Companion-matrix eigenvalues polished by a few Newton steps.  A double
    root at the clip value (seedless case) splits into a conjugate pair at
    the 1e-8 level, so the realness filter is set well above that.
    """
    coeffs = q.monomial_coefficients()
    raw = np.roots(coeffs[::-1])  # np.roots wants highest degree first
    real_tol = 1e-6 * max(1.0, q.clip)
    roots = []
    deriv = np.polynomial.Polynomial(coeffs).deriv()
    for z in raw:
        if abs(z.imag) > real_tol:
            continue
        x = z.real
        if x < -real_tol:
            continue
        for _ in range(3):  # Newton polish; skipped near repeated roots
            d = deriv(x)
            if abs(d) < 1e-9 * q.scale:
                break
            step = q.evaluate(x) / d
            if abs(step) > 0.1 * max(1.0, q.clip):
                break
            x -= step
        x = max(x, 0.0)
        if abs(q.evaluate(x)) <= RESIDUAL_TOL * max(1.0, q.scale):
            roots.append(float(x))
    roots.sort()
    return roots


class StableRoot(NamedTuple):
    value: float
    clipped: bool          # seedless above-threshold case, pump saturated
    candidates: tuple      # all roots strictly below clip


def select_stable(roots: list[float], q: QuinticCoeffs) -> StableRoot:
    """Largest root strictly below clip; stable branch of the quintic.

    With no seed (b = 0) the polynomial factors and the clip value is a
    double root whose numerical splitting (~1e-8) must not masquerade as a
    sub-clip root: above threshold the pump saturates at clip, returned
    with the ``clipped`` flag.  With a seed there is always a genuine root
    below clip (the polynomial changes sign on (0, clip)).
    """
    if q.b == 0:
        below = tuple(x for x in roots if x < q.clip * (1 - 1e-6))
        if not below:
            return StableRoot(q.clip, True, below)
        return StableRoot(max(below), False, below)
    below = tuple(x for x in roots if x < q.clip)
    if not below:
        raise AssertionError(
            "no root below clip with nonzero seed; quintic solve failed"
        )
    return StableRoot(max(below), False, below)


@dataclass(frozen=True)
class SteadySolution:
    """Stationary amplitudes in the injection-aligned basis."""

    alpha_p: complex
    alpha_s: complex
    alpha_i: complex
    stable: bool
    basis_point: SpherePoint

    def as_five_mode(self) -> FiveModeState:
        """Equivalent LG-basis state (primed amplitudes vanish)."""
        from .dynamics import RotatedState
        rot = RotatedState(self.alpha_p, self.alpha_s, self.alpha_i, 0.0, 0.0)
        return from_rotated_basis(rot, self.basis_point.theta, self.basis_point.phi)


def _require_resonant(params: OpoParams):
    if params.delta != 0.0 or params.delta_p != 0.0:
        raise NotImplementedError("steady states are implemented at resonance only")


def injected_steady(params: OpoParams, alpha_p_in: float, seed_intensity: float,
                    pt: SpherePoint) -> SteadySolution:
    """Closed-form stationary state for a seed of given intensity at ``pt``.

    Requires resonance and a nonzero seed.  The pump modulus comes from the
    stable quintic root; the gauge (real positive drives) makes alpha_p and
    alpha_s real positive and alpha_i real negative.
    """
    _require_resonant(params)
    if seed_intensity <= 0.0:
        raise ValueError(
            "seed intensity must be positive; the seedless family is "
            "degenerate, use free_running_steady"
        )
    q = QuinticCoeffs.from_params(params, alpha_p_in, seed_intensity)
    root = select_stable(quintic_real_roots(q), q)
    x = root.value
    kappa, chi = params.kappa, params.chi
    denom = kappa ** 2 - chi ** 2 * x ** 2
    seed_amp = math.sqrt(seed_intensity)
    alpha_s = params.eta_s * kappa * seed_amp / denom
    alpha_i = -params.eta_s * chi * seed_amp * x / denom
    return SteadySolution(
        alpha_p=complex(x),
        alpha_s=complex(alpha_s),
        alpha_i=complex(alpha_i),
        stable=x < params.clip,
        basis_point=pt,
    )


@dataclass(frozen=True)
class FreeRunFamily:
    """One member of the degenerate seedless steady-state family."""

    I_p: float
    I_total: float
    A: float
    B: float
    delta_theta: float


def threshold(params: OpoParams) -> float:
    """Pump drive amplitude at oscillation threshold."""
    return params.kappa_p * params.kappa / (params.eta_p * params.chi)


def free_running_steady(params: OpoParams, alpha_p_in: float,
                        A_fraction: float = 0.5, delta_theta: float = 0.0,
                        ) -> tuple[FreeRunFamily, FiveModeState]:
    """Stationary state of the seedless OPO with pump drive phase zero.

    Above threshold the pump clips at kappa/chi and the total signal/idler
    intensity is (kappa_p/chi)(a - kappa/chi); A_fraction splits it between
    the two charge sectors and delta_theta fixes the free relative phase
    theta_s_plus - theta_s_minus.  The saturated gain forces the phase sums
    theta_s_plus + theta_i_minus = theta_s_minus + theta_i_plus = pi.
    """
    _require_resonant(params)
    if not 0.0 <= A_fraction <= 1.0:
        raise ValueError("A_fraction must lie in [0, 1]")
    if alpha_p_in < 0:
        raise ValueError("pump drive must be real nonnegative (phase gauge)")
    a = params.eta_p * alpha_p_in / params.kappa_p
    clip = params.clip
    if a <= clip:
        family = FreeRunFamily(I_p=a * a, I_total=0.0, A=0.0, B=0.0,
                               delta_theta=delta_theta)
        return family, FiveModeState(alpha_p=complex(a))
    I_total = (params.kappa_p / params.chi) * (a - clip)
    A = math.sqrt(A_fraction * I_total)
    B = math.sqrt((1.0 - A_fraction) * I_total)
    state = FiveModeState(
        alpha_p=complex(clip),
        alpha_s_plus=A * np.exp(1j * delta_theta),
        alpha_s_minus=complex(B),
        alpha_i_plus=complex(-B),
        alpha_i_minus=-A * np.exp(-1j * delta_theta),
    )
    family = FreeRunFamily(I_p=clip ** 2, I_total=I_total, A=A, B=B,
                           delta_theta=delta_theta)
    return family, state


def downconverted_stokes(pt: SpherePoint) -> tuple[StokesVector, StokesVector]:
    """Stokes vectors of signal and idler for stable injected operation.

    The signal reproduces the injection point; the idler sits at its mirror
    image through the equatorial plane (opposite orbital angular momentum).
    """
    st, ct = math.sin(pt.theta), math.cos(pt.theta)
    p1 = st * math.cos(pt.phi)
    p2 = -st * math.sin(pt.phi)
    return StokesVector(p1, p2, ct), StokesVector(p1, p2, -ct)


SCAN_COLUMNS = [
    "a", "b", "stable_alpha_p", "clipped", "n_subclip_roots",
    "signal_intensity", "idler_intensity",
    "signal_p1", "signal_p2", "signal_p3", "idler_p1", "idler_p2", "idler_p3",
]


def scan_rows(params: OpoParams, pump_values, seed_intensities, pt: SpherePoint):
    """Rows for a parameter-scan table over (pump drive, seed intensity)."""
    rows = []
    for pump in pump_values:
        for seed_int in seed_intensities:
            q = QuinticCoeffs.from_params(params, pump, seed_int)
            root = select_stable(quintic_real_roots(q), q)
            if seed_int > 0 and not root.clipped:
                sol = injected_steady(params, pump, seed_int, pt)
                s_sig, s_idl = downconverted_stokes(pt)
                i_s = abs(sol.alpha_s) ** 2
                i_i = abs(sol.alpha_i) ** 2
                stokes = [s_sig.p1, s_sig.p2, s_sig.p3,
                          s_idl.p1, s_idl.p2, s_idl.p3]
            else:
                family, _ = free_running_steady(params, pump)
                i_s = i_i = family.I_total
                stokes = [0.0] * 6
            rows.append([q.a, q.b, root.value, int(root.clipped),
                         len(root.candidates), i_s, i_i, *stokes])
    return rows
