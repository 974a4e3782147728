"""Intracavity coupled-mode dynamics of the injected OPO.

Five complex amplitudes evolve: the TEM00 pump and the LG+/LG- components
of signal and idler.  The equations of motion are

    d a_p  /dt = -(kp + i Dp) a_p + chi (a_s+ a_i- + a_s- a_i+) + eta_p a_p_in
    d a_s+-/dt = -(k + i D) a_s+- - chi conj(a_i-+) a_p + eta_s seed_+-
    d a_i+-/dt = -(k + i D) a_i+- - chi conj(a_s-+) a_p

The seed drives the signal only.  A unitary change of basis aligned with
the injection point (theta, phi) concentrates the drive in a single
rotated signal amplitude; the orthogonal ("primed") amplitudes are
undriven and decay whenever chi |a_p| < kappa.

Integration is fixed-step classical RK4 for reproducibility; the step is
guarded against the fastest linear rate.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .modes import (
    ModeVector,
    SpherePoint,
    StokesVector,
    mode_from_sphere,
    stokes_from_mode,
)

# dt * max rate must stay below this for the fixed-step integrator
STEP_GUARD = 0.1


@dataclass(frozen=True)
class OpoParams:
    """Cavity and crystal constants (rates in 1/time, chi in 1/(time*field))."""

    kappa_p: float = 1.0
    kappa: float = 1.0
    delta_p: float = 0.0
    delta: float = 0.0
    chi: float = 1.0
    eta_p: float = 1.0
    eta_s: float = 1.0

    def __post_init__(self):
        for name in ("kappa_p", "kappa", "chi", "eta_p", "eta_s"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def from_mirror_specs(cls, t_pump: float, tau_pump: float,
                          t_signal: float, tau_signal: float, **kwargs) -> "OpoParams":
        """Input couplings from mirror transmissions and round-trip times."""
        return cls(eta_p=math.sqrt(t_pump) / tau_pump,
                   eta_s=math.sqrt(t_signal) / tau_signal, **kwargs)

    @property
    def max_rate(self) -> float:
        return max(self.kappa_p, self.kappa, abs(self.delta_p), abs(self.delta))

    @property
    def clip(self) -> float:
        """Pump amplitude above which parametric gain beats cavity loss."""
        return self.kappa / self.chi


@dataclass(frozen=True)
class FiveModeState:
    alpha_p: complex = 0.0
    alpha_s_plus: complex = 0.0
    alpha_s_minus: complex = 0.0
    alpha_i_plus: complex = 0.0
    alpha_i_minus: complex = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha_p, self.alpha_s_plus, self.alpha_s_minus,
                         self.alpha_i_plus, self.alpha_i_minus], dtype=complex)

    @classmethod
    def from_array(cls, y: Sequence[complex]) -> "FiveModeState":
        return cls(*(complex(c) for c in y))

    @property
    def signal(self) -> ModeVector:
        return ModeVector(self.alpha_s_plus, self.alpha_s_minus)

    @property
    def idler(self) -> ModeVector:
        return ModeVector(self.alpha_i_plus, self.alpha_i_minus)

    @property
    def pump_intensity(self) -> float:
        return abs(self.alpha_p) ** 2


@dataclass(frozen=True)
class RotatedState:
    """Amplitudes in the injection-aligned basis (primed = undriven pair)."""

    alpha_p: complex = 0.0
    alpha_s: complex = 0.0
    alpha_i: complex = 0.0
    alpha_s_prime: complex = 0.0
    alpha_i_prime: complex = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha_p, self.alpha_s, self.alpha_i,
                         self.alpha_s_prime, self.alpha_i_prime], dtype=complex)


@dataclass(frozen=True)
class InjectionDrive:
    alpha_p_in: complex = 0.0
    seed: ModeVector = field(default_factory=lambda: ModeVector(0.0, 0.0))

    @classmethod
    def from_sphere(cls, alpha_p_in: complex, pt: SpherePoint,
                    seed_intensity: float) -> "InjectionDrive":
        return cls(alpha_p_in, mode_from_sphere(pt, seed_intensity))


DriveSchedule = Callable[[float], InjectionDrive]


def turn_on_state(scale: float = 1e-8) -> FiveModeState:
    """Deterministic tiny perturbation used to start above-threshold runs.

    The saturated phase relations pair each signal amplitude with the
    opposite-sign conjugate idler amplitude, so the growing direction is
    (+, +, -, -) across (s+, s-, i+, i-); an equal-sign perturbation would
    lie entirely in the decaying sector and never oscillate.
    """
    return FiveModeState(0.0, scale, scale, -scale, -scale)


def constant_drive(alpha_p_in: complex,
                   seed: ModeVector | None = None) -> DriveSchedule:
    drive = InjectionDrive(alpha_p_in, seed if seed is not None else ModeVector(0.0, 0.0))
    return lambda t: drive


def rhs_lg_basis(state: FiveModeState, params: OpoParams,
                 drive: InjectionDrive) -> FiveModeState:
    """Time derivative of the five amplitudes in the LG basis."""
    kp = params.kappa_p + 1j * params.delta_p
    k = params.kappa + 1j * params.delta
    chi = params.chi
    d = _rhs_raw(state.alpha_p, state.alpha_s_plus, state.alpha_s_minus,
                 state.alpha_i_plus, state.alpha_i_minus,
                 kp, k, chi, params.eta_p, params.eta_s,
                 complex(drive.alpha_p_in), complex(drive.seed.c_plus),
                 complex(drive.seed.c_minus))
    return FiveModeState(*d)


def _rhs_raw(yp, ysp, ysm, yip, yim, kp, k, chi, eta_p, eta_s, pump_in, sp, sm):
    dp = -kp * yp + chi * (ysp * yim + ysm * yip) + eta_p * pump_in
    dsp = -k * ysp - chi * yim.conjugate() * yp + eta_s * sp
    dsm = -k * ysm - chi * yip.conjugate() * yp + eta_s * sm
    dip = -k * yip - chi * ysm.conjugate() * yp
    dim_ = -k * yim - chi * ysp.conjugate() * yp
    return dp, dsp, dsm, dip, dim_


def _rotation_entries(theta: float, phi: float):
    c = math.cos(theta / 2.0)
    s = math.sin(theta / 2.0)
    ep = cmath.exp(1j * phi / 2.0)
    em = cmath.exp(-1j * phi / 2.0)
    return c, s, ep, em


def to_rotated_basis(state: FiveModeState, theta: float, phi: float) -> RotatedState:
    """Unitary map from LG amplitudes to the injection-aligned basis.

    The signal and idler use different row orders: at theta = 0 the driven
    signal amplitude is a_s+ while the driven idler amplitude is a_i-
    (opposite charges, as required by angular-momentum conservation).
    """
    c, s, ep, em = _rotation_entries(theta, phi)
    return RotatedState(
        alpha_p=state.alpha_p,
        alpha_s=c * ep * state.alpha_s_plus + s * em * state.alpha_s_minus,
        alpha_i=s * ep * state.alpha_i_plus + c * em * state.alpha_i_minus,
        alpha_s_prime=-s * ep * state.alpha_s_plus + c * em * state.alpha_s_minus,
        alpha_i_prime=c * ep * state.alpha_i_plus - s * em * state.alpha_i_minus,
    )


def from_rotated_basis(state: RotatedState, theta: float, phi: float) -> FiveModeState:
    """Exact inverse of :func:`to_rotated_basis` (conjugate transpose)."""
    c, s, ep, em = _rotation_entries(theta, phi)
    return FiveModeState(
        alpha_p=state.alpha_p,
        alpha_s_plus=c * em * state.alpha_s - s * em * state.alpha_s_prime,
        alpha_s_minus=s * ep * state.alpha_s + c * ep * state.alpha_s_prime,
        alpha_i_plus=s * em * state.alpha_i + c * em * state.alpha_i_prime,
        alpha_i_minus=c * ep * state.alpha_i - s * ep * state.alpha_i_prime,
    )


def rhs_rotated(state: RotatedState, params: OpoParams, pump_in: complex,
                seed_amplitude: float) -> RotatedState:
    """Time derivative in the rotated basis; the seed drives alpha_s only.

    The pump couples to (a_s a_i + a's a'i), which is the exact image of
    the LG-basis coupling under the basis change; with the primed pair at
    zero this reduces to the three-mode system (pump, a_s, a_i).
    """
    kp = params.kappa_p + 1j * params.delta_p
    k = params.kappa + 1j * params.delta
    chi = params.chi
    return RotatedState(
        alpha_p=(-kp * state.alpha_p
                 + chi * (state.alpha_s * state.alpha_i
                          + state.alpha_s_prime * state.alpha_i_prime)
                 + params.eta_p * pump_in),
        alpha_s=(-k * state.alpha_s
                 - chi * state.alpha_i.conjugate() * state.alpha_p
                 + params.eta_s * seed_amplitude),
        alpha_i=(-k * state.alpha_i
                 - chi * state.alpha_s.conjugate() * state.alpha_p),
        alpha_s_prime=(-k * state.alpha_s_prime
                       - chi * state.alpha_i_prime.conjugate() * state.alpha_p),
        alpha_i_prime=(-k * state.alpha_i_prime
                       - chi * state.alpha_s_prime.conjugate() * state.alpha_p),
    )


class IntegrationError(RuntimeError):
    """Raised when the trajectory leaves the finite range (bad step or blow-up)."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} at t={time:.6g}")
        self.time = time


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), 5), complex

    @property
    def final(self) -> FiveModeState:
        return FiveModeState.from_array(self.states[-1])

    def state_at(self, index: int) -> FiveModeState:
        return FiveModeState.from_array(self.states[index])


def integrate(state0: FiveModeState, params: OpoParams,
              drive_schedule: DriveSchedule, t_end: float, dt: float,
              sample_stride: int = 1, t0: float = 0.0) -> Trajectory:
    """Fixed-step RK4 trajectory sampled every ``sample_stride`` steps.

    The schedule is evaluated at step midpoints as required by RK4, so a
    time-dependent drive retains fourth-order accuracy if it is smooth.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if dt * params.max_rate >= STEP_GUARD:
        raise ValueError(
            f"dt*max_rate = {dt * params.max_rate:.3g} >= {STEP_GUARD}; reduce dt"
        )
    n_steps = max(1, int(round((t_end - t0) / dt)))

    def drive_at(t: float):
        d = drive_schedule(t)
        return complex(d.alpha_p_in), complex(d.seed.c_plus), complex(d.seed.c_minus)

    return _integrate_raw(state0.as_array(), params, drive_at, n_steps, dt,
                          sample_stride, t0)


def _integrate_raw(y0: np.ndarray, params: OpoParams, drive_at, n_steps: int,
                   dt: float, sample_stride: int, t0: float) -> Trajectory:
    """Core RK4 loop on plain complex scalars (drive_at(t) -> 3 complex)."""
    kp = params.kappa_p + 1j * params.delta_p
    k = params.kappa + 1j * params.delta
    chi, eta_p, eta_s = params.chi, params.eta_p, params.eta_s
    yp, ysp, ysm, yip, yim = (complex(c) for c in y0)

    times = [t0]
    samples = [(yp, ysp, ysm, yip, yim)]
    half = dt / 2.0
    sixth = dt / 6.0
    for step in range(n_steps):
        t = t0 + step * dt
        d0 = drive_at(t)
        dh = drive_at(t + half)
        d1 = drive_at(t + dt)
        a1 = _rhs_raw(yp, ysp, ysm, yip, yim, kp, k, chi, eta_p, eta_s, *d0)
        a2 = _rhs_raw(yp + half * a1[0], ysp + half * a1[1], ysm + half * a1[2],
                      yip + half * a1[3], yim + half * a1[4],
                      kp, k, chi, eta_p, eta_s, *dh)
        a3 = _rhs_raw(yp + half * a2[0], ysp + half * a2[1], ysm + half * a2[2],
                      yip + half * a2[3], yim + half * a2[4],
                      kp, k, chi, eta_p, eta_s, *dh)
        a4 = _rhs_raw(yp + dt * a3[0], ysp + dt * a3[1], ysm + dt * a3[2],
                      yip + dt * a3[3], yim + dt * a3[4],
                      kp, k, chi, eta_p, eta_s, *d1)
        yp += sixth * (a1[0] + 2 * a2[0] + 2 * a3[0] + a4[0])
        ysp += sixth * (a1[1] + 2 * a2[1] + 2 * a3[1] + a4[1])
        ysm += sixth * (a1[2] + 2 * a2[2] + 2 * a3[2] + a4[2])
        yip += sixth * (a1[3] + 2 * a2[3] + 2 * a3[3] + a4[3])
        yim += sixth * (a1[4] + 2 * a2[4] + 2 * a3[4] + a4[4])

        mag = abs(yp) + abs(ysp) + abs(ysm) + abs(yip) + abs(yim)
        if not mag < 1e12:  # catches NaN as well as overflow
            raise IntegrationError("trajectory diverged (NaN or overflow)",
                                   t0 + (step + 1) * dt)
        if (step + 1) % sample_stride == 0 or step == n_steps - 1:
            times.append(t0 + (step + 1) * dt)
            samples.append((yp, ysp, ysm, yip, yim))

    return Trajectory(np.array(times), np.array(samples, dtype=complex))


def _safe_stokes(v: ModeVector) -> StokesVector:
    if v.intensity <= 0.0:
        return StokesVector(0.0, 0.0, 0.0)
    return stokes_from_mode(v)


def trajectory_rows(traj: Trajectory):
    """Per-sample CSV rows: time, amplitudes, intensities, Stokes vectors."""
    rows = []
    for t, y in zip(traj.times, traj.states):
        state = FiveModeState.from_array(y)
        sig, idl = state.signal, state.idler
        ss, si = _safe_stokes(sig), _safe_stokes(idl)
        rows.append([t,
                     y[0].real, y[0].imag, y[1].real, y[1].imag,
                     y[2].real, y[2].imag, y[3].real, y[3].imag,
                     y[4].real, y[4].imag,
                     state.pump_intensity, sig.intensity, idl.intensity,
                     ss.p1, ss.p2, ss.p3, si.p1, si.p2, si.p3])
    return rows


TRAJECTORY_COLUMNS = [
    "t", "re_alpha_p", "im_alpha_p", "re_alpha_s_plus", "im_alpha_s_plus",
    "re_alpha_s_minus", "im_alpha_s_minus", "re_alpha_i_plus", "im_alpha_i_plus",
    "re_alpha_i_minus", "im_alpha_i_minus", "pump_intensity",
    "signal_intensity", "idler_intensity",
    "signal_p1", "signal_p2", "signal_p3", "idler_p1", "idler_p2", "idler_p3",
]
