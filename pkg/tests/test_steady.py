import math

import numpy as np
import pytest

from oamopo.dynamics import (
    FiveModeState,
    InjectionDrive,
    OpoParams,
    constant_drive,
    integrate,
    rhs_lg_basis,
    turn_on_state,
)
from oamopo.modes import SpherePoint, mode_from_sphere, stokes_from_mode
from oamopo.steady import (
    QuinticCoeffs,
    downconverted_stokes,
    free_running_steady,
    injected_steady,
    quintic_real_roots,
    scan_rows,
    select_stable,
    threshold,
)

UNITY = OpoParams()

# Frozen before the implementation: bisection on b^2 x + (x-a)(x^2-1)^2
# over (0, 0.5) for a=0.5, b=0.2 (oracle reproduced in test below).
BISECTION_ROOT = 0.469147468721271
STEADY_ALPHA_S = 0.2564429191528321
STEADY_ALPHA_I = -0.12030954639204473


def bisect_root(f, lo, hi, iters=200):
    assert f(lo) < 0 < f(hi)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if f(mid) <= 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def run_to_steady(params, pump_in, seed_int, pt, t_end, dt=0.02):
    drive = InjectionDrive(pump_in, mode_from_sphere(pt, seed_int))
    return integrate(FiveModeState(), params, lambda t: drive,
                     t_end=t_end, dt=dt, sample_stride=10 ** 9)


class TestQuintic:
    def test_seedless_below_threshold_factored_roots(self):
        q = QuinticCoeffs(a=0.5, b=0.0, clip=1.0)
        roots = quintic_real_roots(q)
        np.testing.assert_allclose(roots, [0.5, 1.0, 1.0], atol=1e-6)

    def test_seedless_above_threshold_factored_roots(self):
        q = QuinticCoeffs(a=2.0, b=0.0, clip=1.0)
        roots = quintic_real_roots(q)
        np.testing.assert_allclose(roots, [1.0, 1.0, 2.0], atol=1e-6)

    def test_root_matches_independent_bisection(self):
        q = QuinticCoeffs(a=0.5, b=0.2, clip=1.0)
        oracle = bisect_root(q.evaluate, 0.0, 0.5)
        assert oracle == pytest.approx(BISECTION_ROOT, abs=1e-14)
        roots = quintic_real_roots(q)
        below = [x for x in roots if x < 0.5]
        assert len(below) == 1
        assert below[0] == pytest.approx(BISECTION_ROOT, abs=1e-12)

    def test_residuals_small_for_random_coefficients(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            q = QuinticCoeffs(a=rng.uniform(0, 3), b=rng.uniform(0, 1.5), clip=1.0)
            for x in quintic_real_roots(q):
                assert abs(q.evaluate(x)) < 1e-10 * max(1.0, q.scale)

    def test_scale_covariance_under_field_unit_rescale(self):
        q1 = QuinticCoeffs(a=0.7, b=0.3, clip=1.0)
        q10 = QuinticCoeffs(a=7.0, b=30.0, clip=10.0)  # b scales as field^... x10 each
        r1 = np.array(quintic_real_roots(q1))
        r10 = np.array(quintic_real_roots(q10))
        assert len(r1) == len(r10)
        np.testing.assert_allclose(r10, 10 * r1, atol=1e-9 * 10)

    def test_monotone_pump_depletion_in_seed(self):
        prev = None
        for b in np.linspace(0.0, 1.0, 21):
            q = QuinticCoeffs(a=0.8, b=float(b), clip=1.0)
            x = select_stable(quintic_real_roots(q), q).value
            if prev is not None:
                assert x < prev
            prev = x


class TestSelectStable:
    def test_below_threshold_transmitted_pump(self):
        q = QuinticCoeffs(a=0.5, b=0.0, clip=1.0)
        root = select_stable(quintic_real_roots(q), q)
        assert root.value == pytest.approx(0.5, abs=1e-9)
        assert not root.clipped

    def test_seedless_above_threshold_clips(self):
        q = QuinticCoeffs(a=2.0, b=0.0, clip=1.0)
        root = select_stable(quintic_real_roots(q), q)
        assert root.value == 1.0
        assert root.clipped

    def test_stable_root_attracts_dynamics(self):
        q = QuinticCoeffs(a=0.5, b=0.2, clip=1.0)
        root = select_stable(quintic_real_roots(q), q)
        traj = run_to_steady(UNITY, 0.5, 0.04, SpherePoint(math.pi / 2, 0.0),
                             t_end=40.0)
        assert abs(traj.final.alpha_p) == pytest.approx(root.value, abs=1e-6)


class TestInjectedSteady:
    def test_amplitude_ratio_identity(self):
        sol = injected_steady(UNITY, 0.5, 1e-6, SpherePoint(1.0, 0.5))
        ratio = sol.alpha_i / sol.alpha_s
        assert ratio == pytest.approx(-UNITY.chi * sol.alpha_p / UNITY.kappa,
                                      abs=1e-15)

    def test_frozen_scenario_amplitudes(self):
        sol = injected_steady(UNITY, 0.5, 0.04, SpherePoint(math.pi / 2, 0.0))
        assert sol.alpha_p.real == pytest.approx(BISECTION_ROOT, abs=1e-12)
        assert sol.alpha_s.real == pytest.approx(STEADY_ALPHA_S, abs=1e-12)
        assert sol.alpha_i.real == pytest.approx(STEADY_ALPHA_I, abs=1e-12)
        assert sol.stable

    def test_idler_weaker_than_signal(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            sol = injected_steady(
                UNITY, rng.uniform(0.1, 2.0), rng.uniform(0.01, 1.0),
                SpherePoint(rng.uniform(0, math.pi), rng.uniform(-3, 3)))
            assert abs(sol.alpha_i) < abs(sol.alpha_s)

    def test_is_fixed_point_of_lg_dynamics(self):
        pt = SpherePoint(1.1, -0.7)
        sol = injected_steady(UNITY, 0.5, 0.04, pt)
        state = sol.as_five_mode()
        drive = InjectionDrive(0.5, mode_from_sphere(pt, 0.04))
        residual = rhs_lg_basis(state, UNITY, drive).as_array()
        assert np.max(np.abs(residual)) < 1e-10

    def test_ode_attracts_to_closed_form(self):
        pt = SpherePoint(0.8, 2.0)
        sol = injected_steady(UNITY, 0.5, 0.04, pt)
        traj = run_to_steady(UNITY, 0.5, 0.04, pt, t_end=40.0)
        expected = sol.as_five_mode().as_array()
        err = np.linalg.norm(traj.states[-1] - expected) / np.linalg.norm(expected)
        assert err < 1e-6

    def test_detuned_operation_unsupported(self):
        params = OpoParams(delta=0.3)
        with pytest.raises(NotImplementedError):
            injected_steady(params, 0.5, 0.04, SpherePoint(1.0, 0.0))

    def test_zero_seed_rejected(self):
        with pytest.raises(ValueError, match="free_running_steady"):
            injected_steady(UNITY, 0.5, 0.0, SpherePoint(1.0, 0.0))


class TestFreeRunning:
    def test_at_threshold_no_oscillation(self):
        family, state = free_running_steady(UNITY, 1.0)
        assert family.I_total == 0.0
        assert family.I_p == pytest.approx(1.0)
        assert state.alpha_p == 1.0

    def test_above_threshold_clipping_and_intensity(self):
        family, _ = free_running_steady(UNITY, 2.0)
        assert family.I_p == pytest.approx(1.0)
        assert family.I_total == pytest.approx(1.0)

    def test_every_family_member_is_fixed_point(self):
        rng = np.random.default_rng(5)
        drive = InjectionDrive(2.0)
        for _ in range(20):
            _, state = free_running_steady(UNITY, 2.0,
                                           A_fraction=rng.uniform(0, 1),
                                           delta_theta=rng.uniform(-math.pi, math.pi))
            residual = rhs_lg_basis(state, UNITY, drive).as_array()
            assert np.max(np.abs(residual)) < 1e-10

    def test_family_stokes_mirror_symmetry(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            f, state = free_running_steady(UNITY, 2.0,
                                           A_fraction=rng.uniform(0.05, 0.95),
                                           delta_theta=rng.uniform(-math.pi, math.pi))
            s = stokes_from_mode(state.signal)
            i = stokes_from_mode(state.idler)
            assert s.p1 == pytest.approx(i.p1, abs=1e-12)
            assert s.p2 == pytest.approx(i.p2, abs=1e-12)
            assert s.p3 == pytest.approx(-i.p3, abs=1e-12)
            expected_p3 = (f.A ** 2 - f.B ** 2) / (f.A ** 2 + f.B ** 2)
            assert s.p3 == pytest.approx(expected_p3, abs=1e-12)
            # relative phase enters through 2AB(cos dt, sin dt)/I
            coeff = 2 * f.A * f.B / f.I_total
            assert s.p1 == pytest.approx(coeff * math.cos(f.delta_theta), abs=1e-12)
            assert s.p2 == pytest.approx(coeff * math.sin(f.delta_theta), abs=1e-12)

    def test_intensity_prefactor_arbitrated_by_dynamics(self):
        # kappa_p != chi separates (kappa_p/chi)(a - clip) from the
        # alternative (chi/kappa_p) prefactor by a factor 4
        params = OpoParams(kappa_p=2.0)
        family, _ = free_running_steady(params, 4.0)  # a = 2, clip = 1
        assert family.I_total == pytest.approx(2.0)
        traj = integrate(turn_on_state(1e-6), params,
                         constant_drive(4.0), t_end=80.0, dt=0.02,
                         sample_stride=10 ** 9)
        final = traj.final
        assert final.signal.intensity == pytest.approx(family.I_total, rel=1e-5)


class TestThreshold:
    def test_unity_params(self):
        assert threshold(UNITY) == pytest.approx(1.0)

    def test_doubling_chi_halves_threshold(self):
        assert threshold(OpoParams(chi=2.0)) == pytest.approx(0.5)

    def test_dynamics_bracket_threshold(self):
        # pump-only drive; the seed lives in the initial state only
        state0 = turn_on_state(1e-6)
        i0 = state0.signal.intensity + state0.idler.intensity
        for factor, grows in ((1.01, True), (0.99, False)):
            traj = integrate(state0, UNITY, constant_drive(factor * threshold(UNITY)),
                             t_end=150.0, dt=0.05, sample_stride=10 ** 9)
            i1 = traj.final.signal.intensity + traj.final.idler.intensity
            assert (i1 > 2 * i0) == grows

    def test_pump_only_clipping(self):
        traj = integrate(turn_on_state(), UNITY,
                         constant_drive(2.0), t_end=50.0, dt=0.02,
                         sample_stride=10 ** 9)
        assert traj.final.pump_intensity == pytest.approx(1.0, abs=1e-6)


class TestDownconvertedStokes:
    def test_polar_seed_opposite_charges(self):
        sig, idl = downconverted_stokes(SpherePoint(0.0, 0.0))
        np.testing.assert_allclose(sig.as_array(), [0, 0, 1], atol=1e-15)
        np.testing.assert_allclose(idl.as_array(), [0, 0, -1], atol=1e-15)

    def test_equator_self_mirror(self):
        sig, idl = downconverted_stokes(SpherePoint(math.pi / 2, 0.0))
        np.testing.assert_allclose(sig.as_array(), [1, 0, 0], atol=1e-12)
        np.testing.assert_allclose(idl.as_array(), [1, 0, 0], atol=1e-12)

    def test_matches_closed_form_steady_state(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            pt = SpherePoint(rng.uniform(0.1, math.pi - 0.1), rng.uniform(-3, 3))
            sol = injected_steady(UNITY, 0.5, 0.04, pt)
            state = sol.as_five_mode()
            sig, idl = downconverted_stokes(pt)
            np.testing.assert_allclose(stokes_from_mode(state.signal).as_array(),
                                       sig.as_array(), atol=1e-9)
            np.testing.assert_allclose(stokes_from_mode(state.idler).as_array(),
                                       idl.as_array(), atol=1e-9)

    def test_matches_ode_converged_state(self):
        rng = np.random.default_rng(13)
        for _ in range(6):
            pt = SpherePoint(rng.uniform(0.1, math.pi - 0.1), rng.uniform(-3, 3))
            traj = run_to_steady(UNITY, 0.5, 0.04, pt, t_end=40.0)
            sig, idl = downconverted_stokes(pt)
            np.testing.assert_allclose(
                stokes_from_mode(traj.final.signal).as_array(), sig.as_array(),
                atol=1e-6)
            np.testing.assert_allclose(
                stokes_from_mode(traj.final.idler).as_array(), idl.as_array(),
                atol=1e-6)


class TestScan:
    def test_rows_record_subclip_diagnostics(self):
        rows = scan_rows(UNITY, [0.5, 2.0], [0.0, 0.04], SpherePoint(1.0, 0.0))
        assert len(rows) == 4
        for row in rows:
            a, b, x, clipped, n_subclip = row[:5]
            if clipped:
                assert b == 0 and a > 1
            else:
                assert x < 1.0
