"""Spectral Fokker-Planck solver, isochronal chart and manifold correction.

The linearized-operator assembly is cross-checked against finite differences
of the nonlinear right side (exact up to rounding: the nonlinearity is
quadratic), and the correction solve against its defining equation and the
rotation symmetry n_psi = n_0 rotated by psi.
"""

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rotatorlab.errors import (
    ConvergenceError,
    NoPeriodError,
    PhaseUndefinedError,
    ProjectionError,
    ResolutionWarning,
    StabilityError,
)
from rotatorlab.kernel import TWO_PI, slope_pairing, solve_order_parameter
from rotatorlab.potential import TrigPolynomial
from rotatorlab.reduced_flow import period_first_harmonic
from rotatorlab.spectral_pde import (
    ManifoldCorrection,
    PhaseTracker,
    RunConfig,
    SpectralDensity,
    SpectralSolver,
    isochronal_projection,
    linearized_matrix,
    measure_phase,
    measure_period,
    run_trajectory,
    snapshot_csv,
    solve_manifold_correction,
    stationary_state,
    step,
    trajectory_csv,
    uniform_state,
)

N_MODES = 50


@pytest.fixture(scope="module")
def q0(sd2):
    return stationary_state(sd2, N_MODES)


class TestSpectralDensity:
    def test_samples_match_density(self, sd2, q0):
        theta = TWO_PI * np.arange(512) / 512
        assert np.allclose(q0.samples(512), sd2.density(theta), atol=1e-12)

    def test_order_parameter_of_stationary(self, sd2):
        for psi in (0.0, 0.7, -2.0):
            z = stationary_state(sd2, 30, psi=psi).order_parameter()
            assert abs(z) == pytest.approx(sd2.r, rel=1e-12)
            assert math.atan2(z.imag, z.real) == pytest.approx(psi, abs=1e-12)

    def test_l2_distance(self, q0):
        other = q0.coeffs.copy()
        other[3] += 0.25
        # only mode 3 differs: distance sqrt(2*pi*2)*0.25
        assert q0.l2_distance(other) == pytest.approx(
            0.25 * math.sqrt(2.0 * TWO_PI), rel=1e-12
        )
        assert q0.l2_distance(q0.coeffs) == 0.0

    def test_resolution_alarm(self, sd2, q0):
        assert q0.well_resolved()
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            short = stationary_state(sd2, 5)
        assert not short.well_resolved()
        assert any(issubclass(w.category, ResolutionWarning) for w in caught)

    def test_uniform_has_no_phase(self):
        u = uniform_state(20)
        assert u.order_parameter() == 0.0
        with pytest.raises(PhaseUndefinedError):
            measure_phase(u)


class TestPhaseTracking:
    @settings(max_examples=20, deadline=None)
    @given(psi=st.floats(-math.pi, math.pi, exclude_min=True, exclude_max=True))
    def test_measure_phase_of_rotated_state(self, sd2, psi):
        assert measure_phase(stationary_state(sd2, 20, psi=psi)) == pytest.approx(
            psi, abs=1e-12
        )

    def test_tracker_unwraps_across_pi(self, sd2):
        tracker = PhaseTracker()
        targets = np.linspace(0.0, 3.0 * TWO_PI, 120)
        got = [tracker.update(stationary_state(sd2, 12, psi=p)) for p in targets]
        assert np.allclose(got, targets, atol=1e-10)


class TestSolverInvariants:
    def test_stationary_is_fixed(self, sd2, q0, table1_potential):
        after = step(q0, table1_potential, 2.0, 0.0, dt=1e-3)
        assert after.l2_distance(q0.coeffs) < 1e-10

    def test_uniform_exactly_invariant(self, table1_potential):
        u = uniform_state(N_MODES)
        after = step(u, table1_potential, 2.0, 0.0, dt=1e-3)
        assert np.array_equal(after.coeffs, u.coeffs)

    def test_uniform_invariant_under_constant_drive(self):
        # translation-invariant profile: the drive only relabels angles
        u = uniform_state(40)
        after = step(u, TrigPolynomial(a0=1.0), 2.0, 0.3, dt=0.01)
        assert np.max(np.abs(after.coeffs - u.coeffs)) < 1e-15

    def test_traveling_wave(self, sd2, q0):
        # V' = 1: the whole manifold rotates rigidly at speed -delta
        delta = 0.1
        cfg = RunConfig(n_modes=N_MODES, dt=0.01, t_end=5.0, sample_every=0.05)
        trace = run_trajectory(TrigPolynomial(a0=1.0), 2.0, delta, cfg, initial=q0, sd=sd2)
        slope = np.polyfit(trace.t, trace.phase, 1)[0]
        assert slope == pytest.approx(-delta, abs=1e-9)
        k = np.arange(N_MODES + 1)
        rotated = q0.coeffs * np.exp(-1j * k * (-delta * trace.final.time))
        assert trace.final.l2_distance(rotated) < 1e-8

    def test_mass_pinned(self, q0, table1_potential):
        solver = SpectralSolver(table1_potential, 2.0, 0.05, N_MODES, 0.01)
        out = solver.advance(q0, 200)
        assert out.coeffs[0] == 1.0 / TWO_PI
        assert np.min(out.samples(512)) > 0.0

    def test_stability_guard(self, table1_potential):
        solver = SpectralSolver(table1_potential, 2.0, 0.08, N_MODES, 0.01)
        with pytest.raises(StabilityError) as err:
            SpectralSolver(table1_potential, 2.0, 0.08, N_MODES, dt=0.05)
        assert err.value.bound == pytest.approx(solver.stability_bound, rel=1e-12)
        assert err.value.dt == 0.05


class TestIsochronalProjection:
    def test_recovers_manifold_phase(self, sd2):
        for psi in (0.0, 0.7, 2.9, -1.3):
            state = stationary_state(sd2, N_MODES, psi=psi)
            got = isochronal_projection(state, sd2)
            assert math.remainder(got - psi, TWO_PI) == pytest.approx(0.0, abs=1e-10)

    def test_even_perturbation_keeps_phase(self, sd2, q0):
        c = q0.coeffs.copy()
        c[2] += 1e-3  # real coefficient: profile stays even around 0
        assert abs(isochronal_projection(SpectralDensity(c), sd2)) < 1e-8

    def test_no_root_in_window(self, sd2, q0):
        c = q0.coeffs.copy()
        c[3] += 0.02j  # odd third harmonic: root moves, arg Z does not
        root = isochronal_projection(SpectralDensity(c), sd2)
        assert abs(root) > 1e-3
        with pytest.raises(ProjectionError):
            isochronal_projection(SpectralDensity(c), sd2, window=abs(root) / 2)


class TestLinearizedOperator:
    def test_annihilates_density_slope(self, sd2):
        N = 32
        A = linearized_matrix(sd2, 0.4, N)
        m = np.arange(-N, N + 1)
        table = sd2.table
        q_hat = table.ratios[np.abs(m)] * np.exp(-1j * m * 0.4) / TWO_PI
        qprime = 1j * m * q_hat
        assert np.max(np.abs(A @ qprime)) < 1e-12

    def test_matches_finite_difference_of_rhs(self, sd2, rng):
        # the delta = 0 right side is quadratic in c, so the symmetric
        # difference equals the linearization exactly (up to rounding)
        N = 24
        solver = SpectralSolver(TrigPolynomial(a0=0.0), 2.0, 0.0, N, 1e-3)
        A = linearized_matrix(sd2, 0.0, N)
        q = stationary_state(sd2, N).coeffs
        u = (rng.standard_normal(N + 1) + 1j * rng.standard_normal(N + 1)) * 0.1
        u[0] = 0.0
        eps = 1e-3
        fd = (solver.rhs(q + eps * u) - solver.rhs(q - eps * u)) / (2.0 * eps)
        u_two = np.concatenate([np.conj(u[:0:-1]), u])
        lin = -(A @ u_two)[N:]
        assert np.max(np.abs(fd - lin)) < 1e-10


class TestManifoldCorrection:
    def test_constant_drive_needs_no_correction(self, sd2):
        corr = solve_manifold_correction(0.3, TrigPolynomial(a0=1.0), sd2, n_modes=48)
        assert np.max(np.abs(corr.coeffs)) < 1e-12

    def test_residual_and_conditioning(self, sd2, table1_potential):
        corr = solve_manifold_correction(0.0, table1_potential, sd2)
        assert corr.residual < 1e-10
        assert corr.condition < 1e6
        assert corr.coeff(0) == 0.0

    def test_hermitian_coefficients(self, sd2, table1_potential):
        corr = solve_manifold_correction(1.1, table1_potential, sd2, n_modes=48)
        for m in (1, 5, 17):
            assert corr.coeff(-m) == pytest.approx(np.conj(corr.coeff(m)), abs=1e-15)

    def test_rotation_equivariance(self, sd2, table1_potential):
        # n_psi[V'] equals the phase-0 correction of the co-rotated drive,
        # carried back: n_psi[V'] = rotate(n_0[V'(. + psi)], psi)
        psi = 0.9
        co_rotated = table1_potential.rotated(-psi)
        base = solve_manifold_correction(0.0, co_rotated, sd2, n_modes=48)
        rot = solve_manifold_correction(psi, table1_potential, sd2, n_modes=48)
        m = np.arange(-48, 49)
        expected = base.coeffs * np.exp(-1j * m * psi)
        assert np.max(np.abs(rot.coeffs - expected)) < 1e-10

    def test_zero_pairing_gauge(self, sd2, table1_potential):
        corr = solve_manifold_correction(0.7, table1_potential, sd2)
        n = 512
        theta = TWO_PI * np.arange(n) / n
        assert abs(slope_pairing(corr.profile(theta), sd2, psi=0.7, n=n)) < 1e-10

    def test_unsynchronized_rejected(self, table1_potential):
        sd_flat = solve_order_parameter(0.8)
        with pytest.raises(ValueError):
            solve_manifold_correction(0.0, table1_potential, sd_flat)

    def test_conditioning_guard(self, sd2, table1_potential):
        with pytest.raises(ConvergenceError):
            solve_manifold_correction(0.0, table1_potential, sd2, cond_limit=10.0)


class TestMeasurePeriod:
    def test_quick_period_against_reduction(self, table1_potential):
        # coarse delta: measured period sits a couple percent above tau/delta
        delta = 0.25
        T = measure_period(table1_potential, 2.0, delta, RunConfig(windings=2))
        tau = period_first_harmonic(1.1, 2.0)
        dev = T / (tau / delta) - 1.0
        assert 0.005 < dev < 0.03

    def test_pinned_flow_has_no_period(self):
        vp = TrigPolynomial(a0=1.0, a=(0.0,), b=(2.0,))
        with pytest.raises(NoPeriodError):
            measure_period(vp, 2.0, 0.1)


class TestRunConfigAndOutputs:
    def test_config_round_trip(self):
        cfg = RunConfig(n_modes=40, dt=0.02, t_end=7.0, windings=3, delta=0.1)
        back = RunConfig.from_json(cfg.to_json())
        assert back == cfg

    def test_config_ignores_unknown_keys(self):
        cfg = RunConfig.from_json('{"dt": 0.5, "comment": "scratch"}')
        assert cfg.dt == 0.5

    def test_trajectory_csv(self, sd2, q0, table1_potential):
        cfg = RunConfig(n_modes=N_MODES, dt=0.01, t_end=0.2, sample_every=0.05)
        trace = run_trajectory(table1_potential, 2.0, 0.0, cfg, initial=q0, sd=sd2)
        text = trajectory_csv(trace)
        lines = text.strip().split("\n")
        assert lines[0] == "t,phase_unwrapped,Z_re,Z_im,dist_to_M"
        assert len(lines) == len(trace.t) + 1
        row = [float(v) for v in lines[1].split(",")]
        assert row[0] == 0.0 and math.isnan(row[4])

    def test_distance_tracking_on_manifold(self, sd2, q0, table1_potential):
        cfg = RunConfig(n_modes=N_MODES, dt=0.01, t_end=0.2, sample_every=0.05)
        trace = run_trajectory(
            table1_potential, 2.0, 0.0, cfg, initial=q0, sd=sd2, track_distance=True
        )
        assert np.max(trace.dist) < 1e-8

    def test_snapshot_csv(self, q0):
        lines = snapshot_csv(q0, n=64).strip().split("\n")
        assert lines[0] == "theta,p"
        assert len(lines) == 65
        vals = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
        assert np.all(vals[:, 1] > 0.0)

    def test_snapshot_collection(self, sd2, q0, table1_potential):
        cfg = RunConfig(n_modes=N_MODES, dt=0.01, t_end=1.0)
        trace = run_trajectory(
            table1_potential, 2.0, 0.0, cfg,
            initial=q0, sd=sd2, collect_snapshots=True, snapshot_every=0.25,
        )
        assert len(trace.snapshots) == 5  # t = 0, .25, .5, .75, 1.0
        t_last, c_last = trace.snapshots[-1]
        assert t_last == pytest.approx(1.0)
        assert np.array_equal(c_last, trace.final.coeffs)
