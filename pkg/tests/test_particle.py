"""Interacting-ensemble simulator: reproducibility, statistics, interchange formats."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rotatorlab.errors import NoPeriodError
from rotatorlab.kernel import TWO_PI, solve_order_parameter
from rotatorlab.potential import TrigPolynomial
from rotatorlab.particle import (
    ParticleEnsemble,
    em_step,
    empirical_density,
    init_from_density,
    init_from_stationary,
    init_uniform,
    measure_period_particles,
    phases_snapshot,
    run_particles,
    trace_csv,
)

R2 = 0.831462024754257


class TestReproducibility:
    def test_identical_seed_gives_bitwise_identical_run(self, table1_potential):
        a = run_particles(init_uniform(400, seed=3), table1_potential, 2.0, 0.05, 0.5, 0.01)
        b = run_particles(init_uniform(400, seed=3), table1_potential, 2.0, 0.05, 0.5, 0.01)
        assert np.array_equal(a.final.phases, b.final.phases)

    def test_chained_runs_equal_one_long_run(self, table1_potential):
        start = init_uniform(300, seed=7)
        whole = run_particles(start, table1_potential, 2.0, 0.05, 0.25, 0.01)
        head = run_particles(start.copy(), table1_potential, 2.0, 0.05, 0.1, 0.01)
        tail = run_particles(head.final, table1_potential, 2.0, 0.05, 0.15, 0.01)
        assert np.array_equal(whole.final.phases, tail.final.phases)
        assert tail.final.step_index == whole.final.step_index

    def test_sampling_stride_does_not_touch_the_dynamics(self, table1_potential):
        coarse = run_particles(init_uniform(200, seed=1), table1_potential, 2.0, 0.05, 0.3, 0.01, sample_every=0.1)
        fine = run_particles(init_uniform(200, seed=1), table1_potential, 2.0, 0.05, 0.3, 0.01, sample_every=0.01)
        assert np.array_equal(coarse.final.phases, fine.final.phases)

    def test_seeds_decorrelate(self, table1_potential):
        a = run_particles(init_uniform(200, seed=0), table1_potential, 2.0, 0.05, 0.1, 0.01)
        b = run_particles(init_uniform(200, seed=1), table1_potential, 2.0, 0.05, 0.1, 0.01)
        assert not np.array_equal(a.final.phases, b.final.phases)


class TestInitialConditions:
    def test_stationary_sample_matches_density(self, sd2):
        ens = init_from_stationary(sd2, 100_000, seed=5)
        centers, heights = empirical_density(ens, bins=64)
        l1 = float(np.sum(np.abs(heights - sd2.density(centers, 0.0))) * TWO_PI / 64)
        assert l1 < 0.05

    def test_uniform_sample_is_flat(self):
        ens = init_uniform(100_000, seed=2)
        centers, heights = empirical_density(ens, bins=64)
        # multinomial band: bin sd ~ sqrt(N p)/N/w with p = 1/64, w = 2pi/64
        sd_h = math.sqrt(100_000 / 64) / (100_000 * TWO_PI / 64)
        assert np.max(np.abs(heights - 1.0 / TWO_PI)) < 5.0 * sd_h

    def test_phases_live_on_the_circle(self, sd2, table1_potential):
        ens = init_from_stationary(sd2, 500, seed=0)
        assert np.all((ens.phases >= 0.0) & (ens.phases < TWO_PI))
        out = run_particles(ens, table1_potential, 2.0, 0.1, 0.5, 0.01).final
        assert np.all((out.phases >= 0.0) & (out.phases < TWO_PI))
        assert abs(out.order_parameter()) <= 1.0

    def test_rejects_negative_density(self):
        with pytest.raises(ValueError):
            init_from_density(np.cos, 100)

    def test_rejects_vanishing_density(self):
        with pytest.raises(ValueError):
            init_from_density(lambda th: np.zeros_like(th), 100)


class TestEmStep:
    def test_leaves_input_untouched(self, sd2, table1_potential):
        ens = init_from_stationary(sd2, 300, seed=4)
        before = ens.phases.copy()
        nxt = em_step(ens, table1_potential, 2.0, 0.05, 0.01)
        assert np.array_equal(ens.phases, before)
        assert nxt.time == pytest.approx(0.01)
        assert nxt.step_index == 1
        assert nxt.seed == ens.seed

    def test_agrees_with_a_one_step_run(self, table1_potential):
        ens = init_uniform(250, seed=9)
        direct = em_step(ens, table1_potential, 2.0, 0.05, 0.01)
        via_run = run_particles(ens, table1_potential, 2.0, 0.05, 0.01, 0.01).final
        assert np.array_equal(direct.phases, via_run.phases)

    def test_free_diffusion_decorrelates_a_coherent_state(self):
        flat = TrigPolynomial(a0=0.0)
        ens = ParticleEnsemble(np.zeros(10_000), seed=6)
        out = run_particles(ens, flat, 0.0, 0.0, 12.0, 5e-3).final
        # |Z_N| = 1 initially; after many diffusion times only the
        # O(1/sqrt(N)) sampling fluctuation is left
        assert abs(out.order_parameter()) < 4.0 / math.sqrt(10_000)

    @settings(max_examples=8, deadline=None)
    @given(phi=st.floats(-math.pi, math.pi), seed=st.integers(0, 2**20))
    def test_rotation_equivariance_without_forcing(self, table1_potential, phi, seed):
        base = init_uniform(300, seed=seed)
        shifted = ParticleEnsemble((base.phases + phi) % TWO_PI, seed=seed)
        out = run_particles(base, table1_potential, 2.0, 0.0, 0.5, 0.01).final
        out_shifted = run_particles(shifted, table1_potential, 2.0, 0.0, 0.5, 0.01).final
        gap = np.angle(np.exp(1j * (out_shifted.phases - out.phases - phi)))
        assert np.max(np.abs(gap)) < 1e-9


class TestEnsembleStatistics:
    def test_synchronized_modulus_holds_near_the_mean_field_level(self, sd2):
        flat = TrigPolynomial(a0=0.0)
        ens = init_from_stationary(sd2, 4000, seed=8)
        trace = run_particles(ens, flat, 2.0, 0.0, 30.0, 2e-3, sample_every=0.1)
        window = trace.modulus[trace.t >= 10.0]
        assert float(np.mean(window)) == pytest.approx(R2, abs=0.02)

    def test_gap_to_mean_field_shrinks_with_n(self, sd2):
        flat = TrigPolynomial(a0=0.0)
        gaps = []
        for n in (1_000, 10_000, 100_000):
            ens = init_from_stationary(sd2, n, seed=12)
            trace = run_particles(ens, flat, 2.0, 0.0, 6.0, 4e-3, sample_every=0.05)
            gaps.append(float(np.sqrt(np.mean((trace.modulus - R2) ** 2))))
        assert gaps[0] > gaps[1] > gaps[2]

    def test_single_occupied_bin_for_a_point_mass(self):
        ens = ParticleEnsemble(np.full(1000, 1.7))
        centers, heights = empirical_density(ens, bins=64)
        occupied = heights > 0.0
        assert int(np.sum(occupied)) == 1
        assert float(np.sum(heights) * TWO_PI / 64) == pytest.approx(1.0)


class TestMeasurePeriod:
    def test_pinned_flow_reports_no_period(self, table1_potential):
        strong = TrigPolynomial(a0=1.0, a=(0.0,), b=(1.3,))
        with pytest.raises(NoPeriodError):
            measure_period_particles(strong, 2.0, 0.04, n_particles=100)

    def test_tracks_the_mean_field_period(self, table1_potential):
        T = measure_period_particles(table1_potential, 2.0, 0.08, n_particles=10_000, seed=1)
        assert T == pytest.approx(225.97, rel=0.05)


class TestInterchange:
    def test_trace_csv_round_trips(self, table1_potential):
        trace = run_particles(init_uniform(100, seed=0), table1_potential, 2.0, 0.05, 0.05, 0.01)
        lines = trace_csv(trace).strip().split("\n")
        assert lines[0] == "t,ZN_re,ZN_im,absZN"
        assert len(lines) == len(trace.t) + 1
        t0, re0, im0, mod0 = (float(v) for v in lines[1].split(","))
        assert (t0, re0, im0) == (trace.t[0], trace.z[0].real, trace.z[0].imag)
        assert mod0 == abs(trace.z[0])

    def test_snapshot_lists_every_phase(self):
        ens = init_uniform(50, seed=3)
        lines = phases_snapshot(ens).strip().split("\n")
        assert len(lines) == 50
        assert np.array_equal(np.array([float(v) for v in lines]), ens.phases)
