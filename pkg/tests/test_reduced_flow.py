"""Reduced phase flow: classification, periods, critical amplitudes.

The closed-form first-harmonic period and the quadrature period are
cross-checked against a third route that shares no code with either: an RK4
winding-time measurement with Hermite-interpolated crossing.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from rotatorlab.errors import NoPeriodError
from rotatorlab.kernel import TWO_PI
from rotatorlab.potential import TrigPolynomial, harmonic_amplification
from rotatorlab.reduced_flow import (
    classify,
    critical_amplitude,
    critical_curve,
    integrate_phase,
    period_first_harmonic,
    period_quadrature,
    transition_points,
)

AC2 = 1.1731361504836753  # a_c(2), pinned by the kernel tests
TAU = 18.07796382850073  # tau(1.1, 2)


def first_harmonic_force(a: float, K: float) -> TrigPolynomial:
    return TrigPolynomial(a0=1.0, a=(0.0,), b=(a / critical_amplitude(1, K),))


def winding_time(f, psi0: float, t_max: float, dt: float) -> float:
    """Time for psi' = -f to advance one full turn, by cubic Hermite crossing."""
    t, psi = integrate_phase(f, psi0, t_max, dt)
    target = psi[0] - TWO_PI
    i = int(np.argmax(psi <= target))
    assert i > 0, "trajectory never completed a turn"
    p0, p1 = psi[i - 1], psi[i]
    v0, v1 = -f(p0), -f(p1)
    h = t[i] - t[i - 1]

    def hermite(s):
        s2, s3 = s * s, s**3
        value = (
            (2 * s3 - 3 * s2 + 1) * p0
            + (s3 - 2 * s2 + s) * h * v0
            + (-2 * s3 + 3 * s2) * p1
            + (s3 - s2) * h * v1
        )
        return value - target

    return float(t[i - 1] + brentq(hermite, 0.0, 1.0, xtol=1e-14) * h)


class TestPeriodQuadrature:
    def test_constant_force(self):
        f = TrigPolynomial(a0=1.0)
        assert period_quadrature(f) == pytest.approx(TWO_PI, rel=1e-13)
        assert period_quadrature(TrigPolynomial(a0=-2.0)) == pytest.approx(
            math.pi, rel=1e-13
        )

    def test_matches_closed_form(self):
        for a in (0.2, 0.8, 1.1):
            f = first_harmonic_force(a, 2.0)
            assert period_quadrature(f) == pytest.approx(
                period_first_harmonic(a, 2.0), rel=1e-12
            )

    def test_rejects_vanishing_force(self):
        with pytest.raises(NoPeriodError):
            period_quadrature(TrigPolynomial(a0=1.0, a=(0.0,), b=(2.0,)))


class TestIntegratePhase:
    def test_constant_drift(self):
        t, psi = integrate_phase(TrigPolynomial(a0=1.0), 0.0, math.pi, 1e-3)
        assert psi[-1] == pytest.approx(-math.pi, abs=1e-12)
        assert t[-1] == pytest.approx(math.pi, abs=1e-12)

    def test_settles_on_stable_zero(self):
        # f = 1 + 2 sin: stable zero of -f at 11 pi/6 (where f' > 0)
        f = TrigPolynomial(a0=1.0, a=(0.0,), b=(2.0,))
        _, psi = integrate_phase(f, 0.3, 40.0, 0.01)
        assert psi[-1] % TWO_PI == pytest.approx(11 * math.pi / 6, abs=1e-9)

    def test_winding_period_benchmark(self):
        f = first_harmonic_force(1.1, 2.0)
        T = winding_time(f, 0.0, 20.0, 0.01)
        assert abs(T - 18.0779) < 1e-3

    def test_rejects_bad_steps(self):
        f = TrigPolynomial(a0=1.0)
        with pytest.raises(ValueError):
            integrate_phase(f, 0.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            integrate_phase(f, 0.0, -1.0, 0.1)

    def test_quadrature_vs_winding_consistency(self):
        # winding time within the accumulated one-step error 10*dt^4*(T/dt)
        for a, dt in ((0.5, 0.02), (1.1, 0.01)):
            f = first_harmonic_force(a, 2.0)
            T_quad = period_quadrature(f)
            T_wind = winding_time(f, 0.0, 1.5 * T_quad, dt)
            assert abs(T_wind - T_quad) <= 10.0 * dt**3 * T_quad


class TestClassify:
    def test_zero_free_is_periodic(self):
        cls = classify(first_harmonic_force(1.1, 2.0))
        assert cls.kind == "periodic"
        assert cls.period == pytest.approx(TAU, rel=1e-10)
        assert cls.fixed_points == ()

    def test_two_hyperbolic_zeros(self):
        cls = classify(TrigPolynomial(a0=1.0, a=(0.0,), b=(2.0,)))
        assert cls.kind == "fixed_points"
        assert len(cls.fixed_points) == 2
        unstable, stable = cls.fixed_points
        assert unstable.psi == pytest.approx(7 * math.pi / 6, abs=1e-10)
        assert unstable.stable is False
        assert stable.psi == pytest.approx(11 * math.pi / 6, abs=1e-10)
        assert stable.stable is True

    def test_tangency_reported_degenerate(self):
        cls = classify(TrigPolynomial(a0=1.0, a=(0.0,), b=(1.0,)))
        assert cls.kind == "degenerate"
        assert cls.fixed_points[0].stable is None
        assert cls.fixed_points[0].psi == pytest.approx(3 * math.pi / 2, abs=1e-3)

    def test_without_period(self):
        cls = classify(first_harmonic_force(0.5, 2.0), with_period=False)
        assert cls.kind == "periodic" and cls.period is None

    def test_json_shape(self):
        import json

        doc = json.loads(classify(TrigPolynomial(a0=1.0, a=(0.0,), b=(2.0,))).to_json())
        assert doc["kind"] == "fixed_points" and doc["period"] is None
        assert {"psi", "stable"} == set(doc["fixed_points"][0])

    @settings(max_examples=25, deadline=None)
    @given(phi=st.floats(0.0, TWO_PI, exclude_max=True))
    def test_rotation_equivariance(self, phi):
        base = TrigPolynomial(a0=1.0, a=(0.3,), b=(1.6,))
        ref = classify(base)
        rot = classify(base.rotated(phi))
        assert rot.signature == ref.signature
        got = sorted(fp.psi for fp in rot.fixed_points)
        want = sorted((fp.psi + phi) % TWO_PI for fp in ref.fixed_points)
        assert np.allclose(got, want, atol=1e-8)

    @settings(max_examples=25, deadline=None)
    @given(phi=st.floats(0.0, TWO_PI, exclude_max=True))
    def test_rotation_preserves_period(self, phi):
        base = first_harmonic_force(0.9, 2.0)
        assert classify(base.rotated(phi)).period == pytest.approx(
            classify(base).period, rel=1e-10
        )


class TestCriticalAmplitude:
    def test_benchmark_value(self):
        assert critical_amplitude(1, 2.0) == pytest.approx(AC2, abs=1e-12)

    def test_inverse_of_amplification(self, sd2):
        g = harmonic_amplification(sd2, 5)
        for j in range(1, 6):
            assert critical_amplitude(j, 2.0) == pytest.approx(1.0 / g[j - 1], rel=1e-12)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            critical_amplitude(1, 1.0)
        with pytest.raises(ValueError):
            critical_amplitude(1, 0.7)
        with pytest.raises(ValueError):
            critical_amplitude(0, 2.0)

    def test_large_coupling_asymptote(self):
        # a_c(K) = 1 + 1/(4K) + O(K^-2)
        for K in (50.0, 100.0, 400.0):
            assert critical_amplitude(1, K) - 1.0 == pytest.approx(
                1.0 / (4.0 * K), rel=0.02
            )

    def test_onset_asymptote(self):
        # a_c(1 + eps) ~ sqrt(8 eps)
        for eps in (1e-3, 1e-4, 1e-5):
            ratio = critical_amplitude(1, 1.0 + eps) / math.sqrt(8.0 * eps)
            assert ratio == pytest.approx(1.0, abs=2e-3)

    def test_second_harmonic_saturates_at_four(self):
        for K in np.geomspace(1.0001, 50.0, 24):
            assert critical_amplitude(2, float(K)) < 4.0
        assert critical_amplitude(2, 1.0001) > 3.999

    def test_third_harmonic_blows_up_at_onset(self):
        vals = [critical_amplitude(3, K) for K in (1.1, 1.01, 1.001)]
        assert vals[0] < vals[1] < vals[2]
        assert vals[2] > 100.0

    def test_curve_csv(self):
        curve = critical_curve(2, [1.5, 2.0, 3.0])
        lines = curve.to_csv().strip().split("\n")
        assert lines[0] == "K,a_c_2"
        row = [float(v) for v in lines[2].split(",")]
        assert row == [2.0, critical_amplitude(2, 2.0)]


class TestPeriodFirstHarmonic:
    def test_benchmark_value(self):
        assert period_first_harmonic(1.1, 2.0) == pytest.approx(TAU, abs=1e-10)

    def test_zero_amplitude(self):
        assert period_first_harmonic(0.0, 2.0) == pytest.approx(TWO_PI, rel=1e-14)

    def test_beyond_critical(self):
        with pytest.raises(NoPeriodError):
            period_first_harmonic(1.2, 2.0)
        with pytest.raises(ValueError):
            period_first_harmonic(-0.1, 2.0)

    def test_diverges_at_threshold(self):
        assert period_first_harmonic(0.9999 * AC2, 2.0) > 50.0


class TestTransitionPoints:
    def test_single_harmonic_family(self):
        fam = lambda a: TrigPolynomial(a0=1.0, a=(0.0,), b=(a,))
        pts = transition_points(fam, 2.0, (0.5, 1.5), tol=1e-8)
        assert len(pts) == 1
        assert pts[0] == pytest.approx(critical_amplitude(1, 2.0), abs=1e-6)

    def test_two_harmonic_family(self):
        fam = lambda a: TrigPolynomial(a0=1.0, a=(0.0, 0.0), b=(a, 2.0 * a))
        pts = transition_points(fam, 2.0, (0.0, 3.0))
        assert len(pts) == 2
        assert pts[0] == pytest.approx(0.600, abs=1e-2)
        assert pts[1] == pytest.approx(2.107, abs=1e-2)

    def test_empty_below_threshold(self):
        fam = lambda a: TrigPolynomial(a0=1.0, a=(0.0,), b=(a,))
        assert transition_points(fam, 2.0, (0.0, 0.5)) == []

    def test_rejects_bad_range(self):
        fam = lambda a: TrigPolynomial(a0=1.0, a=(0.0,), b=(a,))
        with pytest.raises(ValueError):
            transition_points(fam, 2.0, (1.0, 1.0))
