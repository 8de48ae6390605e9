"""Trigonometric forces and the reduction to the effective phase force.

The reduction theorem sends a periodic force V' (here: a trigonometric
polynomial) to the effective force f governing the slow phase motion
psi' = -delta * f(psi) on the synchronized manifold.  In Fourier terms the
map is diagonal: the mean passes through unchanged and the k-th harmonic
pair (a_k, b_k) is multiplied by

    g_k = D(K) * I_k(x)/I_0(x),      D(K) = I_0(x)^2 / (I_0(x)^2 - 1),

with x = 2*K*r(K).  Equivalently f - a_0 = D(K) * (q_0 convolved with
(V' - a_0)); both routes are implemented and cross-checked.  The map is
invertible harmonic by harmonic, which gives the inverse design operation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .kernel import TWO_PI, BesselTable, StationaryDensity, bessel_table


@dataclass
class TrigPolynomial:
    """Real trigonometric polynomial a0 + sum_k (a_k cos k.theta + b_k sin k.theta).

    Represents periodic forces: a potential derivative V', an effective
    force f, or any other 2*pi-periodic drift.  a and b always have equal
    length (the degree); missing entries are zero-padded at construction.
    """

    a0: float = 0.0
    a: np.ndarray = field(default_factory=lambda: np.zeros(0))
    b: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        deg = max(len(a), len(b))
        self.a = np.zeros(deg)
        self.b = np.zeros(deg)
        self.a[: len(a)] = a
        self.b[: len(b)] = b
        self.a0 = float(self.a0)

    @property
    def degree(self) -> int:
        return len(self.a)

    def __call__(self, theta):
        th = np.asarray(theta, dtype=float)
        scalar = th.ndim == 0
        th = np.atleast_1d(th)
        out = np.full(th.shape, self.a0)
        if self.degree:
            k = np.arange(1, self.degree + 1)
            ang = th[..., None] * k
            out = out + np.cos(ang) @ self.a + np.sin(ang) @ self.b
        return float(out[0]) if scalar else out

    def derivative(self) -> "TrigPolynomial":
        k = np.arange(1, self.degree + 1)
        return TrigPolynomial(0.0, k * self.b, -k * self.a)

    def rotated(self, phi: float) -> "TrigPolynomial":
        """The polynomial theta -> self(theta - phi)."""
        k = np.arange(1, self.degree + 1)
        c, s = np.cos(k * phi), np.sin(k * phi)
        return TrigPolynomial(self.a0, self.a * c - self.b * s, self.a * s + self.b * c)

    def truncated(self, degree: int) -> "TrigPolynomial":
        return TrigPolynomial(self.a0, self.a[:degree], self.b[:degree])

    def max_abs(self, n: int = 4096) -> float:
        theta = TWO_PI * np.arange(n) / n
        return float(np.max(np.abs(self(theta))))

    def spectral_coeffs(self, n_modes: int) -> np.ndarray:
        """One-sided complex coefficients c_k, k = 0..n_modes."""
        c = np.zeros(n_modes + 1, dtype=complex)
        c[0] = self.a0
        kmax = min(self.degree, n_modes)
        c[1 : kmax + 1] = 0.5 * (self.a[:kmax] - 1j * self.b[:kmax])
        return c

    def __add__(self, other: "TrigPolynomial") -> "TrigPolynomial":
        deg = max(self.degree, other.degree)
        s, o = self._padded(deg), other._padded(deg)
        return TrigPolynomial(s.a0 + o.a0, s.a + o.a, s.b + o.b)

    def __sub__(self, other: "TrigPolynomial") -> "TrigPolynomial":
        return self + (-1.0) * other

    def __rmul__(self, scalar: float) -> "TrigPolynomial":
        return TrigPolynomial(scalar * self.a0, scalar * self.a, scalar * self.b)

    def _padded(self, degree: int) -> "TrigPolynomial":
        a = np.zeros(degree)
        b = np.zeros(degree)
        a[: self.degree] = self.a
        b[: self.degree] = self.b
        return TrigPolynomial(self.a0, a, b)

    def allclose(self, other: "TrigPolynomial", atol: float = 1e-12) -> bool:
        deg = max(self.degree, other.degree)
        s, o = self._padded(deg), other._padded(deg)
        return (
            abs(s.a0 - o.a0) <= atol
            and bool(np.all(np.abs(s.a - o.a) <= atol))
            and bool(np.all(np.abs(s.b - o.b) <= atol))
        )

    # -- interchange formats ------------------------------------------------

    def to_text(self) -> str:
        """Semicolon form `a0; a1,b1; a2,b2; ...` (degree many pairs)."""
        parts = [f"{float(self.a0)!r}"]
        for j in range(self.degree):
            parts.append(f"{float(self.a[j])!r},{float(self.b[j])!r}")
        return "; ".join(parts)

    @classmethod
    def from_text(cls, text: str) -> "TrigPolynomial":
        chunks = [c.strip() for c in text.split(";") if c.strip()]
        if not chunks:
            raise ValueError("empty trig polynomial text")
        a0 = float(chunks[0])
        a, b = [], []
        for c in chunks[1:]:
            pair = [p.strip() for p in c.split(",")]
            if len(pair) != 2:
                raise ValueError(f"harmonic chunk {c!r} is not 'a_k,b_k'")
            a.append(float(pair[0]))
            b.append(float(pair[1]))
        return cls(a0, np.asarray(a), np.asarray(b))

    def to_json_dict(self) -> dict:
        return {"a0": float(self.a0), "a": [float(v) for v in self.a], "b": [float(v) for v in self.b]}

    @classmethod
    def from_json_dict(cls, d: dict) -> "TrigPolynomial":
        return cls(float(d["a0"]), np.asarray(d.get("a", [])), np.asarray(d.get("b", [])))

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json(cls, text: str) -> "TrigPolynomial":
        return cls.from_json_dict(json.loads(text))


@dataclass(frozen=True)
class EffectiveForce:
    """Result of the reduction: the effective force with its provenance."""

    force: TrigPolynomial
    source: TrigPolynomial
    K: float
    route: str


def project_to_trig(fn: Callable, degree: int, n: int | None = None) -> TrigPolynomial:
    """Project a callable on the circle onto harmonics 0..degree."""
    if n is None:
        n = max(4 * degree, 256)
    theta = TWO_PI * np.arange(n) / n
    c = np.fft.rfft(np.asarray(fn(theta), dtype=float)) / n
    a0 = float(c[0].real)
    a = 2.0 * c[1 : degree + 1].real
    b = -2.0 * c[1 : degree + 1].imag
    return TrigPolynomial(a0, a, b)


def _table_for(sd: StationaryDensity, k_needed: int) -> BesselTable:
    if sd.table.k_max >= k_needed:
        return sd.table
    return bessel_table(sd.x, k_max=k_needed)


def harmonic_amplification(sd: StationaryDensity, k_max: int) -> np.ndarray:
    """Factors g_k = D(K) * I_k/I_0 for k = 1..k_max (g multiplies harmonic k).

    Computed without forming I_0^2, so large x is safe: D = 1/(1 - I_0^{-2}).
    """
    if not sd.synchronized:
        raise ValueError(
            "effective force requires the synchronized branch (K/sigma^2 > 1)"
        )
    table = _table_for(sd, k_max)
    damping = 1.0 / (1.0 - table.i0_inverse_sq)
    return damping * table.ratios[1 : k_max + 1]


def effective_force_coeff(vprime: TrigPolynomial, sd: StationaryDensity) -> EffectiveForce:
    """Reduce V' to the effective force via the diagonal coefficient map."""
    deg = vprime.degree
    if deg == 0:
        return EffectiveForce(TrigPolynomial(vprime.a0), vprime, sd.K, "coefficient_map")
    g = harmonic_amplification(sd, deg)
    force = TrigPolynomial(vprime.a0, g * vprime.a, g * vprime.b)
    return EffectiveForce(force, vprime, sd.K, "coefficient_map")


def effective_force_conv(vprime: TrigPolynomial, sd: StationaryDensity) -> EffectiveForce:
    """Reduce V' via the convolution route f = a0 + D(K) * (q_0 * (V' - a0)).

    Works on a uniform grid of 4*max(degree, k_max) points; the convolution
    of the stationary density with a degree-n polynomial is again degree n,
    so the final trigonometric projection is exact up to aliasing of the
    density's (rapidly decaying) spectral tail.
    """
    if not sd.synchronized:
        raise ValueError(
            "effective force requires the synchronized branch (K/sigma^2 > 1)"
        )
    deg = vprime.degree
    if deg == 0:
        return EffectiveForce(TrigPolynomial(vprime.a0), vprime, sd.K, "convolution")
    n = 4 * max(deg, sd.table.k_max)
    theta = TWO_PI * np.arange(n) / n
    centered = vprime(theta) - vprime.a0
    density = sd.density(theta)
    conv = np.fft.irfft(np.fft.rfft(density) * np.fft.rfft(centered), n=n) * (TWO_PI / n)
    damping = 1.0 / (1.0 - sd.table.i0_inverse_sq)
    samples = vprime.a0 + damping * conv
    c = np.fft.rfft(samples) / n
    force = TrigPolynomial(
        float(c[0].real), 2.0 * c[1 : deg + 1].real, -2.0 * c[1 : deg + 1].imag
    )
    return EffectiveForce(force, vprime, sd.K, "convolution")


def effective_force(
    vprime: TrigPolynomial, sd: StationaryDensity, route: str = "coefficient_map"
) -> EffectiveForce:
    if route == "coefficient_map":
        return effective_force_coeff(vprime, sd)
    if route == "convolution":
        return effective_force_conv(vprime, sd)
    raise ValueError(f"unknown reduction route {route!r}")


def design_potential(target: TrigPolynomial, sd: StationaryDensity) -> TrigPolynomial:
    """Invert the reduction: the V' whose effective force is `target`.

    Divides each harmonic by its amplification factor; the mean passes
    through.  High harmonics are damped by I_k/I_0, so their preimages are
    exponentially large; that is the honest inverse, not an error.
    """
    deg = target.degree
    if deg == 0:
        return TrigPolynomial(target.a0)
    g = harmonic_amplification(sd, deg)
    return TrigPolynomial(target.a0, target.a / g, target.b / g)
