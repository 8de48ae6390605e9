"""Stationary synchronized densities and the weighted H^{-1} geometry.

The mean-field rotator model with pure sine coupling of strength K (noise
sigma) has, for K/sigma^2 > 1, a circle of nontrivial stationary densities

    q_psi(theta) = exp(2*K*r*cos(theta - psi)) / normalization,

where the synchronization level r in (0, 1) solves the scalar fixed-point
equation r = I_1(2*K*r) / I_0(2*K*r).  This module computes the Bessel-type
integrals behind that equation by spectrally accurate trapezoid quadrature,
solves the fixed point, and provides the weighted H^{-1} inner products in
which the linearized dynamics around q_psi is symmetric.

All angle-indexed quantities live on the circle [0, 2*pi); integrals are
plain d-theta integrals (no 1/(2*pi) normalization).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import ConvergenceError

TWO_PI = 2.0 * math.pi

# Default resolution of the Bessel quadrature and of sampled circle functions.
QUAD_NODES = 4096
QUAD_TOL = 1e-12
QUAD_MAX_NODES = 1 << 20
DEFAULT_KMAX = 64
GRID_DEFAULT = 2048


def _scaled_bessel_row(x: float, k_max: int, n: int) -> np.ndarray:
    """Return I_k(x) * exp(-x) for k = 0..k_max via n-node trapezoid rule.

    The integrand exp(x*(cos(theta) - 1)) is the exponentially scaled version
    of the defining integrand exp(x*cos(theta)); scaling keeps every value in
    (0, 1] so the quadrature never overflows, and the k-th Fourier cosine sum
    of the samples is exactly the periodic trapezoid rule for the integral.
    """
    theta = TWO_PI * np.arange(n) / n
    samples = np.exp(x * (np.cos(theta) - 1.0))
    spectrum = np.fft.rfft(samples)
    return spectrum.real[: k_max + 1] / n


@dataclass(frozen=True)
class BesselTable:
    """Scaled integrals I_k(x)*exp(-x), k = 0..k_max, at a single argument x.

    Attributes
    ----------
    x : float
        Argument of the integrals (x >= 0).
    scaled : ndarray
        I_k(x) * exp(-x); storing the scaled values keeps the table finite
        for every representable x.
    nodes : int
        Trapezoid node count at which the doubling loop converged.
    """

    x: float
    scaled: np.ndarray
    nodes: int

    @property
    def values(self) -> np.ndarray:
        """Raw I_k(x); overflows to inf for x beyond ~709."""
        return self.scaled * math.exp(self.x)

    @property
    def k_max(self) -> int:
        return len(self.scaled) - 1

    def ratio(self, k: int) -> float:
        """I_k(x) / I_0(x)."""
        return float(self.scaled[k] / self.scaled[0])

    @property
    def ratios(self) -> np.ndarray:
        """Array of I_k(x)/I_0(x) for k = 0..k_max."""
        return self.scaled / self.scaled[0]

    @property
    def i0_inverse_sq(self) -> float:
        """1 / I_0(x)^2, computed without forming I_0^2."""
        s0 = float(self.scaled[0])
        return math.exp(-2.0 * self.x) / (s0 * s0)


def bessel_table(x: float, k_max: int = DEFAULT_KMAX, tol: float = QUAD_TOL) -> BesselTable:
    """Compute the table of scaled Bessel-type integrals at argument x.

    Uses the periodic trapezoid rule, starting from 4096 nodes and doubling
    until two successive node counts agree to `tol` on every entry.
    """
    if x < 0:
        raise ValueError(f"Bessel integral argument must be >= 0, got {x}")
    n = QUAD_NODES
    row = _scaled_bessel_row(x, k_max, n)
    while True:
        n *= 2
        finer = _scaled_bessel_row(x, k_max, n)
        err = float(np.max(np.abs(finer - row)))
        if err <= tol:
            return BesselTable(x=float(x), scaled=finer, nodes=n)
        if n >= QUAD_MAX_NODES:
            raise ConvergenceError(
                f"Bessel quadrature did not converge at x = {x:g}", residual=err
            )
        row = finer


def bessel_ratio_psi(x: float) -> float:
    """The ratio Psi(x) = I_1(x) / I_0(x) of the scaled integrals.

    Psi is the right side of the synchronization fixed-point equation
    r = Psi(2*K*r).  Psi(0) = 0, Psi is increasing and concave on [0, inf),
    and Psi(x) -> 1 as x -> inf.  Below x = 0.01 a Taylor series takes over:
    the library Bessel routines keep only about ten relative digits there,
    which is too coarse for root finding close to the onset.
    """
    if 0.0 <= x < 1e-2:
        x2 = x * x
        return 0.5 * x * (1.0 - x2 / 8.0 + x2 * x2 / 48.0 - 11.0 * x2 * x2 * x2 / 3072.0)
    table = bessel_table(x, k_max=1)
    return table.ratio(1)


def _psi_and_derivative(x: float) -> tuple[float, float]:
    # Psi'(x) = 1 - Psi/x - Psi^2 from the three-term Bessel recurrences;
    # below the series cutoff that form cancels badly, so differentiate the
    # series instead (the x -> 0 limit is 1/2).
    psi = bessel_ratio_psi(x)
    if x < 1e-2:
        x2 = x * x
        return psi, 0.5 - 3.0 * x2 / 16.0 + 5.0 * x2 * x2 / 96.0 - 77.0 * x2 * x2 * x2 / 6144.0
    return psi, 1.0 - psi / x - psi * psi


@dataclass(frozen=True)
class StationaryDensity:
    """A synchronized stationary density q_psi and its Bessel data.

    Carries the coupling K, noise level sigma, synchronization level r, and
    the Bessel table at x = 2*(K/sigma^2)*r.  The density itself is

        q_psi(theta) = exp(x*cos(theta - psi)) / (2*pi*I_0(x)),

    with Fourier expansion mean 1/(2*pi) and j-th cosine amplitude
    (1/pi) * I_j(x)/I_0(x).  r = 0 (x = 0) is the uniform branch.
    """

    K: float
    sigma: float
    r: float
    table: BesselTable

    @property
    def coupling_effective(self) -> float:
        """Coupling after rescaling the noise to 1: K / sigma^2."""
        return self.K / (self.sigma * self.sigma)

    @property
    def x(self) -> float:
        return self.table.x

    @property
    def synchronized(self) -> bool:
        return self.r > 0.0

    def density(self, theta, psi: float = 0.0):
        """Evaluate q_psi at theta (array-safe, overflow-safe)."""
        theta = np.asarray(theta, dtype=float)
        scaled = np.exp(self.x * (np.cos(theta - psi) - 1.0))
        return scaled / (TWO_PI * self.table.scaled[0])

    def density_slope(self, theta, psi: float = 0.0):
        """Evaluate d/dtheta q_psi at theta."""
        theta = np.asarray(theta, dtype=float)
        return -self.x * np.sin(theta - psi) * self.density(theta, psi)

    def cosine_amplitude(self, j: int) -> float:
        """Amplitude of cos(j*theta) in q_0: (1/pi) * I_j/I_0."""
        return self.table.ratio(j) / math.pi

    def spectral_coeffs(self, n_modes: int, psi: float = 0.0) -> np.ndarray:
        """Complex coefficients c_k of q_psi = sum c_k e^{ik theta}, k=0..n_modes."""
        k = np.arange(n_modes + 1)
        ratios = np.zeros(n_modes + 1)
        avail = min(n_modes, self.table.k_max)
        ratios[: avail + 1] = self.table.ratios[: avail + 1]
        return ratios * np.exp(-1j * k * psi) / TWO_PI

    def to_record(self) -> str:
        """Plain-text cache record: header line, then K,sigma,r,I_0..I_kmax."""
        vals = self.table.values
        body = ",".join(f"{float(v)!r}" for v in [self.K, self.sigma, self.r, *vals])
        return f"# K,sigma,r,I_0..I_{self.table.k_max}\n{body}\n"

    @classmethod
    def from_record(cls, text: str) -> "StationaryDensity":
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if len(lines) != 1:
            raise ValueError("stationary density record must have one data line")
        parts = [float(tok) for tok in lines[0].split(",")]
        K, sigma, r = parts[0], parts[1], parts[2]
        values = np.asarray(parts[3:], dtype=float)
        x = 2.0 * (K / (sigma * sigma)) * r
        table = BesselTable(x=x, scaled=values * math.exp(-x), nodes=0)
        return cls(K=K, sigma=sigma, r=r, table=table)


def solve_order_parameter(
    K: float,
    sigma: float = 1.0,
    tol: float = 1e-12,
    k_max: int = DEFAULT_KMAX,
) -> StationaryDensity:
    """Solve the synchronization fixed point r = Psi(2*(K/sigma^2)*r).

    For K/sigma^2 <= 1 only the uniform branch exists and r = 0 is returned.
    For K/sigma^2 > 1 the unique positive root is bracketed by bisection on
    (0, 1) and polished by Newton iteration to tolerance `tol`.
    """
    if K < 0:
        raise ValueError(f"coupling must be >= 0, got K = {K}")
    if sigma <= 0:
        raise ValueError(f"noise level must be > 0, got sigma = {sigma}")
    keff = K / (sigma * sigma)
    if keff <= 1.0:
        return StationaryDensity(K=K, sigma=sigma, r=0.0, table=bessel_table(0.0, k_max))

    def g(r: float) -> float:
        return r - bessel_ratio_psi(2.0 * keff * r)

    # The positive root never falls below sqrt(2*(keff-1)) ~ 2e-8 for any
    # double keff > 1, so a 1e-9 probe always sits inside the bracket while
    # staying large enough for the sign of g to beat roundoff in Psi.
    lo, hi = 1e-9, 1.0
    glo = g(lo)
    if glo >= 0.0:
        # Threshold indistinguishable from keff = 1 at machine precision.
        return StationaryDensity(K=K, sigma=sigma, r=0.0, table=bessel_table(0.0, k_max))
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-6:
            break
    r = 0.5 * (lo + hi)
    prev = math.inf
    for _ in range(40):
        psi, dpsi = _psi_and_derivative(2.0 * keff * r)
        gr = r - psi
        dg = 1.0 - 2.0 * keff * dpsi
        step = gr / dg
        r -= step
        if abs(step) <= tol * max(1.0, abs(r)):
            break
        if abs(step) >= prev:
            # The fixed-point equation flattens like 2*(keff - 1) near onset,
            # so roundoff in Psi caps the attainable accuracy there; a step
            # that stops shrinking means the floor is reached, not a stall.
            break
        prev = abs(step)
    else:
        raise ConvergenceError(
            f"order parameter Newton polish stalled at K = {K}", residual=abs(step)
        )
    r = min(max(r, 0.0), 1.0)
    return StationaryDensity(K=K, sigma=sigma, r=r, table=bessel_table(2.0 * keff * r, k_max))


# ---------------------------------------------------------------------------
# Circle functions and the weighted H^{-1} inner product
# ---------------------------------------------------------------------------

CircleLike = Union["CircleFunction", Callable[[np.ndarray], np.ndarray], np.ndarray, float]


@dataclass
class CircleFunction:
    """A real 2*pi-periodic function stored as samples on a uniform grid.

    The grid is theta_m = 2*pi*m/n, m = 0..n-1.  Evaluation between nodes
    uses the trigonometric interpolant, so smooth inputs keep spectral
    accuracy.  `zero_mean` records whether the mean vanishes (to grid
    precision) at construction.
    """

    values: np.ndarray
    zero_mean: bool = field(default=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        scale = float(np.max(np.abs(self.values))) if self.values.size else 0.0
        self.zero_mean = abs(float(np.mean(self.values))) <= 1e-12 * max(1.0, scale)
        self._coeffs = None

    @classmethod
    def from_callable(cls, fn: Callable, n: int = GRID_DEFAULT) -> "CircleFunction":
        theta = TWO_PI * np.arange(n) / n
        return cls(np.asarray(fn(theta), dtype=float))

    @classmethod
    def from_complex_coeffs(cls, coeffs: np.ndarray, n: int) -> "CircleFunction":
        """Build from one-sided coefficients c_k, k = 0..K (c_{-k} = conj c_k)."""
        spec = np.zeros(n // 2 + 1, dtype=complex)
        kmax = min(len(coeffs) - 1, n // 2)
        spec[: kmax + 1] = coeffs[: kmax + 1]
        return cls(np.fft.irfft(spec * n, n=n))

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def grid(self) -> np.ndarray:
        return TWO_PI * np.arange(self.n) / self.n

    def coeffs(self) -> np.ndarray:
        """One-sided complex coefficients c_k = rfft(values)/n."""
        if self._coeffs is None:
            self._coeffs = np.fft.rfft(self.values) / self.n
        return self._coeffs

    def mean(self) -> float:
        return float(np.mean(self.values))

    def integral(self) -> float:
        return TWO_PI * self.mean()

    def resampled(self, n: int) -> "CircleFunction":
        if n == self.n:
            return self
        spec = np.zeros(n // 2 + 1, dtype=complex)
        src = self.coeffs()
        kmax = min(len(src) - 1, n // 2)
        spec[: kmax + 1] = src[: kmax + 1]
        return CircleFunction(np.fft.irfft(spec * n, n=n))

    def primitive(self) -> "CircleFunction":
        """The zero-mean antiderivative; requires a zero-mean function."""
        if not self.zero_mean:
            raise ValueError("primitive of a non-zero-mean circle function is not periodic")
        c = self.coeffs().copy()
        k = np.arange(len(c))
        c[0] = 0.0
        c[1:] = c[1:] / (1j * k[1:])
        return CircleFunction(np.fft.irfft(c * self.n, n=self.n))

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        c = self.coeffs()
        k = np.arange(1, len(c))
        # Nyquist term is halved by the one-sided sum; include it explicitly.
        out = np.full(theta.shape, c[0].real)
        phases = np.exp(1j * np.outer(theta, k))
        out = out + 2.0 * (phases @ c[1:]).real.reshape(theta.shape)
        if self.n % 2 == 0:
            out -= (c[-1] * np.exp(1j * theta * k[-1])).real.reshape(theta.shape)
        return out


def _as_samples(f: CircleLike, n: int) -> np.ndarray:
    if isinstance(f, CircleFunction):
        return f.resampled(n).values
    if callable(f):
        return np.asarray(f(TWO_PI * np.arange(n) / n), dtype=float)
    arr = np.asarray(f, dtype=float)
    if arr.ndim == 0:
        return np.full(n, float(arr))
    if len(arr) == n:
        return arr
    return CircleFunction(arr).resampled(n).values


def _common_n(*fns: CircleLike, default: int = GRID_DEFAULT) -> int:
    n = default
    for f in fns:
        if isinstance(f, CircleFunction):
            n = max(n, f.n)
        elif isinstance(f, np.ndarray) and f.ndim == 1:
            n = max(n, len(f))
    return n


def _primitive_samples(u: np.ndarray) -> np.ndarray:
    n = len(u)
    c = np.fft.rfft(u) / n
    k = np.arange(len(c))
    c[0] = 0.0
    c[1:] = c[1:] / (1j * k[1:])
    return np.fft.irfft(c * n, n=n)


def weighted_hminus1_inner(u: CircleLike, v: CircleLike, w: CircleLike, n: int | None = None) -> float:
    """Weighted H^{-1} inner product (u, v)_{-1,w} of zero-mean functions.

    Defined through primitives: with U the antiderivative of u centered so
    that int w*U = 0 (same for V), the product is int w*U*V d-theta.  The
    weight must be strictly positive; u and v must have zero mean, otherwise
    no periodic primitive exists and a ValueError is raised.
    """
    if n is None:
        n = _common_n(u, v, w)
    us, vs, ws = _as_samples(u, n), _as_samples(v, n), _as_samples(w, n)
    if float(np.min(ws)) <= 0.0:
        raise ValueError("H^{-1} weight must be strictly positive")
    for name, s in (("u", us), ("v", vs)):
        scale = max(1.0, float(np.max(np.abs(s))))
        if abs(float(np.mean(s))) > 1e-9 * scale:
            raise ValueError(f"{name} must have zero mean for the H^-1 pairing")
    wmean = float(np.mean(ws))
    U = _primitive_samples(us)
    V = _primitive_samples(vs)
    U = U - float(np.mean(ws * U)) / wmean
    V = V - float(np.mean(ws * V)) / wmean
    return TWO_PI * float(np.mean(ws * U * V))


def hminus1_norm(u: CircleLike, w: CircleLike = 1.0, n: int | None = None) -> float:
    """Norm induced by weighted_hminus1_inner."""
    return math.sqrt(max(weighted_hminus1_inner(u, u, w, n=n), 0.0))


def slope_pairing(v: CircleLike, sd: StationaryDensity, psi: float = 0.0, n: int | None = None) -> float:
    """Closed form of (v, q'_psi)_{-1, 1/q_psi} for zero-mean v.

    Equals int V d-theta - [int V(theta) exp(-x*(1 + cos(theta - psi))) d-theta]
    / (I_0(x) e^{-x}), with V the antiderivative of v; algebraically identical
    to the general primitive-based formula but needing no root search or
    centering, and overflow-safe at every x.
    """
    if n is None:
        n = _common_n(v)
    vs = _as_samples(v, n)
    scale = max(1.0, float(np.max(np.abs(vs))))
    if abs(float(np.mean(vs))) > 1e-9 * scale:
        raise ValueError("v must have zero mean for the H^-1 pairing")
    V = _primitive_samples(vs)
    theta = TWO_PI * np.arange(n) / n
    x = sd.x
    kernel_vals = np.exp(-x * (1.0 + np.cos(theta - psi)))
    int_V = TWO_PI * float(np.mean(V))
    int_weighted = TWO_PI * float(np.mean(V * kernel_vals))
    return int_V - int_weighted / float(sd.table.scaled[0])
