"""Analysis of the reduced phase flow psi' = -delta * f(psi).

Everything here lives in rescaled time (delta = 1): zeros of f are the
fixed points of the reduced flow, a zero-free f rotates with period
T = integral of 1/|f| over the circle, and time in the full system is
recovered by dividing by delta.

The first-harmonic family f = a0 + (a/a_c) sin has the closed-form period
2*pi / sqrt(a0^2 - (a/a_c)^2) (for a0 = 1), which is the reference curve
tau(a, K) used throughout.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConvergenceError, NoPeriodError
from .kernel import TWO_PI, StationaryDensity, solve_order_parameter
from .potential import TrigPolynomial, effective_force_coeff

CLASSIFY_GRID = 2048
DEGENERACY_TOL = 1e-8
ROOT_TOL = 1e-12


@dataclass(frozen=True)
class FixedPoint:
    psi: float
    stable: bool | None  # None marks a degenerate (non-hyperbolic) zero

    def to_json_dict(self) -> dict:
        return {"psi": self.psi, "stable": self.stable}


@dataclass(frozen=True)
class FlowClassification:
    """Outcome of classifying psi' = -f(psi): rotation or rest points.

    kind is one of "periodic" (f has no zeros; `period` is the rotation
    period in rescaled time), "fixed_points" (hyperbolic zeros, listed in
    increasing psi with stability under the reversed-sign flow), or
    "degenerate" (some zero has |f'| below the classification tolerance).
    """

    kind: str
    period: float | None = None
    fixed_points: tuple[FixedPoint, ...] = ()

    @property
    def signature(self) -> tuple:
        return (self.kind, len(self.fixed_points))

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "period": self.period,
            "fixed_points": [fp.to_json_dict() for fp in self.fixed_points],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())


def _bisect_root(f: Callable[[float], float], lo: float, hi: float, flo: float) -> float:
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if (fmid < 0.0) == (flo < 0.0):
            lo, flo = mid, fmid
        else:
            hi = mid
        if hi - lo <= ROOT_TOL:
            break
    return 0.5 * (lo + hi)


def _slope(f, psi: float) -> float:
    if isinstance(f, TrigPolynomial):
        return f.derivative()(psi)
    h = 1e-6
    return (f(psi + h) - f(psi - h)) / (2.0 * h)


def period_quadrature(f, rtol: float = 1e-12, n0: int = 256) -> float:
    """Rotation period of a zero-free f: integral of 1/|f| by midpoint rule.

    Periodic midpoint quadrature converges spectrally for smooth f; the node
    count doubles until two refinements agree to rtol.
    """
    n = n0
    prev = None
    while n <= (1 << 22):
        theta = TWO_PI * (np.arange(n) + 0.5) / n
        signed = np.asarray(f(theta), dtype=float)
        if float(np.min(signed)) <= 0.0 <= float(np.max(signed)):
            raise NoPeriodError("force vanishes on the circle; no rotation period")
        vals = np.abs(signed)
        total = TWO_PI * float(np.mean(1.0 / vals))
        if prev is not None and abs(total - prev) <= rtol * abs(total):
            return total
        prev = total
        n *= 2
    raise ConvergenceError("period quadrature did not converge", residual=abs(total - prev))


def classify(f, tol: float = DEGENERACY_TOL, with_period: bool = True) -> FlowClassification:
    """Classify the reduced flow driven by force f (callable or polynomial).

    Zeros are located by sign-change bracketing on a 2048-point grid and
    bisection to 1e-12.  Stability under psi' = -f: stable iff f' > 0 at the
    zero.  A zero with |f'| < tol is reported as degenerate rather than
    silently assigned a stability.

    with_period=False skips the rotation-period quadrature for zero-free
    forces (scanning workflows compare signatures only; arbitrarily close to
    a tangency the period integral is still finite but needs unbounded node
    counts).
    """
    theta = TWO_PI * np.arange(CLASSIFY_GRID) / CLASSIFY_GRID
    vals = np.asarray(f(theta), dtype=float)
    scale = max(float(np.max(np.abs(vals))), 1e-300)

    roots = []
    for i in range(CLASSIFY_GRID):
        j = (i + 1) % CLASSIFY_GRID
        vi, vj = vals[i], vals[j]
        if vi == 0.0:
            roots.append(theta[i])
        elif (vi < 0.0) != (vj < 0.0):
            hi = theta[j] if j != 0 else TWO_PI
            roots.append(_bisect_root(lambda t: float(f(t)), theta[i], hi, vi))

    if not roots:
        # No sign change; a grid point sitting numerically on zero would be a
        # tangency (non-hyperbolic), which classification must not paper over.
        if float(np.min(np.abs(vals))) <= 1e-9 * scale:
            psi_min = float(theta[int(np.argmin(np.abs(vals)))])
            return FlowClassification(
                kind="degenerate", fixed_points=(FixedPoint(psi_min, None),)
            )
        period = period_quadrature(f) if with_period else None
        return FlowClassification(kind="periodic", period=period)

    deduped = []
    for psi in sorted(r % TWO_PI for r in roots):
        if not deduped or psi - deduped[-1] > 1e-9:
            deduped.append(psi)
    if len(deduped) > 1 and (deduped[0] + TWO_PI) - deduped[-1] <= 1e-9:
        deduped.pop()

    points = []
    degenerate = False
    for psi in deduped:
        slope = _slope(f, psi)
        if abs(slope) < tol:
            points.append(FixedPoint(psi, None))
            degenerate = True
        else:
            points.append(FixedPoint(psi, slope > 0.0))
    kind = "degenerate" if degenerate else "fixed_points"
    return FlowClassification(kind=kind, fixed_points=tuple(points))


def integrate_phase(f, psi0: float, t_end: float, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Integrate psi' = -f(psi) with classical RK4; returns (t, psi) unwrapped."""
    if dt <= 0 or t_end <= 0:
        raise ValueError("integrate_phase needs dt > 0 and t_end > 0")
    n = int(math.ceil(t_end / dt))
    t = np.empty(n + 1)
    psi = np.empty(n + 1)
    t[0], psi[0] = 0.0, psi0
    x = psi0
    for i in range(n):
        h = min(dt, t_end - i * dt)
        k1 = -f(x)
        k2 = -f(x + 0.5 * h * k1)
        k3 = -f(x + 0.5 * h * k2)
        k4 = -f(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t[i + 1] = min((i + 1) * dt, t_end)
        psi[i + 1] = x
    return t, psi


# ---------------------------------------------------------------------------
# Critical amplitudes of the first-harmonic reduction
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=512)
def _sd_cached(K: float, k_max: int = 64) -> StationaryDensity:
    return solve_order_parameter(K, k_max=k_max)


def critical_amplitude(j: int, K: float) -> float:
    """Critical amplitude a_{c,j}(K) = (I_0^2 - 1)/(I_0 I_j) at x = 2*K*r(K).

    A pure j-th harmonic force of amplitude a produces fixed points iff
    a >= a_{c,j}(K).  Only defined on the synchronized branch (K > 1).
    """
    if j < 1:
        raise ValueError(f"harmonic index must be >= 1, got {j}")
    if K <= 1.0:
        raise ValueError(f"critical amplitude needs K > 1, got K = {K}")
    table = _sd_cached(K, k_max=max(64, j)).table
    return (1.0 - table.i0_inverse_sq) / table.ratio(j)


def period_first_harmonic(a: float, K: float) -> float:
    """Closed-form rotation period tau(a, K) = 2*pi/sqrt(1 - (a/a_c)^2).

    Valid for 0 <= a < a_c(K); the period diverges at the saddle-node
    a = a_c and equals 2*pi at a = 0.
    """
    if a < 0:
        raise ValueError(f"amplitude must be >= 0, got a = {a}")
    ac = critical_amplitude(1, K)
    if a >= ac:
        raise NoPeriodError(
            f"a = {a:g} >= a_c(K) = {ac:.12g}; the reduced flow has fixed points"
        )
    ratio = a / ac
    return TWO_PI / math.sqrt(1.0 - ratio * ratio)


@dataclass(frozen=True)
class CriticalCurve:
    """Samples of a_{c,j} along a coupling grid."""

    j: int
    K_values: np.ndarray
    a_values: np.ndarray

    def to_csv(self) -> str:
        lines = [f"K,a_c_{self.j}"]
        for K, a in zip(self.K_values, self.a_values):
            lines.append(f"{float(K)!r},{float(a)!r}")
        return "\n".join(lines) + "\n"


def critical_curve(j: int, K_values: Sequence[float]) -> CriticalCurve:
    K_arr = np.asarray(list(K_values), dtype=float)
    a_arr = np.asarray([critical_amplitude(j, K) for K in K_arr])
    return CriticalCurve(j=j, K_values=K_arr, a_values=a_arr)


# ---------------------------------------------------------------------------
# Transitions along a potential family
# ---------------------------------------------------------------------------


def transition_points(
    family: Callable[[float], TrigPolynomial],
    K: float,
    param_range: tuple[float, float],
    n_samples: int = 256,
    tol: float = 1e-6,
) -> list[float]:
    """Parameters where the reduced-flow classification changes.

    `family` maps a scalar parameter to a force V'; each sample is reduced
    to its effective force at coupling K and classified, and every change of
    (kind, number of fixed points) between consecutive samples is refined by
    bisection to `tol`.  Degenerate classifications (the boundary itself)
    are treated as a change marker.
    """
    lo, hi = param_range
    if not hi > lo:
        raise ValueError("param_range must be increasing")
    sd = _sd_cached(K)

    def signature(p: float) -> tuple:
        force = effective_force_coeff(family(p), sd).force
        return classify(force, with_period=False).signature

    params = np.linspace(lo, hi, n_samples)
    sigs = [signature(p) for p in params]
    found = []
    for i in range(n_samples - 1):
        if sigs[i] == sigs[i + 1]:
            continue
        a, b = params[i], params[i + 1]
        sig_a = sigs[i]
        while b - a > tol:
            mid = 0.5 * (a + b)
            if signature(mid) == sig_a:
                a = mid
            else:
                b = mid
        found.append(0.5 * (a + b))
    return found
