"""Phase-diagram scans over coupling strength and forcing amplitude.

For a pure j-th harmonic potential slope the reduced flow rotates exactly
when the amplitude stays below the critical value a_c,j(K): the effective
force is a unit constant plus a damped j-th harmonic, zero-free until the
harmonic reaches unit size.  So (K, a) cells are classified by one
comparison per cell instead of a classify() call.  The module also answers
the transposed questions: for a fixed amplitude, which couplings rotate
(root finding on a_c,j(K) = a), and how large can the critical amplitude
get over all couplings.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, golden

from .reduced_flow import critical_amplitude

ROTATING = 1
PINNED = 0
BOUNDARY = -1

_KIND_NAMES = {ROTATING: "periodic", PINNED: "fixed_points", BOUNDARY: "degenerate"}


@dataclass
class PhaseDiagram:
    """Cell classification of the (K, a) plane for one forcing harmonic."""

    j: int
    K_values: np.ndarray
    a_values: np.ndarray
    kinds: np.ndarray  # shape (len(K_values), len(a_values)), values in _KIND_NAMES
    curve: np.ndarray  # a_c,j at each K

    def kind_name(self, i: int, k: int) -> str:
        return _KIND_NAMES[int(self.kinds[i, k])]

    def cells_csv(self) -> str:
        lines = ["K,a,kind"]
        for i, K in enumerate(self.K_values):
            for k, a in enumerate(self.a_values):
                lines.append(f"{float(K)!r},{float(a)!r},{self.kind_name(i, k)}")
        return "\n".join(lines) + "\n"

    def curve_csv(self) -> str:
        lines = ["K,a_c_j"]
        for K, ac in zip(self.K_values, self.curve):
            lines.append(f"{float(K)!r},{float(ac)!r}")
        return "\n".join(lines) + "\n"


def _check_couplings(K_values: np.ndarray):
    if np.any(K_values <= 1.0):
        raise ValueError("scans require couplings above the synchronization onset K = 1")


def scan_harmonic(j, K_values, a_values, workers: int | None = None) -> PhaseDiagram:
    """Classify every (K, a) cell for slope a*harmonic_j against a_c,j(K).

    `workers` threads split the K rows; results are merged by row index, so
    the diagram is identical whatever the worker count.
    """
    K_values = np.asarray(K_values, dtype=float)
    a_values = np.asarray(a_values, dtype=float)
    _check_couplings(K_values)
    if np.any(a_values < 0.0):
        raise ValueError("amplitudes must be nonnegative")

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            curve = np.array(list(pool.map(lambda K: critical_amplitude(j, K), K_values)))
    else:
        curve = np.array([critical_amplitude(j, K) for K in K_values])

    kinds = np.empty((len(K_values), len(a_values)), dtype=np.int8)
    for i, ac in enumerate(curve):
        d = a_values - ac
        row = np.where(d < 0.0, ROTATING, PINNED).astype(np.int8)
        row[np.abs(d) < 1e-12] = BOUNDARY
        kinds[i] = row
    return PhaseDiagram(j=int(j), K_values=K_values, a_values=a_values, kinds=kinds, curve=curve)


def scan_first_harmonic(K_values, a_values, workers: int | None = None) -> PhaseDiagram:
    return scan_harmonic(1, K_values, a_values, workers=workers)


@dataclass(frozen=True)
class CouplingWindow:
    """Solution set of a_c,j(K) = a over an interval of couplings.

    kind is "none", "one_root" or "two_roots"; roots holds the crossings in
    increasing order, and rotating_intervals the (K_lo, K_hi) stretches of
    the search interval where the reduced flow rotates (a < a_c,j).
    """

    a: float
    j: int
    kind: str
    roots: tuple
    rotating_intervals: tuple


def coupling_window(
    a: float,
    j: int = 1,
    K_min: float = 1.0 + 1e-6,
    K_max: float = 200.0,
    n_grid: int = 512,
) -> CouplingWindow:
    """Find every K in [K_min, K_max] where a_c,j(K) crosses the level a.

    For the first harmonic the upper crossing drifts like 1/(4(a-1)) as the
    amplitude approaches 1 from above, so the bracket widens automatically
    to keep that root inside.
    """
    if a <= 0.0:
        raise ValueError("amplitude must be positive")
    if j == 1 and a > 1.0:
        K_max = max(K_max, 0.5 / (a - 1.0))

    grid = np.geomspace(K_min, K_max, n_grid)
    vals = np.array([critical_amplitude(j, K) - a for K in grid])

    roots = []
    for i in range(len(grid) - 1):
        lo, hi = vals[i], vals[i + 1]
        if lo == 0.0:
            roots.append(float(grid[i]))
        elif lo * hi < 0.0:
            roots.append(float(brentq(lambda K: critical_amplitude(j, K) - a, grid[i], grid[i + 1], xtol=1e-12, rtol=8.9e-16)))
    if vals[-1] == 0.0:
        roots.append(float(grid[-1]))

    intervals = []
    edges = [float(K_min)] + roots + [float(K_max)]
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid = math.sqrt(lo * hi)
        if critical_amplitude(j, mid) > a:
            intervals.append((lo, hi))

    kind = {0: "none", 1: "one_root", 2: "two_roots"}.get(len(roots), f"{len(roots)}_roots")
    return CouplingWindow(a=a, j=j, kind=kind, roots=tuple(roots), rotating_intervals=tuple(intervals))


def max_critical_amplitude(
    j: int = 1,
    K_min: float = 1.0 + 1e-6,
    K_max: float = 64.0,
    n_coarse: int = 256,
) -> tuple:
    """Maximize a_c,j over couplings; returns (K_at_max, a_max).

    A coarse log grid brackets the maximum, golden-section search refines
    it.  A maximum sitting on the bracket edge widens the interval once; if
    it stays on the edge, the maximum is a supremum at the boundary and a
    ValueError says so.  That is the situation for every j >= 2: those
    curves decrease in K, approaching 4 at the onset for j = 2 and growing
    without bound for higher harmonics.
    """
    for attempt in range(2):
        grid = np.geomspace(K_min, K_max, n_coarse)
        vals = np.array([critical_amplitude(j, K) for K in grid])
        imax = int(np.argmax(vals))
        if 0 < imax < len(grid) - 1:
            break
        if attempt == 1:
            raise ValueError(
                f"a_c,{j} keeps its maximum on the bracket edge even after widening; "
                "no interior maximum over couplings"
            )
        if imax == 0:
            K_min = 1.0 + (K_min - 1.0) / 100.0
        else:
            K_max = K_max * 100.0

    def neg(K: float) -> float:
        return -critical_amplitude(j, K)

    K_star = float(golden(neg, brack=(grid[imax - 1], grid[imax], grid[imax + 1]), tol=1e-12))
    return K_star, critical_amplitude(j, K_star)
