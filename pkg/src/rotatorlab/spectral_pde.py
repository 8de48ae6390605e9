"""Spectral solver for the mean-field rotator Fokker-Planck equation.

The density p(theta, t) evolves by

    dp/dt = (1/2) p'' - d/dtheta [ p * (J*p) ] + delta * d/dtheta [ p * V' ],

with sine coupling J(theta) = -K sin(theta), so the convolution collapses to
(J*p)(theta) = -K * Im(e^{i theta} * conj(Z)) with Z = integral e^{i theta} p.
States are truncated Fourier series p = sum_{|k| <= N} c_k e^{ik theta},
stored one-sided (c_0..c_N, with c_{-k} = conj c_k and c_0 pinned to
1/(2*pi)).  Time stepping is an integrating-factor RK4: diffusion (diagonal
in k) is integrated exactly, the advection term with classical fourth-order
stages; products are evaluated pseudospectrally on a 4N grid, which fully
dealiases the quadratic nonlinearity.

The module also assembles the operator of the dynamics linearized at a
stationary density (needed for the first-order correction to the slow
manifold) and provides the isochronal phase that projects PDE states onto
the manifold coordinates.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, asdict
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import (
    ConvergenceError,
    NoPeriodError,
    PhaseUndefinedError,
    ProjectionError,
    ResolutionWarning,
    StabilityError,
)
from .kernel import TWO_PI, CircleFunction, StationaryDensity, bessel_table, slope_pairing
from .potential import TrigPolynomial, effective_force_coeff
from . import reduced_flow

PHASE_EPS = 1e-8
RESOLUTION_RATIO = 1e-6


@dataclass
class SpectralDensity:
    """One-sided Fourier coefficients of a density on the circle."""

    coeffs: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)

    @property
    def n_modes(self) -> int:
        return len(self.coeffs) - 1

    def copy(self) -> "SpectralDensity":
        return SpectralDensity(self.coeffs.copy(), self.time)

    def order_parameter(self) -> complex:
        return TWO_PI * np.conj(self.coeffs[1])

    def samples(self, n: int = 512) -> np.ndarray:
        spec = np.zeros(n // 2 + 1, dtype=complex)
        kmax = min(self.n_modes, n // 2)
        spec[: kmax + 1] = self.coeffs[: kmax + 1]
        return np.fft.irfft(spec * n, n=n)

    def l2_distance(self, other: np.ndarray) -> float:
        """L2 distance to another one-sided coefficient vector."""
        other = np.asarray(other, dtype=complex)
        m = max(len(self.coeffs), len(other))
        d = np.zeros(m, dtype=complex)
        d[: len(self.coeffs)] = self.coeffs
        d[: len(other)] -= other
        return math.sqrt(TWO_PI * (abs(d[0]) ** 2 + 2.0 * float(np.sum(np.abs(d[1:]) ** 2))))

    def well_resolved(self, ratio: float = RESOLUTION_RATIO) -> bool:
        """Spectral-decay alarm: the last mode should be tiny next to the first."""
        head = max(abs(self.coeffs[1]), 1e-300)
        return abs(self.coeffs[-1]) < ratio * head


@dataclass(frozen=True)
class OrderParameter:
    z: complex
    modulus: float
    phase: float


def order_parameter(state: SpectralDensity) -> OrderParameter:
    z = state.order_parameter()
    return OrderParameter(z=z, modulus=abs(z), phase=math.atan2(z.imag, z.real))


def measure_phase(state: SpectralDensity) -> float:
    """Principal phase arg Z of the synchronization order parameter.

    Raises PhaseUndefinedError when |Z| is numerically zero.  On a
    trajectory, feed successive states to a PhaseTracker (or np.unwrap the
    collected values) for a continuously unwrapped phase.
    """
    z = state.order_parameter()
    if abs(z) < PHASE_EPS:
        raise PhaseUndefinedError(f"|Z| = {abs(z):.3e} too small for a phase")
    return math.atan2(z.imag, z.real)


class PhaseTracker:
    """Unwraps measure_phase across successive states of one trajectory."""

    def __init__(self):
        self._last_raw = None
        self._offset = 0.0

    def update(self, state: SpectralDensity) -> float:
        raw = measure_phase(state)
        if self._last_raw is not None:
            d = raw - self._last_raw
            if d > math.pi:
                self._offset -= TWO_PI
            elif d < -math.pi:
                self._offset += TWO_PI
        self._last_raw = raw
        return raw + self._offset


def uniform_state(n_modes: int) -> SpectralDensity:
    c = np.zeros(n_modes + 1, dtype=complex)
    c[0] = 1.0 / TWO_PI
    return SpectralDensity(c)


def stationary_state(sd: StationaryDensity, n_modes: int, psi: float = 0.0) -> SpectralDensity:
    """Truncation of q_psi to n_modes (rebuilding the Bessel table if short)."""
    if sd.table.k_max >= n_modes:
        coeffs = sd.spectral_coeffs(n_modes, psi)
    else:
        table = bessel_table(sd.x, k_max=n_modes)
        k = np.arange(n_modes + 1)
        coeffs = table.ratios * np.exp(-1j * k * psi) / TWO_PI
    state = SpectralDensity(coeffs)
    if not state.well_resolved():
        warnings.warn(
            f"stationary tail |c_N|/|c_1| not negligible at N = {n_modes}",
            ResolutionWarning,
        )
    return state


# ---------------------------------------------------------------------------
# Time stepping
# ---------------------------------------------------------------------------


class SpectralSolver:
    """Integrating-factor RK4 march of the spectral Fokker-Planck system.

    Diffusion is applied through exact exponential factors; the advection
    divergence is evaluated pseudospectrally on a 4N grid each stage.  The
    time step must respect the advective stability bound
    2*sqrt(2) / (N * (K + delta*max|V'|)); violating it raises StabilityError
    carrying the computed bound.
    """

    def __init__(
        self,
        vprime: TrigPolynomial,
        K: float,
        delta: float,
        n_modes: int = 50,
        dt: float = 1e-3,
    ):
        self.vprime = vprime
        self.K = float(K)
        self.delta = float(delta)
        self.n_modes = int(n_modes)
        self.dt = float(dt)

        speed = max(self.K + self.delta * vprime.max_abs(), 1e-12)
        self.stability_bound = 2.0 * math.sqrt(2.0) / (self.n_modes * speed)
        if self.dt > self.stability_bound:
            raise StabilityError(self.dt, self.stability_bound)

        N = self.n_modes
        self.grid_n = 4 * N
        theta = TWO_PI * np.arange(self.grid_n) / self.grid_n
        self._sin = np.sin(theta)
        self._cos = np.cos(theta)
        self._vp = np.asarray(vprime(theta), dtype=float)
        k = np.arange(N + 1)
        self._ik = 1j * k
        lam = -0.5 * k.astype(float) ** 2
        self._E = np.exp(lam * self.dt / 2.0)
        self._E2 = np.exp(lam * self.dt)

    def _nonlinear(self, c: np.ndarray) -> np.ndarray:
        # -d/dtheta [ p * (J*p - delta*V') ] in coefficient space.
        M = self.grid_n
        spec = np.zeros(M // 2 + 1, dtype=complex)
        spec[: self.n_modes + 1] = c
        p = np.fft.irfft(spec * M, n=M)
        z = TWO_PI * np.conj(c[1])
        w = -self.K * (z.real * self._sin - z.imag * self._cos) - self.delta * self._vp
        u_hat = np.fft.rfft(p * w) / M
        return -self._ik * u_hat[: self.n_modes + 1]

    def rhs(self, c: np.ndarray) -> np.ndarray:
        """Full right side (diffusion + advection) at coefficients c."""
        k2 = np.arange(self.n_modes + 1, dtype=float) ** 2
        return -0.5 * k2 * c + self._nonlinear(c)

    def step_coeffs(self, c: np.ndarray) -> np.ndarray:
        dt, E, E2 = self.dt, self._E, self._E2
        n1 = self._nonlinear(c)
        n2 = self._nonlinear(E * (c + (0.5 * dt) * n1))
        n3 = self._nonlinear(E * c + (0.5 * dt) * n2)
        n4 = self._nonlinear(E2 * c + dt * (E * n3))
        out = E2 * c + (dt / 6.0) * (E2 * n1 + 2.0 * E * (n2 + n3) + n4)
        out[0] = 1.0 / TWO_PI  # mass is conserved exactly; re-pin against drift
        return out

    def advance(self, state: SpectralDensity, n_steps: int) -> SpectralDensity:
        c = state.coeffs.copy()
        for _ in range(n_steps):
            c = self.step_coeffs(c)
        return SpectralDensity(c, state.time + n_steps * self.dt)


_solver_cache: dict = {}


def _solver_for(vprime: TrigPolynomial, K: float, delta: float, n_modes: int, dt: float) -> SpectralSolver:
    key = (vprime.a0, tuple(vprime.a), tuple(vprime.b), K, delta, n_modes, dt)
    solver = _solver_cache.get(key)
    if solver is None:
        solver = SpectralSolver(vprime, K, delta, n_modes, dt)
        if len(_solver_cache) > 64:
            _solver_cache.clear()
        _solver_cache[key] = solver
    return solver


def step(
    state: SpectralDensity,
    vprime: TrigPolynomial,
    K: float,
    delta: float,
    dt: float = 1e-3,
) -> SpectralDensity:
    """Advance a spectral state by one time step of size dt."""
    solver = _solver_for(vprime, K, delta, state.n_modes, dt)
    return solver.advance(state, 1)


# ---------------------------------------------------------------------------
# Isochronal projection onto the manifold coordinate
# ---------------------------------------------------------------------------


def isochronal_projection(
    state: SpectralDensity,
    sd: StationaryDensity,
    window: float = math.pi / 4.0,
    n_grid: int = 512,
) -> float:
    """Phase psi* with (p - q_psi*, q'_psi*)_{-1,1/q_psi*} = 0 near arg Z.

    The root is bracketed inside [arg Z - window, arg Z + window]; absence
    of a sign change there raises ProjectionError (the state is too far from
    the manifold for the isochronal chart).
    """
    p = state.samples(n_grid)
    theta = TWO_PI * np.arange(n_grid) / n_grid
    center = measure_phase(state)

    def h(psi: float) -> float:
        v = p - sd.density(theta, psi)
        return slope_pairing(v, sd, psi=psi, n=n_grid)

    lo, hi = center - window, center + window
    flo, fhi = h(lo), h(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise ProjectionError(
            f"no isochronal root in [{lo:.4f}, {hi:.4f}] (h = {flo:.3e}, {fhi:.3e})"
        )
    return float(brentq(h, lo, hi, xtol=1e-12, rtol=8.9e-16))


# ---------------------------------------------------------------------------
# Run configuration and trajectory runner
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    """Numerical knobs of a PDE run, JSON-serializable for manifests.

    t_end, transient and sample_every are in original time units; windings
    counts full 2*pi turns used by the period estimate.  The optional
    potential/K/delta fields let a single JSON document describe a full
    experiment; library calls pass those explicitly instead.
    """

    n_modes: int = 50
    dt: float = 0.01
    t_end: float | None = None
    transient: float | None = None
    sample_every: float | None = None
    windings: int = 5
    check_positivity: bool = False
    potential: str | None = None
    K: float | None = None
    delta: float | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        d = json.loads(text)
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})


@dataclass
class SimulationTrace:
    """Sampled observables of one PDE run."""

    t: np.ndarray
    phase: np.ndarray  # unwrapped arg Z at the sample times
    z: np.ndarray
    dist: np.ndarray | None
    snapshots: list
    final: SpectralDensity
    min_density: float | None = None


def run_trajectory(
    vprime: TrigPolynomial,
    K: float,
    delta: float,
    run: RunConfig,
    initial: SpectralDensity | None = None,
    sd: StationaryDensity | None = None,
    collect_snapshots: bool = False,
    snapshot_every: float | None = None,
    track_distance: bool = False,
) -> SimulationTrace:
    """March the PDE, sampling phase/order parameter on a uniform schedule."""
    if run.t_end is None:
        raise ValueError("run.t_end must be set for run_trajectory")
    solver = SpectralSolver(vprime, K, delta, run.n_modes, run.dt)
    if sd is None:
        sd = reduced_flow._sd_cached(K)
    if initial is None:
        initial = stationary_state(sd, run.n_modes)

    sample_dt = run.sample_every if run.sample_every is not None else max(run.dt, run.t_end / 4096.0)
    stride = max(1, int(round(sample_dt / run.dt)))
    n_steps = int(math.ceil(run.t_end / run.dt))
    n_samples = n_steps // stride + 1

    snap_stride = None
    if collect_snapshots:
        if snapshot_every is None:
            snapshot_every = run.t_end / 32.0
        snap_stride = max(1, int(round(snapshot_every / run.dt)))

    c = initial.coeffs.copy()
    t0 = initial.time
    times = np.empty(n_samples)
    raw_phase = np.empty(n_samples)
    zs = np.empty(n_samples, dtype=complex)
    dists = np.empty(n_samples) if track_distance else None
    snapshots = []
    min_density = math.inf if run.check_positivity else None

    q_ref = sd.spectral_coeffs(run.n_modes) if track_distance else None

    def record(idx: int, step_i: int):
        t = t0 + step_i * run.dt
        z = TWO_PI * np.conj(c[1])
        if abs(z) < PHASE_EPS:
            raise PhaseUndefinedError(f"|Z| collapsed at t = {t:g}")
        times[idx] = t
        zs[idx] = z
        raw_phase[idx] = math.atan2(z.imag, z.real)
        if track_distance:
            state = SpectralDensity(c, t)
            try:
                psi = isochronal_projection(state, sd)
            except (ProjectionError, PhaseUndefinedError):
                psi = math.atan2(z.imag, z.real)
            k = np.arange(run.n_modes + 1)
            dists[idx] = state.l2_distance(q_ref * np.exp(-1j * k * psi))

    record(0, 0)
    if collect_snapshots:
        snapshots.append((t0, c.copy()))
    idx = 1
    for i in range(1, n_steps + 1):
        c = solver.step_coeffs(c)
        if run.check_positivity and i % stride == 0:
            min_density = min(min_density, float(np.min(SpectralDensity(c).samples(512))))
        if i % stride == 0 and idx < n_samples:
            record(idx, i)
            idx += 1
        if snap_stride is not None and i % snap_stride == 0:
            snapshots.append((t0 + i * run.dt, c.copy()))

    final = SpectralDensity(c, t0 + n_steps * run.dt)
    if not final.well_resolved():
        warnings.warn("spectral tail grew during the run; raise n_modes", ResolutionWarning)
    phase = np.unwrap(raw_phase[:idx])
    return SimulationTrace(
        t=times[:idx],
        phase=phase,
        z=zs[:idx],
        dist=dists[:idx] if track_distance else None,
        snapshots=snapshots,
        final=final,
        min_density=min_density,
    )


def measure_period(
    vprime: TrigPolynomial,
    K: float,
    delta: float,
    run: RunConfig | None = None,
) -> float:
    """Rotation period of the PDE orbit: mean time per 2*pi of arg Z.

    Requires the reduced flow of vprime at coupling K to be periodic (the
    reduced period tau budgets the transient and the measuring window).  The
    transient is 1.25 reduced cycles; the estimate averages `run.windings`
    (default 5) full turns, located by linear interpolation of the sampled
    unwrapped phase.
    """
    run = run or RunConfig()
    sd = reduced_flow._sd_cached(K)
    force = effective_force_coeff(vprime, sd).force
    cls = reduced_flow.classify(force)
    if cls.kind != "periodic":
        raise NoPeriodError(f"reduced flow is {cls.kind}; no rotation period to measure")
    cycle = cls.period / delta

    transient = run.transient if run.transient is not None else 1.25 * cycle
    windings = run.windings
    t_end = run.t_end if run.t_end is not None else transient + (windings + 1.4) * cycle
    sample_dt = run.sample_every if run.sample_every is not None else max(run.dt, cycle / 8192.0)
    cfg = RunConfig(
        n_modes=run.n_modes,
        dt=run.dt,
        t_end=t_end,
        sample_every=sample_dt,
        check_positivity=run.check_positivity,
    )
    trace = run_trajectory(vprime, K, delta, cfg, sd=sd)

    mask = trace.t >= transient
    if not np.any(mask):
        raise ValueError("transient longer than the run; nothing to measure")
    t = trace.t[mask]
    phi = trace.phase[mask]
    drift = phi[-1] - phi[0]
    if abs(drift) < TWO_PI * (windings + 1):
        raise NoPeriodError(
            f"phase advanced only {drift:.3f} rad after the transient; "
            "t_end too short for the requested windings"
        )
    direction = math.copysign(1.0, drift)
    mono = direction * (phi - phi[0])

    def crossing(level: float) -> float:
        i = int(np.searchsorted(mono, level))
        frac = (level - mono[i - 1]) / (mono[i] - mono[i - 1])
        return float(t[i - 1] + frac * (t[i] - t[i - 1]))

    t_first = crossing(TWO_PI)
    t_last = crossing(TWO_PI * (windings + 1))
    return (t_last - t_first) / windings


# ---------------------------------------------------------------------------
# Linearized operator and the first-order manifold correction
# ---------------------------------------------------------------------------


def linearized_matrix(sd: StationaryDensity, psi: float, n_modes: int) -> np.ndarray:
    """Dense matrix of the linearization L_q at q_psi on modes -N..N.

    L_q u = -(1/2) u'' + [ u (J*q) + q (J*u) ]'.  Row/column index m runs
    from -N to N (offset by N); the m = 0 row and column vanish since L_q
    preserves zero mean.
    """
    N = n_modes
    size = 2 * N + 1
    m = np.arange(-N, N + 1)

    table = sd.table if sd.table.k_max >= 2 * N else bessel_table(sd.x, k_max=2 * N)
    j = np.arange(-2 * N, 2 * N + 1)
    q_hat = table.ratios[np.abs(j)] * np.exp(-1j * j * psi) / TWO_PI

    def mult_matrix(g_hat: np.ndarray) -> np.ndarray:
        # g_hat indexed by j in [-2N, 2N]; entry (row, col) = g_hat[row - col].
        rows, cols = np.meshgrid(m, m, indexing="ij")
        return g_hat[(rows - cols) + 2 * N]

    K = sd.K
    jq_hat = np.zeros_like(q_hat)
    jq_hat[2 * N + 1] = 1j * math.pi * K * q_hat[2 * N + 1]
    jq_hat[2 * N - 1] = -1j * math.pi * K * q_hat[2 * N - 1]

    conv_op = np.zeros((size, size), dtype=complex)
    conv_op[N + 1, N + 1] = 1j * math.pi * K
    conv_op[N - 1, N - 1] = -1j * math.pi * K

    D = np.diag(1j * m.astype(float))
    A = np.diag(0.5 * m.astype(float) ** 2).astype(complex)
    A += D @ (mult_matrix(jq_hat) + mult_matrix(q_hat) @ conv_op)
    return A


@dataclass
class ManifoldCorrection:
    """First-order shape correction n_psi of the slow manifold at phase psi."""

    psi: float
    profile: CircleFunction
    coeffs: np.ndarray  # two-sided, index m + n_modes
    n_modes: int
    residual: float
    condition: float

    def coeff(self, m: int) -> complex:
        return self.coeffs[m + self.n_modes]

    def one_sided(self, n_modes: int) -> np.ndarray:
        out = np.zeros(n_modes + 1, dtype=complex)
        avail = min(n_modes, self.n_modes)
        out[: avail + 1] = self.coeffs[self.n_modes : self.n_modes + avail + 1]
        return out


def _hminus1_norm_coeffs(res: np.ndarray, m: np.ndarray) -> float:
    nz = m != 0
    return math.sqrt(TWO_PI * float(np.sum(np.abs(res[nz]) ** 2 / m[nz].astype(float) ** 2)))


def solve_manifold_correction(
    psi: float,
    vprime: TrigPolynomial,
    sd: StationaryDensity,
    n_modes: int = 64,
    cond_limit: float = 1e12,
) -> ManifoldCorrection:
    """Solve L_q n = (q V')' - f(psi) q' for the zero-pairing representative.

    The right side is orthogonal to the kernel of L_q (spanned by q') by the
    definition of the effective force value f(psi), so the bordered system

        [ L_q   q' ] [n     ]   [rhs]
        [ row   0  ] [lambda] = [0  ]

    with `row` the weighted H^{-1} pairing against q' is square and well
    conditioned; lambda returns as numerical noise.  The reported residual
    is the H^{-1} norm of L_q n - rhs.
    """
    if not sd.synchronized:
        raise ValueError("manifold correction requires the synchronized branch")
    N = n_modes
    size = 2 * N + 1
    m = np.arange(-N, N + 1)
    A = linearized_matrix(sd, psi, N)

    # rhs = (q V')' - f(psi) q', assembled from fine-grid samples.
    n_fine = 8 * N
    theta = TWO_PI * np.arange(n_fine) / n_fine
    q_samp = sd.density(theta, psi)
    gv = q_samp * vprime(theta)
    gv_spec = np.fft.fft(gv) / n_fine  # two-sided; index k mod n_fine
    f_psi = effective_force_coeff(vprime, sd).force(psi)

    table = sd.table if sd.table.k_max >= N else bessel_table(sd.x, k_max=N)
    q_hat = table.ratios[np.abs(m)] * np.exp(-1j * m * psi) / TWO_PI
    qprime_hat = 1j * m * q_hat
    rhs = 1j * m * gv_spec[np.mod(m, n_fine)] - f_psi * qprime_hat

    # Pairing row: (n, q')_{-1,1/q_psi} as a functional of the coefficients.
    # With script-N the primitive of n, the closed form reduces to
    # -sum_m n_m W_m / (I0_scaled * i m), W_m = int e^{im th} e^{-x(1+cos(th-psi))}.
    wker = np.exp(-sd.x * (1.0 + np.cos(theta - psi)))
    wspec = np.fft.fft(wker) * (TWO_PI / n_fine)  # approx int e^{-ik th} wker
    W = np.conj(wspec[np.mod(m, n_fine)])
    row = np.zeros(size, dtype=complex)
    nz = m != 0
    row[nz] = -W[nz] / (float(sd.table.scaled[0]) * 1j * m[nz])

    aug = np.zeros((size + 1, size + 1), dtype=complex)
    aug[:size, :size] = A
    aug[:size, size] = qprime_hat
    aug[size, :size] = row
    b = np.concatenate([rhs, [0.0]])

    # The m = 0 row/column of L_q is exactly zero (zero-mean invariance);
    # pin n_0 = 0 to keep the bordered matrix nonsingular.
    zero_idx = N
    aug[zero_idx, :] = 0.0
    aug[:, zero_idx] = 0.0
    aug[zero_idx, zero_idx] = 1.0
    b[zero_idx] = 0.0

    condition = float(np.linalg.cond(aug))
    if condition > cond_limit:
        raise ConvergenceError(
            f"linearized solve ill-conditioned (cond = {condition:.3e})",
            residual=condition,
        )
    sol = np.linalg.solve(aug, b)
    n_coeffs = sol[:size]
    # Enforce the Hermitian symmetry of a real profile (solver noise only).
    n_coeffs = 0.5 * (n_coeffs + np.conj(n_coeffs[::-1]))

    residual = _hminus1_norm_coeffs(A @ n_coeffs - rhs, m)
    one_sided = n_coeffs[N:]
    profile = CircleFunction.from_complex_coeffs(one_sided, n=512)
    return ManifoldCorrection(
        psi=psi,
        profile=profile,
        coeffs=n_coeffs,
        n_modes=N,
        residual=residual,
        condition=condition,
    )


# ---------------------------------------------------------------------------
# Slow-manifold scaling studies in delta
# ---------------------------------------------------------------------------


@dataclass
class ScalingStudy:
    """Residual and shape-error maxima across a ladder of delta values."""

    deltas: np.ndarray
    residual_max: np.ndarray
    shape_max: np.ndarray
    residual_exponent: float
    shape_exponent: float


def _h1_norm_onesided(e: np.ndarray) -> float:
    k = np.arange(len(e))
    return math.sqrt(TWO_PI * (abs(e[0]) ** 2 + 2.0 * float(np.sum((1.0 + k[1:] ** 2) * np.abs(e[1:]) ** 2))))


def phase_velocity_residual(
    vprime: TrigPolynomial,
    K: float,
    deltas: Sequence[float],
    run: RunConfig | None = None,
) -> ScalingStudy:
    """Measure max_t |psi-dot + delta f(psi)| over one cycle per delta.

    The PDE starts from q_0 + delta*n_0 (first-order manifold point), runs
    just over one reduced cycle, and the phase velocity comes from central
    differences of the sampled unwrapped arg Z.  Alongside the velocity
    residual the same runs yield the shape error
    ||p - q_psi* - delta*n_psi*||_{H^1} at matched isochronal phase psi*.
    Both maxima are fitted as C*delta^p; the study carries both exponents.
    """
    run = run or RunConfig()
    deltas = np.asarray(sorted(deltas), dtype=float)
    sd = reduced_flow._sd_cached(K)
    force = effective_force_coeff(vprime, sd).force
    cls = reduced_flow.classify(force)
    if cls.kind != "periodic":
        raise NoPeriodError("scaling study expects a rotating reduced flow")
    tau = cls.period

    correction = solve_manifold_correction(0.0, vprime, sd, n_modes=max(64, run.n_modes))
    n0 = correction.one_sided(run.n_modes)
    q0 = stationary_state(sd, run.n_modes).coeffs
    k = np.arange(run.n_modes + 1)
    q_ratio = TWO_PI * q0  # |q_ratio[k]| = I_k/I_0, phase 0

    res_max = np.empty(len(deltas))
    shape_max = np.empty(len(deltas))
    for i, delta in enumerate(deltas):
        cycle = tau / delta
        cfg = RunConfig(
            n_modes=run.n_modes,
            dt=run.dt,
            t_end=1.04 * cycle,
            sample_every=max(run.dt, cycle / 4096.0),
        )
        initial = SpectralDensity(q0 + delta * n0)
        trace = run_trajectory(
            vprime, K, delta, cfg,
            initial=initial, sd=sd,
            collect_snapshots=True, snapshot_every=cycle / 40.0,
        )
        t, phi = trace.t, trace.phase
        # interior central differences, skipping the early settling stretch
        dphi = (phi[2:] - phi[:-2]) / (t[2:] - t[:-2])
        mid_t = t[1:-1]
        mid_phi = phi[1:-1]
        keep = mid_t >= 0.04 * cycle
        resid = np.abs(dphi[keep] + delta * force(mid_phi[keep]))
        res_max[i] = float(np.max(resid))

        worst = 0.0
        for t_snap, c_snap in trace.snapshots:
            if t_snap < 0.04 * cycle:
                continue
            state = SpectralDensity(c_snap, t_snap)
            psi = isochronal_projection(state, sd)
            # The correction is not a rotation of n_0 (the potential stays in
            # the lab frame), so it has to be solved at each sampled phase.
            n_psi = solve_manifold_correction(
                psi, vprime, sd, n_modes=max(64, run.n_modes)
            ).one_sided(run.n_modes)
            model = q_ratio / TWO_PI * np.exp(-1j * k * psi) + delta * n_psi
            worst = max(worst, _h1_norm_onesided(c_snap - model))
        shape_max[i] = worst

    res_fit = np.polyfit(np.log(deltas), np.log(res_max), 1)
    shape_fit = np.polyfit(np.log(deltas), np.log(shape_max), 1)
    return ScalingStudy(
        deltas=deltas,
        residual_max=res_max,
        shape_max=shape_max,
        residual_exponent=float(res_fit[0]),
        shape_exponent=float(shape_fit[0]),
    )


# ---------------------------------------------------------------------------
# Plain-text outputs
# ---------------------------------------------------------------------------


def trajectory_csv(trace: SimulationTrace) -> str:
    lines = ["t,phase_unwrapped,Z_re,Z_im,dist_to_M"]
    dist = trace.dist if trace.dist is not None else np.full(len(trace.t), math.nan)
    for t, ph, z, d in zip(trace.t, trace.phase, trace.z, dist):
        lines.append(f"{float(t)!r},{float(ph)!r},{float(z.real)!r},{float(z.imag)!r},{float(d)!r}")
    return "\n".join(lines) + "\n"


def snapshot_csv(state: SpectralDensity, n: int = 512) -> str:
    theta = TWO_PI * np.arange(n) / n
    p = state.samples(n)
    lines = ["theta,p"]
    for th, val in zip(theta, p):
        lines.append(f"{float(th)!r},{float(val)!r}")
    return "\n".join(lines) + "\n"
