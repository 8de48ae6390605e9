"""Euler-Maruyama simulation of the interacting rotator ensemble.

N phases evolve by

    dpsi_j = -delta*V'(psi_j) dt - (K/N) sum_i sin(psi_j - psi_i) dt + dW_j,

with the all-to-all sine coupling collapsed through the empirical order
parameter Z_N = (1/N) sum_i e^{i psi_i}, so a step costs O(N).

Randomness is counter-based (Philox) and keyed by (seed, lane, step):
lane 0 draws initial conditions, lane 1 the increments of step `step`.
Trajectories are therefore bitwise reproducible for a given seed and dt,
independent of sampling choices or of how long the run continues.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import NoPeriodError
from .kernel import TWO_PI, StationaryDensity
from .potential import TrigPolynomial, effective_force_coeff
from . import reduced_flow

INIT_LANE = 0
STEP_LANE = 1
CDF_NODES = 4096


def _rng(seed: int, lane: int, step: int = 0) -> np.random.Generator:
    key = np.array([np.uint64(seed), np.uint64((lane << 48) + step)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass
class ParticleEnsemble:
    """Phase configuration of the N-rotator system at one instant."""

    phases: np.ndarray
    time: float = 0.0
    step_index: int = 0
    seed: int = 0

    def __post_init__(self):
        self.phases = np.asarray(self.phases, dtype=float)

    @property
    def n(self) -> int:
        return len(self.phases)

    def order_parameter(self) -> complex:
        return complex(np.mean(np.exp(1j * self.phases)))

    def copy(self) -> "ParticleEnsemble":
        return ParticleEnsemble(self.phases.copy(), self.time, self.step_index, self.seed)


def init_from_density(density: Callable, n: int, seed: int = 0) -> ParticleEnsemble:
    """Sample n phases from a density on [0, 2*pi) by inverse transform.

    The CDF is tabulated on CDF_NODES+1 equally spaced nodes and inverted by
    linear interpolation, adequate for the smooth densities used here.
    """
    nodes = np.linspace(0.0, TWO_PI, CDF_NODES + 1)
    pdf = np.asarray(density(nodes), dtype=float)
    if np.any(pdf < 0.0):
        raise ValueError("density must be nonnegative")
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * np.diff(nodes))])
    if cdf[-1] <= 0.0:
        raise ValueError("density integrates to zero")
    cdf /= cdf[-1]
    u = _rng(seed, INIT_LANE).random(n)
    phases = np.interp(u, cdf, nodes)
    return ParticleEnsemble(phases, seed=seed)


def init_from_stationary(sd: StationaryDensity, n: int, seed: int = 0, psi: float = 0.0) -> ParticleEnsemble:
    return init_from_density(lambda th: sd.density(th, psi), n, seed=seed)


def init_uniform(n: int, seed: int = 0) -> ParticleEnsemble:
    phases = _rng(seed, INIT_LANE).random(n) * TWO_PI
    return ParticleEnsemble(phases, seed=seed)


def em_step(
    ens: ParticleEnsemble,
    vprime: TrigPolynomial,
    K: float,
    delta: float,
    dt: float,
    sigma: float = 1.0,
) -> ParticleEnsemble:
    """One Euler-Maruyama step; returns a new ensemble, input untouched."""
    stepper = _Stepper(vprime, K, delta, dt, sigma, ens.seed)
    phases = ens.phases.copy()
    stepper._one(phases, ens.step_index)
    return ParticleEnsemble(phases, ens.time + dt, ens.step_index + 1, ens.seed)


class _Stepper:
    """Reusable per-run state: potential coefficients and noise scale."""

    def __init__(self, vprime: TrigPolynomial, K: float, delta: float, dt: float, sigma: float, seed: int):
        self.a0 = float(vprime.a0)
        self.a = np.asarray(vprime.a, dtype=float)
        self.b = np.asarray(vprime.b, dtype=float)
        self.deg = len(self.a)
        self.K = float(K)
        self.delta = float(delta)
        self.dt = float(dt)
        self.noise = sigma * math.sqrt(dt)
        self.seed = seed

    def _one(self, phases: np.ndarray, step_index: int) -> complex:
        c = np.cos(phases)
        s = np.sin(phases)
        zr = float(np.mean(c))
        zi = float(np.mean(s))
        drift = -self.K * (s * zr - c * zi)
        if self.deg or self.a0:
            v = np.full_like(phases, self.a0)
            ck, sk = c, s
            for k in range(self.deg):
                if self.a[k] or self.b[k]:
                    v += self.a[k] * ck + self.b[k] * sk
                if k + 1 < self.deg:
                    ck, sk = ck * c - sk * s, sk * c + ck * s
            drift -= self.delta * v
        w = _rng(self.seed, STEP_LANE, step_index).standard_normal(len(phases))
        phases += drift * self.dt + self.noise * w
        phases %= TWO_PI
        return complex(zr, zi)


@dataclass
class ParticleTrace:
    """Sampled empirical order parameter of one ensemble run."""

    t: np.ndarray
    z: np.ndarray
    final: ParticleEnsemble

    @property
    def modulus(self) -> np.ndarray:
        return np.abs(self.z)

    def phase_unwrapped(self) -> np.ndarray:
        return np.unwrap(np.angle(self.z))


def run_particles(
    ens: ParticleEnsemble,
    vprime: TrigPolynomial,
    K: float,
    delta: float,
    t_end: float,
    dt: float,
    sigma: float = 1.0,
    sample_every: float | None = None,
) -> ParticleTrace:
    """March the ensemble to ens.time + t_end, sampling Z_N on the way."""
    stepper = _Stepper(vprime, K, delta, dt, sigma, ens.seed)
    n_steps = int(math.ceil(t_end / dt))
    stride = max(1, int(round((sample_every or dt) / dt)))
    phases = ens.phases.copy()

    times = [ens.time]
    zs = [ens.order_parameter()]
    for i in range(n_steps):
        stepper._one(phases, ens.step_index + i)
        done = i + 1
        if done % stride == 0 or done == n_steps:
            times.append(ens.time + done * dt)
            zs.append(complex(np.mean(np.cos(phases)), np.mean(np.sin(phases))))
    final = ParticleEnsemble(phases, ens.time + n_steps * dt, ens.step_index + n_steps, ens.seed)
    return ParticleTrace(np.array(times), np.array(zs, dtype=complex), final)


def measure_period_particles(
    vprime: TrigPolynomial,
    K: float,
    delta: float,
    n_particles: int = 10_000,
    dt: float = 5e-3,
    seed: int = 0,
    windings: int = 2,
    transient: float = 25.0,
) -> float:
    """Rotation period of arg Z_N, averaged over full turns after a transient.

    The ensemble starts on the stationary profile, so only the O(1) shape
    relaxation needs burning off (`transient` is in time units, not cycles).
    Crossings of half-turn levels pi + 2*pi*m are located by linear
    interpolation of the sampled unwrapped phase; half-turn offsets keep the
    crossing levels away from the noisy series endpoints.  The estimate
    carries O(1/sqrt(N)) statistical noise, well under a percent of the
    period at the defaults.

    Finite ensembles dwell longer near the slowest stretch of the cycle than
    the mean-field period predicts (the excess shrinks with N), so the run
    extends itself in half-cycle chunks until the phase has wound far enough,
    up to a hard cap of about 1.7x the mean-field budget.
    """
    sd = reduced_flow._sd_cached(K)
    force = effective_force_coeff(vprime, sd).force
    cls = reduced_flow.classify(force)
    if cls.kind != "periodic":
        raise NoPeriodError(f"reduced flow is {cls.kind}")
    cycle = cls.period / delta

    ens = init_from_stationary(sd, n_particles, seed=seed)
    # coarse sampling keeps the phase increment between samples well above
    # the O(1/sqrt(N)) phase noise, so the series stays monotone
    sample = cycle / 256.0
    last_level = math.pi + TWO_PI * windings
    needed = last_level + 0.25 * math.pi
    cap = transient + 1.7 * (windings + 0.75) * cycle

    trace = run_particles(ens, vprime, K, delta, transient + (windings + 0.75) * cycle, dt, sample_every=sample)
    ts, zs = [trace.t], [trace.z]
    while True:
        t = np.concatenate(ts)
        mask = t >= transient
        phi = np.unwrap(np.angle(np.concatenate(zs)[mask]))
        if abs(phi[-1] - phi[0]) >= needed:
            break
        if trace.final.time >= cap:
            raise NoPeriodError("phase winds too slowly for the requested windings")
        trace = run_particles(trace.final, vprime, K, delta, 0.5 * cycle, dt, sample_every=sample)
        ts.append(trace.t[1:])
        zs.append(trace.z[1:])
    t = t[mask]
    mono = math.copysign(1.0, phi[-1] - phi[0]) * (phi - phi[0])

    def crossing(level: float) -> float:
        i = int(np.argmax(mono >= level))
        frac = (level - mono[i - 1]) / (mono[i] - mono[i - 1])
        return float(t[i - 1] + frac * (t[i] - t[i - 1]))

    first = crossing(math.pi)
    last = crossing(last_level)
    return (last - first) / windings


def empirical_density(ens: ParticleEnsemble, bins: int = 64):
    """Histogram estimate of the phase density; returns (centers, heights)."""
    heights, edges = np.histogram(ens.phases, bins=bins, range=(0.0, TWO_PI), density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return centers, heights


def trace_csv(trace: ParticleTrace) -> str:
    lines = ["t,ZN_re,ZN_im,absZN"]
    for t, z in zip(trace.t, trace.z):
        lines.append(f"{float(t)!r},{float(z.real)!r},{float(z.imag)!r},{float(abs(z))!r}")
    return "\n".join(lines) + "\n"


def phases_snapshot(ens: ParticleEnsemble) -> str:
    """Raw configuration dump: one phase per line."""
    return "\n".join(repr(float(p)) for p in ens.phases) + "\n"
