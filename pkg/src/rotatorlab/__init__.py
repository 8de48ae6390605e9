"""Numerical laboratory for noisy mean-field rotators with a weak potential.

The package splits along the objects of the theory: `kernel` holds the
synchronized stationary densities and the weighted H^{-1} geometry,
`potential` maps potential slopes to effective phase forces (and back),
`reduced_flow` analyzes the one-dimensional reduced dynamics, `spectral_pde`
integrates the full Fokker-Planck equation and the linearized corrections,
`particle` simulates the finite-N system, and `scan` sweeps phase diagrams.
"""

from .errors import (
    ConvergenceError,
    NoPeriodError,
    PhaseUndefinedError,
    ProjectionError,
    ResolutionWarning,
    StabilityError,
)
from .kernel import (
    BesselTable,
    CircleFunction,
    StationaryDensity,
    bessel_ratio_psi,
    bessel_table,
    hminus1_norm,
    slope_pairing,
    solve_order_parameter,
    weighted_hminus1_inner,
)
from .potential import (
    EffectiveForce,
    TrigPolynomial,
    design_potential,
    effective_force,
    harmonic_amplification,
)
from .reduced_flow import (
    CriticalCurve,
    FixedPoint,
    FlowClassification,
    classify,
    critical_amplitude,
    critical_curve,
    integrate_phase,
    period_first_harmonic,
    period_quadrature,
    transition_points,
)
from .spectral_pde import (
    ManifoldCorrection,
    OrderParameter,
    RunConfig,
    ScalingStudy,
    SimulationTrace,
    SpectralDensity,
    SpectralSolver,
    isochronal_projection,
    linearized_matrix,
    measure_period,
    measure_phase,
    order_parameter,
    phase_velocity_residual,
    run_trajectory,
    solve_manifold_correction,
    stationary_state,
    step,
    uniform_state,
)
from .particle import (
    ParticleEnsemble,
    ParticleTrace,
    em_step,
    empirical_density,
    init_from_density,
    init_from_stationary,
    init_uniform,
    measure_period_particles,
    run_particles,
)
from .scan import (
    CouplingWindow,
    PhaseDiagram,
    coupling_window,
    max_critical_amplitude,
    scan_first_harmonic,
    scan_harmonic,
)

__version__ = "0.1.0"
