"""Numerical laboratory for the semi-classical regime of the Schrodinger equation.

Building blocks: periodic grids with spectral calculus (grids), a small
potential catalog with closed-form classical actions (potentials), a Strang
split-step propagator (solver), polar decomposition of wave fields
(madelung), guidance-equation particle transport (bohm), min-plus action
propagation and classical densities (classical), exact coherent-state ground
truth (coherent), and hbar-sweep convergence studies (experiments) with a
scenario-file CLI (cli).
"""

from .grids import (
    Grid,
    RealField,
    WaveField,
    gradient,
    laplacian,
    make_grid,
    spectral_gradient,
    spectral_laplacian,
)
from .potentials import (
    CausticError,
    PotentialSpec,
    UnsupportedPotentialError,
    classical_action,
    classical_trajectory,
    connecting_velocity,
    double_slit,
    free,
    harmonic,
    linear,
)
from .solver import (
    AliasingError,
    EvolutionResult,
    PropagatorConfig,
    ResolutionError,
    check_resolution,
    evolve,
    evolve_stream,
    make_energy_observer,
    norm_observer,
    step,
)
from .madelung import (
    DisconnectedSupportWarning,
    MadelungFields,
    decompose,
    madelung_residuals,
)
from .bohm import (
    RejectionSamplingError,
    SpinAxisError,
    VelocityFieldSample,
    integrate_ensemble,
    sample_initial_positions,
    velocity_field,
)
from .classical import (
    ClassicalDensity,
    DeterministSolution,
    MinPlusSolution,
    MultivaluedWarning,
    determinist_solution,
    evolve_classical_density,
    hj_residual,
    hopf_lax_solve,
)
from .coherent import CoherentState, LimitFields, limit_fields, wavefield
from .trajectories import TrajectoryEnsemble
from .experiments import (
    ConvergenceReport,
    Scenario,
    ScenarioError,
    rung_plans,
    run_determinist_sweep,
    run_statistical_sweep,
    run_sweep,
    scenario_echo,
    scenario_from_mapping,
    write_run_dir,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
