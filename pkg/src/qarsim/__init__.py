"""Simulator and analysis toolkit for a three-qudit reset refrigerator.

Two independent dynamical models of the same device: a full Lindblad master
equation on the qubit-qutrit-qubit product space, and a reduced rate model
on the six-state basis that carries the reset physics. Shared thermodynamics
(occupations, heat currents, COP), experiment protocols, least-squares
fitting, and a deterministic artifact pipeline sit on top.
"""

from .errors import (
    BudgetError,
    ConfigurationError,
    DegenerateSteadyStateError,
    DimensionError,
    FitError,
    IntegrationError,
    NoResetError,
    QarsimError,
    StaleStateError,
    StateInvariantError,
    ThermodynamicsError,
)
from .hilbert import (
    BasisLabel,
    Operator,
    QuditSpace,
    annihilation,
    basis_index,
    basis_projector,
    creation,
    identity,
    make_space,
    number_operator,
)
from .model import (
    DeviceParams,
    DriveSpec,
    build_bare_hamiltonian,
    build_driven_hamiltonian,
    build_effective_hamiltonian,
    corotating_effective_hamiltonian,
    resonance_frequency,
)
from .lindblad import (
    DensityMatrix,
    DissipationChannel,
    Liouvillian,
    apply_channel,
    basis_state,
    build_liouvillian,
    dissipator,
    evolve,
    steady_state,
    thermal_state,
)
from .thermo import (
    BathConfig,
    CopResult,
    carnot_cop,
    cop,
    effective_temperature,
    heat_currents,
    occupation_from_temperature,
    temperature_from_occupation,
)
from .rate_model import (
    BASIS_LABELS,
    VARIANTS,
    RateSet,
    RateState,
    build_rate_matrix,
    propagate,
    rate_model_heat_currents,
    rate_steady_state,
    steady_state_population,
    thermal_rates,
)
from .experiments import (
    ExperimentSpec,
    RabiEstimate,
    ResetTimeSweepResult,
    ScanResult,
    SweepResult,
    TraceResult,
    approach_time,
    rabi_population_estimate,
    reset_time,
    run_avoided_crossing_scan,
    run_drive_rate_sweep,
    run_reset_time_sweep,
    run_reset_trace,
    run_residual_init_trace,
    steady_state_population_sweep,
)
from .fit import (
    FitProblem,
    FitResult,
    FreeParameter,
    fit_trace,
    load_trace_csv,
    profile_loss,
)
from .output import TableArtifact, render_svg, write_csv, write_json
from .presets import (
    PRESET_NAMES,
    PresetResult,
    device_info,
    list_presets,
    run_experiment,
    run_preset,
)

__version__ = "1.0.0"
