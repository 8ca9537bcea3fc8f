"""Local-control pulse synthesis for tunable-coupler population transfer."""

from .dynamics import (
    QuantumState,
    TrajectoryRecord,
    population_derivative_check,
    propagate_step,
    propagate_waveform,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateLevelsError,
    UnknownLabelError,
)
from .lct import LctConfig, LctResult, feedback_value, refined_config, run_lct, seed_state
from .model import (
    DriftSpectrum,
    FluxValue,
    GapMinimum,
    HermitianOperator,
    SystemParams,
    build_control_generator,
    build_drift_hamiltonian,
    eigendecompose,
    flux_to_frequency,
    frequency_to_flux,
    nonadiabatic_coupling,
    single_excitation_gap_minima,
    sweep_eigenvalues,
    sweep_nonadiabatic_couplings,
)
from .optimize import (
    OptimizationReport,
    ReversibilityConfig,
    fit_analytic_pulse,
    nelder_mead,
    optimize_reversible,
    optimize_truncation,
    reverse_error,
)
from .pulses import (
    AnalyticPulseParams,
    PulseSpectrum,
    Waveform,
    analytic_pulse,
    dominant_frequency,
    fourier_spectrum,
    lowpass_filter,
    natural_duration,
    time_reverse,
    truncate_with_gaussian_tail,
)

__version__ = "0.1.0"
