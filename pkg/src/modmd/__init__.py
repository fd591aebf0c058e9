"""Multi-observable dynamic mode decomposition for quantum eigenvalue
estimation from simulated real-time signals."""

from .errors import (
    ConfigError,
    DegenerateInputError,
    EigenvalueShortfallError,
    ModmdError,
    PauliParseError,
    ResourceCapError,
)
from .pauli import (
    AffineShift,
    DENSE_QUBIT_CAP,
    PauliString,
    PauliSum,
    apply_pauli_string,
    build_tfim,
    format_pauli_sum,
    parse_pauli_sum,
    partial_sum_observables,
    random_one_local,
    shift_and_scale,
    sort_by_weight,
    to_dense,
)
from .simulate import (
    CompositeState,
    MultiObservableSignal,
    SpectralDecomposition,
    StateVector,
    build_reference_superposition,
    composite_state,
    diagonalize,
    evolve,
    exact_signal,
    trotter_evolve,
    trotter_steps,
)
from .shadows import (
    NoiseSpec,
    RankTwoObservable,
    ShadowSample,
    build_gamma,
    estimate_trace,
    gaussian_noise_channel,
    haar_unitary,
    sample_shadows,
    shadow_signal,
    shot_budget,
    variance_bound,
)
from .solver import (
    HankelPair,
    ModmdConfig,
    ModmdEstimate,
    TruncatedPinv,
    build_hankel,
    estimate_eigenstate,
    extract_eigen,
    forecast,
    ground_energy_error_bound,
    residual,
    run_modmd,
    select_time_step,
    solve_system_matrix,
    truncated_pinv,
)
from .harness import (
    ExperimentConfig,
    ForecastResult,
    ForecastRow,
    OUTPUT_DIR_ENV,
    Problem,
    SweepResult,
    SweepRow,
    build_observables,
    build_problem,
    config_from_dict,
    config_to_dict,
    derive_seed,
    emit_outputs,
    load_config,
    measure_signal,
    replay_manifest,
    resolve_output_dir,
    run_convergence_sweep,
    run_forecast_experiment,
    run_gap_sweep,
    run_noise_sweep,
    run_single_solve,
)

__version__ = "0.1.0"

__all__ = [
    "AffineShift",
    "CompositeState",
    "ConfigError",
    "DENSE_QUBIT_CAP",
    "DegenerateInputError",
    "EigenvalueShortfallError",
    "ExperimentConfig",
    "ForecastResult",
    "ForecastRow",
    "HankelPair",
    "ModmdConfig",
    "ModmdError",
    "ModmdEstimate",
    "MultiObservableSignal",
    "NoiseSpec",
    "OUTPUT_DIR_ENV",
    "Problem",
    "PauliParseError",
    "PauliString",
    "PauliSum",
    "RankTwoObservable",
    "ResourceCapError",
    "ShadowSample",
    "SpectralDecomposition",
    "StateVector",
    "SweepResult",
    "SweepRow",
    "TruncatedPinv",
    "apply_pauli_string",
    "build_gamma",
    "build_hankel",
    "build_observables",
    "build_problem",
    "build_reference_superposition",
    "build_tfim",
    "composite_state",
    "config_from_dict",
    "config_to_dict",
    "derive_seed",
    "diagonalize",
    "emit_outputs",
    "estimate_eigenstate",
    "estimate_trace",
    "evolve",
    "exact_signal",
    "extract_eigen",
    "forecast",
    "format_pauli_sum",
    "gaussian_noise_channel",
    "ground_energy_error_bound",
    "haar_unitary",
    "load_config",
    "measure_signal",
    "parse_pauli_sum",
    "partial_sum_observables",
    "random_one_local",
    "replay_manifest",
    "residual",
    "resolve_output_dir",
    "run_convergence_sweep",
    "run_forecast_experiment",
    "run_gap_sweep",
    "run_modmd",
    "run_noise_sweep",
    "run_single_solve",
    "sample_shadows",
    "select_time_step",
    "shadow_signal",
    "shift_and_scale",
    "shot_budget",
    "solve_system_matrix",
    "sort_by_weight",
    "to_dense",
    "trotter_evolve",
    "trotter_steps",
    "truncated_pinv",
    "__version__",
]
