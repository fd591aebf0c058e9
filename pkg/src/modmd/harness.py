"""Experiment configuration, parameter sweeps, and reproducible outputs."""

from __future__ import annotations

import csv
import dataclasses
import importlib.metadata
import json
import math
import os
import platform
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy

from .errors import ConfigError, EigenvalueShortfallError
from .pauli import (
    AffineShift,
    PauliString,
    PauliSum,
    build_tfim,
    parse_pauli_sum,
    partial_sum_observables,
    random_one_local,
    shift_and_scale,
    to_dense,
)
from .shadows import NoiseSpec, gaussian_noise_channel, shadow_signal
from .simulate import (
    MultiObservableSignal,
    SpectralDecomposition,
    StateVector,
    build_reference_superposition,
    diagonalize,
    exact_signal,
)
from .solver import (
    build_hankel,
    extract_eigen,
    forecast,
    residual,
    select_time_step,
    truncated_pinv,
)

OBSERVABLE_POLICIES = (
    "identity-only",
    "random-1-local",
    "hamiltonian-partial-sums",
    "explicit",
)
SIGNAL_SOURCES = ("exact+gaussian", "shadow")
SWEEP_KINDS = ("sweep-k", "sweep-gap", "sweep-noise", "forecast")

OUTPUT_DIR_ENV = "MODMD_OUTPUT_DIR"

# Threshold floor so the derived 10*epsilon policy stays a valid relative
# cutoff when epsilon is zero.
AUTO_THRESHOLD_FLOOR = 1e-12

# Pseudo-random streams drawn per (point, trial). Keeping the multi- and
# single-observable pipelines on separate streams makes the baseline
# column reproducible on its own.
_STREAM_OBSERVABLES = 0
_STREAM_MODMD = 1
_STREAM_ODMD = 2

_METHODS = ("modmd", "odmd")


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved description of one experiment family.

    The Hamiltonian comes either from transverse-field Ising parameters
    or from a Pauli-sum text file (exactly one of the two). All sweep
    drivers consume the same configuration; grids specific to one sweep
    (field values, noise levels, fit-window lengths) are passed to the
    driver directly and recorded in the run manifest.
    """

    tfim_qubits: "int | None" = None
    tfim_coupling: float = 1.0
    tfim_field: float = 1.0
    hamiltonian_file: "str | None" = None
    particle_number: "int | None" = None
    reference_bitstrings: "tuple[str, ...]" = ()
    observable_policy: str = "random-1-local"
    n_observables: int = 6
    observable_file: "str | None" = None
    dt: "float | None" = None
    k_grid: "tuple[int, ...]" = (50, 125, 250, 375, 500)
    k_over_d: float = 2.5
    svd_threshold: "float | None" = 1e-2
    noise_epsilon: float = 1e-3
    signal_source: str = "exact+gaussian"
    shadow_samples: "int | None" = None
    trials: int = 20
    master_seed: int = 0
    n_eig: int = 4
    magnitude_floor: float = 0.2
    safety_fraction: float = 0.9
    output_dir: str = "results"
    workers: int = 1

    def __post_init__(self):
        if (self.tfim_qubits is None) == (self.hamiltonian_file is None):
            raise ConfigError(
                "exactly one of tfim_qubits and hamiltonian_file must be set"
            )
        if self.tfim_qubits is not None and self.tfim_qubits < 2:
            raise ConfigError(f"tfim_qubits must be >= 2, got {self.tfim_qubits}")
        if self.hamiltonian_file is not None and not Path(self.hamiltonian_file).is_file():
            raise ConfigError(f"hamiltonian_file not found: {self.hamiltonian_file}")
        if self.particle_number is not None and self.particle_number < 0:
            raise ConfigError(
                f"particle_number must be >= 0, got {self.particle_number}"
            )
        if not self.reference_bitstrings:
            raise ConfigError("reference_bitstrings must not be empty")
        if len(set(self.reference_bitstrings)) != len(self.reference_bitstrings):
            raise ConfigError("reference_bitstrings contains duplicates")
        if self.observable_policy not in OBSERVABLE_POLICIES:
            raise ConfigError(
                f"observable_policy must be one of {OBSERVABLE_POLICIES}, "
                f"got {self.observable_policy!r}"
            )
        if self.n_observables < 1:
            raise ConfigError(f"n_observables must be >= 1, got {self.n_observables}")
        if self.observable_policy == "identity-only" and self.n_observables != 1:
            raise ConfigError("identity-only policy fixes n_observables to 1")
        if (self.observable_policy == "explicit") != (self.observable_file is not None):
            raise ConfigError(
                "observable_file is required for (and only for) the explicit policy"
            )
        if self.observable_file is not None and not Path(self.observable_file).is_file():
            raise ConfigError(f"observable_file not found: {self.observable_file}")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not self.k_grid:
            raise ConfigError("k_grid must not be empty")
        if not self.k_over_d > 1.0:
            raise ConfigError(f"k_over_d must exceed 1, got {self.k_over_d}")
        for k in self.k_grid:
            if depth_for_window(int(k), self.k_over_d) < 1 or int(k) < 2:
                raise ConfigError(f"k_grid entry {k} is too small for K/d splitting")
        if self.svd_threshold is not None and not 0.0 < self.svd_threshold < 1.0:
            raise ConfigError(
                f"svd_threshold must lie in (0, 1) or be null, got {self.svd_threshold}"
            )
        if not (math.isfinite(self.noise_epsilon) and self.noise_epsilon >= 0.0):
            raise ConfigError(
                f"noise_epsilon must be finite and >= 0, got {self.noise_epsilon}"
            )
        if self.signal_source not in SIGNAL_SOURCES:
            raise ConfigError(
                f"signal_source must be one of {SIGNAL_SOURCES}, "
                f"got {self.signal_source!r}"
            )
        if (self.signal_source == "shadow") != (self.shadow_samples is not None):
            raise ConfigError(
                "shadow_samples is required for (and only for) the shadow source"
            )
        if self.shadow_samples is not None and self.shadow_samples < 1:
            raise ConfigError(f"shadow_samples must be >= 1, got {self.shadow_samples}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.n_eig < 1:
            raise ConfigError(f"n_eig must be >= 1, got {self.n_eig}")
        if not 0.0 <= self.magnitude_floor < 1.0:
            raise ConfigError(
                f"magnitude_floor must lie in [0, 1), got {self.magnitude_floor}"
            )
        if not 0.0 < self.safety_fraction < 1.0:
            raise ConfigError(
                f"safety_fraction must lie in (0, 1), got {self.safety_fraction}"
            )
        if not self.output_dir:
            raise ConfigError("output_dir must not be empty")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")


_CONFIG_FIELDS = {f.name for f in dataclasses.fields(ExperimentConfig)}
_TUPLE_FIELDS = {"reference_bitstrings", "k_grid"}


def config_from_dict(data: dict) -> ExperimentConfig:
    """Build a configuration from plain JSON-compatible data."""
    if not isinstance(data, dict):
        raise ConfigError(f"configuration must be a mapping, got {type(data).__name__}")
    unknown = sorted(set(data) - _CONFIG_FIELDS)
    if unknown:
        raise ConfigError(f"unknown configuration fields: {', '.join(unknown)}")
    kwargs = dict(data)
    for name in _TUPLE_FIELDS & set(kwargs):
        value = kwargs[name]
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{name} must be a list")
        kwargs[name] = tuple(value)
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def config_to_dict(config: ExperimentConfig) -> dict:
    """JSON-compatible mirror of :func:`config_from_dict`."""
    out = dataclasses.asdict(config)
    for name in _TUPLE_FIELDS:
        out[name] = list(out[name])
    return out


def load_config(path: "str | Path") -> ExperimentConfig:
    """Read a JSON configuration file.

    A run manifest is accepted too; its embedded ``config`` block is
    used so any sweep can be replayed from its own manifest.
    """
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from None
    if isinstance(data, dict) and "config" in data and "sweep" in data:
        data = data["config"]
    return config_from_dict(data)


def resolve_output_dir(config: ExperimentConfig) -> Path:
    """Output directory, honoring the environment override."""
    return Path(os.environ.get(OUTPUT_DIR_ENV) or config.output_dir)


def derive_seed(master_seed: int, point_index: int, trial: int, stream: int) -> int:
    """Deterministic child seed for one (grid point, trial, stream) cell."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(point_index, trial, stream))
    return int(seq.generate_state(1)[0])


def depth_for_window(K: int, k_over_d: float) -> int:
    """Number of time shifts paired with ``K`` snapshots."""
    return max(1, round(K / k_over_d))


def split_fit_window(k_star: int, k_over_d: float) -> "tuple[int, int]":
    """Split a fit-window length ``k* = K + d`` into ``(d, K)``."""
    d = max(1, round(k_star / (k_over_d + 1.0)))
    if k_star - d < 1:
        raise ConfigError(f"fit window {k_star} is too short to split")
    return d, k_star - d


def threshold_for(config: ExperimentConfig, epsilon: float) -> float:
    """Resolved SVD cutoff: explicit value, or ten times the noise level."""
    if config.svd_threshold is not None:
        return config.svd_threshold
    return max(10.0 * epsilon, AUTO_THRESHOLD_FLOOR)


def identity_observable(n_qubits: int) -> PauliSum:
    return PauliSum(n_qubits, (1.0,), (PauliString.identity(n_qubits),))


@dataclass(frozen=True)
class Problem:
    """Resolved physical model shared by every cell of a sweep."""

    n_qubits: int
    hamiltonian: PauliSum
    spec: SpectralDecomposition
    shift: AffineShift
    phi0: StateVector
    phi_perp: StateVector
    dt: float
    exact_energies: "tuple[float, ...]"
    explicit_observables: "tuple[PauliSum, ...] | None"


def _orthogonal_companion(phi0: StateVector) -> StateVector:
    """A deterministic unit state orthogonal to the reference.

    Gram-Schmidt residual of the first basis vector that is not parallel
    to the reference; for any unit state at least one of the first two
    basis vectors qualifies.
    """
    amps = phi0.amplitudes
    for j in range(len(amps)):
        residual_vec = -amps * np.conj(amps[j])
        residual_vec[j] += 1.0
        norm = np.linalg.norm(residual_vec)
        if norm > 1e-8:
            return StateVector(phi0.n_qubits, residual_vec / norm)
    raise ValueError("reference state spans the full register")  # pragma: no cover


def parse_observable_file(path: str, n_qubits: int, count: int) -> "tuple[PauliSum, ...]":
    """Blank-line-separated Pauli sums, one block per observable."""
    text = Path(path).read_text()
    blocks = [b for b in re.split(r"\n\s*\n", text) if b.strip()]
    if len(blocks) != count:
        raise ConfigError(
            f"observable file {path} provides {len(blocks)} observables, "
            f"configuration declares {count}"
        )
    out = []
    for block in blocks:
        psum = parse_pauli_sum(block)
        if psum.n_qubits != n_qubits:
            raise ConfigError(
                f"observable width {psum.n_qubits} does not match the "
                f"{n_qubits}-qubit Hamiltonian"
            )
        out.append(psum)
    return tuple(out)


def _sector_energies(spec, particle_number: int) -> np.ndarray:
    """Eigenvalues whose eigenstates carry the requested particle number.

    The number operator is diagonal in the computational basis with
    eigenvalue popcount(index); an eigenstate belongs to the sector when
    its expectation rounds to the declared count.
    """
    dim = spec.dimension
    pops = np.array([bin(i).count("1") for i in range(dim)], dtype=float)
    weights = np.abs(spec.eigenvectors) ** 2
    number = pops @ weights
    mask = np.abs(number - particle_number) < 0.5
    return spec.energies[mask]


def resolve_hamiltonian(
    config: ExperimentConfig, field_override: "float | None" = None
) -> PauliSum:
    """Load the configured operator and validate reference addressing.

    ``field_override`` replaces the transverse-field strength so the gap
    sweep can rebuild the model per grid point.
    """
    if config.tfim_qubits is not None:
        field = config.tfim_field if field_override is None else field_override
        hamiltonian = build_tfim(config.tfim_qubits, config.tfim_coupling, field)
    else:
        if field_override is not None:
            raise ConfigError("field overrides require the TFIM source")
        hamiltonian = parse_pauli_sum(Path(config.hamiltonian_file).read_text())
    n_qubits = hamiltonian.n_qubits
    for bits in config.reference_bitstrings:
        if len(bits) != n_qubits or set(bits) - {"0", "1"}:
            raise ConfigError(
                f"reference bitstring {bits!r} does not address {n_qubits} qubits"
            )
    return hamiltonian


def resolve_time_step(config: ExperimentConfig) -> float:
    """Explicit step, or one derived from the rescaled spectral envelope."""
    if config.dt is not None:
        return config.dt
    envelope = config.safety_fraction * math.pi
    return select_time_step(-envelope, envelope)


def build_problem(
    config: ExperimentConfig, field_override: "float | None" = None
) -> Problem:
    """Diagonalize the (rescaled) Hamiltonian and resolve run-wide state."""
    hamiltonian = resolve_hamiltonian(config, field_override)
    n_qubits = hamiltonian.n_qubits

    shifted, shift = shift_and_scale(
        hamiltonian, safety_fraction=config.safety_fraction
    )
    spec = diagonalize(to_dense(shifted))
    phi0 = build_reference_superposition(n_qubits, list(config.reference_bitstrings))
    phi_perp = _orthogonal_companion(phi0)
    dt = resolve_time_step(config)

    shifted_energies = spec.energies
    if config.particle_number is not None:
        shifted_energies = _sector_energies(spec, config.particle_number)
        if len(shifted_energies) < config.n_eig:
            raise ConfigError(
                f"particle sector {config.particle_number} holds only "
                f"{len(shifted_energies)} levels, need {config.n_eig}"
            )
    physical = shift.to_original(shifted_energies)

    explicit = None
    if config.observable_policy == "explicit":
        explicit = parse_observable_file(
            config.observable_file, n_qubits, config.n_observables
        )
    return Problem(
        n_qubits=n_qubits,
        hamiltonian=hamiltonian,
        spec=spec,
        shift=shift,
        phi0=phi0,
        phi_perp=phi_perp,
        dt=dt,
        exact_energies=tuple(float(e) for e in physical),
        explicit_observables=explicit,
    )


def build_observables(
    config: ExperimentConfig, problem: Problem, seed: int
) -> "list[PauliSum]":
    """Observable pool for one cell; random policies redraw under ``seed``."""
    if config.observable_policy == "identity-only":
        return [identity_observable(problem.n_qubits)]
    if config.observable_policy == "random-1-local":
        return random_one_local(problem.n_qubits, config.n_observables, seed=seed)
    if config.observable_policy == "hamiltonian-partial-sums":
        return partial_sum_observables(problem.hamiltonian, config.n_observables)
    return list(problem.explicit_observables)


def measure_signal(
    config: ExperimentConfig,
    problem: Problem,
    observables: "list[PauliSum]",
    k_max: int,
    epsilon: float,
    seed: int,
) -> MultiObservableSignal:
    """Real-mode signal over ``k_max + 1`` steps from the configured source."""
    if config.signal_source == "shadow":
        return shadow_signal(
            problem.spec,
            problem.phi0,
            problem.phi_perp,
            observables,
            problem.dt,
            k_max,
            config.shadow_samples,
            seed,
            mode="real",
        )
    clean = exact_signal(
        problem.spec, problem.phi0, observables, problem.dt, k_max, mode="real"
    )
    return gaussian_noise_channel(clean, NoiseSpec(epsilon, seed, "both"))


@dataclass(frozen=True)
class SweepRow:
    """One pipeline evaluation at one grid point and trial."""

    point_index: int
    point_value: float
    trial: int
    method: str
    energies: "tuple[float, ...]"
    abs_errors: "tuple[float, ...]"
    residual: float
    retained_rank: int
    wall_time_s: float


@dataclass(frozen=True)
class AggregateRow:
    """Across-trial statistics for one grid point and method."""

    point_index: int
    point_value: float
    method: str
    n_trials: int
    mean_energies: "tuple[float, ...]"
    mean_errors: "tuple[float, ...]"
    std_errors: "tuple[float, ...]"
    mean_residual: float
    mean_rank: float


@dataclass(frozen=True)
class SweepResult:
    """Raw rows plus provenance for one eigenvalue sweep."""

    sweep: str
    config: ExperimentConfig
    points: "tuple[float, ...]"
    sweep_args: dict
    exact_energies: "tuple[tuple[float, ...], ...]"
    rows: "tuple[SweepRow, ...]"

    def aggregates(self) -> "tuple[AggregateRow, ...]":
        out = []
        for pi, point in enumerate(self.points):
            for method in _METHODS:
                group = [
                    r
                    for r in self.rows
                    if r.point_index == pi and r.method == method
                ]
                if not group:
                    continue
                energies = np.array([g.energies for g in group])
                errors = np.array([g.abs_errors for g in group])
                out.append(
                    AggregateRow(
                        point_index=pi,
                        point_value=point,
                        method=method,
                        n_trials=len(group),
                        mean_energies=tuple(energies.mean(axis=0)),
                        mean_errors=tuple(errors.mean(axis=0)),
                        std_errors=tuple(errors.std(axis=0)),
                        mean_residual=float(
                            np.mean([g.residual for g in group])
                        ),
                        mean_rank=float(np.mean([g.retained_rank for g in group])),
                    )
                )
        return tuple(out)


@dataclass(frozen=True)
class ForecastRow:
    """Held-out prediction quality for one fit window and trial."""

    point_index: int
    k_star: int
    trial: int
    method: str
    rmse: "tuple[float, ...]"
    rmse_mean: float
    wall_time_s: float


@dataclass(frozen=True)
class ForecastResult:
    """Raw rows plus provenance for one forecasting experiment."""

    sweep: str
    config: ExperimentConfig
    points: "tuple[float, ...]"
    sweep_args: dict
    horizon: int
    rows: "tuple[ForecastRow, ...]"

    def aggregates(self) -> "tuple[tuple[int, float, str, int, float, float], ...]":
        """Per (point, method): ``(index, k*, method, n, mean, std)`` of the
        observable-averaged RMSE."""
        out = []
        for pi, point in enumerate(self.points):
            for method in _METHODS:
                vals = [
                    r.rmse_mean
                    for r in self.rows
                    if r.point_index == pi and r.method == method
                ]
                if not vals:
                    continue
                out.append(
                    (
                        pi,
                        point,
                        method,
                        len(vals),
                        float(np.mean(vals)),
                        float(np.std(vals)),
                    )
                )
        return tuple(out)


def _fit_propagator(signal: MultiObservableSignal, d: int, K: int, delta: float):
    """Shared least-squares stage exposing the pieces rows report on."""
    pair = build_hankel(signal, d, K)
    pinv = truncated_pinv(pair.x, delta)
    a_matrix = pair.xp @ pinv.as_matrix()
    return pair, pinv, a_matrix


def _eigen_cell(
    config: ExperimentConfig,
    problem: Problem,
    sweep: str,
    point_index: int,
    point_value: float,
    K: int,
    epsilon: float,
    delta: float,
    trial: int,
) -> "list[SweepRow]":
    """Run both pipelines on one (point, trial) cell."""
    d = depth_for_window(K, config.k_over_d)
    obs_seed = derive_seed(config.master_seed, point_index, trial, _STREAM_OBSERVABLES)
    pools = {
        "modmd": (build_observables(config, problem, obs_seed), _STREAM_MODMD),
        "odmd": ([identity_observable(problem.n_qubits)], _STREAM_ODMD),
    }
    reference = np.asarray(problem.exact_energies[: config.n_eig])
    rows = []
    for method in _METHODS:
        observables, stream = pools[method]
        start = time.perf_counter()
        seed = derive_seed(config.master_seed, point_index, trial, stream)
        signal = measure_signal(config, problem, observables, K + d, epsilon, seed)
        pair, pinv, a_matrix = _fit_propagator(signal, d, K, delta)
        try:
            estimate = extract_eigen(
                a_matrix,
                problem.dt,
                config.n_eig,
                magnitude_floor=config.magnitude_floor,
                merge_conjugates=True,
            )
        except EigenvalueShortfallError as exc:
            raise EigenvalueShortfallError(
                exc.requested,
                exc.survivors,
                exc.energies,
                context=f"{sweep} point {point_value!r}, trial {trial}, {method}",
            ) from exc
        physical = problem.shift.to_original(estimate.energies)
        errors = np.abs(physical - reference)
        rows.append(
            SweepRow(
                point_index=point_index,
                point_value=float(point_value),
                trial=trial,
                method=method,
                energies=tuple(float(v) for v in physical),
                abs_errors=tuple(float(v) for v in errors),
                residual=residual(a_matrix, pair),
                retained_rank=pinv.rank,
                wall_time_s=time.perf_counter() - start,
            )
        )
    return rows


def _forecast_cell(
    config: ExperimentConfig,
    problem: Problem,
    point_index: int,
    k_star: int,
    horizon: int,
    trial: int,
) -> "list[ForecastRow]":
    """Fit on a prefix window, score predictions on the held-out tail."""
    d, K = split_fit_window(k_star, config.k_over_d)
    delta = threshold_for(config, config.noise_epsilon)
    obs_seed = derive_seed(config.master_seed, point_index, trial, _STREAM_OBSERVABLES)
    pools = {
        "modmd": (build_observables(config, problem, obs_seed), _STREAM_MODMD),
        "odmd": ([identity_observable(problem.n_qubits)], _STREAM_ODMD),
    }
    rows = []
    for method in _METHODS:
        observables, stream = pools[method]
        start = time.perf_counter()
        seed = derive_seed(config.master_seed, point_index, trial, stream)
        truth = exact_signal(
            problem.spec,
            problem.phi0,
            observables,
            problem.dt,
            k_star + horizon,
            mode="real",
        )
        if config.signal_source == "shadow":
            measured = shadow_signal(
                problem.spec,
                problem.phi0,
                problem.phi_perp,
                observables,
                problem.dt,
                k_star,
                config.shadow_samples,
                seed,
                mode="real",
            )
        else:
            measured = gaussian_noise_channel(
                truth.prefix(k_star + 1),
                NoiseSpec(config.noise_epsilon, seed, "both"),
            )
        pair, _, a_matrix = _fit_propagator(measured, d, K, delta)
        predicted = forecast(a_matrix, pair, horizon + 1)[:, 1:]
        held_out = truth.values[:, k_star + 1 :]
        rmse = np.sqrt(np.mean((predicted - held_out) ** 2, axis=1))
        rows.append(
            ForecastRow(
                point_index=point_index,
                k_star=k_star,
                trial=trial,
                method=method,
                rmse=tuple(float(v) for v in rmse),
                rmse_mean=float(np.mean(rmse)),
                wall_time_s=time.perf_counter() - start,
            )
        )
    return rows


@dataclass(frozen=True)
class _SweepPlan:
    """Picklable description of all cells a sweep will execute."""

    kind: str
    config: ExperimentConfig
    points: "tuple[float, ...]"
    horizon: int = 0


def _evaluate_cell(plan: _SweepPlan, problem: Problem, point_index: int, trial: int):
    value = plan.points[point_index]
    config = plan.config
    if plan.kind == "forecast":
        return _forecast_cell(config, problem, point_index, int(value), plan.horizon, trial)
    if plan.kind == "sweep-k":
        K = int(value)
        epsilon = config.noise_epsilon
    elif plan.kind == "sweep-gap":
        K = int(config.k_grid[0])
        epsilon = config.noise_epsilon
    else:
        K = int(config.k_grid[0])
        epsilon = float(value)
    delta = threshold_for(config, epsilon)
    return _eigen_cell(
        config, problem, plan.kind, point_index, value, K, epsilon, delta, trial
    )


# Worker-process state: the plan is installed once per worker and problems
# are cached per grid point, so parallel runs redo the diagonalization at
# most once per (worker, Hamiltonian) instead of once per cell.
_WORKER_PLAN: "_SweepPlan | None" = None
_WORKER_PROBLEMS: "dict[int, Problem]" = {}


def _init_worker(plan: _SweepPlan) -> None:
    global _WORKER_PLAN
    _WORKER_PLAN = plan
    _WORKER_PROBLEMS.clear()


def _worker_problem(point_index: int) -> Problem:
    key = point_index if _WORKER_PLAN.kind == "sweep-gap" else -1
    if key not in _WORKER_PROBLEMS:
        if key == -1:
            _WORKER_PROBLEMS[key] = build_problem(_WORKER_PLAN.config)
        else:
            _WORKER_PROBLEMS[key] = build_problem(
                _WORKER_PLAN.config,
                field_override=_WORKER_PLAN.points[point_index],
            )
    return _WORKER_PROBLEMS[key]


def _worker_task(task: "tuple[int, int]"):
    point_index, trial = task
    problem = _worker_problem(point_index)
    return task, _evaluate_cell(_WORKER_PLAN, problem, point_index, trial)


def _run_plan(plan: _SweepPlan) -> list:
    """Execute all cells, assembling rows independently of worker order."""
    tasks = [
        (pi, trial)
        for pi in range(len(plan.points))
        for trial in range(plan.config.trials)
    ]
    results = {}
    if plan.config.workers == 1:
        _init_worker(plan)
        for task in tasks:
            key, rows = _worker_task(task)
            results[key] = rows
    else:
        with ProcessPoolExecutor(
            max_workers=plan.config.workers,
            initializer=_init_worker,
            initargs=(plan,),
        ) as pool:
            for key, rows in pool.map(_worker_task, tasks, chunksize=1):
                results[key] = rows
    return [row for key in sorted(results) for row in results[key]]


def _point_exact_energies(plan: _SweepPlan) -> "tuple[tuple[float, ...], ...]":
    """Reference energies per grid point, from one diagonalization each."""
    n = plan.config.n_eig
    if plan.kind == "sweep-gap":
        return tuple(
            tuple(build_problem(plan.config, field_override=h).exact_energies[:n])
            for h in plan.points
        )
    shared = tuple(build_problem(plan.config).exact_energies[:n])
    return tuple(shared for _ in plan.points)


def run_convergence_sweep(config: ExperimentConfig) -> SweepResult:
    """Error versus snapshot count for both pipelines on shared seeds."""
    plan = _SweepPlan(
        kind="sweep-k", config=config, points=tuple(float(k) for k in config.k_grid)
    )
    rows = _run_plan(plan)
    return SweepResult(
        sweep=plan.kind,
        config=config,
        points=plan.points,
        sweep_args={},
        exact_energies=_point_exact_energies(plan),
        rows=tuple(rows),
    )


def run_gap_sweep(config: ExperimentConfig, h_grid: "tuple[float, ...]") -> SweepResult:
    """Error versus transverse field (hence spectral gap) at fixed K."""
    if config.tfim_qubits is None:
        raise ConfigError("the gap sweep varies the transverse field of a TFIM source")
    if len(config.k_grid) != 1:
        raise ConfigError("the gap sweep needs a single fixed K in k_grid")
    if not h_grid:
        raise ConfigError("h_grid must not be empty")
    plan = _SweepPlan(
        kind="sweep-gap", config=config, points=tuple(float(h) for h in h_grid)
    )
    rows = _run_plan(plan)
    return SweepResult(
        sweep=plan.kind,
        config=config,
        points=plan.points,
        sweep_args={"h_grid": [float(h) for h in h_grid]},
        exact_energies=_point_exact_energies(plan),
        rows=tuple(rows),
    )


def run_noise_sweep(
    config: ExperimentConfig, eps_grid: "tuple[float, ...]"
) -> SweepResult:
    """Error versus noise level at fixed K.

    Under the derived-threshold policy (``svd_threshold: null``) each
    grid point regularizes at ten times its own noise level.
    """
    if len(config.k_grid) != 1:
        raise ConfigError("the noise sweep needs a single fixed K in k_grid")
    if not eps_grid:
        raise ConfigError("eps_grid must not be empty")
    for eps in eps_grid:
        if not (math.isfinite(eps) and eps >= 0.0):
            raise ConfigError(f"noise levels must be finite and >= 0, got {eps}")
    plan = _SweepPlan(
        kind="sweep-noise", config=config, points=tuple(float(e) for e in eps_grid)
    )
    rows = _run_plan(plan)
    return SweepResult(
        sweep=plan.kind,
        config=config,
        points=plan.points,
        sweep_args={"eps_grid": [float(e) for e in eps_grid]},
        exact_energies=_point_exact_energies(plan),
        rows=tuple(rows),
    )


def run_forecast_experiment(
    config: ExperimentConfig, kstar_grid: "tuple[int, ...]", horizon: int
) -> ForecastResult:
    """Held-out signal prediction for a grid of fit-window lengths."""
    if not kstar_grid:
        raise ConfigError("kstar_grid must not be empty")
    if horizon < 1:
        raise ConfigError(f"horizon must be >= 1, got {horizon}")
    for k_star in kstar_grid:
        split_fit_window(int(k_star), config.k_over_d)
    plan = _SweepPlan(
        kind="forecast",
        config=config,
        points=tuple(float(k) for k in kstar_grid),
        horizon=int(horizon),
    )
    rows = _run_plan(plan)
    return ForecastResult(
        sweep=plan.kind,
        config=config,
        points=plan.points,
        sweep_args={"kstar_grid": [int(k) for k in kstar_grid], "horizon": int(horizon)},
        horizon=int(horizon),
        rows=tuple(rows),
    )


def run_single_solve(config: ExperimentConfig) -> "tuple[SweepRow, SweepRow]":
    """One-shot evaluation at the first configured K (trial 0)."""
    problem = build_problem(config)
    K = int(config.k_grid[0])
    delta = threshold_for(config, config.noise_epsilon)
    rows = _eigen_cell(
        config, problem, "solve", 0, float(K), K, config.noise_epsilon, delta, 0
    )
    return rows[0], rows[1]


def _package_version() -> str:
    try:
        return importlib.metadata.version("modmd")
    except importlib.metadata.PackageNotFoundError:  # pragma: no cover
        return "unknown"


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: "list[str]", rows: "list[list]") -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_value(v) for v in row])


_SVG_COLORS = {"modmd": "#1f77b4", "odmd": "#d62728"}


def _svg_line_plot(
    path: Path,
    title: str,
    x_label: str,
    y_label: str,
    xs: "list[float]",
    series: "list[tuple[str, list[float]]]",
    log_x: bool,
    log_y: bool,
) -> None:
    """Minimal standalone vector plot with deterministic bytes."""
    width, height = 640.0, 480.0
    left, right, top, bottom = 70.0, 20.0, 40.0, 50.0

    def keep(x, y):
        return (not log_x or x > 0) and (not log_y or y > 0)

    pts = [
        (x, y)
        for _, ys in series
        for x, y in zip(xs, ys)
        if keep(x, y) and math.isfinite(x) and math.isfinite(y)
    ]
    if not pts:
        pts = [(1.0, 1.0)]
    tx = [math.log10(p[0]) if log_x else p[0] for p in pts]
    ty = [math.log10(p[1]) if log_y else p[1] for p in pts]
    x_lo, x_hi = min(tx), max(tx)
    y_lo, y_hi = min(ty), max(ty)
    if x_hi - x_lo < 1e-12:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi - y_lo < 1e-12:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5

    def to_px(x, y):
        u = (math.log10(x) if log_x else x) - x_lo
        v = (math.log10(y) if log_y else y) - y_lo
        px = left + u / (x_hi - x_lo) * (width - left - right)
        py = height - bottom - v / (y_hi - y_lo) * (height - top - bottom)
        return px, py

    def tick_label(value, log_axis):
        return f"{10 ** value:.3g}" if log_axis else f"{value:.4g}"

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">',
        f'<rect width="{width:.0f}" height="{height:.0f}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
        f'<text x="{width / 2:.1f}" y="{height - 12:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{x_label}</text>',
        f'<text x="18" y="{height / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 18 {height / 2:.1f})">{y_label}</text>',
        f'<rect x="{left:.1f}" y="{top:.1f}" width="{width - left - right:.1f}" '
        f'height="{height - top - bottom:.1f}" fill="none" stroke="black"/>',
    ]
    for frac in (0.0, 0.5, 1.0):
        xv = x_lo + frac * (x_hi - x_lo)
        yv = y_lo + frac * (y_hi - y_lo)
        px = left + frac * (width - left - right)
        py = height - bottom - frac * (height - top - bottom)
        lines.append(
            f'<text x="{px:.1f}" y="{height - bottom + 16:.1f}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="10">'
            f"{tick_label(xv, log_x)}</text>"
        )
        lines.append(
            f'<text x="{left - 6:.1f}" y="{py + 3:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10">{tick_label(yv, log_y)}</text>'
        )
    for si, (name, ys) in enumerate(series):
        coords = [
            to_px(x, y) for x, y in zip(xs, ys) if keep(x, y) and math.isfinite(y)
        ]
        if coords:
            points = " ".join(f"{px:.2f},{py:.2f}" for px, py in coords)
            color = _SVG_COLORS.get(name, "#2ca02c")
            lines.append(
                f'<polyline points="{points}" fill="none" stroke="{color}" '
                f'stroke-width="1.5"/>'
            )
            ly = top + 16 + 16 * si
            lines.append(
                f'<line x1="{width - 150:.1f}" y1="{ly:.1f}" '
                f'x2="{width - 126:.1f}" y2="{ly:.1f}" stroke="{color}" '
                f'stroke-width="1.5"/>'
            )
            lines.append(
                f'<text x="{width - 120:.1f}" y="{ly + 4:.1f}" '
                f'font-family="sans-serif" font-size="11">{name}</text>'
            )
    lines.append("</svg>")
    path.write_text("\n".join(lines) + "\n")


_SCHEMA_NOTE = """\
Values are written with repr() so parsing them back yields the exact
float64 bit patterns. The companion *_timing.csv records wall-clock
seconds per cell and is the only output file excluded from the
bit-identical replay guarantee.
"""


def _manifest_payload(result) -> dict:
    payload = {
        "sweep": result.sweep,
        "sweep_args": result.sweep_args,
        "config": config_to_dict(result.config),
        "points": list(result.points),
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "modmd": _package_version(),
        },
    }
    if isinstance(result, SweepResult):
        payload["exact_energies"] = [list(e) for e in result.exact_energies]
    return payload


def _emit_sweep(result: SweepResult, directory: Path) -> "list[Path]":
    config = result.config
    n = config.n_eig
    energy_cols = [f"energy_{i}" for i in range(n)]
    error_cols = [f"abs_error_{i}" for i in range(n)]
    header = (
        ["kind", "point_index", "point_value", "trial", "method", "n_trials"]
        + energy_cols
        + error_cols
        + ["residual", "retained_rank"]
    )
    rows = []
    for r in result.rows:
        rows.append(
            ["trial", r.point_index, r.point_value, r.trial, r.method, ""]
            + list(r.energies)
            + list(r.abs_errors)
            + [r.residual, r.retained_rank]
        )
    for agg in result.aggregates():
        rows.append(
            ["mean", agg.point_index, agg.point_value, "", agg.method, agg.n_trials]
            + list(agg.mean_energies)
            + list(agg.mean_errors)
            + [agg.mean_residual, agg.mean_rank]
        )
        rows.append(
            ["std", agg.point_index, agg.point_value, "", agg.method, agg.n_trials]
            + [""] * n
            + list(agg.std_errors)
            + ["", ""]
        )
    written = []
    results_path = directory / f"{result.sweep}_results.csv"
    _write_csv(results_path, header, rows)
    written.append(results_path)

    timing_path = directory / f"{result.sweep}_timing.csv"
    _write_csv(
        timing_path,
        ["point_index", "trial", "method", "wall_time_s"],
        [[r.point_index, r.trial, r.method, r.wall_time_s] for r in result.rows],
    )
    written.append(timing_path)

    schema_path = directory / f"{result.sweep}_schema.txt"
    schema_path.write_text(
        f"Columns of {results_path.name}:\n"
        "  kind          trial | mean | std (aggregates across trials)\n"
        "  point_index   0-based position in the sweep grid\n"
        "  point_value   grid value (K, transverse field, or noise level)\n"
        "  trial         trial index; empty on aggregate rows\n"
        "  method        modmd (multi-observable) | odmd (single-observable)\n"
        "  n_trials      trial count behind an aggregate row; empty otherwise\n"
        f"  energy_i      retained energy estimates, i < {n}, physical units\n"
        f"  abs_error_i   |estimate - exact|, exact from dense diagonalization\n"
        "  residual      relative least-squares fit residual\n"
        "  retained_rank singular values kept by the threshold\n\n" + _SCHEMA_NOTE
    )
    written.append(schema_path)

    manifest_path = directory / f"{result.sweep}_manifest.json"
    manifest_path.write_text(
        json.dumps(_manifest_payload(result), indent=2, sort_keys=True) + "\n"
    )
    written.append(manifest_path)

    aggs = result.aggregates()
    log_x = result.sweep == "sweep-noise"
    x_name = {
        "sweep-k": "snapshots K",
        "sweep-gap": "transverse field h",
        "sweep-noise": "noise level",
    }[result.sweep]
    for level in range(n):
        series = []
        for method in _METHODS:
            ys = [a.mean_errors[level] for a in aggs if a.method == method]
            if ys:
                series.append((method, ys))
        plot_path = directory / f"{result.sweep}_level_{level}.svg"
        _svg_line_plot(
            plot_path,
            f"absolute error, level {level}",
            x_name,
            "mean absolute error",
            list(result.points),
            series,
            log_x=log_x,
            log_y=True,
        )
        written.append(plot_path)
    return written


def _emit_forecast(result: ForecastResult, directory: Path) -> "list[Path]":
    n_obs = result.config.n_observables
    rmse_cols = [f"rmse_{i}" for i in range(n_obs)]
    header = (
        ["kind", "point_index", "k_star", "trial", "method", "n_trials", "rmse_mean"]
        + rmse_cols
    )
    rows = []
    for r in result.rows:
        padded = list(r.rmse) + [""] * (n_obs - len(r.rmse))
        rows.append(
            ["trial", r.point_index, r.k_star, r.trial, r.method, "", r.rmse_mean]
            + padded
        )
    for pi, point, method, count, mean, std in result.aggregates():
        base = [pi, int(point), "", method, count]
        rows.append(["mean"] + base + [mean] + [""] * n_obs)
        rows.append(["std"] + base + [std] + [""] * n_obs)
    written = []
    results_path = directory / f"{result.sweep}_results.csv"
    _write_csv(results_path, header, rows)
    written.append(results_path)

    timing_path = directory / f"{result.sweep}_timing.csv"
    _write_csv(
        timing_path,
        ["point_index", "trial", "method", "wall_time_s"],
        [[r.point_index, r.trial, r.method, r.wall_time_s] for r in result.rows],
    )
    written.append(timing_path)

    schema_path = directory / f"{result.sweep}_schema.txt"
    schema_path.write_text(
        f"Columns of {results_path.name}:\n"
        "  kind       trial | mean | std (aggregates across trials)\n"
        "  point_index 0-based position in the k* grid\n"
        "  k_star     fit-window length; fitting uses samples 0..k*\n"
        "  trial      trial index; empty on aggregate rows\n"
        "  method     modmd | odmd (single-observable baseline)\n"
        "  n_trials   trial count behind an aggregate row; empty otherwise\n"
        f"  rmse_mean  RMSE over the {result.horizon} held-out steps, averaged\n"
        "             over that method's observables\n"
        "  rmse_i     per-observable RMSE; single-observable rows leave\n"
        "             columns beyond rmse_0 empty\n\n" + _SCHEMA_NOTE
    )
    written.append(schema_path)

    manifest_path = directory / f"{result.sweep}_manifest.json"
    manifest_path.write_text(
        json.dumps(_manifest_payload(result), indent=2, sort_keys=True) + "\n"
    )
    written.append(manifest_path)

    series = []
    for method in _METHODS:
        ys = [a[4] for a in result.aggregates() if a[2] == method]
        if ys:
            series.append((method, ys))
    plot_path = directory / f"{result.sweep}_rmse.svg"
    _svg_line_plot(
        plot_path,
        "held-out forecast error",
        "fit-window length k*",
        "mean RMSE",
        list(result.points),
        series,
        log_x=False,
        log_y=True,
    )
    written.append(plot_path)
    return written


def emit_outputs(result, directory: "str | Path") -> "list[Path]":
    """Write tables, schema, manifest, and plots for one sweep result.

    Everything except the timing table is a pure function of the resolved
    configuration, so replaying the manifest reproduces the files
    byte for byte.
    """
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        if isinstance(result, ForecastResult):
            return _emit_forecast(result, directory)
        return _emit_sweep(result, directory)
    except OSError as exc:
        raise OSError(f"cannot write outputs under {directory}: {exc}") from exc


def replay_manifest(path: "str | Path"):
    """Re-run the sweep recorded in a manifest file."""
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read manifest {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from None
    if not isinstance(data, dict) or "sweep" not in data or "config" not in data:
        raise ConfigError(f"{path} is not a run manifest")
    config = config_from_dict(data["config"])
    sweep = data["sweep"]
    args = data.get("sweep_args", {})
    if sweep == "sweep-k":
        return run_convergence_sweep(config)
    if sweep == "sweep-gap":
        return run_gap_sweep(config, tuple(args["h_grid"]))
    if sweep == "sweep-noise":
        return run_noise_sweep(config, tuple(args["eps_grid"]))
    if sweep == "forecast":
        return run_forecast_experiment(
            config, tuple(args["kstar_grid"]), int(args["horizon"])
        )
    raise ConfigError(f"unknown sweep kind {sweep!r} in manifest")
