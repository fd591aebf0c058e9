"""Command-line interface for running and replaying experiments."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import (
    ConfigError,
    EigenvalueShortfallError,
    PauliParseError,
    ResourceCapError,
)
from .harness import (
    OBSERVABLE_POLICIES,
    SIGNAL_SOURCES,
    ExperimentConfig,
    config_from_dict,
    emit_outputs,
    parse_observable_file,
    resolve_hamiltonian,
    resolve_output_dir,
    resolve_time_step,
    run_convergence_sweep,
    run_forecast_experiment,
    run_gap_sweep,
    run_noise_sweep,
    run_single_solve,
    threshold_for,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RESOURCE = 3
EXIT_SHORTFALL = 4


def _csv_ints(text: str) -> "tuple[int, ...]":
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _csv_floats(text: str) -> "tuple[float, ...]":
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _add_config_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config",
        metavar="PATH",
        help="JSON configuration file; a run manifest is accepted and its "
        "embedded config and grids are reused",
    )
    model = parser.add_argument_group("model")
    model.add_argument("--tfim-qubits", type=int, dest="tfim_qubits")
    model.add_argument("--tfim-coupling", type=float, dest="tfim_coupling")
    model.add_argument("--tfim-field", type=float, dest="tfim_field")
    model.add_argument("--hamiltonian-file", dest="hamiltonian_file")
    model.add_argument(
        "--particle-number",
        type=int,
        dest="particle_number",
        help="restrict reference eigenvalues to this particle-number sector",
    )
    model.add_argument(
        "--reference",
        action="append",
        dest="reference_bitstrings",
        metavar="BITS",
        help="reference basis bitstring; repeat to superpose several",
    )
    probes = parser.add_argument_group("observables and signal")
    probes.add_argument(
        "--observable-policy", choices=OBSERVABLE_POLICIES, dest="observable_policy"
    )
    probes.add_argument("--n-observables", type=int, dest="n_observables")
    probes.add_argument("--observable-file", dest="observable_file")
    probes.add_argument("--signal-source", choices=SIGNAL_SOURCES, dest="signal_source")
    probes.add_argument("--shadow-samples", type=int, dest="shadow_samples")
    probes.add_argument("--noise-epsilon", type=float, dest="noise_epsilon")
    solver = parser.add_argument_group("solver")
    solver.add_argument("--dt", type=float, dest="dt")
    solver.add_argument(
        "--k-grid", type=_csv_ints, dest="k_grid", metavar="K1,K2,..."
    )
    solver.add_argument("--k-over-d", type=float, dest="k_over_d")
    solver.add_argument(
        "--svd-threshold",
        dest="svd_threshold",
        metavar="VALUE|auto",
        help="relative SVD cutoff, or 'auto' for ten times the noise level",
    )
    solver.add_argument("--n-eig", type=int, dest="n_eig")
    solver.add_argument("--magnitude-floor", type=float, dest="magnitude_floor")
    solver.add_argument("--safety-fraction", type=float, dest="safety_fraction")
    run = parser.add_argument_group("run")
    run.add_argument("--trials", type=int, dest="trials")
    run.add_argument("--master-seed", type=int, dest="master_seed")
    run.add_argument("--workers", type=int, dest="workers")
    run.add_argument("--output-dir", dest="output_dir")


def _load_config_file(path: str) -> "tuple[dict, dict]":
    """Raw config mapping plus any sweep grids stored in a manifest."""
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from None
    if isinstance(data, dict) and "config" in data and "sweep" in data:
        return dict(data["config"]), dict(data.get("sweep_args", {}))
    if not isinstance(data, dict):
        raise ConfigError(f"configuration must be a mapping, got {type(data).__name__}")
    return dict(data), {}


def _config_from_args(args: argparse.Namespace) -> "tuple[ExperimentConfig, dict]":
    base: dict = {}
    sweep_args: dict = {}
    if args.config:
        base, sweep_args = _load_config_file(args.config)
    for name in (
        "tfim_qubits",
        "tfim_coupling",
        "tfim_field",
        "hamiltonian_file",
        "particle_number",
        "reference_bitstrings",
        "observable_policy",
        "n_observables",
        "observable_file",
        "signal_source",
        "shadow_samples",
        "noise_epsilon",
        "dt",
        "k_grid",
        "k_over_d",
        "n_eig",
        "magnitude_floor",
        "safety_fraction",
        "trials",
        "master_seed",
        "workers",
        "output_dir",
    ):
        value = getattr(args, name, None)
        if value is not None:
            base[name] = value
    raw_threshold = getattr(args, "svd_threshold", None)
    if raw_threshold is not None:
        if raw_threshold == "auto":
            base["svd_threshold"] = None
        else:
            try:
                base["svd_threshold"] = float(raw_threshold)
            except ValueError:
                raise ConfigError(
                    f"--svd-threshold expects a number or 'auto', got {raw_threshold!r}"
                ) from None
    return config_from_dict(base), sweep_args


def _emit_and_report(result, config: ExperimentConfig) -> int:
    directory = resolve_output_dir(config)
    for path in emit_outputs(result, directory):
        print(f"wrote {path}")
    return EXIT_OK


def _grid_from(args, sweep_args: dict, flag: str, key: str, kind):
    value = getattr(args, flag, None)
    if value is not None:
        return value
    if key in sweep_args:
        return tuple(kind(v) for v in sweep_args[key])
    raise ConfigError(f"--{flag.replace('_', '-')} is required (or supply a manifest)")


def _handle_sweep_k(args) -> int:
    config, _ = _config_from_args(args)
    return _emit_and_report(run_convergence_sweep(config), config)


def _handle_sweep_gap(args) -> int:
    config, sweep_args = _config_from_args(args)
    h_grid = _grid_from(args, sweep_args, "h_grid", "h_grid", float)
    return _emit_and_report(run_gap_sweep(config, h_grid), config)


def _handle_sweep_noise(args) -> int:
    config, sweep_args = _config_from_args(args)
    eps_grid = _grid_from(args, sweep_args, "eps_grid", "eps_grid", float)
    return _emit_and_report(run_noise_sweep(config, eps_grid), config)


def _handle_forecast(args) -> int:
    config, sweep_args = _config_from_args(args)
    kstar_grid = _grid_from(args, sweep_args, "kstar_grid", "kstar_grid", int)
    horizon = args.horizon
    if horizon is None:
        horizon = int(sweep_args.get("horizon", 200))
    return _emit_and_report(
        run_forecast_experiment(config, kstar_grid, horizon), config
    )


def _handle_solve(args) -> int:
    config, _ = _config_from_args(args)
    for row in run_single_solve(config):
        energies = " ".join(f"{e:+.10f}" for e in row.energies)
        errors = " ".join(f"{e:.3e}" for e in row.abs_errors)
        print(f"{row.method}: energies [{energies}]")
        print(
            f"{row.method}: abs errors [{errors}]  residual {row.residual:.3e}  "
            f"rank {row.retained_rank}"
        )
    return EXIT_OK


def _handle_validate(args) -> int:
    config, _ = _config_from_args(args)
    hamiltonian = resolve_hamiltonian(config)
    if config.observable_policy == "explicit":
        parse_observable_file(
            config.observable_file, hamiltonian.n_qubits, config.n_observables
        )
    dt = resolve_time_step(config)
    delta = threshold_for(config, config.noise_epsilon)
    print("configuration valid")
    print(f"  qubits: {hamiltonian.n_qubits}  terms: {hamiltonian.num_terms}")
    print(f"  dt: {dt!r}  svd threshold: {delta!r}")
    print(f"  output dir: {resolve_output_dir(config)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modmd",
        description="Eigenvalue estimation experiments on simulated "
        "multi-observable real-time signals.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("sweep-k", help="error versus snapshot count")
    _add_config_arguments(p)
    p.set_defaults(handler=_handle_sweep_k)

    p = sub.add_parser("sweep-gap", help="error versus spectral gap at fixed K")
    _add_config_arguments(p)
    p.add_argument("--h-grid", type=_csv_floats, dest="h_grid", metavar="H1,H2,...")
    p.set_defaults(handler=_handle_sweep_gap)

    p = sub.add_parser("sweep-noise", help="error versus noise level at fixed K")
    _add_config_arguments(p)
    p.add_argument("--eps-grid", type=_csv_floats, dest="eps_grid", metavar="E1,E2,...")
    p.set_defaults(handler=_handle_sweep_noise)

    p = sub.add_parser("forecast", help="held-out signal prediction")
    _add_config_arguments(p)
    p.add_argument(
        "--kstar-grid", type=_csv_ints, dest="kstar_grid", metavar="K1,K2,..."
    )
    p.add_argument("--horizon", type=int, dest="horizon")
    p.set_defaults(handler=_handle_forecast)

    p = sub.add_parser("solve", help="single eigenvalue estimate at the first K")
    _add_config_arguments(p)
    p.set_defaults(handler=_handle_solve)

    p = sub.add_parser("validate-config", help="check a configuration and exit")
    _add_config_arguments(p)
    p.set_defaults(handler=_handle_validate)

    return parser


def main(argv: "list[str] | None" = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigError, PauliParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except EigenvalueShortfallError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SHORTFALL


if __name__ == "__main__":
    sys.exit(main())
