"""Command-line interface.

Subcommands: ``generate`` (simulate datasets), ``add-noise`` (synthetic
Gaussian perturbations), ``estimate`` (single dataset, one method), and
``benchmark`` (sweep with CSV + JSON sidecar output). Flags override
config-file fields. Exit codes: 0 success, 2 invalid config or dataset,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .conformal import ConformalParams
from .dataset import load_dataset
from .errors import ConfigError, NumericalError
from .pipeline import (
    METHODS,
    SCENARIOS,
    BenchmarkConfig,
    cmd_add_noise,
    cmd_estimate,
    cmd_generate,
    write_benchmark,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _add_config_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", type=Path, help="JSON config file (flags override it)")
    parser.add_argument("--scenario", choices=SCENARIOS)
    parser.add_argument("--n", type=int, help="system qubit count")
    parser.add_argument("--subsystem-size", type=int, dest="subsystem_size")
    parser.add_argument("--subsystem-sizes", type=int, nargs="+", dest="subsystem_sizes",
                        help="sweep these subsystem sizes (xy_quench)")
    parser.add_argument("--k-max", type=int, dest="k_max")
    parser.add_argument("--k-sweep-min", type=int, dest="k_sweep_min")
    parser.add_argument("--times-ms", type=float, nargs="+", dest="times_ms")
    parser.add_argument("--dims", type=int, nargs="+", help="state dimensions (random_state)")
    parser.add_argument("--tfim-j", type=float, dest="tfim_J")
    parser.add_argument("--tfim-h", type=float, dest="tfim_h")
    parser.add_argument("--xy-j", type=float, dest="xy_J")
    parser.add_argument("--xy-b", type=float, dest="xy_B")
    parser.add_argument("--xy-exponent", type=float, dest="xy_exponent")
    parser.add_argument("--epsilon", type=float)
    parser.add_argument("--eta", type=float)
    parser.add_argument("--chi2-0", type=float, dest="chi2_0")
    parser.add_argument("--lsq-degree", type=int, dest="lsq_degree")
    parser.add_argument("--n-unitaries", type=int, dest="n_unitaries")
    parser.add_argument("--n-shots", type=int, dest="n_shots")
    parser.add_argument("--n-batches", type=int, dest="n_batches")
    parser.add_argument("--n-experiments", type=int, dest="n_experiments")
    parser.add_argument("--group-size", type=int, dest="group_size")
    parser.add_argument("--raw-group-covariance", action="store_const", const=False,
                        dest="group_mean_covariance",
                        help="feed groups the raw sample covariance instead of the mean's")
    parser.add_argument("--noise-fraction", type=float, dest="noise_fraction")
    parser.add_argument("--n-realizations", type=int, dest="n_realizations")
    parser.add_argument("--methods", nargs="+", choices=METHODS)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--seed", type=int)


def _config_from_args(args: argparse.Namespace) -> BenchmarkConfig:
    override_keys = set(BenchmarkConfig.__dataclass_fields__)
    overrides = {
        key: getattr(args, key)
        for key in override_keys
        if hasattr(args, key) and getattr(args, key) is not None
    }
    if args.config is not None:
        return BenchmarkConfig.from_file(args.config, overrides)
    return BenchmarkConfig.from_dict(overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vnsac",
        description="Von Neumann entropy estimation from Renyi data by "
        "stabilized analytic continuation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="simulate Renyi datasets with exact references")
    _add_config_flags(gen)
    gen.add_argument("--out", type=Path, required=True, help="output directory")

    noise = sub.add_parser("add-noise", help="attach Gaussian noise realizations")
    noise.add_argument("--dataset", type=Path, required=True)
    noise.add_argument("--fraction", type=float, required=True)
    noise.add_argument("--realizations", type=int, default=200)
    noise.add_argument("--seed", type=int, default=0)
    noise.add_argument("--out", type=Path, required=True)

    est = sub.add_parser("estimate", help="estimate the von Neumann entropy of one dataset")
    est.add_argument("--dataset", type=Path, required=True)
    est.add_argument("--method", choices=METHODS, default="sac")
    est.add_argument("--epsilon", type=float)
    est.add_argument("--eta", type=float)
    est.add_argument("--chi2-0", type=float, dest="chi2_0")
    est.add_argument("--lsq-degree", type=int, dest="lsq_degree", default=2)
    est.add_argument("--out", type=Path, help="write the result row here instead of stdout")

    bench = sub.add_parser("benchmark", help="run a sweep, write CSV + JSON sidecar")
    _add_config_flags(bench)
    bench.add_argument("--out", type=Path, required=True, help="output directory")

    return parser


def _run(args: argparse.Namespace) -> int:
    if args.command == "generate":
        config = _config_from_args(args)
        written = cmd_generate(config, args.out)
        print(f"wrote {len(written)} files to {args.out}")
        return EXIT_OK

    if args.command == "add-noise":
        dataset = load_dataset(args.dataset)
        paths = cmd_add_noise(dataset, args.fraction, args.realizations, args.seed, args.out)
        print(f"wrote {len(paths)} noisy realizations to {args.out}")
        return EXIT_OK

    if args.command == "estimate":
        dataset = load_dataset(args.dataset)
        params = None
        if args.epsilon is not None or args.eta is not None:
            from .config import default_conformal_params

            base = default_conformal_params()
            params = ConformalParams(
                epsilon=args.epsilon if args.epsilon is not None else base.epsilon,
                eta=args.eta if args.eta is not None else base.eta,
            )
        row = cmd_estimate(
            dataset, args.method, params=params, chi2_0=args.chi2_0,
            lsq_degree=args.lsq_degree,
        )
        text = json.dumps(row, indent=2, sort_keys=True)
        if args.out:
            args.out.write_text(text)
        else:
            print(text)
        return EXIT_OK

    if args.command == "benchmark":
        config = _config_from_args(args)
        csv_path, json_path = write_benchmark(config, args.out)
        print(f"wrote {csv_path} and {json_path}")
        return EXIT_OK

    raise ConfigError(f"unknown command {args.command!r}")  # pragma: no cover


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _run(args)
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"error: invalid config or dataset: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
