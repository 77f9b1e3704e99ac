"""Command-line entry point.

Subcommands mirror the experiment runners: `theorem1`, `moments`,
`proxies`, `appendix`, plus `field-dump` for writing one synthesized
realization in the flat binary layout.  Options override the config file;
the HL_SEED environment variable supplies a default master seed.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from .experiments import (ConfigError, ExperimentConfig, emit,
                          parse_config_values, run_appendix_checks,
                          run_moment_laws, run_proxy_convergence,
                          run_theorem1, SEED_ENV_VAR)
from .field import replication_rng, sample_coefficients, synthesize
from .legendre import QuadratureError
from .stats import DegenerateSampleError


def _parse_int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _parse_float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sphlen",
        description="Monte Carlo studies of level-set lengths of random "
                    "spherical harmonics")
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--seed", type=int, help="master seed (64-bit)")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--parallelism", type=int,
                        help="max concurrent replications")
    parser.add_argument("--ell", type=_parse_int_list,
                        help="comma-separated degrees")
    parser.add_argument("--levels", type=_parse_float_list,
                        help="comma-separated levels u")
    parser.add_argument("--reps", type=int, help="replications per degree")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("theorem1", "moments", "proxies", "appendix"):
        sub.add_parser(name)
    dump = sub.add_parser("field-dump")
    dump.add_argument("--rep", type=int, default=0,
                      help="replication index to synthesize")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """defaults < HL_SEED < config file < command-line flags."""
    values: dict = {}
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            values["master_seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer")
    if args.config:
        try:
            with open(args.config) as fh:
                values.update(parse_config_values(fh.read()))
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}")
    overrides = {"master_seed": args.seed, "output_dir": args.out,
                 "parallelism": args.parallelism, "ells": args.ell,
                 "levels": args.levels, "replications": args.reps}
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(values)


_RUNNERS = {
    "theorem1": run_theorem1,
    "moments": run_moment_laws,
    "proxies": run_proxy_convergence,
    "appendix": run_appendix_checks,
}


def _field_dump(config: ExperimentConfig, rep: int) -> str:
    ell = config.ells[0]
    rng = replication_rng(config.master_seed, ell, rep)
    grid = synthesize(sample_coefficients(ell, rng, seed=rep),
                      config.grid_factor)
    os.makedirs(config.output_dir, exist_ok=True)
    path = os.path.join(config.output_dir,
                        f"field_l{ell}_s{config.master_seed}_r{rep}.bin")
    grid.dump(path)
    return path


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "field-dump":
            path = _field_dump(config, args.rep)
            print(path)
            return 0
        report = _RUNNERS[args.command](config)
        for path in emit(report, config.output_dir):
            print(path)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (QuadratureError, DegenerateSampleError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
