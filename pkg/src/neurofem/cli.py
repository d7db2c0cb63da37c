"""Command-line front end: run experiments, verify assembled systems.

Two subcommands::

    neurofem run <experiment> [--config FILE] [--out DIR] [--seed INT]
    neurofem verify [--config FILE]

``run`` executes a registered experiment and prints its summary as JSON
on standard output; ``verify`` assembles one weighted system, runs the
numerical certification checks, and prints the report.  Config files are
TOML with sections [problem], [weight], [cost], [optimizer] (plus
[experiment] for sweep parameters and [verify] for probe parameters);
every key is optional and falls back to the experiment's defaults.

Exit codes: 0 on success, 2 on a configuration error, 3 on a numerical
failure (including a verification report with failed checks).
"""

import argparse
import json
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .costs import cost_from_config
from .errors import ConfigError, NeuroFemError
from .experiments import experiment_names, run_experiment
from .meshing import build_uniform_mesh_1d
from .network import random_net
from .problems import boundary_layer_1d, overconstrained_1d, sine_advection_1d
from .solvers import build_system
from .verify import build_report
from .weights import weight_from_config

_VERIFY_PROBLEMS = {
    "boundary_layer": lambda sigma: boundary_layer_1d(sigma=sigma),
    "sine_advection": lambda sigma: sine_advection_1d(),
    "overconstrained": lambda sigma: overconstrained_1d(),
}

_VERIFY_DEFAULTS = {
    "problem": {
        "problem": "boundary_layer",
        "sigma": 160.0,
        "n_elements": 16,
        "solver": "ddminres",
    },
    "weight": {"kind": "logistic_offset", "M": 100.0},
    "cost": {"cost": "point_value", "x0": 1.0 / 16, "target": "exact", "alpha": 1.0},
    "verify": {"seed": 0, "n_neurons": 6, "n_pairs": 25},
}


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config file {path}: {exc}")


def _merged_verify_config(override):
    cfg = {section: dict(values) for section, values in _VERIFY_DEFAULTS.items()}
    for section, values in override.items():
        if section not in cfg:
            raise ConfigError(
                f"unknown config section [{section}]; "
                f"expected one of {sorted(cfg)}"
            )
        if not isinstance(values, dict):
            raise ConfigError(f"config section [{section}] must be a table")
        for key, value in values.items():
            if section in ("problem", "verify") and key not in cfg[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            cfg[section][key] = value
    return cfg


def _run_verify(config_path):
    cfg = _merged_verify_config(_load_config(config_path))
    prob = cfg["problem"]
    if prob["problem"] not in _VERIFY_PROBLEMS:
        raise ConfigError(
            f"unknown problem {prob['problem']!r}; "
            f"expected one of {sorted(_VERIFY_PROBLEMS)}"
        )
    if prob["solver"] not in ("mixed_lsq", "ddminres"):
        raise ConfigError(
            "verification needs a saddle-form solver (mixed_lsq or ddminres), "
            f"got {prob['solver']!r}"
        )
    problem = _VERIFY_PROBLEMS[prob["problem"]](float(prob["sigma"]))
    mesh = build_uniform_mesh_1d(int(prob["n_elements"]))
    try:
        weight = weight_from_config(cfg["weight"])
        cost = cost_from_config(cfg["cost"])
        system = build_system(prob["solver"], problem, mesh, weight)
    except ValueError as exc:
        raise ConfigError(str(exc))
    ver = cfg["verify"]
    net = random_net(
        int(ver["n_neurons"]), input_dim=problem.dim, seed=int(ver["seed"])
    )
    try:
        report = build_report(
            system, cost, net, n_pairs=int(ver["n_pairs"]), seed=int(ver["seed"])
        )
    except ValueError as exc:
        raise ConfigError(str(exc))
    print(report.to_json())
    return 0 if report.passed else 3


def _run_run(args):
    config = _load_config(args.config)
    summary = run_experiment(
        args.experiment, config=config, out_dir=args.out, seed=args.seed
    )
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="neurofem",
        description="Train and certify neural-network-weighted finite element solvers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a registered experiment")
    run_p.add_argument("experiment", help=f"one of: {', '.join(experiment_names())}")
    run_p.add_argument("--config", default=None, help="TOML config file")
    run_p.add_argument("--out", default=".", help="output directory (default: .)")
    run_p.add_argument("--seed", type=int, default=None, help="override the seed")

    ver_p = sub.add_parser("verify", help="certify one assembled system")
    ver_p.add_argument("--config", default=None, help="TOML config file")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _run_run(args)
        return _run_verify(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NeuroFemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
