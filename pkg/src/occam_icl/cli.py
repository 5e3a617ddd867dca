"""Command-line entry point: ``occam-icl <experiment> [flags]``.

One subcommand per experiment.  Values resolve in increasing precedence:
preset defaults, then a ``--config file.json`` document, then explicit
flags.  Every run writes ``report.json`` and CSV tables into ``--out-dir``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError
from .harness import EXPERIMENT_NAMES, ExperimentConfig, preset_params, run


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _parse_int_list(text: str) -> list:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _parse_str_list(text: str) -> list:
    return [tok.strip() for tok in text.split(",") if tok.strip()]


def _parse_pairs(text: str) -> list:
    # "10:8,20:15" -> [[10, 8], [20, 15]]
    pairs = []
    for chunk in text.split(","):
        if not chunk.strip():
            continue
        left, _, right = chunk.partition(":")
        pairs.append([int(left), int(right)])
    return pairs


def _flag_parser(default):
    if isinstance(default, bool):
        return _parse_bool
    if isinstance(default, int):
        return int
    if isinstance(default, float):
        return float
    if isinstance(default, list):
        if default and isinstance(default[0], list):
            return _parse_pairs
        if default and isinstance(default[0], str):
            return _parse_str_list
        return _parse_int_list
    return str


# parsers for params whose preset default is None and carries no type
_UNTYPED_PARAMS = {
    "length": int,
    "true_orders": _parse_int_list,
    "template": str,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="occam-icl",
        description="Seeded experiments for Bayesian hypothesis selection across nested task families.",
    )
    subparsers = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENT_NAMES:
        sub = subparsers.add_parser(name, help=f"run the {name} experiment")
        sub.add_argument("--config", type=Path, default=None, help="JSON config file")
        sub.add_argument("--seed", type=int, default=None)
        sub.add_argument("--trials", type=int, default=None)
        sub.add_argument("--out-dir", type=Path, default=Path("runs") / name)
        defaults = preset_params(name)
        for param, default in defaults.items():
            if param == "trials":
                continue
            parse = _UNTYPED_PARAMS.get(param, str) if default is None else _flag_parser(default)
            sub.add_argument(
                f"--{param.replace('_', '-')}",
                dest=f"param_{param}",
                type=parse,
                default=None,
                help=f"default: {default!r}",
            )
    return parser


def _config_from_args(args) -> ExperimentConfig:
    doc = {"experiment": args.experiment}
    if args.config is not None:
        loaded = json.loads(Path(args.config).read_text())
        if loaded.get("experiment", args.experiment) != args.experiment:
            raise ConfigError(
                f"config file is for {loaded['experiment']!r}, not {args.experiment!r}"
            )
        loaded["experiment"] = args.experiment
        doc = loaded
    config = ExperimentConfig.from_dict(doc)
    if args.seed is not None:
        config.seed = args.seed
    if args.trials is not None:
        config.trials = args.trials
    for key, value in vars(args).items():
        if key.startswith("param_") and value is not None:
            config.params[key[len("param_"):]] = value
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _config_from_args(args)
        report = run(config, args.out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {Path(args.out_dir) / 'report.json'}")
    for name in report.tables:
        print(f"wrote {Path(args.out_dir) / (name + '.csv')}")
    print(f"wrote {Path(args.out_dir) / 'trials.csv'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
