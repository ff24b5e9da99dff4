"""Command-line interface.

Subcommands::

    rocsim run <config.json>       run an experiment and write artifacts
    rocsim validate <config.json>  check a config without running it
    rocsim idx-info <file>         print the header of an IDX tensor file

``run`` accepts ``--seed``, ``--workers`` and ``--output-dir`` overrides.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .exceptions import RocsimError
from .experiments import ExperimentConfig, run_experiment, validate_config_dict
from .idx import idx_info


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rocsim",
        description="Similarity learning experiments by pointwise ROC optimization",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment from a JSON config")
    run_p.add_argument("config", help="path to the experiment config")
    run_p.add_argument("--seed", type=int, default=None, help="override the config seed")
    run_p.add_argument("--workers", type=int, default=1, help="parallel cells")
    run_p.add_argument("--output-dir", default=None, help="override the output directory")

    val_p = sub.add_parser("validate", help="validate a JSON config")
    val_p.add_argument("config", help="path to the experiment config")

    idx_p = sub.add_parser("idx-info", help="describe an IDX tensor file")
    idx_p.add_argument("path", help="path to the IDX file")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            with open(args.config, "r", encoding="utf-8") as handle:
                raw = json.load(handle)
            errors = validate_config_dict(raw)
            if errors:
                for err in errors:
                    print(f"error: {err}", file=sys.stderr)
                return 1
            print("config OK")
            return 0
        if args.command == "idx-info":
            info = idx_info(args.path)
            print(json.dumps(info, sort_keys=True))
            return 0
        if args.command == "run":
            config = ExperimentConfig.from_file(args.config)
            if args.seed is not None:
                config = dataclasses.replace(config, seed=args.seed)
            if args.output_dir is not None:
                config = dataclasses.replace(config, output_dir=args.output_dir)
            bundle = run_experiment(config, workers=args.workers)
            print(f"wrote artifacts to {bundle['output_dir']}")
            return 0
    except (RocsimError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
