"""``crtk`` command line: one subcommand per pipeline stage, plus ``all``."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .errors import CrtkError
from .pipeline import STAGES, PipelineConfig, parse_override, run

log = logging.getLogger("crtk")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="crtk", description="Corpus-to-heatmap relation mining pipeline.")
    p.add_argument("subcommand", choices=(*STAGES, "all"))
    p.add_argument("--config", required=True, help="pipeline config (JSON)")
    p.add_argument("--out", help="output directory; overrides the config's 'output'")
    p.add_argument("--seed", type=int, help="training seed")
    p.add_argument("--workers", type=int, help="training worker threads")
    p.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE",
        help="override a config entry, e.g. train.window=5 (value parsed as JSON when possible)",
    )
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=os.environ.get("CRTK_LOG_LEVEL", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        overrides = [parse_override(s) for s in args.set]
        if args.seed is not None:
            overrides.append((["train", "seed"], args.seed))
        if args.workers is not None:
            overrides.append((["train", "workers"], args.workers))
        config = PipelineConfig.load(args.config, overrides)
        if args.out:
            config.data["output"] = os.path.abspath(args.out)
        run(args.subcommand, config)
    except CrtkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
