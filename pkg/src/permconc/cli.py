"""Command-line front end.

    permconc {estimate,tail,bounds,compare,oracle,scenario} [--config PATH]
             [--seed U64] [--reps N] [--out PATH] [--format {csv,json}]

Exit codes: 0 ok, 2 usage/config error, 3 hypothesis violation, 4 internal
invariant failure. Data goes to --out (written atomically) or stdout;
diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import HypothesisViolationError, InvalidParameterError, InvariantError
from .experiments import COMMANDS, RunConfig, make_report, run, to_csv
from .schema import atomic_write, dumps

log = logging.getLogger("permconc")

EXIT_USAGE = 2
EXIT_HYPOTHESIS = 3
EXIT_INVARIANT = 4


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="permconc", description=__doc__.split("\n")[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, help="JSON config document")
    p.add_argument("--seed", type=int)
    p.add_argument("--reps", type=int, dest="n_reps")
    p.add_argument("--out", type=Path)
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--workers", type=int, help="worker processes for replicates (results do not depend on it)")
    p.add_argument("--scenario", help="inline JSON scenario, overrides the config file")
    p.add_argument("--bounds", help="comma-separated bound names")
    p.add_argument("--t", type=float, nargs="+", help="explicit deviation grid")
    p.add_argument("--lambdas", type=float, nargs="+", help="entropy-check lambdas (oracle)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def load_config(args: argparse.Namespace) -> tuple[RunConfig, Path | None]:
    base = None
    doc: dict = {}
    if args.config is not None:
        if not args.config.exists():
            raise InvalidParameterError(f"config file {args.config} does not exist")
        doc = json.loads(args.config.read_text())
        base = args.config.resolve().parent
    doc["command"] = args.command
    for key in ("seed", "n_reps", "format", "workers"):
        val = getattr(args, key)
        if val is not None:
            doc[key] = val
    if args.out is not None:
        doc["out"] = str(args.out)
    if args.scenario is not None:
        doc["scenario"] = json.loads(args.scenario)
    if args.bounds is not None:
        doc["bounds"] = [b for b in args.bounds.split(",") if b]
    if args.t is not None:
        doc["grid"] = {"t": args.t}
    if args.lambdas is not None:
        doc["lambdas"] = args.lambdas
    return RunConfig.from_dict(doc), base


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        cfg, base = load_config(args)
        results = run(cfg, base)
        if cfg.format == "csv":
            text = to_csv(cfg.command, results)
        else:
            text = dumps(make_report(cfg, results))
    except HypothesisViolationError as e:
        print(f"permconc: hypothesis violation: {e}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except InvariantError as e:
        print(f"permconc: internal invariant failed: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    except (InvalidParameterError, KeyError, TypeError, ValueError) as e:
        print(f"permconc: invalid configuration: {e}", file=sys.stderr)
        return EXIT_USAGE
    if cfg.out:
        atomic_write(cfg.out, text)
        log.info("wrote %s", cfg.out)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
