"""Command-line front end: ``relaxometer run|figures|verify``.

Exit codes: 0 success, 2 invalid config, 3 resource cap exceeded,
4 figure inputs missing or unknown figure id, 5 numerical-consistency
failure or failed verification.
"""
from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from . import __version__
from . import runner
from .config import ConfigError, load
from .errors import NumericalConsistencyError, ResourceError

EXIT_OK, EXIT_CONFIG, EXIT_RESOURCE, EXIT_FIGURES, EXIT_NUMERIC = 0, 2, 3, 4, 5


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="relaxometer", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the experiment described by a JSON config")
    r.add_argument("config")
    r.add_argument("-o", "--output", help="result directory (overrides the config)")
    r.add_argument("--threads", type=int, help="worker threads (default: $RELAXOMETER_THREADS or all cores)")

    f = sub.add_parser("figures", help="emit plot data for one figure")
    f.add_argument("directory")
    f.add_argument("figure", help="one of: " + ", ".join(runner.FIGURES))

    v = sub.add_parser("verify", help="re-check invariants of stored results")
    v.add_argument("directory")
    v.add_argument("--rerun", type=int, default=0, metavar="K", help="recompute the first K ensemble cells")
    v.add_argument("--threads", type=int)
    return p


def _err(msg: str, code: int) -> int:
    print(f"relaxometer: {msg}", file=sys.stderr)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if getattr(args, "threads", None) is not None and args.threads < 1:
        return _err("--threads must be positive", EXIT_CONFIG)
    if args.command == "run":
        try:
            cfg = load(args.config)
        except ConfigError as exc:
            return _err(f"{args.config}: {exc}", EXIT_CONFIG)
        except OSError as exc:
            return _err(str(exc), EXIT_CONFIG)
        except ResourceError as exc:
            return _err(str(exc), EXIT_RESOURCE)
        try:
            out = runner.run(cfg, args.output, args.threads)
        except ResourceError as exc:
            return _err(str(exc), EXIT_RESOURCE)
        except NumericalConsistencyError as exc:
            return _err(f"numerical consistency failure: {exc}", EXIT_NUMERIC)
        print(out)
        return EXIT_OK
    if args.command == "figures":
        try:
            paths = runner.figures(args.directory, args.figure)
        except KeyError:
            return _err(f"unknown figure id {args.figure!r}; known: {', '.join(runner.FIGURES)}", EXIT_FIGURES)
        except runner.MissingInputs as exc:
            return _err(str(exc), EXIT_FIGURES)
        for p in paths:
            print(p)
        return EXIT_OK
    problems = runner.verify(args.directory, args.rerun, args.threads or 1)
    for msg in problems:
        print(msg, file=sys.stderr)
    if problems:
        return EXIT_NUMERIC
    print("ok")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
