"""Command line front-end.

Exit codes: 0 success, 2 config/validation error, 3 numerical failure,
4 I/O error. Failures print one JSON error record on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import KINDS, parse_config
from .errors import CavityError, ConfigError, NumericalError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="experiment config file (INI sections)")
    p.add_argument("--out", type=Path, help="output directory (overrides [output] dir)")
    p.add_argument("--seed", type=int, help="master seed (overrides [ensemble] seed)")
    p.add_argument("--backend", choices=["eig", "rk"], help="propagator backend")
    p.add_argument("--threads", type=int, default=1, help="worker threads for ensembles")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cavity1d", description="Single-excitation atom-field dynamics in a 1-D cavity.")
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        _common(sub.add_parser(kind, help=f"{kind} experiment"))
    _common(sub.add_parser("run", help="run the experiment kind named in --config (e.g. a manifest)"))
    fig = sub.add_parser("reproduce-figure", help="emit the data behind one figure")
    fig.add_argument("figure", choices=["1", "2", "3", "4", "5", "6", "7", "7b", "8"])
    _common(fig)
    return parser


def _exit_code(exc: BaseException) -> int:
    cause = getattr(exc, "cause", None)
    if cause is not None:
        return _exit_code(cause)
    if isinstance(exc, NumericalError):
        return EXIT_NUMERICAL
    if isinstance(exc, (ConfigError, CavityError, ValueError)):
        return EXIT_CONFIG
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_NUMERICAL


def _error(exc: BaseException, code: int) -> int:
    record = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    seed = getattr(exc, "seed", None)
    if seed is not None:
        record["seed"] = seed
    print(json.dumps(record), file=sys.stderr)
    return code


def _dispatch(args) -> list[Path]:
    if args.threads < 1:
        raise ConfigError("--threads must be at least 1")
    if args.command == "reproduce-figure":
        from .figures import reproduce_figure

        out = args.out or Path(f"fig{args.figure}")
        return reproduce_figure(args.figure, out, seed=args.seed or 0, threads=args.threads)

    from .runner import run_experiment

    text = args.config.read_text(encoding="utf-8") if args.config else ""
    overrides = {}
    if args.command != "run":
        overrides["kind"] = args.command
    elif not args.config:
        raise ConfigError("'run' needs --config")
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.backend:
        overrides["backend"] = args.backend
    cfg = parse_config(text, overrides)
    return run_experiment(cfg, args.out, threads=args.threads)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        outputs = _dispatch(args)
    except OSError as exc:
        return _error(exc, EXIT_IO)
    except Exception as exc:  # every failure leaves a machine-readable record
        return _error(exc, _exit_code(exc))
    for path in outputs:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
