"""
Command line entry point.

    squeezelab run <config.json> [-o out.csv]
    squeezelab validate <config.json>
    squeezelab limits --n N [--r R]

Exit codes: 0 ok, 1 validation failure, 2 config error.
"""
from __future__ import annotations

import argparse
import sys

from . import __version__
from .errors import ConfigError, EnvelopeExceededError, SqueezelabError
from .qcrb import reference_limits
from .scenario import ORACLE_GAP_THRESHOLD, load_config, run_scenario, validate_scenario

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG = 0, 1, 2


def _cmd_run(args) -> int:
    report = run_scenario(load_config(args.config))
    text = report.to_csv()
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_validate(args) -> int:
    table = validate_scenario(load_config(args.config))
    print("sweep_value,mean_gap,cov_gap,qfi_gap,norm_deficit,status")
    failed = False
    for row in table:
        bad = row.worst > ORACLE_GAP_THRESHOLD
        failed |= bad
        cells = (row.sweep_value, row.mean_gap, row.cov_gap, row.qfi_gap, row.norm_deficit)
        print(",".join(format(c, ".17g") for c in cells) + ("," + ("FAIL" if bad else "ok")))
    return EXIT_VALIDATION if failed else EXIT_OK


def _cmd_limits(args) -> int:
    snl, sqz, hl = reference_limits(args.n, args.r)
    print(f"snl {snl:.17g}")
    print(f"sqz {sqz:.17g}")
    print(f"hl {hl:.17g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="squeezelab", description=__doc__.splitlines()[1])
    parser.add_argument("--version", action="version", version=f"squeezelab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="evaluate a scenario sweep and write CSV")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="CSV path (default: stdout)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("validate", help="compare analytic moments with the Fock-space oracle")
    p.add_argument("config")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("limits", help="print shot-noise, squeezed and Heisenberg phase errors")
    p.add_argument("--n", type=float, required=True, help="mean photon number")
    p.add_argument("--r", type=float, default=0.0, help="squeeze factor")
    p.set_defaults(func=_cmd_limits)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, EnvelopeExceededError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SqueezelabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if isinstance(exc, ValueError) else EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
