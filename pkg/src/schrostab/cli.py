"""Command-line entry point.

Exit codes: 0 success, 1 runtime or numerical error, 2 usage or spec error.
Errors are reported as a single JSON line on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

from .conditions import check_conditions
from .experiments import SPEC_KEYS, SpecError, apply_overrides, load_spec, prepare, run, sweep


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _keys_epilog():
    lines = ["recognized spec keys (section.key, default):"]
    for key, (_, default) in SPEC_KEYS.items():
        lines.append(f"  {key} = {default!r}")
    return "\n".join(lines)


def _clean(obj):
    # strict JSON has no NaN/Infinity
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def build_parser():
    parser = _Parser(prog="schrostab",
                     description="Lyapunov feedback stabilization of the bilinear "
                                 "Schrodinger equation on an interval.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "eig": "print the retained eigenvalues (k, lambda_k)",
        "check-conditions": "audit coupling and gap non-resonance; prints a JSON report",
        "simulate": "run one closed-loop simulation; prints the summary JSON",
        "sweep": "run the Cartesian product of the [sweep] axes; prints the rows as JSON",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text, epilog=_keys_epilog(),
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("spec", help="INI spec file")
        p.add_argument("overrides", nargs="*", metavar="key=value",
                       help="spec overrides, e.g. integrator.dt=5e-4")
    return parser


def _cmd_eig(flat, out):
    setup = prepare(flat)
    out.write("k,lambda_k\n")
    for k, lam in enumerate(setup.basis.eigenvalues, start=1):
        out.write(f"{k},{lam:.17g}\n")


def _cmd_check(flat, out):
    setup = prepare(flat)
    report = check_conditions(setup.basis, setup.control,
                              flat["conditions.eps_coupling"], flat["conditions.eps_gap"])
    out.write(json.dumps(_clean(report.to_dict()), indent=2, allow_nan=False) + "\n")


def _cmd_simulate(flat, out):
    summary, _ = run(flat)
    out.write(json.dumps(_clean(summary), indent=2, allow_nan=False) + "\n")


def _cmd_sweep(flat, out):
    rows = sweep(flat)
    out.write(json.dumps(_clean(rows), indent=2, allow_nan=False) + "\n")


COMMANDS = {"eig": _cmd_eig, "check-conditions": _cmd_check,
            "simulate": _cmd_simulate, "sweep": _cmd_sweep}


def _fail(kind, message, code):
    sys.stderr.write(json.dumps({"error": kind, "message": " ".join(str(message).split())}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail("usage", exc, 2)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        flat = apply_overrides(load_spec(args.spec), args.overrides)
        COMMANDS[args.command](flat, sys.stdout)
    except SpecError as exc:
        return _fail("spec", exc, 2)
    except Exception as exc:
        return _fail(type(exc).__name__, exc, 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
