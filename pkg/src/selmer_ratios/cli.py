"""Command-line front end: table verification, constants audit, enumeration and Selmer-ratio statistics.

Every subcommand writes one JSON document (and optionally a CSV of curves).
Exit status is 0 when every check passes, 1 when a check fails and 2 on a
usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from fractions import Fraction
from typing import Sequence

from . import __version__
from . import families as fam_mod
from .constants import SubgroupError, audit_printed_constants
from .densities import ramified_records, verify_tables
from .isogeny import dual_discriminant_check, discriminant_suite, example_polynomial_check
from .stats import DROP_LIMIT, enumerate_family, report

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("selmer_ratios")


class UsageError(Exception):
    pass


def _dump(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _height(text: str) -> int:
    """Accepts 1000000, 1e9 or 10^9."""
    t = text.strip().replace("^", "**")
    try:
        if "**" in t:
            base, exp = t.split("**")
            value = Fraction(int(base)) ** int(exp)
        else:
            value = Fraction(t)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not an integer height: {text!r}")
    if value.denominator != 1 or value < 1:
        raise argparse.ArgumentTypeError(f"height must be a positive integer, got {text!r}")
    return int(value)


def _positive(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {n}")
    return n


def _family(fid: str) -> fam_mod.FamilyDescriptor:
    try:
        return fam_mod.get(fid.replace(" ", ""))
    except KeyError:
        valid = ", ".join(G.id for G in fam_mod.registry())
        raise UsageError(f"unknown family {fid!r}; valid families: {valid}")


def _density_phi(G: fam_mod.FamilyDescriptor, phi: str) -> str:
    valid = ["O", *G.isogeny_densities]
    if phi not in valid:
        raise UsageError(f"{G.id} has no density table for {phi!r}; valid: {', '.join(valid)}")
    return phi


def _model_phi(G: fam_mod.FamilyDescriptor, phi: str) -> str:
    kernels = list(G.base_model.kernels) if G.base_model is not None else []
    if not kernels:
        raise UsageError(f"{G.id} has no base model with a marked kernel")
    if phi not in kernels:
        raise UsageError(f"{G.id} has no kernel {phi!r}; valid: {', '.join(kernels)}")
    return phi


# --------------------------------------------------------------------------- subcommands


def cmd_verify_densities(args) -> tuple[dict, int]:
    if args.family:
        G = _family(args.family)
        fid = G.id
        phi = _density_phi(G, args.phi) if args.phi else None
    else:
        fid = None
        if args.phi and args.phi != "O" and not any(args.phi in G.isogeny_densities for G in fam_mod.registry()):
            raise UsageError(f"no family has a density table for {args.phi!r}")
        phi = args.phi
    if phi is not None and fid is None and phi != "O":
        recs = []
        for G in fam_mod.registry():
            if phi in G.isogeny_densities:
                recs += verify_tables(args.qmax, G.id, phi, args.workers)
    else:
        recs = verify_tables(args.qmax, fid, phi, args.workers)
    if args.ramified:
        recs += ramified_records(args.qmax, fid)
    failed = [r for r in recs if not r.passed]
    doc = {
        "command": "verify-densities",
        "qmax": args.qmax,
        "family": fid,
        "phi": phi,
        "checks": len(recs),
        "failures": len(failed),
        "errata_cells": sorted({(r.family, r.phi, r.condition) for r in recs if r.erratum}),
        "records": [r.as_dict() for r in recs] if args.records else [r.as_dict() for r in failed],
        "records_shown": "all" if args.records else "failures",
    }
    return doc, EXIT_FAIL if failed or not recs else EXIT_OK


def cmd_verify_constants(args) -> tuple[dict, int]:
    fams = [_family(args.family).id] if args.family else None
    rep = audit_printed_constants(fams)
    unexplained = rep.unexplained_rows()
    doc = {
        "command": "verify-constants",
        "family": fams[0] if fams else None,
        "rows": len(rep.rows()),
        "reproduced": len(rep.rows()) - len(rep.flagged_rows()),
        "inconsistent_rows": [list(k) for k in rep.inconsistent_rows()],
        "unexplained_rows": [list(k) for k in unexplained],
        "records": [r.as_dict() for r in rep.records if not r.passed],
    }
    return doc, EXIT_FAIL if unexplained else EXIT_OK


def cmd_audit(args) -> tuple[dict, int]:
    rep = audit_printed_constants()
    unexplained = rep.unexplained_rows()
    doc = {
        "command": "audit",
        "rows": len(rep.rows()),
        "checks": len(rep.records),
        "mismatches": rep.mismatches,
        "flagged_rows": [list(k) for k in rep.flagged_rows()],
        "inconsistent_rows": [list(k) for k in rep.inconsistent_rows()],
        "unexplained_rows": [list(k) for k in unexplained],
        "records": [r.as_dict() for r in rep.records],
    }
    return doc, EXIT_FAIL if unexplained else EXIT_OK


def cmd_verify_discriminants(args) -> tuple[dict, int]:
    fams = [_family(args.family).id] if args.family else None
    reports = discriminant_suite(args.samples, args.bound, args.seed, fams)
    recs = [rec for r in reports for rec in r.as_records()]
    failed = sum(not r.passed for r in reports)
    doc = {
        "command": "verify-discriminants",
        "samples": args.samples,
        "bound": args.bound,
        "seed": args.seed,
        "checks": len(reports),
        "failures": failed,
        "records": recs,
    }
    return doc, EXIT_FAIL if failed else EXIT_OK


def cmd_velu_check(args) -> tuple[dict, int]:
    G = _family(args.family)
    phi = _model_phi(G, args.phi)
    reports = [dual_discriminant_check(G, phi, args.samples, args.bound, args.seed)]
    if phi in G.isogenous_example:
        reports.append(example_polynomial_check(G, phi, args.samples, args.bound, args.seed))
    failures = [f for r in reports for f in r.failures]
    doc = {
        "command": "velu-check",
        "family": G.id,
        "phi": phi,
        "samples": args.samples,
        "records": [rec for r in reports for rec in r.as_records()],
        "failures": [{k: str(v) for k, v in f.items()} for f in failures[:20]],
    }
    return doc, EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def cmd_enumerate(args) -> tuple[dict, int]:
    G = _family(args.family)
    sample = enumerate_family(G, args.height, args.margin, args.workers)
    doc = {
        "command": "enumerate",
        "family": G.id,
        "height_bound": str(args.height),
        "margin": str(args.margin),
        "box": [str(x) for x in sample.box],
        "source_pairs": sample.source_pairs,
        "N": len(sample.curves),
        "curves": [
            {"a": str(c.a), "b": str(c.b), "A": str(c.A), "B": str(c.B), "height": str(c.height)}
            for c in sample.curves
        ]
        if args.curves
        else None,
    }
    return doc, EXIT_OK


def _subgroup(text: str | None) -> tuple[int, ...] | None:
    if text is None:
        return None
    try:
        return tuple(int(t) for t in text.replace("{", "").replace("}", "").split(",") if t.strip())
    except ValueError:
        raise UsageError(f"subgroup must be comma-separated residues, got {text!r}")


def cmd_stats(args) -> tuple[dict, int]:
    G = _family(args.family)
    if args.phi not in G.isogeny_densities:
        raise UsageError(f"{G.id} has no density table for {args.phi!r}; valid: {', '.join(G.isogeny_densities)}")
    _model_phi(G, args.phi)
    try:
        rep = report(G, args.phi, args.height, _subgroup(args.subgroup), args.prime_cap, args.margin,
                     workers=args.workers)
    except SubgroupError as e:
        raise UsageError(str(e))
    if args.curves_csv:
        _emit(rep.curves_csv(), args.curves_csv)
    doc = {"command": "stats", **rep.to_dict()}
    return doc, EXIT_FAIL if rep.dropped_fraction > DROP_LIMIT else EXIT_OK


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="report path (default: standard output)")
    common.add_argument("--workers", type=_positive, default=os.cpu_count() or 1,
                        help="worker processes (default: available CPUs); output does not depend on it")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="selmer-ratios", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    s = sub.add_parser("verify-densities", parents=[common], help="census over F_q^2 against the density tables")
    s.add_argument("--qmax", type=_positive, required=True)
    s.add_argument("--family")
    s.add_argument("--phi", help="O for the reduction-type rows, else an isogeny such as C3")
    s.add_argument("--ramified", action="store_true", help="also check rows printed for primes dividing the level")
    s.add_argument("--records", action="store_true", help="list every record, not just failures")
    s.set_defaults(func=cmd_verify_densities)

    s = sub.add_parser("verify-constants", parents=[common], help="derive the mean/variance constants and compare")
    s.add_argument("--family")
    s.set_defaults(func=cmd_verify_constants)

    s = sub.add_parser("verify-discriminants", parents=[common], help="short-form and Velu discriminant checks")
    s.add_argument("--samples", type=_positive, default=100)
    s.add_argument("--bound", type=_positive, default=50)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--family")
    s.set_defaults(func=cmd_verify_discriminants)

    s = sub.add_parser("velu-check", parents=[common], help="Velu quotient discriminants for one family and kernel")
    s.add_argument("--family", required=True)
    s.add_argument("--phi", required=True)
    s.add_argument("--samples", type=_positive, default=100)
    s.add_argument("--bound", type=_positive, default=50)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_velu_check)

    s = sub.add_parser("enumerate", parents=[common], help="curves of bounded height in a family")
    s.add_argument("--family", required=True)
    s.add_argument("--height", type=_height, required=True)
    s.add_argument("--margin", type=Fraction, default=Fraction(2))
    s.add_argument("--curves", action="store_true", help="include the curve list")
    s.set_defaults(func=cmd_enumerate)

    s = sub.add_parser("stats", parents=[common], help="Selmer-ratio statistics over a height box")
    s.add_argument("--family", required=True)
    s.add_argument("--phi", required=True)
    s.add_argument("--height", type=_height, required=True)
    s.add_argument("--prime-cap", type=_positive, default=None)
    s.add_argument("--subgroup", default=None, help='residues mod m, e.g. "1,7"')
    s.add_argument("--margin", type=Fraction, default=Fraction(2))
    s.add_argument("--curves-csv", default=None, help="write per-curve rows to this path")
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("audit", parents=[common], help="full constants audit including known-inconsistent rows")
    s.set_defaults(func=cmd_audit)
    return p


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        doc, code = args.func(args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog} {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    _emit(_dump(doc), args.out)
    log.info("%s finished with exit code %d", args.command, code)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
