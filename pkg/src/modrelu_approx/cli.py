"""Command line front end: ``modrelu-approx {build,eval,verify,sweep,stats}``.

Exit codes: 0 on success, 1 when a verification (or sweep check) fails, 2 on
usage errors, invalid parameters and unreadable input.  Output files are
written atomically, so a failed command never leaves a partial file.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import primitives as P
from .network_core import ParameterError
from .serialization import ParseError, atomic_write, load, save
from .targets import CATALOG, catalog_target
from .taylor_compiler import compile as compile_target
from .verify_harness import SUITES, run_suite, sweep

__all__ = ["main", "run"]


class UsageError(Exception):
    """Invalid invocation detected after argument parsing."""


def _parser():
    p = argparse.ArgumentParser(
        prog="modrelu-approx",
        description="Build, evaluate and verify explicit complex modReLU networks.")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="build a primitive or compile a target, write JSON")
    what = b.add_mutually_exclusive_group(required=True)
    what.add_argument("--primitive", choices=P.PRIMITIVE_KINDS)
    what.add_argument("--target", choices=CATALOG)
    b.add_argument("--R", type=float, help="radius of the certified disk")
    b.add_argument("--eps", type=float, help="accuracy")
    b.add_argument("--c", type=float, default=0.0, help="shift of the ReLU primitives")
    b.add_argument("--M", type=float, help="magnitude bound of the product primitives")
    b.add_argument("--d", type=int, default=1)
    b.add_argument("--n", type=int, default=2)
    b.add_argument("-o", "--output", required=True)

    e = sub.add_parser("eval", help="evaluate a network at points read from a file")
    e.add_argument("network")
    e.add_argument("points", help="one vector per line, entries 're,im' separated by ';'")
    e.add_argument("-o", "--output", help="output file (default: standard output)")

    v = sub.add_parser("verify", help="run a claim suite")
    v.add_argument("--suite", choices=SUITES, default="all")
    v.add_argument("--seed", type=int, default=42)
    v.add_argument("--samples", type=int, default=10_000)
    v.add_argument("-o", "--output", help="write reports as JSON lines")

    s = sub.add_parser("sweep", help="compile over several accuracies and write CSV")
    s.add_argument("--d", type=int, default=1)
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--target", choices=CATALOG, default="quad")
    s.add_argument("--eps", required=True, help="comma-separated accuracies")
    s.add_argument("--grid", type=int, default=41, help="grid nodes per real axis")
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("-o", "--output", required=True)

    st = sub.add_parser("stats", help="print architecture statistics as JSON")
    st.add_argument("network")
    return p


def _need(args, *names):
    missing = [f"--{n}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"{args.primitive or args.target} needs {', '.join(missing)}")


def _build(args):
    if args.target:
        _need(args, "eps")
        if args.d < 1 or args.n < 1:
            raise UsageError("--d and --n must be positive")
        return compile_target(catalog_target(args.target, args.d, args.n), args.eps)
    kind = args.primitive
    needs = {
        "identity": ("R",), "re": ("R", "eps"), "im": ("R", "eps"),
        "relu_re": ("R", "eps"), "relu_im": ("R", "eps"), "abs_re": ("R", "eps"),
        "g_re": ("R", "eps"), "square_re": ("R", "eps"), "square_im": ("R", "eps"),
        "product_re": ("R", "eps", "M"), "product": ("R", "eps", "M"),
    }
    _need(args, *needs.get(kind, ()))
    return P.build_from_spec(kind, R=args.R, eps=args.eps, c=args.c, M=args.M)


def parse_points(text, d_in):
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            entries = [e.split(",") for e in line.split(";")]
            row = [complex(float(re), float(im)) for re, im in entries]
        except ValueError:
            raise UsageError(f"points line {lineno}: expected 're,im' entries separated by ';'")
        if len(row) != d_in:
            raise UsageError(f"points line {lineno}: {len(row)} entries, network expects {d_in}")
        if not all(np.isfinite(c) for c in row):
            raise UsageError(f"points line {lineno}: non-finite entry")
        rows.append(row)
    return np.array(rows, dtype=np.complex128).reshape(-1, d_in)


def format_values(values):
    return "".join(";".join(f"{c.real:.17g},{c.imag:.17g}" for c in row) + "\n"
                   for row in np.atleast_2d(values))


def _load(path):
    try:
        return load(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}")
    except ParseError as exc:
        raise UsageError(f"{path}: {exc}")


def run(argv=None):
    """Execute one command and return its exit code."""
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _dispatch(args)
    except (UsageError, ParameterError) as exc:
        print(f"modrelu-approx: error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args):
    if args.command == "build":
        try:
            net = _build(args)
        except ValueError as exc:
            raise UsageError(str(exc))
        save(net, args.output)
        return 0

    if args.command == "stats":
        net = _load(args.network)
        print(json.dumps(net.stats().as_dict(), sort_keys=True))
        return 0

    if args.command == "eval":
        net = _load(args.network)
        try:
            with open(args.points, encoding="utf-8") as fh:
                pts = parse_points(fh.read(), net.d_in)
        except OSError as exc:
            raise UsageError(f"cannot read {args.points}: {exc.strerror}")
        text = format_values(net(pts)) if len(pts) else ""
        if args.output:
            atomic_write(args.output, text)
        else:
            sys.stdout.write(text)
        return 0

    if args.command == "verify":
        if args.samples < 1:
            raise UsageError("--samples must be positive")
        reports = run_suite(args.suite, seed=args.seed, samples=args.samples)
        for r in reports:
            print(r.line())
        if args.output:
            atomic_write(args.output, "".join(r.to_json() + "\n" for r in reports))
        return 0 if all(r.passed for r in reports) else 1

    if args.command == "sweep":
        try:
            eps = [float(e) for e in args.eps.split(",") if e.strip()]
        except ValueError:
            raise UsageError(f"--eps: cannot parse {args.eps!r}")
        if not eps or not all(0 < e < 3 / 8 for e in eps):
            raise UsageError("--eps values must lie in (0, 3/8)")
        if args.grid < 2:
            raise UsageError("--grid must be at least 2")
        result = sweep(eps, args.d, args.n, args.target, grid=args.grid, seed=args.seed)
        atomic_write(args.output, result.to_csv())
        print(json.dumps(result.summary(), sort_keys=True))
        return 0 if result.passed else 1
    raise UsageError(f"unknown command {args.command!r}")


def main():
    sys.exit(run())

