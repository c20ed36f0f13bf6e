"""``phase`` command line entry point.

Exit codes: 0 ok, 1 a gauge-demo trial failed its verdict, 2 validation,
3 non-cyclic evolution, 4 degenerate spectrum, 5 I/O.
"""

import argparse
import sys
from pathlib import Path

from . import __version__
from .errors import NonCyclicPath, PhaseError, PhaseIOError, ValidationError
from .scenario import dumps, emit_interferogram, format_demo_table, gauge_demo, parse_scenario, random_windings, run_report


def _positive_int(text):
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if n < 2:
        raise argparse.ArgumentTypeError("must be at least 2")
    return n


def _windings(text):
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from None


def build_parser():
    p = argparse.ArgumentParser(prog="phase", description="Cyclic mixed-state geometric phases and their gauge behaviour.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="compute the phase report of a scenario")
    run.add_argument("scenario")
    run.add_argument("--steps", type=_positive_int)
    run.add_argument("--out")
    run.add_argument("--frame", choices=["canonical", "chart"], default="canonical",
                     help="periodic gauge used for the per-level phases")

    demo = sub.add_parser("gauge-demo", help="compare phases before and after gauge transformations")
    demo.add_argument("scenario")
    grp = demo.add_mutually_exclusive_group()
    grp.add_argument("--windings", type=_windings)
    grp.add_argument("--random", type=int, metavar="K")
    demo.add_argument("--seed", type=int, default=0)
    demo.add_argument("--tol", type=float, default=1e-6)
    demo.add_argument("--steps", type=_positive_int)
    demo.add_argument("--out")
    demo.add_argument("--table", action="store_true", help="print a text table instead of JSON")

    ig = sub.add_parser("interferogram", help="simulate and fit the interference profile")
    ig.add_argument("scenario")
    ig.add_argument("--out", required=True, help="CSV output path")
    ig.add_argument("--svg", help="optional figure path")
    ig.add_argument("--steps", type=_positive_int)
    ig.add_argument("--report", help="write the JSON report here instead of stdout")
    return p


def _write(text, out):
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise PhaseIOError(f"cannot write {out}: {exc.strerror or exc}") from exc


def _run(args):
    s = parse_scenario(args.scenario)
    if args.command == "run":
        _write(dumps(run_report(s, args.steps, args.frame)), args.out)
        return 0
    if args.command == "gauge-demo":
        if args.windings is not None:
            wl = [args.windings]
        elif args.random is not None:
            from .spectral import decompose_initial

            levels = decompose_initial(s.rho0).retained
            wl = random_windings(levels, args.random, args.seed)
        elif s.windings is not None:
            wl = [s.windings]
        else:
            raise ValidationError("give --windings, --random K, or a gauge block in the scenario")
        demo = gauge_demo(s, wl, tol=args.tol, steps=args.steps)
        _write(format_demo_table(demo) + "\n" if args.table else dumps(demo), args.out)
        return 0 if demo["summary"]["failed"] == 0 else 1
    if args.command == "interferogram":
        _write(dumps(emit_interferogram(s, args.out, args.svg, args.steps)), args.report)
        return 0
    raise AssertionError(args.command)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except NonCyclicPath as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(f"cyclicity residual: {exc.residual!r}", file=sys.stderr)
        return exc.exit_code
    except PhaseError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
