"""Command-line entry point.

    pdwg2d run --case table1 --s 1 --levels 6 --out csv

Exit codes: 0 on success, 2 when the linear system is singular (an s/gamma
combination outside the well-posedness regime), 1 on usage errors.
"""

from __future__ import annotations

import argparse
import sys

from pdwg2d.cases import UnknownCaseError, catalog
from pdwg2d.harness import RunConfig, emit_plot, emit_report, run_convergence
from pdwg2d.solver import SingularSystemError


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="pdwg2d", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser(
        "run",
        help="run a refinement study for one catalog case",
        description=(
            "Runs levels 0..n-1 of uniform refinement (level l has unit-cell "
            "spacing 1/h = 2^l) and prints a convergence report. Plots use "
            "the viridis color map; contours draw 20 levels (artifact "
            "choices, not part of the method)."
        ),
    )
    run.add_argument("--case", required=True, help="case id, e.g. table1")
    run.add_argument("--s", type=int, choices=(0, 1), required=True, help="primal degree")
    run.add_argument("--gamma", type=float, default=None, help="stabilizer weight override")
    run.add_argument("--levels", type=int, required=True, help="number of levels (>= 1)")
    run.add_argument("--out", choices=("csv", "json"), default="csv", help="report format")
    run.add_argument("--plot", choices=("surface", "contour"), default=None)
    run.add_argument("--plot-out", default=None, help="SVG output path for --plot")
    run.add_argument("--dump-system", default=None, help="write the finest-level system")
    run.add_argument(
        "--list-cases", action="store_true", help="list catalog case ids and exit"
    )
    return run, parser


def main(argv=None) -> int:
    run, parser = _build_parser()
    args = parser.parse_args(argv)

    if getattr(args, "list_cases", False):
        for case in catalog():
            print(f"{case.id:18s} s={case.s} {case.description}")
        return 0
    if args.levels < 1:
        run.error("--levels must be >= 1")
    if args.plot and not args.plot_out:
        run.error("--plot requires --plot-out")

    config = RunConfig(
        case_id=args.case,
        s=args.s,
        gamma=args.gamma,
        levels=args.levels,
        out_format=args.out,
        plot=args.plot,
        plot_out=args.plot_out,
        dump_path=args.dump_system,
    )
    try:
        result = run_convergence(config)
    except UnknownCaseError as exc:
        run.error(f"unknown case id {exc}")
    except SingularSystemError as exc:
        print(f"singular system: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    sys.stdout.write(emit_report(result.report, args.out))
    if args.out == "json":
        sys.stdout.write("\n")
    if args.plot:
        try:
            emit_plot(result, args.plot, args.plot_out)
        except OSError as exc:
            print(f"error writing plot: {exc}", file=sys.stderr)
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
