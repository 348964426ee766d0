"""Command-line front end: ``eocorr run | compare | validate | list-scenarios``.

Exit codes: 0 success, 1 comparison failed, 2 invalid input, 3 numerical
failure in at least one sweep point.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import __version__
from .compare import Tolerance, compare_traces
from .physics import MATERIAL_PATH_ENV
from .scenario import ScenarioError, bundled_scenarios, find_scenario, load_scenario, run_scenario
from .traces import GridError

EXIT_OK, EXIT_COMPARE_FAIL, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2, 3

log = logging.getLogger("eocorr")


def _cmd_run(args):
    sc = load_scenario(find_scenario(args.scenario))
    res = run_scenario(sc, out_dir=args.out, seed=args.seed, workers=args.workers)
    for p in res.points:
        pp = p.summary.get("peak_to_peak")
        label = "tau sweep" if p.value is None else f"{sc.sweep_axis}={p.value:g}"
        if p.status == "ok":
            print(f"{label:<24} peak-to-peak {pp:.6g}")
        else:
            print(f"{label:<24} {p.status}", file=sys.stderr)
    print(f"wrote {len(res.files) + 1} files to {res.out_dir}")
    return EXIT_OK if res.ok else EXIT_NUMERICAL


def _cmd_validate(args):
    sc = load_scenario(find_scenario(args.scenario))
    print(f"{sc.name}: ok ({sc.mode}, {sc.sweep_axis} x {len(sc.sweep_values)})")
    return EXIT_OK


def _cmd_list(args):
    for name, path in bundled_scenarios().items():
        sc = load_scenario(path)
        print(f"{name:<24} {sc.description}")
    return EXIT_OK


def _cmd_compare(args):
    tol = Tolerance(args.atol, args.rtol, args.rms, args.rms_se)
    report = compare_traces(args.a, args.b, tol, interpolate=args.interpolate)
    print("\n".join(report.lines()))
    return EXIT_OK if report.passed else EXIT_COMPARE_FAIL


def build_parser():
    p = argparse.ArgumentParser(
        prog="eocorr", description="Electro-optic field correlation simulator.",
        epilog=f"Material files are searched on ${MATERIAL_PATH_ENV} (path-separated) "
               "after the given path and before the bundled files.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario file or bundled scenario name")
    r.add_argument("scenario")
    r.add_argument("--seed", type=int, help="override the scenario seed")
    r.add_argument("--workers", type=int, help="worker threads for Monte-Carlo points")
    r.add_argument("--out", help="output directory (default: the scenario's own)")
    r.set_defaults(func=_cmd_run)

    v = sub.add_parser("validate", help="check a scenario against the schema")
    v.add_argument("scenario")
    v.set_defaults(func=_cmd_validate)

    ls = sub.add_parser("list-scenarios", help="list bundled scenarios")
    ls.set_defaults(func=_cmd_list)

    c = sub.add_parser("compare", help="compare two trace CSV files")
    c.add_argument("a")
    c.add_argument("b")
    c.add_argument("--atol", type=float)
    c.add_argument("--rtol", type=float)
    c.add_argument("--rms", type=float, help="bound on the RMS difference")
    c.add_argument("--rms-se", type=float, metavar="K",
                   help="bound the RMS difference by K times the mean standard error")
    c.add_argument("--interpolate", action="store_true",
                   help="resample the second trace onto the first grid")
    c.set_defaults(func=_cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ScenarioError, GridError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
