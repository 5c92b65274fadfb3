"""Command-line entry point: ``hpfnav <command> ...``.

Commands: solve, simulate, compliance, multi, verify, plot. Outputs go to
``--output-dir``, defaulting to ``$HPFNAV_OUTPUT_DIR`` or the working
directory. Exit status: 0 success, 1 usage or schema error, 2 numerical
failure (solver, integration, failed verification).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import NotFrozenError, decay_checks, field_sanity, verification_battery
from .field import ConvergenceError, GridEnvironmentError, QueryError, solve
from .field.io import FormatError, load_environment, load_field, save_field
from .models import SingularityError
from .plot import PLOT_KINDS, plot_distance, plot_heatmap, plot_log
from .scenario import ScenarioError, bundled_scenarios, load_scenario
from .sim import DivergenceError, MatchError, ResolveError, TrajectoryLog, run, run_compliance, run_multi

OUTPUT_ENV = "HPFNAV_OUTPUT_DIR"
EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2

NUMERICAL = (ConvergenceError, DivergenceError, ResolveError, MatchError, SingularityError, QueryError,
             FloatingPointError)
USAGE = (ScenarioError, FormatError, GridEnvironmentError, NotFrozenError, FileNotFoundError, KeyError,
         ValueError, OSError)


class UsageError(Exception):
    pass


class NumericalFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _outdir(args) -> Path:
    d = Path(args.output_dir or os.environ.get(OUTPUT_ENV) or ".")
    d.mkdir(parents=True, exist_ok=True)
    if not os.access(d, os.W_OK):
        raise UsageError(f"output directory {d} is not writable")
    return d


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, default=_jsonable)


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    raise TypeError(f"not JSON serialisable: {type(x)}")


def _write_json(path: Path, obj):
    path.write_text(_dump(obj) + "\n")


def _write_points(path: Path, pts, header=("x", "y", "z")):
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    lines = [",".join(header[: pts.shape[1]])]
    lines += [",".join(repr(float(v)) for v in row) for row in pts]
    path.write_text("\n".join(lines) + "\n")


def _read_points(path: Path) -> np.ndarray:
    rows = Path(path).read_text().split("\n")
    data = [[float(v) for v in r.split(",")] for r in rows[1:] if r.strip()]
    if not data:
        raise ValueError(f"{path}: no points")
    return np.array(data)


# -- commands ----------------------------------------------------------------

def cmd_solve(args):
    env = load_environment(args.environment, args.sidecar)
    from .field import SolverParams
    params = SolverParams(tolerance=args.tolerance)
    kw = {}
    if args.variant == "anisotropic":
        if args.sigma_f is None or args.sigma_b is None:
            raise UsageError("anisotropic solves need --sigma-f and --sigma-b")
        kw = {"sigma_f": args.sigma_f, "sigma_b": args.sigma_b}
    fld = solve(env, args.variant, params, **kw)
    out = _outdir(args)
    stem = args.name or Path(args.environment).stem + "_" + args.variant
    header = save_field(fld, out / f"{stem}.{args.format}", args.format)
    print(f"variant={fld.variant} iterations={fld.iterations} residual={fld.residual:.3e}")
    print(f"wrote {header}")
    return EXIT_OK


def _load(args, kinds):
    ls = load_scenario(args.scenario, args.set or ())
    if ls.kind not in kinds:
        raise UsageError(f"scenario {ls.name!r} has kind {ls.kind!r}; use the "
                         f"{'multi' if ls.kind == 'multi' else 'simulate'} command")
    return ls


def cmd_simulate(args):
    ls = _load(args, ("single", "compliance"))
    tl = run(ls.scenario)
    out = _outdir(args)
    stem = args.name or ls.name or Path(args.scenario).stem
    csv_path, summary_path = tl.write(out / f"{stem}.csv")
    print(_dump(tl.summary))
    print(f"wrote {csv_path} and {summary_path}")
    return EXIT_OK


def cmd_compliance(args):
    ls = _load(args, ("compliance", "single"))
    matched = ls.matched_initial and not args.mismatched
    res = run_compliance(ls.scenario, matched_initial=matched)
    out = _outdir(args)
    stem = args.name or (ls.name or Path(args.scenario).stem) + ("" if matched else "_mismatched")
    res.log.summary.update({
        "max_deviation": res.max_deviation,
        "matched_initial": matched,
        "kinematic_reason": res.kinematic.reason,
        "kinematic_length": res.kinematic.length,
    })
    csv_path, summary_path = res.log.write(out / f"{stem}.csv")
    kin_path = out / f"{stem}.kinematic.csv"
    _write_points(kin_path, res.kinematic.points)
    fld = ls.scenario.reference.field
    bg = fld.env.beta if fld.variant == "weighted" else None
    svg = plot_heatmap(fld, [("kinematic", res.kinematic.points, True), ("dynamic", res.dynamic, False)],
                       title=f"{stem}: kinematic (dotted) and dynamic (solid)", background=bg)
    svg_path = out / f"{stem}.svg"
    svg_path.write_text(svg)
    print(_dump({"max_deviation": res.max_deviation, "matched_initial": matched,
                 "termination": res.log.summary["termination"], "kinematic_reason": res.kinematic.reason}))
    print(f"wrote {csv_path}, {summary_path}, {kin_path}, {svg_path}")
    return EXIT_OK


def cmd_multi(args):
    ls = _load(args, ("multi",))
    ms = ls.multi
    if args.no_resolve:
        from dataclasses import replace
        ms = replace(ms, resolve=False)
    res = run_multi(ms)
    out = _outdir(args)
    stem = args.name or ls.name or Path(args.scenario).stem
    written = []
    for i, tl in enumerate(res.logs):
        written += tl.write(out / f"{stem}.agent{i}.csv")
    dist_path = out / f"{stem}.distance.csv"
    _write_points(dist_path, np.column_stack([res.t, res.inter_distance]), ("t", "distance"))
    summary = res.summary()
    summary.update({"resolve": ms.resolve, "obstacle_radius": ms.obstacle_radius})
    summary_path = out / f"{stem}.summary.json"
    _write_json(summary_path, summary)
    print(_dump({k: v for k, v in summary.items() if k != "agents"}))
    print(f"wrote {', '.join(str(p) for p in written)}, {dist_path}, {summary_path}")
    return EXIT_OK


def cmd_verify(args):
    out = _outdir(args)
    if not args.inputs:
        report = verification_battery(seed=args.seed, random_grids=args.random_grids)
    else:
        checks = []
        for p in args.inputs:
            p = Path(p)
            if p.suffix == ".csv":
                tl = TrajectoryLog.read(p)
                for r in decay_checks(tl):
                    checks.append({"name": f"decay/{p.stem}/{r.measure}", **r.to_dict()})
            else:
                rep = field_sanity(load_field(p))
                checks.append({"name": f"field/{p.stem}", **rep.to_dict()})
        report = {"checks": checks, "passed": all(c["passed"] for c in checks)}
    path = out / (args.name or "verify_report")
    path = path.with_suffix(".json")
    _write_json(path, report)
    for c in report["checks"]:
        print(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']}")
    print(f"{'PASS' if report['passed'] else 'FAIL'} overall; wrote {path}")
    if not report["passed"]:
        raise NumericalFailure("verification failed")
    return EXIT_OK


def cmd_plot(args):
    out = _outdir(args)
    kinds = args.kind or ["xyz"]
    written = []
    for kind in kinds:
        if kind not in PLOT_KINDS:
            raise UsageError(f"unknown plot kind {kind!r}; expected one of {list(PLOT_KINDS)}")
        if kind == "heatmap":
            if not args.field:
                raise UsageError("heatmap plots need --field")
            fld = load_field(args.field)
            paths = []
            if args.kinematic:
                paths.append(("kinematic", _read_points(args.kinematic), True))
            for p in args.logs:
                paths.append((Path(p).stem, TrajectoryLog.read(p).positions(), False))
            bg = fld.env.beta if args.background == "beta" else None
            svg = plot_heatmap(fld, paths, title=Path(args.field).stem, background=bg)
            stem = Path(args.field).stem
        elif kind == "distance":
            if len(args.logs) != 1:
                raise UsageError("distance plots take one t,distance CSV")
            pts = _read_points(args.logs[0])
            svg = plot_distance(pts[:, 0], pts[:, 1], args.radius)
            stem = Path(args.logs[0]).stem
        else:
            if len(args.logs) != 1:
                raise UsageError(f"{kind} plots take exactly one trajectory CSV")
            tl = TrajectoryLog.read(args.logs[0])
            cols = args.columns.split(",") if args.columns else None
            svg = plot_log(tl, kind, cols)
            stem = Path(args.logs[0]).stem
        path = out / f"{stem}.{kind}.svg"
        path.write_text(svg)
        written.append(path)
    print("wrote " + ", ".join(str(p) for p in written))
    return EXIT_OK


def cmd_list(args):
    for n in bundled_scenarios():
        print(n)
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hpfnav", description="Harmonic potential field planning and VVA control.")
    p.add_argument("--version", action="version", version=f"hpfnav {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp):
        sp.add_argument("-o", "--output-dir", help=f"output directory (default ${OUTPUT_ENV} or .)")
        sp.add_argument("--name", help="output file stem")

    def scen(sp):
        sp.add_argument("scenario", help="scenario JSON file or bundled scenario name")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a scenario entry by dotted key, e.g. gains.K_u=2")

    s = sub.add_parser("solve", help="solve a potential on an environment file")
    s.add_argument("environment", help=".pgm intensity map or .json environment")
    s.add_argument("--sidecar", help="JSON sidecar for a PGM (default: same stem)")
    s.add_argument("--variant", default="laplace", choices=["laplace", "weighted", "anisotropic"])
    s.add_argument("--sigma-f", type=float)
    s.add_argument("--sigma-b", type=float)
    s.add_argument("--tolerance", type=float, default=1e-8)
    s.add_argument("--format", default="csv", choices=["csv", "bin"])
    common(s)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("simulate", help="run a scenario and write its trajectory log")
    scen(s)
    common(s)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("compliance", help="compare a flown path with the kinematic descent path")
    scen(s)
    s.add_argument("--mismatched", action="store_true", help="fly from the file's initial state")
    common(s)
    s.set_defaults(func=cmd_compliance)

    s = sub.add_parser("multi", help="run a two-agent scenario")
    scen(s)
    s.add_argument("--no-resolve", action="store_true", help="ablation: never re-solve the field")
    common(s)
    s.set_defaults(func=cmd_multi)

    s = sub.add_parser("verify", help="run the verification battery or check given logs/fields")
    s.add_argument("inputs", nargs="*", help="frozen-reference log CSVs or field headers")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--random-grids", type=int, default=20)
    common(s)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("plot", help="write SVG plots")
    s.add_argument("logs", nargs="*", help="trajectory CSVs (or a t,distance CSV)")
    s.add_argument("--kind", action="append", help=f"one of {', '.join(PLOT_KINDS)}; repeatable")
    s.add_argument("--columns", help="comma-separated columns for --kind columns")
    s.add_argument("--field", help="field header for heatmaps")
    s.add_argument("--kinematic", help="kinematic path CSV to overlay (dotted)")
    s.add_argument("--background", choices=["potential", "beta"], default="potential")
    s.add_argument("--radius", type=float, help="obstacle radius line for distance plots")
    common(s)
    s.set_defaults(func=cmd_plot)

    s = sub.add_parser("list", help="list bundled scenarios")
    s.set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help()
            return EXIT_USAGE
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except NUMERICAL as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except USAGE as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
