"""Command line entry point: ``bench <command> [options]``."""

import argparse
import math
import sys

from .. import _kernels
from ..tableaux import available, load_table
from . import harness
from .brusselator import PRESETS, Brusselator, preset_name

STEPPER_MODES = {("erk", None): "erk", ("ark", "erk"): "erk", ("ark", "dirk"): "dirk",
                 ("ark", "imex"): "imex1", ("mri", None): "mri"}

SHOW = ("label", "method", "steps", "err_fails", "solve_fails", "fe_evals", "fi_evals",
        "nls_iters", "nls_fails", "ls_setups", "jac_evals", "error", "wall_ms")


def _table_arg(value):
    if value is None:
        return None
    if value in available():
        return value
    return load_table(value)


def _problem(args, d=None):
    return Brusselator(npts=args.npts, d=args.d if d is None else d, tf=args.tf,
                       literal_diffusion=args.literal_diffusion)


def _print_rows(rows, keys=SHOW, out=None):
    out = out or sys.stdout
    rows = list(rows)
    if not rows:
        return
    keys = [k for k in keys if k in rows[0]]
    cells = [[_fmt(r.get(k)) for k in keys] for r in rows]
    widths = [max(len(k), *(len(c[i]) for c in cells)) for i, k in enumerate(keys)]
    print("  ".join(k.rjust(w) for k, w in zip(keys, widths)), file=out)
    for c in cells:
        print("  ".join(v.rjust(w) for v, w in zip(c, widths)), file=out)


def _fmt(v):
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return f"{v:.3e}" if abs(v) < 1e-2 or abs(v) >= 1e5 else f"{v:.3f}"
    return str(v)


def _report_rows(reports):
    rows = []
    for r in reports:
        row = r.as_row()
        if not r.ok:
            row["label"] = f"{r.label} (failed: {r.message})"
        rows.append(row)
    return rows


def _emit(reports, args, keys=SHOW):
    rows = _report_rows(reports)
    _print_rows(rows, keys)
    if args.csv:
        harness.write_csv(rows, args.csv)
        print(f"wrote {args.csv}")
    return 0 if all(r.ok for r in reports) else 1


def _resolve_preset(args):
    if args.preset:
        return preset_name(args.preset)
    if args.stepper:
        key = (args.stepper, args.mode if args.stepper == "ark" else None)
        if key not in STEPPER_MODES:
            raise SystemExit(f"unsupported stepper/mode combination {key}")
        return STEPPER_MODES[key]
    return "imex1"


def cmd_brusselator(args):
    preset = _resolve_preset(args)
    d = 0.0 if preset == "erk" and args.d is None else args.d
    problem = _problem(args, d=0.01 if d is None else d)
    reference = None if args.no_reference else harness.get_reference(problem)
    if preset == "mri":
        coupling = _table_arg(args.mri_coupling) or harness.DEFAULT_COUPLING
        rep = harness.mri_run(problem, args.inner, coupling, args.H, args.inner_rtol,
                              args.inner_atol, reference)
        keys = SHOW + tuple(f"fast_{k}" for k in rep.fast)
        return _emit([rep], args, keys)
    rep = harness.run_case(problem, preset, table=_table_arg(args.table),
                           controller=args.controller, rtol=args.rtol, atol=args.atol,
                           predictor=args.predictor,
                           linearly_implicit=True if args.linearly_implicit else None,
                           band=args.band, reference=reference)
    return _emit([rep], args)


def cmd_sweep(args):
    problem = _problem(args, d=0.0)

    def progress(row):
        print(f"{row['method']:>22} {row['controller']:>20} rtol={row['rtol']:.0e} "
              f"evals={row['rhs_evals']:>7} error={_fmt(row['error'])}", flush=True)

    harness.work_precision_sweep(problem, csv_path=args.csv,
                                 progress=None if args.quiet else progress)
    if args.csv:
        print(f"wrote {args.csv}")
    return 0


def cmd_table1(args):
    problem = _problem(args, d=0.01 if args.d is None else args.d)
    reps = harness.table1(problem, splits=[preset_name(s) for s in args.splits],
                          predictors=args.predictors)
    return _emit(reps, args)


def cmd_table2(args):
    problem = _problem(args, d=0.01 if args.d is None else args.d)
    coupling = _table_arg(args.mri_coupling) or harness.DEFAULT_COUPLING
    reps = harness.table2(problem, inners=args.inners, H=args.H, coupling=coupling,
                          inner_rtol=args.inner_rtol, inner_atol=args.inner_atol)
    keys = SHOW + tuple(f"fast_{k}" for k in reps[0].fast)
    return _emit(reps, args, keys)


def cmd_reference(args):
    problem = _problem(args, d=0.01 if args.d is None else args.d)
    path = args.out or harness.reference_path(problem)
    y = harness.make_reference(problem, path)
    print(f"wrote {path} ({y.shape[0]} values, max {abs(y).max():.6g})")
    return 0


def _common(p):
    p.add_argument("--npts", type=int, default=512, help="grid points (default 512)")
    p.add_argument("--d", type=float, default=None, help="diffusion coefficient")
    p.add_argument("--tf", type=float, default=10.0, help="final time")
    p.add_argument("--literal-diffusion", action="store_true",
                   help="diffuse every species with u_xx instead of its own profile")
    p.add_argument("--csv", default=None, help="write results to this CSV file")


def build_parser():
    ap = argparse.ArgumentParser(prog="bench", description=__doc__)
    ap.add_argument("--backend", action="store_true", help="print the kernel backend and exit")
    sub = ap.add_subparsers(dest="command")

    p = sub.add_parser("brusselator", help="single run of one splitting")
    _common(p)
    p.add_argument("--preset", choices=sorted(PRESETS) + ["erk-all", "dirk-all", "imex-1",
                                                          "imex-2"])
    p.add_argument("--stepper", choices=("erk", "ark", "mri"))
    p.add_argument("--mode", choices=("imex", "dirk", "erk"), default="imex")
    p.add_argument("--table", default=None, help="catalog name or coefficient file")
    p.add_argument("--erk-table", dest="table", help="alias of --table for explicit runs")
    p.add_argument("--ark-table", dest="table", help="alias of --table for ARK runs")
    p.add_argument("--controller", default="pid")
    p.add_argument("--rtol", type=float, default=1e-4)
    p.add_argument("--atol", type=float, default=1e-9)
    p.add_argument("--predictor", default="trivial", help="T, M, V or C")
    p.add_argument("--linearly-implicit", action="store_true")
    p.add_argument("--band", type=int, default=4, help="Newton half bandwidth")
    p.add_argument("--mri-coupling", default=None)
    p.add_argument("--inner", choices=harness.TABLE2_INNERS, default="erk3")
    p.add_argument("--inner-rtol", type=float, default=1e-4)
    p.add_argument("--inner-atol", type=float, default=1e-9)
    p.add_argument("--H", type=float, default=0.1, help="slow step for the mri preset")
    p.add_argument("--no-reference", action="store_true", help="skip the error column")
    p.set_defaults(func=cmd_brusselator)

    p = sub.add_parser("sweep", help="explicit work-precision sweep (48 runs)")
    _common(p)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("table1", help="DIRK and ImEx statistics with four predictors")
    _common(p)
    p.add_argument("--splits", nargs="+", default=list(harness.TABLE1_SPLITS))
    p.add_argument("--predictors", nargs="+", default=list(harness.TABLE1_PREDICTORS))
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("table2", help="multirate statistics for several inner solvers")
    _common(p)
    p.add_argument("--inners", nargs="+", default=list(harness.TABLE2_INNERS),
                   choices=harness.TABLE2_INNERS)
    p.add_argument("--mri-coupling", default=None)
    p.add_argument("--inner-rtol", type=float, default=1e-4)
    p.add_argument("--inner-atol", type=float, default=1e-9)
    p.add_argument("--H", type=float, default=0.1)
    p.set_defaults(func=cmd_table2)

    p = sub.add_parser("reference", help="compute and store a reference solution")
    _common(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_reference)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.backend:
        print(_kernels.BACKEND)
        return 0
    if not args.command:
        ap.print_help()
        return 2
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
