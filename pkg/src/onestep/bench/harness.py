"""Runs of the Brusselator benchmark: references, sweeps and statistics tables."""

import csv
import dataclasses
import hashlib
import io
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..ark import ArkStepper
from ..core import Tolerances
from ..erk import ErkStepper
from ..integrator import IntegrationError, Integrator
from ..mri import MriStepper, SdirkInner, wrap_ark_as_inner
from ..solvers import NewtonConfig, SolverFailure
from .brusselator import Brusselator, preset_name

SWEEP_COLUMNS = ("method", "controller", "rtol", "atol", "rhs_evals", "error", "steps",
                 "rejections", "wall_ms")
SWEEP_METHODS = ("heun_euler_2_1", "bogacki_shampine_3_2", "zonneveld_4_3", "cash_karp_5_4")
SWEEP_CONTROLLERS = ("pid", "pi", "i", "explicit-gustafsson")
SWEEP_TOLERANCES = ((1e-4, 1e-9), (1e-5, 1e-10), (1e-6, 1e-11))

REFERENCE_TABLE = "ark548l2sa_dirk_5_4"
REFERENCE_TOL = (1e-8, 1e-14)

TABLE1_SPLITS = ("dirk", "imex1", "imex2")
TABLE1_PREDICTORS = ("T", "M", "V", "C")
TABLE2_INNERS = ("erk3", "dirk3", "custom")
DEFAULT_COUPLING = "imex_mri_heun_trap_2x3"


@dataclass
class RunReport:
    label: str
    method: str
    controller: str
    rtol: float
    atol: float
    ok: bool = True
    message: str = ""
    steps: int = 0
    attempts: int = 0
    err_fails: int = 0
    solve_fails: int = 0
    fe_evals: int = 0
    fi_evals: int = 0
    fi_evals_jac: int = 0
    nls_iters: int = 0
    nls_fails: int = 0
    ls_setups: int = 0
    jac_evals: int = 0
    error: float = float("nan")
    wall_ms: float = 0.0
    fast: dict = field(default_factory=dict)

    @property
    def rhs_evals(self):
        return self.fe_evals + self.fi_evals

    @property
    def rejections(self):
        return self.err_fails + self.solve_fails

    def as_row(self):
        row = {k: v for k, v in dataclasses.asdict(self).items() if k != "fast"}
        row["rhs_evals"] = self.rhs_evals
        row["rejections"] = self.rejections
        for k, v in self.fast.items():
            row[f"fast_{k}"] = v
        return row


# ---------------------------------------------------------------------------
# reference solutions
# ---------------------------------------------------------------------------

def cache_dir():
    root = os.environ.get("ONESTEP_CACHE")
    if root:
        return Path(root)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "onestep"


def _problem_key(problem: Brusselator, rtol, atol):
    desc = (f"npts={problem.npts} c={problem.c!r} d={problem.d!r} a={problem.a!r} "
            f"b={problem.b!r} eps={problem.eps!r} t0={problem.t0!r} tf={problem.tf!r} "
            f"literal={int(problem.literal_diffusion)} rtol={rtol!r} atol={atol!r}")
    return desc, hashlib.sha1(desc.encode()).hexdigest()[:12]


def reference_path(problem, rtol=REFERENCE_TOL[0], atol=REFERENCE_TOL[1]):
    _, key = _problem_key(problem, rtol, atol)
    return cache_dir() / f"brusselator-{key}.txt"


def _dirk_stepper(problem, f, table, band, linearly_implicit=False, predictor="trivial"):
    return ArkStepper(fi=f, table=table, structure=("banded", band, band),
                      linearly_implicit=linearly_implicit, predictor=predictor)


def write_reference(path, problem, y, rtol, atol):
    desc, _ = _problem_key(problem, rtol, atol)
    buf = io.StringIO()
    buf.write(f"# brusselator reference\n# N={problem.npts} tf={problem.tf!r}\n# {desc}\n")
    buf.write(f"# n={y.shape[0]}\n")
    for v in y:
        buf.write(f"{v:.17e}\n")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue())


def load_reference(path):
    values = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#") or not line.strip():
            continue
        values.append(float(line))
    return np.array(values)


def make_reference(problem, path=None, rtol=REFERENCE_TOL[0], atol=REFERENCE_TOL[1]):
    """Integrate with the order-5 DIRK at tight tolerances and store ``y(tf)``."""
    st = _dirk_stepper(problem, problem.rhs, REFERENCE_TABLE, 4)
    integ = Integrator(st, problem.t0, problem.initial(), tol=Tolerances(rtol, atol))
    _, y, _ = integ.evolve(problem.tf, "normal-tstop")
    if path is not None:
        write_reference(path, problem, y, rtol, atol)
    return y


def get_reference(problem, rtol=REFERENCE_TOL[0], atol=REFERENCE_TOL[1]):
    """Cached reference for ``problem``; computed and stored on first use."""
    path = reference_path(problem, rtol, atol)
    if path.exists():
        y = load_reference(path)
        if y.shape[0] == problem.n:
            return y
    return make_reference(problem, path, rtol, atol)


def max_relative_error(y, ref):
    return float(np.max(np.abs(y - ref) / np.abs(ref)))


# ---------------------------------------------------------------------------
# single runs
# ---------------------------------------------------------------------------

def _fill(report, stats):
    for name in ("steps", "attempts", "err_fails", "solve_fails", "fe_evals", "fi_evals",
                 "fi_evals_jac", "nls_iters", "nls_fails", "ls_setups", "jac_evals"):
        setattr(report, name, int(stats.get(name, 0)))


def _finish(report, integ, tf, reference, start):
    try:
        _, y, _ = integ.evolve(tf, "normal-tstop")
        if reference is not None:
            report.error = max_relative_error(y, reference)
    except (IntegrationError, SolverFailure) as exc:
        report.ok = False
        report.message = str(exc)
    report.wall_ms = 1000.0 * (time.perf_counter() - start)
    _fill(report, integ.get_stats())
    return report


def run_case(problem, preset, table=None, controller="pid", rtol=1e-4, atol=1e-9,
             predictor="trivial", linearly_implicit=None, band=4, reference=None,
             label=None, max_steps=200000):
    """One adaptive single-rate run of a preset; returns a :class:`RunReport`."""
    preset = preset_name(preset)
    if preset == "mri":
        raise ValueError("use mri_run for the multirate preset")
    fe, fi, _ = problem.split(preset)
    if preset == "erk":
        table = table or "bogacki_shampine_3_2"
        st = ErkStepper(fe, table)
    elif preset == "dirk":
        table = table or "ark436l2sa_dirk_4_3"
        st = _dirk_stepper(problem, fi, table, band, bool(linearly_implicit), predictor)
    else:
        table = table or "ark436l2sa"
        if linearly_implicit is None:
            linearly_implicit = preset == "imex2"
        st = ArkStepper(fe=fe, fi=fi, table=table, structure=("banded", band, band),
                        linearly_implicit=linearly_implicit, predictor=predictor)
    start = time.perf_counter()
    integ = Integrator(st, problem.t0, problem.initial(), tol=Tolerances(rtol, atol),
                       controller=controller, max_steps=max_steps)
    report = RunReport(label or preset, table if isinstance(table, str) else "custom",
                       str(controller), rtol, atol)
    return _finish(report, integ, problem.tf, reference, start)


def make_inner(kind, problem, ff, rtol=1e-4, atol=1e-9):
    tol = Tolerances(rtol, atol)
    band = ("banded", 2, 2)
    if kind == "erk3":
        return wrap_ark_as_inner(ff, problem.n, kind="erk", table="bogacki_shampine_3_2", tol=tol)
    if kind == "dirk3":
        return wrap_ark_as_inner(ff, problem.n, kind="dirk", table="ark324l2sa_dirk_3_2",
                                 tol=tol, structure=band)
    if kind == "custom":
        return SdirkInner(ff, problem.n, table="ark324l2sa_dirk_3_2", tol=tol, structure=band)
    raise ValueError(f"unknown inner {kind!r}; choose from {TABLE2_INNERS}")


def mri_run(problem, inner="erk3", coupling=DEFAULT_COUPLING, H=0.1, inner_rtol=1e-4,
            inner_atol=1e-9, reference=None, label=None):
    """Fixed-``H`` multirate run: advection explicit and diffusion implicit at the
    slow scale, reaction at the fast scale."""
    fe, fi, ff = problem.split("mri")
    inn = make_inner(inner, problem, ff, inner_rtol, inner_atol) if isinstance(inner, str) \
        else inner
    cfg = NewtonConfig(linearly_implicit=True, constant_jacobian=True)
    st = MriStepper(coupling, inn, fe=fe, fi=fi, newton=cfg, structure=("banded", 3, 3))
    start = time.perf_counter()
    integ = Integrator(st, problem.t0, problem.initial(), fixed_step=H)
    name = coupling if isinstance(coupling, str) else getattr(coupling, "name", "custom")
    report = RunReport(label or f"mri/{inner if isinstance(inner, str) else 'custom'}",
                       name, "fixed", float("nan"), float("nan"))
    _finish(report, integ, problem.tf, reference, start)
    report.fast = dict(inn.stats())
    return report


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def write_csv(rows, path, columns=None):
    rows = list(rows)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow(r)


def work_precision_sweep(problem=None, methods=SWEEP_METHODS, controllers=SWEEP_CONTROLLERS,
                         tolerances=SWEEP_TOLERANCES, csv_path=None, reference=None,
                         progress=None):
    """Explicit methods on the advection-reaction problem (``d = 0``).

    ``rhs_evals`` counts calls for accepted and rejected steps alike.
    Failed runs are kept as rows with ``error = nan``.
    """
    if problem is None:
        problem = Brusselator(d=0.0)
    if reference is None:
        reference = get_reference(problem)
    rows = []
    for method in methods:
        for ctrl in controllers:
            for rtol, atol in tolerances:
                rep = run_case(problem, "erk", table=method, controller=ctrl, rtol=rtol,
                               atol=atol, reference=reference)
                row = {
                    "method": method, "controller": ctrl, "rtol": rtol, "atol": atol,
                    "rhs_evals": rep.rhs_evals,
                    "error": rep.error if rep.ok else float("nan"),
                    "steps": rep.steps, "rejections": rep.rejections,
                    "wall_ms": round(rep.wall_ms, 3),
                }
                rows.append(row)
                if progress is not None:
                    progress(row)
    if csv_path is not None:
        write_csv(rows, csv_path, SWEEP_COLUMNS)
    return rows


def table1_run(split, predictor="T", problem=None, reference=None, rtol=1e-4, atol=1e-9):
    """Order-4 DIRK / ImEx run with banded Newton; one statistics row."""
    if problem is None:
        problem = Brusselator()
    if reference is None:
        reference = get_reference(problem)
    split = preset_name(split)
    if split not in TABLE1_SPLITS:
        raise ValueError(f"table1 split must be one of {TABLE1_SPLITS}")
    table = "ark436l2sa_dirk_4_3" if split == "dirk" else "ark436l2sa"
    return run_case(problem, split, table=table, rtol=rtol, atol=atol, predictor=predictor,
                    band=4, reference=reference, label=f"{split}/{predictor}")


def table1(problem=None, splits=TABLE1_SPLITS, predictors=TABLE1_PREDICTORS, reference=None):
    if problem is None:
        problem = Brusselator()
    if reference is None:
        reference = get_reference(problem)
    return [table1_run(s, p, problem, reference) for s in splits for p in predictors]


def table2_run(inner, problem=None, reference=None, H=0.1, coupling=DEFAULT_COUPLING,
               inner_rtol=1e-4, inner_atol=1e-9):
    if problem is None:
        problem = Brusselator()
    if reference is None:
        reference = get_reference(problem)
    return mri_run(problem, inner, coupling, H, inner_rtol, inner_atol, reference)


def table2(problem=None, inners=TABLE2_INNERS, reference=None, **kw):
    if problem is None:
        problem = Brusselator()
    if reference is None:
        reference = get_reference(problem)
    return [table2_run(i, problem, reference, **kw) for i in inners]


SLOW_KEYS = ("steps", "fe_evals", "fi_evals", "nls_iters", "nls_fails", "ls_setups",
             "jac_evals")


def slow_statistics(report):
    return {k: getattr(report, k) for k in SLOW_KEYS}
