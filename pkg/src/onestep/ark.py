"""Additive Runge-Kutta steps for ``M y' = fe(t, y) + fi(t, y)``.

With both partitions present the pair of tables runs in ImEx mode; with
only ``fe`` it is a plain explicit method, with only ``fi`` a DIRK. A
constant mass matrix is handled by factoring it once and working with
``M^{-1} f`` in the stage sums.
"""

import numpy as np

from .base import StepAttempt, Stepper, StepperStats, check_finite
from .core import MassOperator, UsageError, as_vector
from .solvers import (NewtonConfig, PredictorKind, StageSolver, predict,
                      predictor_degree_cap)
from .tableaux import ButcherTable, get


def _resolve_tables(fe, fi, table, explicit, implicit):
    if isinstance(table, str):
        table = get(table)
    if isinstance(table, tuple):
        explicit, implicit = table
    elif isinstance(table, ButcherTable):
        if table.kind == "explicit" and fi is None:
            explicit = table
        elif table.kind == "dirk" and fe is None:
            implicit = table
        elif table.kind == "dirk":
            implicit = table
        else:
            explicit = table
    if isinstance(explicit, str):
        explicit = get(explicit)
    if isinstance(implicit, str):
        implicit = get(implicit)
    if fe is not None and explicit is None:
        raise UsageError("an explicit table is required for fe")
    if fi is not None and implicit is None:
        raise UsageError("an implicit table is required for fi")
    if explicit is not None and explicit.kind != "explicit":
        raise UsageError("explicit partition needs an explicit table")
    if fe is not None and fi is not None and explicit.s != implicit.s:
        raise UsageError("explicit and implicit tables must have the same stage count")
    return (explicit if fe is not None else None), (implicit if fi is not None else None)


class ArkStepper(Stepper):
    def __init__(self, fe=None, fi=None, table=None, explicit=None, implicit=None,
                 mass=None, linearly_implicit=False, nls="newton", newton=None,
                 structure="dense", jac_fn=None, predictor="trivial",
                 user_predictor=None, predictor_cap=5):
        if fe is None and fi is None:
            raise UsageError("at least one of fe, fi is required")
        if table is None and explicit is None and implicit is None:
            table = "ark436l2sa" if fe is not None and fi is not None else (
                "ark436l2sa_dirk_4_3" if fe is None else "bogacki_shampine_3_2")
        self.fe, self.fi = fe, fi
        self.ex, self.im = _resolve_tables(fe, fi, table, explicit, implicit)
        self.mode = "imex" if fe is not None and fi is not None else (
            "erk" if fi is None else "dirk")
        tabs = [t for t in (self.ex, self.im) if t is not None]
        self.s = tabs[0].s
        self.q = min(t.q for t in tabs)
        self.p = None if any(t.p is None for t in tabs) else min(t.p for t in tabs)
        self.adaptive = all(t.adaptive for t in tabs)
        self.implicit = self.im is not None and bool(np.any(np.diag(self.im.A) != 0))
        if mass is not None and not isinstance(mass, MassOperator):
            mass = MassOperator(mass)
        self.mass = mass
        self.cfg = newton or NewtonConfig()
        if linearly_implicit:
            self.cfg.linearly_implicit = True
        self.predictor = PredictorKind.parse(predictor)
        self.user_predictor = user_predictor
        self.predictor_cap = predictor_cap
        self.stats = StepperStats()
        self.solver = None
        if self.implicit:
            self.solver = StageSolver(self._fi, fi, self.stats, self.cfg, nls, structure,
                                      jac_fn, mass)
        s = self.s
        if self.ex is not None:
            bt = self.ex.bt if self.ex.bt is not None else np.zeros(s)
            self._skip_fe = [not (np.any(self.ex.A[:, i] != 0) or self.ex.b[i] != 0 or bt[i] != 0)
                             for i in range(s)]
        self._dirk_sa = (self.mode == "dirk" and self.im.stiffly_accurate)
        self._stage1_cacheable = all(t.c[0] == 0.0 for t in tabs) and (
            self.im is None or self.im.A[0, 0] == 0.0)
        self.reset()

    # -- evaluations ---------------------------------------------------------

    def _msolve(self, v):
        if self.mass is None:
            return v
        self.stats.mass_solves += 1
        return self.mass.solve(v)

    def _fe(self, t, y):
        self.stats.fe_evals += 1
        return check_finite(as_vector(self.fe(t, y)), "fe")

    def _fi(self, t, y):
        self.stats.fi_evals += 1
        return check_finite(as_vector(self.fi(t, y)), "fi")

    def full_rhs(self, t, y):
        out = None
        if self.fe is not None:
            out = self._fe(t, y)
        if self.fi is not None:
            v = self._fi(t, y)
            out = v if out is None else out + v
        return self._msolve(out)

    # -- lifecycle -----------------------------------------------------------

    def reset(self):
        self._cache_id = None
        self._cache = (None, None)
        self._seed = None
        self._last = None

    @property
    def jac(self):
        return None if self.solver is None else self.solver.jac

    def resize(self, n):
        self.reset()
        if self.solver is not None:
            self.solver.clear()

    def jacobian_refresh(self):
        if self.solver is not None:
            self.solver.refresh()

    def accepted(self, t_new, y_new, attempt):
        self._seed = self._last if self._dirk_sa else None

    # -- the step ------------------------------------------------------------

    def attempt(self, t, y, h, ctx):
        s = self.s
        ex, im = self.ex, self.im
        Fe = [None] * s
        Fi = [None] * s
        interp = ctx.interp
        xi_max = 0
        if self.implicit and self.predictor is not PredictorKind.TRIVIAL and interp is not None:
            xi_max = predictor_degree_cap(self.q, self.predictor_cap, interp.degree)

        z = y
        for i in range(s):
            if i == 0 and self._stage1_cacheable:
                if self._cache_id != ctx.start_id:
                    fe1 = fi1 = None
                    if self._seed is not None:
                        fi1 = self._seed
                    else:
                        if self.fe is not None:
                            fe1 = self._msolve(self._fe(t, y))
                        if self.fi is not None:
                            fi1 = self._msolve(self._fi(t, y))
                    if self.fe is not None and fe1 is None:
                        fe1 = self._msolve(self._fe(t, y))
                    self._cache = (fe1, fi1)
                    self._cache_id = ctx.start_id
                    self._seed = None
                Fe[0], Fi[0] = self._cache
                z = y
                continue
            z = y.copy()
            for j in range(i):
                if ex is not None and ex.A[i, j] != 0.0:
                    z += (h * ex.A[i, j]) * Fe[j]
                if im is not None and im.A[i, j] != 0.0:
                    z += (h * im.A[i, j]) * Fi[j]
            if im is not None and im.A[i, i] != 0.0:
                gamma = h * im.A[i, i]
                ti = t + im.c[i] * h
                zp = predict(self.predictor, interp, ti, i, xi_max, t_prev=t,
                             h_prev=ctx.h_prev, user=self.user_predictor, y_prev=y)
                z = self.solver.solve(ti, gamma, z, zp, ctx, h)
            if ex is not None and not self._skip_fe[i]:
                Fe[i] = self._msolve(self._fe(t + ex.c[i] * h, z))
            if im is not None:
                Fi[i] = self._msolve(self._fi(t + im.c[i] * h, z))

        if self._dirk_sa:
            ynew = z.copy()
        else:
            ynew = y.copy()
            for j in range(s):
                if ex is not None and ex.b[j] != 0.0:
                    ynew += (h * ex.b[j]) * Fe[j]
                if im is not None and im.b[j] != 0.0:
                    ynew += (h * im.b[j]) * Fi[j]
        self._last = Fi[s - 1] if self._dirk_sa and im.c[s - 1] == 1.0 else None
        f_new = self._last
        if not self.adaptive:
            return StepAttempt(ynew, f_new=f_new)
        T = np.zeros_like(y)
        for j in range(s):
            if ex is not None and ex.d[j] != 0.0:
                T += (h * ex.d[j]) * Fe[j]
            if im is not None and im.d[j] != 0.0:
                T += (h * im.d[j]) * Fi[j]
        return StepAttempt(ynew, ynew - T, T, f_new=f_new)
