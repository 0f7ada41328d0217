"""Time-stepping driver shared by every stepper.

One :class:`Integrator` owns the current ``(t, y)``, the step-size
controller, the dense-output interpolant and the statistics. Each internal
step refreshes the error weights at the step start, asks the stepper for a
candidate, checks inequality constraints, runs the error test and either
accepts or retries with a smaller step.
"""

import enum
import math
from dataclasses import dataclass, fields
from typing import Callable, Optional

import numpy as np

from .adaptivity import (AdaptivityParams, ControllerKind, ControllerState, Outcome,
                         StepSizeError, apply_heuristics, error_test, initial_step,
                         propose_step)
from .base import RhsFailure, StepContext
from .core import (IllegalWeightError, Tolerances, UsageError, as_vector, error_weights,
                   wrms_norm)
from .interpolation import make_interpolant
from .solvers import JacobianError, SolverFailure

UROUND = np.finfo(np.float64).eps


class Mode(enum.Enum):
    NORMAL = "normal"
    ONE_STEP = "one-step"
    NORMAL_TSTOP = "normal-tstop"
    ONE_STEP_TSTOP = "one-step-tstop"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        for m in cls:
            if m.value == key:
                return m
        raise UsageError(f"unknown mode {value!r}")


class Status(enum.Enum):
    SUCCESS = 0
    TSTOP_RETURN = 1
    ROOT_RETURN = 2


class IntegrationError(RuntimeError):
    """Unrecoverable failure; ``code`` names the cause. State stays at the last accepted step."""

    def __init__(self, code, message):
        super().__init__(f"{code}: {message}")
        self.code = code


@dataclass
class IntegratorStats:
    steps: int = 0
    attempts: int = 0
    err_fails: int = 0
    solve_fails: int = 0
    constraint_fails: int = 0
    rhs_fails: int = 0
    g_evals: int = 0
    init_rhs_evals: int = 0

    def clear(self):
        for f in fields(self):
            setattr(self, f.name, 0)

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


# constraint codes: 1 -> y >= 0, 2 -> y > 0, -1 -> y <= 0, -2 -> y < 0
_CONSTRAINT_NAMES = {">=0": 1, ">0": 2, "<=0": -1, "<0": -2, "none": 0, None: 0}


def _constraint_codes(given, n):
    if given is None:
        return None
    if isinstance(given, str) or given in (0, 1, 2, -1, -2):
        given = [given] * n
    codes = np.array([_CONSTRAINT_NAMES.get(c, c) if not isinstance(c, (int, np.integer))
                      else c for c in given], dtype=np.int64)
    if codes.shape != (n,) or not np.all(np.isin(codes, (-2, -1, 0, 1, 2))):
        raise UsageError("constraints must be one code per component from {-2,-1,0,1,2}")
    return codes if np.any(codes != 0) else None


def _violations(codes, y):
    return (((codes == 1) & (y < 0)) | ((codes == 2) & (y <= 0))
            | ((codes == -1) & (y > 0)) | ((codes == -2) & (y >= 0)))


class Integrator:
    """Evolve ``y(t)`` with a stepper.

    ``fixed_step`` disables adaptivity. ``roots=(g, m)`` enables event
    detection on ``g(t, y) -> array(m)``; ``constraints`` is one code per
    component (or a single code for all).
    """

    def __init__(self, stepper, t0, y0, tol=None, controller="pid", params=None,
                 fixed_step=None, interpolant="hermite", interp_degree=3, h0=None,
                 roots=None, root_tol=None, constraints=None, constraint_safety=0.9,
                 max_steps=100000, max_constraint_fails=10, transcript=False):
        self.stepper = stepper
        self.tol = tol if tol is not None else Tolerances()
        self.controller = ControllerKind.parse(controller)
        self.params = params if params is not None else AdaptivityParams()
        self.fixed_step = None if fixed_step is None else abs(float(fixed_step))
        if self.fixed_step is None and not getattr(stepper, "adaptive", False):
            raise UsageError("stepper has no error estimate; supply fixed_step")
        if self.fixed_step == 0.0:
            raise UsageError("fixed_step must be nonzero")
        self.interp_family = interpolant
        self.interp_degree = interp_degree
        self.h0_user = h0
        self.root_fn = None
        self.nroots = 0
        if roots is not None:
            self.root_fn, self.nroots = roots
        self.root_tol = root_tol
        self.constraint_request = constraints
        self.constraint_safety = constraint_safety
        self.max_steps = max_steps
        self.max_constraint_fails = max_constraint_fails
        self.transcript = [] if transcript else None
        self.stats = IntegratorStats()
        self.cstate = ControllerState()
        self._init_state(t0, y0)

    # -- setup / lifecycle ---------------------------------------------------

    def _init_state(self, t0, y0):
        y0 = as_vector(y0).copy()
        self.n = y0.shape[0]
        self.tol.resized(self.n)
        self.t = float(t0)
        self.y = y0
        self.constraints = _constraint_codes(self.constraint_request, self.n)
        if self.constraints is not None and np.any(_violations(self.constraints, y0)):
            raise UsageError("initial state violates the constraints")
        self.interp = make_interpolant(self.interp_family, self.interp_degree,
                                       rhs=self.stepper.full_rhs)
        self.interp.update(self.t, self.y)
        self.h = None
        self.h_prev = None
        self.direction = 0.0
        self.start_id = 0
        self._pending = []
        self._g_prev = None
        self._g_active = None
        self._t_prev_step = None
        self.last_roots = []

    def reinit(self, t0, y0):
        """Fresh start: history and every statistic are cleared."""
        y0 = as_vector(y0)
        if y0.shape[0] != self.n:
            raise UsageError("reinit requires the same problem size; use resize")
        self.stats.clear()
        self.stepper.stats.clear()
        jac = getattr(self.stepper, "jac", None)
        if jac is not None:
            jac.clear()
            jac.nsetups = jac.njevals = jac.nfi_jac = 0
        if hasattr(self.stepper, "clear_stats"):
            self.stepper.clear_stats()
        self.cstate.clear()
        self.stepper.reset()
        if self.transcript is not None:
            self.transcript.clear()
        self._init_state(t0, y0)

    def reset(self, t0, y0, keep_step=False):
        """New initial condition; history is cleared but statistics are kept.

        ``keep_step=True`` carries the controller's error history and the
        last step size over to the new start, which suits repeated short
        solves of one problem.
        """
        y0 = as_vector(y0)
        if y0.shape[0] != self.n:
            raise UsageError("reset requires the same problem size; use resize")
        h, h_prev, direction = self.h, self.h_prev, self.direction
        if not keep_step:
            self.cstate.clear()
        self.stepper.reset()
        jac = getattr(self.stepper, "jac", None)
        if jac is not None:
            jac.mark_stale()
        self._init_state(t0, y0)
        if keep_step:
            self.h, self.h_prev, self.direction = h, h_prev, direction

    def resize(self, y_new, t=None, tol=None):
        """Change the problem size, keeping step size and controller scalars."""
        y_new = as_vector(y_new).copy()
        h, h_prev, direction = self.h, self.h_prev, self.direction
        if tol is not None:
            self.tol = tol
        self.stepper.resize(y_new.shape[0])
        self._init_state(self.t if t is None else t, y_new)
        self.h, self.h_prev, self.direction = h, h_prev, direction

    # -- helpers -------------------------------------------------------------

    def _log(self, *entry):
        if self.transcript is not None:
            self.transcript.append(entry)

    def _order(self):
        st = self.stepper
        if self.params.order_basis == "q" or st.p is None:
            return st.q
        return st.p

    def get_stats(self):
        out = self.stats.as_dict()
        out.update(self.stepper.stats.as_dict())
        out["interp_evals"] = self.interp.nevals
        return out

    def _weights(self, y):
        try:
            return error_weights(y, self.tol)
        except IllegalWeightError as exc:
            raise IntegrationError("illegal-weight", str(exc)) from exc

    def _g(self, t, y):
        self.stats.g_evals += 1
        g = as_vector(self.root_fn(t, y)).copy()
        if g.shape[0] != self.nroots or not np.all(np.isfinite(g)):
            raise IntegrationError("root-function", "g returned bad values")
        return g

    def _first_h(self, tout):
        if self.fixed_step is not None:
            return math.copysign(self.fixed_step, self.direction)
        if self.h0_user is not None:
            return math.copysign(abs(self.h0_user), self.direction)
        w = self._weights(self.y)
        f0 = self.stepper.full_rhs(self.t, self.y)
        self.stats.init_rhs_evals += 1
        self.interp.set_latest_rhs(f0)
        return initial_step(self.y, f0, w, self.t, tout, self.params)

    # -- one internal step ---------------------------------------------------

    def _step(self, tstop=None):
        """Advance one accepted step; returns True if it landed on ``tstop``."""
        t, y = self.t, self.y
        dirn = self.direction
        h = self.h
        hit = False
        if tstop is not None:
            guard = 100.0 * UROUND * max(abs(t), abs(tstop))
            if (t + h - tstop) * dirn > -guard:
                h = tstop - t
                hit = True
        w = self._weights(y)
        nef = ncf = ncon = 0
        failed = False
        order = self._order()
        while True:
            self.stats.attempts += 1
            ctx = StepContext(w=w, step_index=self.stats.steps, interp=self.interp,
                              h_prev=self.h_prev, start_id=self.start_id,
                              transcript=self.transcript)
            self._log("attempt", t, h)
            try:
                att = self.stepper.attempt(t, y, h, ctx)
            except (SolverFailure, JacobianError, RhsFailure) as exc:
                if isinstance(exc, RhsFailure):
                    self.stats.rhs_fails += 1
                else:
                    self.stats.solve_fails += 1
                ncf += 1
                self.cstate.set_current(0.0, abs(h))
                try:
                    hn = apply_heuristics(0.0, self.cstate, self.params, "solver-fail",
                                          nfails=ncf, direction=dirn)
                except StepSizeError as exc2:
                    raise IntegrationError("solver-fails", str(exc2)) from exc
                self._log("solve-fail", t, h, hn, getattr(exc, "cause", str(exc)))
                h, hit, failed = hn, False, True
                continue

            if self.constraints is not None:
                bad = _violations(self.constraints, att.y)
                if np.any(bad):
                    ncon += 1
                    self.stats.constraint_fails += 1
                    if ncon > self.max_constraint_fails:
                        raise IntegrationError("constraint-fails",
                                               f"{ncon} consecutive constraint failures")
                    yo, yn = y[bad], att.y[bad]
                    theta = yo / (yo - yn)
                    eta = max(self.constraint_safety * float(np.min(theta)), 0.1)
                    hn = eta * h
                    if abs(hn) < self.params.hmin:
                        raise IntegrationError("step-size", "constraint reduction below hmin")
                    self.stepper.jacobian_refresh()
                    self._log("constraint", t, h, hn, float(np.min(theta)), eta)
                    h, hit, failed = hn, False, True
                    continue

            tnorm = None
            if self.fixed_step is None:
                tnorm = wrms_norm(att.T, w)
                outcome = error_test(tnorm)
                eps = self.params.bias * tnorm if outcome is not Outcome.INVALID else math.inf
                self.cstate.set_current(eps if math.isfinite(eps) else 1e300, abs(h))
                if outcome is not Outcome.ACCEPT:
                    nef += 1
                    self.stats.err_fails += 1
                    invalid = outcome is Outcome.INVALID
                    raw = 0.0 if invalid else propose_step(self.controller, self.cstate,
                                                           self.params, order)
                    try:
                        hn = apply_heuristics(raw, self.cstate, self.params, "error-fail",
                                              nfails=nef, invalid=invalid, direction=dirn)
                    except StepSizeError as exc:
                        raise IntegrationError("error-fails", str(exc)) from exc
                    self._log("reject", t, h, tnorm, hn)
                    h, hit, failed = hn, False, True
                    continue
                raw = propose_step(self.controller, self.cstate, self.params, order)
                try:
                    h_next = apply_heuristics(raw, self.cstate, self.params, "accept",
                                              failed_this_step=failed, direction=dirn)
                except StepSizeError as exc:
                    raise IntegrationError("step-size", str(exc)) from exc
            else:
                h_next = math.copysign(self.fixed_step, dirn)
            break

        t_new = tstop if hit else t + h
        self._t_prev_step = t
        self.t, self.y = t_new, att.y
        self.interp.update(t_new, att.y, att.f_new)
        self.stepper.accepted(t_new, att.y, att)
        if self.fixed_step is None:
            self.cstate.accept()
        self.stats.steps += 1
        self.start_id += 1
        self.h_prev = h
        self.h = h_next
        self._log("accept", t, h, tnorm)
        return hit

    # -- rootfinding ---------------------------------------------------------

    def _root_tol(self, a, b):
        if self.root_tol is not None:
            return self.root_tol
        return 100.0 * UROUND * max(abs(a), abs(b), 1.0)

    def _g_at(self, t):
        return self._g(t, self.interp.eval(t))

    def _illinois(self, k, a, b, ga, gb):
        tol = self._root_tol(a, b)
        side = 0
        for _ in range(200):
            if abs(b - a) <= tol:
                break
            m = b - gb * (b - a) / (gb - ga)
            lo, hi = min(a, b), max(a, b)
            if not lo < m < hi:
                m = 0.5 * (a + b)
            gm = self._g_at(m)[k]
            if gm == 0.0:
                return m
            if gm * gb < 0:
                a, ga = b, gb
                b, gb = m, gm
                side = 0
            else:
                b, gb = m, gm
                if side == 1:
                    ga *= 0.5
                side = 1
        return b

    def _find_roots(self):
        t0, t1 = self._t_prev_step, self.t
        g1 = self._g(t1, self.y)
        g0 = self._g_prev
        tm = 0.5 * (t0 + t1)
        gm = self._g_at(tm)
        roots = []
        for k in range(self.nroots):
            if not self._g_active[k]:
                continue
            segs = ((t0, tm, g0[k], gm[k]), (tm, t1, gm[k], g1[k]))
            for a, b, ga, gb in segs:
                if ga == 0.0:
                    continue
                if gb == 0.0:
                    roots.append((b, k, -np.sign(ga)))
                elif ga * gb < 0:
                    roots.append((self._illinois(k, a, b, ga, gb), k, np.sign(gb)))
        roots.sort(key=lambda r: r[0] * self.direction)
        for k in range(self.nroots):
            if g1[k] != 0.0:
                self._g_active[k] = True
        self._g_prev = g1
        # group roots that coincide to within tolerance
        grouped = []
        for tr, k, sgn in roots:
            if grouped and abs(tr - grouped[-1][0]) <= self._root_tol(tr, tr):
                grouped[-1][1].append((k, int(sgn)))
            else:
                grouped.append((tr, [(k, int(sgn))]))
        return grouped

    # -- public driver -------------------------------------------------------

    def evolve(self, tout, mode="normal"):
        """Advance toward ``tout``; returns ``(t, y, status)``."""
        mode = Mode.parse(mode)
        tout = float(tout)
        if self.direction == 0.0:
            if tout == self.t:
                raise UsageError("tout equals the initial time")
            self.direction = 1.0 if tout > self.t else -1.0
        if self.root_fn is not None and self._g_prev is None:
            self._g_prev = self._g(self.t, self.y)
            self._g_active = self._g_prev != 0.0
        dirn = self.direction
        if self.h is None:
            self.h = self._first_h(tout)

        if self._pending:
            tr = self._pending[0][0]
            if (mode is Mode.NORMAL and (tr - tout) * dirn > 0
                    and (self.t - tout) * dirn >= 0):
                return tout, self.interp.eval(tout), Status.SUCCESS
            return self._pop_root()

        tstop = tout if mode in (Mode.NORMAL_TSTOP, Mode.ONE_STEP_TSTOP) else None
        # already past tout with an existing step covering it
        if mode is Mode.NORMAL and self._t_prev_step is not None:
            if (self.t - tout) * dirn >= 0 and (tout - self._t_prev_step) * dirn >= 0:
                return tout, self.interp.eval(tout), Status.SUCCESS
        if tstop is not None and (tstop - self.t) * dirn <= 0:
            if tstop == self.t:
                return self.t, self.y.copy(), Status.TSTOP_RETURN
            raise UsageError("tstop lies behind the current time")

        nsteps = 0
        while True:
            hit = self._step(tstop)
            nsteps += 1
            if self.root_fn is not None:
                found = self._find_roots()
                if found:
                    self._pending = found
                    if (found[0][0] - tout) * dirn <= 0 or mode in (Mode.ONE_STEP,
                                                                     Mode.ONE_STEP_TSTOP):
                        return self._pop_root()
            if hit:
                return self.t, self.y.copy(), Status.TSTOP_RETURN
            passed = (self.t - tout) * dirn >= 0
            if mode is Mode.ONE_STEP or mode is Mode.ONE_STEP_TSTOP:
                if passed and mode is Mode.ONE_STEP:
                    return tout, self.interp.eval(tout), Status.SUCCESS
                return self.t, self.y.copy(), Status.SUCCESS
            if passed:
                return tout, self.interp.eval(tout), Status.SUCCESS
            if nsteps >= self.max_steps:
                raise IntegrationError("max-steps", f"{nsteps} steps without reaching tout")

    def _pop_root(self):
        tr, comps = self._pending.pop(0)
        self.last_roots = comps
        return tr, self.interp.eval(tr), Status.ROOT_RETURN

    def dense(self, t, d=0):
        """Interpolated solution (or derivative) inside the last step."""
        return self.interp.eval(t, d)
