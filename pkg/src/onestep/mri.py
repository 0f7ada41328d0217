"""Multirate infinitesimal steps for ``y' = fe + fi + ff``.

The slow partitions ``fe``/``fi`` are advanced with a fixed step ``H``;
each stage with a positive abscissa increment hands a forced fast problem
``v' = ff(t, v) + r(t)`` to an inner integrator. Stages with a zero
increment are ordinary ImEx additive RK stages.
"""

import math

import numpy as np

from .ark import ArkStepper
from .base import StepAttempt, StepContext, Stepper, StepperStats, check_finite
from .core import Tolerances, UsageError, as_vector, error_weights, wrms_norm
from .solvers import (JacobianSlot, NewtonConfig, SolverFailure, StageSolver,
                      StageSystem, newton_solve)
from .tableaux import ButcherTable, MriCoupling, get


class ForcingPolynomial:
    """``r(t) = sum_k R_k theta^k`` with ``theta = (t - t0) / scale``."""

    def __init__(self, coeffs, t0, scale):
        self.coeffs = coeffs
        self.t0 = float(t0)
        self.scale = float(scale)

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __call__(self, t):
        theta = (t - self.t0) / self.scale
        out = self.coeffs[-1].copy()
        for R in reversed(self.coeffs[:-1]):
            out *= theta
            out += R
        return out


def build_forcing(coupling: MriCoupling, i, FE, FI, t_start, H, n=None):
    """Forcing for 1-based stage ``i`` from the stored slow RHS values."""
    dc = coupling.c[i - 1] - coupling.c[i - 2]
    if dc <= 0:
        raise UsageError(f"stage {i} has no fast interval; use an additive RK stage")
    if n is None:
        vecs = [v for v in list(FE) + list(FI) if v is not None]
        if not vecs:
            raise UsageError("cannot infer the vector length")
        n = vecs[0].shape[0]
    coeffs = []
    for k in range(coupling.K + 1):
        R = np.zeros(n)
        for j in range(i - 1):
            wk = coupling.W[k, i - 1, j]
            gk = coupling.G[k, i - 1, j]
            if wk != 0.0 and FE[j] is not None:
                R += wk * FE[j]
            if gk != 0.0 and FI[j] is not None:
                R += gk * FI[j]
        coeffs.append(R / dc)
    while len(coeffs) > 1 and not np.any(coeffs[-1]):
        coeffs.pop()
    return ForcingPolynomial(coeffs, t_start, dc * H)


# ---------------------------------------------------------------------------
# inner integrators
# ---------------------------------------------------------------------------

class InnerStepper:
    """Contract for fast integrators: ``reset``, ``evolve`` and ``full_rhs``."""

    def reset(self, t, v):  # pragma: no cover - interface
        raise NotImplementedError

    def evolve(self, t_end, forcing=None):  # pragma: no cover - interface
        raise NotImplementedError

    def full_rhs(self, t, v):  # pragma: no cover - interface
        raise NotImplementedError

    def stats(self):  # pragma: no cover - interface
        return {}


class _Forced:
    """``ff(t, v) + r(t)`` with the fast-RHS calls counted."""

    def __init__(self, ff):
        self.ff = ff
        self.forcing = None
        self.calls = 0

    def __call__(self, t, v):
        self.calls += 1
        out = as_vector(self.ff(t, v))
        if self.forcing is not None:
            out = out + self.forcing(t)
        return out


class ArkInner(InnerStepper):
    """Adaptive ARK/ERK/DIRK integrator used as the fast solver.

    ``kind="erk"`` puts ``ff`` (and the forcing) in the explicit partition,
    ``kind="dirk"`` in the implicit one.
    """

    def __init__(self, ff, n, kind="erk", table=None, tol=None, controller="pid",
                 structure="dense", newton=None, keep_step=True, **integrator_kw):
        from .integrator import Integrator

        self.kind = kind
        self.forced = _Forced(ff)
        self.ff = ff
        if kind == "erk":
            st = ArkStepper(fe=self.forced, table=table or "bogacki_shampine_3_2")
        elif kind == "dirk":
            st = ArkStepper(fi=self.forced, table=table or "ark324l2sa_dirk_3_2",
                            structure=structure, newton=newton)
        else:
            raise UsageError("inner kind must be 'erk' or 'dirk'")
        self.stepper = st
        self.keep_step = keep_step
        self.full_rhs_calls = 0
        self.integrator = Integrator(st, 0.0, np.zeros(n), tol=tol or Tolerances(),
                                     controller=controller, **integrator_kw)

    def reset(self, t, v):
        self.integrator.reset(t, v, keep_step=self.keep_step)

    def evolve(self, t_end, forcing=None):
        from .integrator import IntegrationError

        self.forced.forcing = forcing
        try:
            _, v, _ = self.integrator.evolve(t_end, "normal-tstop")
        except IntegrationError as exc:
            raise SolverFailure(f"inner integration failed ({exc.code})") from exc
        finally:
            self.forced.forcing = None
        return v

    def full_rhs(self, t, v):
        self.full_rhs_calls += 1
        return as_vector(self.ff(t, v))

    def stats(self):
        s = self.integrator.get_stats()
        return {
            "steps": s["steps"],
            "failed_steps": s["err_fails"] + s["solve_fails"] + s["rhs_fails"],
            "ff_evals": self.forced.calls - s["fi_evals_jac"] + self.full_rhs_calls,
            "ff_evals_jac": s["fi_evals_jac"],
            "nls_iters": s["nls_iters"],
            "nls_fails": s["nls_fails"],
            "ls_setups": s["ls_setups"],
            "jac_evals": s["jac_evals"],
        }


def wrap_ark_as_inner(ff, n, kind="erk", **kw):
    """Attach an adaptive additive RK integrator as the fast solver."""
    return ArkInner(ff, n, kind=kind, **kw)


class SdirkInner(InnerStepper):
    """Standalone adaptive DIRK loop, independent of :class:`Integrator`.

    Uses an embedded DIRK table, an I-controller, a modified Newton
    iteration with a Jacobian refreshed on every step and the forcing added
    to the implicit right-hand side.
    """

    def __init__(self, ff, n, table="ark324l2sa_dirk_3_2", tol=None, structure="dense",
                 safety=0.9, hmax=math.inf):
        tab = get(table) if isinstance(table, str) else table
        if not isinstance(tab, ButcherTable) or tab.kind != "dirk" or not tab.adaptive:
            raise UsageError("SdirkInner needs an embedded DIRK table")
        self.tab = tab
        self.ff = ff
        self.n = n
        self.tol = tol or Tolerances()
        self.structure = structure
        self.safety = safety
        self.hmax = hmax
        self.forced = _Forced(ff)
        self._stats = StepperStats()
        self.solver = StageSolver(self._fcount, self.forced, self._stats,
                                  NewtonConfig(), "newton", structure)
        self.nsteps = 0
        self.nfail = 0
        self.full_rhs_calls = 0
        self.t = 0.0
        self.v = np.zeros(n)
        self.h = None

    def _fcount(self, t, v):
        self._stats.fi_evals += 1
        return check_finite(self.forced(t, v), "ff")

    def reset(self, t, v):
        self.t = float(t)
        self.v = as_vector(v).copy()
        self.h = None
        self.solver.refresh()

    def _step(self, h, w, idx):
        tab = self.tab
        t, v = self.t, self.v
        K = []
        z = v
        for i in range(tab.s):
            a = v.copy()
            for j in range(i):
                if tab.A[i, j] != 0.0:
                    a += (h * tab.A[i, j]) * K[j]
            if tab.A[i, i] != 0.0:
                ctx = StepContext(w=w, step_index=idx)
                z = self.solver.solve(t + tab.c[i] * h, h * tab.A[i, i], a, z, ctx, h)
            else:
                z = a
            K.append(self._fcount(t + tab.c[i] * h, z))
        ynew = v.copy()
        err = np.zeros_like(v)
        for j in range(tab.s):
            ynew += (h * tab.b[j]) * K[j]
            err += (h * tab.d[j]) * K[j]
        return ynew, err

    def evolve(self, t_end, forcing=None):
        self.forced.forcing = forcing
        try:
            span = t_end - self.t
            if span == 0.0:
                return self.v.copy()
            direction = math.copysign(1.0, span)
            h = self.h or min(abs(span), self.hmax) * direction
            order = self.tab.p + 1
            nfail = 0
            while (t_end - self.t) * direction > 0:
                last = (self.t + h - t_end) * direction >= -1e-14 * max(1.0, abs(t_end))
                if last:
                    h = t_end - self.t
                w = error_weights(self.v, self.tol)
                try:
                    ynew, err = self._step(h, w, self.nsteps)
                    enorm = wrms_norm(err, w)
                except SolverFailure:
                    enorm = math.inf
                if not enorm <= 1.0:
                    self.nfail += 1
                    nfail += 1
                    if nfail > 20:
                        raise SolverFailure("inner DIRK step size underflow")
                    self.solver.refresh()
                    h *= 0.25 if not math.isfinite(enorm) else max(
                        0.1, self.safety * enorm ** (-1.0 / order))
                    continue
                nfail = 0
                self.t = t_end if last else self.t + h
                self.v = ynew
                self.nsteps += 1
                eta = min(5.0, self.safety * max(enorm, 1e-10) ** (-1.0 / order))
                h = math.copysign(min(abs(h) * eta, self.hmax), direction)
            self.h = h
            return self.v.copy()
        finally:
            self.forced.forcing = None

    def full_rhs(self, t, v):
        self.full_rhs_calls += 1
        return as_vector(self.ff(t, v))

    def stats(self):
        s = self._stats
        return {
            "steps": self.nsteps,
            "failed_steps": self.nfail,
            "ff_evals": s.fi_evals + self.full_rhs_calls,
            "ff_evals_jac": s.fi_evals_jac,
            "nls_iters": s.nls_iters,
            "nls_fails": s.nls_fails,
            "ls_setups": s.ls_setups,
            "jac_evals": s.jac_evals,
        }


class BrokenResetInner(InnerStepper):
    """Wraps an inner solver but ignores every reset after the first one."""

    def __init__(self, inner):
        self.inner = inner
        self._started = False

    def reset(self, t, v):
        if not self._started:
            self.inner.reset(t, v)
            self._started = True

    def evolve(self, t_end, forcing=None):
        return self.inner.evolve(t_end, forcing)

    def full_rhs(self, t, v):
        return self.inner.full_rhs(t, v)

    def stats(self):
        return self.inner.stats()


class ExactLinearInner(InnerStepper):
    """Fast problem ``v' = L v + r(t)`` with ``L`` diagonal, integrated to roundoff.

    Uses high-order Gauss quadrature of the variation-of-constants formula;
    meant for tests that need an essentially exact fast solve.
    """

    def __init__(self, lam, nodes=12):
        self.lam = np.asarray(lam, dtype=np.float64)
        self.x, self.wq = np.polynomial.legendre.leggauss(nodes)
        self.t = 0.0
        self.v = None
        self.nevolve = 0

    def reset(self, t, v):
        self.t = float(t)
        self.v = as_vector(v).copy()

    def evolve(self, t_end, forcing=None):
        self.nevolve += 1
        dt = t_end - self.t
        out = np.exp(self.lam * dt) * self.v
        if forcing is not None:
            for xk, wk in zip(self.x, self.wq):
                s = self.t + 0.5 * dt * (xk + 1.0)
                out += 0.5 * dt * wk * np.exp(self.lam * (t_end - s)) * forcing(s)
        self.t, self.v = t_end, out
        return out.copy()

    def full_rhs(self, t, v):
        return self.lam * v

    def stats(self):
        return {"evolves": self.nevolve}


# ---------------------------------------------------------------------------
# the slow stepper
# ---------------------------------------------------------------------------

class MriStepper(Stepper):
    """Fixed-step MRI method; no embedded error estimate."""

    adaptive = False

    def __init__(self, coupling, inner, fe=None, fi=None, newton=None, structure="dense",
                 jac_fn=None, linearly_implicit=False, n=None):
        if isinstance(coupling, str):
            coupling = get(coupling)
        if not isinstance(coupling, MriCoupling):
            raise UsageError("MriStepper needs an MRI coupling")
        self.coupling = coupling
        self.inner = inner
        self.fe, self.fi = fe, fi
        self.q = coupling.q
        self.p = None
        self.cfg = newton or NewtonConfig()
        if linearly_implicit:
            self.cfg.linearly_implicit = True
        self.stats = StepperStats()
        s = coupling.s
        AI = np.array([coupling.ark_rows(i)[1] for i in range(s)])
        self.implicit = bool(np.any(np.diag(AI) != 0))
        if self.implicit and fi is None:
            raise UsageError("coupling has implicit stages but no fi was given")
        self.solver = None
        if self.implicit:
            self.solver = StageSolver(self._fi, fi, self.stats, self.cfg, "newton",
                                      structure, jac_fn)
        # which stored stage values are ever read
        dc = np.diff(coupling.c)
        self._need_fe = [False] * s
        self._need_fi = [False] * s
        for i in range(1, s):
            AE_i, AI_i = coupling.ark_rows(i)
            for j in range(i):
                if fe is not None and np.any(coupling.W[:, i, j] != 0):
                    self._need_fe[j] = True
                if fi is not None and np.any(coupling.G[:, i, j] != 0):
                    self._need_fi[j] = True
        self._dc = dc

    @property
    def jac(self):
        return None if self.solver is None else self.solver.jac

    def _fe(self, t, y):
        self.stats.fe_evals += 1
        return check_finite(as_vector(self.fe(t, y)), "fe")

    def _fi(self, t, y):
        self.stats.fi_evals += 1
        return check_finite(as_vector(self.fi(t, y)), "fi")

    def full_rhs(self, t, y):
        out = self.inner.full_rhs(t, y)
        if self.fe is not None:
            out = out + self._fe(t, y)
        if self.fi is not None:
            out = out + self._fi(t, y)
        return out

    def jacobian_refresh(self):
        if self.solver is not None:
            self.solver.refresh()

    def resize(self, n):
        if self.solver is not None:
            self.solver.clear()

    def fast_stats(self):
        return self.inner.stats()

    def attempt(self, t, y, H, ctx):
        cp = self.coupling
        s = cp.s
        n = y.shape[0]
        FE = [None] * s
        FI = [None] * s
        z = y
        if self._need_fe[0]:
            FE[0] = self._fe(t, z)
        if self._need_fi[0]:
            FI[0] = self._fi(t, z)
        for i in range(1, s):
            t_prev = t + cp.c[i - 1] * H
            ti = t + cp.c[i] * H
            if self._dc[i - 1] > 0:
                forcing = build_forcing(cp, i + 1, FE, FI, t_prev, H, n)
                if not any(np.any(R) for R in forcing.coeffs):
                    forcing = None
                self.inner.reset(t_prev, z)
                z = self.inner.evolve(ti, forcing)
                check_finite(z, "inner solver")
            else:
                AE, AI = cp.ark_rows(i)
                a = z.copy()
                for j in range(i):
                    if AE[j] != 0.0 and FE[j] is not None:
                        a += (H * AE[j]) * FE[j]
                    if AI[j] != 0.0 and FI[j] is not None:
                        a += (H * AI[j]) * FI[j]
                if AI[i] != 0.0:
                    z = self.solver.solve(ti, H * AI[i], a, z, ctx, H)
                else:
                    z = a
            if self._need_fe[i]:
                FE[i] = self._fe(ti, z)
            if self._need_fi[i]:
                FI[i] = self._fi(ti, z)
        return StepAttempt(z.copy())
