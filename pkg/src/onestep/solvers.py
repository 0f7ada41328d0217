"""Implicit stage solves ``M (z - a) - gamma * fi(t, z) = 0``.

The unknown is split as ``z = z_pred + z_corr``; the predictor comes from
the dense-output interpolant and the nonlinear iteration works on the
correction. Newton iterations reuse a factored ``M - gamma_tilde * J``
for as long as the lagging policy allows.
"""

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from . import _kernels
from .core import (BandedMatrix, DenseMatrix, SingularMatrixError, UsageError,
                   as_vector, lu_factor, wrms_norm)

UROUND = np.finfo(np.float64).eps
SRUR = math.sqrt(UROUND)


class SolverFailure(ArithmeticError):
    """Recoverable failure of a stage solve; ``cause`` names the reason."""

    def __init__(self, cause, iters=0, history=None):
        super().__init__(f"stage solve failed: {cause}")
        self.cause = cause
        self.iters = iters
        self.history = history or []


# ---------------------------------------------------------------------------
# predictors
# ---------------------------------------------------------------------------

class PredictorKind(enum.Enum):
    TRIVIAL = "trivial"
    MAX_ORDER = "max-order"
    VARIABLE_ORDER = "variable-order"
    CUTOFF = "cutoff"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        short = {"t": "trivial", "m": "max-order", "v": "variable-order", "c": "cutoff",
                 "max": "max-order", "variable": "variable-order"}
        key = short.get(key, key)
        for kind in cls:
            if kind.value == key:
                return kind
        raise UsageError(f"unknown predictor {value!r}")


def predictor_degree_cap(q, user_cap, interp_degree):
    return max(0, min(q - 1, user_cap, 5, interp_degree))


def predictor_degree(kind, t_stage, i, xi_max, t_prev=None, h_prev=None):
    """Interpolant degree used for stage ``i`` by the built-in predictors."""
    kind = PredictorKind.parse(kind)
    if kind is PredictorKind.TRIVIAL or xi_max <= 0:
        return 0
    if kind is PredictorKind.MAX_ORDER:
        return xi_max
    if kind is PredictorKind.VARIABLE_ORDER:
        return max(xi_max - i, 1)
    if h_prev is None or h_prev == 0 or t_prev is None:
        return 1
    tau = (t_stage - t_prev) / h_prev
    return xi_max if tau < 0.5 else 1


def predict(kind, interp, t_stage, i, xi_max, t_prev=None, h_prev=None, user=None,
            y_prev=None):
    """Initial guess for stage ``i`` at ``t_stage``.

    ``y_prev`` overrides the interpolant's latest value as the trivial
    predictor. ``user(t, z, i)`` refines the built-in guess.
    """
    if interp is not None and interp.npoints >= 1:
        base = interp.y_latest if y_prev is None else y_prev
    elif y_prev is not None:
        base = y_prev
    else:
        raise UsageError("no data to predict from")
    deg = predictor_degree(kind, t_stage, i, xi_max, t_prev, h_prev)
    if deg == 0 or interp is None or interp.npoints < 2:
        z = np.array(base, dtype=np.float64)
    else:
        z = interp.eval(t_stage, 0, degree=deg)
    if user is not None:
        z = as_vector(user(t_stage, z, i)).copy()
    return z


# ---------------------------------------------------------------------------
# stage systems
# ---------------------------------------------------------------------------

@dataclass
class StageSystem:
    t: float
    gamma: float
    a: np.ndarray
    fi: Callable
    mass: Optional[object] = None

    def residual(self, z, fz=None):
        """``M (z - a) - gamma * fi(t, z)``."""
        fz = self.fi(self.t, z) if fz is None else fz
        d = z - self.a
        if self.mass is not None:
            d = self.mass.matvec(d)
        return d - self.gamma * fz


@dataclass
class NewtonConfig:
    maxiters: int = 3
    coef: float = 0.1
    crdown: float = 0.3
    rdiv: float = 2.3
    msbp: int = 20
    dgmax: float = 0.2
    msbj: int = 51
    fp_maxiters: int = 10
    linearly_implicit: bool = False
    # linear fi with a time-independent Jacobian: refactor only when gamma drifts
    constant_jacobian: bool = False

    def __post_init__(self):
        for name in ("maxiters", "coef", "crdown", "rdiv", "msbp", "dgmax", "msbj",
                     "fp_maxiters"):
            if not getattr(self, name) > 0:
                raise UsageError(f"{name} must be positive")


@dataclass
class SolveResult:
    z: np.ndarray
    iters: int
    fevals: int
    history: List[float] = field(default_factory=list)


# ---------------------------------------------------------------------------
# finite-difference Jacobians
# ---------------------------------------------------------------------------

class JacobianError(ArithmeticError):
    pass


def _min_inc(fz, w, h, n):
    fnorm = wrms_norm(fz, w)
    hh = 1.0 if h is None else abs(h)
    return 1000.0 * hh * UROUND * n * fnorm if fnorm != 0.0 else 1.0


def fd_jacobian(fi, t, z, w, structure="dense", fz=None, h=None):
    """Forward-difference Jacobian of ``fi`` at ``(t, z)``.

    ``structure`` is ``"dense"`` or ``("banded", ml, mu)``. Returns the
    matrix and the number of ``fi`` calls spent (including the base point
    when ``fz`` is not supplied).
    """
    z = as_vector(z)
    n = z.shape[0]
    extra = 0
    if fz is None:
        fz = as_vector(fi(t, z))
        extra = 1
    min_inc = _min_inc(fz, w, h, n)
    inc = np.maximum(SRUR * np.abs(z), min_inc / w)
    if structure == "dense":
        J = np.empty((n, n))
        zp = z.copy()
        for j in range(n):
            zj = zp[j]
            zp[j] = zj + inc[j]
            fp = as_vector(fi(t, zp))
            zp[j] = zj
            col = (fp - fz) / inc[j]
            if not np.all(np.isfinite(col)):
                raise JacobianError(f"non-finite difference in column {j}")
            J[:, j] = col
        return DenseMatrix(J), n + extra
    _, ml, mu = structure
    width = min(ml + mu + 1, n)
    jac = BandedMatrix(n, ml, mu)
    for g in range(width):
        cols = np.arange(g, n, width, dtype=np.int64)
        zp = z.copy()
        zp[cols] += inc[cols]
        df = as_vector(fi(t, zp)) - fz
        if not np.all(np.isfinite(df)):
            raise JacobianError(f"non-finite difference in column group {g}")
        _kernels.band_scatter(jac.data, df, inc, cols, n, ml, mu)
    return jac, width + extra


class JacobianSlot:
    """Holds ``J``, the factored ``M - gamma_tilde J`` and the lagging state.

    ``structure`` is ``"dense"`` or ``("banded", ml, mu)``; ``jac_fn(t, z)``
    optionally supplies an analytic Jacobian.
    """

    def __init__(self, fi, structure="dense", jac_fn=None, mass=None):
        if structure != "dense":
            if len(structure) != 3 or structure[0] != "banded":
                raise UsageError("structure must be 'dense' or ('banded', ml, mu)")
        self.fi = fi
        self.structure = structure
        self.jac_fn = jac_fn
        self.mass = mass
        self.clear()
        self.nsetups = 0
        self.njevals = 0
        self.nfi_jac = 0

    def clear(self):
        self.J = None
        self.lu = None
        self.gamma_tilde = None
        self.setup_step = None
        self.j_step = None
        self.jcur = False
        self.jbad = True
        self.force = False
        self.crate = 1.0

    def mark_stale(self):
        """Force a fresh Jacobian and factorization before the next solve."""
        self.jbad = True
        self.force = True

    def needs_setup(self, step, gamma, cfg: NewtonConfig):
        if self.lu is None or self.force:
            return True
        if not cfg.constant_jacobian and step - self.setup_step >= cfg.msbp:
            return True
        return abs(gamma / self.gamma_tilde - 1.0) > cfg.dgmax

    def setup(self, t, z, gamma, w, step, cfg: NewtonConfig, h=None, fz=None,
              force_jac=False):
        need_j = (force_jac or self.J is None or self.jbad
                  or (not cfg.constant_jacobian and step - self.j_step >= cfg.msbj))
        if need_j:
            if self.jac_fn is not None:
                J = self.jac_fn(t, z)
                if isinstance(J, np.ndarray):
                    J = DenseMatrix(J)
            else:
                J, cost = fd_jacobian(self.fi, t, z, w, self.structure, fz=fz, h=h)
                self.nfi_jac += cost
            self.J = J
            self.j_step = step
            self.njevals += 1
            self.jbad = False
            self.jcur = True
        else:
            self.jcur = False
        M = None if self.mass is None else self.mass.matrix
        A = self.J.combine(-gamma, M, 1.0)
        self.nsetups += 1
        self.force = False
        self.setup_step = step
        self.gamma_tilde = gamma
        self.crate = 1.0
        try:
            self.lu = lu_factor(A)
        except SingularMatrixError as exc:
            self.lu = None
            self.force = True
            raise SolverFailure("singular iteration matrix") from exc
        return need_j

    def maybe_refresh(self, step, gamma, cfg, t, z, w, h=None, fz=None, events=()):
        """Re-factor if the lagging policy or ``events`` demand it."""
        if events:
            self.mark_stale()
        if not self.needs_setup(step, gamma, cfg):
            return False
        self.setup(t, z, gamma, w, step, cfg, h=h, fz=fz)
        return True


def maybe_refresh_jacobian(jac: JacobianSlot, step, gamma, cfg, t, z, w, h=None,
                           events=()):
    return jac.maybe_refresh(step, gamma, cfg, t, z, w, h=h, events=events)


# ---------------------------------------------------------------------------
# iterations
# ---------------------------------------------------------------------------

def newton_solve(sys: StageSystem, z_pred, cfg: NewtonConfig, jac: JacobianSlot, w):
    """Modified Newton on the stage system with the factored matrix in ``jac``.

    Raises :class:`SolverFailure` on divergence, exhausted iterations or a
    failed linear solve; ``jac.crate`` carries the rate estimate between
    calls.
    """
    z_pred = as_vector(z_pred)
    if sys.gamma == 0.0:
        return SolveResult(sys.a.copy(), 0, 0)
    if jac.lu is None:
        raise UsageError("Jacobian slot has no factorization")
    maxiters = 1 if cfg.linearly_implicit else cfg.maxiters
    scale = 1.0
    if jac.gamma_tilde != sys.gamma:
        scale = 2.0 / (1.0 + sys.gamma / jac.gamma_tilde)
    z = z_pred.copy()
    hist = []
    delp = 0.0
    fevals = 0
    for m in range(maxiters):
        fz = sys.fi(sys.t, z)
        fevals += 1
        G = sys.residual(z, fz)
        if not np.all(np.isfinite(G)):
            raise SolverFailure("non-finite residual", m + 1, hist)
        delta = jac.lu.solve(-G)
        if scale != 1.0:
            delta *= scale
        if not np.all(np.isfinite(delta)):
            raise SolverFailure("linear solve failed", m + 1, hist)
        z += delta
        dl = wrms_norm(delta, w)
        hist.append(dl)
        if cfg.linearly_implicit:
            return SolveResult(z, 1, fevals, hist)
        if m > 0:
            jac.crate = max(cfg.crdown * jac.crate, dl / delp)
        if dl * min(1.0, jac.crate) <= cfg.coef:
            return SolveResult(z, m + 1, fevals, hist)
        if m > 0 and dl > cfg.rdiv * delp:
            raise SolverFailure("diverged", m + 1, hist)
        delp = dl
    raise SolverFailure("max iterations", maxiters, hist)


def fixed_point_solve(sys: StageSystem, z_pred, cfg: NewtonConfig, w, maxiters=None):
    """Plain fixed-point iteration ``z <- a + gamma M^{-1} fi(t, z)``."""
    z = as_vector(z_pred).copy()
    if sys.gamma == 0.0:
        return SolveResult(sys.a.copy(), 0, 0)
    maxiters = cfg.fp_maxiters if maxiters is None else maxiters
    hist = []
    crate = 1.0
    delp = 0.0
    for m in range(maxiters):
        fz = sys.fi(sys.t, z)
        if sys.mass is not None:
            fz = sys.mass.solve(fz)
        znew = sys.a + sys.gamma * fz
        delta = znew - z
        z = znew
        if not np.all(np.isfinite(z)):
            raise SolverFailure("non-finite iterate", m + 1, hist)
        dl = wrms_norm(delta, w)
        hist.append(dl)
        if m > 0:
            if dl > delp:
                raise SolverFailure("diverged", m + 1, hist)
            crate = max(cfg.crdown * crate, dl / delp)
        if dl * min(1.0, crate) <= cfg.coef:
            return SolveResult(z, m + 1, m + 1, hist)
        delp = dl
    raise SolverFailure("max iterations", maxiters, hist)


class StageSolver:
    """Solves implicit stages for a stepper and books the statistics.

    ``fi`` is the counted implicit right-hand side used by the iterations;
    ``fi_raw`` feeds finite-difference Jacobians, whose calls are tallied
    separately in ``stats.fi_evals_jac``.
    """

    def __init__(self, fi, fi_raw, stats, cfg=None, nls="newton", structure="dense",
                 jac_fn=None, mass=None):
        if nls not in ("newton", "fixedpoint"):
            raise UsageError("nls must be 'newton' or 'fixedpoint'")
        self.fi = fi
        self.stats = stats
        self.cfg = cfg or NewtonConfig()
        self.nls = nls
        self.mass = mass
        self.jac = JacobianSlot(fi_raw, structure, jac_fn, mass) if nls == "newton" else None

    def _sync(self):
        self.stats.ls_setups = self.jac.nsetups
        self.stats.jac_evals = self.jac.njevals
        self.stats.fi_evals_jac = self.jac.nfi_jac

    def _setup(self, t, z, gamma, ctx, h, force_jac=False):
        try:
            self.jac.setup(t, z, gamma, ctx.w, ctx.step_index, self.cfg, h=h,
                           force_jac=force_jac)
        finally:
            self._sync()
        if ctx.transcript is not None:
            ctx.transcript.append(("ls_setup", t, gamma, self.jac.jcur))

    def solve(self, t, gamma, a, zp, ctx, h):
        sysm = StageSystem(t, gamma, a, self.fi, self.mass)
        if self.nls == "fixedpoint":
            try:
                res = fixed_point_solve(sysm, zp, self.cfg, ctx.w)
            except SolverFailure as exc:
                self.stats.nls_iters += exc.iters
                self.stats.nls_fails += 1
                raise
            self.stats.nls_iters += res.iters
            return res.z
        jac = self.jac
        if jac.needs_setup(ctx.step_index, gamma, self.cfg):
            self._setup(t, zp, gamma, ctx, h)
        else:
            jac.jcur = False
        while True:
            try:
                res = newton_solve(sysm, zp, self.cfg, jac, ctx.w)
            except SolverFailure as exc:
                self.stats.nls_iters += exc.iters
                self.stats.nls_fails += 1
                if not jac.jcur:
                    self._setup(t, zp, gamma, ctx, h, force_jac=True)
                    continue
                jac.force = True
                raise
            self.stats.nls_iters += res.iters
            return res.z

    def refresh(self):
        if self.jac is not None:
            self.jac.mark_stale()

    def clear(self, stats=False):
        if self.jac is not None:
            self.jac.clear()
            if stats:
                self.jac.nsetups = self.jac.njevals = self.jac.nfi_jac = 0
