"""Error test, step-size controllers and the clamps applied to their proposals."""

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import UsageError


class StepSizeError(RuntimeError):
    """The step size cannot be reduced any further."""


class ControllerKind(enum.Enum):
    PID = "pid"
    PI = "pi"
    I = "i"  # noqa: E741
    EXPLICIT_GUSTAFSSON = "explicit-gustafsson"
    IMPLICIT_GUSTAFSSON = "implicit-gustafsson"
    IMEX_GUSTAFSSON = "imex-gustafsson"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {"eg": "explicit-gustafsson", "ig": "implicit-gustafsson",
                   "imexg": "imex-gustafsson", "gustafsson": "explicit-gustafsson"}
        key = aliases.get(key, key)
        for kind in cls:
            if kind.value == key:
                return kind
        raise UsageError(f"unknown controller {value!r}")


class Outcome(enum.Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    INVALID = "invalid"


DEFAULT_GAINS = {
    ControllerKind.PID: (0.58, 0.21, 0.10),
    ControllerKind.PI: (0.8, 0.31),
    ControllerKind.I: (1.0,),
    ControllerKind.EXPLICIT_GUSTAFSSON: (0.367, 0.268),
    ControllerKind.IMPLICIT_GUSTAFSSON: (0.98, 0.95),
}


@dataclass
class AdaptivityParams:
    bias: float = 1.5
    safety: float = 0.96
    growth: float = 20.0
    first_growth: float = 10000.0
    fail_cap: float = 0.3
    fail_floor: float = 0.1
    small_nef: int = 3
    solver_fail_factor: float = 0.25
    hmin: float = 0.0
    hmax: float = math.inf
    max_error_fails: int = 7
    max_solver_fails: int = 10
    eps_floor: float = 1e-10
    order_basis: str = "p"
    gains: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.bias > 1:
            raise UsageError("bias must exceed 1")
        if not 0 < self.safety <= 1:
            raise UsageError("safety must lie in (0, 1]")
        if not 0 < self.fail_floor <= self.fail_cap <= 1 <= self.growth <= self.first_growth:
            raise UsageError("need 0 < fail_floor <= fail_cap <= 1 <= growth <= first_growth")
        if not 0 < self.solver_fail_factor < 1:
            raise UsageError("solver_fail_factor must lie in (0, 1)")
        if self.hmin < 0 or self.hmax <= 0 or self.hmin > self.hmax:
            raise UsageError("need 0 <= hmin <= hmax, hmax > 0")
        if self.order_basis not in ("p", "q"):
            raise UsageError("order_basis must be 'p' or 'q'")
        self.gains = {ControllerKind.parse(k): tuple(v) for k, v in self.gains.items()}

    def gains_for(self, kind):
        return self.gains.get(kind, DEFAULT_GAINS[kind])


@dataclass
class ControllerState:
    """Biased errors and step sizes of the current attempt and two accepted steps.

    ``eps[0]``/``h[0]`` hold the attempt being judged; ``eps[1:]``/``h[1:]``
    are the most recent accepted steps. Missing entries are ``None``.
    """

    eps: list = field(default_factory=lambda: [None, None, None])
    h: list = field(default_factory=lambda: [None, None, None])
    steps_taken: int = 0

    def set_current(self, eps, h):
        self.eps[0] = float(eps)
        self.h[0] = float(h)

    def accept(self):
        self.eps = [None, self.eps[0], self.eps[1]]
        self.h = [None, self.h[0], self.h[1]]
        self.steps_taken += 1

    def clear(self):
        self.eps = [None, None, None]
        self.h = [None, None, None]
        self.steps_taken = 0


def error_test(t_norm) -> Outcome:
    t_norm = float(t_norm)
    if not math.isfinite(t_norm):
        return Outcome.INVALID
    return Outcome.ACCEPT if t_norm <= 1.0 else Outcome.REJECT


def bias_error(t_norm, beta=1.5):
    if not beta > 1:
        raise UsageError("bias must exceed 1")
    return beta * t_norm


def _i_law(h, e, k, s, pk):
    return h * s * e ** (-k / pk)


def propose_step(kind, st: ControllerState, params: AdaptivityParams, order: int):
    """Raw controller proposal (before clamping) from ``st.eps[0]`` and history."""
    kind = ControllerKind.parse(kind)
    if st.eps[0] is None or st.h[0] is None:
        raise UsageError("no current error estimate")
    pk = order + 1.0
    s = params.safety
    fl = params.eps_floor
    h = abs(st.h[0])
    e0 = max(st.eps[0], fl)
    e1 = None if st.eps[1] is None else max(st.eps[1], fl)
    e2 = None if st.eps[2] is None else max(st.eps[2], fl)

    if kind is ControllerKind.IMEX_GUSTAFSSON:
        return min(propose_step(ControllerKind.EXPLICIT_GUSTAFSSON, st, params, order),
                   propose_step(ControllerKind.IMPLICIT_GUSTAFSSON, st, params, order))
    if kind is ControllerKind.PID and (e1 is None or e2 is None):
        kind = ControllerKind.PI
    if kind is ControllerKind.PI and e1 is None:
        kind = ControllerKind.I
    if kind is ControllerKind.EXPLICIT_GUSTAFSSON and e1 is None:
        kind = ControllerKind.I
    if kind is ControllerKind.IMPLICIT_GUSTAFSSON and (e1 is None or st.h[1] is None):
        kind = ControllerKind.I

    g = params.gains_for(kind)
    if kind is ControllerKind.I:
        return _i_law(h, e0, g[0], s, pk)
    if kind is ControllerKind.PI:
        return h * s * e0 ** (-g[0] / pk) * e1 ** (g[1] / pk)
    if kind is ControllerKind.PID:
        return h * s * e0 ** (-g[0] / pk) * e1 ** (g[1] / pk) * e2 ** (-g[2] / pk)
    if kind is ControllerKind.EXPLICIT_GUSTAFSSON:
        return h * s * e0 ** (-g[0] / pk) * (e0 / e1) ** (-g[1] / pk)
    # implicit Gustafsson
    ratio = h / abs(st.h[1])
    return h * s * ratio * e0 ** (-g[0] / pk) * (e0 / e1) ** (-g[1] / pk)


def apply_heuristics(h_raw, st: ControllerState, params: AdaptivityParams, outcome,
                     nfails=0, failed_this_step=False, invalid=False, direction=1.0):
    """Clamp a raw proposal into an admissible signed step size.

    ``outcome`` is ``"accept"``, ``"error-fail"`` or ``"solver-fail"``;
    ``nfails`` counts consecutive failures of that kind in this step.
    """
    h = abs(st.h[0])
    if outcome == "accept":
        limit = params.first_growth if st.steps_taken == 0 else params.growth
        if failed_this_step:
            limit = 1.0
        eta = min(abs(h_raw) / h, limit)
    elif outcome == "error-fail":
        if nfails > params.max_error_fails:
            raise StepSizeError(f"{nfails} consecutive error test failures")
        if invalid or nfails >= params.small_nef:
            eta = params.fail_floor
        else:
            eta = min(max(abs(h_raw) / h, params.fail_floor), params.fail_cap)
    elif outcome == "solver-fail":
        if nfails > params.max_solver_fails:
            raise StepSizeError(f"{nfails} consecutive solver failures")
        eta = params.solver_fail_factor
    else:
        raise UsageError(f"unknown outcome {outcome!r}")
    hnew = min(eta * h, params.hmax)
    if hnew < params.hmin or hnew == 0.0 or not math.isfinite(hnew):
        raise StepSizeError(f"step size {hnew:.3e} below minimum {params.hmin:.3e}")
    return math.copysign(hnew, direction)


def initial_step(y0, f0, w, t0, tout, params: Optional[AdaptivityParams] = None):
    """Starting step ``0.01 * ||y0|| / ||f0||`` in weighted norms, clamped."""
    from .core import wrms_norm

    params = params or AdaptivityParams()
    yn = wrms_norm(y0, w)
    fn = wrms_norm(f0, w) if np.all(np.isfinite(f0)) else math.inf
    if yn < 1e-5 or fn < 1e-5 or not math.isfinite(fn):
        h = 1e-6
    else:
        h = 0.01 * yn / fn
    span = abs(tout - t0)
    if span > 0:
        h = min(h, span)
    h = min(max(h, params.hmin), params.hmax)
    return math.copysign(h, tout - t0 if tout != t0 else 1.0)
