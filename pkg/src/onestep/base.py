"""Pieces shared by the single-step engines."""

from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np


class RhsFailure(ArithmeticError):
    """A right-hand side returned non-finite values; the step is retried smaller."""


@dataclass
class StepAttempt:
    y: np.ndarray
    ytilde: Optional[np.ndarray] = None
    T: Optional[np.ndarray] = None
    # slope at the new point if it came for free (fed to the interpolant)
    f_new: Optional[np.ndarray] = None


@dataclass
class StepperStats:
    fe_evals: int = 0
    fi_evals: int = 0
    fi_evals_jac: int = 0
    nls_iters: int = 0
    nls_fails: int = 0
    ls_setups: int = 0
    jac_evals: int = 0
    mass_solves: int = 0

    def clear(self):
        for f in fields(self):
            setattr(self, f.name, 0)

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @property
    def fi_evals_total(self):
        return self.fi_evals + self.fi_evals_jac


def check_finite(v, what):
    if not np.all(np.isfinite(v)):
        raise RhsFailure(f"{what} returned non-finite values")
    return v


class Stepper:
    """Interface the integrator drives.

    Subclasses provide ``attempt``, ``full_rhs``, orders ``q``/``p`` and a
    ``stats`` :class:`StepperStats`.
    """

    q = 1
    p = None
    adaptive = False
    implicit = False

    def attempt(self, t, y, h, ctx):  # pragma: no cover - interface
        raise NotImplementedError

    def full_rhs(self, t, y):  # pragma: no cover - interface
        raise NotImplementedError

    def accepted(self, t_new, y_new, attempt):
        """Hook run after the integrator accepts ``attempt``."""

    def reset(self):
        """Drop cached step data (history is about to be invalid)."""

    def resize(self, n):
        self.reset()

    def jacobian_refresh(self):
        """Request fresh Jacobian data for the next attempt."""


@dataclass
class StepContext:
    """Per-attempt information the integrator hands to the stepper."""

    w: np.ndarray
    step_index: int = 0
    interp: object = None
    h_prev: Optional[float] = None
    attempt_id: int = 0
    start_id: int = 0
    transcript: Optional[list] = field(default=None, repr=False)
