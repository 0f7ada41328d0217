"""Embedded explicit Runge-Kutta steps for ``y' = f(t, y)``."""

import numpy as np

from .base import StepAttempt, Stepper, StepperStats, check_finite
from .core import UsageError, as_vector
from .tableaux import ButcherTable, get


class ErkStepper(Stepper):
    """Explicit RK with an optional embedding; ``s`` fresh f-calls per attempt."""

    def __init__(self, f, table="bogacki_shampine_3_2"):
        if isinstance(table, str):
            table = get(table)
        if not isinstance(table, ButcherTable) or table.kind != "explicit":
            raise UsageError("ErkStepper needs an explicit Butcher table")
        self.f = f
        self.table = table
        self.q = table.q
        self.p = table.p
        self.adaptive = table.adaptive
        self.stats = StepperStats()
        self._d = table.d
        self._rows = [[(j, table.A[i, j]) for j in range(i) if table.A[i, j] != 0.0]
                      for i in range(table.s)]

    def _rhs(self, t, y):
        self.stats.fe_evals += 1
        return check_finite(as_vector(self.f(t, y)), "f")

    def attempt(self, t, y, h, ctx=None):
        tab = self.table
        K = []
        for i in range(tab.s):
            z = y.copy()
            for j, a in self._rows[i]:
                z += (h * a) * K[j]
            K.append(self._rhs(t + tab.c[i] * h, z))
        ynew = y.copy()
        for j in range(tab.s):
            if tab.b[j] != 0.0:
                ynew += (h * tab.b[j]) * K[j]
        if not tab.adaptive:
            return StepAttempt(ynew)
        T = np.zeros_like(y)
        for j in range(tab.s):
            if self._d[j] != 0.0:
                T += (h * self._d[j]) * K[j]
        return StepAttempt(ynew, ynew - T, T)

    def full_rhs(self, t, y):
        return self._rhs(t, y)
