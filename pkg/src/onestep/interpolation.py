"""Dense output over the last step (Hermite) or a solution history (Lagrange).

Hermite interpolants of degree 0..5 are built on the normalized coordinate
``theta = (t - t_prev) / h`` from endpoint values and slopes; degrees 4 and
5 add slope conditions at ``theta = 2/3`` (and ``1/3``) whose right-hand
side values are computed on demand and cached until the next update.
"""

import numpy as np

from .core import UsageError, as_vector

MAX_DEGREE = 5
MAX_DERIV = 3


# (kind, theta) per condition; kind 0 = value, 1 = first derivative
_CONDITIONS = {
    1: [(0, 0.0), (0, 1.0)],
    2: [(0, 0.0), (0, 1.0), (1, 1.0)],
    3: [(0, 0.0), (0, 1.0), (1, 0.0), (1, 1.0)],
    4: [(0, 0.0), (0, 1.0), (1, 0.0), (1, 1.0), (1, 2.0 / 3.0)],
    5: [(0, 0.0), (0, 1.0), (1, 0.0), (1, 1.0), (1, 2.0 / 3.0), (1, 1.0 / 3.0)],
}


def _monomial_row(theta, d, deg):
    """d-th derivative of ``[1, theta, ..., theta**deg]``."""
    row = np.zeros(deg + 1)
    for k in range(d, deg + 1):
        coef = 1.0
        for m in range(d):
            coef *= k - m
        row[k] = coef * theta ** (k - d)
    return row


def _inverse_conditions(deg):
    conds = _CONDITIONS[deg]
    V = np.array([_monomial_row(th, kind, deg) for kind, th in conds])
    return np.linalg.inv(V)


_INV = {deg: _inverse_conditions(deg) for deg in _CONDITIONS}


def hermite_weights(theta, d, deg):
    """Weights on the condition data of ``pi_deg`` for its d-th theta-derivative."""
    if deg == 0:
        return np.array([1.0 if d == 0 else 0.0])
    return _monomial_row(theta, d, deg) @ _INV[deg]


class HermiteInterpolant:
    """Interpolant over ``[t_prev, t_cur]`` from values and slopes.

    ``rhs(t, y)`` supplies slopes that were not handed in with
    :meth:`update` and the extra points needed by degrees 4 and 5.
    ``nevals`` counts those calls.
    """

    family = "hermite"

    def __init__(self, degree=3, rhs=None):
        if not 0 <= int(degree) <= MAX_DEGREE:
            raise UsageError(f"Hermite degree must be in 0..{MAX_DEGREE}")
        self.degree = int(degree)
        self.rhs = rhs
        self.nevals = 0
        self.reset()

    def reset(self):
        self.t = []   # most recent first, at most two
        self.y = []
        self.f = []
        self._extra = {}

    @classmethod
    def from_data(cls, t0, t1, y0, y1, f0=None, f1=None, degree=3, rhs=None):
        itp = cls(degree, rhs)
        itp.update(t0, y0, f0)
        itp.update(t1, y1, f1)
        return itp

    @property
    def npoints(self):
        return len(self.t)

    @property
    def available_degree(self):
        return self.degree if len(self.t) == 2 else 0

    @property
    def t_latest(self):
        return self.t[0] if self.t else None

    @property
    def y_latest(self):
        return self.y[0] if self.y else None

    def update(self, t, y, f=None):
        """Push an accepted ``(t, y[, f])``; the older endpoint is dropped."""
        y = as_vector(y).copy()
        f = None if f is None else as_vector(f).copy()
        self.t = [float(t)] + self.t[:1]
        self.y = [y] + self.y[:1]
        self.f = [f] + self.f[:1]
        self._extra = {}

    def set_latest_rhs(self, f):
        if self.f:
            self.f[0] = as_vector(f).copy()

    def _slope(self, k):
        if self.f[k] is None:
            if self.rhs is None:
                raise UsageError("slope data missing and no rhs available")
            self.nevals += 1
            self.f[k] = as_vector(self.rhs(self.t[k], self.y[k])).copy()
        return self.f[k]

    def _data(self, deg):
        h = self.t[0] - self.t[1]
        y0, y1 = self.y[1], self.y[0]
        if deg == 0:
            return [0.5 * (y0 + y1)]
        if deg == 1:
            return [y0, y1]
        if deg == 2:
            return [y0, y1, h * self._slope(0)]
        base = [y0, y1, h * self._slope(1), h * self._slope(0)]
        if deg == 3:
            return base
        if "f4" not in self._extra:
            self._extra["f4"] = self._extra_rhs(2.0 / 3.0, 3)
        if deg == 4:
            return base + [h * self._extra["f4"]]
        if "f5" not in self._extra:
            self._extra["f5"] = (self._extra_rhs(2.0 / 3.0, 4), self._extra_rhs(1.0 / 3.0, 4))
        fa, fb = self._extra["f5"]
        return base + [h * fa, h * fb]

    def _extra_rhs(self, theta, deg):
        if self.rhs is None:
            raise UsageError(f"degree {deg + 1} needs an rhs for its extra points")
        h = self.t[0] - self.t[1]
        t = self.t[1] + theta * h
        z = self._combine(theta, 0, deg)
        self.nevals += 1
        return as_vector(self.rhs(t, z)).copy()

    def _combine(self, theta, d, deg):
        data = self._data(deg)
        wts = hermite_weights(theta, d, deg)
        out = np.zeros_like(data[0])
        for wk, vk in zip(wts, data):
            if wk != 0.0:
                out += wk * vk
        return out

    def eval(self, t, d=0, degree=None):
        """Value (``d=0``) or d-th time derivative at ``t``."""
        if not self.t:
            raise UsageError("interpolant has no data")
        deg = self.available_degree if degree is None else min(int(degree), self.available_degree)
        if d < 0 or d > min(deg, MAX_DERIV):
            raise UsageError(f"derivative order {d} unsupported for degree {deg}")
        if len(self.t) == 1:
            return self.y[0].copy()
        if d == 0 and deg > 0:
            if t == self.t[0]:
                return self.y[0].copy()
            if t == self.t[1]:
                return self.y[1].copy()
        h = self.t[0] - self.t[1]
        theta = (t - self.t[1]) / h
        return self._combine(theta, d, deg) / h ** d


def lagrange_basis(times, t, d):
    """``[l_j^{(d)}(t)]`` for nodes ``times`` via product-rule recursion."""
    m = len(times)
    out = np.zeros(m)
    for j in range(m):
        # p[k] holds the k-th derivative of the running product
        p = np.zeros(d + 1)
        p[0] = 1.0
        for i in range(m):
            if i == j:
                continue
            inv = 1.0 / (times[j] - times[i])
            a = (t - times[i]) * inv
            for k in range(d, 0, -1):
                p[k] = p[k] * a + k * p[k - 1] * inv
            p[0] *= a
        out[j] = p[d]
    return out


class LagrangeInterpolant:
    """Polynomial through the most recent ``degree + 1`` accepted solutions."""

    family = "lagrange"

    def __init__(self, degree=3, rhs=None):
        if not 0 <= int(degree) <= MAX_DEGREE:
            raise UsageError(f"Lagrange degree must be in 0..{MAX_DEGREE}")
        self.degree = int(degree)
        self.nevals = 0
        self.reset()

    def reset(self):
        self.t = []
        self.y = []

    @classmethod
    def from_history(cls, times, values, degree=None):
        """Build from chronological (or any order) ``times``/``values``."""
        itp = cls(len(times) - 1 if degree is None else degree)
        for t, y in zip(times, values):
            itp.update(t, y)
        return itp

    @property
    def npoints(self):
        return len(self.t)

    @property
    def available_degree(self):
        return max(0, min(self.degree, len(self.t) - 1))

    @property
    def t_latest(self):
        return self.t[0] if self.t else None

    @property
    def y_latest(self):
        return self.y[0] if self.y else None

    def update(self, t, y, f=None):
        t = float(t)
        if self.t and t == self.t[0]:
            raise UsageError("history times must be distinct")
        self.t = [t] + self.t[: self.degree]
        self.y = [as_vector(y).copy()] + self.y[: self.degree]

    def set_latest_rhs(self, f):
        pass

    def eval(self, t, d=0, degree=None):
        if not self.t:
            raise UsageError("interpolant has no data")
        if d < 0 or d > MAX_DERIV:
            raise UsageError(f"derivative order {d} exceeds {MAX_DERIV}")
        deg = self.available_degree if degree is None else min(int(degree), self.available_degree)
        if d == 0:
            for tk, yk in zip(self.t[: deg + 1], self.y[: deg + 1]):
                if t == tk:
                    return yk.copy()
        if d > deg:
            return np.zeros_like(self.y[0])
        wts = lagrange_basis(self.t[: deg + 1], t, d)
        out = np.zeros_like(self.y[0])
        for wk, yk in zip(wts, self.y):
            out += wk * yk
        return out


def make_interpolant(family="hermite", degree=3, rhs=None):
    family = family.lower()
    if family == "hermite":
        return HermiteInterpolant(degree, rhs)
    if family == "lagrange":
        return LagrangeInterpolant(degree, rhs)
    raise UsageError(f"unknown interpolant family {family!r}")
