"""Vectors, matrices, weighted norms and tolerance weights.

Vectors are plain 1-D float64 numpy arrays. Matrices come in two storage
kinds, :class:`DenseMatrix` and :class:`BandedMatrix`, both factorizable
with partial-pivoting LU through :func:`lu_factor`.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

from . import _kernels


class UsageError(ValueError):
    """Inconsistent arguments or configuration."""


class IllegalWeightError(ArithmeticError):
    """A tolerance weight would be infinite (zero denominator)."""


class SingularMatrixError(ArithmeticError):
    """LU factorization hit an exact zero pivot."""

    def __init__(self, index):
        super().__init__(f"zero pivot in column {index}")
        self.index = index


def as_vector(y, n=None):
    v = np.ascontiguousarray(y, dtype=np.float64).reshape(-1)
    if n is not None and v.shape[0] != n:
        raise UsageError(f"expected vector of length {n}, got {v.shape[0]}")
    return v


def wrms_norm(v, w) -> float:
    """Weighted root-mean-square norm ``sqrt(mean((v*w)**2))``."""
    v = as_vector(v)
    w = as_vector(w)
    if v.shape != w.shape:
        raise UsageError(f"length mismatch: {v.shape[0]} vs {w.shape[0]}")
    if v.shape[0] == 0:
        raise UsageError("wrms_norm of an empty vector")
    return float(_kernels.wrms_norm(v, w))


@dataclass
class Tolerances:
    """Relative/absolute tolerances; ``atol`` and ``ratol`` may be arrays."""

    rtol: float = 1e-4
    atol: Union[float, np.ndarray] = 1e-9
    ratol: Union[float, np.ndarray, None] = None

    def __post_init__(self):
        self.rtol = float(self.rtol)
        if self.rtol < 0 or not np.isfinite(self.rtol):
            raise UsageError("rtol must be finite and nonnegative")
        self.atol = self._check_abs(self.atol, "atol")
        if self.ratol is not None:
            self.ratol = self._check_abs(self.ratol, "ratol")
        if self.rtol == 0 and np.all(np.asarray(self.atol) == 0):
            raise UsageError("rtol and atol cannot both be zero")

    @staticmethod
    def _check_abs(value, name):
        arr = np.asarray(value, dtype=np.float64)
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise UsageError(f"{name} must be finite and nonnegative")
        return float(arr) if arr.ndim == 0 else arr.reshape(-1).copy()

    def resized(self, n):
        """Copy whose vector-valued entries are checked against length ``n``."""
        for name in ("atol", "ratol"):
            val = getattr(self, name)
            if isinstance(val, np.ndarray) and val.shape[0] != n:
                raise UsageError(f"{name} has length {val.shape[0]}, state has {n}")
        return self


def _weights(scale, rtol, abstol):
    denom = rtol * np.abs(scale) + abstol
    if not np.all(denom > 0) or not np.all(np.isfinite(denom)):
        bad = int(np.argmin(np.where(np.isfinite(denom), denom, -1.0)))
        raise IllegalWeightError(f"illegal weight at component {bad}")
    return 1.0 / denom


def error_weights(y, tol: Tolerances):
    """``w_i = 1 / (rtol |y_i| + atol_i)``; raises :class:`IllegalWeightError`."""
    return _weights(as_vector(y), tol.rtol, tol.atol)


def residual_weights(mass, y, tol: Tolerances):
    """``sigma_i = 1 / (rtol |(M y)_i| + ratol_i)``; ``mass=None`` is the identity."""
    y = as_vector(y)
    r = y if mass is None else mass.matvec(y)
    ratol = tol.atol if tol.ratol is None else tol.ratol
    return _weights(r, tol.rtol, ratol)


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------

class DenseMatrix:
    """Square (or rectangular) dense matrix stored row-major."""

    def __init__(self, data):
        self.data = np.array(data, dtype=np.float64, ndmin=2)

    @property
    def shape(self):
        return self.data.shape

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n))

    def matvec(self, x):
        return self.data @ x

    def to_dense(self):
        return self.data.copy()

    def copy(self):
        return DenseMatrix(self.data.copy())

    def combine(self, alpha, other, beta):
        """Return ``alpha*self + beta*other`` (``other`` dense or None=identity)."""
        out = alpha * self.data
        if other is None:
            out[np.diag_indices_from(out)] += beta
        else:
            out += beta * other.to_dense()
        return DenseMatrix(out)


class BandedMatrix:
    """Square band matrix in compact diagonal-ordered storage.

    ``data[mu + i - j, j] == A[i, j]`` for ``-mu <= i - j <= ml``.
    """

    def __init__(self, n, ml, mu, data=None):
        if ml < 0 or mu < 0:
            raise UsageError("bandwidths must be nonnegative")
        self.n, self.ml, self.mu = int(n), int(ml), int(mu)
        if data is None:
            data = np.zeros((ml + mu + 1, n))
        data = np.asarray(data, dtype=np.float64)
        if data.shape != (ml + mu + 1, n):
            raise UsageError(f"band storage must have shape {(ml + mu + 1, n)}")
        self.data = data

    @property
    def shape(self):
        return (self.n, self.n)

    @classmethod
    def from_dense(cls, a, ml, mu):
        a = np.asarray(a, dtype=np.float64)
        n = a.shape[0]
        out = cls(n, ml, mu)
        for k in range(-mu, ml + 1):
            diag = np.diagonal(a, offset=-k)
            if k >= 0:
                out.data[mu + k, : n - k] = diag
            else:
                out.data[mu + k, -k:] = diag
        return out

    @classmethod
    def identity(cls, n, ml=0, mu=0):
        out = cls(n, ml, mu)
        out.data[mu, :] = 1.0
        return out

    def to_dense(self):
        n, ml, mu = self.n, self.ml, self.mu
        a = np.zeros((n, n))
        for k in range(-mu, ml + 1):
            idx = np.arange(max(0, -k), min(n, n - k))
            a[idx + k, idx] = self.data[mu + k, idx]
        return a

    def matvec(self, x):
        n, ml, mu = self.n, self.ml, self.mu
        y = np.zeros(n)
        for k in range(-mu, ml + 1):
            j0, j1 = max(0, -k), min(n, n - k)
            y[j0 + k:j1 + k] += self.data[mu + k, j0:j1] * x[j0:j1]
        return y

    def copy(self):
        return BandedMatrix(self.n, self.ml, self.mu, self.data.copy())

    def combine(self, alpha, other, beta):
        """Return ``alpha*self + beta*other`` (``other`` banded or None=identity)."""
        out = self.copy()
        out.data *= alpha
        if other is None:
            out.data[self.mu, :] += beta
            return out
        if not isinstance(other, BandedMatrix):
            return DenseMatrix(out.to_dense() + beta * other.to_dense())
        if other.ml > self.ml or other.mu > self.mu:
            wide = BandedMatrix(self.n, max(self.ml, other.ml), max(self.mu, other.mu))
            wide.data[wide.mu - self.mu:wide.mu + self.ml + 1] = out.data
            out = wide
        out.data[out.mu - other.mu:out.mu + other.ml + 1] += beta * other.data
        return out


Matrix = Union[DenseMatrix, BandedMatrix]


class DenseLU:
    def __init__(self, a: DenseMatrix):
        self.lu = np.array(a.data, dtype=np.float64, order="C")
        n, m = self.lu.shape
        if n != m:
            raise UsageError("LU requires a square matrix")
        self.piv = np.zeros(n, dtype=np.int64)
        info = _kernels.dense_lu_factor(self.lu, self.piv)
        if info:
            raise SingularMatrixError(info - 1)

    def solve(self, b):
        x = np.array(b, dtype=np.float64)
        _kernels.dense_lu_solve(self.lu, self.piv, x)
        return x


class BandLU:
    def __init__(self, a: BandedMatrix):
        n, ml, mu = a.n, a.ml, a.mu
        self.n, self.ml, self.mu = n, ml, mu
        self.ab = np.zeros((2 * ml + mu + 1, n))
        self.ab[ml:] = a.data
        self.piv = np.zeros(n, dtype=np.int64)
        info = _kernels.band_lu_factor(self.ab, n, ml, mu, self.piv)
        if info:
            raise SingularMatrixError(info - 1)

    def solve(self, b):
        x = np.array(b, dtype=np.float64)
        _kernels.band_lu_solve(self.ab, self.n, self.ml, self.mu, self.piv, x)
        return x


def lu_factor(a: Matrix):
    """Factor ``a`` with partial pivoting; the result's ``solve`` is reusable."""
    if isinstance(a, BandedMatrix):
        return BandLU(a)
    if isinstance(a, DenseMatrix):
        return DenseLU(a)
    return DenseLU(DenseMatrix(a))


def lu_solve(a, b):
    """Solve ``a x = b``; ``a`` may be a matrix or an existing factorization."""
    fac = a if isinstance(a, (DenseLU, BandLU)) else lu_factor(a)
    return fac.solve(b)


class MassOperator:
    """Constant nonsingular mass matrix, factored once."""

    def __init__(self, matrix: Matrix):
        if isinstance(matrix, np.ndarray):
            matrix = DenseMatrix(matrix)
        self.matrix = matrix
        self.lu = lu_factor(matrix)
        self.nsolves = 0
        self.nmatvecs = 0

    def matvec(self, x):
        self.nmatvecs += 1
        return self.matrix.matvec(x)

    def solve(self, b):
        self.nsolves += 1
        return self.lu.solve(b)
