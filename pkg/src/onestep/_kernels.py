"""Hot numeric kernels.

Every kernel exists twice: a numba ``@njit`` version and a plain numpy
version with identical semantics. The module-level names resolve to the
numba versions unless ``ONESTEP_DISABLE_NUMBA`` is set to a truthy value
or numba cannot be imported. Both namespaces stay importable as
``numba_impl`` / ``numpy_impl`` so benchmarks can compare them in one
process.

Banded storage follows the LAPACK layout: entry ``A[i, j]`` of a matrix
with ``ml`` sub- and ``mu`` super-diagonals lives at
``ab[ml + mu + i - j, j]`` in an array with ``2*ml + mu + 1`` rows (the
first ``ml`` rows hold pivoting fill-in).
"""

import os
import types

import numpy as np

_FLAG = os.environ.get("ONESTEP_DISABLE_NUMBA", "").strip().lower()
NUMBA_REQUESTED = _FLAG not in ("1", "true", "yes", "on")

try:
    import numba as nb
except ImportError:  # pragma: no cover - numba is a declared dependency
    nb = None


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def _np_wrms_norm(v, w):
    prod = v * w
    return np.sqrt(float(np.dot(prod, prod)) / v.shape[0])


def _np_dense_lu_factor(a, piv):
    n = a.shape[0]
    info = 0
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        piv[k] = p
        if a[p, k] == 0.0:
            if info == 0:
                info = k + 1
            continue
        if p != k:
            a[[k, p], :] = a[[p, k], :]
        a[k + 1:, k] /= a[k, k]
        a[k + 1:, k + 1:] -= np.outer(a[k + 1:, k], a[k, k + 1:])
    return info


def _np_dense_lu_solve(lu, piv, b):
    n = lu.shape[0]
    for k in range(n):
        p = piv[k]
        if p != k:
            b[k], b[p] = b[p], b[k]
    for k in range(n):
        b[k + 1:] -= b[k] * lu[k + 1:, k]
    for k in range(n - 1, -1, -1):
        b[k] /= lu[k, k]
        b[:k] -= b[k] * lu[:k, k]


def _np_band_lu_factor(ab, n, ml, mu, piv):
    kv = ml + mu
    info = 0
    for j in range(mu + 1, min(kv, n)):
        ab[kv - j:ml, j] = 0.0
    ju = 0
    for j in range(n):
        if j + kv < n and ml > 0:
            ab[:ml, j + kv] = 0.0
        km = min(ml, n - 1 - j)
        jp = int(np.argmax(np.abs(ab[kv:kv + km + 1, j])))
        piv[j] = jp + j
        if ab[kv + jp, j] != 0.0:
            ju = max(ju, min(j + mu + jp, n - 1))
            if jp != 0:
                for k in range(ju - j + 1):
                    tmp = ab[kv + jp - k, j + k]
                    ab[kv + jp - k, j + k] = ab[kv - k, j + k]
                    ab[kv - k, j + k] = tmp
            if km > 0:
                ab[kv + 1:kv + km + 1, j] /= ab[kv, j]
                x = ab[kv + 1:kv + km + 1, j]
                for k in range(1, ju - j + 1):
                    yk = ab[kv - k, j + k]
                    if yk != 0.0:
                        ab[kv + 1 - k:kv + km + 1 - k, j + k] -= x * yk
        elif info == 0:
            info = j + 1
    return info


def _np_band_lu_solve(ab, n, ml, mu, piv, b):
    kv = ml + mu
    if ml > 0:
        for j in range(n - 1):
            lm = min(ml, n - 1 - j)
            p = piv[j]
            if p != j:
                b[j], b[p] = b[p], b[j]
            b[j + 1:j + 1 + lm] -= b[j] * ab[kv + 1:kv + 1 + lm, j]
    for j in range(n - 1, -1, -1):
        b[j] /= ab[kv, j]
        i0 = max(0, j - kv)
        if i0 < j:
            b[i0:j] -= b[j] * ab[kv + i0 - j:kv, j]


def _np_band_scatter(jac, df, inc, cols, n, ml, mu):
    # jac has compact storage (ml + mu + 1, n), jac[mu + i - j, j] = J[i, j]
    for j in cols:
        i0 = max(0, j - mu)
        i1 = min(n - 1, j + ml)
        jac[mu + i0 - j:mu + i1 - j + 1, j] = df[i0:i1 + 1] / inc[j]


def _np_adr_advection(y, out, npts, c, dx):
    q = y.reshape(npts, 3)
    o = out.reshape(npts, 3)
    o[0] = 0.0
    o[-1] = 0.0
    o[1:-1] = (-c / (2.0 * dx)) * (q[2:] - q[:-2])


def _np_adr_diffusion(y, out, npts, d, dx, literal):
    q = y.reshape(npts, 3)
    o = out.reshape(npts, 3)
    o[0] = 0.0
    o[-1] = 0.0
    lap = (d / (dx * dx)) * (q[2:] - 2.0 * q[1:-1] + q[:-2])
    if literal:
        o[1:-1] = lap[:, 0:1]
    else:
        o[1:-1] = lap


def _np_adr_reaction(y, out, npts, a, b, eps):
    q = y.reshape(npts, 3)
    o = out.reshape(npts, 3)
    u = q[1:-1, 0]
    v = q[1:-1, 1]
    w = q[1:-1, 2]
    o[0] = 0.0
    o[-1] = 0.0
    o[1:-1, 0] = a - (w + 1.0) * u + v * u * u
    o[1:-1, 1] = w * u - v * u * u
    o[1:-1, 2] = (b - w) / eps - w * u


numpy_impl = types.SimpleNamespace(
    name="numpy",
    wrms_norm=_np_wrms_norm,
    dense_lu_factor=_np_dense_lu_factor,
    dense_lu_solve=_np_dense_lu_solve,
    band_lu_factor=_np_band_lu_factor,
    band_lu_solve=_np_band_lu_solve,
    band_scatter=_np_band_scatter,
    adr_advection=_np_adr_advection,
    adr_diffusion=_np_adr_diffusion,
    adr_reaction=_np_adr_reaction,
)


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

def _build_numba():
    jit = nb.njit(cache=True, nogil=True)

    @jit
    def wrms_norm(v, w):
        n = v.shape[0]
        s = 0.0
        for i in range(n):
            p = v[i] * w[i]
            s += p * p
        return np.sqrt(s / n)

    @jit
    def dense_lu_factor(a, piv):
        n = a.shape[0]
        info = 0
        for k in range(n):
            p = k
            amax = abs(a[k, k])
            for i in range(k + 1, n):
                if abs(a[i, k]) > amax:
                    amax = abs(a[i, k])
                    p = i
            piv[k] = p
            if a[p, k] == 0.0:
                if info == 0:
                    info = k + 1
                continue
            if p != k:
                for jj in range(n):
                    tmp = a[k, jj]
                    a[k, jj] = a[p, jj]
                    a[p, jj] = tmp
            inv = 1.0 / a[k, k]
            for i in range(k + 1, n):
                a[i, k] *= inv
            for i in range(k + 1, n):
                lik = a[i, k]
                if lik != 0.0:
                    for jj in range(k + 1, n):
                        a[i, jj] -= lik * a[k, jj]
        return info

    @jit
    def dense_lu_solve(lu, piv, b):
        n = lu.shape[0]
        for k in range(n):
            p = piv[k]
            if p != k:
                tmp = b[k]
                b[k] = b[p]
                b[p] = tmp
        for k in range(n):
            bk = b[k]
            for i in range(k + 1, n):
                b[i] -= bk * lu[i, k]
        for k in range(n - 1, -1, -1):
            b[k] /= lu[k, k]
            bk = b[k]
            for i in range(k):
                b[i] -= bk * lu[i, k]

    @jit
    def band_lu_factor(ab, n, ml, mu, piv):
        kv = ml + mu
        info = 0
        for j in range(mu + 1, min(kv, n)):
            for i in range(kv - j, ml):
                ab[i, j] = 0.0
        ju = 0
        for j in range(n):
            if j + kv < n:
                for i in range(ml):
                    ab[i, j + kv] = 0.0
            km = min(ml, n - 1 - j)
            jp = 0
            amax = abs(ab[kv, j])
            for i in range(1, km + 1):
                if abs(ab[kv + i, j]) > amax:
                    amax = abs(ab[kv + i, j])
                    jp = i
            piv[j] = jp + j
            if ab[kv + jp, j] != 0.0:
                ju = max(ju, min(j + mu + jp, n - 1))
                if jp != 0:
                    for k in range(ju - j + 1):
                        tmp = ab[kv + jp - k, j + k]
                        ab[kv + jp - k, j + k] = ab[kv - k, j + k]
                        ab[kv - k, j + k] = tmp
                if km > 0:
                    inv = 1.0 / ab[kv, j]
                    for i in range(1, km + 1):
                        ab[kv + i, j] *= inv
                    for k in range(1, ju - j + 1):
                        yk = ab[kv - k, j + k]
                        if yk != 0.0:
                            for i in range(1, km + 1):
                                ab[kv + i - k, j + k] -= ab[kv + i, j] * yk
            elif info == 0:
                info = j + 1
        return info

    @jit
    def band_lu_solve(ab, n, ml, mu, piv, b):
        kv = ml + mu
        if ml > 0:
            for j in range(n - 1):
                lm = min(ml, n - 1 - j)
                p = piv[j]
                if p != j:
                    tmp = b[j]
                    b[j] = b[p]
                    b[p] = tmp
                bj = b[j]
                for i in range(1, lm + 1):
                    b[j + i] -= bj * ab[kv + i, j]
        for j in range(n - 1, -1, -1):
            b[j] /= ab[kv, j]
            bj = b[j]
            for i in range(max(0, j - kv), j):
                b[i] -= bj * ab[kv + i - j, j]

    @jit
    def band_scatter(jac, df, inc, cols, n, ml, mu):
        for jj in range(cols.shape[0]):
            j = cols[jj]
            i0 = max(0, j - mu)
            i1 = min(n - 1, j + ml)
            for i in range(i0, i1 + 1):
                jac[mu + i - j, j] = df[i] / inc[j]

    @jit
    def adr_advection(y, out, npts, c, dx):
        coef = -c / (2.0 * dx)
        for s in range(3):
            out[s] = 0.0
            out[3 * (npts - 1) + s] = 0.0
        for i in range(1, npts - 1):
            for s in range(3):
                out[3 * i + s] = coef * (y[3 * (i + 1) + s] - y[3 * (i - 1) + s])

    @jit
    def adr_diffusion(y, out, npts, d, dx, literal):
        coef = d / (dx * dx)
        for s in range(3):
            out[s] = 0.0
            out[3 * (npts - 1) + s] = 0.0
        for i in range(1, npts - 1):
            if literal:
                lap = coef * (y[3 * (i + 1)] - 2.0 * y[3 * i] + y[3 * (i - 1)])
                for s in range(3):
                    out[3 * i + s] = lap
            else:
                for s in range(3):
                    out[3 * i + s] = coef * (y[3 * (i + 1) + s] - 2.0 * y[3 * i + s]
                                             + y[3 * (i - 1) + s])

    @jit
    def adr_reaction(y, out, npts, a, b, eps):
        for s in range(3):
            out[s] = 0.0
            out[3 * (npts - 1) + s] = 0.0
        for i in range(1, npts - 1):
            u = y[3 * i]
            v = y[3 * i + 1]
            w = y[3 * i + 2]
            out[3 * i] = a - (w + 1.0) * u + v * u * u
            out[3 * i + 1] = w * u - v * u * u
            out[3 * i + 2] = (b - w) / eps - w * u

    return types.SimpleNamespace(
        name="numba",
        wrms_norm=wrms_norm,
        dense_lu_factor=dense_lu_factor,
        dense_lu_solve=dense_lu_solve,
        band_lu_factor=band_lu_factor,
        band_lu_solve=band_lu_solve,
        band_scatter=band_scatter,
        adr_advection=adr_advection,
        adr_diffusion=adr_diffusion,
        adr_reaction=adr_reaction,
    )


numba_impl = _build_numba() if nb is not None else None

active = numba_impl if (NUMBA_REQUESTED and numba_impl is not None) else numpy_impl
BACKEND = active.name

wrms_norm = active.wrms_norm
dense_lu_factor = active.dense_lu_factor
dense_lu_solve = active.dense_lu_solve
band_lu_factor = active.band_lu_factor
band_lu_solve = active.band_lu_solve
band_scatter = active.band_scatter
adr_advection = active.adr_advection
adr_diffusion = active.adr_diffusion
adr_reaction = active.adr_reaction
