import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from onestep import _kernels
from onestep.core import (BandedMatrix, DenseMatrix, IllegalWeightError, MassOperator,
                          SingularMatrixError, Tolerances, UsageError, error_weights, lu_factor,
                          lu_solve, residual_weights, wrms_norm)

# magnitudes kept where squares neither underflow nor overflow
finite = st.one_of(st.just(0.0), st.floats(1e-60, 1e6), st.floats(-1e6, -1e-60))
positive = st.floats(1e-6, 1e6)
scale = st.one_of(st.just(0.0), st.floats(1e-60, 1e3), st.floats(-1e3, -1e-60))


def test_wrms_examples():
    assert wrms_norm(np.ones(4), np.ones(4)) == pytest.approx(1.0)
    assert wrms_norm(np.zeros(3), np.array([1.0, 2.0, 3.0])) == 0.0
    assert wrms_norm(np.array([2.0, 0.0]), np.array([0.5, 3.0])) == pytest.approx(math.sqrt(0.5))


def test_wrms_length_mismatch():
    with pytest.raises(UsageError):
        wrms_norm(np.ones(3), np.ones(2))


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, 7, elements=finite), arrays(np.float64, 7, elements=positive),
       scale)
def test_wrms_homogeneous(v, w, alpha):
    lhs = wrms_norm(alpha * v, w)
    rhs = abs(alpha) * wrms_norm(v, w)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, 5, elements=positive), st.floats(0.0, 1.0))
def test_wrms_unit_ball(w, c):
    # components sitting at a fraction c of their tolerance have norm c
    assert wrms_norm(c / w, w) == pytest.approx(c, rel=1e-12, abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, 6, elements=finite), arrays(np.float64, 6, elements=finite),
       st.floats(1e-3, 1e3))
def test_weighted_norm_scale_invariance(y, v, alpha):
    tol = Tolerances(1e-3, 1e-6)
    scaled = Tolerances(1e-3, alpha * 1e-6)
    a = wrms_norm(v, error_weights(y, tol))
    b = wrms_norm(alpha * v, error_weights(alpha * y, scaled))
    assert b == pytest.approx(a, rel=1e-9)


def test_error_weight_examples():
    assert error_weights(np.array([10.0]), Tolerances(0.1, 1.0))[0] == pytest.approx(0.5)
    w = error_weights(np.array([3.0, -4.0, 0.0]), Tolerances(0.0, 1.0))
    assert np.all(w == 1.0)
    with pytest.raises(IllegalWeightError):
        error_weights(np.array([0.0]), Tolerances(0.1, 0.0))


def test_vector_atol():
    tol = Tolerances(0.0, np.array([1.0, 2.0]))
    assert np.allclose(error_weights(np.zeros(2), tol), [1.0, 0.5])


def test_tolerance_validation():
    with pytest.raises(UsageError):
        Tolerances(-1.0, 1.0)
    with pytest.raises(UsageError):
        Tolerances(1e-3, -1.0)
    with pytest.raises(UsageError):
        Tolerances(0.0, 0.0)


def test_residual_weights():
    y = np.array([1.0, -2.0])
    tol = Tolerances(0.1, 1e-3)
    assert np.allclose(residual_weights(None, y, tol), error_weights(y, tol))
    m = MassOperator(DenseMatrix(2.0 * np.eye(1)))
    sig = residual_weights(m, np.array([1.0]), Tolerances(0.1, 1e-9, ratol=1.0))
    assert sig[0] == pytest.approx(1 / 1.2)
    shear = MassOperator(DenseMatrix(np.array([[1.0, 1.0], [0.0, 1.0]])))
    with pytest.raises(IllegalWeightError):
        residual_weights(shear, np.array([1.0, -1.0]), Tolerances(0.1, 1e-9, ratol=0.0))


def test_lu_examples():
    b = np.array([3.0, -1.0, 2.0])
    assert np.allclose(lu_solve(DenseMatrix(np.eye(3)), b), b)
    assert np.allclose(lu_solve(DenseMatrix(np.diag([2.0, 4.0])), np.array([2.0, 8.0])), [1, 2])


def test_banded_lu_residual():
    rng = np.random.default_rng(3)
    a = np.triu(np.tril(rng.standard_normal((5, 5)), 1), -1) + 4 * np.eye(5)
    b = rng.standard_normal(5)
    x = lu_solve(BandedMatrix.from_dense(a, 1, 1), b)
    assert np.linalg.norm(a @ x - b) <= 1e-12 * np.linalg.norm(b)


@pytest.mark.parametrize("ml,mu", [(0, 0), (1, 2), (3, 1), (4, 4)])
def test_banded_matches_dense(ml, mu):
    rng = np.random.default_rng(ml * 10 + mu)
    n = 12
    a = rng.standard_normal((n, n))
    a = np.triu(np.tril(a, mu), -ml) + 0.5 * np.eye(n)
    bm = BandedMatrix.from_dense(a, ml, mu)
    assert np.array_equal(bm.to_dense(), a)
    x = rng.standard_normal(n)
    assert np.allclose(bm.matvec(x), a @ x, rtol=1e-14, atol=1e-14)
    b = rng.standard_normal(n)
    xd = lu_factor(DenseMatrix(a)).solve(b)
    xb = lu_factor(bm).solve(b)
    assert np.allclose(xb, xd, rtol=1e-12, atol=1e-12 * np.abs(xd).max())
    # the factorization is reusable
    b2 = rng.standard_normal(n)
    assert np.allclose(a @ lu_factor(bm).solve(b2), b2, atol=1e-10)


def test_banded_combine_identity():
    rng = np.random.default_rng(0)
    a = np.triu(np.tril(rng.standard_normal((6, 6)), 2), -1)
    bm = BandedMatrix.from_dense(a, 1, 2)
    c = bm.combine(-0.3, None, 1.0)
    assert np.allclose(c.to_dense(), np.eye(6) - 0.3 * a)
    d = DenseMatrix(a).combine(-0.3, None, 1.0)
    assert np.allclose(d.to_dense(), np.eye(6) - 0.3 * a)


def test_singular_detected():
    with pytest.raises(SingularMatrixError):
        lu_factor(DenseMatrix(np.zeros((2, 2))))
    with pytest.raises(SingularMatrixError):
        lu_factor(BandedMatrix.from_dense(np.zeros((3, 3)), 1, 1))


def test_mass_operator_solve():
    m = MassOperator(DenseMatrix(np.array([[2.0, 1.0], [0.0, 3.0]])))
    x = np.array([1.0, -2.0])
    assert np.allclose(m.solve(m.matvec(x)), x)


def test_kernels_twin_agreement():
    if _kernels.numba_impl is None:
        pytest.skip("numba unavailable")
    rng = np.random.default_rng(7)
    npts = 9
    y = 1 + 0.1 * rng.standard_normal(3 * npts)
    for name, args in [("adr_advection", (npts, 1e-3, 0.125)),
                       ("adr_diffusion", (npts, 1e-2, 0.125, False)),
                       ("adr_diffusion", (npts, 1e-2, 0.125, True)),
                       ("adr_reaction", (npts, 0.6, 2.0, 0.01))]:
        a, b = np.empty_like(y), np.empty_like(y)
        getattr(_kernels.numpy_impl, name)(y, a, *args)
        getattr(_kernels.numba_impl, name)(y, b, *args)
        assert np.allclose(a, b, rtol=1e-14, atol=1e-14), name
    w = rng.uniform(1, 2, y.shape[0])
    assert _kernels.numpy_impl.wrms_norm(y, w) == pytest.approx(_kernels.numba_impl.wrms_norm(y, w))


def test_fallback_flag_selects_numpy():
    import subprocess
    import sys
    code = "from onestep import _kernels; print(_kernels.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                         env={**__import__("os").environ, "ONESTEP_DISABLE_NUMBA": "1"},
                         check=True)
    assert out.stdout.strip() == "numpy"
