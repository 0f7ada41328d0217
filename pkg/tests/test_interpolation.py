import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from onestep.core import UsageError
from onestep.interpolation import (HermiteInterpolant, LagrangeInterpolant, hermite_weights,
                                   make_interpolant)


def poly(coeffs):
    p = np.polynomial.Polynomial(coeffs)
    return p, p.deriv(1), p.deriv(2), p.deriv(3)


def hermite_for(coeffs, t0, t1, degree):
    p, dp, _, _ = poly(coeffs)
    rhs = lambda t, y: np.array([dp(t)])  # noqa: E731
    return HermiteInterpolant.from_data(t0, t1, np.array([p(t0)]), np.array([p(t1)]),
                                        np.array([dp(t0)]), np.array([dp(t1)]),
                                        degree=degree, rhs=rhs)


def check(ref, got, scale):
    assert abs(got - ref) <= 1e-10 * max(abs(ref), scale)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 5), st.lists(st.floats(-3, 3), min_size=6, max_size=6),
       st.floats(-2, 2), st.floats(0.1, 2))
def test_hermite_exact_on_polynomials(deg, coeffs, t0, h):
    coeffs = coeffs[: deg + 1] if deg > 0 else coeffs[:1]
    t1 = t0 + h
    itp = hermite_for(coeffs, t0, t1, deg)
    ders = poly(coeffs)
    scale = 1 + sum(abs(c) for c in coeffs) * (1 + abs(t0) + h) ** 5
    for t in np.linspace(t0 - 0.2 * h, t1 + 0.2 * h, 7):
        for d in range(min(deg, 3) + 1):
            check(ders[d](t), itp.eval(t, d)[0], scale)


def test_pi0_is_mean():
    itp = HermiteInterpolant.from_data(0.0, 1.0, np.array([1.0]), np.array([3.0]), degree=0)
    for t in (0.0, 0.3, 1.0, 1.7):
        assert itp.eval(t)[0] == 2.0


def test_pi1_midpoint_and_cubic():
    itp = HermiteInterpolant.from_data(0.0, 2.0, np.array([1.0]), np.array([5.0]), degree=1)
    assert itp.eval(1.0)[0] == pytest.approx(3.0)
    cube = hermite_for([0, 0, 0, 1], 0.5, 1.5, 3)
    rng = np.random.default_rng(0)
    for t in rng.uniform(0.5, 1.5, 20):
        assert cube.eval(t)[0] == pytest.approx(t ** 3, rel=1e-12)


def test_extra_evaluations_counted():
    for deg, extra in ((3, 0), (4, 1), (5, 3)):
        itp = hermite_for([1, 2, 3, 4, 5, 6][: deg + 1], 0.0, 1.0, deg)
        itp.eval(0.4)
        itp.eval(0.7)
        assert itp.nevals == extra
    itp = HermiteInterpolant.from_data(0.0, 1.0, np.zeros(1), np.ones(1), degree=3,
                                       rhs=lambda t, y: y)
    itp.eval(0.5)
    assert itp.nevals == 2


def test_hermite_conditions_match_weights():
    for deg in range(1, 6):
        assert np.allclose(hermite_weights(0.0, 0, deg)[:2], [1, 0])
        assert np.allclose(hermite_weights(1.0, 0, deg)[:2], [0, 1])


def test_hermite_errors():
    itp = HermiteInterpolant(3)
    with pytest.raises(UsageError):
        itp.eval(0.0)
    with pytest.raises(UsageError):
        HermiteInterpolant(6)
    itp = HermiteInterpolant.from_data(0, 1, np.zeros(1), np.ones(1), np.ones(1), np.ones(1))
    with pytest.raises(UsageError):
        itp.eval(0.5, d=4)
    itp = HermiteInterpolant.from_data(0, 1, np.zeros(1), np.ones(1), np.ones(1), np.ones(1),
                                       degree=4)
    with pytest.raises(UsageError):
        itp.eval(0.5)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 5), st.lists(st.floats(-3, 3), min_size=6, max_size=6),
       st.lists(st.floats(0.2, 1.0), min_size=5, max_size=5))
def test_lagrange_exact_on_polynomials(deg, coeffs, gaps):
    coeffs = coeffs[: deg + 1]
    times = np.cumsum([0.0] + gaps[:deg])
    ders = poly(coeffs)
    itp = LagrangeInterpolant.from_history(times, [np.array([ders[0](t)]) for t in times])
    assert itp.available_degree == deg
    scale = 1 + sum(abs(c) for c in coeffs) * (1 + times[-1]) ** 5
    for t in np.linspace(times[0] - 0.3, times[-1] + 0.3, 9):
        for d in range(min(deg, 3) + 1):
            check(ders[d](t), itp.eval(t, d)[0], scale)


def test_lagrange_examples():
    itp = LagrangeInterpolant.from_history([0.0, 1.0], [np.array([2.0]), np.array([6.0])])
    assert itp.eval(0.5)[0] == pytest.approx(4.0)
    assert itp.eval(0.5, 1)[0] == pytest.approx(4.0)
    times = np.array([0.0, 0.3, 0.7, 1.2, 1.6, 2.0])
    itp = LagrangeInterpolant.from_history(times, [np.array([t ** 5]) for t in times])
    for t in (0.1, 0.9, 1.8):
        exact = [t ** 5, 5 * t ** 4, 20 * t ** 3, 60 * t ** 2]
        for d in range(4):
            assert itp.eval(t, d)[0] == pytest.approx(exact[d], rel=1e-10)
    with pytest.raises(UsageError):
        itp.eval(1.0, 4)


def test_lagrange_history_ramp_and_eviction():
    itp = LagrangeInterpolant(2)
    assert itp.available_degree == 0
    itp.update(0.0, np.zeros(1))
    assert itp.available_degree == 0
    itp.update(1.0, np.ones(1))
    assert itp.available_degree == 1
    for k in range(2, 6):
        itp.update(float(k), np.full(1, float(k)))
    assert itp.npoints == 3 and itp.t == [5.0, 4.0, 3.0]
    itp.reset()
    assert itp.npoints == 0


@settings(max_examples=30, deadline=None)
@given(st.permutations(range(5)), st.floats(-1, 5))
def test_lagrange_reorder_invariant(perm, t):
    times = np.array([0.0, 0.5, 1.3, 2.0, 3.1])
    vals = [np.array([np.sin(x), np.cos(x)]) for x in times]
    a = LagrangeInterpolant.from_history(times, vals).eval(t)
    b = LagrangeInterpolant.from_history(times[list(perm)],
                                         [vals[i] for i in perm]).eval(t)
    assert np.allclose(a, b, rtol=1e-9, atol=1e-9)


def test_factory():
    assert isinstance(make_interpolant("lagrange", 2), LagrangeInterpolant)
    assert make_interpolant("hermite", 5).degree == 5
    with pytest.raises(UsageError):
        make_interpolant("spline")
