import math

import numpy as np
import pytest

from convergence import slopes
from mri_problems import FAST_LAMBDA, heun_mis, mis_errors, third_order_mis
from onestep import (ArkInner, BrokenResetInner, ErkStepper, ExactLinearInner, Integrator,
                     MriCoupling, MriStepper, NewtonConfig, SdirkInner, Tolerances, UsageError,
                     build_forcing, get, mis_to_mri, wrap_ark_as_inner)
from onestep.base import StepContext
from onestep.tableaux import erk_names


def test_forcing_single_prior_stage():
    cp = mis_to_mri(get("forward_euler_1"))
    FE = [np.array([2.0, -1.0]), None]
    r = build_forcing(cp, 2, FE, [None, None], 0.0, 0.5)
    assert r.degree == 0
    for t in (0.0, 0.2, 0.5):
        assert np.array_equal(r(t), FE[0])


def test_forcing_zero():
    cp = MriCoupling(c=[0, 1], W=None, G=None)
    r = build_forcing(cp, 2, [np.ones(3), None], [None, None], 0.0, 1.0)
    assert r.degree == 0 and not np.any(r(0.4))


def test_forcing_linear_in_theta():
    W = np.zeros((2, 3, 3))
    W[0, 1, 0] = 1.0
    W[1, 1, 0] = 1.0
    cp = MriCoupling(c=[0, 0.5, 1], W=W, G=None)
    FE = [np.array([3.0]), None, None]
    H = 0.4
    r = build_forcing(cp, 2, FE, [None] * 3, 1.0, H)
    assert r.degree == 1
    # theta = (t - 1) / (0.5 * 0.4); r = (1 + theta) * 3 / 0.5
    assert r(1.0)[0] == pytest.approx(6.0)
    assert r(1.2)[0] == pytest.approx(12.0)
    assert r(1.1)[0] == pytest.approx(9.0)


def test_forcing_requires_fast_interval():
    W = np.zeros((1, 3, 3))
    W[0, 1, 0] = 1.0
    cp = MriCoupling(c=[0, 1, 1], W=W, G=None)
    with pytest.raises(UsageError):
        build_forcing(cp, 3, [np.ones(1)] * 3, [None] * 3, 0.0, 1.0)


@pytest.mark.parametrize("name", ["knoth_wolke_3_3", "bogacki_shampine_3_2", "heun_euler_2_1"])
def test_zero_fast_rhs_reduces_to_slow_method(name):
    slow = get(name)
    f = lambda t, y: np.array([-y[0] + np.sin(t), y[0] * y[1]])  # noqa: E731
    y = np.array([1.0, 0.5])
    H = 0.2
    ref = ErkStepper(f, slow).attempt(0.3, y, H)
    st = MriStepper(mis_to_mri(slow), ExactLinearInner(np.zeros(2)), fe=f)
    got = st.attempt(0.3, y, H, StepContext(w=np.ones(2)))
    assert np.max(np.abs(got.y - ref.y)) <= 1e-12


def test_zero_fast_rhs_with_adaptive_inner():
    slow = get("knoth_wolke_3_3")
    f = lambda t, y: -y + np.sin(t)  # noqa: E731
    y = np.array([1.0])
    ref = ErkStepper(f, slow).attempt(0.0, y, 0.1)
    inner = ArkInner(lambda t, v: 0.0 * v, 1, "erk", table="cash_karp_5_4",
                     tol=Tolerances(1e-12, 1e-14))
    got = MriStepper(mis_to_mri(slow), inner, fe=f).attempt(0.0, y, 0.1,
                                                            StepContext(w=np.ones(1)))
    assert abs(got.y[0] - ref.y[0]) <= 1e-12


def test_no_slow_partitions_gives_fast_solution():
    lam = np.array([-3.0, 0.5])
    st = MriStepper(mis_to_mri(get("forward_euler_1")), ExactLinearInner(lam))
    y = np.array([1.0, 2.0])
    got = st.attempt(0.0, y, 0.7, StepContext(w=np.ones(2)))
    assert np.allclose(got.y, np.exp(lam * 0.7) * y, rtol=1e-14)
    assert st.stats.fe_evals == 0


def test_mis_order_third_and_second():
    assert slopes(mis_errors(third_order_mis())).min() >= 2.75
    assert slopes(mis_errors(heun_mis())).max() <= 2.5


def test_mis_order_with_adaptive_inner():
    def inner():
        return ArkInner(lambda t, v: FAST_LAMBDA * v, 1, "erk", table="cash_karp_5_4",
                        tol=Tolerances(1e-13, 1e-15))
    errs = mis_errors(third_order_mis(), levels=4, n0=8, inner_factory=inner)
    assert slopes(errs).min() >= 2.75


def test_forcing_conservation():
    rng = np.random.default_rng(11)
    slow = get("knoth_wolke_3_3")
    cp = mis_to_mri(slow)
    FE = [rng.standard_normal(4) for _ in range(cp.s)]
    total = np.zeros(4)
    H = 0.3
    for i in range(2, cp.s + 1):
        dc = cp.c[i - 1] - cp.c[i - 2]
        if dc > 0:
            r = build_forcing(cp, i, FE, [None] * cp.s, 0.0, H)
            total += dc * r(0.0)
    expect = sum(b * v for b, v in zip(slow.b, FE))
    assert np.allclose(total, expect, atol=1e-14)


# -- inner integrator contract -------------------------------------------------

LAM = -4.0


def ark_erk():
    return wrap_ark_as_inner(lambda t, v: LAM * v, 2, "erk", tol=Tolerances(1e-8, 1e-10))


def ark_dirk():
    return wrap_ark_as_inner(lambda t, v: LAM * v, 2, "dirk", tol=Tolerances(1e-8, 1e-10))


def sdirk():
    return SdirkInner(lambda t, v: LAM * v, 2, tol=Tolerances(1e-8, 1e-10))


INNERS = {"ark-erk": ark_erk, "ark-dirk": ark_dirk, "sdirk": sdirk}


@pytest.mark.parametrize("make", INNERS.values(), ids=INNERS.keys())
def test_inner_exponential_decay(make):
    inner = make()
    v0 = np.array([1.0, -2.0])
    inner.reset(0.0, v0)
    v = inner.evolve(0.1)
    assert np.allclose(v, v0 * math.exp(LAM * 0.1), rtol=1e-6)
    st = inner.stats()
    assert st["steps"] >= 1 and st["ff_evals"] >= st["steps"]


@pytest.mark.parametrize("make", INNERS.values(), ids=INNERS.keys())
def test_inner_reset_repeatable(make):
    inner = make()
    v0 = np.array([1.0, -2.0])
    inner.reset(0.0, v0)
    a = inner.evolve(0.1)
    inner.reset(0.0, v0)
    b = inner.evolve(0.1)
    assert np.allclose(a, b, rtol=1e-7, atol=0)
    inner.reset(0.0, 2 * v0)
    c = inner.evolve(0.1)
    assert np.allclose(c, 2 * a, rtol=1e-6)


@pytest.mark.parametrize("make", [
    lambda: wrap_ark_as_inner(lambda t, v: LAM * v, 2, "erk", keep_step=False),
    lambda: wrap_ark_as_inner(lambda t, v: LAM * v, 2, "dirk", keep_step=False),
    sdirk,
], ids=["ark-erk", "ark-dirk", "sdirk"])
def test_inner_fresh_reset_is_bitwise_repeatable(make):
    inner = make()
    v0 = np.array([1.0, -2.0])
    inner.reset(0.0, v0)
    a = inner.evolve(0.1)
    inner.reset(0.0, v0)
    assert np.array_equal(inner.evolve(0.1), a)


@pytest.mark.parametrize("make", INNERS.values(), ids=INNERS.keys())
def test_inner_full_rhs_excludes_forcing(make):
    inner = make()
    v = np.array([1.0, 3.0])
    inner.reset(0.0, v)
    inner.evolve(0.05, lambda t: np.array([100.0, 100.0]))
    assert np.array_equal(inner.full_rhs(0.0, v), LAM * v)


@pytest.mark.parametrize("make", INNERS.values(), ids=INNERS.keys())
def test_inner_applies_forcing(make):
    inner = make()
    inner.reset(0.0, np.zeros(2))
    v = inner.evolve(0.2, lambda t: np.array([1.0, 2.0]))
    exact = (np.exp(LAM * 0.2) - 1) / LAM
    assert np.allclose(v, [exact, 2 * exact], rtol=1e-6)


def test_broken_reset_detected():
    # the implicit correction stages move the slow state away from where the
    # fast solve stopped, so an inner that skips resets drifts off
    fe = lambda t, y: np.sin(t) + 0 * y  # noqa: E731
    fi = lambda t, y: -3.0 * y  # noqa: E731

    def run(inner):
        st = MriStepper("imex_mri_heun_trap_2", inner, fe=fe, fi=fi,
                        jac_fn=lambda t, y: -3.0 * np.eye(2), linearly_implicit=True)
        it = Integrator(st, 0.0, np.array([1.0, 2.0]), fixed_step=0.1)
        return it.evolve(1.0, "normal-tstop")[1]

    good = run(ark_erk())
    bad = run(BrokenResetInner(ark_erk()))
    assert np.max(np.abs(good - bad)) > 1e-3


def test_implicit_slow_stage_uses_newton():
    cp = get("imex_mri_heun_trap_2")
    lam_i = -5.0
    st = MriStepper(cp, ExactLinearInner(np.array([-1.0])),
                    fe=lambda t, y: np.sin(t) + 0 * y, fi=lambda t, y: lam_i * y,
                    newton=NewtonConfig(maxiters=5))
    it = Integrator(st, 0.0, np.ones(1), fixed_step=0.05, tol=Tolerances(1e-10, 1e-12))
    it.evolve(1.0, "normal-tstop")
    assert st.stats.nls_iters > 0 and st.stats.ls_setups >= 1


def test_imex_mri_second_order():
    from scipy.integrate import solve_ivp
    cp = get("imex_mri_heun_trap_2")
    fe = lambda t, y: np.array([np.sin(t) * y[0]])  # noqa: E731
    fi = lambda t, y: -3.0 * y  # noqa: E731
    full = lambda t, y: fe(t, y) + fi(t, y) - y  # noqa: E731
    ref = solve_ivp(full, (0, 1), [1.0], rtol=1e-13, atol=1e-14, method="DOP853").y[0, -1]
    errs = []
    for n in (8, 16, 32, 64):
        st = MriStepper(cp, ExactLinearInner(np.array([-1.0])), fe=fe, fi=fi,
                        jac_fn=lambda t, y: -3.0 * np.eye(1), linearly_implicit=True)
        it = Integrator(st, 0.0, np.ones(1), fixed_step=1.0 / n)
        errs.append(abs(it.evolve(1.0, "normal-tstop")[1][0] - ref))
    assert slopes(errs).min() >= 1.75


def test_composed_coupling_matches_substeps():
    base = get("imex_mri_heun_trap_2")
    comp = get("imex_mri_heun_trap_2x3")
    fe = lambda t, y: np.sin(t) + 0.1 * y ** 2  # noqa: E731
    fi = lambda t, y: -2.0 * y  # noqa: E731

    def run(cp, H, n):
        st = MriStepper(cp, ExactLinearInner(np.array([-1.0, -0.5])), fe=fe, fi=fi,
                        jac_fn=lambda t, y: -2.0 * np.eye(2), linearly_implicit=True)
        it = Integrator(st, 0.0, np.array([1.0, 0.3]), fixed_step=H)
        return it.evolve(H * n, "normal-tstop")[1]

    assert np.allclose(run(comp, 0.3, 2), run(base, 0.1, 6), rtol=1e-12, atol=1e-14)


def test_mri_configuration_errors():
    with pytest.raises(UsageError):
        MriStepper("bogacki_shampine_3_2", ExactLinearInner(np.zeros(1)))
    with pytest.raises(UsageError):
        MriStepper("imex_mri_heun_trap_2", ExactLinearInner(np.zeros(1)),
                   fe=lambda t, y: y)
    with pytest.raises(UsageError):
        Integrator(MriStepper("mri_gark_erk22a", ExactLinearInner(np.zeros(1)),
                              fe=lambda t, y: y), 0.0, np.ones(1))


@pytest.mark.parametrize("name", [n for n in erk_names() if get(n).q <= 3])
def test_mis_any_slow_table_second_order(name):
    errs = mis_errors(mis_to_mri(get(name)), levels=4, n0=8)
    assert slopes(errs).min() >= min(get(name).q, 2) - 0.25
