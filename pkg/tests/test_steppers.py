import numpy as np
import pytest

from convergence import embedded_slopes, global_slopes, slopes
from onestep import (ArkStepper, ButcherTable, DenseMatrix, ErkStepper, Integrator,
                     MassOperator, NewtonConfig, RhsFailure, Tolerances, UsageError, get)
from onestep.base import StepContext
from onestep.interpolation import HermiteInterpolant
from onestep.tableaux import available, dirk_names

ERK_ALL = [n for n in available()
           if isinstance(get(n), ButcherTable) and get(n).kind == "explicit"]


def ctx_for(y, w=1.0):
    itp = HermiteInterpolant(3)
    itp.update(0.0, y)
    return StepContext(w=np.full(y.shape[0], w), interp=itp)


def test_forward_euler_constant_slope():
    st = ErkStepper(lambda t, y: np.ones(1), "forward_euler_1")
    att = st.attempt(0.0, np.zeros(1), 0.25)
    assert att.y[0] == 0.25 and att.T is None


def test_heun_euler_expansion():
    lam, h, y0 = -0.7, 0.3, 2.0
    att = ErkStepper(lambda t, y: lam * y, "heun_euler_2_1").attempt(0.0, np.array([y0]), h)
    z = h * lam
    assert att.y[0] == pytest.approx(y0 * (1 + z + z * z / 2), rel=1e-15)
    assert att.ytilde[0] == pytest.approx(y0 * (1 + z), rel=1e-15)
    assert att.T[0] == pytest.approx(y0 * z * z / 2, rel=1e-12)


@pytest.mark.parametrize("name", ERK_ALL)
def test_zero_rhs(name):
    att = ErkStepper(lambda t, y: np.zeros_like(y), name).attempt(1.0, np.array([3.0, 4.0]), 0.5)
    assert np.array_equal(att.y, [3.0, 4.0])
    assert att.T is None or np.all(att.T == 0.0)


def test_full_rhs_counts_and_matches_stage_one():
    calls = []
    st = ErkStepper(lambda t, y: (calls.append(t), np.array([t]))[1])
    assert st.full_rhs(2.0, np.zeros(1))[0] == 2.0
    assert st.stats.fe_evals == 1
    st.attempt(2.0, np.zeros(1), 0.1)
    assert st.stats.fe_evals == 1 + st.table.s
    assert calls[1] == 2.0


@pytest.mark.parametrize("name", ERK_ALL)
def test_erk_slopes(name):
    q, s, _ = global_slopes(name)
    assert s.min() >= q - 0.25
    assert s[-1] <= q + 0.5


@pytest.mark.parametrize("name", [n for n in ERK_ALL if get(n).p])
def test_erk_embedding_slopes(name):
    p, s = embedded_slopes(name)
    assert s.min() >= p + 0.75


@pytest.mark.parametrize("name", ERK_ALL + dirk_names())
def test_quadrature_exactness(name):
    q = get(name).q
    f = lambda t, y: np.full_like(y, t ** (q - 1))  # noqa: E731
    tab = get(name)
    st = ErkStepper(f, name) if tab.kind == "explicit" else ArkStepper(
        fi=f, table=name, jac_fn=lambda t, y: np.zeros((1, 1)), linearly_implicit=True)
    it = Integrator(st, 0.0, np.zeros(1), fixed_step=0.25, tol=Tolerances(1e-12, 1e-14))
    _, y, _ = it.evolve(1.0, "normal-tstop")
    assert y[0] == pytest.approx(1.0 / q, abs=1e-12)


@pytest.mark.parametrize("name", ERK_ALL)
def test_ark_without_fi_equals_erk(name):
    f = lambda t, y: np.array([-y[0] + np.sin(t), y[0] * y[1] - t])  # noqa: E731
    y = np.array([1.0, 0.5])
    a = ErkStepper(f, name).attempt(0.3, y, 0.1)
    b = ArkStepper(fe=f, table=name).attempt(0.3, y, 0.1, ctx_for(y))
    assert np.max(np.abs(a.y - b.y)) <= 1e-14
    if a.T is not None:
        assert np.max(np.abs(a.T - b.T)) <= 1e-14


def test_backward_euler_closed_form():
    be = ButcherTable(A=[[1.0]], b=[1.0], c=[1.0], kind="dirk", q=1)
    lam, h = -50.0, 0.1
    st = ArkStepper(fi=lambda t, y: lam * y, table=be, newton=NewtonConfig(maxiters=5))
    y = np.array([2.0])
    att = st.attempt(0.0, y, h, ctx_for(y, 1e8))
    assert att.y[0] == pytest.approx(2.0 / (1 - h * lam), rel=1e-10)


@pytest.mark.parametrize("name", dirk_names())
def test_dirk_slopes(name):
    q, s, _ = global_slopes(name)
    assert s.min() >= q - 0.25
    p, es = embedded_slopes(name)
    assert es.min() >= p + 0.75


@pytest.mark.parametrize("name", ["ark324l2sa", "ark436l2sa"])
def test_imex_slopes(name):
    q, s, _ = global_slopes(name)
    assert s.min() >= q - 0.25
    p, es = embedded_slopes(name)
    assert es.min() >= p + 0.75


@pytest.mark.parametrize("theta", [0.0, 1.0, 0.3])
def test_imex_split_consistency(theta):
    lam = -2.0
    errs = []
    for n in (10, 20, 40, 80):
        fe = lambda t, y: theta * lam * y  # noqa: E731
        fi = lambda t, y: (1 - theta) * lam * y  # noqa: E731
        st = ArkStepper(fe=fe, fi=fi, table="ark324l2sa",
                        jac_fn=lambda t, y: (1 - theta) * lam * np.eye(1),
                        linearly_implicit=True)
        it = Integrator(st, 0.0, np.ones(1), fixed_step=1.0 / n)
        _, y, _ = it.evolve(1.0, "normal-tstop")
        errs.append(abs(y[0] - np.exp(lam)))
    assert abs(slopes(errs)[-1] - 3.0) <= 0.25


def test_full_rhs_partitions_and_mass():
    st = ArkStepper(fe=lambda t, y: np.sin(t) + 0 * y, table="bogacki_shampine_3_2")
    assert st.full_rhs(0.5, np.zeros(1))[0] == pytest.approx(np.sin(0.5))
    m = MassOperator(DenseMatrix(2.0 * np.eye(2)))
    st = ArkStepper(fe=lambda t, y: y, fi=lambda t, y: y, table="ark324l2sa", mass=m)
    y = np.array([1.0, -3.0])
    assert np.allclose(st.full_rhs(0.0, y), y)
    assert st.stats.mass_solves == 1


def test_mass_matrix_matches_identity_problem():
    m = MassOperator(DenseMatrix(np.array([[2.0, 0.5], [0.0, 1.0]])))
    Mi = np.linalg.inv(m.matrix.to_dense())
    A = np.array([[-1.0, 0.2], [0.1, -3.0]])
    f = lambda t, y: A @ y  # noqa: E731
    g = lambda t, y: Mi @ (A @ y)  # noqa: E731
    outs = []
    for fi, mass in ((f, m), (g, None)):
        st = ArkStepper(fi=fi, table="ark324l2sa_dirk_3_2", mass=mass,
                        newton=NewtonConfig(maxiters=8))
        it = Integrator(st, 0.0, np.array([1.0, 1.0]), fixed_step=0.05,
                        tol=Tolerances(1e-12, 1e-14))
        outs.append(it.evolve(1.0, "normal-tstop")[1])
    assert np.allclose(outs[0], outs[1], rtol=1e-9, atol=1e-12)


def test_fixedpoint_mass_path():
    m = MassOperator(DenseMatrix(2.0 * np.eye(1)))
    st = ArkStepper(fi=lambda t, y: -2.0 * y, table="ark324l2sa_dirk_3_2", mass=m,
                    nls="fixedpoint")
    it = Integrator(st, 0.0, np.ones(1), tol=Tolerances(1e-8, 1e-10))
    _, y, _ = it.evolve(1.0)
    assert y[0] == pytest.approx(np.exp(-1.0), rel=1e-6)


def test_implicit_stats_reconcile():
    calls = [0]
    A = -np.array([[100.0, 1.0], [0.0, 2.0]])

    def fi(t, y):
        calls[0] += 1
        return A @ y + np.array([np.sin(t), y[0] ** 2])

    fe_calls = [0]

    def fe(t, y):
        fe_calls[0] += 1
        return np.array([0.0, np.cos(t)])

    st = ArkStepper(fe=fe, fi=fi, table="ark436l2sa")
    it = Integrator(st, 0.0, np.array([1.0, 0.5]), tol=Tolerances(1e-6, 1e-9))
    it.evolve(2.0)
    s = it.get_stats()
    assert s["fi_evals"] + s["fi_evals_jac"] == calls[0]
    assert s["fe_evals"] == fe_calls[0]
    assert s["fe_evals"] <= s["fi_evals"]
    assert s["jac_evals"] >= 1 and s["ls_setups"] >= s["jac_evals"]
    # one base-point call plus one per column
    assert s["fi_evals_jac"] == 3 * s["jac_evals"]


def test_linearly_implicit_one_iteration_per_stage():
    st = ArkStepper(fi=lambda t, y: -5.0 * y, table="ark324l2sa_dirk_3_2",
                    linearly_implicit=True)
    it = Integrator(st, 0.0, np.ones(1), fixed_step=0.1)
    it.evolve(1.0, "normal-tstop")
    implicit_stages = int(np.sum(np.diag(get("ark324l2sa_dirk_3_2").A) != 0))
    assert st.stats.nls_iters == 10 * implicit_stages
    assert st.stats.nls_fails == 0


def test_rhs_failure_recovers():
    def f(t, y):
        if abs(t - 0.3) < 0.05 and not f.tripped:
            f.tripped = True
            return np.array([np.nan])
        return -y

    f.tripped = False
    it = Integrator(ErkStepper(f), 0.0, np.ones(1), tol=Tolerances(1e-6, 1e-9))
    _, y, _ = it.evolve(1.0)
    assert f.tripped and it.stats.rhs_fails >= 1
    assert y[0] == pytest.approx(np.exp(-1.0), rel=1e-4)


def test_configuration_errors():
    with pytest.raises(UsageError):
        ArkStepper()
    with pytest.raises(UsageError):
        ArkStepper(fe=lambda t, y: y, table="ark324l2sa_dirk_3_2")
    with pytest.raises(UsageError):
        ArkStepper(fe=lambda t, y: y, fi=lambda t, y: y, explicit="bogacki_shampine_3_2",
                   implicit="ark436l2sa_dirk_4_3")
    with pytest.raises(UsageError):
        ErkStepper(lambda t, y: y, "ark324l2sa_dirk_3_2")
    with pytest.raises(UsageError):
        Integrator(ErkStepper(lambda t, y: y, "forward_euler_1"), 0.0, np.ones(1))
