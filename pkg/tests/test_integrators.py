import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from roughham.core import DomainError, Grid
from roughham.geometry import jacobian_fd, symplectic_defect
from roughham.integrators import (
    EXPLICIT_MIDPOINT,
    GAUSS1,
    SolverConfig,
    StepError,
    Tableau,
    fixed_point,
    integrate,
    load_tableau,
    make_stepper,
    step_explicit_rk2,
    step_general_srk,
    step_midpoint,
    step_spark_kubo,
)
from roughham.noise import DriverPath, NoiseSpec, sample_fbm_path
from roughham.systems import KuboParams, make_example1, make_example2, make_kubo

KUBO = make_kubo(KuboParams(1.0, 0.9))
SYSTEMS = [make_example1(), make_example2(2.0), KUBO]
rows = st.lists(st.floats(-0.1, 0.1), min_size=2, max_size=2).flatmap(
    lambda noise: st.floats(0.0, 0.1).map(lambda h: np.array([h] + noise)))
points = st.lists(st.floats(-2, 2), min_size=2, max_size=2).map(np.array)


def test_midpoint_cayley_example():
    # zero noise, h=2: (I - A)^{-1}(I + A) rotates (1,0) to (0,1)
    out = step_midpoint(make_kubo(KuboParams(1.0, 0.0)), np.array([1.0, 0.0]), np.array([2.0, 0, 0]))
    np.testing.assert_allclose(out, [0.0, 1.0], atol=1e-14)


@pytest.mark.parametrize("sys_", SYSTEMS, ids=lambda s: s.label)
def test_zero_increments_fix_every_method(sys_):
    y = np.array([0.7, -0.4])
    zero = np.zeros(3)
    assert np.array_equal(step_midpoint(sys_, y, zero), y)
    assert np.array_equal(step_explicit_rk2(sys_, y, zero), y)
    for tab in (GAUSS1, EXPLICIT_MIDPOINT, Tableau([[0.25, -0.1], [0.3, 0.25]], [0.5, 0.5])):
        assert np.array_equal(step_general_srk(tab, sys_, y, zero), y)


@given(points, rows)
def test_midpoint_preserves_kubo_norm(y, row):
    out = step_midpoint(KUBO, y, row)
    assert np.dot(out, out) == pytest.approx(np.dot(y, y), abs=1e-13)


@given(points.filter(lambda y: np.linalg.norm(y) > 0.1), rows.filter(lambda r: np.abs(r).max() > 1e-3))
def test_erk2_grows_kubo_norm(y, row):
    out = step_explicit_rk2(KUBO, y, row)
    # |Y'|^2 = (1 + phi^4/4)|y|^2 with phi the rotation angle of the step
    phi = 1.0 * row[0] + 0.9 * (row[1] + row[2])
    assert np.dot(out, out) == pytest.approx((1 + phi**4 / 4) * np.dot(y, y), rel=1e-12)


def test_erk2_taylor_expansion_single_noise():
    # drift-free, d=1: Y' = y + V D + V'V D^2/2 + V''VV D^3/8 + O(D^4)
    ex1 = make_example1()
    y = np.array([0.3, 1.1])
    V = lambda x: ex1.eval_V(1, x) + ex1.eval_V(2, x)  # noqa: E731
    DV = lambda x, v: ex1.eval_DV(1, x, v) + ex1.eval_DV(2, x, v)  # noqa: E731
    D2V = lambda x, v, w: ex1.eval_D2V(1, x, v, w) + ex1.eval_D2V(2, x, v, w)  # noqa: E731
    errs = []
    for delta in (1e-2, 5e-3, 2.5e-3):
        out = step_explicit_rk2(ex1, y, np.array([0.0, delta, delta]))
        v = V(y)
        taylor = y + v * delta + DV(y, v) * delta**2 / 2 + D2V(y, v, v) * delta**3 / 8
        errs.append(np.linalg.norm(out - taylor))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 3.8)


def test_spark_kubo_examples():
    out = step_spark_kubo(KuboParams(1.0, 0.0), np.array([1.0, 0.0]), np.array([0.1, 0.0, 0.0]))
    np.testing.assert_allclose(out, [1.0, 0.1])
    y = np.array([0.2, -0.3])
    assert np.array_equal(step_spark_kubo(KuboParams(1.0, 0.9), y, np.zeros(3)), y)


@given(rows)
def test_spark_kubo_has_unit_determinant(row):
    params = KuboParams(1.0, 0.9)
    jac = np.stack([step_spark_kubo(params, e, row) for e in np.eye(2)], axis=1)
    assert np.linalg.det(jac) == pytest.approx(1.0, abs=1e-13)


@pytest.mark.parametrize("method", ["midpoint", "spark-kubo"])
def test_symplectic_methods_have_small_defect(method, rng):
    sys_ = make_example1() if method == "midpoint" else KUBO
    stepper = make_stepper(method, sys_)
    for _ in range(20):
        y = rng.uniform(-2, 2, size=2)
        row = np.concatenate([[rng.uniform(0, 0.1)], rng.uniform(-0.1, 0.1, size=2)])
        assert symplectic_defect(jacobian_fd(lambda x: stepper(x, row), y)) <= 1e-5


def test_erk2_defect_is_not_tolerance_level(rng):
    stepper = make_stepper("erk2", make_example1())
    defects = []
    for _ in range(20):
        y = rng.uniform(-2, 2, size=2)
        row = np.array([0.1, *rng.uniform(-0.1, 0.1, size=2)])
        defects.append(symplectic_defect(jacobian_fd(lambda x: stepper(x, row), y)))
    assert max(defects) > 1e-4


@pytest.mark.parametrize("sys_", SYSTEMS, ids=lambda s: s.label)
def test_srk_tableaus_reproduce_named_methods(sys_, rng):
    for _ in range(20):
        y = rng.uniform(-2, 2, size=2)
        row = np.concatenate([[rng.uniform(0, 0.1)], rng.uniform(-0.2, 0.2, size=2)])
        np.testing.assert_allclose(step_general_srk(GAUSS1, sys_, y, row), step_midpoint(sys_, y, row),
                                   atol=1e-13)
        np.testing.assert_allclose(step_general_srk(EXPLICIT_MIDPOINT, sys_, y, row),
                                   step_explicit_rk2(sys_, y, row), atol=1e-15)


def test_tableau_metadata_and_loading(tmp_path):
    tab = Tableau([[0.25, -0.5], [0.75, 0.25]], [0.5, 0.5])
    assert tab.kappa == 1.0 and tab.mu == 1.0 and not tab.explicit and tab.s == 2
    assert EXPLICIT_MIDPOINT.explicit
    f = tmp_path / "gauss1.txt"
    f.write_text("# one-stage Gauss\n1\n0.5\n1.0\n")
    assert load_tableau(f) == GAUSS1 or np.array_equal(load_tableau(f).a, GAUSS1.a)
    stepper = make_stepper(f"srk:{f}", KUBO)
    y, row = np.array([1.0, 0.0]), np.array([0.05, 0.02, -0.03])
    np.testing.assert_allclose(stepper(y, row), step_midpoint(KUBO, y, row), atol=1e-14)
    (tmp_path / "bad.txt").write_text("2\n0 0\n1 0\n")
    with pytest.raises(DomainError):
        load_tableau(tmp_path / "bad.txt")
    with pytest.raises(DomainError):
        Tableau([[0.5, 0.0]], [1.0])
    with pytest.raises(DomainError):
        Tableau([[math.nan]], [1.0])


def test_fixed_point_failures():
    with pytest.raises(StepError) as info:
        fixed_point(lambda x: 2.0 * x + 1.0, np.array([1.0]))
    assert info.value.iterations >= 2
    with pytest.raises(StepError):
        fixed_point(lambda x: x + 1.0, np.array([0.0]), SolverConfig(1e-14, 5))
    with pytest.raises(StepError):
        fixed_point(lambda x: x * np.inf, np.array([1.0]))
    with pytest.raises(DomainError):
        SolverConfig(0.0)


def test_midpoint_newton_fallback_solves_large_steps():
    sys_ = make_example1()
    y, row = np.array([0.1, 0.2]), np.array([0.1, 40.0, -40.0])
    out = step_midpoint(sys_, y, row)
    F = sys_.combined(row)
    np.testing.assert_allclose(out, y + F.value(0.5 * (y + out)), atol=1e-12)


def test_midpoint_step_error_carries_diagnostics():
    with pytest.raises(StepError) as info:
        step_midpoint(make_example1(), np.array([0.1, 0.2]), np.array([0.1, 400.0, -400.0]),
                      SolverConfig(1e-14, 3))
    assert info.value.iterations == 3 and info.value.residual > 1.0


def test_unknown_method_and_row_checks():
    with pytest.raises(DomainError):
        make_stepper("rk4", KUBO)
    with pytest.raises(DomainError):
        make_stepper("spark-kubo", make_example1())
    with pytest.raises(DomainError):
        step_midpoint(KUBO, np.zeros(2), np.zeros(2))


def test_integrate_one_step_and_step_index():
    path = sample_fbm_path(NoiseSpec(2, 0.5, 1), Grid(1.0, 1))
    stepper = make_stepper("midpoint", KUBO)
    z = np.array([1.0, 0.0])
    traj = integrate(stepper, KUBO, z, path)
    np.testing.assert_array_equal(traj.states[1], stepper(z, path.increments[0]))
    bad = DriverPath(Grid(1.0, 3), np.array([[0.0, 0.0, 0.0], [0.1, 400.0, -400.0], [0.0, 0.0, 0.0]]))
    ex1 = make_example1()
    with pytest.raises(StepError) as info:
        integrate(make_stepper("midpoint", ex1, SolverConfig(1e-14, 3)), ex1, z, bad)
    assert info.value.step_index == 1
    with pytest.raises(DomainError):
        integrate(stepper, KUBO, z, DriverPath(Grid(1.0, 1), np.zeros((1, 2))))


def test_deterministic_kubo_midpoint_is_second_order():
    sys_ = make_kubo(KuboParams(1.0, 0.0))
    z = np.array([1.0, 0.0])
    errs = []
    for n in (16, 32, 64, 128):
        path = DriverPath(Grid(1.0, n), np.column_stack([np.full(n, 1.0 / n), np.zeros((n, 2))]))
        out = integrate(make_stepper("midpoint", sys_), sys_, z, path).final
        errs.append(np.linalg.norm(out - [math.cos(1.0), math.sin(1.0)]))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    np.testing.assert_allclose(rates, 2.0, atol=0.05)


def test_kubo_midpoint_energy_over_long_horizon():
    path = sample_fbm_path(NoiseSpec(2, 0.5, 4), Grid(50.0, 10 * 2**8))
    traj = integrate(make_stepper("midpoint", KUBO), KUBO, np.array([1.0, 0.0]), path)
    energy = np.sum(traj.states**2, axis=1)
    assert np.max(np.abs(energy - 1.0)) <= 1e-8


def test_batched_integration_matches_single_runs():
    from roughham.noise import sample_fbm_paths

    sys_ = make_example1()
    paths = sample_fbm_paths(NoiseSpec(2, 0.4, 3), Grid(1.0, 16), 3)
    stepper = make_stepper("midpoint", sys_)
    z = np.array([1.0, 0.0])
    batch = integrate(stepper, sys_, z[:, None], paths).final
    for i in range(3):
        single = integrate(stepper, sys_, z, paths.sample(i)).final
        np.testing.assert_allclose(batch[:, i], single, atol=1e-13)
