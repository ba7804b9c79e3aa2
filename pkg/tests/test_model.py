import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adic import (GeneralProblem, NoisyGradientWrapper, Problem, add_slacks,
                  catalog_build, catalog_list, mini_suite, project_to_box)
from adic.catalog import reference_objective
from adic.model import noisy_grad

INF = float("inf")


def _vec(*v):
    return np.array(v, dtype=float)


# ---------------------------------------------------------------- project_to_box

def test_project_clamps_negative_coordinate():
    assert np.array_equal(project_to_box(_vec(-1, 2), _vec(0, 0), _vec(INF, INF)),
                          _vec(0, 2))


def test_project_identity_on_feasible_point():
    assert np.array_equal(project_to_box(_vec(0.5), _vec(0), _vec(1)), _vec(0.5))


def test_project_clamps_both_sides():
    assert np.array_equal(project_to_box(_vec(3, -3), _vec(-1, -1), _vec(1, 1)),
                          _vec(1, -1))


@given(st.lists(st.floats(-100, 100), min_size=1, max_size=8))
def test_project_always_within_bounds(xs):
    x = np.array(xs)
    n = x.size
    lower, upper = np.full(n, -1.5), np.full(n, 2.5)
    p = project_to_box(x, lower, upper)
    assert np.all(p >= lower) and np.all(p <= upper)
    # median characterization
    for i in range(n):
        assert p[i] == sorted((lower[i], x[i], upper[i]))[1]


# ---------------------------------------------------------------- Problem basics

def test_problem_rejects_bad_bounds():
    with pytest.raises(ValueError):
        Problem(n=1, m=0, lower=_vec(1.0), upper=_vec(0.0), x0=_vec(0.5),
                grad_oracle=lambda x: x, cons_oracle=lambda x: np.zeros(0),
                jac_oracle=lambda x: np.zeros((0, 1)), name="bad")


def test_problem_rejects_m_bigger_than_n():
    with pytest.raises(ValueError):
        Problem(n=1, m=2, lower=_vec(0.0), upper=_vec(1.0), x0=_vec(0.5),
                grad_oracle=lambda x: x, cons_oracle=lambda x: np.zeros(2),
                jac_oracle=lambda x: np.zeros((2, 1)), name="bad")


def test_problem_has_no_objective_oracle():
    p = catalog_build("lq2")
    assert not hasattr(p, "obj_oracle") and not hasattr(p, "f")


# ---------------------------------------------------------------- add_slacks

def _range_problem():
    return GeneralProblem(
        n=1, m=1, lower=_vec(-INF), upper=_vec(INF), x0=_vec(1.0),
        grad_oracle=lambda x: 2.0 * x,
        cons_oracle=lambda x: _vec(x[0] ** 2),
        jac_oracle=lambda x: np.array([[2.0 * x[0]]]),
        c_lower=_vec(0.0), c_upper=_vec(4.0), name="range1")


def test_add_slacks_single_range_row():
    p = add_slacks(_range_problem())
    assert p.n == 2 and p.m == 1
    assert p.lower[1] == 0.0 and p.upper[1] == 4.0
    z = _vec(1.5, 2.0)
    assert p.cons(z)[0] == pytest.approx(1.5 ** 2 - 2.0)
    J = p.jac(z)
    assert J.shape == (1, 2) and J[0, 1] == -1.0


def test_add_slacks_equality_passthrough():
    gp = GeneralProblem(
        n=1, m=1, lower=_vec(-INF), upper=_vec(INF), x0=_vec(1.0),
        grad_oracle=lambda x: x, cons_oracle=lambda x: _vec(x[0] - 1.0),
        jac_oracle=lambda x: np.array([[1.0]]),
        c_lower=_vec(0.0), c_upper=_vec(0.0), name="eq1")
    p = add_slacks(gp)
    assert p.n == 1 and p.m == 1  # no slack appended
    assert p.cons(_vec(3.0))[0] == pytest.approx(2.0)


def test_add_slacks_mixed_rows_jacobian_block():
    gp = GeneralProblem(
        n=2, m=2, lower=np.full(2, -INF), upper=np.full(2, INF), x0=_vec(1.0, 2.0),
        grad_oracle=lambda x: x,
        cons_oracle=lambda x: _vec(x[0] * x[1], x[0] + x[1]),
        jac_oracle=lambda x: np.array([[x[1], x[0]], [1.0, 1.0]]),
        c_lower=_vec(0.0, 1.0), c_upper=_vec(5.0, 1.0), name="mixed")
    p = add_slacks(gp)
    assert p.n == 3 and p.m == 2
    z = _vec(1.0, 2.0, 1.5)
    J = p.jac(z)
    assert J.shape == (2, 3)
    # slack column hits only the range row
    assert J[0, 2] == -1.0 and J[1, 2] == 0.0
    # finite-difference check of the lifted Jacobian
    h = 1e-6
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        fd = (p.cons(z + e) - p.cons(z - e)) / (2 * h)
        assert np.allclose(fd, J[:, j], atol=1e-5)


def test_add_slacks_rejects_crossed_bounds():
    gp = _range_problem()
    gp.c_lower, gp.c_upper = _vec(4.0), _vec(0.0)
    with pytest.raises(ValueError):
        add_slacks(gp)


def test_add_slacks_preserves_feasible_set():
    gp = _range_problem()
    p = add_slacks(gp)
    rng = np.random.default_rng(7)
    for _ in range(50):
        x = rng.uniform(-2.0, 2.0, size=1)
        cval = gp.cons_oracle(x)
        s = np.clip(cval, gp.c_lower, gp.c_upper)
        if not np.allclose(s, cval):
            continue  # x not feasible in the general form
        z = np.concatenate([x, s])
        assert np.max(np.abs(p.cons(z))) <= 1e-12


def test_add_slacks_start_value_clamped():
    gp = _range_problem()
    gp.x0 = _vec(10.0)  # c(x0) = 100 > c_upper
    p = add_slacks(gp)
    assert p.x0[1] == 4.0


# ---------------------------------------------------------------- noisy gradients

def _unit_problem(n=4):
    return Problem(n=n, m=0, lower=np.full(n, -INF), upper=np.full(n, INF),
                   x0=np.zeros(n), grad_oracle=lambda x: np.ones(n),
                   cons_oracle=lambda x: np.zeros(0),
                   jac_oracle=lambda x: np.zeros((0, n)), name="unit")


def test_noise_zero_sigma_is_exact():
    w = NoisyGradientWrapper(inner=_unit_problem(), sigma=0.0, rng_seed=1)
    assert np.array_equal(noisy_grad(w, np.zeros(4)), np.ones(4))


def test_noise_on_zero_gradient_is_zero():
    p = _unit_problem()
    p = Problem(n=2, m=0, lower=np.full(2, -INF), upper=np.full(2, INF),
                x0=np.zeros(2), grad_oracle=lambda x: np.zeros(2),
                cons_oracle=lambda x: np.zeros(0),
                jac_oracle=lambda x: np.zeros((0, 2)), name="zg")
    w = NoisyGradientWrapper(inner=p, sigma=0.5, rng_seed=3)
    assert np.array_equal(noisy_grad(w, np.zeros(2)), np.zeros(2))


def test_noise_determinism_same_seed():
    x = np.zeros(4)
    outs = []
    for _ in range(2):
        w = NoisyGradientWrapper(inner=_unit_problem(), sigma=0.25, rng_seed=42)
        outs.append([noisy_grad(w, x).copy() for _ in range(5)])
    for a, b in zip(*outs):
        assert np.array_equal(a, b)


def test_noise_draw_count_increments():
    w = NoisyGradientWrapper(inner=_unit_problem(), sigma=0.1, rng_seed=5)
    noisy_grad(w, np.zeros(4))
    noisy_grad(w, np.zeros(4))
    assert w.draw_count == 2


def test_noise_monte_carlo_moments():
    n = 10
    p = _unit_problem(n)
    w = NoisyGradientWrapper(inner=p, sigma=0.05, rng_seed=2024)
    draws = np.array([noisy_grad(w, np.zeros(n)) for _ in range(10000)]).ravel()
    assert draws.size == 100000
    assert abs(draws.mean() - 1.0) <= 1e-3
    assert abs(draws.std() - 0.05) <= 2e-3


# ---------------------------------------------------------------- catalog

def test_catalog_list_sorted_and_deterministic():
    a = [e.name for e in catalog_list()]
    b = [e.name for e in catalog_list()]
    assert a == b == sorted(a)
    assert len(a) == len(set(a))


def test_catalog_has_at_least_12_problems():
    assert len(catalog_list()) >= 12
    assert len(mini_suite()) >= 12


def test_catalog_tag_coverage():
    tags = set()
    for e in catalog_list():
        tags.update(e.tags)
    assert "bounds-active" in tags
    assert "slack" in tags
    assert "nonlinear-constraint" in tags
    assert "infeasible" in tags


def test_catalog_unknown_name():
    with pytest.raises(KeyError):
        catalog_build("no-such-problem")


def test_lq2_shape_and_solution():
    p = catalog_build("lq2")
    assert p.n == 2 and p.m == 1
    assert np.array_equal(p.known_solution, _vec(1, 0))
    sol = p.known_solution
    assert abs(p.cons(sol)[0]) <= 1e-12
    # at (1,0) the gradient is (-1, 0); feasible tangential rays (-t, t)
    # have nonnegative slope, so the point is critical
    g = p.grad(sol)
    assert g[0] == pytest.approx(-1.0) and g[1] == pytest.approx(0.0)


def test_circle_known_solution_satisfies_lagrange():
    p = catalog_build("circle")
    sol = p.known_solution
    assert np.max(np.abs(p.cons(sol))) <= 1e-12
    g, J = p.grad(sol), p.jac(sol)
    lam = -float(J[0] @ g) / float(J[0] @ J[0])
    assert np.max(np.abs(g + lam * J[0])) <= 1e-10


def test_all_known_solutions_feasible():
    for e in catalog_list():
        p = catalog_build(e.name)
        if p.known_solution is None:
            continue
        sol = p.known_solution
        assert np.all(sol >= p.lower - 1e-10) and np.all(sol <= p.upper + 1e-10)
        if e.name == "wall":
            continue  # infeasible by design
        assert np.max(np.abs(p.cons(sol))) <= 1e-9, e.name


def _random_inbounds(rng, p):
    lo = np.where(np.isfinite(p.lower), p.lower, -2.0)
    hi = np.where(np.isfinite(p.upper), p.upper, 2.0)
    hi = np.maximum(hi, lo)
    return lo + (hi - lo) * rng.random(p.n)


def test_jacobians_match_finite_differences():
    rng = np.random.default_rng(11)
    h = 1e-6
    for e in catalog_list():
        p = catalog_build(e.name)
        for _ in range(100):
            x = _random_inbounds(rng, p)
            J = p.jac(x)
            assert J.shape == (p.m, p.n)
            for j in range(p.n):
                ej = np.zeros(p.n)
                ej[j] = h
                fd = (p.cons(x + ej) - p.cons(x - ej)) / (2 * h)
                scale = 1.0 + np.max(np.abs(J))
                assert np.max(np.abs(fd - J[:, j])) <= 1e-5 * scale, e.name


def test_gradients_match_reference_objectives():
    rng = np.random.default_rng(13)
    h = 1e-6
    for e in catalog_list():
        p = catalog_build(e.name)
        f = reference_objective(e.name)
        assert f is not None, e.name
        for _ in range(100):
            x = _random_inbounds(rng, p)
            g = p.grad(x)
            for j in range(p.n):
                ej = np.zeros(p.n)
                ej[j] = h
                fd = (f(x + ej) - f(x - ej)) / (2 * h)
                scale = 1.0 + abs(g[j])
                assert abs(fd - g[j]) <= 1e-5 * scale, e.name
