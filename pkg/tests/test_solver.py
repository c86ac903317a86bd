import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from mpkin.solver import (
    SolverError,
    SolverOptions,
    ebi_reference_solve,
    finite_difference_jacobian,
    integrate,
)


def robertson(t, y):
    return np.array([-0.04 * y[0] + 1e4 * y[1] * y[2],
                     0.04 * y[0] - 1e4 * y[1] * y[2] - 3e7 * y[1] ** 2,
                     3e7 * y[1] ** 2])


def robertson_jac(t, y):
    return np.array([[-0.04, 1e4 * y[2], 1e4 * y[1]],
                     [0.04, -1e4 * y[2] - 6e7 * y[1], -1e4 * y[1]],
                     [0.0, 6e7 * y[1], 0.0]])


def robertson_pl(y):
    prod = np.array([1e4 * y[1] * y[2], 0.04 * y[0], 3e7 * y[1] ** 2])
    loss = np.array([0.04, 1e4 * y[2] + 3e7 * y[1], 0.0])
    return prod, loss


def test_exponential_decay():
    k = 1e3
    y, stats = integrate(lambda t, y: -k * y, lambda t, y: np.array([[-k]]), [1.0], (0, 0.01),
                         SolverOptions(rel_tol=1e-6, abs_tol=1e-20))
    assert y[0] == pytest.approx(math.exp(-10), rel=1e-4)
    assert stats.steps == len(stats.order_history) and max(stats.order_history) > 1


def test_zero_derivative_single_step():
    y0 = np.array([1.0, 2.0])
    y, stats = integrate(lambda t, y: np.zeros(2), lambda t, y: np.zeros((2, 2)), y0, (0, 100))
    assert np.array_equal(y, y0) and stats.steps == 1


def test_sparse_jacobian_input():
    a = sp.csc_matrix(np.array([[-2.0, 1.0], [1.0, -2.0]]))
    y, _ = integrate(lambda t, y: a @ y, lambda t, y: a, [1.0, 0.0], (0, 1.0),
                     SolverOptions(rel_tol=1e-8, abs_tol=1e-20))
    exact = 0.5 * np.array([math.exp(-1) + math.exp(-3), math.exp(-1) - math.exp(-3)])
    assert np.allclose(y, exact, rtol=1e-6)


@pytest.mark.slow
def test_robertson_against_ebi_and_radau():
    y0 = np.array([1.0, 0.0, 0.0])
    rtol = 1e-4
    y, _ = integrate(robertson, robertson_jac, y0, (0, 40),
                     SolverOptions(rel_tol=rtol, abs_tol=1e-20))
    ebi = ebi_reference_solve(robertson_pl, y0, 1e-3, 40.0, tol=1e-12)
    radau = solve_ivp(robertson, (0, 40), y0, method="Radau", jac=robertson_jac,
                      rtol=1e-12, atol=1e-20).y[:, -1]
    assert np.all(np.abs(y - ebi) / ebi <= 10 * rtol)
    assert np.all(np.abs(y - radau) / radau <= 10 * rtol)


@settings(max_examples=25, deadline=None)
@given(st.floats(10.0, 1e4), st.floats(1e-3, 1.0), st.floats(1e-3, 10.0))
def test_linear_stiff_chain(k_fast, k_slow, t_end):
    # A -> B fast, B -> C slow; compare with the closed form
    m = np.array([[-k_fast, 0, 0], [k_fast, -k_slow, 0], [0, k_slow, 0]])
    y, _ = integrate(lambda t, y: m @ y, lambda t, y: m, [1.0, 0.0, 0.0], (0, t_end),
                     SolverOptions(rel_tol=1e-6, abs_tol=1e-14))
    a = math.exp(-k_fast * t_end)
    b = k_fast / (k_fast - k_slow) * (math.exp(-k_slow * t_end) - a)
    assert np.allclose(y, [a, b, 1.0 - a - b], rtol=1e-4, atol=1e-9)


def test_resumed_history_matches_one_long_solve():
    y0 = np.array([1.0, 0.0, 0.0])
    opts = SolverOptions(rel_tol=1e-6, abs_tol=1e-20)
    full, full_stats = integrate(robertson, robertson_jac, y0, (0, 4.0), opts)
    y, hist, steps = y0, None, 0
    for t0 in np.arange(0.0, 4.0, 0.5):
        y, stats, hist = integrate(robertson, robertson_jac, y, (t0, t0 + 0.5), opts,
                                   history=hist, keep_history=True)
        steps += stats.steps
        assert hist is not None
    assert np.allclose(y, full, rtol=1e-4)
    restart, restart_steps = y0, 0
    for t0 in np.arange(0.0, 4.0, 0.5):
        restart, stats = integrate(robertson, robertson_jac, restart, (t0, t0 + 0.5), opts)
        restart_steps += stats.steps
    assert steps < restart_steps


def test_failure_raises_with_last_state():
    def blowup(t, y):
        return y ** 2

    with pytest.raises(SolverError) as info:
        integrate(blowup, lambda t, y: np.diag(2 * y), [1.0], (0, 2.0),
                  SolverOptions(max_steps=200))
    assert info.value.t < 1.0 and info.value.stats.steps > 0


def test_non_finite_initial_state():
    with pytest.raises(SolverError):
        integrate(lambda t, y: y, lambda t, y: np.eye(1), [math.nan], (0, 1))


@pytest.mark.parametrize("kwargs", [dict(rel_tol=0.0), dict(abs_tol=-1.0), dict(max_order=6),
                                    dict(max_steps=0), dict(nonneg_policy="ignore")])
def test_option_validation(kwargs):
    with pytest.raises(ValueError):
        SolverOptions(**kwargs)


def test_ebi_basics():
    y = ebi_reference_solve(lambda y: (np.zeros(2), np.zeros(2)), [1.0, 3.0], 0.1, 5.0)
    assert np.array_equal(y, [1.0, 3.0])
    k, dt = 0.5, 1e-3
    y = ebi_reference_solve(lambda y: (np.zeros(1), np.full(1, k)), [1.0], dt, 2.0)
    assert y[0] == pytest.approx((1 + k * dt) ** -2000, rel=1e-12)
    assert abs(y[0] - math.exp(-1.0)) < k * dt
    with pytest.raises(ValueError):
        ebi_reference_solve(lambda y: (y, y), [1.0], 0.0, 1.0)


def test_finite_difference_jacobian():
    a = np.array([[1.0, 2.0], [-3.0, 0.5]])
    assert np.allclose(finite_difference_jacobian(lambda y: a @ y, [0.3, -2.0],
                                                  rel_step=1e-5), a, rtol=1e-9)
    j = finite_difference_jacobian(lambda y: y ** 2, [0.0, 0.0])
    assert np.allclose(j, 0.0, atol=1e-15)
