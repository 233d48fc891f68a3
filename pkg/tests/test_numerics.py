import numpy as np
import pytest

from edslab import Grid, GridFunction, integrate, solve_dense, solve_linear_ode


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(-1.0, 10)
    with pytest.raises(ValueError):
        Grid(1.0, 1)
    g = Grid(2.0, 5)
    assert g.points[0] == 0.0 and g.points[-1] == 2.0
    assert g.spacing == 0.5


def test_gridfunction_interpolation_and_support():
    g = Grid(1.0, 11)
    f = GridFunction.from_callable(g, lambda x: x)
    assert f(0.55) == pytest.approx(0.55)
    assert f(-0.5) == 0.0 and f(1.5) == 0.0  # compact support
    assert np.allclose(f(np.array([0.25, 2.0])), [0.25, 0.0])


def test_integrate_constant_and_linear():
    g = Grid(1.0, 33)
    one = GridFunction.from_callable(g, lambda x: np.ones_like(x))
    lin = GridFunction.from_callable(g, lambda x: x)
    assert integrate(one, 0.0, 1.0) == pytest.approx(1.0)
    assert integrate(lin, 0.0, 1.0) == pytest.approx(0.5)


def test_integrate_oscillatory_against_antiderivative():
    g = Grid(1.0, 2001)
    f = GridFunction.from_callable(g, lambda x: np.exp(2j * x))
    exact = (np.exp(2j) - 1.0) / 2j
    assert abs(integrate(f, 0.0, 1.0) - exact) <= 1e-6


def test_integrate_linear_in_f_and_additive():
    g = Grid(1.0, 57)
    rng = np.random.default_rng(0)
    a = GridFunction(g, rng.standard_normal(57) + 1j * rng.standard_normal(57))
    b = GridFunction(g, rng.standard_normal(57) + 1j * rng.standard_normal(57))
    lhs = integrate(GridFunction(g, 2.0 * a.values + 3j * b.values), 0.1, 0.9)
    rhs = 2.0 * integrate(a, 0.1, 0.9) + 3j * integrate(b, 0.1, 0.9)
    assert abs(lhs - rhs) < 1e-13
    # additivity over adjacent intervals, endpoints off the grid
    total = integrate(a, 0.0, 1.0)
    split = integrate(a, 0.0, 0.437) + integrate(a, 0.437, 1.0)
    assert abs(total - split) < 1e-13


def test_integrate_rejects_reversed_bounds():
    g = Grid(1.0, 11)
    f = GridFunction.zero(g)
    with pytest.raises(ValueError):
        integrate(f, 0.7, 0.3)
    with pytest.raises(ValueError):
        integrate(f, -0.1, 0.5)


def test_ode_zero_field_constant_trajectory():
    traj = solve_linear_ode(lambda x: np.zeros((2, 2)), 0.0, 1.0,
                            np.array([1.0, 0.0]), 16)
    assert np.allclose(traj, traj[0])


def test_ode_backward_exponential():
    k = 2.0
    field = lambda x: np.array([[1j * k]])
    traj = solve_linear_ode(field, 1.0, 0.0, np.array([np.exp(1j * k)]), 10_000)
    assert abs(traj[-1][0] - 1.0) <= 1e-8


def test_ode_fourth_order_convergence():
    k = 2.0
    field = lambda x: np.array([[1j * k]])

    def err(steps):
        traj = solve_linear_ode(field, 1.0, 0.0, np.array([np.exp(1j * k)]), steps)
        return abs(traj[-1][0] - 1.0)

    assert err(64) / err(128) >= 12.0


def test_ode_constant_matrix_against_cosh_sinh():
    c, k = 1.5, 0.7 + 0.3j
    m = np.array([[1j * k, -c], [-c, -1j * k]])
    mu = np.sqrt(c * c - k * k)
    y0 = np.array([np.exp(1j * k), 0.0])
    traj = solve_linear_ode(lambda x: m, 1.0, 0.0, y0, 4096)
    expm = np.cosh(mu) * np.eye(2) - np.sinh(mu) / mu * m
    assert np.max(np.abs(traj[-1] - expm @ y0)) <= 1e-10


def test_ode_rejects_non_finite_field():
    with pytest.raises(ValueError):
        solve_linear_ode(lambda x: np.array([[np.inf]]), 0.0, 1.0,
                         np.array([1.0]), 4)


def test_solve_dense_identity_and_diagonal():
    b = np.array([1.0 + 2j, -3.0])
    assert np.allclose(solve_dense(np.eye(2), b), b)
    x = solve_dense(np.array([[2.0, 0.0], [0.0, 4.0]]), np.array([2.0, 4.0]))
    assert np.allclose(x, [1.0, 1.0])


def test_solve_dense_residual_on_random_system():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((50, 50)) + 1j * rng.standard_normal((50, 50))
    a += 10.0 * np.eye(50)  # keep it well conditioned
    b = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    x = solve_dense(a, b)
    resid = np.linalg.norm(a @ x - b)
    bound = 1e-10 * (np.linalg.norm(a) * np.linalg.norm(x) + np.linalg.norm(b))
    assert resid <= bound


def test_solve_dense_rejects_singular():
    a = np.array([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(ValueError):
        solve_dense(a, np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        solve_dense(np.zeros((2, 2)), np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        solve_dense(np.eye(3), np.array([1.0, 1.0]))
