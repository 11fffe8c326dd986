import warnings

import numpy as np
import pytest
import scipy.sparse as sp

from dualburgers.newton import LinearSystem, NewtonWarning, SingularMatrixError, newton_solve, solve_linear


def test_identity_solve(rng):
    b = rng.normal(size=7)
    np.testing.assert_allclose(solve_linear(LinearSystem(sp.identity(7, format="csr"), b)), b)


def test_diagonal_solve():
    x = solve_linear(LinearSystem(sp.diags([2.0, 4.0]).tocsr(), np.array([2.0, 8.0])))
    np.testing.assert_allclose(x, [1, 2])


def test_random_system_residual(rng):
    a = rng.normal(size=(50, 50)) + 10 * np.eye(50)
    b = rng.normal(size=50)
    x = solve_linear(LinearSystem(sp.csr_matrix(a), b))
    assert np.max(np.abs(a @ x - b)) / max(1, np.max(np.abs(b))) <= 1e-10


def test_singular_matrix_reports_pivot():
    a = sp.csr_matrix(np.array([[1.0, 2.0, 0.0], [2.0, 4.0, 0.0], [0.0, 0.0, 1.0]]))
    with pytest.raises(SingularMatrixError) as info:
        solve_linear(LinearSystem(a, np.ones(3)))
    assert info.value.pivot is not None


def test_shape_mismatch():
    with pytest.raises(ValueError):
        LinearSystem(sp.identity(3), np.ones(2))
    with pytest.raises(ValueError):
        LinearSystem(np.ones((2, 3)), np.ones(2))


def test_affine_converges_in_one_step(rng):
    a = rng.normal(size=(20, 20)) + 8 * np.eye(20)
    b = rng.normal(size=20)
    x, rep = newton_solve(lambda x: a @ x - b, lambda x: sp.csr_matrix(a), np.zeros(20))
    assert rep.converged and rep.iterations == 1
    assert np.max(np.abs(a @ x - b)) < 1e-10


def test_scalar_quadratic_convergence():
    # Newton on x^2 - 4 from 3: x1 = 13/6, x2 = 313/156, ... errors square each step
    x, rep = newton_solve(lambda x: x**2 - 4, lambda x: np.diag(2 * x), np.array([3.0]), tol=1e-14)
    assert rep.converged and x[0] == pytest.approx(2.0, abs=1e-14)
    h = rep.residual_history
    assert h[1] == pytest.approx((13 / 6) ** 2 - 4, rel=1e-14)
    assert h[2] == pytest.approx((313 / 156) ** 2 - 4, rel=1e-12)
    for k in range(1, len(h) - 1):
        if h[k] > 1e-6:
            assert h[k + 1] < 2 * h[k] ** 2


def test_zero_residual_no_iterations():
    x, rep = newton_solve(lambda x: np.zeros(3), lambda x: sp.identity(3), np.ones(3))
    assert rep.converged and rep.iterations == 0


def test_max_iter_nonconvergence():
    # x^2 + 1 has no real root
    x, rep = newton_solve(lambda x: x**2 + 1, lambda x: np.diag(2 * x), np.array([0.3]), max_iter=4,
                          stagnation_window=100)
    assert not rep.converged and rep.iterations == 4


def test_stagnation_exit_warns():
    calls = {"n": 0}

    def res(x):
        calls["n"] += 1
        return np.array([1e-6])  # residual floor that Newton cannot reduce

    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        _, rep = newton_solve(res, lambda x: sp.identity(1), np.zeros(1), tol=1e-12, stagnation_window=3)
    assert rep.converged and rep.stagnated
    assert any(issubclass(m.category, NewtonWarning) for m in w)


def test_converged_residual_below_tol(rng):
    def res(x):
        return np.tanh(x) - 0.3

    x, rep = newton_solve(res, lambda x: np.diag(1 - np.tanh(x) ** 2), np.zeros(5), tol=1e-12)
    assert rep.converged and np.max(np.abs(res(x))) < 1e-12
    assert rep.residual_history[-1] < 1e-12


def test_step_halving_on_domain_error():
    # residual undefined for x <= 0; a full step from 0.5 lands at negative x
    def res(x):
        if np.any(x <= 0):
            raise ArithmeticError("out of domain")
        return np.log(x) + 2.0

    x, rep = newton_solve(res, lambda x: np.diag(1 / x), np.array([0.5]), tol=1e-12)
    assert rep.converged and rep.halvings > 0
    assert x[0] == pytest.approx(np.exp(-2.0), rel=1e-12)
