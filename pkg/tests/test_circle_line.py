import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dualburgers.circle_line import (CircleLineProblem, DegenerateBaseStateError, NoSolutionError, dtp,
                                     dual_objective, family_member, solve_circle_line)


def test_unit_circle_through_origin():
    sols = solve_circle_line(CircleLineProblem(0.0, 0.0, 1.0))
    pts = sorted((s.x, s.y) for s in sols)
    np.testing.assert_allclose(pts, [(0.0, -1.0), (0.0, 1.0)], atol=1e-15)
    np.testing.assert_allclose(sorted(s.lam for s in sols), [-1.0, 0.0], atol=1e-15)


def test_half_alpha():
    ys = sorted(s.y for s in solve_circle_line(CircleLineProblem(0.5, 0.0, 1.0)))
    np.testing.assert_allclose(ys, [-math.sqrt(0.75), math.sqrt(0.75)], rtol=1e-15)
    assert ys[1] == pytest.approx(0.8660, abs=1e-4)


@pytest.mark.parametrize("alpha", [1.0, -1.0])
def test_tangent_family(alpha):
    (sol,) = solve_circle_line(CircleLineProblem(alpha, 0.3, 0.0))
    assert sol.family
    assert (sol.x, sol.y) == (alpha, 0.0)
    for lam in (-3.0, 0.2, 7.5):
        m = family_member(CircleLineProblem(alpha, 0.3, 0.0), lam)
        assert m.x == pytest.approx(alpha, abs=1e-15) and m.y == 0.0
    with pytest.raises(ValueError):
        family_member(CircleLineProblem(alpha, 0.3, 0.0), -0.5)
    with pytest.raises(ValueError):
        family_member(CircleLineProblem(0.5, 0.3, 0.0), 1.0)


def test_error_contracts():
    with pytest.raises(NoSolutionError):
        solve_circle_line(CircleLineProblem(1.5))
    with pytest.raises(NoSolutionError):
        solve_circle_line(CircleLineProblem(1.0, 0.0, 0.5))
    with pytest.raises(DegenerateBaseStateError):
        solve_circle_line(CircleLineProblem(0.3, 0.0, 0.0))
    with pytest.raises(ValueError):
        CircleLineProblem(float("nan"))
    with pytest.raises(ZeroDivisionError):
        dtp(CircleLineProblem(0.1), -0.5, 0.0)


regular = st.tuples(st.floats(-0.99, 0.99), st.floats(-3, 3),
                    st.floats(0.05, 3).flatmap(lambda v: st.sampled_from([v, -v])))


@given(regular)
def test_primal_equations_satisfied(args):
    prob = CircleLineProblem(*args)
    sols = solve_circle_line(prob)
    assert len(sols) == 2
    for s in sols:
        assert abs(s.x * s.x + s.y * s.y - 1.0) < 1e-12
        assert abs(s.x - prob.alpha) < 1e-12
    assert sols[0].y == pytest.approx(-sols[1].y, abs=1e-12)


def _complex_step_grad(prob, lam, gam, h=1e-30):
    # complex-step differences have no subtractive cancellation
    return (dual_objective(prob, lam + 1j * h, gam).imag / h,
            dual_objective(prob, lam, gam + 1j * h).imag / h)


@given(regular)
def test_dual_gradient_vanishes(args):
    prob = CircleLineProblem(*args)
    for s in solve_circle_line(prob):
        g_lam, g_gam = _complex_step_grad(prob, s.lam, s.gamma)
        assert abs(g_lam) < 1e-10 and abs(g_gam) < 1e-10
        # the central difference agrees up to its rounding floor
        h = 1e-6
        fd = (dual_objective(prob, s.lam + h, s.gamma) - dual_objective(prob, s.lam - h, s.gamma)) / (2 * h)
        assert abs(fd) < 1e-8


def test_dual_gradient_matches_primal_constraints():
    # ∂S/∂λ = x² + y² − 1 and ∂S/∂γ = x − α along the dual-to-primal map
    prob = CircleLineProblem(0.3, 0.2, 0.7)
    lam, gam, h = 0.4, -0.1, 1e-6
    x, y = dtp(prob, lam, gam)
    g_lam = (dual_objective(prob, lam + h, gam) - dual_objective(prob, lam - h, gam)) / (2 * h)
    g_gam = (dual_objective(prob, lam, gam + h) - dual_objective(prob, lam, gam - h)) / (2 * h)
    assert g_lam == pytest.approx(x * x + y * y - 1, abs=1e-9)
    assert g_gam == pytest.approx(x - prob.alpha, abs=1e-9)
