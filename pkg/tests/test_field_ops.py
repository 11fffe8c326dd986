import numpy as np
import pytest
from hypothesis import given, strategies as st

from dualburgers.field_ops import (LineSamples, NodalLine, _line_matrices, differentiate_nodal, l2_project_line,
                                   nodes_from_gauss, pair_average, smooth)
from dualburgers.mesh import GAUSS_FRACTIONS, build_mesh


def _gauss_x(nodes):
    f = np.array(GAUSS_FRACTIONS)
    return (nodes[:-1, None] + np.diff(nodes)[:, None] * f).ravel()


def test_nodes_from_gauss_roundtrip():
    nodes = np.array([0.0, 0.1, 0.25, 0.7, 1.0])
    np.testing.assert_allclose(nodes_from_gauss(_gauss_x(nodes)), nodes, atol=1e-15)
    mesh = build_mesh(7, 1, (0.2, 0.9), (0, 1))
    np.testing.assert_allclose(nodes_from_gauss(mesh.gauss_x), mesh.x_nodes, atol=1e-15)


def test_line_matrices_spd():
    rng = np.random.default_rng(3)
    nodes = np.sort(np.concatenate([[0, 1], rng.uniform(0, 1, 8)]))
    m, k = _line_matrices(nodes)
    mm = m.toarray()
    np.testing.assert_allclose(mm, mm.T)
    assert np.linalg.eigvalsh(mm).min() > 0
    assert mm.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(k.toarray() @ np.ones(nodes.size), 0.0, atol=1e-12)


@pytest.mark.parametrize("c", [0.0, 1.0, -3.5])
def test_smooth_constant_exact(c):
    nodes = np.linspace(0, 1, 21)
    gx = _gauss_x(nodes)
    line = smooth(LineSamples(gx, np.full(gx.size, c)), eta=1e-3)
    np.testing.assert_allclose(line.nodal_values, c, atol=1e-13)


@pytest.mark.parametrize("k", [1, 2, 4])
def test_smooth_sine_attenuation(k):
    # u - η u'' = sin(kπx) with zero ends gives sin(kπx)/(1 + η k²π²)
    eta = 1e-2
    nodes = np.linspace(0, 1, 801)
    gx = _gauss_x(nodes)
    line = smooth(LineSamples(gx, np.sin(k * np.pi * gx), (0.0, 0.0)), eta=eta)
    expected = np.sin(k * np.pi * nodes) / (1 + eta * (k * np.pi) ** 2)
    np.testing.assert_allclose(line.nodal_values, expected, atol=2e-5 * k * k)


def test_smooth_boundary_defaults():
    nodes = np.linspace(0, 1, 11)
    gx = _gauss_x(nodes)
    v = gx ** 2
    line = smooth(LineSamples(gx, v, (None, 7.0)))
    assert line.nodal_values[0] == pytest.approx(0.5 * (v[0] + v[1]))
    assert line.nodal_values[-1] == 7.0


def _tv_with_ends(nodes, v, line):
    bc = np.concatenate([[line.nodal_values[0]], v, [line.nodal_values[-1]]])
    return np.abs(np.diff(bc)).sum(), np.abs(np.diff(line.nodal_values)).sum()


@pytest.mark.parametrize("case", ["sine1", "sine3", "step", "spike"])
@pytest.mark.parametrize("eta", [1e-4, 1e-3, 1e-2])
def test_smooth_total_variation_corpus(case, eta):
    nodes = np.linspace(0, 1, 51)
    gx = _gauss_x(nodes)
    v = {"sine1": np.sin(np.pi * gx), "sine3": np.sin(3 * np.pi * gx),
         "step": np.where(gx < 0.5, 1.0, 0.0), "spike": np.where(np.abs(gx - 0.5) < 0.01, 1.0, 0.0)}[case]
    tv_in, tv_out = _tv_with_ends(nodes, v, smooth(LineSamples(gx, v), eta=eta))
    assert tv_out <= tv_in * (1 + 1e-9)
    if case == "spike":
        assert tv_out < tv_in


@given(st.lists(st.floats(-1, 1), min_size=20, max_size=20), st.floats(-5, 5), st.floats(1e-4, 1e-1))
def test_smooth_linear_and_shift_equivariant(vals, c, eta):
    nodes = np.linspace(0, 1, 11)
    gx = _gauss_x(nodes)
    v = np.array(vals)
    a = smooth(LineSamples(gx, v, (0.1, -0.2)), eta=eta).nodal_values
    b = smooth(LineSamples(gx, v + c, (0.1 + c, -0.2 + c)), eta=eta).nodal_values
    np.testing.assert_allclose(b, a + c, atol=1e-11)
    two = smooth(LineSamples(gx, 2 * v, (0.2, -0.4)), eta=eta).nodal_values
    np.testing.assert_allclose(two, 2 * a, atol=1e-11)


def test_smooth_validation():
    nodes = np.linspace(0, 1, 5)
    gx = _gauss_x(nodes)
    with pytest.raises(ValueError):
        smooth(LineSamples(gx, gx), eta=0.0)
    with pytest.raises(ValueError):
        smooth(LineSamples(gx[:2], gx[:2]))
    with pytest.raises(ValueError):
        LineSamples(gx[::-1], gx)
    with pytest.raises(ValueError):
        LineSamples(gx, np.full(gx.size, np.nan))


def test_projection_of_x_squared_single_element():
    # exact L2 projection of x² on [0, 1] onto P1: -1/6 + x
    nodes = np.array([0.0, 1.0])
    gx = _gauss_x(nodes)
    line = l2_project_line(LineSamples(gx, gx ** 2), nodes)
    np.testing.assert_allclose(line.nodal_values, [-1 / 6, 5 / 6], atol=1e-14)


def test_projection_reproduces_linear_and_is_idempotent(rng):
    nodes = np.sort(np.concatenate([[0, 1], rng.uniform(0, 1, 10)]))
    gx = _gauss_x(nodes)
    lin = l2_project_line(LineSamples(gx, 2 * gx - 1), nodes)
    np.testing.assert_allclose(lin.nodal_values, 2 * nodes - 1, atol=1e-12)
    p1 = l2_project_line(LineSamples(gx, np.sin(5 * gx)), nodes)
    p2 = l2_project_line(LineSamples(gx, p1.at_gauss()), nodes)
    np.testing.assert_allclose(p2.nodal_values, p1.nodal_values, atol=1e-12)


def test_projection_constraint():
    nodes = np.linspace(0, 1, 9)
    gx = _gauss_x(nodes)
    line = l2_project_line(LineSamples(gx, gx ** 2), nodes, {0: 0.25})
    assert line.nodal_values[0] == 0.25
    free = l2_project_line(LineSamples(gx, gx ** 2), nodes)
    # the pinned value only disturbs the projection locally
    d = np.abs(line.nodal_values - free.nodal_values)
    assert d[-1] < 1e-4 and np.all(np.diff(d[1:]) < 0)


def test_projection_rejects_foreign_positions():
    nodes = np.linspace(0, 1, 5)
    with pytest.raises(ValueError):
        l2_project_line(LineSamples(np.linspace(0.05, 0.95, 8), np.zeros(8)), nodes)


def test_slopes_of_hat():
    line = NodalLine([0.0, 0.5, 1.0], [0.0, 1.0, 0.0])
    np.testing.assert_array_equal(differentiate_nodal(line), [2.0, 2.0, -2.0, -2.0])


def test_nodal_line_eval_and_gauss():
    line = NodalLine([0.0, 1.0], [1.0, 3.0])
    assert line(0.25) == 1.5
    np.testing.assert_allclose(line.at_gauss(), 1 + 2 * np.array(GAUSS_FRACTIONS))
    with pytest.raises(ValueError):
        NodalLine([0, 1], [1])


def test_pair_average():
    np.testing.assert_array_equal(pair_average([1, 3, 5, 9]), [2, 7])
    np.testing.assert_array_equal(pair_average(np.arange(8.0).reshape(2, 4)), [[0.5, 2.5], [4.5, 6.5]])
