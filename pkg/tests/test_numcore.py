"""Dual numbers, jets, eigen solver and quadrature against closed forms."""

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import eigh

from quadricgauss import numcore as nc
from quadricgauss.errors import DegenerateMetricError, InvalidChartPointError

finite = st.floats(-3.0, 3.0, allow_nan=False)


def sample_map(xs):
    x, y = xs
    return [nc.sin(x) * nc.exp(y), x * x * y + nc.cos(y), nc.sqrt(1.0 + x * x) / (2.0 + nc.cos(x * y))]


def sample_map_exact(x, y):
    """Hand-derived value, gradient and Hessian of ``sample_map``."""
    c2 = 2.0 + np.cos(x * y)
    r = np.sqrt(1 + x * x)
    f3 = r / c2
    # derivatives of f3 by the quotient rule, written out
    rx = x / r
    cx, cy = -y * np.sin(x * y), -x * np.sin(x * y)
    f3x = rx / c2 - r * cx / c2 ** 2
    f3y = -r * cy / c2 ** 2
    value = [np.sin(x) * np.exp(y), x * x * y + np.cos(y), f3]
    grad = [[np.cos(x) * np.exp(y), np.sin(x) * np.exp(y)], [2 * x * y, x * x - np.sin(y)], [f3x, f3y]]
    h1 = [[-np.sin(x) * np.exp(y), np.cos(x) * np.exp(y)], [np.cos(x) * np.exp(y), np.sin(x) * np.exp(y)]]
    h2 = [[2 * y, 2 * x], [2 * x, -np.cos(y)]]
    return np.array(value), np.array(grad), np.array([h1, h2])


@given(finite, finite)
def test_dual_first_and_second_derivatives_match_hand_formulas(x, y):
    jt = nc.derivatives(sample_map, np.array([x, y]), order=2)
    v, g, h = sample_map_exact(x, y)
    np.testing.assert_allclose(jt.value, v, rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose(jt.first, g, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(jt.second[:2], h, rtol=1e-12, atol=1e-12)
    # Hessians are symmetric by construction of nested duals
    np.testing.assert_allclose(jt.second, np.swapaxes(jt.second, -1, -2), atol=1e-12)


def test_fd_scheme_agrees_with_dual_to_its_truncation_order():
    p = np.array([0.4, -0.7])
    d = nc.derivatives(sample_map, p, order=2)
    f = nc.derivatives(sample_map, p, order=2, scheme="fd")
    np.testing.assert_allclose(f.first, d.first, atol=1e-9)
    np.testing.assert_allclose(f.second, d.second, atol=1e-6)


def test_batched_points_match_pointwise_evaluation(rng):
    P = rng.uniform(-1, 1, size=(7, 2))
    batch = nc.derivatives(sample_map, P, order=2)
    for i, p in enumerate(P):
        single = nc.derivatives(sample_map, p, order=2)
        np.testing.assert_allclose(batch.second[i], single.second, atol=1e-14)


def test_nested_duals_do_not_confuse_perturbations():
    # d/dx [ x * d/dy (x + y) ] at x = y = 1 equals 1; perturbation confusion would give 2
    x = nc.Dual(1.0, [1.0])
    y = nc.Dual(nc.Dual(1.0, [0.0]), [1.0])
    inner = nc.parts(x + y, 2, 1)[1][0]
    outer = x * inner
    assert nc.primal(outer) == 1.0
    assert nc.parts(outer, 1, 1)[1][0] == 1.0


def test_arctan2_and_complex_helpers():
    x = nc.Dual(1.0, [1.0])
    t = nc.arctan2(x, 1.0)
    assert t.value == pytest.approx(np.pi / 4)
    assert t.partials[0] == pytest.approx(0.5)
    c = nc.Dual(1.0 + 2.0j, [3.0 - 1.0j])
    assert nc.real(c).partials[0] == 3.0
    assert nc.imag(c).partials[0] == -1.0
    assert nc.conj(c).value == 1.0 - 2.0j


@given(st.integers(2, 5), st.integers(0, 2 ** 31 - 1))
def test_cofactor_normal_is_orthogonal_and_positively_oriented(m, seed):
    r = np.random.default_rng(seed)
    cols = r.standard_normal((m - 1, m))
    c = np.array(nc.cofactor_normal([list(col) for col in cols]))
    scale = np.prod(np.linalg.norm(cols, axis=1))
    np.testing.assert_allclose(cols @ c, 0.0, atol=1e-12 * scale * m)
    det = np.linalg.det(np.vstack([cols, c]).T)
    assert det == pytest.approx(c @ c, rel=1e-10)
    # its length is the (m-1)-volume spanned by the columns
    gram = cols @ cols.T
    assert np.sqrt(c @ c) == pytest.approx(np.sqrt(np.linalg.det(gram)), rel=1e-10)


@pytest.mark.filterwarnings("ignore:invalid value encountered in log")
def test_jacobian_rejects_non_finite_output():
    with pytest.raises(InvalidChartPointError):
        nc.jacobian(lambda xs: [nc.log(xs[0])], np.array([-1.0]))


@given(st.integers(1, 5), st.integers(0, 2 ** 31 - 1))
def test_generalized_eigensolver_against_scipy(n, seed):
    r = np.random.default_rng(seed)
    A = r.standard_normal((n, n))
    G = A @ A.T + n * np.eye(n)
    S = r.standard_normal((n, n))
    S = S + S.T
    res = nc.generalized_sym_eig(S, G)
    ref = eigh(S, G, eigvals_only=True)[::-1]
    np.testing.assert_allclose(res.eigenvalues, ref, rtol=1e-10, atol=1e-10)
    V = res.eigenvectors
    np.testing.assert_allclose(V.T @ G @ V, np.eye(n), atol=1e-10)
    np.testing.assert_allclose(S @ V, G @ V * res.eigenvalues, atol=1e-9)


def test_eigensolver_is_deterministic_inside_clusters():
    G = np.diag([2.0, 1.0, 3.0])
    S = 5.0 * G
    res = nc.generalized_sym_eig(S, G)
    np.testing.assert_allclose(res.eigenvalues, [5.0, 5.0, 5.0])
    # coordinate axes, G-normalized, in order
    np.testing.assert_allclose(res.eigenvectors, np.diag(1 / np.sqrt([2.0, 1.0, 3.0])), atol=1e-12)


def test_eigensolver_rejects_indefinite_metric():
    with pytest.raises(DegenerateMetricError):
        nc.generalized_sym_eig(np.eye(2), np.diag([1.0, 0.0]))


def test_align_frame_restores_reference_signs():
    G = np.eye(2)
    res = nc.generalized_sym_eig(np.diag([2.0, 1.0]), G)
    ref = -res.eigenvectors
    np.testing.assert_allclose(nc.align_frame(ref, res, G), ref)


def test_cumulative_integral_is_exact_for_cubics_on_uneven_grids():
    x = np.sort(np.concatenate([[0.0, 2.0], np.random.default_rng(3).uniform(0, 2, 11)]))
    y = 1 - 2 * x + 3 * x ** 2 - x ** 3
    start = 4
    F = lambda s: s - s ** 2 + s ** 3 - s ** 4 / 4
    np.testing.assert_allclose(nc.cumulative_integral(y, x, start), F(x) - F(x[start]), atol=1e-13)


def test_cumulative_integral_converges_at_fourth_order():
    errs = []
    for N in (65, 129, 257):
        x = np.linspace(0, 3, N)
        out = nc.cumulative_integral(np.cos(x), x, 0)
        errs.append(np.max(np.abs(out - np.sin(x))))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 3.85)


def test_simpson_rule_integrates_cubics_exactly():
    t, w = nc.simpson_rule(0.0, 1.0, 6)
    assert w.sum() == pytest.approx(1.0)
    assert np.sum(w * t ** 3) == pytest.approx(0.25, abs=1e-15)


def test_spawned_generators_are_reproducible_and_independent():
    a = [g.random(3) for g in nc.spawn_rngs(5, 3)]
    b = [g.random(3) for g in nc.spawn_rngs(5, 3)]
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a[0], a[1])
