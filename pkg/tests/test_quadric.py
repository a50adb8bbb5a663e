"""Quadric geometry: Stiefel points, almost product structures and curvature."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from quadricgauss import numcore as nc
from quadricgauss import quadric as qd
from quadricgauss.errors import BaseMismatchError, NotOnStiefelError, StepUnderflowError

seeds = st.integers(0, 2 ** 31 - 1)
dims = st.integers(2, 5)
gauges = st.floats(0.0, 2 * np.pi)


def _setup(n, seed):
    r = np.random.default_rng(seed)
    z = qd.random_stiefel(n, r)
    return z, r


def grassmann_sectional(w1, w2):
    """Sectional curvature of the oriented Grassmannian G(2, m), independently of R.

    A tangent vector w = x + i y at the plane span(u, v) is the pair of
    normal vectors N = [x, y] (the derivative of the orthonormal basis).  For
    the symmetric space SO(m)/SO(2)xSO(m-2) with the metric g = Re herm,
    K = (|N1^T N2 - N2^T N1|^2 + |N1 N2^T - N2 N1^T|^2) / area^2.
    """
    N1 = np.stack([w1.real, w1.imag], axis=1)
    N2 = np.stack([w2.real, w2.imag], axis=1)
    A = N1.T @ N2 - N2.T @ N1
    B = N1 @ N2.T - N2 @ N1.T
    g11, g22, g12 = (np.real(np.vdot(a, b)) for a, b in ((w1, w1), (w2, w2), (w1, w2)))
    return (np.sum(A ** 2) + np.sum(B ** 2)) / (g11 * g22 - g12 ** 2)


def test_stiefel_validation():
    with pytest.raises(NotOnStiefelError):
        qd.StiefelPoint(np.array([1, 0, 0, 0], complex))
    z = qd.StiefelPoint(np.array([1, 1j, 0, 0]) / np.sqrt(2))
    assert z.n == 2
    np.testing.assert_allclose(qd.projector(z.z), qd.projector(z.rotated(0.7).z), atol=1e-15)


def test_tangent_validation_and_base_mismatch():
    z, r = _setup(2, 1)
    with pytest.raises(NotOnStiefelError):
        qd.QuadricTangent(z, z.z)        # vertical, not horizontal
    with pytest.raises(NotOnStiefelError):
        qd.QuadricTangent(z, np.conj(z.z))
    X = qd.random_tangent(z, r)
    other = qd.random_stiefel(2, r)
    with pytest.raises(BaseMismatchError):
        qd.apply_A(qd.ProductStructureChoice(other), X)
    with pytest.raises(BaseMismatchError):
        qd.g(X, qd.random_tangent(other, r))


@given(dims, seeds, gauges)
def test_lemma1_involution_symmetry_anticommutation(n, seed, phi):
    z, r = _setup(n, seed)
    X, Y = qd.random_tangent(z, r), qd.random_tangent(z, r)
    rep = qd.check_lemma1(qd.ProductStructureChoice(z, phi), X, Y)
    assert rep.worst <= 1e-12


@given(dims, seeds, gauges)
def test_sectional_curvature_matches_grassmannian_oracle(n, seed, phi):
    z, r = _setup(n, seed)
    X, Y = qd.random_tangent(z, r), qd.random_tangent(z, r)
    K = qd.sectional_curvature(qd.ProductStructureChoice(z, phi), X, Y)
    assert K == pytest.approx(grassmann_sectional(X.w, Y.w), rel=1e-10, abs=1e-10)


@given(dims, seeds, gauges)
def test_curvature_tensor_symmetries(n, seed, phi):
    z, r = _setup(n, seed)
    x, y, w, v = (qd.random_tangent(z, r).w for _ in range(4))
    R = lambda a, b, c: qd.curvature_array(a, b, c, phi)
    R4 = lambda a, b, c, d: nc.re_inner(R(a, b, c), d)
    assert np.linalg.norm(R(x, y, w) + R(y, x, w)) < 1e-12
    assert abs(R4(x, y, w, v) + R4(x, y, v, w)) < 1e-12
    assert abs(R4(x, y, w, v) - R4(w, v, x, y)) < 1e-12
    assert np.linalg.norm(R(x, y, w) + R(y, w, x) + R(w, x, y)) < 1e-12


@given(dims, seeds)
def test_curvature_is_gauge_independent(n, seed):
    z, r = _setup(n, seed)
    x, y, w = (qd.random_tangent(z, r).w for _ in range(3))
    np.testing.assert_allclose(qd.curvature_array(x, y, w, 0.0), qd.curvature_array(x, y, w, 1.3),
                               atol=1e-13)


def test_holomorphic_plane_fixed_by_A_has_curvature_two():
    # Frozen by brute force: at z = (e1 + i e2)/sqrt2, X = e3 satisfies A X = -X and
    # R(X, JX)X = -2 JX, so K(X, JX) = 2 (not the constant-holomorphic value 4)
    z = qd.StiefelPoint(np.array([1, 1j, 0, 0]) / np.sqrt(2))
    X = qd.QuadricTangent(z, np.array([0, 0, 1, 0], complex))
    Y = qd.apply_J(X)
    choice = qd.ProductStructureChoice(z)
    np.testing.assert_allclose(qd.apply_A(choice, X).w, -X.w)
    RXY = qd.curvature_R(choice, X, Y, X)
    np.testing.assert_allclose(RXY.w, -2 * Y.w, atol=1e-15)
    assert qd.g(RXY, Y) == pytest.approx(-2.0)
    assert qd.sectional_curvature(choice, X, Y) == pytest.approx(2.0)


def test_holomorphic_plane_orthogonal_to_A_has_curvature_four():
    z = qd.StiefelPoint(np.array([1, 1j, 0, 0]) / np.sqrt(2))
    w = np.array([0, 0, 1, 1j]) / np.sqrt(2)   # A w = -conj(w) is orthogonal to w and iw
    X = qd.QuadricTangent(z, w)
    K = qd.sectional_curvature(qd.ProductStructureChoice(z), X, qd.apply_J(X))
    assert K == pytest.approx(4.0)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_einstein_constant_is_2n(n):
    r = np.random.default_rng(n)
    z = qd.random_stiefel(n, r)
    c, res = qd.ricci_check(qd.ProductStructureChoice(z, 0.4), qd.tangent_basis(z))
    assert c == pytest.approx(2 * n, abs=1e-10)
    assert res < 1e-10


def test_tangent_basis_is_orthonormal_and_horizontal():
    z, _ = _setup(3, 9)
    B = qd.tangent_basis(z)
    G = np.real(B.conj() @ B.T)
    np.testing.assert_allclose(G, np.eye(6), atol=1e-14)
    for b in B:
        qd.QuadricTangent(z, b)


def test_sectional_range_of_q2_is_zero_to_four():
    z, _ = _setup(2, 11)
    sr = qd.sectional_range(qd.ProductStructureChoice(z), 20000, nc.make_rng(0))
    assert -1e-9 <= sr.min <= sr.sampled_min
    assert sr.sampled_max <= sr.max <= 4 + 1e-9
    assert sr.max >= 4 - 1e-6 and sr.min <= 1e-6


def _twisted_curve(k):
    z0 = np.array([1, 1j, 0, 0, 0]) / np.sqrt(2)

    def curve(s):
        c, si = np.cos(s), np.sin(s)
        u = np.array([c, 0, si, 0, 0])
        v = np.array([0, np.cos(0.5 * s), 0, np.sin(0.5 * s), 0])
        return np.exp(1j * k * s) * (u + 1j * v) / np.sqrt(2)
    return curve, z0


@pytest.mark.parametrize("k", [0.0, 0.8, -1.7])
def test_lemma2_decomposition_and_s_equals_minus_twice_twist(k):
    curve, _ = _twisted_curve(k)
    rep = qd.check_lemma2(curve, 0.3)
    assert rep.rest < 1e-8
    # the fiber speed of the curve is Im herm(z', z) = k, and s = -2k
    assert rep.s == pytest.approx(-2 * k, abs=1e-8)


def test_lemma2_step_underflow():
    curve, _ = _twisted_curve(0.0)
    with pytest.raises(StepUnderflowError):
        qd.check_lemma2(curve, 0.0, h=1e-16)
