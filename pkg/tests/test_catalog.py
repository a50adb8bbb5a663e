"""Closed-form catalog entries."""

import numpy as np
import pytest

from quadricgauss import catalog as cat
from quadricgauss import numcore as nc
from quadricgauss.errors import InvalidParameterError
from quadricgauss.sphere import position, principal_data, unit_normal


@pytest.mark.parametrize("entry", [e for e in cat.catalog_list() if e.expected_lambdas is not None],
                         ids=lambda e: e.spec)
def test_principal_data_matches_closed_forms(entry):
    p = entry.patch.sample(nc.make_rng(3), 100)
    pd = principal_data(entry.patch, p)
    np.testing.assert_allclose(pd.lambdas, entry.expected_lambdas(p), atol=1e-6)
    np.testing.assert_allclose(unit_normal(entry.patch, p), entry.expected_normal(p), atol=1e-12)
    # expected angles satisfy lambda = cot theta identically
    np.testing.assert_allclose(1 / np.tan(entry.expected_thetas(p)), entry.expected_lambdas(p), atol=1e-12)


def test_named_examples():
    g = cat.geodesic_sphere(2, np.pi / 4)
    np.testing.assert_allclose(g.expected_lambdas(g.patch.center), [1, 1])
    np.testing.assert_allclose(g.expected_thetas(g.patch.center), [np.pi / 4] * 2)
    c = cat.clifford_torus(np.pi / 4)
    np.testing.assert_allclose(c.expected_lambdas(c.patch.center), [1, -1])
    gc = cat.generalized_clifford(2, 1, np.pi / 3)
    np.testing.assert_allclose(gc.expected_lambdas(gc.patch.center), [0.57735027, -1.73205081, -1.73205081])


def test_charts_stay_on_the_unit_sphere():
    for entry in cat.catalog_list():
        p = entry.patch.sample(nc.make_rng(0), 20)
        np.testing.assert_allclose(np.linalg.norm(position(entry.patch, p), axis=-1), 1.0, atol=1e-14)


def test_invalid_parameters():
    for bad in (lambda: cat.geodesic_sphere(2, 0.0), lambda: cat.clifford_torus(np.pi / 2),
                lambda: cat.generalized_clifford(0, 1, 0.5), lambda: cat.generalized_clifford(2, 1, 0.5, n=4),
                lambda: cat.great_sphere(0), lambda: cat.perturbed_graph(1, 0.1)):
        with pytest.raises(InvalidParameterError):
            bad()


def test_parse_entry_grammar():
    e = cat.parse_entry("clifford:rho=0.7853981633974483")
    assert e.name == "clifford" and e.params["rho"] == pytest.approx(np.pi / 4)
    assert cat.parse_entry("geodesic:n=3,rho=0.5").patch.n == 3
    assert cat.parse_entry("great:n=2").spec == "great:n=2"
    assert cat.parse_entry(cat.parse_entry("gclifford:p=2,q=1,rho=1.0").spec).patch.n == 3
    for bad in ("nosuch", "clifford:rho", "clifford:radius=1", "geodesic:n=two,rho=1"):
        with pytest.raises(InvalidParameterError):
            cat.parse_entry(bad)


def test_perturbed_graph_reduces_to_clifford_and_is_not_isoparametric():
    base = cat.clifford_torus(np.pi / 4)
    flat = cat.perturbed_graph(2, 0.0)
    p = base.patch.sample(nc.make_rng(1), 50)
    np.testing.assert_allclose(position(flat.patch, p), position(base.patch, p), atol=1e-15)
    np.testing.assert_allclose(principal_data(flat.patch, p).lambdas, base.expected_lambdas(p), atol=1e-12)
    # regression bound: the spread of some principal curvature is at least eps/2
    for eps in (0.005, 0.01, 0.03, 0.05):
        lam = principal_data(cat.perturbed_graph(2, eps).patch, p).lambdas
        assert np.max(lam.max(axis=0) - lam.min(axis=0)) >= eps / 2


def test_lemma2_curves_live_on_stiefel_and_alternate_twist():
    from quadricgauss.quadric import stiefel_defect
    curves = cat.lemma2_curves(6, seed=2)
    assert len(curves) == 6
    for i, c in enumerate(curves):
        assert stiefel_defect(c(0.01)) < 1e-13
        assert ("twist=0.000000" in c.label) == (i % 2 == 0)


def test_non_lagrangian_surface_is_a_stiefel_surface():
    from quadricgauss.quadric import stiefel_defect
    lift, lo, hi = cat.non_lagrangian_surface()
    z = nc.derivatives(lift, np.array([[0.1, -0.2], [0.3, 0.4]]), order=0).value
    assert np.max(stiefel_defect(z)) < 1e-15
