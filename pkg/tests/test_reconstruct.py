"""Converse direction: horizontalization, the parallel family and reconstruction."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from quadricgauss import catalog as cat
from quadricgauss import gaussmap as gm
from quadricgauss import numcore as nc
from quadricgauss import reconstruct as rc
from quadricgauss.errors import DegenerateParameterError, InvalidParameterError, NotLagrangianError
from quadricgauss.quadric import projector, projector_distance
from quadricgauss.sphere import position, unit_normal


def _scramble(amount=0.3):
    return lambda xs: amount * xs[0] * (xs[1] if len(xs) > 1 else 1.0)


def test_horizontal_input_needs_no_gauge():
    entry = cat.clifford_torus(0.7)
    hz = rc.horizontalize(rc.LagrangianPatch.from_hypersurface(entry.patch), resolution=17)
    assert np.max(np.abs(hz.phi)) < 1e-14
    np.testing.assert_allclose(hz.values, hz.lift_grid, atol=1e-15)


def test_sine_scramble_is_undone_at_fourth_order():
    entry = cat.clifford_torus(np.pi / 4)
    lp = rc.LagrangianPatch.from_hypersurface(entry.patch, lambda xs: nc.sin(xs[0]))
    errs = []
    for res in (33, 65, 129):
        hz = rc.horizontalize(lp, resolution=res)
        p = hz.points
        expected = -np.sin(p[..., 0]) + np.sin(lp.base[0])
        errs.append(np.max(np.abs(hz.phi - expected)))
        assert hz.phi[hz.base_index] == 0.0
    assert errs[-1] < 1e-7
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 3.8)
    assert np.max(hz.horizontality_residual()) <= 1e-6


def test_gauge_integration_on_three_dimensional_grid():
    entry = cat.geodesic_sphere(3, 0.9)
    lp = rc.LagrangianPatch.from_hypersurface(entry.patch, lambda xs: 0.2 * xs[0] * xs[1] + 0.1 * xs[2] ** 2)
    hz = rc.horizontalize(lp, resolution=9)
    p = hz.points
    ref = lambda q: 0.2 * q[..., 0] * q[..., 1] + 0.1 * q[..., 2] ** 2
    np.testing.assert_allclose(hz.phi, -(ref(p) - ref(np.asarray(lp.base))), atol=1e-13)


def test_loop_residual_certifies_lagrangian_inputs():
    lp = rc.LagrangianPatch.from_hypersurface(cat.perturbed_graph(2, 0.03).patch, _scramble())
    assert rc.loop_residual(lp.lift, lp.lower, lp.upper, nc.make_rng(0)) <= 1e-6


def test_non_lagrangian_surface_is_rejected():
    lift, lo, hi = cat.non_lagrangian_surface()
    with pytest.raises(NotLagrangianError, match="not Lagrangian or under-resolved"):
        rc.horizontalize(rc.LagrangianPatch(2, lo, hi, lift, (0.0, 0.0)))


def test_lift_family_and_split():
    entry = cat.geodesic_sphere(2, 0.8)
    hz = rc.horizontalize(rc.LagrangianPatch.from_hypersurface(entry.patch), resolution=9)
    p = hz.points
    a, b = position(entry.patch, p), unit_normal(entry.patch, p)
    f0 = nc.derivatives(rc.lift_family(hz, 0.0), p, order=0).value
    f2pi = nc.derivatives(rc.lift_family(hz, 2 * np.pi), p, order=0).value
    np.testing.assert_allclose(f2pi, f0, atol=1e-14)
    A0, B0 = rc.split_lift(f0, None)
    np.testing.assert_allclose(A0, a, atol=1e-14)
    np.testing.assert_allclose(B0, b, atol=1e-14)
    Ah, Bh = rc.split_lift(rc.lift_family(hz, np.pi / 2), p)
    np.testing.assert_allclose(Ah, -b, atol=1e-14)
    np.testing.assert_allclose(Bh, a, atol=1e-14)
    Ap, Bp = rc.split_lift(rc.lift_family(hz, np.pi), p)
    np.testing.assert_allclose(Ap, -a, atol=1e-14)
    np.testing.assert_allclose(Bp, -b, atol=1e-14)
    ft = nc.derivatives(rc.lift_family(hz, 1.234), p, order=0).value
    assert np.max(projector_distance(projector(ft), projector(f0))) <= 1e-12


@given(st.floats(0.2, 1.3), st.floats(-2.0, 2.0), st.integers(0, 1000))
def test_lift_angles_agree_with_angle_spectrum(rho, phase, seed):
    entry = cat.clifford_torus(rho)
    p = entry.patch.sample(nc.make_rng(seed), 3)
    lift = rc.LagrangianPatch.from_hypersurface(entry.patch).lift
    u = complex(np.exp(1j * phase))
    W = nc.derivatives(lambda xs: [u * c for c in lift(xs)], p, order=1).first
    ref = np.sort(gm.fold_angle(gm.angle_spectrum(entry.patch, p).thetas + phase), axis=-1)
    got = rc.lift_angles(W)
    np.testing.assert_allclose(gm.dist_pi(got - ref), 0.0, atol=1e-10)


def test_choose_t_examples():
    t, m = rc.choose_t(np.full((5, 2), np.pi / 2))
    assert t in (0.0, np.pi) and m == pytest.approx(np.pi / 2)
    t, m = rc.choose_t(np.tile([np.pi / 4, 3 * np.pi / 4], (4, 1)))
    assert m == pytest.approx(np.pi / 4)
    assert gm.dist_pi(2 * t) < 1e-12  # t is 0 modulo pi/2
    with pytest.raises(InvalidParameterError):
        rc.choose_t(np.zeros((0, 2)))


@given(st.lists(st.floats(0.01, np.pi), min_size=1, max_size=12))
def test_choose_t_finds_the_largest_gap(angles):
    t, m = rc.choose_t(np.array(angles))
    # exact optimum: half the largest circular gap between the angles modulo pi
    a = np.sort(np.mod(angles, np.pi))
    gaps = np.diff(np.concatenate([a, [a[0] + np.pi]]))
    assert m == pytest.approx(np.max(gaps) / 2, abs=1e-9)
    assert m > 0


def test_reconstruction_of_geodesic_sphere_lands_in_its_parallel_family():
    rho = np.pi / 4
    entry = cat.geodesic_sphere(2, rho)
    rec = rc.reconstruct_hypersurface(rc.LagrangianPatch.from_hypersurface(entry.patch))
    lam = rc.principal_data(rec.patch, rec.points[::8, ::8]).lambdas
    # unscrambled input: phi = 0, so the output is the sphere of radius rho + t*
    np.testing.assert_allclose(lam, 1 / np.tan(rho + rec.t), atol=1e-9)
    assert rec.gauss_fidelity <= 1e-8


def test_reconstruction_is_gauge_independent():
    entry = cat.perturbed_graph(2, 0.03)
    plain = rc.reconstruct_hypersurface(rc.LagrangianPatch.from_hypersurface(entry.patch), t=0.4)
    mixed = rc.reconstruct_hypersurface(
        rc.LagrangianPatch.from_hypersurface(entry.patch, _scramble()), t=0.4)
    # the scramble vanishes at the base point (box center is the origin), so outputs coincide
    p = plain.points
    np.testing.assert_allclose(position(mixed.patch, p), position(plain.patch, p), atol=1e-5)


def test_forbidden_t_is_rejected():
    lp = rc.LagrangianPatch.from_hypersurface(cat.clifford_torus(np.pi / 4).patch)
    with pytest.raises(DegenerateParameterError, match="auto"):
        rc.reconstruct_hypersurface(lp, t=np.pi / 4)
    with pytest.raises(InvalidParameterError):
        rc.reconstruct_hypersurface(lp, t="sometimes")


def test_perturbed_auto_reconstruction_is_immersed():
    entry = cat.perturbed_graph(2, 0.03)
    rec = rc.reconstruct_hypersurface(rc.LagrangianPatch.from_hypersurface(entry.patch, _scramble()))
    assert rec.margin > 1e-3
    assert rec.immersion_min > 1e-6


def test_sampled_lift_round_trip():
    entry = cat.clifford_torus(np.pi / 3)
    src = rc.LagrangianPatch.from_hypersurface(entry.patch, _scramble())
    axes = rc.grid_axes(src.lower, src.upper, 65, src.base)
    vals = src.values(rc.mesh(axes))
    idx = np.ravel_multi_index((32, 32), vals.shape[:-1])
    sampled = rc.LagrangianPatch.from_samples(axes, vals, idx)
    np.testing.assert_allclose(sampled.values(rc.mesh(axes)), vals, atol=1e-13)
    rec = rc.reconstruct_hypersurface(sampled)
    tau, dist = rc.parallel_family_distance(rec.patch, entry.patch, rec.points)
    assert dist <= 1e-5
    assert rec.horizontalization.loop_residual <= 1e-6
    assert rec.gauss_fidelity <= 1e-4


def test_from_samples_validates_shapes():
    with pytest.raises(InvalidParameterError):
        rc.LagrangianPatch.from_samples([np.linspace(0, 1, 5)] * 2, np.zeros((5, 4, 4), complex), 0)
    with pytest.raises(InvalidParameterError):
        rc.LagrangianPatch.from_samples([np.array([0.0, 0.0, 1.0])] * 2, np.zeros((3, 3, 4), complex), 0)


def test_parallel_curvature_law_on_clifford():
    entry = cat.clifford_torus(np.pi / 4)
    p = entry.patch.sample(nc.make_rng(3), 50)
    recs = rc.parallel_curvature_law(entry.patch, [0.0, np.pi / 12, np.pi / 6, np.pi / 4], p, pair=(0, 1))
    assert [r.degenerate for r in recs] == [False, False, False, True]
    r6 = recs[2]
    np.testing.assert_allclose(r6.lambdas, np.tile([0.2679492, -3.7320508], (50, 1)), atol=1e-7)
    for r in recs[:3]:
        assert r.curvature_residual <= 1e-6 and r.angle_residual <= 1e-6
        assert r.projector_distance <= 1e-12
    assert rc.invariant_spread(recs) <= 1e-6


def test_parallel_law_keeps_invariant_on_perturbed_patch():
    entry = cat.perturbed_graph(2, 0.03)
    p = entry.patch.sample(nc.make_rng(4), 30)
    recs = rc.parallel_curvature_law(entry.patch, [0.0, 0.3, 1.0, 2.0], p, pair=(0, 1))
    assert all(not r.degenerate for r in recs)
    assert rc.invariant_spread(recs) <= 1e-6
    assert max(r.curvature_residual for r in recs) <= 1e-6
