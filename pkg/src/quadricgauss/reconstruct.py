"""Hypersurfaces from Lagrangian immersions into the quadric.

Given any lift ``z`` of a Lagrangian immersion (not necessarily horizontal),
the gauge ``phi`` with ``d phi = -omega``, ``omega = Im herm(dz, z)``, makes
``f0 = e^{i phi} z`` horizontal.  Every ``e^{it} f0`` then splits as
``(a_t + i b_t)/sqrt 2`` into a hypersurface and its unit normal, provided no
angle function hits ``-t`` modulo pi.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import numcore as nc
from .errors import (DegenerateParameterError, GeometryError, InvalidParameterError,
                     NotAnImmersionError, NotLagrangianError)
from .gaussmap import (SQRT2, angle_spectrum, canonical_lift, dist_pi, fold_angle,
                       invariant_from, lift_frame, lift_generic, lift_parallel)
from .quadric import projector, projector_distance, stiefel_defect
from .sphere import HypersurfacePatch, immersion_margin, normal_generic, parallel_patch, position, principal_data

LOOP_TOL = 1e-6
LOOP_COUNT = 20
DEGENERACY_THRESHOLD = 1e-3
SCAN_POINTS = 360
DEFAULT_RESOLUTION = 33
AUTO = "auto"


# ---------------------------------------------------------------------------
# input lifts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LagrangianPatch:
    """A lift ``xs -> z(xs)`` into the Stiefel manifold over a chart box.

    ``lift`` maps n generic coordinates to n+2 complex generic components.
    ``axes`` optionally pins the sampling grid (lifts read from files carry
    their own grid).
    """

    n: int
    lower: tuple
    upper: tuple
    lift: Callable
    base: tuple
    axes: Optional[tuple] = None
    name: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_hypersurface(cls, patch: HypersurfacePatch, scramble: Optional[Callable] = None,
                          base=None, scheme: str = "dual") -> "LagrangianPatch":
        """Gauss lift of ``patch`` multiplied by e^{i scramble(xs)}."""
        g = lift_generic(patch, scheme)
        if scramble is None:
            lift = g
        else:
            def lift(xs):
                ph = scramble(xs)
                u = nc.cos(ph) + 1j * nc.sin(ph)
                return [u * c for c in g(xs)]
        p0 = tuple(float(x) for x in (patch.center if base is None else base))
        return cls(patch.n, tuple(patch.lower), tuple(patch.upper), lift, p0,
                   name=patch.name, meta={"source_patch": patch})

    @classmethod
    def from_samples(cls, axes: Sequence, values: np.ndarray, base_index: int,
                     degree: int = 5, name: str = "") -> "LagrangianPatch":
        """Tensor spline through lift samples ``values`` of shape grid + (n+2,)."""
        axes = tuple(np.asarray(a, float) for a in axes)
        n = len(axes)
        values = np.asarray(values, complex)
        shape = tuple(a.size for a in axes)
        if values.shape[:-1] != shape or values.shape[-1] != n + 2:
            raise InvalidParameterError(f"values have shape {values.shape}, expected {shape + (n + 2,)}")
        if any(a.size < 2 or np.any(np.diff(a) <= 0) for a in axes):
            raise InvalidParameterError("grid axes must be strictly increasing with at least 2 nodes")
        idx = np.unravel_index(int(base_index), shape)
        p0 = tuple(float(a[i]) for a, i in zip(axes, idx))
        spline = _tensor_spline(axes, np.concatenate([values.real, values.imag], axis=-1), degree)
        m = n + 2

        def lift(xs):
            comps = _spline_generic(spline, (0,) * n)(xs)
            return [comps[k] + 1j * comps[m + k] for k in range(m)]

        return cls(n, tuple(float(a[0]) for a in axes), tuple(float(a[-1]) for a in axes),
                   lift, p0, axes=axes, name=name, meta={"samples": values})

    def values(self, p) -> np.ndarray:
        return nc.derivatives(self.lift, p, order=0).value


def _tensor_spline(axes, data, degree):
    """Tensor-product interpolating spline, built one axis at a time."""
    from scipy.interpolate import NdBSpline, make_interp_spline

    coeffs, knots, degrees = data, [], []
    for ax, x in enumerate(axes):
        k = min(degree, x.size - 1)
        k -= 1 - k % 2  # odd degree keeps the knot vector symmetric
        spl = make_interp_spline(x, coeffs, k=k, axis=ax)
        coeffs = np.moveaxis(spl.c, 0, ax)
        knots.append(spl.t)
        degrees.append(k)
    return NdBSpline(tuple(knots), coeffs, tuple(degrees))


def _spline_generic(spline, nu: tuple) -> Callable:
    """Generic-scalar evaluation of a spline derivative, differentiated by the chain rule."""
    n = len(nu)

    def value_fn(xs):
        batch = np.broadcast_shapes(*(np.shape(x) for x in xs))
        pts = np.stack([np.broadcast_to(np.asarray(x, float), batch) for x in xs], axis=-1)
        out = spline(pts.reshape(-1, n), nu=np.asarray(nu)).reshape(batch + (-1,))
        return [out[..., k] for k in range(out.shape[-1])]

    def grad_fn(xs):
        return [_spline_generic(spline, tuple(v + (i == j) for i, v in enumerate(nu)))(xs)
                for j in range(n)]

    return lambda xs: nc.chain_eval(value_fn, grad_fn, xs)


# ---------------------------------------------------------------------------
# connection form and horizontalization
# ---------------------------------------------------------------------------

def connection_form(lift: Callable, p) -> np.ndarray:
    """omega_j = Im herm(d_j z, z) at points p, shape (..., n)."""
    jt = nc.derivatives(lift, p, order=1)
    return np.imag(np.einsum("...ij,...i->...j", jt.first, np.conj(jt.value)))


def _omega_generic(lift: Callable, xs) -> list:
    vals, jac = nc.jet(lift, xs)
    n = len(xs)
    out = []
    for j in range(n):
        acc = 0.0
        for i, v in enumerate(vals):
            acc = acc + jac[i][j] * nc.conj(v)
        out.append(nc.imag(acc))
    return out


def grid_axes(lower, upper, resolution: int, base) -> tuple:
    """Uniform axes on the box with the base point moved onto its nearest node."""
    axes = []
    for lo, hi, b in zip(lower, upper, base):
        x = np.linspace(lo, hi, resolution)
        i = int(np.argmin(np.abs(x - b)))
        x[i] = b
        if np.any(np.diff(x) <= 0):
            raise InvalidParameterError("base point too close to a neighbouring grid node")
        axes.append(x)
    return tuple(axes)


def mesh(axes) -> np.ndarray:
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


@dataclass(frozen=True)
class HorizontalizationResult:
    source: LagrangianPatch
    axes: tuple
    base_index: tuple
    phi: np.ndarray              # gauge on the grid, phi(p0) = 0
    lift_grid: np.ndarray        # raw lift z on the grid, grid + (n+2,)
    loop_residual: float
    horizontal: Callable         # generic f0 = e^{i phi} z
    phi_generic: Callable

    @property
    def points(self) -> np.ndarray:
        return mesh(self.axes)

    @property
    def values(self) -> np.ndarray:
        """f0 on the grid."""
        return np.exp(1j * self.phi)[..., None] * self.lift_grid

    def horizontality_residual(self, p=None) -> np.ndarray:
        p = self.points if p is None else p
        jt = nc.derivatives(self.horizontal, p, order=1)
        return np.max(np.abs(np.einsum("...ij,...i->...j", jt.first, np.conj(jt.value))), axis=-1)


def _integrate_gauge(omega: np.ndarray, axes, base_index) -> np.ndarray:
    """phi on the grid from d phi = -omega along axis-aligned polylines from the base node.

    Leg k runs along axis k on the slab where the later coordinates sit at
    the base node, starting from the values left by leg k-1.
    """
    n = len(axes)
    phi = np.zeros(omega.shape[:-1])
    for k in range(n):
        slab = tuple(slice(None) if a <= k else base_index[a] for a in range(n))
        prev = phi[tuple(slice(None) if a < k else base_index[a] for a in range(n))]
        leg = nc.cumulative_integral(-omega[slab + (k,)], axes[k], base_index[k], axis=k)
        phi[slab] = np.expand_dims(prev, axis=k) + leg
    return phi


def loop_residual(lift: Callable, lower, upper, rng: np.random.Generator, count: int = LOOP_COUNT,
                  panels: int = DEFAULT_RESOLUTION - 1) -> float:
    """max |loop integral of omega| over random axis-aligned rectangles in the box."""
    n = len(lower)
    if n < 2:
        return 0.0
    lo, hi = np.asarray(lower, float), np.asarray(upper, float)
    t, w = nc.simpson_rule(0.0, 1.0, panels)
    pts, weights, owners, comps = [], [], [], []
    for r in range(count):
        i, j = sorted(rng.choice(n, size=2, replace=False))
        c = lo + (hi - lo) * rng.random(n)
        a = np.sort(lo[[i, j]] + (hi - lo)[[i, j]] * rng.random((2, 2)), axis=0)
        (x0, y0), (x1, y1) = a[0], a[1]
        # counter-clockwise: bottom, right, top (reversed), left (reversed)
        for axis, fixed, start, stop, sign in ((i, (j, y0), x0, x1, 1.0), (j, (i, x1), y0, y1, 1.0),
                                               (i, (j, y1), x0, x1, -1.0), (j, (i, x0), y0, y1, -1.0)):
            q = np.repeat(c[None, :], t.size, axis=0)
            q[:, axis] = start + (stop - start) * t
            q[:, fixed[0]] = fixed[1]
            pts.append(q)
            weights.append(sign * (stop - start) * w)
            owners.append(np.full(t.size, r))
            comps.append(np.full(t.size, axis))
    P = np.concatenate(pts)
    om = connection_form(lift, P)
    vals = om[np.arange(P.shape[0]), np.concatenate(comps)] * np.concatenate(weights)
    loops = np.bincount(np.concatenate(owners), weights=vals, minlength=count)
    return float(np.max(np.abs(loops)))


def horizontalize(patch: LagrangianPatch, resolution: int = DEFAULT_RESOLUTION, seed: int = 0,
                  tol: float = LOOP_TOL) -> HorizontalizationResult:
    """Integrate the horizontalizing gauge on a grid and certify path independence."""
    axes = patch.axes if patch.axes is not None else grid_axes(patch.lower, patch.upper,
                                                               resolution, patch.base)
    base_index = tuple(int(np.argmin(np.abs(a - b))) for a, b in zip(axes, patch.base))
    pts = mesh(axes)
    jt = nc.derivatives(patch.lift, pts, order=1)
    defect = stiefel_defect(jt.value)
    if np.any(defect > 1e-8):
        raise InvalidParameterError(f"lift leaves the Stiefel manifold (defect {float(np.max(defect)):.2e})")
    omega = np.imag(np.einsum("...ij,...i->...j", jt.first, np.conj(jt.value)))
    res = loop_residual(patch.lift, patch.lower, patch.upper, nc.make_rng(seed),
                        panels=max(2, max(a.size for a in axes) - 1))
    if res > tol:
        raise NotLagrangianError(
            f"not Lagrangian or under-resolved: loop integral of the connection form {res:.3e}")
    phi = _integrate_gauge(omega, axes, base_index)
    spline = _tensor_spline(axes, phi[..., None], 3) if all(a.size >= 4 for a in axes) else None

    def phi_value(xs):
        if spline is None:
            raise InvalidParameterError("gauge grid too coarse for off-grid evaluation")
        batch = np.broadcast_shapes(*(np.shape(x) for x in xs))
        q = np.stack([np.broadcast_to(np.asarray(x, float), batch) for x in xs], axis=-1)
        return [spline(q.reshape(-1, len(xs))).reshape(batch)]

    def phi_grad(xs):
        return [[-o] for o in _omega_generic(patch.lift, xs)]

    def phi_generic(xs):
        return nc.chain_eval(phi_value, phi_grad, xs)[0]

    def horizontal(xs):
        ph = phi_generic(xs)
        u = nc.cos(ph) + 1j * nc.sin(ph)
        return [u * c for c in patch.lift(xs)]

    return HorizontalizationResult(patch, tuple(axes), base_index, phi, jt.value, res,
                                   horizontal, phi_generic)


def lift_family(result: HorizontalizationResult, t: float) -> Callable:
    """Generic lift e^{it} f0."""
    u = complex(np.exp(1j * t))

    def lift(xs):
        return [u * c for c in result.horizontal(xs)]
    return lift


def split_lift(lift, p) -> tuple[np.ndarray, np.ndarray]:
    """(a_t, b_t) = sqrt 2 (Re, Im) of a horizontal lift at p; ``lift`` may be an array."""
    z = np.asarray(lift if not callable(lift) else nc.derivatives(lift, p, order=0).value)
    return SQRT2 * z.real, SQRT2 * z.imag


# ---------------------------------------------------------------------------
# angle functions of a lift and the choice of t
# ---------------------------------------------------------------------------

def lift_angles(W: np.ndarray) -> np.ndarray:
    """Angle functions of a horizontal Lagrangian lift from its differential W (..., m, n).

    In a g-orthonormal frame the canonical structure acts by the complex
    symmetric unitary -conj(W^T W); its eigenvalues are e^{-2i theta_j}.
    """
    g = np.real(np.einsum("...ij,...ik->...jk", np.conj(W), W))
    C = np.einsum("...ij,...ik->...jk", W, W)
    L = np.linalg.cholesky(g)
    Li = np.linalg.inv(L)
    M = -Li @ np.conj(C) @ np.swapaxes(Li, -1, -2)
    mu = np.linalg.eigvals(M)
    return np.sort(fold_angle(-0.5 * np.angle(mu)), axis=-1)


def t_margin(thetas: np.ndarray, t) -> np.ndarray:
    """min over samples and j of dist(theta_j + t, pi Z), for each t."""
    th = np.asarray(thetas, float).reshape(-1)
    t = np.asarray(t, float)
    return np.min(dist_pi(th[None, :] + t.reshape(-1, 1)), axis=1).reshape(t.shape)


def choose_t(thetas: np.ndarray) -> tuple[float, float]:
    """Scan 360 parameters on [0, pi), then refine the best one by golden section."""
    th = np.asarray(thetas, float).reshape(-1)
    if th.size == 0:
        raise InvalidParameterError("empty grid")
    ts = np.arange(SCAN_POINTS) * (np.pi / SCAN_POINTS)
    m = t_margin(th, ts)
    k = int(np.argmax(m))
    best_t, best_m = float(ts[k]), float(m[k])
    a, b = best_t - np.pi / SCAN_POINTS, best_t + np.pi / SCAN_POINTS
    gr = (np.sqrt(5.0) - 1.0) / 2.0
    c, d = b - gr * (b - a), a + gr * (b - a)
    fc, fd = float(t_margin(th, c)), float(t_margin(th, d))
    for _ in range(60):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - gr * (b - a)
            fc = float(t_margin(th, c))
        else:
            a, c, fc = c, d, fd
            d = a + gr * (b - a)
            fd = float(t_margin(th, d))
    cand = 0.5 * (a + b)
    fcand = float(t_margin(th, cand))
    if fcand > best_m:
        best_t, best_m = float(np.mod(cand, np.pi)), fcand
    return best_t, best_m


# ---------------------------------------------------------------------------
# reconstruction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Reconstruction:
    patch: HypersurfacePatch
    t: float
    margin: float
    horizontalization: HorizontalizationResult
    thetas: np.ndarray              # angle functions of f0 on the grid
    gauss_fidelity: float           # max projector distance to the input field
    immersion_min: float            # smallest immersion margin on the grid
    normal_defect: float            # max |b_cofactor - sqrt2 Im f_t| on the grid

    @property
    def points(self) -> np.ndarray:
        return self.horizontalization.points


def reconstruct_hypersurface(patch: LagrangianPatch, t=AUTO, resolution: int = DEFAULT_RESOLUTION,
                             seed: int = 0, loop_tol: float = LOOP_TOL,
                             result: HorizontalizationResult | None = None) -> Reconstruction:
    """Hypersurface a_t = sqrt 2 Re(e^{it} f0) whose Gauss map is [z]."""
    hz = result if result is not None else horizontalize(patch, resolution, seed, loop_tol)
    pts = hz.points
    jt = nc.derivatives(hz.horizontal, pts, order=1)
    thetas = lift_angles(jt.first)
    if isinstance(t, str):
        if t.lower() != AUTO:
            raise InvalidParameterError(f"t must be a number or {AUTO!r}")
        t_val, margin = choose_t(thetas)
    else:
        t_val = float(t)
        margin = float(t_margin(thetas, t_val))
    if margin <= DEGENERACY_THRESHOLD:
        raise DegenerateParameterError(
            f"t = {t_val:.6g} puts an angle function within {margin:.2e} of pi Z; "
            f"the real part of the lift is not an immersion there (try t={AUTO})")
    family = lift_family(hz, t_val)

    def chart(xs):
        return [SQRT2 * nc.real(c) for c in family(xs)]

    rec = HypersurfacePatch(patch.n, patch.lower, patch.upper, chart, False,
                            name=f"{patch.name or 'lift'}|reconstructed(t={t_val:.12g})",
                            meta={"t": t_val})
    p0 = np.asarray(patch.base, float)
    b0 = nc.derivatives(lambda xs: normal_generic(rec, xs), p0, order=0).value
    target = SQRT2 * np.imag(nc.derivatives(family, p0, order=0).value)
    if float(b0 @ target) < 0:
        rec = rec.flipped()
    imm = immersion_margin(rec, pts)
    imm_min = float(np.min(imm))
    if imm_min <= 1e-8:
        raise NotAnImmersionError("reconstructed map is not an immersion on the grid")
    zrec = canonical_lift(rec, pts)
    fid = float(np.max(projector_distance(projector(zrec), projector(hz.lift_grid))))
    ft = np.exp(1j * t_val) * jt.value
    bcof = SQRT2 * np.imag(zrec)
    ndef = float(np.max(np.linalg.norm(bcof - SQRT2 * np.imag(ft), axis=-1)))
    return Reconstruction(rec, t_val, margin, hz, thetas, fid, imm_min, ndef)


def parallel_family_distance(candidate: HypersurfacePatch, original: HypersurfacePatch, p) -> tuple[float, float]:
    """Best parallel parameter tau and sup |candidate - parallel_patch(original, tau)| over p."""
    x = position(candidate, p)
    a = position(original, p)
    b = nc.derivatives(lambda xs: normal_generic(original, xs), p, order=0).value
    tau = float(np.arctan2(np.mean(np.sum(x * b, axis=-1)), np.mean(np.sum(x * a, axis=-1))))
    par = position(parallel_patch(original, tau), p)
    return tau, float(np.max(np.linalg.norm(x - par, axis=-1)))


# ---------------------------------------------------------------------------
# parallel family laws
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParallelLawRecord:
    t: float
    margin: float
    degenerate: bool
    lambdas: Optional[np.ndarray] = None        # measured on the lifted parallel patch
    thetas: Optional[np.ndarray] = None
    curvature_residual: float = float("nan")    # |lambda^(t) - cot(theta^(0) + t)|
    angle_residual: float = float("nan")        # dist(theta^(t) - theta^(0) - t, pi Z)
    projector_distance: float = float("nan")
    invariant: Optional[np.ndarray] = None      # cot(theta_j - theta_k) per point, pair (0, n-1)


def _best_permutation_residual(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """min over permutations s of max_j dist(a_j - b_{s(j)}, pi Z), per point."""
    n = a.shape[-1]
    best = None
    for perm in itertools.permutations(range(n)):
        r = np.max(dist_pi(a - b[..., list(perm)]), axis=-1)
        best = r if best is None else np.minimum(best, r)
    return best


def parallel_curvature_law(patch: HypersurfacePatch, ts: Sequence[float], p, scheme: str = "dual",
                           pair: tuple[int, int] | None = None,
                           threshold: float = DEGENERACY_THRESHOLD) -> list[ParallelLawRecord]:
    """Check lambda^(t) = cot(theta^(0) + t) and theta^(t) = theta^(0) + t along a sweep.

    The parallel patch is taken in the lift convention (canonical lift e^{it} G).
    Degenerate t are flagged and skipped.
    """
    fr0 = lift_frame(patch, p, scheme)
    th0 = angle_spectrum(patch, p, 0.0, scheme, frame=fr0).thetas
    P0 = projector(fr0.lift)
    out = []
    for t in ts:
        t = float(t)
        margin = float(t_margin(th0, t))
        if margin <= threshold:
            out.append(ParallelLawRecord(t, margin, True))
            continue
        pt = lift_parallel(patch, t, scheme)
        frt = lift_frame(pt, p, scheme)
        tht = angle_spectrum(pt, p, 0.0, scheme, frame=frt).thetas
        predicted = np.sort(1.0 / np.tan(th0 + t), axis=-1)[..., ::-1]
        scale = np.maximum(1.0, np.abs(predicted))
        curv = float(np.max(np.abs(frt.lambdas - predicted) / scale))
        ang = float(np.max(_best_permutation_residual(tht, th0 + t)))
        pd = float(np.max(projector_distance(projector(frt.lift), P0)))
        inv = None
        if pair is not None:
            # measured spectra are sorted by lambda^(t); map back to the original labels
            order = np.argsort(-(1.0 / np.tan(th0 + t)), axis=-1, kind="stable")
            inv_order = np.argsort(order, axis=-1)
            lam = np.take_along_axis(frt.lambdas, inv_order, axis=-1)
            th = np.take_along_axis(tht, inv_order, axis=-1)
            inv = invariant_from(th, lam, *pair).angle_side
        out.append(ParallelLawRecord(t, margin, False, frt.lambdas, tht, curv, ang, pd, inv))
    return out


def invariant_spread(records: Sequence[ParallelLawRecord]) -> float:
    """Largest deviation, up to sign, of the pair invariant from its first value."""
    vals = [r.invariant for r in records if r.invariant is not None]
    if len(vals) < 2:
        return 0.0
    v0 = vals[0]
    return float(max(np.max(np.minimum(np.abs(v - v0), np.abs(v + v0))) for v in vals[1:]))


__all__ = [
    "AUTO", "DEGENERACY_THRESHOLD", "GeometryError", "HorizontalizationResult", "LagrangianPatch",
    "ParallelLawRecord", "Reconstruction", "choose_t", "connection_form", "grid_axes", "horizontalize",
    "invariant_spread", "lift_angles", "lift_family", "loop_residual", "parallel_curvature_law",
    "parallel_family_distance", "principal_data", "reconstruct_hypersurface", "split_lift", "t_margin",
]
