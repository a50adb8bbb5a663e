"""Gauss map of a sphere hypersurface into the complex quadric and its angle functions.

The lift ``G = (a + i b)/sqrt(2)`` of a hypersurface with position ``a`` and
unit normal ``b`` is horizontal, and its differential along a principal
direction ``e_j`` is ``(1 - i lambda_j) e_j / sqrt(2)``.  Everything below is
a numerical shadow of that identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numcore as nc
from .errors import (FrameNotAdaptedError, InvariantUndefinedError, NotAnImmersionError,
                     UndefinedCotError)
from .quadric import A_array, QuadricPoint, QuadricTangent, StiefelPoint, hopf_project
from .sphere import HypersurfacePatch, normal_generic, parallel_patch, principal_data

SQRT2 = np.sqrt(2.0)
# nested difference quotients lose about half the digits of the dual scheme
DECOMPOSITION_TOL = {"dual": 1e-8, "fd": 1e-4}
COT_MARGIN = 1e-8
EQUAL_CURVATURE_MARGIN = 1e-6


def lift_generic(patch: HypersurfacePatch, scheme: str = "dual"):
    """The canonical lift as a function of generic coordinates."""
    def lift(xs):
        a = patch.chart(xs)
        b = normal_generic(patch, xs, scheme)
        return [(ai + 1j * bi) / SQRT2 for ai, bi in zip(a, b)]
    return lift


def canonical_lift(patch: HypersurfacePatch, p, scheme: str = "dual") -> np.ndarray:
    """Array of shape (..., n+2) holding (a + i b)/sqrt(2) at the points ``p``."""
    return nc.derivatives(lift_generic(patch, scheme), p, order=0).value


def gauss_lift(patch: HypersurfacePatch, p, scheme: str = "dual") -> StiefelPoint:
    p = np.asarray(p, float)
    if p.ndim != 1:
        raise ValueError("gauss_lift takes a single chart point; use canonical_lift for batches")
    _check(patch, p, scheme)
    return StiefelPoint(canonical_lift(patch, p, scheme))


def gauss_map(patch: HypersurfacePatch, p, scheme: str = "dual") -> QuadricPoint:
    return hopf_project(gauss_lift(patch, p, scheme).z)


def _check(patch, p, scheme):
    from .sphere import _check_immersion
    _check_immersion(patch, p, scheme)


def lift_jet(patch: HypersurfacePatch, p, scheme: str = "dual") -> nc.Jet:
    """Value (..., n+2) and differential (..., n+2, n) of the canonical lift."""
    return nc.derivatives(lift_generic(patch, scheme), p, order=1, scheme=scheme)


def gauss_differential(patch: HypersurfacePatch, p, v, scheme: str = "dual",
                       tol: float = 1e-10) -> QuadricTangent:
    """dG(v) as a horizontal tangent vector at the lift G(p)."""
    p = np.asarray(p, float)
    _check(patch, p, scheme)
    jt = lift_jet(patch, p, scheme)
    w = jt.first @ np.asarray(v, float)
    z = jt.value
    scale = max(1.0, float(np.linalg.norm(w)))
    if abs(nc.herm(w, z)) > tol * scale:
        raise NotAnImmersionError("lift differential is not horizontal")
    return QuadricTangent(StiefelPoint(z), w)


@dataclass(frozen=True)
class LiftFrame:
    """Principal data together with the lift differential along each principal direction."""

    lambdas: np.ndarray     # (..., n)
    directions: np.ndarray  # (..., n, n) chart-space, G-orthonormal columns
    ambient: np.ndarray     # (..., n+2, n) principal directions in R^{n+2}
    lift: np.ndarray        # (..., n+2)
    dlift: np.ndarray       # (..., n+2, n) column j is dG e_j


def lift_frame(patch: HypersurfacePatch, p, scheme: str = "dual") -> LiftFrame:
    pd = principal_data(patch, p, scheme)
    jt = lift_jet(patch, p, scheme)
    return LiftFrame(pd.lambdas, pd.directions, pd.ambient_directions, jt.value,
                     jt.first @ pd.directions)


def eq7_residual(frame: LiftFrame) -> np.ndarray:
    """max_j |dG e_j - (1 - i lambda_j) e_j / sqrt 2| per point."""
    expected = (1 - 1j * frame.lambdas)[..., None, :] * frame.ambient / SQRT2
    scale = np.maximum(1.0, np.abs(frame.lambdas))[..., None, :]
    return np.max(np.abs(frame.dlift - expected) / scale, axis=(-2, -1))


def horizontality_residual(patch: HypersurfacePatch, p, scheme: str = "dual") -> np.ndarray:
    """max_j |herm(d_j G, G)| per point; zero for a horizontal lift."""
    jt = lift_jet(patch, p, scheme)
    h = np.einsum("...ij,...i->...j", jt.first, np.conj(jt.value))
    return np.max(np.abs(h), axis=-1)


def check_lagrangian(patch: HypersurfacePatch, p, scheme: str = "dual") -> np.ndarray:
    """max_{j,k} |<i dG e_j, dG e_k>| over the principal frame, per point."""
    fr = lift_frame(patch, p, scheme)
    return lagrangian_residual(fr.dlift)


def lagrangian_residual(W: np.ndarray) -> np.ndarray:
    """max_{j,k} |Re herm(i W_j, W_k)| for a stack of tangent columns W (..., m, n)."""
    M = np.real(np.einsum("...ij,...ik->...jk", 1j * W, np.conj(W)))
    return np.max(np.abs(M), axis=(-2, -1))


# ---------------------------------------------------------------------------
# angle functions
# ---------------------------------------------------------------------------

def fold_angle(theta):
    """Representative of theta modulo pi in (0, pi]."""
    r = np.mod(theta, np.pi)
    return np.where(r <= 0.0, np.pi, r)


def dist_pi(x):
    """Distance from x to the nearest multiple of pi."""
    r = np.mod(x, np.pi)
    return np.minimum(r, np.pi - r)


def unwrap_angles(thetas: np.ndarray, axis: int = 0) -> np.ndarray:
    """Remove jumps of pi along a sweep axis (angle functions live modulo pi)."""
    return np.unwrap(np.asarray(thetas, float), period=np.pi, axis=axis)


def decompose(W: np.ndarray, phi: float = 0.0):
    """Angles and residuals of A W_j against {W_j, i W_j} for columns of W (..., m, n).

    Returns ``(theta, residual)`` where residual is the relative size of the
    part of A W_j outside the complex line of W_j.
    """
    Wt = np.swapaxes(W, -1, -2)                     # (..., n, m)
    AW = A_array(Wt, phi)
    nn = np.sum(np.abs(Wt) ** 2, axis=-1)
    c = nc.re_inner(AW, Wt) / nn
    s = nc.re_inner(AW, 1j * Wt) / nn
    theta = fold_angle(0.5 * np.arctan2(-s, c))
    rest = AW - c[..., None] * Wt - s[..., None] * (1j * Wt)
    residual = np.sqrt(np.sum(np.abs(rest) ** 2, axis=-1) / nn)
    return theta, residual


@dataclass(frozen=True)
class AngleSpectrum:
    thetas: np.ndarray      # (..., n) in (0, pi]
    frame: np.ndarray       # (..., n, n) adapted chart directions (columns)
    gauge: float
    residual: np.ndarray    # (...,) decomposition residual

    def cot(self) -> np.ndarray:
        if np.any(dist_pi(self.thetas) < COT_MARGIN):
            raise UndefinedCotError("an angle function sits on a multiple of pi")
        return 1.0 / np.tan(self.thetas)


def angle_spectrum(patch: HypersurfacePatch, p, gauge: float = 0.0, scheme: str = "dual",
                   frame: LiftFrame | None = None, tol: float | None = None) -> AngleSpectrum:
    """Angle functions of the Gauss map in the principal frame.

    ``gauge`` rotates the almost product structure: A w = -e^{i gauge} conj(w).
    Raises :class:`FrameNotAdaptedError` when the principal frame fails to
    diagonalize A, which would contradict the forward theorem.
    """
    fr = frame if frame is not None else lift_frame(patch, p, scheme)
    theta, res = decompose(fr.dlift, gauge)
    worst = np.max(res, axis=-1)
    if np.any(worst > (DECOMPOSITION_TOL[scheme] if tol is None else tol)):
        raise FrameNotAdaptedError(
            f"A dG e_j leaves span(dG e_j, J dG e_j): residual {float(np.max(worst)):.3e}")
    return AngleSpectrum(theta, fr.directions, float(gauge), worst)


def verify_theorem1(patch: HypersurfacePatch, p, scheme: str = "dual",
                    frame: LiftFrame | None = None) -> np.ndarray:
    """max_j |lambda_j - cot theta_j| in the canonical gauge, per point."""
    fr = frame if frame is not None else lift_frame(patch, p, scheme)
    spec = angle_spectrum(patch, p, 0.0, scheme, frame=fr)
    return np.max(np.abs(fr.lambdas - spec.cot()), axis=-1)


def gauge_shift_check(patch: HypersurfacePatch, p, phi: float, scheme: str = "dual",
                      frame: LiftFrame | None = None) -> np.ndarray:
    """max_j dist(theta^(phi) - theta^(0) + phi/2, pi Z) per point."""
    fr = frame if frame is not None else lift_frame(patch, p, scheme)
    t0 = angle_spectrum(patch, p, 0.0, scheme, frame=fr).thetas
    tp = angle_spectrum(patch, p, phi, scheme, frame=fr).thetas
    return np.max(dist_pi(tp - (t0 - phi / 2.0)), axis=-1)


@dataclass(frozen=True)
class InvariantValue:
    angle_side: np.ndarray      # cot(theta_j - theta_k)
    curvature_side: np.ndarray  # (lambda_j lambda_k + 1)/(lambda_j - lambda_k)
    sign: np.ndarray            # +1 or -1, the sign relating the two sides
    residual: np.ndarray        # | angle_side - sign * curvature_side |


def invariant_from(thetas, lambdas, j: int, k: int) -> InvariantValue:
    lj, lk = lambdas[..., j], lambdas[..., k]
    if np.any(np.abs(lj - lk) < EQUAL_CURVATURE_MARGIN):
        raise InvariantUndefinedError(f"principal curvatures {j} and {k} coincide")
    curv = (lj * lk + 1.0) / (lj - lk)
    diff = thetas[..., j] - thetas[..., k]
    ang = np.cos(diff) / np.sin(diff)
    sign = np.where(np.abs(ang - curv) <= np.abs(ang + curv), 1.0, -1.0)
    scale = np.maximum(1.0, np.abs(curv))
    return InvariantValue(ang, curv, sign, np.abs(ang - sign * curv) / scale)


def angle_difference_invariant(patch: HypersurfacePatch, p, j: int, k: int, gauge: float = 0.0,
                               scheme: str = "dual", frame: LiftFrame | None = None) -> InvariantValue:
    """Both sides of cot(theta_j - theta_k) = +-(lambda_j lambda_k + 1)/(lambda_j - lambda_k)."""
    fr = frame if frame is not None else lift_frame(patch, p, scheme)
    spec = angle_spectrum(patch, p, gauge, scheme, frame=fr)
    return invariant_from(spec.thetas, fr.lambdas, j, k)


# ---------------------------------------------------------------------------
# parallel family in the lift convention
# ---------------------------------------------------------------------------

def lift_parallel(patch: HypersurfacePatch, t: float, scheme: str = "dual") -> HypersurfacePatch:
    """Hypersurface whose canonical lift is e^{it} G.

    Its position is sqrt(2) Re(e^{it} G) = cos(t) a - sin(t) b, i.e. the
    parallel patch at parameter -t; angle functions shift by +t and the
    principal curvatures become cot(theta + t).
    """
    return parallel_patch(patch, -t, scheme)
