"""Hopf fibration, the Stiefel manifold V^{2n+1} and the complex quadric Q^n.

Tangent vectors of Q^n at [z] are handled through horizontal representatives
w in C^{n+2} at a stored representative z: herm(w, z) = 0 and bil(z, w) = 0.
The metric is the real part of the Hermitian product, J is multiplication by
i, and the almost product structure fixed by the representative z is
w -> -conj(w).  Rotating it by a gauge angle phi gives w -> -e^{i phi} conj(w).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BaseMismatchError, NotOnStiefelError, StepUnderflowError
from .numcore import bil, herm, re_inner

STIEFEL_TOL = 1e-12
TANGENT_TOL = 1e-12


def stiefel_defect(z) -> np.ndarray:
    """Max of ||z|^2 - 1| and |bil(z, z)|; zero on V^{2n+1}."""
    z = np.asarray(z)
    return np.maximum(np.abs(np.real(herm(z, z)) - 1.0), np.abs(bil(z, z)))


@dataclass(frozen=True, eq=False)
class StiefelPoint:
    z: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=complex)
        object.__setattr__(self, "z", z)
        if np.any(stiefel_defect(z) > STIEFEL_TOL):
            raise NotOnStiefelError(f"not on the Stiefel manifold (defect {np.max(stiefel_defect(z)):.3e})")

    @property
    def u(self) -> np.ndarray:
        return self.z.real

    @property
    def v(self) -> np.ndarray:
        return self.z.imag

    @property
    def n(self) -> int:
        return self.z.shape[-1] - 2

    def rotated(self, t: float) -> "StiefelPoint":
        return StiefelPoint(np.exp(1j * t) * self.z)


def projector(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    nrm2 = np.real(herm(z, z))[..., None, None]
    return z[..., :, None] * np.conj(z)[..., None, :] / nrm2


@dataclass(frozen=True, eq=False)
class QuadricPoint:
    """[z] in Q^n, stored as the rank one Hermitian projector z z^*."""

    projector: np.ndarray
    representative: StiefelPoint

    def distance(self, other: "QuadricPoint") -> np.ndarray:
        return projector_distance(self.projector, other.projector)


def projector_distance(P, Q) -> np.ndarray:
    """Frobenius distance between projectors (batched over leading axes)."""
    D = np.asarray(P) - np.asarray(Q)
    return np.sqrt(np.sum(np.abs(D) ** 2, axis=(-2, -1)))


def hopf_project(z) -> QuadricPoint:
    pt = z if isinstance(z, StiefelPoint) else StiefelPoint(z)
    return QuadricPoint(projector(pt.z), pt)


@dataclass(frozen=True, eq=False)
class QuadricTangent:
    base: StiefelPoint
    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=complex)
        object.__setattr__(self, "w", w)
        z = self.base.z
        scale = np.maximum(1.0, np.linalg.norm(w, axis=-1))
        defect = np.maximum(np.abs(herm(w, z)), np.abs(bil(z, w))) / scale
        if np.any(defect > TANGENT_TOL):
            raise NotOnStiefelError(f"not a horizontal quadric tangent (defect {np.max(defect):.3e})")

    def _same_base(self, other: "QuadricTangent") -> None:
        if other.base is not self.base and not np.array_equal(other.base.z, self.base.z):
            raise BaseMismatchError("tangent vectors live at different representatives")


@dataclass(frozen=True, eq=False)
class ProductStructureChoice:
    """A = cos(phi) A0 + sin(phi) J A0, with A0 the structure fixed by ``base``."""

    base: StiefelPoint
    phi: float = 0.0


def g(X: QuadricTangent, Y: QuadricTangent) -> np.ndarray:
    X._same_base(Y)
    return re_inner(X.w, Y.w)


def horizontal_part(z, w_raw) -> np.ndarray:
    """Array-level projection onto the horizontal tangent space of V at z."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w_raw, dtype=complex)
    zb = np.conj(z)
    w = w - herm(w, z)[..., None] * z
    return w - herm(w, zb)[..., None] * zb


def horizontal_project(z, w_raw) -> QuadricTangent:
    """Push an ambient vector forward to T_[z]Q^n, as a horizontal lift at z.

    Removes the components along z, iz (sphere normal and fiber) and along
    conj(z), i conj(z) (normal of the quadric inside CP^{n+1}).
    """
    pt = z if isinstance(z, StiefelPoint) else StiefelPoint(z)
    return QuadricTangent(pt, horizontal_part(pt.z, w_raw))


def J_array(w) -> np.ndarray:
    return 1j * np.asarray(w)


def A_array(w, phi: float = 0.0) -> np.ndarray:
    return -np.exp(1j * phi) * np.conj(w)


def apply_J(X: QuadricTangent) -> QuadricTangent:
    return QuadricTangent(X.base, J_array(X.w))


def apply_A(choice: ProductStructureChoice, X: QuadricTangent) -> QuadricTangent:
    if X.base is not choice.base and not np.array_equal(X.base.z, choice.base.z):
        raise BaseMismatchError("tangent is not based at the representative fixing A")
    return QuadricTangent(X.base, A_array(X.w, choice.phi))


@dataclass(frozen=True)
class Lemma1Report:
    involution: float
    symmetry: float
    anticommutation: float

    @property
    def worst(self) -> float:
        return max(self.involution, self.symmetry, self.anticommutation)


def check_lemma1(choice: ProductStructureChoice, X: QuadricTangent, Y: QuadricTangent) -> Lemma1Report:
    AX, AY = apply_A(choice, X), apply_A(choice, Y)
    AAX = apply_A(choice, AX)
    JX = apply_J(X)
    inv = float(np.max(np.linalg.norm(AAX.w - X.w, axis=-1)))
    sym = float(np.max(np.abs(g(AX, Y) - g(X, AY))))
    anti = float(np.max(np.linalg.norm(apply_A(choice, JX).w + apply_J(AX).w, axis=-1)))
    return Lemma1Report(inv, sym, anti)


# ---------------------------------------------------------------------------
# curvature
# ---------------------------------------------------------------------------

def curvature_array(x, y, zv, phi: float = 0.0) -> np.ndarray:
    """R(X, Y)Z of Q^n on horizontal lifts, all nine terms evaluated literally."""
    x, y, zv = (np.asarray(v, dtype=complex) for v in (x, y, zv))

    def gg(a, b):
        return re_inner(a, b)[..., None]

    Jx, Jy, Jz = 1j * x, 1j * y, 1j * zv
    Ax, Ay = A_array(x, phi), A_array(y, phi)
    JAx, JAy = 1j * Ax, 1j * Ay
    return (gg(y, zv) * x - gg(x, zv) * y
            + gg(Jy, zv) * Jx - gg(Jx, zv) * Jy - 2 * gg(Jx, y) * Jz
            + gg(Ay, zv) * Ax - gg(Ax, zv) * Ay + gg(JAy, zv) * JAx - gg(JAx, zv) * JAy)


def curvature_R(choice: ProductStructureChoice, X: QuadricTangent, Y: QuadricTangent,
                Z: QuadricTangent) -> QuadricTangent:
    for V in (X, Y, Z):
        if V.base is not choice.base and not np.array_equal(V.base.z, choice.base.z):
            raise BaseMismatchError("curvature arguments must share the base representative")
    return QuadricTangent(choice.base, curvature_array(X.w, Y.w, Z.w, choice.phi))


def sectional_array(x, y, phi: float = 0.0) -> np.ndarray:
    num = re_inner(curvature_array(x, y, y, phi), x)
    den = re_inner(x, x) * re_inner(y, y) - re_inner(x, y) ** 2
    return num / den


def sectional_curvature(choice: ProductStructureChoice, X: QuadricTangent, Y: QuadricTangent) -> float:
    return sectional_array(X.w, Y.w, choice.phi)


def tangent_basis(z) -> np.ndarray:
    """Real orthonormal basis (rows) of the horizontal tangent space at z: c_k and i c_k."""
    pt = z if isinstance(z, StiefelPoint) else StiefelPoint(z)
    m = pt.z.shape[-1]
    plane = np.stack([pt.u, pt.v], axis=-1)
    q, _ = np.linalg.qr(np.concatenate([plane, np.eye(m)], axis=-1))
    comp = q[:, 2:m]
    return np.concatenate([comp.T.astype(complex), 1j * comp.T], axis=0)


def ricci_check(choice: ProductStructureChoice, basis) -> tuple[float, float]:
    """Best-fit Einstein constant c and the residual ||Ric - c g|| (Frobenius).

    ``basis`` holds 2n tangent lifts; it is orthonormalized internally.
    """
    W = np.asarray([b.w if isinstance(b, QuadricTangent) else b for b in basis], dtype=complex)
    real = np.concatenate([W.real, W.imag], axis=-1)
    q, r = np.linalg.qr(real.T)
    if np.min(np.abs(np.diag(r))) < 1e-10:
        raise ValueError("degenerate tangent basis")
    m = W.shape[-1]
    E = q.T[:, :m] + 1j * q.T[:, m:]
    k = E.shape[0]
    ric = np.zeros((k, k))
    for a in range(k):
        for b in range(k):
            ric[a, b] = sum(re_inner(curvature_array(E[i], E[a], E[b], choice.phi), E[i])
                            for i in range(k))
    c = float(np.trace(ric) / k)
    return c, float(np.linalg.norm(ric - c * np.eye(k)))


@dataclass(frozen=True)
class SectionalRange:
    min: float
    max: float
    sampled_min: float
    sampled_max: float
    samples: int


def sectional_range(choice: ProductStructureChoice, samples: int, rng: np.random.Generator,
                    batch: int = 20000, polish: int = 4) -> SectionalRange:
    """Extremal sectional curvatures over random 2-planes at the base point.

    The extremes of plain sampling converge slowly (the extremal planes form a
    null set), so the ``polish`` best and worst samples are refined by BFGS on
    the plane coordinates.  Both the raw and the refined extremes are returned.
    """
    from scipy.optimize import minimize

    basis = tangent_basis(choice.base)
    d = basis.shape[0]
    best_hi: list[tuple[float, np.ndarray]] = []
    best_lo: list[tuple[float, np.ndarray]] = []
    done = 0
    while done < samples:
        k = min(batch, samples - done)
        c = rng.standard_normal((k, 2 * d))
        K = sectional_array(c[:, :d] @ basis, c[:, d:] @ basis, choice.phi)
        for idx in np.argsort(K)[::-1][:polish]:
            best_hi.append((float(K[idx]), c[idx]))
        for idx in np.argsort(K)[:polish]:
            best_lo.append((float(K[idx]), c[idx]))
        done += k
    best_hi = sorted(best_hi, key=lambda e: -e[0])[:polish]
    best_lo = sorted(best_lo, key=lambda e: e[0])[:polish]

    def K_of(c):
        return float(sectional_array(c[:d] @ basis, c[d:] @ basis, choice.phi))

    hi = max(e[0] for e in best_hi)
    lo = min(e[0] for e in best_lo)
    raw_hi, raw_lo = hi, lo
    for _, c0 in best_hi:
        res = minimize(lambda c: -K_of(c), c0, method="BFGS", options={"gtol": 1e-12})
        hi = max(hi, -float(res.fun))
    for _, c0 in best_lo:
        res = minimize(K_of, c0, method="BFGS", options={"gtol": 1e-12})
        lo = min(lo, float(res.fun))
    return SectionalRange(lo, hi, raw_lo, raw_hi, samples)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def random_stiefel(n: int, rng: np.random.Generator) -> StiefelPoint:
    x = rng.standard_normal(n + 2)
    y = rng.standard_normal(n + 2)
    x /= np.linalg.norm(x)
    y -= (y @ x) * x
    y /= np.linalg.norm(y)
    return StiefelPoint((x + 1j * y) / np.sqrt(2.0))


def random_tangent(z: StiefelPoint, rng: np.random.Generator) -> QuadricTangent:
    m = z.z.shape[-1]
    raw = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    return horizontal_project(z, raw)


# ---------------------------------------------------------------------------
# derivative of the quadric normal inside CP^{n+1}
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Lemma2Report:
    s: float                 # coefficient of J zeta
    rest: float              # norm of the component outside span{-AX, J zeta}
    speed: float             # |X|


def check_lemma2(curve: Callable[[float], np.ndarray], s0: float, h: float | None = None) -> Lemma2Report:
    """Decompose the CP^{n+1} derivative of zeta = d pi(conj z) along a curve in V.

    The covariant derivative is lifted by the submersion recipe: Euclidean
    derivative of the lifted field, projected to the sphere and then to the
    horizontal space, plus the fiber correction -i Im herm(z', z) V for a
    representative curve that is not itself horizontal.  Central differences.
    """
    if h is None:
        h = 1e-5 * max(1.0, abs(s0))
    if not np.isfinite(h) or h < 1e-12 * max(1.0, abs(s0)):
        raise StepUnderflowError(f"difference step {h!r} underflows at s={s0!r}")
    z = np.asarray(curve(s0), dtype=complex)
    zp = (np.asarray(curve(s0 + h)) - np.asarray(curve(s0 - h))) / (2 * h)
    zeta = np.conj(z)
    dzeta = np.conj(zp)
    kappa = np.imag(herm(zp, z))
    D = dzeta - herm(dzeta, z) * z - 1j * kappa * zeta
    X = zp - herm(zp, z) * z
    minus_AX = -A_array(X)
    Jzeta = 1j * zeta
    s = float(re_inner(D, Jzeta) / re_inner(Jzeta, Jzeta))
    rest = D - minus_AX - s * Jzeta
    return Lemma2Report(s, float(np.linalg.norm(rest)), float(np.linalg.norm(X)))
