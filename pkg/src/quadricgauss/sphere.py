"""Parametrized hypersurfaces of the unit sphere S^{n+1}(1) in R^{n+2}."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import numcore as nc
from .errors import NotAnImmersionError

IMMERSION_FLOOR = 1e-8


@dataclass(frozen=True)
class HypersurfacePatch:
    """A chart ``a`` from an open box in R^n into S^{n+1}(1).

    ``chart`` maps a list of n generic coordinates to n+2 generic components.
    ``normal_map`` (signature ``(xs, scheme)``) overrides the default normal,
    which parallel patches use to carry their own unit normal along.  ``base``
    is the patch whose metric normalizes :func:`immersion_margin`.
    """

    n: int
    lower: tuple
    upper: tuple
    chart: Callable
    flip: bool = False
    normal_map: Optional[Callable] = None
    base: Optional["HypersurfacePatch"] = None
    name: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def ambient_dim(self) -> int:
        return self.n + 2

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (np.asarray(self.lower, float) + np.asarray(self.upper, float))

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        lo, hi = np.asarray(self.lower, float), np.asarray(self.upper, float)
        return lo + (hi - lo) * rng.random((count, self.n))

    def flipped(self) -> "HypersurfacePatch":
        return HypersurfacePatch(self.n, self.lower, self.upper, self.chart, not self.flip,
                                 self.normal_map, self.base, self.name, dict(self.meta))


def position(patch: HypersurfacePatch, p) -> np.ndarray:
    return nc.derivatives(patch.chart, p, order=0).value


def normal_generic(patch: HypersurfacePatch, xs, scheme: str = "dual") -> list:
    """Unit normal at generic coordinates (no immersion check)."""
    if patch.normal_map is not None:
        b = patch.normal_map(xs, scheme)
    else:
        vals, jac = nc.jet(patch.chart, xs, scheme)
        cols = [[row[j] for row in jac] for j in range(patch.n)] + [vals]
        c = nc.cofactor_normal(cols)
        inv = 1.0 / nc.sqrt(nc.vdot(c, c))
        b = [inv * ci for ci in c]
    return [-bi for bi in b] if patch.flip else b


def _check_immersion(patch: HypersurfacePatch, p, scheme: str) -> np.ndarray:
    J = nc.jacobian(patch.chart, p, scheme).matrix
    sv = np.linalg.svd(J, compute_uv=False)
    scale = np.maximum(1.0, sv[..., 0])
    if np.any(sv[..., -1] <= IMMERSION_FLOOR * scale):
        raise NotAnImmersionError(f"{patch.name or 'patch'}: jacobian is rank deficient")
    return J


def unit_normal(patch: HypersurfacePatch, p, scheme: str = "dual") -> np.ndarray:
    """Unit normal b tangent to the sphere, oriented by det[da, a, b] > 0 unless flipped."""
    _check_immersion(patch, p, scheme)
    return nc.derivatives(lambda xs: normal_generic(patch, xs, scheme), p, order=0).value


@dataclass(frozen=True)
class PrincipalData:
    metric: np.ndarray            # (..., n, n) first fundamental form
    second_form: np.ndarray       # (..., n, n) <d_j d_k a, b>
    second_form_alt: np.ndarray   # (..., n, n) -<d_j b, d_k a>
    lambdas: np.ndarray           # (..., n) descending
    directions: np.ndarray        # (..., n, n) G-orthonormal columns
    position: np.ndarray          # (..., n+2)
    normal: np.ndarray            # (..., n+2)
    tangent: np.ndarray           # (..., n+2, n)
    scheme: str

    @property
    def form_discrepancy(self) -> np.ndarray:
        return np.max(np.abs(self.second_form - self.second_form_alt), axis=(-2, -1))

    @property
    def ambient_directions(self) -> np.ndarray:
        """Principal directions pushed forward into R^{n+2}, one per column."""
        return self.tangent @ self.directions


def principal_data(patch: HypersurfacePatch, p, scheme: str = "dual") -> PrincipalData:
    """Fundamental forms and principal curvatures, shape operator S = -db tangential."""
    _check_immersion(patch, p, scheme)
    aj = nc.derivatives(patch.chart, p, order=2, scheme=scheme)
    bj = nc.derivatives(lambda xs: normal_generic(patch, xs, scheme), p, order=1, scheme=scheme)
    da = aj.first
    G = np.einsum("...ij,...ik->...jk", da, da)
    h = np.einsum("...ijk,...i->...jk", aj.second, bj.value)
    h_alt = -np.einsum("...ij,...ik->...jk", bj.first, da)
    eig = nc.generalized_sym_eig(h, G)
    return PrincipalData(G, h, h_alt, eig.eigenvalues, eig.eigenvectors,
                         aj.value, bj.value, da, scheme)


def parallel_patch(patch: HypersurfacePatch, t: float, scheme: str = "dual") -> HypersurfacePatch:
    """The parallel hypersurface p -> cos(t) a + sin(t) b with normal -sin(t) a + cos(t) b.

    Shifting an already parallel patch composes with its root, so the group
    law a_{s+t} = (a_s)_t holds to rounding.
    """
    root = patch.base if patch.base is not None else patch
    total = patch.meta.get("parallel_t", 0.0) + t
    c, s = float(np.cos(total)), float(np.sin(total))

    def chart(xs):
        a = root.chart(xs)
        b = normal_generic(root, xs, scheme)
        return [c * ai + s * bi for ai, bi in zip(a, b)]

    def normal(xs, _scheme):
        a = root.chart(xs)
        b = normal_generic(root, xs, scheme)
        return [c * bi - s * ai for ai, bi in zip(a, b)]

    name = f"{root.name}|parallel(t={total:.12g})" if root.name else ""
    return HypersurfacePatch(patch.n, patch.lower, patch.upper, chart, False, normal,
                             root, name, dict(root.meta, parallel_t=total))


def immersion_margin(patch: HypersurfacePatch, p, scheme: str = "dual") -> np.ndarray:
    """Smallest singular value of the jacobian, measured in the base patch metric.

    Patches without a base are measured in the Euclidean chart metric.  Zero
    means the map is not an immersion.
    """
    J = nc.jacobian(patch.chart, p, scheme).matrix
    A = np.einsum("...ij,...ik->...jk", J, J)
    if patch.base is None:
        ev = np.linalg.eigvalsh(A)[..., 0]
        return np.sqrt(np.maximum(ev, 0.0))
    Jb = nc.jacobian(patch.base.chart, p, scheme).matrix
    Gb = np.einsum("...ij,...ik->...jk", Jb, Jb)
    L = np.linalg.cholesky(Gb)
    Linv = np.linalg.inv(L)
    C = Linv @ A @ np.swapaxes(Linv, -1, -2)
    ev = np.linalg.eigvalsh(0.5 * (C + np.swapaxes(C, -1, -2)))[..., 0]
    return np.sqrt(np.maximum(ev, 0.0))
