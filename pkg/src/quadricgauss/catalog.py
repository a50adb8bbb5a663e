"""Closed-form hypersurfaces of spheres with known principal data.

Entries are addressable from the command line as ``name:key=value,...``,
for example ``clifford:rho=0.7853981633974483`` or ``geodesic:n=2,rho=0.5``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import numcore as nc
from .errors import InvalidParameterError
from .sphere import HypersurfacePatch, normal_generic

MARGIN = 0.1  # chart boxes stay this far from coordinate singularities


def sphere_point(angles) -> list:
    """Unit vector in R^{m+1} from m hyperspherical angles (generic scalars)."""
    m = len(angles)
    out = []
    prod = 1.0
    for j in range(m):
        out.append(prod * nc.cos(angles[j]))
        prod = prod * nc.sin(angles[j])
    out.append(prod)
    return out


def sphere_box(m: int) -> tuple[list, list]:
    lo = [MARGIN] * (m - 1) + [-np.pi + MARGIN]
    hi = [np.pi - MARGIN] * (m - 1) + [np.pi - MARGIN]
    return lo, hi


@dataclass
class CatalogEntry:
    name: str
    params: dict
    patch: HypersurfacePatch
    expected_lambdas: Optional[Callable] = None   # p (..., n) -> (..., n) descending
    expected_normal: Optional[Callable] = None    # p (..., n) -> (..., n+2)
    notes: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def spec(self) -> str:
        if not self.params:
            return self.name
        body = ",".join(f"{k}={v!r}" if not isinstance(v, str) else f"{k}={v}"
                        for k, v in self.params.items())
        return f"{self.name}:{body}"

    def expected_thetas(self, p) -> np.ndarray:
        """Angle functions from lambda = cot(theta), folded into (0, pi]."""
        lam = self.expected_lambdas(p)
        th = np.arctan2(1.0, lam)
        return np.where(th <= 0, th + np.pi, th)


def _orient(n, lo, hi, chart, name, expected_normal, meta) -> HypersurfacePatch:
    patch = HypersurfacePatch(n, tuple(lo), tuple(hi), chart, False, name=name, meta=meta)
    c = patch.center
    b = nc.derivatives(lambda xs: normal_generic(patch, xs), c, order=0).value
    if float(b @ expected_normal(c)) < 0:
        patch = patch.flipped()
    return patch


def _check_rho(rho: float) -> None:
    if not 0.0 < rho < np.pi / 2:
        raise InvalidParameterError(f"rho must lie in (0, pi/2), got {rho!r}")


def great_sphere(n: int) -> CatalogEntry:
    """Totally geodesic S^n = {x_{n+2} = 0}; all principal curvatures vanish."""
    if n < 1:
        raise InvalidParameterError("n must be at least 1")
    lo, hi = sphere_box(n)

    def chart(xs):
        return sphere_point(xs) + [0.0 * xs[0]]

    def normal(p):
        p = np.asarray(p, float)
        out = np.zeros(p.shape[:-1] + (n + 2,))
        out[..., -1] = 1.0
        return out

    patch = _orient(n, lo, hi, chart, f"great:n={n}", normal, {})
    return CatalogEntry("great", {"n": n}, patch,
                        lambda p: np.zeros(np.shape(p)[:-1] + (n,)), normal)


def geodesic_sphere(n: int, rho: float) -> CatalogEntry:
    """Distance sphere of radius rho about the pole e_{n+2}; lambda_j = cot(rho).

    a = cos(rho) N + sin(rho) x with x on the equatorial S^n; the normal
    b = sin(rho) N - cos(rho) x points towards the pole.
    """
    _check_rho(rho)
    if n < 1:
        raise InvalidParameterError("n must be at least 1")
    lo, hi = sphere_box(n)
    c, s = float(np.cos(rho)), float(np.sin(rho))

    def chart(xs):
        return [s * x for x in sphere_point(xs)] + [c + 0.0 * xs[0]]

    def normal(p):
        x = nc.stack(sphere_point(list(np.moveaxis(np.asarray(p, float), -1, 0))),
                     np.shape(p)[:-1])
        N = np.zeros(x.shape[:-1] + (1,)) + s
        return np.concatenate([-c * x, N], axis=-1)

    patch = _orient(n, lo, hi, chart, f"geodesic:n={n},rho={rho!r}", normal, {})
    return CatalogEntry("geodesic", {"n": n, "rho": rho}, patch,
                        lambda p: np.full(np.shape(p)[:-1] + (n,), c / s), normal)


def generalized_clifford(p: int, q: int, rho: float, n: int | None = None) -> CatalogEntry:
    """S^p(cos rho) x S^q(sin rho) in S^{p+q+1}.

    With normal (sin rho x, -cos rho y) the S^p factor carries lambda = -tan(rho)
    and the S^q factor lambda = cot(rho).
    """
    _check_rho(rho)
    if p < 1 or q < 1:
        raise InvalidParameterError("p and q must be positive")
    if n is not None and n != p + q:
        raise InvalidParameterError(f"p + q = {p + q} does not match n = {n}")
    n = p + q
    lo1, hi1 = sphere_box(p)
    lo2, hi2 = sphere_box(q)
    c, s = float(np.cos(rho)), float(np.sin(rho))

    def chart(xs):
        return [c * x for x in sphere_point(xs[:p])] + [s * y for y in sphere_point(xs[p:])]

    def normal(pt):
        pt = np.asarray(pt, float)
        coords = list(np.moveaxis(pt, -1, 0))
        x = nc.stack(sphere_point(coords[:p]), pt.shape[:-1])
        y = nc.stack(sphere_point(coords[p:]), pt.shape[:-1])
        return np.concatenate([s * x, -c * y], axis=-1)

    lam = np.array([c / s] * q + [-s / c] * p)  # descending
    name = "clifford" if p == q == 1 else "gclifford"
    params = {"rho": rho} if name == "clifford" else {"p": p, "q": q, "rho": rho}
    patch = _orient(n, lo1 + lo2, hi1 + hi2, chart, f"{name}:{params}", normal, {})
    return CatalogEntry(name, params, patch,
                        lambda pt: np.broadcast_to(lam, np.shape(pt)[:-1] + (n,)).copy(), normal)


def clifford_torus(rho: float) -> CatalogEntry:
    """S^1(cos rho) x S^1(sin rho) in S^3 with lambda = (cot rho, -tan rho).

    The chart (u1, u2) -> (cos rho e^{i u1}, sin rho e^{i u2}) is regular on
    the whole box, which is therefore taken symmetric about the origin.
    """
    entry = generalized_clifford(1, 1, rho)
    c, s = float(np.cos(rho)), float(np.sin(rho))

    def chart(xs):
        u1, u2 = xs
        return [c * nc.cos(u1), c * nc.sin(u1), s * nc.cos(u2), s * nc.sin(u2)]

    def normal(pt):
        pt = np.asarray(pt, float)
        u1, u2 = pt[..., 0], pt[..., 1]
        return np.stack([s * np.cos(u1), s * np.sin(u1), -c * np.cos(u2), -c * np.sin(u2)], axis=-1)

    lim = np.pi - MARGIN
    entry.patch = _orient(2, (-lim, -lim), (lim, lim), chart, f"clifford:rho={rho!r}", normal, {})
    entry.expected_normal = normal
    return entry


def perturbed_graph(n: int = 2, eps: float = 0.03, rho: float = np.pi / 4) -> CatalogEntry:
    """Normal graph cos(eps h) a + sin(eps h) b over S^{n-1}(cos rho) x S^1(sin rho).

    h(p) = sin(p_1) cos(2 p_n) + cos(p_1 + ... + p_n) / 2 makes the principal
    curvatures non-constant as soon as eps != 0.
    """
    if n < 2:
        raise InvalidParameterError("perturbed graph needs n >= 2")
    base = clifford_torus(rho) if n == 2 else generalized_clifford(n - 1, 1, rho)
    bp = base.patch

    def height(xs):
        total = xs[0]
        for x in xs[1:]:
            total = total + x
        return nc.sin(xs[0]) * nc.cos(2.0 * xs[-1]) + 0.5 * nc.cos(total)

    def chart(xs):
        a = bp.chart(xs)
        b = normal_generic(bp, xs)
        h = eps * height(xs)
        ch, sh = nc.cos(h), nc.sin(h)
        return [ch * ai + sh * bi for ai, bi in zip(a, b)]

    def ref_normal(pt):
        return base.expected_normal(pt)

    patch = _orient(n, bp.lower, bp.upper, chart, f"perturbed:eps={eps!r},n={n}", ref_normal, {})
    params = {"eps": eps} if n == 2 else {"eps": eps, "n": n}
    entry = CatalogEntry("perturbed", params, patch, None, None,
                         notes="non-isoparametric; no closed-form curvatures")
    if eps == 0.0:
        entry.expected_lambdas = base.expected_lambdas
        entry.expected_normal = base.expected_normal
    return entry


_PI_TERM = re.compile(r"^([+-]?\d*\.?\d*(?:e[+-]?\d+)?)\s*\*?\s*pi\s*(?:/\s*(\d*\.?\d+))?$")


def parse_real(text: str) -> float:
    """A float, or a multiple of pi such as ``pi/12``, ``2*pi/3``, ``-pi``."""
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        pass
    m = _PI_TERM.match(text.lower())
    if not m:
        raise ValueError(f"cannot parse number {text!r}")
    coef = m.group(1)
    c = 1.0 if coef in ("", "+") else -1.0 if coef == "-" else float(coef)
    d = float(m.group(2)) if m.group(2) else 1.0
    return c * np.pi / d


_BUILDERS = {
    "great": (great_sphere, {"n": int}),
    "geodesic": (geodesic_sphere, {"n": int, "rho": parse_real}),
    "clifford": (clifford_torus, {"rho": parse_real}),
    "gclifford": (generalized_clifford, {"p": int, "q": int, "rho": parse_real, "n": int}),
    "perturbed": (perturbed_graph, {"eps": float, "n": int, "rho": parse_real}),
}


def parse_entry(spec: str) -> CatalogEntry:
    """Build an entry from ``name:key=value,...``."""
    name, _, body = spec.strip().partition(":")
    if name not in _BUILDERS:
        raise InvalidParameterError(f"unknown catalog entry {name!r}; known: {', '.join(_BUILDERS)}")
    builder, types = _BUILDERS[name]
    kwargs = {}
    for item in filter(None, (s.strip() for s in body.split(","))):
        key, sep, val = item.partition("=")
        if not sep or key not in types:
            raise InvalidParameterError(f"bad parameter {item!r} for {name}")
        try:
            kwargs[key] = types[key](val)
        except ValueError as exc:
            raise InvalidParameterError(f"bad value for {key}: {val!r}") from exc
    try:
        return builder(**kwargs)
    except TypeError as exc:
        raise InvalidParameterError(f"{name}: {exc}") from exc


def catalog_list() -> list[CatalogEntry]:
    """The standard verification corpus."""
    out = [great_sphere(2), great_sphere(3)]
    for n in (2, 3):
        for rho in (np.pi / 6, np.pi / 4, np.pi / 3):
            out.append(geodesic_sphere(n, rho))
    for rho in (np.pi / 6, np.pi / 4, np.pi / 3):
        out.append(clifford_torus(rho))
    out.append(generalized_clifford(2, 1, np.pi / 3))
    out.append(perturbed_graph(2, 0.03))
    return out


# ---------------------------------------------------------------------------
# curves and surfaces in the Stiefel manifold
# ---------------------------------------------------------------------------

def lemma2_curves(count: int = 20, seed: int = 0) -> list[Callable[[float], np.ndarray]]:
    """Curves s -> e^{i k s} G(p0 + s v) in V^{2n+1} built from catalog Gauss lifts.

    Even-indexed curves are horizontal (k = 0); odd ones carry a fiber twist.
    """
    from .gaussmap import canonical_lift

    entries = catalog_list()
    rngs = nc.spawn_rngs(seed, count)
    curves = []
    for i in range(count):
        rng = rngs[i]
        entry = entries[i % len(entries)]
        patch = entry.patch
        lo, hi = np.asarray(patch.lower), np.asarray(patch.upper)
        p0 = lo + (hi - lo) * (0.3 + 0.4 * rng.random(patch.n))
        v = rng.standard_normal(patch.n)
        v /= np.linalg.norm(v)
        k = 0.0 if i % 2 == 0 else float(rng.choice([-1, 1]) * rng.uniform(0.5, 2.0))

        def curve(s, patch=patch, p0=p0, v=v, k=k):
            return np.exp(1j * k * s) * canonical_lift(patch, p0 + s * v)

        curve.label = f"{entry.spec}|twist={k:.6f}"
        curves.append(curve)
    return curves


def non_lagrangian_surface() -> tuple[Callable, tuple, tuple]:
    """A surface in V^5 whose image in Q^2 is tangent to a complex line at the origin.

    z(p) = R_{23}(p2) R_{13}(p1) (e1 + i e2)/sqrt 2; its connection form is
    not closed, so it admits no horizontal lift.
    """
    r2 = 1.0 / np.sqrt(2.0)

    def lift(xs):
        p1, p2 = xs
        c1, s1, c2, s2 = nc.cos(p1), nc.sin(p1), nc.cos(p2), nc.sin(p2)
        # after R_13(p1): x = (c1, 0, s1, 0), y = (0, 1, 0, 0); then R_23(p2) mixes slots 1, 2
        x = [c1, -s2 * s1, c2 * s1, 0.0 * p1]
        y = [0.0 * p1, c2, s2, 0.0 * p1]
        return [r2 * (xi + 1j * yi) for xi, yi in zip(x, y)]

    return lift, (-0.5, -0.5), (0.5, 0.5)
