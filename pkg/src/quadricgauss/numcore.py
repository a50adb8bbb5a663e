"""Forward-mode differentiation, complex inner products and small dense linear algebra.

Every map in the package is written against *generic scalars*: plain floats,
numpy arrays (a batch of points evaluated at once) or :class:`Dual` numbers
whose value and partials are themselves generic scalars.  Nesting a dual
inside a dual gives second derivatives without a separate Hessian code path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateMetricError, InvalidChartPointError

EPS = np.finfo(float).eps
SCHEMES = ("dual", "fd")


class Dual:
    """Dual number ``value + sum_k partials[k] * eps_k`` with eps_j eps_k = 0.

    ``depth`` counts the nesting level so that a dual of a shallower level is
    treated as a constant by a deeper one (no perturbation confusion).
    """

    __slots__ = ("value", "partials", "depth")
    __array_ufunc__ = None  # make numpy defer to the reflected operators

    def __init__(self, value, partials):
        self.value = value
        self.partials = tuple(partials)
        self.depth = value.depth + 1 if isinstance(value, Dual) else 1

    def _same(self, other) -> bool:
        return isinstance(other, Dual) and other.depth == self.depth

    def _deeper(self, other) -> bool:
        return isinstance(other, Dual) and other.depth > self.depth

    def __add__(self, other):
        if self._same(other):
            return Dual(self.value + other.value,
                        [a + b for a, b in zip(self.partials, other.partials)])
        if self._deeper(other):
            # Python skips reflected methods for operands of the same type
            return other.__radd__(self)
        return Dual(self.value + other, self.partials)

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.value, [-a for a in self.partials])

    def __pos__(self):
        return self

    def __sub__(self, other):
        if self._same(other):
            return Dual(self.value - other.value,
                        [a - b for a, b in zip(self.partials, other.partials)])
        if self._deeper(other):
            return other.__rsub__(self)
        return Dual(self.value - other, self.partials)

    def __rsub__(self, other):
        return Dual(other - self.value, [-a for a in self.partials])

    def __mul__(self, other):
        if self._same(other):
            v, w = self.value, other.value
            return Dual(v * w, [v * b + w * a for a, b in zip(self.partials, other.partials)])
        if self._deeper(other):
            return other.__rmul__(self)
        return Dual(self.value * other, [a * other for a in self.partials])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if self._same(other):
            return self * (1.0 / other)
        if self._deeper(other):
            return other.__rtruediv__(self)
        return Dual(self.value / other, [a / other for a in self.partials])

    def __rtruediv__(self, other):
        inv = 1.0 / self.value
        scale = -other * inv * inv
        return Dual(other * inv, [scale * a for a in self.partials])

    def __pow__(self, k):
        if isinstance(k, Dual):
            return exp(k * log(self))
        if k == 2:
            return self * self
        vk1 = self.value ** (k - 1)
        return Dual(vk1 * self.value, [k * vk1 * a for a in self.partials])

    def __repr__(self) -> str:
        return f"Dual({self.value!r}, {self.partials!r})"


def depth(x) -> int:
    return x.depth if isinstance(x, Dual) else 0


def primal(x):
    """Strip every dual level and return the underlying float or array."""
    while isinstance(x, Dual):
        x = x.value
    return x


def sin(x):
    if isinstance(x, Dual):
        c = cos(x.value)
        return Dual(sin(x.value), [c * a for a in x.partials])
    return np.sin(x)


def cos(x):
    if isinstance(x, Dual):
        s = -sin(x.value)
        return Dual(cos(x.value), [s * a for a in x.partials])
    return np.cos(x)


def exp(x):
    if isinstance(x, Dual):
        e = exp(x.value)
        return Dual(e, [e * a for a in x.partials])
    return np.exp(x)


def log(x):
    if isinstance(x, Dual):
        inv = 1.0 / x.value
        return Dual(log(x.value), [inv * a for a in x.partials])
    return np.log(x)


def sqrt(x):
    if isinstance(x, Dual):
        s = sqrt(x.value)
        half_inv = 0.5 / s
        return Dual(s, [half_inv * a for a in x.partials])
    return np.sqrt(x)


def arctan2(y, x):
    if isinstance(y, Dual) or isinstance(x, Dual):
        d = max(depth(x), depth(y))
        k = len((y if depth(y) == d else x).partials)
        yv, yp = parts(y, d, k)
        xv, xp = parts(x, d, k)
        inv = 1.0 / (xv * xv + yv * yv)
        return Dual(arctan2(yv, xv), [(xv * b - yv * a) * inv for a, b in zip(xp, yp)])
    return np.arctan2(y, x)


def conj(x):
    if isinstance(x, Dual):
        return Dual(conj(x.value), [conj(a) for a in x.partials])
    return np.conj(x)


def real(x):
    if isinstance(x, Dual):
        return Dual(real(x.value), [real(a) for a in x.partials])
    return np.real(x)


def imag(x):
    if isinstance(x, Dual):
        return Dual(imag(x.value), [imag(a) for a in x.partials])
    return np.imag(x)


def parts(x, d: int, nparts: int | None = None):
    """Split ``x`` at dual level ``d`` into (value, partials); constants get zero partials."""
    if isinstance(x, Dual) and x.depth == d:
        return x.value, x.partials
    if nparts is None:
        raise ValueError("number of partials needed to split a constant")
    return x, (0.0,) * nparts


# ---------------------------------------------------------------------------
# generic vector helpers (vectors are lists of generic scalars)
# ---------------------------------------------------------------------------

def vdot(u: Sequence, v: Sequence):
    return sum(a * b for a, b in zip(u, v))


def vscale(c, u: Sequence) -> list:
    return [c * a for a in u]


def vadd(u: Sequence, v: Sequence) -> list:
    return [a + b for a, b in zip(u, v)]


def vsub(u: Sequence, v: Sequence) -> list:
    return [a - b for a, b in zip(u, v)]


def cofactor_normal(columns: Sequence[Sequence]) -> list:
    """Generalized cross product of ``m-1`` column vectors in ``R^m``.

    Returns ``c`` with ``c_i = det[columns..., e_i]``, so ``c`` is orthogonal to
    every column and ``det[columns..., c] = |c|^2 >= 0``.  Minors are built by
    dynamic programming over row subsets, which keeps the cost at
    ``O(2^m m)`` generic multiplications and involves no branching.
    """
    k = len(columns)
    m = k + 1
    minors: dict[tuple, object] = {(): 1.0}
    for col in range(k):
        nxt: dict[tuple, object] = {}
        for rows in minors:
            for r in range(m):
                if r in rows:
                    continue
                key = tuple(sorted(rows + (r,)))
                if key in nxt:
                    continue
                total = 0
                for pos, rr in enumerate(key):
                    rest = key[:pos] + key[pos + 1:]
                    term = columns[col][rr] * minors[rest]
                    total = total + term if (pos + col) % 2 == 0 else total - term
                nxt[key] = total
        minors = nxt
    out = []
    full = tuple(range(m))
    for i in range(m):
        rows = full[:i] + full[i + 1:]
        sign = 1.0 if (i + k) % 2 == 0 else -1.0
        out.append(sign * minors[rows])
    return out


# ---------------------------------------------------------------------------
# jets
# ---------------------------------------------------------------------------

def _seed(xs: Sequence) -> list:
    n = len(xs)
    return [Dual(x, [1.0 if k == j else 0.0 for k in range(n)]) for j, x in enumerate(xs)]


def jet(f: Callable, xs: Sequence, scheme: str = "dual"):
    """Value and first partials of a vector map at generic coordinates.

    Returns ``(values, jac)`` with ``jac[i][j] = d f_i / d x_j``, both built of
    generic scalars at the level of ``xs``.  The ``fd`` scheme requires float
    coordinates.
    """
    n = len(xs)
    if scheme == "fd":
        return _fd_jet(f, xs)
    seeded = _seed(xs)
    d = seeded[0].depth if n else 1
    out = f(seeded)
    values, jac = [], []
    for o in out:
        v, p = parts(o, d, n)
        values.append(v)
        jac.append(list(p))
    return values, jac


def _fd_step(x):
    return EPS ** (1.0 / 3.0) * np.maximum(1.0, np.abs(x))


def _fd_jet(f, xs):
    xs = [np.asarray(x, dtype=float) for x in xs]
    n = len(xs)
    values = list(f(xs))
    cols = []
    for j in range(n):
        h = _fd_step(xs[j])
        plus = list(xs)
        minus = list(xs)
        plus[j] = xs[j] + h
        minus[j] = xs[j] - h
        fp, fm = f(plus), f(minus)
        cols.append([(a - b) / (2 * h) for a, b in zip(fp, fm)])
    jac = [[cols[j][i] for j in range(n)] for i in range(len(values))]
    return values, jac


def chain_eval(value_fn: Callable, grad_fn: Callable, xs: Sequence) -> list:
    """Evaluate a vector function known through its values and its gradient.

    ``value_fn`` takes float coordinates and returns a list of components;
    ``grad_fn`` takes generic coordinates and returns ``grad[j][i] = d f_i/d x_j``
    at the same level.  Dual arguments are handled by the chain rule, one
    level at a time, so ``grad_fn`` only ever needs to be exact, never
    differentiable by this function.
    """
    d = max((depth(x) for x in xs), default=0)
    if d == 0:
        return list(value_fn(list(xs)))
    nparts = next(len(x.partials) for x in xs if depth(x) == d)
    inner = [x.value if depth(x) == d else x for x in xs]
    vals = chain_eval(value_fn, grad_fn, inner)
    grad = grad_fn(inner)
    active = [j for j, x in enumerate(xs) if depth(x) == d]
    out = []
    for i, v in enumerate(vals):
        partials = []
        for k in range(nparts):
            acc = 0
            for j in active:
                acc = acc + grad[j][i] * xs[j].partials[k]
            partials.append(acc)
        out.append(Dual(v, partials))
    return out


# ---------------------------------------------------------------------------
# array level
# ---------------------------------------------------------------------------

def as_coords(p) -> tuple[list, tuple]:
    """Split points of shape (..., n) into a list of n coordinate arrays."""
    p = np.asarray(p, dtype=float)
    if p.ndim == 0:
        raise ValueError("chart point must have at least one coordinate")
    return [p[..., j] for j in range(p.shape[-1])], p.shape[:-1]


def stack(components: Sequence, batch: tuple, dtype=float) -> np.ndarray:
    """Stack generic float-level components into an array of shape batch + (m,)."""
    arrs = [np.broadcast_to(np.asarray(c), batch) for c in components]
    return np.stack(arrs, axis=-1).astype(dtype, copy=False) if arrs else np.zeros(batch + (0,))


@dataclass(frozen=True)
class Jet:
    value: np.ndarray                 # (..., m)
    first: np.ndarray | None          # (..., m, n)
    second: np.ndarray | None         # (..., m, n, n)
    scheme: str


@dataclass(frozen=True)
class Jacobian:
    matrix: np.ndarray   # (..., m, n)
    scheme: str


def _dtype(components) -> type:
    for c in components:
        if np.iscomplexobj(primal(c)):
            return complex
    return float


def derivatives(f: Callable, p, order: int = 1, scheme: str = "dual") -> Jet:
    """Value, Jacobian and (optionally) Hessian of ``f`` at points ``p`` of shape (..., n)."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown differentiation scheme {scheme!r}")
    xs, batch = as_coords(p)
    n = len(xs)
    if order == 0:
        out = f(xs)
        return Jet(stack(out, batch, _dtype(out)), None, None, scheme)
    if scheme == "fd":
        return _fd_derivatives(f, xs, batch, order)
    if order == 1:
        vals, jac = jet(f, xs)
        dt = _dtype(vals + [x for row in jac for x in row])
        value = stack(vals, batch, dt)
        first = np.stack([stack(row, batch, dt) for row in jac], axis=-2) if jac else None
        return Jet(value, first, None, scheme)
    if order != 2:
        raise ValueError("only orders 0, 1 and 2 are supported")
    inner = _seed(xs)
    outer = _seed(inner)
    out = f(outer)
    m = len(out)
    value = [None] * m
    first = [[0.0] * n for _ in range(m)]
    second = [[[0.0] * n for _ in range(n)] for _ in range(m)]
    for i, o in enumerate(out):
        v, dks = parts(o, 2, n)
        v0, d0 = parts(v, 1, n)
        value[i] = v0
        for k in range(n):
            first[i][k] = d0[k]
            _, dd = parts(dks[k], 1, n)
            for j in range(n):
                second[i][k][j] = dd[j]
    flat = value + [x for r in first for x in r] + [x for r in second for rr in r for x in rr]
    dt = _dtype(flat)
    val = stack(value, batch, dt)
    fst = np.stack([stack(r, batch, dt) for r in first], axis=-2)
    snd = np.stack([np.stack([stack(rr, batch, dt) for rr in r], axis=-2) for r in second], axis=-3)
    return Jet(val, fst, snd, scheme)


def _fd_derivatives(f, xs, batch, order) -> Jet:
    xs = [np.broadcast_to(np.asarray(x, dtype=float), batch) for x in xs]
    n = len(xs)

    def ev(ys):
        out = f(ys)
        return stack(out, batch, _dtype(out))

    value = ev(xs)
    cols = []
    for j in range(n):
        h = _fd_step(xs[j])
        plus, minus = list(xs), list(xs)
        plus[j] = xs[j] + h
        minus[j] = xs[j] - h
        cols.append((ev(plus) - ev(minus)) / (2 * h)[..., None])
    first = np.stack(cols, axis=-1)
    if order == 1:
        return Jet(value, first, None, "fd")
    hs = [EPS ** 0.25 * np.maximum(1.0, np.abs(x)) for x in xs]
    second = np.zeros(value.shape + (n, n), dtype=value.dtype)
    for j in range(n):
        for k in range(j, n):
            if j == k:
                plus, minus = list(xs), list(xs)
                plus[j] = xs[j] + hs[j]
                minus[j] = xs[j] - hs[j]
                d2 = (ev(plus) - 2 * value + ev(minus)) / (hs[j] ** 2)[..., None]
            else:
                acc = 0
                for sj, sk, w in ((1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)):
                    ys = list(xs)
                    ys[j] = xs[j] + sj * hs[j]
                    ys[k] = xs[k] + sk * hs[k]
                    acc = acc + w * ev(ys)
                d2 = acc / (4 * hs[j] * hs[k])[..., None]
            second[..., j, k] = d2
            second[..., k, j] = d2
    return Jet(value, first, second, "fd")


def jacobian(f: Callable, p, scheme: str = "dual") -> Jacobian:
    """Jacobian of a chart map at ``p``; column j is the partial along p_j."""
    jt = derivatives(f, p, order=1, scheme=scheme)
    if not (np.all(np.isfinite(jt.first)) and np.all(np.isfinite(jt.value))):
        raise InvalidChartPointError("map returned non-finite values at the chart point")
    return Jacobian(jt.first, scheme)


# ---------------------------------------------------------------------------
# complex inner products on C^{n+2} (last axis)
# ---------------------------------------------------------------------------

def herm(w, z):
    """Hermitian product sum_k w_k conj(z_k)."""
    return np.sum(np.asarray(w) * np.conj(z), axis=-1)


def bil(w, z):
    """Complex bilinear dot sum_k w_k z_k."""
    return np.sum(np.asarray(w) * np.asarray(z), axis=-1)


def re_inner(w, z):
    """Real inner product; equals the Euclidean product on R^{2n+4}."""
    return np.real(herm(w, z))


# ---------------------------------------------------------------------------
# generalized symmetric eigenproblem
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SymEigResult:
    eigenvalues: np.ndarray   # (..., n) descending
    eigenvectors: np.ndarray  # (..., n, n), column j belongs to eigenvalues[..., j]


def _sign_fix(V: np.ndarray) -> np.ndarray:
    # first component with non-negligible magnitude made positive
    mag = np.abs(V)
    thresh = 1e-10 * np.max(mag, axis=-2, keepdims=True)
    first = np.argmax(mag > thresh, axis=-2)
    lead = np.take_along_axis(V, first[..., None, :], axis=-2)[..., 0, :]
    return V * np.where(lead < 0, -1.0, 1.0)[..., None, :]


def _canonical_cluster(Vc: np.ndarray, G: np.ndarray) -> np.ndarray:
    n, m = Vc.shape
    out: list[np.ndarray] = []
    for i in range(n):
        u = Vc @ (Vc.T @ G[:, i])
        for q in out:
            u = u - (q @ G @ u) * q
        nrm = np.sqrt(u @ G @ u)
        if nrm > 1e-6:
            out.append(u / nrm)
        if len(out) == m:
            break
    return np.stack(out, axis=-1)


def generalized_sym_eig(S, G, floor: float = 1e-12, cluster_tol: float = 1e-8) -> SymEigResult:
    """Solve ``S v = lam G v`` for symmetric S and positive definite G (batched).

    Eigenvalues are sorted descending and eigenvectors are G-orthonormal.
    Inside a cluster of (numerically) repeated eigenvalues the basis is
    replaced by the G-Gram-Schmidt of the projected coordinate axes, so the
    output does not depend on LAPACK's arbitrary choice.
    """
    S = np.asarray(S, dtype=float)
    G = np.asarray(G, dtype=float)
    S = 0.5 * (S + np.swapaxes(S, -1, -2))
    G = 0.5 * (G + np.swapaxes(G, -1, -2))
    gev = np.linalg.eigvalsh(G)
    scale = np.maximum(1.0, np.abs(gev[..., -1]))
    if np.any(~np.isfinite(gev)) or np.any(gev[..., 0] <= floor * scale):
        raise DegenerateMetricError("metric is not positive definite")
    L = np.linalg.cholesky(G)
    Linv = np.linalg.inv(L)
    C = Linv @ S @ np.swapaxes(Linv, -1, -2)
    C = 0.5 * (C + np.swapaxes(C, -1, -2))
    w, y = np.linalg.eigh(C)
    w = w[..., ::-1]
    V = np.swapaxes(Linv, -1, -2) @ y[..., ::-1]
    n = w.shape[-1]
    if n > 1:
        gaps = np.abs(np.diff(w, axis=-1))
        tol = cluster_tol * np.maximum(1.0, np.max(np.abs(w), axis=-1, keepdims=True))
        tied = gaps <= tol
        if np.any(tied):
            flatV = V.reshape((-1, n, n))
            flatG = G.reshape((-1, n, n))
            flat_tied = tied.reshape((-1, n - 1))
            for b in np.nonzero(flat_tied.any(axis=-1))[0]:
                start = 0
                for j in range(1, n + 1):
                    if j == n or not flat_tied[b, j - 1]:
                        if j - start > 1:
                            idx = slice(start, j)
                            flatV[b][:, idx] = _canonical_cluster(flatV[b][:, idx], flatG[b])
                        start = j
            V = flatV.reshape(V.shape)
    return SymEigResult(w, _sign_fix(V))


def align_frame(reference: np.ndarray, result: SymEigResult, G: np.ndarray,
                cluster_tol: float = 1e-8) -> np.ndarray:
    """Re-align eigenvectors to a previous frame, for continuity along sweeps.

    Simple eigenvectors get the sign that agrees with the reference; inside a
    cluster the reference vectors are G-projected onto the eigenspace and
    G-orthonormalized.  Single point only (no batch axes).
    """
    lam, V = result.eigenvalues, result.eigenvectors.copy()
    n = lam.shape[-1]
    start = 0
    for j in range(1, n + 1):
        if j == n or abs(lam[j] - lam[j - 1]) > cluster_tol * max(1.0, abs(lam[0])):
            idx = list(range(start, j))
            Vc = V[:, idx]
            if len(idx) == 1:
                if Vc[:, 0] @ G @ reference[:, idx[0]] < 0:
                    V[:, idx[0]] = -Vc[:, 0]
            else:
                basis = []
                for r in idx:
                    u = Vc @ (Vc.T @ G @ reference[:, r])
                    for q in basis:
                        u = u - (q @ G @ u) * q
                    basis.append(u / np.sqrt(u @ G @ u))
                V[:, idx] = np.stack(basis, axis=-1)
            start = j
    return V


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

def simpson_rule(a, b, panels: int):
    """Nodes and weights of composite Simpson on [a, b] (panels rounded up to even)."""
    panels = max(2, panels + (panels % 2))
    t = np.linspace(0.0, 1.0, panels + 1)
    w = np.ones(panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w /= 3.0 * panels
    return t, w


def interval_weights(x: np.ndarray) -> np.ndarray:
    """Weights ``W`` with ``int_{x_i}^{x_{i+1}} f = sum_k W[i, k] f(x_k)``.

    Each interval integrates the cubic interpolant through the four nearest
    nodes, giving a fourth-order composite rule on non-uniform grids.
    """
    x = np.asarray(x, dtype=float)
    N = x.size
    W = np.zeros((N - 1, N))
    if N < 4:
        for i in range(N - 1):
            h = x[i + 1] - x[i]
            W[i, i] += h / 2
            W[i, i + 1] += h / 2
        return W
    for i in range(N - 1):
        s = min(max(i - 1, 0), N - 4)
        nodes = x[s:s + 4] - x[i]
        lo, hi = 0.0, x[i + 1] - x[i]
        V = np.vander(nodes, 4, increasing=True).T
        moments = np.array([(hi ** (d + 1) - lo ** (d + 1)) / (d + 1) for d in range(4)])
        W[i, s:s + 4] = np.linalg.solve(V, moments)
    return W


def cumulative_integral(y: np.ndarray, x: np.ndarray, start: int, axis: int = 0) -> np.ndarray:
    """Fourth-order cumulative integral of samples ``y`` from ``x[start]`` along ``axis``."""
    y = np.moveaxis(np.asarray(y), axis, 0)
    W = interval_weights(x)
    pieces = np.tensordot(W, y, axes=(1, 0))
    out = np.zeros_like(y, dtype=np.result_type(y, float))
    out[start + 1:] = np.cumsum(pieces[start:], axis=0)
    if start > 0:
        out[:start] = -np.cumsum(pieces[:start][::-1], axis=0)[::-1]
    return np.moveaxis(out, 0, axis)


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def spawn_rngs(seed, count: int) -> list[np.random.Generator]:
    """Independent child generators from one seed (splittable stream)."""
    return [np.random.Generator(np.random.PCG64(s))
            for s in np.random.SeedSequence(seed).spawn(count)]
