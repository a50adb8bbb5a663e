"""Command-line front end producing deterministic JSON reports.

Exit codes: 0 when every verdict passes, 1 on a verification failure, 2 on
usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import catalog as cat
from . import gaussmap as gm
from . import numcore as nc
from . import quadric as qd
from . import reconstruct as rc
from .errors import (DegenerateParameterError, GeometryError, InvalidParameterError,
                     NotLagrangianError)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

TOLERANCES = {
    "dual": {"theorem1": 1e-6, "lagrangian": 1e-10, "horizontality": 1e-10, "eq7": 1e-6,
             "invariant": 1e-6},
    "fd": {"theorem1": 1e-4, "lagrangian": 1e-8, "horizontality": 1e-8, "eq7": 1e-4,
           "invariant": 1e-4},
}
SWEEP_TOLERANCES = {"curvature": 1e-6, "angle": 1e-6, "projector": 1e-12, "invariant": 1e-6}
RECONSTRUCT_TOLERANCES = {"loop": rc.LOOP_TOL, "parallel_family": 1e-5, "gauss_fidelity": 1e-4}
QUADRIC_TOLERANCES = {"lemma1": 1e-12, "identities": 1e-12, "einstein": 1e-8, "ricci": 1e-10,
                      "sectional_bound": 1e-9, "sectional_max": 1e-2, "lemma2": 1e-5,
                      "lemma2_nonzero": 1e-3}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def parse_number(text: str) -> float:
    """A float, or a multiple of pi such as ``pi/12``, ``2*pi/3``, ``-pi``."""
    try:
        return cat.parse_real(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def parse_list(text: str | None) -> list[float]:
    if text is None or not text.strip():
        return []
    return [parse_number(x) for x in text.split(",") if x.strip()]


def _clean(obj):
    """Convert numpy containers to plain JSON types; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else None
    return obj


def dumps(report: dict) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=1, allow_nan=False)


def _entry(spec: str) -> cat.CatalogEntry:
    try:
        return cat.parse_entry(spec)
    except InvalidParameterError as exc:
        raise UsageError(str(exc)) from exc


def _config(args, **extra) -> dict:
    cfg = {"command": args.command, "seed": args.seed, "version": __version__}
    cfg.update(extra)
    return cfg


def _finish(report: dict, args, started: float) -> int:
    verdicts = report.get("verdicts", {})
    report["pass"] = all(v for v in verdicts.values() if v is not None)
    if getattr(args, "timing", False):
        report["timing_seconds"] = time.perf_counter() - started
    sys.stdout.write(dumps(report) + "\n")
    return EXIT_OK if report["pass"] else EXIT_FAIL


def _write_csv(path: str, rows: list[dict]) -> None:
    if not rows:
        Path(path).write_text("")
        return
    fields = sorted(rows[0])
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for r in rows:
            w.writerow({k: json.dumps(_clean(r[k])) if isinstance(r[k], (list, tuple, np.ndarray))
                        else _clean(r[k]) for k in fields})


# ---------------------------------------------------------------------------
# lift files
# ---------------------------------------------------------------------------

def write_lift_file(path: str, axes, values: np.ndarray, base_index: int, source: dict | None) -> None:
    n = len(axes)
    flat = values.reshape(-1, n + 2)
    pairs = np.stack([flat.real, flat.imag], axis=-1).reshape(flat.shape[0], 2 * (n + 2))
    doc = {"n": n, "grid": [np.asarray(a).tolist() for a in axes], "values": pairs.tolist(),
           "base_point_index": int(base_index)}
    if source is not None:
        doc["source"] = source
    Path(path).write_text(json.dumps(doc, sort_keys=True))


def read_lift_file(path: str):
    """Returns (axes, values, base_index, source); raises UsageError on malformed input."""
    try:
        doc = json.loads(Path(path).read_text())
        n = int(doc["n"])
        axes = [np.asarray(a, float) for a in doc["grid"]]
        raw = np.asarray(doc["values"], float)
        base = int(doc["base_point_index"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"malformed lift file {path}: {exc}") from exc
    shape = tuple(a.size for a in axes)
    if n < 1 or len(axes) != n or raw.ndim != 2 or raw.shape != (int(np.prod(shape)), 2 * (n + 2)):
        raise UsageError(f"malformed lift file {path}: shapes do not match n={n}")
    if not 0 <= base < raw.shape[0] or not np.all(np.isfinite(raw)):
        raise UsageError(f"malformed lift file {path}: bad base index or values")
    pairs = raw.reshape(shape + (n + 2, 2))
    return axes, pairs[..., 0] + 1j * pairs[..., 1], base, doc.get("source")


def _scramble(amount: float):
    def phase(xs):
        return amount * xs[0] * (xs[1] if len(xs) > 1 else 1.0)
    return phase


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_analyze(args) -> int:
    started = time.perf_counter()
    entry = _entry(args.entry)
    scheme = args.scheme
    tol = dict(TOLERANCES[scheme])
    if args.tol is not None:
        tol["theorem1"] = args.tol
    patch = entry.patch
    rng = nc.make_rng(args.seed)
    p = patch.sample(rng, args.samples)
    fr = gm.lift_frame(patch, p, scheme)
    spec = gm.angle_spectrum(patch, p, 0.0, scheme, frame=fr)
    th1 = np.max(np.abs(fr.lambdas - spec.cot()), axis=-1)
    lag = gm.lagrangian_residual(fr.dlift)
    hor = gm.horizontality_residual(patch, p, scheme)
    eq7 = gm.eq7_residual(fr)
    n = patch.n
    inv = None
    if n >= 2 and np.all(np.abs(fr.lambdas[:, 0] - fr.lambdas[:, -1]) >= gm.EQUAL_CURVATURE_MARGIN):
        inv = gm.invariant_from(spec.thetas, fr.lambdas, 0, n - 1)
    records = []
    for i in range(p.shape[0]):
        res = {"theorem1": th1[i], "lagrangian": lag[i], "horizontality": hor[i], "eq7": eq7[i],
               "decomposition": spec.residual[i]}
        rec = {"p": p[i], "lambdas": fr.lambdas[i], "thetas": spec.thetas[i], "residuals": res}
        if inv is not None:
            res["invariant"] = inv.residual[i]
            rec["invariant"] = {"angle_side": inv.angle_side[i], "curvature_side": inv.curvature_side[i],
                                "sign": inv.sign[i]}
        records.append(rec)
    verdicts = {
        "theorem1": bool(np.max(th1, initial=0.0) <= tol["theorem1"]),
        "lagrangian": bool(np.max(lag, initial=0.0) <= tol["lagrangian"]),
        "horizontality": bool(np.max(hor, initial=0.0) <= tol["horizontality"]),
        "eq7": bool(np.max(eq7, initial=0.0) <= tol["eq7"]),
        "invariant": None if inv is None else bool(np.max(inv.residual, initial=0.0) <= tol["invariant"]),
    }
    summary = {"theorem1": th1, "lagrangian": lag, "horizontality": hor, "eq7": eq7,
               "decomposition": spec.residual}
    report = {
        "config": _config(args, entry=entry.spec, samples=args.samples, scheme=scheme, tolerances=tol),
        "records": records,
        "max_residuals": {k: float(np.max(v, initial=0.0)) for k, v in summary.items()},
        "verdicts": verdicts,
        "notes": {"theta_branch": "folded into (0, pi]"},
    }
    if args.csv:
        _write_csv(args.csv, [{"p": r["p"], "lambdas": r["lambdas"], "thetas": r["thetas"],
                               **{f"res_{k}": v for k, v in r["residuals"].items()}} for r in records])
    if args.dump_lift:
        lp = rc.LagrangianPatch.from_hypersurface(patch, _scramble(args.scramble) if args.scramble else None)
        axes = rc.grid_axes(lp.lower, lp.upper, args.grid, lp.base)
        values = lp.values(rc.mesh(axes))
        idx = np.ravel_multi_index(tuple(int(np.argmin(np.abs(a - b))) for a, b in zip(axes, lp.base)),
                                   values.shape[:-1])
        write_lift_file(args.dump_lift, axes, values, int(idx),
                        {"entry": entry.spec, "scramble": args.scramble})
        report["lift_file"] = {"grid": args.grid, "scramble": args.scramble}
    return _finish(report, args, started)


def cmd_parallel_sweep(args) -> int:
    started = time.perf_counter()
    entry = _entry(args.entry)
    ts = parse_list(args.t)
    report = {"config": _config(args, entry=entry.spec, samples=args.samples, scheme=args.scheme,
                                t=ts, tolerances=SWEEP_TOLERANCES,
                                degeneracy_threshold=rc.DEGENERACY_THRESHOLD)}
    if not ts:
        report.update(sweep=[], verdicts={})
        return _finish(report, args, started)
    patch = entry.patch
    p = patch.sample(nc.make_rng(args.seed), args.samples)
    lam0 = gm.lift_frame(patch, p, args.scheme).lambdas
    n = patch.n
    pair = (0, n - 1) if n >= 2 and np.all(np.abs(lam0[:, 0] - lam0[:, -1]) >= gm.EQUAL_CURVATURE_MARGIN) else None
    recs = rc.parallel_curvature_law(patch, ts, p, args.scheme, pair=pair)
    out = []
    for r in recs:
        item = {"t": r.t, "margin": r.margin, "degenerate": r.degenerate}
        if not r.degenerate:
            item.update(lambdas=r.lambdas, thetas=r.thetas, curvature_residual=r.curvature_residual,
                        angle_residual=r.angle_residual, projector_distance=r.projector_distance,
                        invariant=r.invariant)
        out.append(item)
    good = [r for r in recs if not r.degenerate]
    verdicts = {
        "curvature": all(r.curvature_residual <= SWEEP_TOLERANCES["curvature"] for r in good),
        "angle": all(r.angle_residual <= SWEEP_TOLERANCES["angle"] for r in good),
        "projector": all(r.projector_distance <= SWEEP_TOLERANCES["projector"] for r in good),
        "invariant": None if pair is None else rc.invariant_spread(good) <= SWEEP_TOLERANCES["invariant"],
    }
    report.update(sweep=out, verdicts=verdicts, invariant_pair=pair,
                  invariant_spread=None if pair is None else rc.invariant_spread(good),
                  degenerate_t=[r.t for r in recs if r.degenerate])
    if args.csv:
        _write_csv(args.csv, [{k: v for k, v in o.items() if k not in ("lambdas", "thetas", "invariant")}
                              for o in out])
    return _finish(report, args, started)


def cmd_reconstruct(args) -> int:
    started = time.perf_counter()
    axes, values, base, source = read_lift_file(args.lift)
    t_spec = args.t if args.t is not None else rc.AUTO
    ts = [rc.AUTO if x.strip().lower() == rc.AUTO else parse_number(x)
          for x in t_spec.split(",") if x.strip()] or [rc.AUTO]
    tol = dict(RECONSTRUCT_TOLERANCES)
    if args.tol is not None:
        tol["gauss_fidelity"] = args.tol
    report = {"config": _config(args, lift=Path(args.lift).name, t=t_spec, tolerances=tol,
                                grid=[a.size for a in axes])}
    try:
        lp = rc.LagrangianPatch.from_samples(axes, values, base, name="lift-file")
        hz = rc.horizontalize(lp, seed=args.seed, tol=tol["loop"])
    except InvalidParameterError as exc:
        raise UsageError(str(exc)) from exc
    except NotLagrangianError as exc:
        report.update(error=str(exc), verdicts={"loop": False})
        print(f"error: {exc}", file=sys.stderr)
        return _finish(report, args, started)
    original = None
    if isinstance(source, dict) and "entry" in source:
        try:
            original = cat.parse_entry(str(source["entry"])).patch
        except InvalidParameterError:
            original = None
    results, verdicts = [], {"loop": hz.loop_residual <= tol["loop"]}
    dumps_ = []
    for t in ts:
        try:
            rec = rc.reconstruct_hypersurface(lp, t, seed=args.seed, result=hz)
        except (DegenerateParameterError, GeometryError) as exc:
            results.append({"t": t, "error": str(exc)})
            verdicts[f"t={t}"] = False
            print(f"error: {exc}", file=sys.stderr)
            continue
        pts = rec.points
        item = {"t": rec.t, "margin": rec.margin, "gauss_fidelity": rec.gauss_fidelity,
                "immersion_min": rec.immersion_min, "normal_defect": rec.normal_defect,
                "label": "parallel hypersurface"}
        ok = rec.gauss_fidelity <= tol["gauss_fidelity"]
        if original is not None:
            tau, dist = rc.parallel_family_distance(rec.patch, original, pts)
            item.update(parallel_tau=tau, parallel_distance=dist)
            ok = ok and dist <= tol["parallel_family"]
        verdicts[f"t={rec.t!r}"] = ok
        results.append(item)
        if args.dump_patch:
            from .sphere import position, unit_normal
            flat = pts.reshape(-1, pts.shape[-1])
            dumps_.append({"t": rec.t, "points": flat, "position": position(rec.patch, flat),
                           "normal": unit_normal(rec.patch, flat)})
    report.update(loop_residual=hz.loop_residual, results=results, verdicts=verdicts,
                  horizontality=float(np.max(hz.horizontality_residual())))
    if args.dump_patch:
        Path(args.dump_patch).write_text(dumps({"patches": dumps_}))
    return _finish(report, args, started)


def cmd_verify_quadric(args) -> int:
    started = time.perf_counter()
    n = args.n
    if not 2 <= n <= 6:
        raise UsageError("--n must lie in 2..6 (Q^1 is degenerate for these suites)")
    rngs = nc.spawn_rngs(args.seed, 5)
    tol = QUADRIC_TOLERANCES
    # product-structure and algebraic identities at random points, tangents and gauges
    k = min(args.samples, 1000)
    l1 = ident = 0.0
    rng = rngs[0]
    for _ in range(k):
        z = qd.random_stiefel(n, rng)
        X, Y, Z, W = (qd.random_tangent(z, rng) for _ in range(4))
        choice = qd.ProductStructureChoice(z, float(rng.uniform(0, 2 * np.pi)))
        l1 = max(l1, qd.check_lemma1(choice, X, Y).worst)
        ident = max(ident, *curvature_identities(X.w, Y.w, Z.w, W.w, choice.phi))
    # Einstein constant
    cs, rs = [], []
    for _ in range(8):
        z = qd.random_stiefel(n, rngs[1])
        c, r = qd.ricci_check(qd.ProductStructureChoice(z, float(rngs[1].uniform(0, 2 * np.pi))),
                              qd.tangent_basis(z))
        cs.append(c)
        rs.append(r)
    einstein = float(np.mean(cs))
    report = {"config": _config(args, n=n, samples=args.samples, tolerances=tol),
              "lemma1_residual": l1, "identity_residual": ident, "einstein_constant": einstein,
              "einstein_expected": 2 * n, "ricci_residual": float(max(rs))}
    verdicts = {"lemma1": l1 <= tol["lemma1"], "identities": ident <= tol["identities"],
                "einstein": max(abs(c - 2 * n) for c in cs) <= tol["einstein"],
                "ricci": max(rs) <= tol["ricci"]}
    if n == 2:
        z = qd.random_stiefel(2, rngs[2])
        sr = qd.sectional_range(qd.ProductStructureChoice(z), args.samples, rngs[2])
        report["sectional_range"] = {"min": sr.min, "max": sr.max, "sampled_min": sr.sampled_min,
                                     "sampled_max": sr.sampled_max, "samples": sr.samples}
        verdicts["sectional_bounds"] = (sr.min >= -tol["sectional_bound"]
                                        and sr.max <= 4 + tol["sectional_bound"])
        verdicts["sectional_max"] = sr.max >= 4 - tol["sectional_max"]
    l2 = []
    for curve in cat.lemma2_curves(20, args.seed):
        r = qd.check_lemma2(curve, 0.0)
        l2.append({"curve": curve.label, "s": r.s, "rest": r.rest, "speed": r.speed})
    report["lemma2"] = l2
    verdicts["lemma2"] = max(x["rest"] for x in l2) <= tol["lemma2"]
    verdicts["lemma2_nonzero"] = max(abs(x["s"]) for x in l2) > tol["lemma2_nonzero"]
    report["verdicts"] = verdicts
    return _finish(report, args, started)


def curvature_identities(x, y, z, w, phi: float) -> tuple[float, float, float]:
    """Antisymmetry, pair symmetry and first Bianchi residuals of the curvature tensor."""
    R = qd.curvature_array

    def R4(a, b, c, d):
        return float(nc.re_inner(R(a, b, c, phi), d))

    anti = float(np.linalg.norm(R(x, y, z, phi) + R(y, x, z, phi)))
    pair = abs(R4(x, y, z, w) - R4(z, w, x, y))
    bianchi = float(np.linalg.norm(R(x, y, z, phi) + R(y, z, x, phi) + R(z, x, y, phi)))
    return anti, pair, bianchi


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="quadricgauss", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--timing", action="store_true", help="add wall-clock time (breaks byte-identity)")

    a = sub.add_parser("analyze", help="forward theorem checks on a catalog entry")
    a.add_argument("entry", help="catalog entry, e.g. clifford:rho=0.7853981633974483")
    a.add_argument("--samples", type=int, default=100)
    a.add_argument("--scheme", choices=nc.SCHEMES, default="dual")
    a.add_argument("--tol", type=float, default=None, help="tolerance for |lambda - cot theta|")
    a.add_argument("--csv", metavar="PATH")
    a.add_argument("--dump-lift", metavar="PATH")
    a.add_argument("--grid", type=int, default=65, help="nodes per axis of the dumped lift")
    a.add_argument("--scramble", type=float, default=0.0,
                   help="gauge phi = s * p1 * p2 applied to the dumped lift")
    common(a)
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("parallel-sweep", help="parallel family laws along a list of t")
    s.add_argument("entry")
    s.add_argument("--t", default="", help="comma list, e.g. 0,pi/12,pi/6")
    s.add_argument("--samples", type=int, default=100)
    s.add_argument("--scheme", choices=nc.SCHEMES, default="dual")
    s.add_argument("--csv", metavar="PATH")
    common(s)
    s.set_defaults(func=cmd_parallel_sweep)

    r = sub.add_parser("reconstruct", help="hypersurfaces from a sampled lift file")
    r.add_argument("lift", help="lift file written by analyze --dump-lift")
    r.add_argument("--t", default=None, help="comma list of values and/or 'auto' (default: auto)")
    r.add_argument("--tol", type=float, default=None, help="Gauss-map fidelity tolerance")
    r.add_argument("--dump-patch", metavar="PATH")
    common(r)
    r.set_defaults(func=cmd_reconstruct)

    q = sub.add_parser("verify-quadric", help="curvature, product-structure and Einstein checks on Q^n")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--samples", type=int, default=1000)
    common(q)
    q.set_defaults(func=cmd_verify_quadric)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "samples", 1) < 0 or getattr(args, "grid", 4) < 4:
            raise UsageError("--samples must be non-negative and --grid at least 4")
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
