"""Command-line front end: config ingestion, subcommand dispatch, exports.

Every numeric row carries its truncation metadata; identical configs and
cache state produce byte-identical output.  Exit codes: 1 usage, 2 config,
3 numerical, 4 cache.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import config as cfgmod
from . import groups, modes, orbitcache, resolvent, series
from .core import QuadricPoint
from .errors import (
    CacheError,
    ConfigError,
    NumericalError,
    QfadsError,
    UsageError,
)

SCHEMA_VERSION = 1


def build_parser():
    ap = argparse.ArgumentParser(prog="qfads")
    ap.add_argument("--seed", type=int, default=0, help="seed for randomized test points")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p, depth_default=8):
        p.add_argument("--config", help="group config file")
        p.add_argument("--preset", help="built-in group preset name")
        p.add_argument("--twist", type=float, default=0.0)
        p.add_argument("--depth", type=int, default=depth_default)
        p.add_argument("--out", default="", help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--cache-dir", default="", help="orbit cache directory")

    g = sub.add_parser("group").add_subparsers(dest="action", required=True)
    for action in ("validate", "ball", "limitset", "exponent", "spectrum"):
        p = g.add_parser(action)
        add_common(p, depth_default=8 if action != "exponent" else 12)

    s = sub.add_parser("series").add_subparsers(dest="action", required=True)
    for action in ("poincare", "zeta", "h2-identity"):
        p = s.add_parser(action)
        add_common(p)
        p.add_argument("--lambda", dest="lam", type=float, default=2.0)
        p.add_argument("--lambda-grid", dest="lam_grid", nargs=4, type=float,
                       metavar=("RE_MIN", "RE_MAX", "STEPS", "IM"))
        p.add_argument("--jmax", type=int, default=12)
        p.add_argument("--mmax", type=int, default=3)

    r = sub.add_parser("resolvent").add_subparsers(dest="action", required=True)
    for action in ("kernel", "quotient", "identity", "kg-check"):
        p = r.add_parser(action)
        add_common(p)
        p.add_argument("--lambda", dest="lam", type=float, default=2.0)
        p.add_argument("--lambda-grid", dest="lam_grid", nargs=4, type=float)
        p.add_argument("--kmax", type=int, default=40)
        p.add_argument("--zeta-grid", nargs=3, type=float, default=(-2.5, 2.5, 21),
                       metavar=("LO", "HI", "STEPS"))
        p.add_argument("--quad-order", type=int, default=128)

    q = sub.add_parser("poisson").add_subparsers(dest="action", required=True)
    for action in ("eval", "pushforward-check"):
        p = q.add_parser(action)
        add_common(p)
        p.add_argument("--lambda", dest="lam", type=float, default=-6.0)
        p.add_argument("--sigma", type=int, choices=(0, 1), default=0)
        p.add_argument("--mode", nargs=2, type=int, default=(0, 0), metavar=("K", "L"))
        p.add_argument("--quad-order", type=int, default=128)
        p.add_argument("--quad-order-b", type=int, default=160)

    m = sub.add_parser("modes").add_subparsers(dest="action", required=True)
    for action in ("wronskian", "poles", "plancherel", "catalog"):
        p = m.add_parser(action)
        add_common(p)
        p.add_argument("--lambda", dest="lam", type=float, default=0.25)
        p.add_argument("--kl", nargs=2, type=int, default=(0, 0), metavar=("K", "L"))
        p.add_argument("--s-values", nargs="+", type=float, default=(0.8,))
        p.add_argument("--mmax", type=int, default=4)

    f = sub.add_parser("flow").add_subparsers(dest="action", required=True)
    for action in ("trace", "split-check"):
        p = f.add_parser(action)
        add_common(p)
        p.add_argument("--tmax", type=float, default=5.0)
        p.add_argument("--points", type=int, default=16)

    return ap


# --- helpers -------------------------------------------------------------------------


def _group_config(args):
    if args.config and args.preset:
        raise cfgmod.ValidationError("--config and --preset are mutually exclusive")
    if args.config:
        return cfgmod.parse_group_file(args.config)
    cfg = {"preset": args.preset or "modular-torus"}
    if args.twist:
        cfg["twist"] = args.twist
    return cfg


def _ball_with_cache(args, cfg, rep):
    digest = cfgmod.config_digest(cfg)
    cache_path = None
    if args.cache_dir:
        os.makedirs(args.cache_dir, exist_ok=True)
        cache_path = os.path.join(args.cache_dir, f"orbit-{digest}-L{args.depth}.txt")
        if os.path.exists(cache_path):
            got_digest, ball = orbitcache.read_cache(cache_path, rep)
            if got_digest != digest:
                raise CacheError(
                    f"cache digest {got_digest} does not match config {digest}")
            print(f"# cache reuse: {cache_path}", file=sys.stderr)
            return ball, digest, cache_path, True
    ball = groups.ball_enumerate(rep, args.depth)
    if cache_path:
        orbitcache.write_cache(cache_path, digest, ball)
    return ball, digest, cache_path, False


def _emit(args, header, rows, meta):
    """Write rows as CSV (with # meta comments) or a JSON document."""
    if args.format == "json":
        doc = {"schema_version": SCHEMA_VERSION, **meta,
               "columns": header, "rows": rows}
        text = json.dumps(doc, indent=2, sort_keys=True, default=_jsonify) + "\n"
    else:
        import io

        buf = io.StringIO()
        for key in sorted(meta):
            buf.write(f"# {key} = {meta[key]}\n")
        buf.write(f"# schema_version = {SCHEMA_VERSION}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        text = buf.getvalue()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _jsonify(obj):
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj)}")


def _basepoints(cfg):
    x = cfgmod.basepoint_vec(cfg)
    y = cfgmod.basepoint_vec(cfg, default=("slice", [0.0, np.cosh(0.3),
                                                     np.sinh(0.3), 0.0]))
    return QuadricPoint(x), QuadricPoint(y)


# --- group commands --------------------------------------------------------------------


def cmd_group(args):
    cfg = _group_config(args)
    rep = groups.load_representation(cfg)
    if args.action == "validate":
        rows = [[rep.label, rep.rank, len(rep.relator),
                 "fuchsian" if rep.is_fuchsian_diagonal() else "pair"]]
        _emit(args, ["label", "rank", "relator_length", "kind"], rows,
              {"digest": cfgmod.config_digest(cfg)})
        return 0
    ball, digest, cache_path, reused = _ball_with_cache(args, cfg, rep)
    meta = {"digest": digest, "depth": args.depth, "elements": len(ball),
            "cache_reused": reused}
    if args.action == "ball":
        rows = [[i, "".join(str(s) + "," for s in ball.word_tuple(i)).rstrip(","),
                 int(ball.wlen[i])] for i in range(min(len(ball), 200))]
        _emit(args, ["index", "word", "length"], rows, meta)
        return 0
    if args.action == "limitset":
        sample = groups.limit_sample(ball)
        report = groups.acausal_check(sample)
        rows = sorted([float(a), float(b)] for a, b in sample.angles)
        meta.update({"rays": len(sample), "max_q": report["max_q"],
                     "max_slope": report["max_slope"]})
        _emit(args, ["theta", "phi"], rows, meta)
        return 0
    x, y = _basepoints(cfg)
    if args.action == "exponent":
        stats = groups.orbit_stats(x, y, ball)
        meta.update({"delta_hat": stats.delta_hat, "window": stats.window,
                     "slope_ci": stats.slope_ci})
        rows = [[t, n] for t, n in stats.n_table]
        _emit(args, ["T", "N"], rows, meta)
        return 0
    if args.action == "spectrum":
        classes = groups.length_spectrum(ball)
        fit = groups.spectrum_growth_fit(classes)
        meta.update(fit)
        rows = [[l1, l2, mult] for l1, l2, mult in classes[:500]]
        _emit(args, ["lam1", "lam2", "multiplicity"], rows, meta)
        return 0
    raise UsageError(f"unknown group action {args.action!r}")


# --- series commands -------------------------------------------------------------------


def cmd_series(args):
    cfg = _group_config(args)
    rep = groups.load_representation(cfg)
    ball, digest, _, reused = _ball_with_cache(args, cfg, rep)
    x, y = _basepoints(cfg)
    meta = {"digest": digest, "depth": args.depth, "cache_reused": reused}
    if args.action == "poincare":
        stats = groups.orbit_stats(x, y, ball)
        lams = ([complex(r, args.lam_grid[3]) for r in
                 np.linspace(args.lam_grid[0], args.lam_grid[1], int(args.lam_grid[2]))]
                if args.lam_grid else [complex(args.lam)])
        rows = []
        for lam in lams:
            sv = series.poincare_partial(lam, x, y, ball, stats=stats)
            rows.append([lam.real, lam.imag, sv.value.real, sv.value.imag,
                         sv.terms_used, sv.tail_bound, sv.region_flag.value])
        meta["delta_hat"] = stats.delta_hat
        _emit(args, ["re_lambda", "im_lambda", "value_re", "value_im",
                     "terms", "tail_bound", "flag"], rows, meta)
        return 0
    if args.action == "zeta":
        classes = groups.length_spectrum(ball)
        val = series.zeta_logderiv_partial(args.lam, classes, args.mmax)
        rows = [[args.lam, 0.0, val.real, val.imag, len(classes), args.mmax]]
        _emit(args, ["re_lambda", "im_lambda", "value_re", "value_im",
                     "classes", "m_max"], rows, meta)
        return 0
    if args.action == "h2-identity":
        xbar = np.array([1.0, 0.0, 0.0])
        ybar = np.array([np.cosh(0.41), np.sinh(0.41), 0.0])
        res, lhs, info = series.modified_poincare_identity(
            args.lam, xbar, ybar, ball, args.jmax)
        rows = [[args.lam, args.jmax, res, abs(lhs), info["terms"],
                 info["tail_rate"]]]
        _emit(args, ["lambda", "jmax", "residual", "lhs_abs", "terms",
                     "tail_rate"], rows, meta)
        return 0
    raise UsageError(f"unknown series action {args.action!r}")


# --- resolvent commands ----------------------------------------------------------------


def cmd_resolvent(args):
    meta = {}
    if args.action == "kernel":
        lams = ([complex(r, args.lam_grid[3]) for r in
                 np.linspace(args.lam_grid[0], args.lam_grid[1], int(args.lam_grid[2]))]
                if args.lam_grid else [complex(args.lam)])
        lo, hi, steps = args.zeta_grid
        zetas = [z for z in np.linspace(lo, hi, int(steps))
                 if abs(abs(z) - 1.0) > 0.05]
        rows = []
        for lam in lams:
            for z in zetas:
                kv = resolvent.F_h(lam, z)
                res, scale = resolvent.ode_residual_scale(resolvent.F_h, lam, z, 1e-4)
                rows.append([lam.real, lam.imag, z, kv.value.real, kv.value.imag,
                             kv.region, res / scale])
        _emit(args, ["re_lambda", "im_lambda", "zeta", "value_re", "value_im",
                     "region", "ode_residual_rel"], rows, meta)
        return 0
    cfg = _group_config(args)
    rep = groups.load_representation(cfg)
    ball, digest, _, reused = _ball_with_cache(args, cfg, rep)
    x, y = _basepoints(cfg)
    meta = {"digest": digest, "depth": args.depth, "cache_reused": reused}
    if args.action == "quotient":
        val, info = resolvent.quotient_kernel(args.lam, x, y, ball)
        rows = [[args.lam, val.real, val.imag, info["terms_spacelike"],
                 info["terms_near"], info["terms_cone_skipped"]]]
        _emit(args, ["lambda", "value_re", "value_im", "terms_spacelike",
                     "terms_near", "terms_cone_skipped"], rows, meta)
        return 0
    if args.action == "identity":
        lams = ([complex(r, args.lam_grid[3]) for r in
                 np.linspace(args.lam_grid[0], args.lam_grid[1], int(args.lam_grid[2]))]
                if args.lam_grid else [complex(args.lam)])
        rows = []
        for lam in lams:
            res, scale, info = resolvent.dseries_identity(lam, x, y, ball, args.kmax)
            rows.append([lam.real, lam.imag, res, scale, res / scale,
                         info["terms"], args.kmax])
        _emit(args, ["re_lambda", "im_lambda", "residual", "scale",
                     "residual_rel", "terms", "kmax"], rows, meta)
        return 0
    if args.action == "kg-check":
        omega = resolvent.BoundaryDensity.mode(1, 1)
        u = resolvent.poisson_chart_function(args.lam, 0, omega, args.quad_order)
        rows = []
        for t, th, ph in ((0.7, 0.3, 0.9), (1.1, -0.8, 0.2), (0.9, 1.9, -1.2)):
            r = resolvent.kg_fd_residual(u, args.lam, (t, th, ph), h=2e-3)
            rows.append([t, th, ph, r])
        _emit(args, ["t", "theta", "phi", "kg_residual"], rows, meta)
        return 0
    raise UsageError(f"unknown resolvent action {args.action!r}")


# --- poisson commands -------------------------------------------------------------------


def cmd_poisson(args):
    omega = resolvent.BoundaryDensity.mode(*args.mode)
    x = QuadricPoint(cfgmod.basepoint_vec({"basepoint": ("slice",
                                                         [0.25, np.cosh(0.4),
                                                          np.sinh(0.4), 0.0])}))
    if args.action == "eval":
        val, tol = resolvent.poisson_selfcheck(args.lam, args.sigma, omega, x,
                                               args.quad_order)
        rows = [[args.lam, args.sigma, args.mode[0], args.mode[1],
                 val.real, val.imag, tol]]
        _emit(args, ["lambda", "sigma", "k", "l", "value_re", "value_im",
                     "quad_tol"], rows, {})
        return 0
    if args.action == "pushforward-check":
        res = resolvent.pushforward_identity_residual(args.lam, omega, x,
                                                      args.quad_order,
                                                      args.quad_order_b)
        rows = [[args.lam, args.mode[0], args.mode[1], res]]
        _emit(args, ["lambda", "k", "l", "relative_residual"], rows, {})
        return 0
    raise UsageError(f"unknown poisson action {args.action!r}")


# --- modes commands ---------------------------------------------------------------------


def cmd_modes(args):
    if args.action == "wronskian":
        k, l = args.kl
        w = modes.wronskian_closed(args.lam, k, l)
        rows = [[k, l, args.lam, 0.0, w.real, w.imag,
                 min(abs(args.lam - p) for p in modes.pole_set(k, l))]]
        _emit(args, ["k", "l", "lambda_re", "lambda_im", "w_re", "w_im",
                     "pole_distance"], rows, {})
        return 0
    if args.action == "poles":
        rows = []
        for k in range(-2, 3):
            for l in range(-2, 3):
                for p in modes.pole_set(k, l, n_terms=4):
                    rows.append([k, l, p])
        rows.sort()
        _emit(args, ["k", "l", "lambda_pole"], rows, {})
        return 0
    if args.action == "plancherel":
        rows = []
        for zeta in (-2.5, -1.6, -0.5, 0.0, 0.4, 1.7, 3.1):
            out = modes.plancherel_forms(args.lam, zeta)
            rows.append([args.lam, zeta, out["series_value"].real,
                         out["series_value"].imag, out["closed_value"].real,
                         out["closed_value"].imag, out["residual"]])
        _emit(args, ["lambda", "zeta", "series_re", "series_im", "closed_re",
                     "closed_im", "residual"], rows, {})
        return 0
    if args.action == "catalog":
        entries = modes.resonance_catalog(args.s_values, args.mmax)
        if args.format == "json":
            doc = {"schema_version": SCHEMA_VERSION,
                   "catalog": [{**e, "s": e["s"].real, "lambda": e["lambda"].real}
                               for e in entries]}
            text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
            if args.out:
                with open(args.out, "w", encoding="utf-8") as fh:
                    fh.write(text)
            else:
                sys.stdout.write(text)
            return 0
        rows = [[e["s"].real, e["m"], e["lambda"].real, e["parity"],
                 e["order"], e["ode_residual"]] for e in entries]
        _emit(args, ["s", "m", "lambda", "parity", "order", "ode_residual"],
              rows, {})
        return 0
    raise UsageError(f"unknown modes action {args.action!r}")


# --- flow commands ----------------------------------------------------------------------


def cmd_flow(args):
    from . import flow

    rng = np.random.default_rng(args.seed)
    rows = []
    if args.action == "trace":
        p = flow.UnitTangent.base()
        for t in np.linspace(0.0, args.tmax, args.points):
            pt = flow_point = flow.flow_map(p, t)
            bd = flow.boundary_data(flow_point)
            rows.append([t, *pt.x, bd.phi_plus, bd.phi_minus])
        _emit(args, ["t", "x1", "x2", "x3", "x4", "phi_plus", "phi_minus"],
              rows, {"tmax": args.tmax})
        return 0
    if args.action == "split-check":
        for i in range(args.points):
            p = _random_tangent(rng)
            xi = _random_tangent_vector(rng, p)
            sp = flow.anosov_split(p, xi)
            xi_back = sp.reconstruct(p)
            err = max(np.abs(xi_back[0] - xi[0]).max(),
                      np.abs(xi_back[1] - xi[1]).max())
            rows.append([i, sp.a, float(np.linalg.norm(sp.ws)),
                         float(np.linalg.norm(sp.wu)), err])
        _emit(args, ["index", "a", "ws_norm", "wu_norm", "reconstruction_error"],
              rows, {"seed": args.seed})
        return 0
    raise UsageError(f"unknown flow action {args.action!r}")


def _random_tangent(rng):
    from . import flow
    from .core import q_eval

    while True:
        x = rng.normal(size=4)
        if q_eval(x) < -0.1:
            x = x / np.sqrt(-q_eval(x))
            break
    while True:
        w = rng.normal(size=4)
        v = w + q_eval(w, x) * x
        if q_eval(v) > 0.1:
            return flow.UnitTangent(x, v / np.sqrt(q_eval(v)))


def _random_tangent_vector(rng, p):
    from .core import q_eval

    a = rng.normal(size=4)
    b = rng.normal(size=4)
    xi_x = a + q_eval(a, p.x) * p.x
    xi_v = b - q_eval(b, p.v) * p.v
    # the mixed constraint q(x, xi_v) + q(xi_x, v) = 0 is fixed by an x-shift
    xi_v = xi_v + (q_eval(p.x, xi_v) + q_eval(xi_x, p.v)) * p.x
    return (xi_x, xi_v)


# --- dispatch -----------------------------------------------------------------------------


_HANDLERS = {
    "group": cmd_group,
    "series": cmd_series,
    "resolvent": cmd_resolvent,
    "poisson": cmd_poisson,
    "modes": cmd_modes,
    "flow": cmd_flow,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return _HANDLERS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CacheError as exc:
        print(f"cache error: {exc}", file=sys.stderr)
        return 4
    except (NumericalError, QfadsError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
