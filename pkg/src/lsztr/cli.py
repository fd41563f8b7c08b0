"""Command-line interface.

Exit codes: 0 success, 1 invalid input, 2 non-convergence, 3 failed check suite.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from .correlators import (CorrelatorKey, Correlators, boundary_creation_check, check_H_P,
                          full_correlator, two_point_dse_residual)
from .errors import LSZError, NonConvergence, ValidationError
from .limits import (TABLE_TOPOLOGIES, comb_limit_curve, lsz_tilde_zero_check, map_counts,
                     tutte_check)
from .model import ModelSpec, comb_limit_spec, load_spec, make_spec
from .numerics import contour_residue, set_precision
from .perturbation_oracle import cumulant_series, dse_series_check
from .ramification import generic_points, ramification_points
from .spectral_curve import solve_curve
from .tr_engine import TREngine, check_loop_equations, free_energy, omega_at_eps

COMMANDS = ("solve", "omega", "correlator", "map-counts", "series", "check", "free-energy")
SUITES = ("loop-equations", "dse", "h-p", "limits", "boundary-creation", "structural", "all")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


# ----------------------------------------------------------------------------
# serialization
# ----------------------------------------------------------------------------

def _fmt_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise ValidationError("non-finite value in output")
    s = f"{x:.17g}"
    if "e" not in s and "." not in s:
        s += ".0"
    return s


def to_plain(obj):
    """Convert numpy scalars, complex numbers and Fractions to JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def dumps(obj) -> str:
    """JSON text with floats printed to 17 significant digits."""
    obj = to_plain(obj)

    def enc(o, ind):
        pad = "  " * (ind + 1)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(k)}: {enc(v, ind + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + "  " * ind + "}"
        if isinstance(o, list):
            if all(not isinstance(v, (dict, list)) for v in o):
                return "[" + ", ".join(enc(v, ind) for v in o) + "]"
            return "[\n" + ",\n".join(pad + enc(v, ind + 1) for v in o) + "\n" + "  " * ind + "]"
        if isinstance(o, float):
            return _fmt_float(o)
        return json.dumps(o)

    return enc(obj, 0) + "\n"


def to_csv(rows: list, header: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt_float(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _flatten(result: dict) -> tuple:
    """Generic CSV view: one row per (key, value) with complex split."""
    rows = []
    for k, v in to_plain(result).items():
        if isinstance(v, list) and len(v) == 2 and all(isinstance(t, float) for t in v):
            rows.append([k, v[0], v[1]])
        else:
            rows.append([k, json.dumps(v), ""])
    return rows, ["key", "value", "imag"]


# ----------------------------------------------------------------------------
# parsing helpers
# ----------------------------------------------------------------------------

def parse_points(text: str) -> list:
    """``"a+bi;c+di"`` to complex numbers."""
    out = []
    for tok in text.split(";"):
        tok = tok.strip().replace(" ", "").replace("i", "j")
        if not tok:
            continue
        try:
            out.append(complex(tok))
        except ValueError:
            raise ValidationError(f"cannot parse point {tok!r}") from None
    return out


def parse_boundaries(text: str) -> tuple:
    """``"0,1,1,0|1,1"`` to boundaries of eigenvalue indices."""
    out = []
    for part in text.split("|"):
        try:
            b = tuple(int(t) for t in part.split(",") if t.strip())
        except ValueError:
            raise ValidationError(f"cannot parse boundary {part!r}") from None
        if not b or len(b) % 2:
            raise ValidationError("boundaries need a positive even number of indices")
        out.append(b)
    return tuple(out)


def default_spec() -> ModelSpec:
    """Generic rational model used when no config is given."""
    F = Fraction
    return make_spec([(F(1, 2), 1), (F(3, 2), 2)], [(F(1), 1), (F(5, 2), 2)], F(1, 10))


def _spec(args) -> ModelSpec:
    if args.config:
        return load_spec(args.config, strict=not getattr(args, "non_strict", False))
    return default_spec()


def _check_indices(spec: ModelSpec, boundaries, I=()):
    for b in boundaries:
        for i, k in enumerate(b):
            lim = spec.d if i % 2 == 0 else spec.dt
            if not 0 <= k < lim:
                raise ValidationError(f"index {k} out of range")
    for k in I:
        if not 0 <= k < spec.d:
            raise ValidationError(f"index {k} out of range")


# ----------------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------------

def cmd_solve(args) -> tuple:
    spec = _spec(args)
    curve = solve_curve(spec)
    out = {"model": spec.to_json(), "curve": curve.to_json()}
    if spec.lam != 0:
        rami = ramification_points(curve)
        out["ramification_points"] = list(rami.betas)
    return out, None


def cmd_omega(args) -> tuple:
    if args.g is None or args.n is None:
        raise ValidationError("omega needs -g and -n")
    spec = _spec(args)
    if spec.lam == 0:
        raise ValidationError("omega needs a nonzero coupling")
    curve = solve_curve(spec)
    eng = TREngine(curve)
    if args.points:
        pts = parse_points(args.points)
        if len(pts) != args.n:
            raise ValidationError(f"expected {args.n} points, got {len(pts)}")
        if (args.g, args.n) == (0, 1):
            val = complex(eng.omega01(pts[0]))
        elif (args.g, args.n) == (0, 2):
            val = complex(eng.omega02(*pts))
        else:
            val = complex(eng.omega(args.g, pts))
        out = {"g": args.g, "n": args.n, "points": pts, "value": val}
    else:
        idx = [0] * args.n
        out = {"g": args.g, "n": args.n, "indices": idx, "value": omega_at_eps(eng, args.g, idx)}
    return out, None


def cmd_correlator(args) -> tuple:
    if not args.boundaries:
        raise ValidationError("correlator needs --boundaries")
    spec = _spec(args)
    bnds = parse_boundaries(args.boundaries)
    I = tuple(int(t) for t in args.indices.split(",")) if args.indices else ()
    _check_indices(spec, bnds, I)
    g = args.g or 0
    curve = solve_curve(spec)
    corr = Correlators(TREngine(curve))
    key = CorrelatorKey(g, I, bnds)
    val = full_correlator(corr, key, limit=args.limit)
    return {"g": g, "I": list(I), "boundaries": [list(b) for b in bnds], "value": val}, None


def cmd_map_counts(args) -> tuple:
    order = 5 if args.order is None else args.order
    if args.g is None or args.n is None:
        pairs = TABLE_TOPOLOGIES
    else:
        pairs = ((args.g, args.n),)
    rows = []
    for g, n in pairs:
        for r in map_counts(g, n, order):
            rows.append([r.g, r.n, r.order, r.value, r.raw, r.abs_err])
    header = ["g", "n", "order", "integer", "raw_float", "abs_error"]
    out = {"rows": [dict(zip(header, r)) for r in rows]}
    return out, (rows, header)


def cmd_series(args) -> tuple:
    if not args.boundaries:
        raise ValidationError("series needs --boundaries")
    spec = _spec(args)
    if not spec.is_rational():
        raise ValidationError("series needs exact rational eigenvalues")
    bnds = parse_boundaries(args.boundaries)
    _check_indices(spec, bnds)
    order = 2 if args.order is None else args.order
    res = cumulant_series(spec, bnds, order)
    rows = [[g, k, str(c)] for g, s in res.series.items() for k, c in enumerate(s.coeffs)]
    out = {"boundaries": [list(b) for b in bnds], "order": order,
           "genus": {str(g): [str(c) for c in s.coeffs] for g, s in res.series.items()}}
    return out, (rows, ["g", "order", "coefficient"])


def cmd_free_energy(args) -> tuple:
    g = 2 if args.g is None else args.g
    spec = _spec(args)
    if spec.lam == 0:
        raise ValidationError("free energy needs a nonzero coupling")
    eng = TREngine(solve_curve(spec))
    fe = free_energy(eng, g)
    return {"g": g, "value": fe.value, "algebraic": fe.algebraic}, None


# -- check suites --------------------------------------------------------------

def _suite_loop(spec, rng, npts):
    eng = TREngine(solve_curve(spec))
    results = []
    for g, n in ((1, 1), (0, 3), (1, 2), (0, 4), (2, 1)):
        worst = 0.0
        for _ in range(npts):
            pts = generic_points(eng.rami, n, rng)
            r = check_loop_equations(eng, g, n, pts[1:], pts[0])
            worst = max(worst, r["linear_residual"] / max(r["linear_scale"], 1e-300),
                        r["quadratic_residual"] / max(r["quadratic_scale"], 1e-300))
        results.append({"name": f"loop equations (g={g}, n={n})", "value": worst,
                        "tol": 1e-7, "ok": worst < 1e-7})
    return results


def _suite_dse(spec, rng, npts):
    curve = solve_curve(spec)
    rami = ramification_points(curve)
    pts = generic_points(rami, 2 * npts, rng)
    worst = float(np.max(two_point_dse_residual(curve, pts[:npts], pts[npts:])))
    out = [{"name": "complexified 2-point DSE", "value": worst, "tol": 1e-9, "ok": worst < 1e-9}]
    if spec.is_rational():
        res = dse_series_check(spec, 2, genus=1)
        nz = sum(1 for s in res.values() for c in s.coeffs if c != 0)
        out.append({"name": "exact DSE series through lam^2", "value": float(nz), "tol": 0.0,
                    "ok": nz == 0})
    return out


def _suite_hp(spec, rng, npts):
    curve = solve_curve(spec)
    corr = Correlators(TREngine(curve))
    out = []
    for g, n in ((0, 1), (0, 2), (1, 1)):
        worst = 0.0
        for _ in range(npts):
            pts = generic_points(corr.engine.rami, n, rng)
            v = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
            r = check_H_P(corr, g, list(pts[1:]), pts[0], v)
            worst = max(worst, r["h_residual"] / max(r["h_scale"], 1e-300),
                        r["p_residual"] / max(r["p_scale"], 1e-300))
        tol = 1e-9 if (g, n) == (0, 1) else 1e-7
        out.append({"name": f"H and P (g={g}, n={n})", "value": worst, "tol": tol, "ok": worst < tol})
    return out


def _suite_limits(spec, rng, npts):
    F = Fraction
    out = []
    for E in ([(F(1, 2), 1)], [(F(1, 2), 1), (F(3, 2), 2)]):
        N = sum(m for _, m in E)
        sp = make_spec(E, [(F(1), N)], F(1, 10))
        r = lsz_tilde_zero_check(sp, npts=20, seed=int(rng.integers(2 ** 31)))
        out.append({"name": f"one-cut form, d={len(E)}", "value": r, "tol": 1e-8, "ok": r < 1e-8})
    cl = comb_limit_curve(0.5, 0.5, 0.25)
    dev = cl.compare(solve_curve(comb_limit_spec()))
    out.append({"name": "closed-form d=dt=1 curve", "value": dev, "tol": 1e-10, "ok": dev < 1e-10})
    worst = max(t[3] for t in tutte_check(4))
    out.append({"name": "Tutte numbers", "value": worst, "tol": 1e-6, "ok": worst < 1e-6})
    return out


def _suite_boundary(spec, rng, npts):
    if spec.d < 2:
        return [{"name": "boundary creation", "value": 0.0, "tol": 1e-5, "ok": True,
                 "skipped": "needs d >= 2"}]
    out = []
    for p in range(spec.d):
        p1 = (p + 1) % spec.d
        for q in range(spec.dt):
            rel = boundary_creation_check(spec, p, p1, q)[2]
            out.append({"name": f"boundary creation (p={p}, p1={p1}, q={q})", "value": rel,
                        "tol": 1e-5, "ok": rel < 1e-5})
    return out


def _suite_structural(spec, rng, npts):
    eng = TREngine(solve_curve(spec))
    c, rami = eng.curve, eng.rami
    pts = list(generic_points(rami, 4, rng))
    sym = 0.0
    for g, n in ((0, 3), (1, 2), (0, 4)):
        a = eng.omega(g, pts[:n])
        for perm in itertools.permutations(pts[:n]):
            sym = max(sym, abs(eng.omega(g, list(perm)) - a) / abs(a))
    res = 0.0
    for g in (1, 2):
        for b, rad in zip(rami.betas, rami.radius):
            res = max(res, abs(contour_residue(lambda q: eng.omega(g, [q]) * c.xp(q), b,
                                               0.5 * rad)))
    f0 = free_energy(eng, 2).value
    stab = max(abs(free_energy(eng, 2, radius_scale=s).value - f0) / abs(f0) for s in (0.75, 1.25))
    return [{"name": "permutation symmetry", "value": sym, "tol": 1e-8, "ok": sym < 1e-8},
            {"name": "residues at ramification points", "value": res, "tol": 1e-8,
             "ok": res < 1e-8},
            {"name": "free energy radius stability", "value": stab, "tol": 1e-7,
             "ok": stab < 1e-7}]


def cmd_check(args) -> tuple:
    suite = args.suite or "all"
    if suite not in SUITES:
        raise ValidationError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    spec = _spec(args)
    if spec.lam == 0:
        raise ValidationError("checks need a nonzero coupling")
    rng = np.random.default_rng(args.seed)
    npts = args.npts
    runners = {"loop-equations": _suite_loop, "dse": _suite_dse, "h-p": _suite_hp,
               "limits": _suite_limits, "boundary-creation": _suite_boundary,
               "structural": _suite_structural}
    names = list(runners) if suite == "all" else [suite]
    results = []
    for name in names:
        for r in runners[name](spec, rng, npts):
            r["suite"] = name
            results.append(r)
    ok = all(r["ok"] for r in results)
    rows = [[r["suite"], r["name"], float(r["value"]), float(r["tol"]), r["ok"]] for r in results]
    return ({"suite": suite, "seed": args.seed, "passed": ok, "results": results},
            (rows, ["suite", "check", "value", "tol", "ok"]), ok)


HANDLERS = {"solve": cmd_solve, "omega": cmd_omega, "correlator": cmd_correlator,
            "map-counts": cmd_map_counts, "series": cmd_series, "check": cmd_check,
            "free-energy": cmd_free_energy}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lsztr", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="model JSON file")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"),
                   help="output format (default: csv for map-counts, json otherwise)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--precision", type=int, help="working precision in bits")
    p.add_argument("-g", "--g", type=int, dest="g")
    p.add_argument("-n", "--n", type=int, dest="n")
    p.add_argument("--points", help='evaluation points, e.g. "0.3+0.7i;1.1-0.2i"')
    p.add_argument("--order", type=int)
    p.add_argument("--suite")
    p.add_argument("--boundaries", help='boundaries of indices, e.g. "0,1,1,0|1,1"')
    p.add_argument("--indices", help="derivative indices, e.g. 0,1")
    p.add_argument("--limit", action="store_true", help="limit mode for coinciding indices")
    p.add_argument("--npts", type=int, default=20, help="random points per check")
    p.add_argument("--non-strict", action="store_true", help="allow complex or non-positive input")
    return p


def run(argv=None) -> int:
    """Execute one command; returns the process exit code."""
    try:
        args = build_parser().parse_args(argv)
        env = os.environ.get("LSZ_TR_PREC")
        set_precision(int(env) if env else args.precision)
        if args.seed < 0:
            raise ValidationError("--seed must be non-negative")
        res = HANDLERS[args.command](args)
        result, table = res[0], res[1]
        ok = res[2] if len(res) > 2 else True
        fmt = args.format or ("csv" if args.command == "map-counts" else "json")
        if fmt == "csv":
            rows, header = table if table is not None else _flatten(result)
            text = to_csv(rows, header)
        else:
            text = dumps(result)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0 if ok else 3
    except NonConvergence as exc:
        sys.stderr.write(dumps({"error": type(exc).__name__, "message": str(exc)}))
        return 2
    except (LSZError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(dumps({"error": type(exc).__name__, "message": str(exc)}))
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
