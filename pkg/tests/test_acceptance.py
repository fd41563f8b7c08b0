"""Acceptance criteria 1-9, one test each; every test prints a PASS/FAIL line."""
import itertools
import json
from fractions import Fraction as F

import numpy as np
import pytest

from lsztr import cli
from lsztr.correlators import (Correlators, H_def, P_def, boundary_creation_check,
                               planar_two_point, two_point_dse_residual)
from lsztr.limits import comb_limit_curve, lsz_tilde_zero_check, map_counts, tutte_check
from lsztr.model import comb_limit_spec, make_spec
from lsztr.numerics import contour_residue, taylor_extract
from lsztr.perturbation_oracle import Label, cumulant_series, dse_series_check
from lsztr.ramification import generic_points, preimages_x, ramification_points
from lsztr.spectral_curve import solve_curve
from lsztr.tr_engine import (TREngine, check_H_P, free_energy, omega1_regularized)

REFERENCE_COUNTS = {
    (0, 1): [1, 2, 9, 54, 378, 2916],
    (0, 2): [0, 1, 13, 144, 1539, 16335],
    (0, 3): [0, 0, 6, 172, 3294, 53136],
    (1, 1): [0, 0, 1, 20, 307, 4280],
    (1, 2): [0, 0, 0, 0, 21, 734],
    (2, 1): [0, 0, 0, 0, 21, 966],
}


@pytest.fixture
def report(capsys):
    def emit(k, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {k}: {'PASS' if ok else 'FAIL'} - {detail}")
    return emit


def test_criterion_1_map_count_reproduction(report):
    bad, worst = [], 0.0
    for (g, n), ref in REFERENCE_COUNTS.items():
        rows = map_counts(g, n, 5)
        got = [r.value for r in rows]
        worst = max(worst, max(r.abs_err for r in rows))
        if got != ref:
            bad.append(f"Omega_({g},{n}) = {tuple(got)} vs reference {tuple(ref)}")
    ok = not bad and worst < 1e-3
    report(1, ok, "; ".join(bad) if bad else f"all six columns exact, max pre-rounding error {worst:.1e}")
    assert ok, bad


def test_criterion_2_tutte(report):
    rows = tutte_check(4)
    worst = max(r[3] for r in rows)
    ok = worst < 1e-6
    report(2, ok, f"n <= 4, max relative error {worst:.1e}")
    assert ok


def _oracle_quantities(spec):
    o = lambda b: list(cumulant_series(spec, b, 2).genus(0))
    rt = [F(m, spec.N) for m in spec.rt]
    e = spec.e
    om1 = [sum(rt[l] * cumulant_series(spec, [(1, l)], 2).genus(0)[k] for l in range(2))
           for k in range(3)]
    # repeated Et-labels inside one correlator are distinct symbols with equal values
    copy = lambda b: Label("t", ("copy", b), F(spec.et[b]))
    om2 = [F(0)] * 3
    om2[0] += 1 / (F(e[0]) - F(e[1])) ** 2
    for a in range(2):
        for b in range(2):
            v = cumulant_series(spec, [(0, a), (1, b) if a != b else (1, copy(b))], 2).genus(0)
            for k in range(3):
                om2[k] += rt[a] * rt[b] * v[k]
    for l in range(2):
        v = cumulant_series(spec, [(0, l, 1, copy(l))], 2).genus(0)
        for k in range(3):
            om2[k] += rt[l] * v[k]
    return [o([(0, 1)]), om1, om2, o([(0, 0, 1, 1)]), o([(0, 0), (1, 1)])]


def test_criterion_3_oracle_equivalence(report):
    spec = make_spec([(F(1, 2), 1), (F(3, 2), 2)], [(F(1), 1), (F(5, 2), 2)], F(1, 10))

    def engine_values(lam):
        c = solve_curve(spec.with_lambda(complex(lam)))
        corr = Correlators(TREngine(c))
        e, t = c.eps, c.eps_t
        return np.array([planar_two_point(c, e[0], t[1]), omega1_regularized(c, 1),
                         corr.engine.omega02(e[0], e[1]),
                         corr.T(0, [], [(e[0], t[0], e[1], t[1])]),
                         corr.T(0, [], [(e[0], t[0]), (e[1], t[1])])])

    co = taylor_extract(engine_values, 1 / 32, 2, nodes=32)
    names = ["G(eps_0, eps_t_1)", "Omega_1", "Omega_2", "4-point", "2+2-point"]
    worst = 0.0
    for i, ref in enumerate(_oracle_quantities(spec)):
        ref = [float(v) for v in ref]
        scale = max(abs(v) for v in ref)
        for k in range(3):
            # relative per coefficient; identically vanishing orders against the series scale
            den = abs(ref[k]) if ref[k] != 0 else scale
            worst = max(worst, abs(co[k, i] - ref[k]) / den)
    ok = worst < 1e-6
    report(3, ok, f"{', '.join(names)} through lam^2, max relative deviation {worst:.1e}")
    assert ok


def test_criterion_4_loop_equations(report, tmp_path):
    out = tmp_path / "loop.json"
    code = cli.run(["check", "--suite", "loop-equations", "--seed", "42", "--out", str(out)])
    res = json.loads(out.read_text())["results"]
    worst = max(r["value"] for r in res)
    ok = code == 0 and len(res) == 5 and worst < 1e-7
    report(4, ok, f"20 seeded points x {len(res)} topologies, max residual/scale {worst:.1e}")
    assert ok


def test_criterion_5_dse(report):
    spec = make_spec([(F(1, 2), 1), (F(3, 2), 2)], [(F(1), 2), (F(2), 1)], F(1, 10))
    c = solve_curve(spec)
    pts = generic_points(ramification_points(c), 100, np.random.default_rng(5))
    num = float(np.max(two_point_dse_residual(c, pts[:50], pts[50:])))
    exact = all(s.is_zero() for sp in (spec, comb_limit_spec())
                for s in dse_series_check(sp, 2, genus=1).values())
    ok = num < 1e-9 and exact
    report(5, ok, f"numeric residual {num:.1e} at 50 points, exact series zero through lam^2: {exact}")
    assert ok


def test_criterion_6_H_P(report):
    spec = make_spec([(F(1, 2), 1), (F(3, 2), 2)], [(F(1), 2), (F(2), 1)], F(1, 10))
    eng = TREngine(solve_curve(spec))
    c, corr = eng.curve, Correlators(eng)
    rng = np.random.default_rng(11)
    closed = 0.0
    for _ in range(5):
        z = generic_points(eng.rami, 1, rng)[0]
        v = complex(*rng.uniform(-2, 2, 2))
        prod = np.prod([(v - c.y(zk)) / (v - c.et[k]) for k, zk in enumerate(preimages_x(c, z))])
        closed = max(closed, abs(H_def(corr, 0, [], z, v) + prod) / abs(prod),
                     abs(P_def(corr, 0, [], z, v) - (v - c.y(z)) * prod) / abs((v - c.y(z)) * prod))
    worst = 0.0
    for g, n in ((0, 2), (1, 1)):
        for _ in range(5):
            pts = generic_points(eng.rami, n, rng)
            v = complex(*rng.uniform(-2, 2, 2))
            r = check_H_P(eng, g, list(pts[1:]), pts[0], v)
            worst = max(worst, r["h_residual"] / r["h_scale"], r["p_residual"] / r["p_scale"])
    ok = closed < 1e-9 and worst < 1e-7
    report(6, ok, f"(0,1) closed forms {closed:.1e}; (0,2), (1,1) residual/scale {worst:.1e}")
    assert ok


def test_criterion_7_limits(report):
    res = []
    for E in ([(F(1, 2), 1)], [(F(1, 2), 1), (F(3, 2), 2)]):
        N = sum(m for _, m in E)
        res.append(lsz_tilde_zero_check(make_spec(E, [(F(1), N)], F(1, 10)), npts=20, seed=0))
    dev = comb_limit_curve(0.5, 0.5, 0.25).compare(solve_curve(comb_limit_spec()))
    ok = max(res) < 1e-8 and dev < 1e-10
    report(7, ok, f"one-cut residual d=1: {res[0]:.1e}, d=2: {res[1]:.1e}; closed-form curve {dev:.1e}")
    assert ok


def test_criterion_8_boundary_creation(report):
    spec = make_spec([(F(1, 2), 1), (F(3, 2), 2)], [(F(1), 2), (F(2), 1)], F(1, 10))
    worst = max(boundary_creation_check(spec, p, p1, q, h=1e-4)[2]
                for p, p1, q in ((1, 0, 0), (1, 0, 1), (0, 1, 0), (0, 1, 1)))
    ok = worst < 1e-5
    report(8, ok, f"residue formula vs -(N/r_p) d/de_p, Richardson h=1e-4, max relative {worst:.1e}")
    assert ok


def test_criterion_9_structural(report):
    spec = make_spec([(F(1, 2), 1), (F(3, 2), 2)], [(F(1), 2), (F(2), 1)], F(1, 10))
    eng = TREngine(solve_curve(spec))
    c, rami = eng.curve, eng.rami
    pts = list(generic_points(rami, 4, np.random.default_rng(9)))
    sym = 0.0
    for g, n in ((0, 3), (1, 2), (0, 4), (1, 3)):
        a = eng.omega(g, pts[:n])
        for perm in itertools.permutations(pts[:n]):
            sym = max(sym, abs(eng.omega(g, list(perm)) - a) / abs(a))
    res = 0.0
    for g in (1, 2):
        for b, rad in zip(rami.betas, rami.radius):
            res = max(res, abs(contour_residue(lambda q: eng.omega(g, [q]) * c.xp(q), b, 0.5 * rad)))
    f0 = free_energy(eng, 2).value
    stab = max(abs(free_energy(eng, 2, radius_scale=s).value - f0) / abs(f0) for s in (0.75, 1.25))
    gauge = abs(free_energy(eng, 2, phi_const=1.0).value - f0) / abs(f0)
    ok = sym < 1e-8 and res < 1e-8 and stab < 1e-7 and gauge < 1e-8
    report(9, ok, f"symmetry {sym:.1e}, residues at ramification points {res:.1e}, "
                  f"F2 radius stability {stab:.1e}, integration constant {gauge:.1e}")
    assert ok
