from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lsztr.correlators import (CorrelatorKey, Correlators, boundary_creation_check,
                               full_correlator, generalized_T, omega_from_G_check,
                               planar_two_point, pole_decomposition_check,
                               two_point_dse_residual)
from lsztr.errors import CoincidingIndices, ValidationError
from lsztr.model import make_spec
from lsztr.numerics import taylor_extract
from lsztr.perturbation_oracle import cumulant_series
from lsztr.ramification import generic_points
from lsztr.spectral_curve import solve_curve
from lsztr.tr_engine import TREngine


@pytest.fixture(scope="module")
def spec33():
    return make_spec([(F(1, 2), 1), (F(3, 2), 1), (F(5, 2), 1)],
                     [(F(1), 1), (F(2), 1), (F(3), 1)], F(1, 10))


@pytest.fixture(scope="module")
def corr33(spec33):
    return Correlators(TREngine(solve_curve(spec33)))


def _taylor(spec, fn, order=2):
    return taylor_extract(lambda l: fn(solve_curve(spec.with_lambda(complex(l)))), 1 / 32, order,
                          nodes=16)


def test_free_two_point(spec22):
    c = solve_curve(spec22.with_lambda(0))
    for p in range(2):
        for q in range(2):
            ref = 1 / (spec22.e[p] + spec22.et[q])
            assert abs(planar_two_point(c, c.eps[p], c.eps_t[q]) - float(ref)) < 1e-14


def test_two_point_first_order(spec22):
    s = spec22
    e, et, r, rt, N = s.e, s.et, s.r, s.rt, s.N
    for p in range(2):
        for q in range(2):
            co = _taylor(s, lambda c: planar_two_point(c, c.eps[p], c.eps_t[q]), order=1)
            ref = -1 / (e[p] + et[q]) ** 2 * (sum(F(rt[l], N) / (e[p] + et[l]) for l in range(2))
                                              + sum(F(r[k], N) / (et[q] + e[k]) for k in range(2)))
            assert abs(co[1] - float(ref)) < 1e-9 * abs(float(ref))


def test_two_point_dse_random_points(curve22):
    rng = np.random.default_rng(5)
    from lsztr.ramification import ramification_points
    pts = generic_points(ramification_points(curve22), 100, rng)
    res = two_point_dse_residual(curve22, pts[:50], pts[50:])
    assert np.max(res) < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False))
def test_x_and_y_forms_agree(curve22, z, w):
    c = curve22
    special = np.concatenate([c.eps, c.eps_t])
    if min(np.min(np.abs(z - special)), np.min(np.abs(w - special)), abs(z - w)) < 0.1:
        return
    if abs(c.x(z) - c.x(w)) < 0.1 or abs(c.y(z) - c.y(w)) < 0.1:
        return
    planar_two_point(c, z, w, check=True)


def test_corner_value_is_continuous(curve22):
    c = curve22
    a = planar_two_point(c, c.eps[0], c.eps_t[1])
    b = planar_two_point(c, c.eps[0] + 1e-7, c.eps_t[1] + 1e-7j)
    assert abs(a - b) < 1e-5 * abs(a)


def test_pole_decomposition_single_eigenvalue():
    c = solve_curve(make_spec([(F(1, 2), 1)], [(F(1, 2), 1)], F(1, 10)))
    assert pole_decomposition_check(c, 0.3 + 0.7j, -0.4 + 0.2j) < 1e-8


def test_pole_decomposition_generic(curve22):
    assert pole_decomposition_check(curve22, 0.3 + 0.7j, -0.4 + 0.2j) < 1e-8


def test_base_case_is_planar_two_point(curve22):
    corr = Correlators(TREngine(curve22))
    z, w = 0.3 + 0.7j, -0.4 + 0.2j
    assert abs(corr.T(0, [], [(z, w)]) - planar_two_point(curve22, z, w)) < 1e-15
    key = CorrelatorKey(0, (), ((0, 1),))
    ref = planar_two_point(curve22, curve22.eps[0], curve22.eps_t[1])
    assert abs(generalized_T(corr, key) - ref) < 1e-15


@pytest.mark.parametrize("p,p1,q", [(1, 0, 0), (0, 1, 1)])
def test_boundary_creation(spec22, p, p1, q):
    t, fd, rel = boundary_creation_check(spec22, p, p1, q)
    assert rel < 1e-5


def test_fast_path_matches_residue_formula(curve22):
    corr = Correlators(TREngine(curve22))
    u, z, w = 0.9 - 0.5j, 0.3 + 0.7j, -0.4 + 0.2j
    a = corr.T(0, [u], [(z, w)])
    corr.fast = False
    b = corr.T(0, [u], [(z, w)])
    assert abs(a - b) < 1e-9 * abs(a)


def test_four_point_first_order(spec22):
    s = spec22
    e, et = s.e, s.et
    key = CorrelatorKey(0, (), ((0, 0, 1, 1),))
    co = _taylor(s, lambda c: full_correlator(Correlators(TREngine(c)), key), order=1)
    ref = -1 / ((e[0] + et[0]) * (e[1] + et[0]) * (e[1] + et[1]) * (e[0] + et[1]))
    assert abs(co[0]) < 1e-12
    assert abs(co[1] - float(ref)) < 1e-9 * abs(float(ref))


def _G(corr, ps, qs):
    b = []
    for p, q in zip(ps, qs):
        b += [p, q]
    return complex(full_correlator(corr, CorrelatorKey(0, (), (tuple(b),))))


@pytest.mark.parametrize("ps,qs", [([0, 1], [0, 1]), ([0, 1, 2], [0, 1, 2]), ([2, 0, 1], [1, 2, 0])])
def test_planar_2N_point_recursion(corr33, ps, qs):
    c = corr33.curve
    n = len(ps)
    s = 0
    for k in range(1, n):
        A = _G(corr33, [ps[0]] + ps[k + 1:], qs[k:])
        B = _G(corr33, [ps[k]] + ps[1:k], qs[:k])
        C = _G(corr33, ps[k:], qs[k:])
        D = _G(corr33, ps[:k], qs[:k])
        s += (A * B - C * D) / ((c.e[ps[k]] - c.e[ps[0]]) * (c.et[qs[0]] - c.et[qs[-1]]))
    ref = -c.lam * s
    val = _G(corr33, ps, qs)
    assert abs(val - ref) < 1e-9 * abs(val)


def test_six_point_against_ribbon_oracle(spec33):
    key = CorrelatorKey(0, (), ((0, 0, 1, 1, 2, 2),))
    co = _taylor(spec33, lambda c: full_correlator(Correlators(TREngine(c)), key), order=2)
    ora = cumulant_series(spec33, [(0, 0, 1, 1, 2, 2)], 2).genus(0)
    for k in range(3):
        assert abs(co[k] - float(ora[k])) < 1e-6 * max(abs(float(ora[2])), 1e-300)


@pytest.mark.parametrize("b", [(0, 0, 1, 1), (0, 1, 1, 0), (0, 0, 1, 1, 2, 2), (2, 1, 0, 2, 1, 0)])
def test_cyclic_rotation_invariance(corr33, b):
    ref = full_correlator(corr33, CorrelatorKey(0, (), (b,)))
    for i in range(1, len(b) // 2):
        rot = b[2 * i:] + b[:2 * i]
        assert abs(full_correlator(corr33, CorrelatorKey(0, (), (rot,))) - ref) < 1e-9 * abs(ref)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=2, max_size=8).filter(lambda v: len(v) % 2 == 0),
       st.integers(0, 3))
def test_canonical_key_is_rotation_invariant(b, i):
    b = tuple(b)
    i = i % (len(b) // 2)
    rot = b[2 * i:] + b[:2 * i]
    assert CorrelatorKey(0, (), (b,)).canonical() == CorrelatorKey(0, (), (rot,)).canonical()


def test_odd_boundary_rejected():
    with pytest.raises(ValidationError):
        CorrelatorKey(0, (), ((0, 1, 0),))


def test_coinciding_indices_need_limit_mode(corr33):
    key = CorrelatorKey(0, (), ((0, 0, 0, 1),))
    with pytest.raises(CoincidingIndices):
        full_correlator(corr33, key)
    val = full_correlator(corr33, key, limit=True)
    assert np.isfinite(val)


def test_omega_from_G_one_point(spec22):
    assert omega_from_G_check(spec22, 0, (0,), order=2, radius=1 / 32, nodes=16) < 1e-7


def test_omega_from_G_two_points(spec22):
    assert omega_from_G_check(spec22, 0, (0, 1), order=2, radius=1 / 32, nodes=16) < 1e-7
