import math

import numpy as np
import pytest
from fractions import Fraction as F
from hypothesis import given, settings, strategies as st

from lsztr.errors import NonConvergence
from lsztr.numerics import (RationalSeries, contour_residue, poly_from_roots, poly_roots,
                            set_precision, taylor_extract, working_precision, get_precision)


def _sorted(z):
    z = np.asarray(z, dtype=complex)
    return z[np.lexsort((z.imag, z.real))]


def test_roots_of_z2_plus_1():
    assert np.allclose(_sorted(poly_roots([1, 0, 1])), [-1j, 1j], atol=1e-14)


def test_linear_root():
    assert np.allclose(poly_roots([-3, 1]), [3], atol=1e-14)


def test_comb_limit_ramification_quadratic():
    # (z + 2/3)^2 + (1/4)(8/9), hand-solved roots -2/3 +- i sqrt(2)/3
    c = [4 / 9 + 2 / 9, 4 / 3, 1]
    ref = [-2 / 3 - 1j * math.sqrt(2) / 3, -2 / 3 + 1j * math.sqrt(2) / 3]
    assert np.allclose(_sorted(poly_roots(c)), ref, atol=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=6))
def test_roots_reproduce_polynomial(roots):
    # separated roots only: clustered ones are ill-posed
    r = np.array(roots)
    if len(r) > 1 and np.min(np.abs(r[:, None] - r[None, :]) + np.eye(len(r)) * 9) < 0.1:
        return
    found = poly_roots(poly_from_roots(r))
    for z in r:
        assert np.min(np.abs(found - z)) < 1e-8


def test_residue_simple_pole():
    assert abs(contour_residue(lambda q: 1 / (q - 0.5), 0.5, 0.1) - 1) < 1e-12


def test_residue_double_pole_without_residue():
    assert abs(contour_residue(lambda q: 1 / q ** 2, 0, 0.5)) < 1e-12


def test_residue_partial_fractions():
    assert abs(contour_residue(lambda q: (2 * q + 3) / (q - 1), 1, 0.2) - 5) < 1e-12


def test_residue_nonconvergence_for_pole_hugging_the_contour():
    with pytest.raises(NonConvergence):
        contour_residue(lambda q: 1 / (q - 0.1000001), 0, 0.1, max_nodes=256)


def test_taylor_geometric():
    assert np.allclose(taylor_extract(lambda l: 1 / (1 - l), 1 / 64, 3), [1, 1, 1, 1], atol=1e-12)


def test_taylor_monomial():
    assert np.allclose(taylor_extract(lambda l: l ** 2, 1 / 64, 4), [0, 0, 1, 0, 0], atol=1e-12)


def test_taylor_sqrt():
    c = taylor_extract(lambda l: np.sqrt(1 + 12 * l), 1 / 64, 3)
    assert np.allclose(c, [1, 6, -18, 108], rtol=1e-9, atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(-20, 20), min_size=1, max_size=6))
def test_taylor_recovers_polynomials(coeffs):
    f = lambda l: sum(c * l ** k for k, c in enumerate(coeffs))
    got = taylor_extract(f, 0.5, len(coeffs) - 1)
    assert np.allclose(got, coeffs, atol=1e-9)


series = st.lists(st.fractions(min_value=-5, max_value=5, max_denominator=7), min_size=4,
                  max_size=4).map(lambda c: RationalSeries(c, 3))


@settings(max_examples=50, deadline=None)
@given(series, series, series)
def test_rational_series_ring_axioms(a, b, c):
    assert a * (b + c) == a * b + a * c
    assert (a * b) * c == a * (b * c)
    assert a * b == b * a
    assert a - a == RationalSeries([], 3)


@settings(max_examples=30, deadline=None)
@given(series)
def test_rational_series_inverse(a):
    if a[0] == 0:
        return
    one = RationalSeries([1], 3)
    assert a * a.inverse() == one


def test_rational_series_exact_value():
    lam = RationalSeries.variable(3)
    s = (1 - lam).inverse()
    assert list(s) == [F(1)] * 4


def test_precision_switch_is_scoped(monkeypatch):
    monkeypatch.delenv("LSZ_TR_PREC", raising=False)
    base = get_precision()
    with working_precision(113):
        assert get_precision() == 113
    assert get_precision() == base


def test_precision_env_override(monkeypatch):
    monkeypatch.setenv("LSZ_TR_PREC", "80")
    try:
        assert set_precision(None) == 80
    finally:
        monkeypatch.delenv("LSZ_TR_PREC")
        set_precision(53)
