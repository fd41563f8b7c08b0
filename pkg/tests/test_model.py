import json
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from lsztr.errors import (DuplicateEigenvalue, MultiplicityMismatch, NonPositiveInput,
                          ValidationError)
from lsztr.model import comb_limit_spec, load_spec, make_spec, spec_from_json


def test_combinatorial_limit_is_valid():
    s = comb_limit_spec(F(1, 2), F(1, 2), F(1, 4), N=3)
    assert (s.d, s.dt, s.r, s.rt) == (1, 1, (3,), (3,))


def test_duplicate_eigenvalue():
    with pytest.raises(DuplicateEigenvalue):
        make_spec([(1, 1), (1, 1)], [(1, 2)], F(1, 10))


def test_multiplicity_mismatch():
    with pytest.raises(MultiplicityMismatch):
        make_spec([(1, 2), (2, 3)], [(1, 4)], F(1, 10), N=4)


def test_strict_rejects_negative_values():
    with pytest.raises(NonPositiveInput):
        make_spec([(-1, 1)], [(1, 1)], F(1, 10))
    with pytest.raises(NonPositiveInput):
        make_spec([(1, 1)], [(1, 1)], -1)


def test_non_strict_accepts_complex_coupling():
    s = make_spec([(1, 1)], [(1, 1)], 0.1j, strict=False)
    assert s.lam == 0.1j


@settings(max_examples=50, deadline=None)
@given(st.lists(st.fractions(min_value=F(1, 10), max_value=10, max_denominator=10), min_size=1,
                max_size=5, unique=True),
       st.randoms(use_true_random=False))
def test_canonical_order_is_ascending_and_permutation_invariant(vals, rnd):
    E = [(v, 1) for v in vals]
    shuffled = E[:]
    rnd.shuffle(shuffled)
    a = make_spec(E, [(1, len(E))], F(1, 10))
    b = make_spec(shuffled, [(1, len(E))], F(1, 10))
    assert a == b
    assert list(a.e) == sorted(vals)


def test_json_round_trip_with_rational_strings(tmp_path):
    raw = {"eigenvalues_E": [["3/2", 2], ["1/2", 1]], "eigenvalues_Etilde": [[1, 3]],
           "lambda": "1/10"}
    path = tmp_path / "m.json"
    path.write_text(json.dumps(raw))
    s = load_spec(str(path))
    assert s.e == (F(1, 2), F(3, 2)) and s.lam == F(1, 10) and s.N == 3
    assert s.is_rational()


@pytest.mark.parametrize("raw", [
    {"eigenvalues_E": [[1, 1]], "lambda": 0.1},
    {"eigenvalues_E": [["x", 1]], "eigenvalues_Etilde": [[1, 1]], "lambda": 0.1},
    {"eigenvalues_E": [[1, 1.5]], "eigenvalues_Etilde": [[1, 1]], "lambda": 0.1},
])
def test_bad_json_is_a_validation_error(raw):
    with pytest.raises(ValidationError):
        spec_from_json(raw)
