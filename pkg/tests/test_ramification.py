from fractions import Fraction as F

import numpy as np
import pytest

from lsztr.model import make_spec
from lsztr.ramification import (galois_involution, generic_points, preimages_x, preimages_y,
                                ramification_points)
from lsztr.spectral_curve import solve_curve


def _sorted(z):
    z = np.asarray(z)
    return z[np.lexsort((z.imag, z.real))]


def test_comb_limit_betas(comb_curve):
    b = _sorted(ramification_points(comb_curve).betas)
    assert np.allclose(b, [-2 / 3 - 1j * np.sqrt(2) / 3, -2 / 3 + 1j * np.sqrt(2) / 3], atol=1e-12)


@pytest.mark.parametrize("dt", [1, 2, 3])
def test_count_is_twice_dt(dt):
    Et = [(F(1) + k, 1) for k in range(dt)]
    c = solve_curve(make_spec([(F(1, 2), dt)], Et, F(1, 10)))
    assert len(ramification_points(c)) == 2 * dt


def test_small_coupling_collapse():
    dists = []
    for lam in (1e-4, 1e-6):
        c = solve_curve(make_spec([(F(1, 2), 1)], [(F(1), 1)], lam))
        dists.append(np.max(np.abs(ramification_points(c).betas - c.eps_t[0])))
    # like sqrt(lam)
    assert abs(dists[0] / dists[1] - 10) < 0.1


def test_involution(curve22, rng):
    rami = ramification_points(curve22)
    for i in range(len(rami)):
        b = rami.betas[i]
        assert abs(galois_involution(rami, i, b) - b) < 1e-12
        q = b + 0.3 * rami.radius[i] * np.exp(2j * np.pi * rng.random(5))
        s = galois_involution(rami, i, q)
        assert np.max(np.abs(curve22.x(s) - curve22.x(q))) < 1e-10
        assert np.max(np.abs(galois_involution(rami, i, s) - q)) < 1e-9


def test_preimages_single_dt():
    c = solve_curve(make_spec([(F(1, 2), 1), (F(2), 1)], [(F(1), 2)], F(1, 10)))
    z = 0.4 + 0.9j
    zh = preimages_x(c, z)
    assert zh.shape == (1,) and abs(c.x(zh[0]) - c.x(z)) < 1e-10


def test_preimages_y_single_d():
    c = solve_curve(make_spec([(F(1, 2), 2)], [(F(1), 1), (F(2), 1)], F(1, 10)))
    w = -0.3 + 0.5j
    wh = preimages_y(c, w)
    assert wh.shape == (1,) and abs(c.y(wh[0]) - c.y(w)) < 1e-10


def test_fiber_is_permutation_stable(curve22):
    z = 0.7 - 0.8j
    fiber = np.concatenate([[z], preimages_x(curve22, z)])
    for j in range(1, len(fiber)):
        other = np.concatenate([[fiber[j]], preimages_x(curve22, fiber[j])])
        assert np.allclose(_sorted(other), _sorted(fiber), atol=1e-10)


def test_generic_points_are_seeded(curve22):
    rami = ramification_points(curve22)
    a = generic_points(rami, 5, np.random.default_rng(7))
    b = generic_points(rami, 5, np.random.default_rng(7))
    assert np.array_equal(a, b)
    assert np.min(np.abs(a[:, None] - rami.betas[None, :])) > 0.05
