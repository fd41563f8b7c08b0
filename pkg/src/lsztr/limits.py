"""Combinatorial limit, map counts and the one-cut case with a vanishing Et."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .correlators import CorrelatorKey, Correlators, full_correlator, planar_two_point
from .errors import BranchChoice, BranchCut, RoundingGuard, ValidationError
from .model import ModelSpec, comb_limit_spec, make_spec
from .numerics import taylor_extract
from .spectral_curve import SpectralCurve, solve_curve
from .tr_engine import TREngine, omega_at_eps

TABLE_TOPOLOGIES = ((0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (2, 1))


# ----------------------------------------------------------------------------
# closed-form curve for d = dt = 1
# ----------------------------------------------------------------------------

@dataclass
class CombLimitCurve:
    """Closed-form curve data for ``E = e 1``, ``Et = et 1``.

    ``rho_t = -rho`` in the convention ``x(z) = z + (lam/N) rho_t / (z - eps_t)``.
    """

    e: complex
    et: complex
    lam: complex
    N: int
    eps: complex
    eps_t: complex
    rho: complex
    rho_t: complex

    def compare(self, curve: SpectralCurve) -> float:
        """Largest deviation from a numerically solved curve."""
        return float(max(abs(self.eps - curve.eps[0]), abs(self.eps_t - curve.eps_t[0]),
                         abs(self.rho - curve.rho[0]), abs(self.rho_t - curve.rho_t[0])))


def comb_limit_curve(e, et, lam, N: int = 1) -> CombLimitCurve:
    """Closed-form solution of the d = dt = 1 curve.

    Raises
    ------
    BranchCut
        If ``(e + et)^2 + 12 lam`` is real and not positive.
    """
    disc = complex((e + et) ** 2 + 12 * lam)
    if disc.imag == 0 and disc.real <= 0:
        raise BranchCut("(e + et)^2 + 12 lam must be positive")
    if lam == 0:
        return CombLimitCurve(e, et, 0, N, complex(e), complex(-et), complex(N), complex(-N))
    s = cmath.sqrt(disc)
    eps = (5 * e - et + s) / 6
    eps_t = (e - 5 * et - s) / 6
    rho = N * (-(e + et) ** 2 + 12 * lam + (e + et) * s) / (18 * lam)
    return CombLimitCurve(complex(e), complex(et), complex(lam), N, eps, eps_t, rho, -rho)


# ----------------------------------------------------------------------------
# map counts
# ----------------------------------------------------------------------------

@dataclass
class MapCountRow:
    g: int
    n: int
    order: int
    value: int
    raw: float
    abs_err: float


def _comb_values(g: int, n: int, lam) -> complex:
    spec = comb_limit_spec(Fraction(1, 2), Fraction(1, 2), Fraction(1, 4), N=1, strict=False)
    curve = solve_curve(spec.with_lambda(complex(lam)))
    return omega_at_eps(TREngine(curve), g, [0] * n)


def map_counts(g: int, n: int, max_order: int = 5, radius: float = 1 / 64,
               nodes: int = 256, retries: int = 2) -> list:
    """Integer coefficients of ``(-lam)^k`` in Omega_{g,n}(eps, ..., eps) at e = et = 1/2.

    Parameters
    ----------
    g, n : int
        Topology, one of ``TABLE_TOPOLOGIES``.
    max_order : int
        Highest power of lam, at most 5.
    radius, nodes : float, int
        Sampling circle in the complex coupling plane.
    retries : int
        Node doublings attempted when the rounding guard trips.

    Returns
    -------
    list of MapCountRow

    Raises
    ------
    RoundingGuard
        If some coefficient stays further than ``1e-3 max(1, |x|)`` from an
        integer; the raw floats are attached.
    """
    if (g, n) not in TABLE_TOPOLOGIES:
        raise ValidationError(f"(g, n) = ({g}, {n}) is not a supported topology")
    if not 0 <= max_order <= 5:
        raise ValidationError("max_order must lie in 0..5")
    m = nodes
    for _ in range(retries + 1):
        coeffs = taylor_extract(lambda l: _comb_values(g, n, l), radius, max_order, nodes=m)
        raw = [float(((-1) ** k * coeffs[k]).real) for k in range(max_order + 1)]
        err = [abs(x - round(x)) for x in raw]
        if all(e < 1e-3 * max(1.0, abs(x)) for e, x in zip(err, raw)):
            return [MapCountRow(g, n, k, int(round(x)), x, e)
                    for k, (x, e) in enumerate(zip(raw, err))]
        m *= 2
    raise RoundingGuard(f"coefficients of Omega_({g},{n}) are not integral", raw=raw)


# ----------------------------------------------------------------------------
# planar closed sums
# ----------------------------------------------------------------------------

def tutte_number(n: int) -> int:
    """Rooted planar quadrangulations with n faces, ``2 3^n (2n)! / (n! (n+2)!)``."""
    return 2 * 3 ** n * math.factorial(2 * n) // (math.factorial(n) * math.factorial(n + 2))


def planar_closed_coefficient(ns, n: int) -> Fraction:
    """Coefficient of ``(-lam)^(n + l_h + b - 2) / (e + et)^(2(n + l_h + b - 1))``.

    Planar correlator with ``b`` boundaries of even lengths ``ns`` in the
    combinatorial limit.
    """
    ns = list(ns)
    if any(k % 2 or k <= 0 for k in ns):
        raise ValidationError("boundary lengths must be positive and even")
    b = len(ns)
    lh = sum(ns) // 2
    edges = 3 * lh + 2 * b + 2 * n - 4
    num = Fraction(3) ** (b + n - 2) * math.factorial(edges - 1)
    den = math.factorial(n) * 2 ** (b - 1) * math.factorial(3 * lh + b + n - 2)
    prod = 1
    for k in ns:
        prod *= k * math.comb(3 * k // 2, k // 2)
    return num / den * prod


def tutte_check(max_order: int = 4, e=0.5, et=0.5, radius: float = 1 / 64,
                nodes: int = 128) -> list:
    """Relative deviations of the planar 2-point coefficients from Tutte's numbers.

    Returns a list of ``(n, engine_value, tutte_number, rel_error)``.
    """
    spec = comb_limit_spec(Fraction(e), Fraction(et), Fraction(1, 4), N=1, strict=False)

    def f(lam):
        c = solve_curve(spec.with_lambda(complex(lam)))
        return planar_two_point(c, c.eps[0], c.eps_t[0])

    coeffs = taylor_extract(f, radius, max_order, nodes=nodes)
    out = []
    for n in range(max_order + 1):
        val = complex((-1) ** n * coeffs[n] * (e + et) ** (2 * n + 2)).real
        ref = tutte_number(n)
        out.append((n, val, ref, abs(val - ref) / ref))
    return out


def four_point_comb_check(max_order: int = 1, e=0.5, et=0.5, radius: float = 1 / 64,
                          nodes: int = 32) -> list:
    """Planar 4-point function G_{|pqpq|} in the combinatorial limit vs the closed sum.

    The coincident boundary is evaluated in the limit mode of ``full_correlator``.
    Returns ``(order, engine, closed, rel_error)`` for orders 1..max_order.
    """
    spec = comb_limit_spec(Fraction(e), Fraction(et), Fraction(1, 4), N=1, strict=False)
    key = CorrelatorKey(0, (), ((0, 0, 0, 0),))

    def f(lam):
        c = solve_curve(spec.with_lambda(complex(lam)))
        return full_correlator(Correlators(TREngine(c)), key, limit=True)

    coeffs = taylor_extract(f, radius, max_order, nodes=nodes)
    out = []
    for k in range(1, max_order + 1):
        n = k - 1
        closed = float(planar_closed_coefficient([4], n)) * (-1) ** k / (e + et) ** (2 * (n + 2))
        val = complex(coeffs[k]).real
        out.append((k, val, closed, abs(val - closed) / abs(closed)))
    return out


# ----------------------------------------------------------------------------
# one-cut case Et = 0
# ----------------------------------------------------------------------------

@dataclass
class OneCutData:
    """Branch points of x for dt = 1: ``x = eps_t + u + c/u`` with ``u = z - eps_t``."""

    b1: complex
    b2: complex
    eps_t: complex
    c: complex


def one_cut_data(curve: SpectralCurve) -> OneCutData:
    """Branch points ``eps_t +- 2 sqrt(c)`` with ``c = lam rho_t / N``."""
    if curve.dt != 1:
        raise ValidationError("one-cut data needs dt = 1")
    c = complex(curve.lam * curve.rho_t[0] / curve.N)
    s = cmath.sqrt(c)
    et = complex(curve.eps_t[0])
    return OneCutData(et + 2 * s, et - 2 * s, et, c)


def _sqrt_branch(x, oc: OneCutData):
    return np.sqrt(x - oc.b1) * np.sqrt(x - oc.b2)


def one_cut_omega1(x, oc: OneCutData, curve: SpectralCurve):
    """Closed one-cut form of the planar Omega_1 as a function of x."""
    lam, N = curve.lam, curve.N
    s = _sqrt_branch(x, oc)
    out = (s - x) / (2 * lam)
    for en, rn in zip(curve.e, curve.r):
        sn = _physical_sqrt(curve, oc, en)
        out = out + rn / (2 * N) * (1 / (x - en) - s / ((x - en) * sn))
    return out


def _physical_sqrt(curve: SpectralCurve, oc: OneCutData, en):
    """sqrt((e_n - b1)(e_n - b2)) on the sheet of eps_n: ``x'(eps_n)(eps_n - eps_t)``."""
    k = int(np.argmin(np.abs(curve.e - en)))
    z = curve.eps[k]
    return complex(curve.xp(z) * (z - oc.eps_t))


def lsz_tilde_zero_check(spec: ModelSpec, npts: int = 20, seed: int = 0) -> float:
    """Max deviation of the one-cut closed form from the curve's planar Omega_1.

    The model must have ``dt = 1``; its Et eigenvalue is set to zero.

    Raises
    ------
    BranchChoice
        If the physical preimage of a grid point is not recovered.
    """
    if spec.dt != 1:
        raise ValidationError("need dt = 1")
    spec0 = make_spec(spec.eigenvalues_E, [(0, spec.N)], spec.lam, spec.N, strict=False)
    curve = solve_curve(spec0)
    oc = one_cut_data(curve)
    big = 1.5 * max(abs(oc.b1), abs(oc.b2), float(np.max(np.abs(curve.e)))) + 0.5
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.2, math.pi - 0.2, npts) * rng.choice([-1, 1], npts)
    x = big * np.exp(1j * theta)
    s = _sqrt_branch(x, oc)
    z = (x + oc.eps_t + s) / 2
    if np.max(np.abs(curve.x(z) - x)) > 1e-9 * big:
        raise BranchChoice("physical preimage of x not recovered")
    lam = curve.lam
    engine_val = -(curve.y(z) + curve.v_prime(x)) / lam
    closed = one_cut_omega1(x, oc, curve)
    return float(np.max(np.abs(engine_val - closed)))


def one_cut_identity(curve: SpectralCurve, z) -> float:
    """Residual of ``x'(z)^2 (z - eps_t)^2 = (x(z) - b1)(x(z) - b2)``."""
    oc = one_cut_data(curve)
    z = np.asarray(z, dtype=complex)
    lhs = curve.xp(z) ** 2 * (z - oc.eps_t) ** 2
    rhs = (curve.x(z) - oc.b1) * (curve.x(z) - oc.b2)
    return float(np.max(np.abs(lhs - rhs)))
