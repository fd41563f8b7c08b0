"""Complex arithmetic utilities.

Polynomial roots with Newton polishing, trapezoid contour quadrature for
residues, Cauchy-integral Taylor extraction on a circle, and exact truncated
power series over the rationals.
"""
from __future__ import annotations

import contextlib
import os
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import mpmath
import numpy as np

from .errors import NonConvergence, ValidationError

DEFAULT_BITS = 53
_PRECISION = {"bits": DEFAULT_BITS}


def get_precision() -> int:
    """Return the working precision in bits (53 means machine double)."""
    return _PRECISION["bits"]


def set_precision(bits: int | None) -> int:
    """Set the working precision in bits.

    Values above 53 switch the root finder and the curve solver to mpmath
    arithmetic at the requested precision. ``None`` reads ``LSZ_TR_PREC``.

    Returns
    -------
    int
        The precision now in effect.
    """
    if bits is None:
        bits = int(os.environ.get("LSZ_TR_PREC", DEFAULT_BITS))
    bits = max(int(bits), DEFAULT_BITS)
    _PRECISION["bits"] = bits
    mpmath.mp.prec = bits
    return bits


@contextlib.contextmanager
def working_precision(bits: int):
    """Temporarily change the working precision."""
    old = get_precision()
    set_precision(bits)
    try:
        yield bits
    finally:
        set_precision(old)


# ----------------------------------------------------------------------------
# polynomials
# ----------------------------------------------------------------------------

def poly_eval(coeffs, z):
    """Evaluate a polynomial (lowest degree first) by Horner's rule.

    Parameters
    ----------
    coeffs : array_like
        Coefficients, lowest degree first. A trailing axis is allowed for
        batched polynomials of shape ``(..., deg + 1)``.
    z : array_like
        Evaluation points broadcastable against ``coeffs[..., 0]``.
    """
    coeffs = np.asarray(coeffs)
    p = np.zeros(np.broadcast(coeffs[..., 0], z).shape, dtype=complex)
    dp = np.zeros_like(p)
    for k in range(coeffs.shape[-1] - 1, -1, -1):
        dp = dp * z + p
        p = p * z + coeffs[..., k]
    return p, dp


def _trim(coeffs: np.ndarray) -> np.ndarray:
    scale = np.max(np.abs(coeffs))
    if scale == 0:
        raise ValidationError("zero polynomial")
    k = len(coeffs) - 1
    while k > 0 and abs(coeffs[k]) <= 1e-300 * scale:
        k -= 1
    return coeffs[: k + 1]


def _polish(coeffs, roots, iters=60):
    """Newton polishing that only accepts steps reducing the residual."""
    roots = np.array(roots, dtype=complex)
    res, dres = poly_eval(coeffs, roots)
    for _ in range(iters):
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(dres != 0, res / dres, 0)
        trial = roots - step
        tres, tdres = poly_eval(coeffs, trial)
        better = np.abs(tres) < np.abs(res)
        if not np.any(better):
            break
        roots = np.where(better, trial, roots)
        res = np.where(better, tres, res)
        dres = np.where(better, tdres, dres)
    return roots, res


def _residual_tol(coeffs, roots):
    deg = coeffs.shape[-1] - 1
    cmax = np.max(np.abs(coeffs), axis=-1)
    if np.ndim(roots) > np.ndim(cmax):
        cmax = cmax[..., None]
    return 1e-12 * cmax * np.maximum(1.0, np.abs(roots)) ** deg


def poly_roots(coeffs: Sequence[complex]) -> np.ndarray:
    """All roots of a polynomial, polished by Newton's method.

    Parameters
    ----------
    coeffs : sequence of complex
        Coefficients, lowest degree first.

    Returns
    -------
    numpy.ndarray
        ``deg`` complex roots (with multiplicity).

    Raises
    ------
    NonConvergence
        If a polished root keeps a residual above
        ``1e-12 * max|coeff| * max(1, |root|)**deg``.
    """
    c = _trim(np.asarray(coeffs, dtype=complex))
    deg = len(c) - 1
    if deg < 1:
        raise ValidationError("poly_roots needs degree >= 1")
    if get_precision() > DEFAULT_BITS:
        rts = mpmath.polyroots([mpmath.mpc(v) for v in c[::-1]], maxsteps=200,
                               extraprec=2 * get_precision())
        return np.array([complex(r) for r in rts])
    if deg == 1:
        return np.array([-c[0] / c[1]])
    rts = np.roots(c[::-1])
    rts, res = _polish(c, rts)
    bad = np.abs(res) > _residual_tol(c, rts)
    if np.any(bad):
        raise NonConvergence(f"root polishing failed, residual {np.max(np.abs(res)):.3e}")
    return rts


def poly_roots_batch(coeffs: np.ndarray) -> np.ndarray:
    """Roots of many polynomials of equal degree.

    Parameters
    ----------
    coeffs : numpy.ndarray
        Shape ``(..., deg + 1)``, lowest degree first, leading entry nonzero.

    Returns
    -------
    numpy.ndarray
        Shape ``(..., deg)``.
    """
    c = np.asarray(coeffs, dtype=complex)
    deg = c.shape[-1] - 1
    batch = c.shape[:-1]
    flat = c.reshape(-1, deg + 1)
    if deg == 1:
        rts = (-flat[:, 0] / flat[:, 1])[:, None]
    else:
        comp = np.zeros((flat.shape[0], deg, deg), dtype=complex)
        comp[:, 1:, :-1] = np.eye(deg - 1)
        comp[:, :, -1] = -flat[:, :-1] / flat[:, -1:]
        rts = np.linalg.eigvals(comp)
        rts, res = _polish(flat[:, None, :], rts)
        bad = np.abs(res) > _residual_tol(flat, rts)
        if np.any(bad):
            raise NonConvergence(
                f"batched root polishing failed, residual {np.max(np.abs(res)):.3e}")
    return rts.reshape(batch + (deg,))


def poly_mul(a, b) -> np.ndarray:
    """Product of two coefficient arrays (lowest degree first)."""
    return np.convolve(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def poly_from_roots(roots: Iterable[complex]) -> np.ndarray:
    """Monic polynomial with the given roots, lowest degree first."""
    p = np.array([1.0 + 0j])
    for r in roots:
        p = poly_mul(p, [-r, 1.0])
    return p


def lagrange_interpolate(nodes: Sequence[complex], values: Sequence[complex]) -> np.ndarray:
    """Coefficients of the interpolating polynomial through ``(nodes, values)``.

    Uses the Lagrange form ``sum_k f(a_k) prod_{l != k} (x - a_l)/(a_k - a_l)``
    expanded into monomials, lowest degree first.
    """
    nodes = np.asarray(nodes, dtype=complex)
    values = np.asarray(values, dtype=complex)
    out = np.zeros(len(nodes), dtype=complex)
    for k, ak in enumerate(nodes):
        others = np.delete(nodes, k)
        out += values[k] * poly_from_roots(others) / np.prod(ak - others)
    return out


# ----------------------------------------------------------------------------
# quadrature
# ----------------------------------------------------------------------------

def _circle(center, radius, m, offset=0.0):
    theta = 2 * np.pi * (np.arange(m) + offset) / m
    u = np.exp(1j * theta)
    return center + radius * u, radius * u


def contour_residue(f: Callable, center: complex, radius: float, nodes: int = 64,
                    max_nodes: int = 4096, rtol: float = 1e-11,
                    vectorized: bool = True):
    """Residue ``(1/2 pi i) \\oint f`` on a circle by the trapezoid rule.

    Node count doubles (reusing previous samples) until the relative change
    drops below ``rtol``.

    Parameters
    ----------
    f : callable
        Integrand. With ``vectorized=True`` it receives an array of nodes and
        returns values whose last axis matches the nodes, which allows vector
        valued integrands.
    center, radius : complex, float
        The circle.
    nodes, max_nodes : int
        Initial and maximal node counts.

    Raises
    ------
    NonConvergence
        If the cap is reached while the change is still above ``1e-8``.
    """
    if radius <= 0:
        raise ValidationError("radius must be positive")

    def sample(q):
        if vectorized:
            return np.asarray(f(q))
        return np.stack([np.asarray(f(qq)) for qq in q], axis=-1)

    q, dq = _circle(center, radius, nodes)
    vals = sample(q) * dq
    peak = np.max(np.abs(vals))
    acc = np.sum(vals, axis=-1)
    m = nodes
    est = acc / m
    while True:
        q, dq = _circle(center, radius, m, offset=0.5)
        vals = sample(q) * dq
        peak = max(peak, np.max(np.abs(vals)))
        acc = acc + np.sum(vals, axis=-1)
        m *= 2
        new = acc / m
        change = np.max(np.abs(new - est))
        scale = max(np.max(np.abs(new)), 1e-300)
        floor = 1e-15 * peak
        if change <= rtol * scale or change <= floor:
            return new if np.ndim(new) else complex(new)
        if m >= max_nodes:
            if change <= 1e-8 * scale:
                return new if np.ndim(new) else complex(new)
            raise NonConvergence(f"contour quadrature change {change:.3e} at {m} nodes")
        est = new


def circle_residue_fixed(values: np.ndarray, dq: np.ndarray):
    """Trapezoid residue from samples on a circle with fixed node count.

    ``values`` and ``dq`` share the last axis (the nodes); ``dq`` holds
    ``q_j - center``.
    """
    return np.mean(values * dq, axis=-1)


def taylor_extract(f: Callable, radius: float, order: int, nodes: int | None = None,
                   vectorized: bool = False, verify: bool = False) -> np.ndarray:
    """Taylor coefficients ``c_0..c_K`` of ``f`` about 0 from a circle of samples.

    Parameters
    ----------
    f : callable
        Function of the complex expansion variable. It may return arrays, in
        which case the result has shape ``(K + 1, *f_shape)``.
    radius : float
        Circle radius, inside the disk of analyticity.
    order : int
        Highest coefficient index ``K``.
    nodes : int, optional
        Node count ``M >= 4K``; defaults to ``max(64, 4(K + 1))``.
    vectorized : bool
        Call ``f`` once with the full node array.
    verify : bool
        Repeat with doubled nodes and raise if coefficients move.

    Raises
    ------
    NonConvergence
        On node-doubling instability (``verify=True``).
    """
    m = nodes or max(64, 4 * (order + 1))
    if m < 4 * order:
        raise ValidationError("need at least 4K nodes")
    coeffs = _taylor_once(f, radius, order, m, vectorized)
    if verify:
        fine = _taylor_once(f, radius, order, 2 * m, vectorized)
        scale = np.maximum(np.abs(fine), 1e-12)
        if np.any(np.abs(fine - coeffs) > 1e-6 * scale):
            raise NonConvergence("Taylor coefficients unstable under node doubling")
        coeffs = fine
    return coeffs


def _taylor_once(f, radius, order, m, vectorized):
    lam = radius * np.exp(2j * np.pi * np.arange(m) / m)
    if vectorized:
        vals = np.asarray(f(lam))
        vals = np.moveaxis(vals, -1, 0)
    else:
        vals = np.stack([np.asarray(f(l), dtype=complex) for l in lam], axis=0)
    spec = np.fft.fft(vals, axis=0) / m
    k = np.arange(order + 1).reshape((-1,) + (1,) * (vals.ndim - 1))
    return spec[: order + 1] / radius ** k


# ----------------------------------------------------------------------------
# exact truncated power series
# ----------------------------------------------------------------------------

def _frac(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


class RationalSeries:
    """Truncated power series ``sum_{k<=K} c_k lam^k`` with exact rationals.

    Parameters
    ----------
    coeffs : iterable
        Coefficients (anything accepted by ``fractions.Fraction``), index k
        holds the coefficient of ``lam**k``. Missing entries are zero.
    order : int
        Truncation order ``K``.
    """

    __slots__ = ("coeffs", "order")

    def __init__(self, coeffs: Iterable = (), order: int = 0):
        c = [_frac(v) for v in coeffs][: order + 1]
        c += [Fraction(0)] * (order + 1 - len(c))
        self.coeffs = c
        self.order = order

    @classmethod
    def constant(cls, value, order: int) -> "RationalSeries":
        return cls([value], order)

    @classmethod
    def variable(cls, order: int) -> "RationalSeries":
        """The series ``lam`` itself."""
        return cls([0, 1], order)

    def _coerce(self, other) -> "RationalSeries":
        if isinstance(other, RationalSeries):
            if other.order != self.order:
                k = min(self.order, other.order)
                return RationalSeries(other.coeffs, k)
            return other
        return RationalSeries.constant(other, self.order)

    def __getitem__(self, k: int) -> Fraction:
        return self.coeffs[k]

    def __len__(self) -> int:
        return self.order + 1

    def __iter__(self):
        return iter(self.coeffs)

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        k = min(self.order, other.order)
        return self.coeffs[: k + 1] == other.coeffs[: k + 1]

    def __hash__(self):
        return hash((tuple(self.coeffs), self.order))

    def __repr__(self) -> str:
        return f"RationalSeries({[str(c) for c in self.coeffs]}, order={self.order})"

    def __neg__(self) -> "RationalSeries":
        return RationalSeries([-c for c in self.coeffs], self.order)

    def __add__(self, other) -> "RationalSeries":
        other = self._coerce(other)
        k = min(self.order, other.order)
        return RationalSeries([a + b for a, b in zip(self.coeffs, other.coeffs)], k)

    __radd__ = __add__

    def __sub__(self, other) -> "RationalSeries":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "RationalSeries":
        return self._coerce(other) - self

    def __mul__(self, other) -> "RationalSeries":
        if not isinstance(other, RationalSeries):
            v = _frac(other)
            return RationalSeries([c * v for c in self.coeffs], self.order)
        k = min(self.order, other.order)
        a, b = self.coeffs, other.coeffs
        out = [sum((a[i] * b[n - i] for i in range(n + 1)), Fraction(0)) for n in range(k + 1)]
        return RationalSeries(out, k)

    __rmul__ = __mul__

    def inverse(self) -> "RationalSeries":
        """Multiplicative inverse; requires a nonzero constant term."""
        a = self.coeffs
        if a[0] == 0:
            raise ZeroDivisionError("series with zero constant term is not invertible")
        out = [1 / a[0]]
        for n in range(1, self.order + 1):
            s = sum((a[i] * out[n - i] for i in range(1, n + 1)), Fraction(0))
            out.append(-s / a[0])
        return RationalSeries(out, self.order)

    def __truediv__(self, other) -> "RationalSeries":
        if not isinstance(other, RationalSeries):
            return self * (1 / _frac(other))
        return self * self._coerce(other).inverse()

    def __rtruediv__(self, other) -> "RationalSeries":
        return self._coerce(other) * self.inverse()

    def __pow__(self, n: int) -> "RationalSeries":
        if n < 0:
            return self.inverse() ** (-n)
        out = RationalSeries.constant(1, self.order)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def shift(self, k: int = 1) -> "RationalSeries":
        """Multiply by ``lam**k`` (k >= 0)."""
        return RationalSeries([Fraction(0)] * k + self.coeffs, self.order)

    def truncate(self, order: int) -> "RationalSeries":
        return RationalSeries(self.coeffs, order)

    def __call__(self, lam):
        """Evaluate the partial sum at a numeric ``lam``."""
        out = 0
        for c in reversed(self.coeffs):
            out = out * lam + float(c)
        return out

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)
