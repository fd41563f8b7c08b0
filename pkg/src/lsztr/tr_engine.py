"""Eynard-Orantin recursion for the correlators Omega_{g,n}.

Two independent evaluation routes are provided.

``series``
    Each stable ``W_{g,n} = Omega_{g,n} prod_j x'(z_j)`` is a rational function
    whose only poles sit at the ramification points. It is stored as a
    coefficient tensor over the basis ``1/(z - beta_i)^m`` with
    ``2 <= m <= 6g - 4 + 2n``. The residues of the recursion are computed
    exactly from Laurent expansions in the local coordinate
    ``x(z) = x(beta_i) + zeta^2``.

``contour``
    The recursion evaluated literally by trapezoid quadrature on small
    circles around each ramification point, nesting into itself at the
    quadrature nodes and at their images under the local involution.

Both routes use ``Omega_{0,1} = -y/lam`` and
``Omega_{0,2}(z1, z2) = 1/(x'(z1) x'(z2) (z1 - z2)^2)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import PointTooCloseToBranchPoint, ResidueNotZero, ValidationError
from .numerics import contour_residue
from .ramification import (RamificationData, galois_involution,
                           ramification_points, x_fiber_full)
from .spectral_curve import SpectralCurve

# Overall sign of the recursion kernel in the conventions of this package.
# It is fixed by the quadratic loop equation and by the signs of the
# quadrangulation counts (see tests/test_tr_engine.py).
KERNEL_SIGN = -1


def max_pole(g: int, n: int) -> int:
    """Highest pole order of W_{g,n} at a ramification point."""
    return 6 * g - 4 + 2 * n


# ----------------------------------------------------------------------------
# truncated power and Laurent series helpers
# ----------------------------------------------------------------------------

def _ps_mul(a, b, n):
    out = np.convolve(a[:n], b[:n])[:n]
    if len(out) < n:
        out = np.concatenate([out, np.zeros(n - len(out), dtype=complex)])
    return out


def _ps_inv(a, n):
    a = np.asarray(a[:n], dtype=complex)
    out = np.zeros(n, dtype=complex)
    out[0] = 1 / a[0]
    for k in range(1, n):
        m = min(k, len(a) - 1)
        out[k] = -np.dot(a[1:m + 1], out[k - 1::-1][:m]) / a[0]
    return out


def _ps_pow(a, m, n):
    out = np.zeros(n, dtype=complex)
    out[0] = 1
    base = np.asarray(a[:n], dtype=complex)
    while m:
        if m & 1:
            out = _ps_mul(out, base, n)
        base = _ps_mul(base, base, n)
        m >>= 1
    return out


def _ps_sqrt(a, n):
    out = np.zeros(n, dtype=complex)
    out[0] = np.sqrt(a[0])
    for k in range(1, n):
        s = np.dot(out[1:k], out[k - 1:0:-1]) if k > 1 else 0
        ak = a[k] if k < len(a) else 0
        out[k] = (ak - s) / (2 * out[0])
    return out


def _alt(c, v):
    """Coefficients of f(-zeta) given those of f(zeta) with valuation v."""
    sign = (-1.0) ** (v + np.arange(c.shape[0]))
    return c * sign.reshape((-1,) + (1,) * (c.ndim - 1))


@dataclass
class _LS:
    """Laurent series sum_k c[k] zeta^(v+k); c may carry tensor axes."""

    v: int
    c: np.ndarray

    @property
    def top(self):
        return self.v + self.c.shape[0] - 1

    def neg_arg(self) -> "_LS":
        return _LS(self.v, _alt(self.c, self.v))

    def coeff(self, p):
        k = p - self.v
        if 0 <= k < self.c.shape[0]:
            return self.c[k]
        return np.zeros(self.c.shape[1:], dtype=complex)


def _ls_outer(A: _LS, B: _LS, top: int) -> _LS:
    """Product with tensor axes concatenated (A axes first), truncated at ``top``."""
    v = A.v + B.v
    L = top - v + 1
    sa, sb = A.c.shape[1:], B.c.shape[1:]
    out = np.zeros((max(L, 0),) + sa + sb, dtype=complex)
    if L <= 0:
        return _LS(v, out)
    Ae = A.c.reshape((A.c.shape[0],) + sa + (1,) * len(sb))
    Be = B.c.reshape((B.c.shape[0],) + (1,) * len(sa) + sb)
    for a in range(min(A.c.shape[0], L)):
        m = min(B.c.shape[0], L - a)
        out[a:a + m] += Ae[a] * Be[:m]
    return _LS(v, out)


def _ls_contract(A: _LS, B: _LS, top: int) -> _LS:
    """Product contracting the first tensor axis of ``A`` with the axis of ``B``.

    ``A.c`` has shape ``(LA, K, *rest)`` and ``B.c`` shape ``(LB, K)``.
    """
    v = A.v + B.v
    L = top - v + 1
    rest = A.c.shape[2:]
    out = np.zeros((max(L, 0),) + rest, dtype=complex)
    for a in range(min(A.c.shape[0], max(L, 0))):
        m = min(B.c.shape[0], L - a)
        out[a:a + m] += np.tensordot(B.c[:m], A.c[a], axes=([1], [0]))
    return _LS(v, out)


def _ls_apply(Phi: _LS, W: np.ndarray, top: int) -> _LS:
    """Contract the first slot of tensor ``W`` with the basis series ``Phi``."""
    B = W.shape[0]
    c = np.tensordot(Phi.c[:, :B], W, axes=([1], [0]))
    L = top - Phi.v + 1
    return _LS(Phi.v, c[:L])


# ----------------------------------------------------------------------------
# local chart at a ramification point
# ----------------------------------------------------------------------------

class _Chart:
    """Local expansions at ``beta_i`` needed by the recursion up to pole order P."""

    def __init__(self, curve: SpectralCurve, betas: np.ndarray, i: int, P: int, sign: int):
        self.i, self.P = i, P
        R = len(betas)
        beta = betas[i]
        T = 2 * P + 6
        K = T + P + 6
        self.T = T
        # Taylor coefficients of x and y at beta
        j = np.arange(K + 3)
        dx = beta - curve.eps_t
        X = ((-1.0) ** j[:, None] * curve._cx[None, :] / dx[None, :] ** (j[:, None] + 1)).sum(1)
        X[0] += beta
        X[1] += 1
        dy = beta - curve.eps
        Y = ((-1.0) ** j[:, None] * curve._cy[None, :] / dy[None, :] ** (j[:, None] + 1)).sum(1)
        Y[0] += -beta
        Y[1] += -1
        self.X, self.Y = X, Y
        # zeta = t h(t), h = sqrt(X2 + X3 t + ...); revert t = s(zeta)
        h = _ps_sqrt(X[2:], K)
        ginv = _ps_inv(h, K)
        a = np.zeros(K + 1, dtype=complex)
        gk = np.zeros(K, dtype=complex)
        gk[0] = 1
        for k in range(1, K + 1):
            gk = _ps_mul(gk, ginv, K)
            a[k] = gk[k - 1] / k
        self.a = a
        sr = a[1:]                                    # s(zeta)/zeta
        z1 = np.arange(1, K + 1) * a[1:]              # Z'(zeta)
        self.z1 = z1
        half = z1 / 2                                 # J = Z'/(2 zeta) = half / zeta
        # basis series Phi_b(zeta) = phi_b(Z(zeta)) J(zeta), common valuation -P-1
        vmin = -P - 1
        L = T - vmin + 1
        nb = R * (P - 1)
        c = np.zeros((L, nb), dtype=complex)
        inv_sr = _ps_inv(sr, L)
        for jb in range(R):
            if jb == i:
                for m in range(2, P + 1):
                    ser = _ps_mul(_ps_pow(inv_sr, m, L), half, L)
                    off = (-m - 1) - vmin
                    c[off:, jb * (P - 1) + m - 2] = ser[: L - off]
            else:
                s = np.concatenate([[betas[i] - betas[jb]], a[1:L]])
                u = _ps_inv(s, L)
                for m in range(2, P + 1):
                    ser = _ps_mul(_ps_pow(u, m, L), half, L)
                    off = -1 - vmin
                    c[off:, jb * (P - 1) + m - 2] = ser[: L - off]
        self.Phi = _LS(vmin, c)
        self.Phim = self.Phi.neg_arg()
        # Omega_{0,2}(Z(zeta), z') expanded in the basis of z': E(zeta)
        Le = T + 2
        ce = np.zeros((Le, nb), dtype=complex)
        sp = np.zeros(Le, dtype=complex)
        sp[0] = 1
        for m in range(0, P - 1):
            ser = (m + 1) * _ps_mul(sp, half, Le)   # (m+1) s^m J, valuation m-1
            off = m
            ce[off:, i * (P - 1) + m] = ser[: Le - off]
            sp = _ps_mul(sp, sr, Le)
        self.E = _LS(-1, ce)
        self.Em = self.E.neg_arg()
        # Omega_{0,2}(q, sigma q) = -Z'(z) Z'(-z) / (16 zeta^4 o(zeta)^2)
        Lo = T + 5
        o = np.zeros(Lo, dtype=complex)
        odd = a[1::2][: (Lo + 1) // 2]
        o[0::2][: len(odd)] = odd
        zm = _alt(z1[:Lo], 0)
        num = _ps_mul(z1[:Lo], zm, Lo)
        self.O02 = _LS(-4, -_ps_mul(num, _ps_inv(_ps_mul(o, o, Lo), Lo), Lo) / 16)
        # recursion kernel  sign lam (s(z)^m - s(-z)^m) zeta / (y(Z(z)) - y(Z(-z)))
        Lk = T + 2
        spow = np.zeros(Lk + 1, dtype=complex)
        spow[0] = 1
        s_full = a[: Lk + 1]
        ys = np.zeros(Lk + 1, dtype=complex)
        for jj in range(Lk + 1):
            ys += Y[jj] * spow
            spow = _ps_mul(spow, s_full, Lk + 1)
        dys = ys - _alt(ys, 0)
        kz = _ps_inv(dys[1:], Lk)                     # zeta / Delta y
        kern = np.zeros((Lk, P - 1), dtype=complex)
        spow = s_full[:Lk].copy()
        for m in range(1, P):
            diff = spow - _alt(spow, 0)
            kern[:, m - 1] = sign * curve.lam * _ps_mul(diff, kz, Lk)
            spow = _ps_mul(spow, s_full[:Lk], Lk)
        self.kern = _LS(0, kern)


# ----------------------------------------------------------------------------
# series engine
# ----------------------------------------------------------------------------

def _pad(W: np.ndarray, R: int, P_from: int, P_to: int, axes) -> np.ndarray:
    """Zero-pad the basis of the given axes from pole order P_from to P_to."""
    if P_from == P_to:
        return W
    for ax in axes:
        shape = list(W.shape)
        shape[ax:ax + 1] = [R, P_from - 1]
        Wr = W.reshape(shape)
        widths = [(0, 0)] * Wr.ndim
        widths[ax + 1] = (0, P_to - P_from)
        Wr = np.pad(Wr, widths)
        shape = list(Wr.shape)
        shape[ax:ax + 2] = [R * (P_to - 1)]
        W = Wr.reshape(shape)
    return W


class TREngine:
    """Evaluator for Omega_{g,n} on a solved spectral curve.

    Parameters
    ----------
    curve : SpectralCurve
    rami : RamificationData, optional
        Computed on demand.
    kernel_sign : int
        Overall sign of the recursion kernel.
    """

    def __init__(self, curve: SpectralCurve, rami: RamificationData | None = None,
                 kernel_sign: int = KERNEL_SIGN):
        self.curve = curve
        self.rami = rami if rami is not None else ramification_points(curve)
        self.betas = self.rami.betas
        self.R = len(self.betas)
        self.sign = kernel_sign
        self._charts: dict = {}
        self._W: dict = {}

    # -- exact base cases ---------------------------------------------------
    def omega01(self, z):
        return -self.curve.y(z) / self.curve.lam

    def omega02(self, z1, z2):
        c = self.curve
        z1, z2 = np.asarray(z1, dtype=complex), np.asarray(z2, dtype=complex)
        return 1.0 / (c.xp(z1) * c.xp(z2) * (z1 - z2) ** 2)

    # -- series machinery ---------------------------------------------------
    def _chart(self, i: int, P: int) -> _Chart:
        key = (i, P)
        if key not in self._charts:
            self._charts[key] = _Chart(self.curve, self.betas, i, P, self.sign)
        return self._charts[key]

    def coefficients(self, g: int, n: int) -> np.ndarray:
        """Coefficient tensor of W_{g,n}, shape ``(R (P-1),) * n``."""
        if 2 * g - 2 + n <= 0:
            raise ValidationError("coefficients exist only for stable (g, n)")
        key = (g, n)
        if key not in self._W:
            self._W[key] = self._compute(g, n)
        return self._W[key]

    def _factor(self, ch: _Chart, g1: int, slots: tuple, P: int, minus: bool):
        """Series of Omega_{g1,1+|slots|}(q or sigma q, I_slots), I axes padded to P."""
        m = len(slots)
        if g1 == 0 and m == 1:
            return ch.Em if minus else ch.E
        W = self.coefficients(g1, m + 1)
        Pw = max_pole(g1, m + 1)
        W = _pad(W, self.R, Pw, P, range(1, m + 1))
        W = _pad(W, self.R, Pw, ch.P, [0])
        return _ls_apply(ch.Phim if minus else ch.Phi, W, ch.T)

    def _compute(self, g: int, n: int) -> np.ndarray:
        P = max_pole(g, n)
        R = self.R
        B = R * (P - 1)
        k = n - 1
        out = np.zeros((B,) + (B,) * k, dtype=complex)
        top = -1
        for i in range(R):
            ch = self._chart(i, P)
            rec = _LS(-2 * P - 4, np.zeros((2 * P + 4,) + (B,) * k, dtype=complex))
            acc = rec.c

            def add(term: _LS):
                for p in range(term.v, min(term.top, top) + 1):
                    idx = p - rec.v
                    if idx < 0:
                        if np.any(term.coeff(p) != 0):
                            raise RuntimeError("recursion term below preallocated valuation")
                        continue
                    acc[idx] += term.coeff(p)

            # Omega_{g-1,n+1}(q, sigma q, I)
            if g >= 1:
                if (g - 1, n + 1) == (0, 2):
                    add(ch.O02)
                else:
                    Pw = max_pole(g - 1, n + 1)
                    W = _pad(self.coefficients(g - 1, n + 1), R, Pw, P, range(2, n + 1))
                    W = _pad(W, R, Pw, ch.P, [0, 1])
                    A = _ls_apply(ch.Phi, W, ch.T)
                    add(_ls_contract(A, ch.Phim, top))
            # primed sum over splits
            for g1 in range(g + 1):
                g2 = g - g1
                for r in range(k + 1):
                    for I1 in itertools.combinations(range(k), r):
                        I2 = tuple(s for s in range(k) if s not in I1)
                        if (g1 == 0 and not I1) or (g2 == 0 and not I2):
                            continue
                        F1 = self._factor(ch, g1, I1, P, False)
                        F2 = self._factor(ch, g2, I2, P, True)
                        prod = _ls_outer(F1, F2, top)
                        order = list(I1) + list(I2)
                        perm = [0] + [1 + order.index(s) for s in range(k)]
                        add(_LS(prod.v, np.transpose(prod.c, perm)))
            # residues: coefficient of 1/(z - beta_i)^(m+1)
            for m in range(1, P):
                kern = ch.kern.c[:, m - 1]
                res = np.zeros((B,) * k, dtype=complex)
                for p in range(ch.kern.c.shape[0]):
                    res = res + kern[p] * rec.coeff(-1 - p)
                out[i * (P - 1) + m - 1] = res
        return out

    def basis(self, z, P: int) -> np.ndarray:
        """Values ``1/(z - beta_i)^m``, shape ``z.shape + (R (P-1),)``."""
        z = np.asarray(z, dtype=complex)
        d = z[..., None] - self.betas
        m = np.arange(2, P + 1)
        return (1.0 / d[..., :, None] ** m).reshape(z.shape + (self.R * (P - 1),))

    def W(self, g: int, points) -> np.ndarray:
        """W_{g,n} = Omega_{g,n} prod x'(z_j) at (broadcast) points."""
        n = len(points)
        C = self.coefficients(g, n)
        P = max_pole(g, n)
        pts = np.broadcast_arrays(*[np.asarray(p, dtype=complex) for p in points])
        self._guard(pts)
        shape = pts[0].shape
        cur = C
        for j in range(n - 1, -1, -1):
            vec = self.basis(pts[j], P).reshape(shape + (1,) * j + (C.shape[j],))
            cur = np.sum(cur * vec, axis=-1)
        return cur

    def _guard(self, pts):
        for p in pts:
            d = np.abs(np.asarray(p)[..., None] - self.betas)
            if np.any(d < 1e-9 * max(1, np.max(np.abs(self.betas)))):
                raise PointTooCloseToBranchPoint("evaluation at a ramification point")

    def omega(self, g: int, points, method: str = "series"):
        """Omega_{g,n}(z_1, ..., z_n), vectorized over broadcast point arrays.

        Parameters
        ----------
        g : int
            Genus.
        points : sequence
            The n arguments (scalars or arrays).
        method : {"series", "contour"}
            Evaluation route for stable (g, n).
        """
        n = len(points)
        if n == 0:
            raise ValidationError("need at least one point")
        if (g, n) == (0, 1):
            return self.omega01(points[0])
        if (g, n) == (0, 2):
            return self.omega02(points[0], points[1])
        if 2 * g - 2 + n <= 0:
            raise ValidationError(f"unsupported (g, n) = ({g}, {n})")
        if method == "contour":
            return ContourTR(self).omega(g, points)
        pts = np.broadcast_arrays(*[np.asarray(p, dtype=complex) for p in points])
        w = self.W(g, pts)
        for p in pts:
            w = w / self.curve.xp(p)
        return w if np.ndim(w) else complex(w)

    def omega02_diag(self, z):
        """Finite part of Omega_{0,2}(z, z') - 1/(x(z) - x(z'))^2 as z' -> z."""
        c = self.curve
        x1, x2, x3 = (c.x_derivative(z, k) for k in (1, 2, 3))
        return ((x2 / (2 * x1)) ** 2 - x3 / (6 * x1)) / x1 ** 2

    def omega_dz(self, g: int, points, slot: int):
        """Analytic derivative of Omega_{g,n} in its argument number ``slot``."""
        c = self.curve
        pts = np.broadcast_arrays(*[np.asarray(p, dtype=complex) for p in points])
        n = len(pts)
        zs = pts[slot]
        if (g, n) == (0, 1):
            return -c.yp(zs) / c.lam
        if (g, n) == (0, 2):
            other = pts[1 - slot]
            val = self.omega02(pts[0], pts[1])
            return val * (-c.x_derivative(zs, 2) / c.xp(zs) - 2 / (zs - other))
        C = self.coefficients(g, n)
        P = max_pole(g, n)
        shape = pts[0].shape
        cur = C
        for j in range(n - 1, -1, -1):
            if j == slot:
                d = pts[j][..., None] - self.betas
                m = np.arange(2, P + 1)
                vec = (-m / d[..., :, None] ** (m + 1)).reshape(shape + (C.shape[j],))
            else:
                vec = self.basis(pts[j], P)
            cur = np.sum(cur * vec.reshape(shape + (1,) * j + (C.shape[j],)), axis=-1)
        dW = cur
        W = self.W(g, pts)
        prod = np.ones(shape, dtype=complex)
        for p in pts:
            prod = prod * c.xp(p)
        return dW / prod - W / prod * c.x_derivative(zs, 2) / c.xp(zs)


# ----------------------------------------------------------------------------
# literal contour-quadrature route
# ----------------------------------------------------------------------------

class ContourTR:
    """Nested-quadrature evaluation of the recursion.

    Inner levels use a fixed node count on circles shrunk to ``0.4`` times the
    distance from the ramification point to the nearest argument; the top
    level doubles nodes until converged.
    """

    def __init__(self, engine: TREngine, nodes: int = 64, radius_scale: float = 1.0):
        self.engine = engine
        self.curve = engine.curve
        self.rami = engine.rami
        self.nodes = nodes
        self.radius_scale = radius_scale

    def _base(self, g, pts):
        if (g, len(pts)) == (0, 1):
            return self.engine.omega01(pts[0])
        return self.engine.omega02(pts[0], pts[1])

    def _radius(self, i, pts):
        beta = self.rami.betas[i]
        dist = min(np.min(np.abs(np.asarray(p) - beta)) for p in pts)
        if dist < 1e-6 * self.rami.radius[i]:
            raise PointTooCloseToBranchPoint("argument at a ramification point")
        return min(self.radius_scale * self.rami.radius[i], 0.4 * dist)

    def _integrand(self, g, i, pts, q):
        """S lam K(z, q) x'(q) Rec(q) for nodes q along a trailing axis."""
        c = self.curve
        lam = c.lam
        z = pts[0][..., None]
        I = [p[..., None] for p in pts[1:]]
        sq = galois_involution(self.rami, i, q)
        qb = np.broadcast_to(q, np.broadcast(z, q).shape)
        sqb = np.broadcast_to(sq, qb.shape)
        k = len(I)
        rec = 0
        if g >= 1:
            rec = rec + self._eval(g - 1, [qb, sqb] + I)
        for g1 in range(g + 1):
            for r in range(k + 1):
                for I1 in itertools.combinations(range(k), r):
                    I2 = [s for s in range(k) if s not in I1]
                    if (g1 == 0 and not I1) or (g - g1 == 0 and not I2):
                        continue
                    a = self._eval(g1, [qb] + [I[s] for s in I1])
                    b = self._eval(g - g1, [sqb] + [I[s] for s in I2])
                    rec = rec + a * b
        kern = (1 / (z - q) - 1 / (z - sq)) / (2 * (c.y(q) - c.y(sq))) * c.xp(q)
        return self.engine.sign * lam * kern * rec

    def _eval(self, g, pts):
        pts = list(np.broadcast_arrays(*[np.asarray(p, dtype=complex) for p in pts]))
        if 2 * g - 2 + len(pts) <= 0:
            return self._base(g, pts)
        total = 0
        for i, beta in enumerate(self.rami.betas):
            r = self._radius(i, pts)
            u = np.exp(2j * np.pi * np.arange(self.nodes) / self.nodes)
            q = beta + r * u
            total = total + np.mean(self._integrand(g, i, pts, q) * (r * u), axis=-1)
        return total / self.curve.xp(pts[0])

    def omega(self, g, points):
        """Omega_{g,n} at scalar points with adaptive top-level quadrature."""
        pts = [np.asarray(p, dtype=complex) for p in points]
        if 2 * g - 2 + len(pts) <= 0:
            return complex(self._base(g, pts))
        total = 0
        for i, beta in enumerate(self.rami.betas):
            r = self._radius(i, pts)
            total += contour_residue(lambda q: self._integrand(g, i, pts, q), beta, r)
        return complex(total / self.curve.xp(pts[0]))


# ----------------------------------------------------------------------------
# regularized values at the eigenvalue points
# ----------------------------------------------------------------------------

def omega1_regularized(curve: SpectralCurve, p: int) -> complex:
    """Omega_{0,1} continued to ``z = eps_p`` with the pole at ``eps_p`` removed.

    Evaluates ``(z - x(z))/lam + (1/N) sum_n r_n (1/(x(z) - e_n)
    - 1/(x'(eps_n)(z - eps_n)))`` at ``z = eps_p``; the ``n = p`` term is
    replaced by its limit ``-x''(eps_p) / (2 x'(eps_p)^2)``.
    """
    c = curve
    z = c.eps[p]
    total = (z - c.e[p]) / c.lam
    for n in range(c.d):
        if n == p:
            term = -c.x_derivative(z, 2) / (2 * c.xp(z) ** 2)
        else:
            term = 1 / (c.e[p] - c.e[n]) - 1 / (c.xp(c.eps[n]) * (z - c.eps[n]))
        total += c.r[n] / c.N * term
    return complex(total)


def omega2_regularized(engine: TREngine, p: int, q: int) -> complex:
    """Omega_{0,2}(eps_p, eps_q); on the diagonal its minimally subtracted finite part."""
    c = engine.curve
    if p != q:
        return complex(engine.omega02(c.eps[p], c.eps[q]))
    return complex(engine.omega02_diag(c.eps[p]))


def omega_at_eps(engine: TREngine, g: int, indices) -> complex:
    """Omega_{g,n}(eps_{p_1}, ..., eps_{p_n}) with the regularized unstable cases."""
    n = len(indices)
    if (g, n) == (0, 1):
        return omega1_regularized(engine.curve, indices[0])
    if (g, n) == (0, 2):
        return omega2_regularized(engine, indices[0], indices[1])
    eps = engine.curve.eps
    return complex(engine.omega(g, [eps[p] for p in indices]))


# ----------------------------------------------------------------------------
# loop equations
# ----------------------------------------------------------------------------

def _omega_full(engine, g, pts, diag_ok=True):
    """Omega including unstable cases; a coinciding Omega_{0,2} pair is regularized."""
    if (g, len(pts)) == (0, 2) and diag_ok and np.all(np.asarray(pts[0]) == np.asarray(pts[1])):
        return engine.omega02_diag(pts[0])
    return engine.omega(g, pts)


def check_loop_equations(engine: TREngine, g: int, n: int, I, z) -> dict:
    """Residuals of the linear and quadratic loop equations at one point.

    Parameters
    ----------
    engine : TREngine
    g, n : int
        Stable topology, ``2g + n - 2 > 0``.
    I : sequence of complex
        The ``n - 1`` further arguments.
    z : complex
        Point whose x-fiber is summed over.

    Returns
    -------
    dict
        ``linear_residual``, ``quadratic_residual`` (absolute) and the
        corresponding ``*_scale`` (largest individual term).
    """
    if 2 * g + n - 2 <= 0:
        raise ValidationError("loop equations are checked for 2g + n - 2 > 0 only")
    I = [complex(v) for v in I]
    if len(I) != n - 1:
        raise ValidationError("need n - 1 extra points")
    c = engine.curve
    fib = x_fiber_full(c, complex(z))
    lin_terms = [engine.omega(g, [f] + I) for f in fib]
    k = len(I)
    quad_terms = []
    for f in fib:
        s = 0
        for g1 in range(g + 1):
            for r in range(k + 1):
                for I1 in itertools.combinations(range(k), r):
                    I2 = [t for t in range(k) if t not in I1]
                    a = _omega_full(engine, g1, [f] + [I[t] for t in I1])
                    b = _omega_full(engine, g - g1, [f] + [I[t] for t in I2])
                    s += a * b
        if g >= 1:
            s += _omega_full(engine, g - 1, [f, f] + I)
        quad_terms.append(0.5 * s)
    lhs = sum(quad_terms)
    xz = c.x(complex(z))
    rhs_terms = []
    if k >= 1 and 2 * g + (n - 1) - 2 >= 0:
        F = engine.omega(g, I)
        for i, zi in enumerate(I):
            dF = engine.omega_dz(g, I, i)
            rhs_terms.append(dF / (c.xp(zi) * (xz - c.x(zi))) + F / (xz - c.x(zi)) ** 2)
    for kk in range(c.d):
        val = engine.omega(g, [c.eps[kk]] + I)
        rhs_terms.append(-c.r[kk] / c.N * val / (xz - c.e[kk]))
    rhs = sum(rhs_terms)
    return {
        "linear_residual": float(abs(sum(lin_terms))),
        "linear_scale": float(max(abs(t) for t in lin_terms)),
        "quadratic_residual": float(abs(lhs - rhs)),
        "quadratic_scale": float(max([abs(t) for t in quad_terms] + [abs(t) for t in rhs_terms])),
    }


def check_H_P(engine: TREngine, g: int, I, z, v) -> dict:
    """Compare H_{g,n} and P_{g,n} from their T-correlator definitions with their fiber sums.

    Parameters
    ----------
    engine : TREngine
    g : int
        Genus.
    I : sequence of complex
        The remaining n - 1 points.
    z, v : complex
        Evaluation point on the curve and the spectator variable.

    Returns
    -------
    dict
        ``h_residual``, ``p_residual`` and their scales.
    """
    from .correlators import Correlators, check_H_P as _check

    return _check(Correlators(engine), g, I, z, v)


# ----------------------------------------------------------------------------
# free energies
# ----------------------------------------------------------------------------

@dataclass
class FreeEnergy:
    """Stable free energy F^{(g)} obtained from the dilaton equation."""

    g: int
    value: complex
    algebraic: complex | None = None


def _phi_taylor(engine: TREngine, i: int, terms: int, const: complex):
    """Taylor coefficients at beta_i of a primitive of Omega_{0,1} dx = -y x' dz / lam."""
    c = engine.curve
    beta = engine.betas[i]
    j = np.arange(terms + 2)
    dx = beta - c.eps_t
    X = ((-1.0) ** j[:, None] * c._cx / dx ** (j[:, None] + 1)).sum(1)
    X[0] += beta
    X[1] += 1
    dy = beta - c.eps
    Y = ((-1.0) ** j[:, None] * c._cy / dy ** (j[:, None] + 1)).sum(1)
    Y[0] -= beta
    Y[1] -= 1
    Xp = (j[1:] * X[1:])[: terms]
    deriv = -np.convolve(Y[:terms], Xp)[:terms] / c.lam
    phi = np.zeros(terms + 1, dtype=complex)
    phi[0] = const
    phi[1:] = deriv / np.arange(1, terms + 1)
    return phi


def free_energy(engine: TREngine, g: int, radius_scale: float = 1.0,
                phi_const: complex = 0.0, terms: int = 96) -> FreeEnergy:
    """F^{(g)} for g >= 2 via ``sum_i Res_{beta_i} Phi omega_{g,1} = (2 - 2g) F^{(g)}``.

    Parameters
    ----------
    engine : TREngine
    g : int
        Genus, at least 2.
    radius_scale : float
        Multiplies the suggested contour radius of every ramification point.
    phi_const : complex
        Integration constant of the primitive (immaterial, see ResidueNotZero).

    Raises
    ------
    ResidueNotZero
        If omega_{g,1} has a residue at a ramification point.
    """
    if g < 2:
        raise ValidationError("free energies are provided for g >= 2")
    C = engine.coefficients(g, 1).reshape(len(engine.betas), -1)
    total = 0
    exact = 0
    for i, beta in enumerate(engine.betas):
        r = radius_scale * engine.rami.radius[i]
        W = lambda q: engine.W(g, [q])
        res0 = contour_residue(W, beta, r)
        scale = r * np.max(np.abs(W(beta + r * np.exp(2j * np.pi * np.arange(16) / 16))))
        if abs(res0) > 1e-8 * max(scale, 1.0):
            raise ResidueNotZero(f"omega_{g},1 has residue {res0:.3e} at beta_{i}")
        phi = _phi_taylor(engine, i, terms, phi_const)
        # residue of (sum_m C_m t^-m) (sum_j phi_j t^j) is sum_m C_m phi_{m-1}
        exact += np.dot(C[i], phi[1:C.shape[1] + 1])

        def integrand(q, phi=phi, beta=beta):
            t = q - beta
            val = np.zeros_like(t)
            for cf in phi[::-1]:
                val = val * t + cf
            return val * W(q)

        total += contour_residue(integrand, beta, r)
    return FreeEnergy(g, complex(total / (2 - 2 * g)), complex(exact / (2 - 2 * g)))
