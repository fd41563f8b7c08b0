"""Planar 2-point function, generalized T-correlators and the boundary reduction.

Points are complex arrays that broadcast against each other; every routine
below evaluates elementwise. Residues are taken by trapezoid quadrature on
circles whose node axis is appended as the last array axis.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import (BudgetExceeded, CoincidingIndices, DepthExceeded, IllConditioned,
                     ValidationError)
from .model import ModelSpec, make_spec
from .numerics import taylor_extract
from .ramification import preimages_x, preimages_y
from .spectral_curve import SpectralCurve, solve_curve
from .tr_engine import TREngine, omega1_regularized

_EXACT = 1e-12


# ----------------------------------------------------------------------------
# planar 2-point function
# ----------------------------------------------------------------------------

def _match(points, targets):
    """Index of the target each point equals (within 1e-12 relative), else -1."""
    diff = np.abs(points[..., None] - targets)
    hit = diff <= _EXACT * np.maximum(1.0, np.abs(targets))
    idx = np.argmax(hit, axis=-1)
    return np.where(hit.any(axis=-1), idx, -1)


def _g_xform(c: SpectralCurve, z, w):
    """x-fiber representation, regular at w = eps_t_q; z must avoid eps_n."""
    wh = preimages_y(c, w)
    xz = c.x(z)
    num = np.prod((xz[..., None] - c.x(wh)) / (xz[..., None] - c.e), axis=-1)
    return num / (c.y(w) - c.y(z))


def _g_yform(c: SpectralCurve, z, w, q=None):
    """y-fiber representation, regular at z = eps_p; ``q`` flags w = eps_t_q."""
    zh = preimages_x(c, z)
    if q is None:
        yw = c.y(w)
        num = np.prod((yw[..., None] - c.y(zh)) / (yw[..., None] - c.et), axis=-1)
        return num / (c.x(z) - c.x(w))
    yw = c.et[q]
    others = np.delete(c.et, q)
    num = np.prod(yw - c.y(zh), axis=-1) / np.prod(yw - others)
    return num / (-c.lam * c.rt[q] / c.N)


def planar_two_point(curve: SpectralCurve, z, w, check: bool = False):
    """Planar 2-point function G^(0)(z, w) on the z-plane.

    Uses ``prod_n (x(z) - x(w^n)) / (x(z) - e_n) / (y(w) - y(z))`` over the
    y-fiber of ``w``, and the y-fiber product
    ``prod_k (y(w) - y(z^k)) / (y(w) - et_k) / (x(z) - x(w))`` over the x-fiber
    of ``z`` when ``z`` sits at some ``eps_n``. At ``(eps_p, eps_t_q)`` the
    vanishing factor pair is replaced by its limit ``-lam rt_q / N``.

    Parameters
    ----------
    curve : SpectralCurve
    z, w : complex or array
    check : bool
        Evaluate both representations and compare.

    Raises
    ------
    IllConditioned
        With ``check=True``, if the two forms differ by more than 1e-6 relative.
    """
    c = curve
    z, w = np.broadcast_arrays(np.asarray(z, dtype=complex), np.asarray(w, dtype=complex))
    if c.lam == 0:
        # free theory: x(z) = z, y(w) = -w
        out = 1 / (z - w)
        return out if out.ndim else complex(out)
    pz = _match(z, c.eps)
    qw = _match(w, c.eps_t)
    out = np.empty(z.shape, dtype=complex)
    gen = pz < 0
    if np.any(gen):
        out[gen] = _g_xform(c, z[gen], w[gen])
    for q in range(-1, c.dt):
        sel = (~gen) & (qw == q)
        if np.any(sel):
            out[sel] = _g_yform(c, z[sel], w[sel], None if q < 0 else q)
    if check:
        alt = np.empty_like(out)
        yok = qw < 0
        if np.any(yok):
            alt[yok] = _g_yform(c, z[yok], w[yok])
        for q in range(c.dt):
            sel = qw == q
            if np.any(sel):
                alt[sel] = _g_yform(c, z[sel], w[sel], q)
        bad = np.abs(out - alt) > 1e-6 * np.maximum(np.abs(out), 1e-300)
        if np.any(bad & gen):
            raise IllConditioned("the two fiber representations of G disagree")
    return out if out.ndim else complex(out)


def planar_two_point_dz(curve: SpectralCurve, z, w):
    """Derivative of G^(0)(z, w) in ``z`` by logarithmic differentiation of the x-form."""
    c = curve
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    wh = preimages_y(c, w)
    xz = c.x(z)
    xp = c.xp(z)
    logd = (np.sum(xp[..., None] / (xz[..., None] - c.x(wh)), axis=-1)
            - np.sum(xp[..., None] / (xz[..., None] - c.e), axis=-1)
            + c.yp(z) / (c.y(w) - c.y(z)))
    return planar_two_point(c, z, w) * logd


def two_point_dse_residual(curve: SpectralCurve, z, w):
    """Residual of ``(y(w) - y(z)) G(z, w) = 1 + (lam/N) sum_k r_k G(eps_k, w) / (e_k - x(z))``."""
    c = curve
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    lhs = (c.y(w) - c.y(z)) * planar_two_point(c, z, w)
    rhs = 1.0 + 0j
    for k in range(c.d):
        rhs = rhs + c.lam / c.N * c.r[k] * planar_two_point(c, c.eps[k], w) / (c.e[k] - c.x(z))
    return np.abs(lhs - rhs)


def pole_decomposition_check(curve: SpectralCurve, z, w) -> float:
    """Relative residual of the partial-fraction form of G^(0)(z, w).

    Compares ``(w - z) G(z, w)`` with
    ``-1 + (lam/N)^2 sum C_{k,l}^{m,n} / ((z - eh_k^m)(w - eth_l^n))`` where
    ``eh_k^m`` runs over the x-fiber of ``eps_k`` and ``eth_l^n`` over the
    y-fiber of ``eps_t_l``.
    """
    c = curve
    z = complex(z)
    w = complex(w)
    lhs = (w - z) * planar_two_point(c, z, w)
    total = 0
    terms = []
    for k in range(c.d):
        eh = preimages_x(c, c.eps[k])
        for l in range(c.dt):
            eth = preimages_y(c, c.eps_t[l])
            gkl = planar_two_point(c, c.eps[k], c.eps_t[l])
            a = eh[:, None]
            b = eth[None, :]
            C = ((b - a) * c.r[k] * c.rt[l] * gkl
                 / (c.xp(a) * c.yp(b) * (c.y(a) - c.et[l]) * (c.x(b) - c.e[k])))
            t = C / ((z - a) * (w - b))
            terms.append(np.max(np.abs(t)) if t.size else 0.0)
            total += np.sum(t)
    rhs = -1 + (c.lam / c.N) ** 2 * total
    scale = max(1.0, abs(lhs), abs(c.lam / c.N) ** 2 * max(terms, default=0.0))
    return float(abs(lhs - rhs) / scale)


# ----------------------------------------------------------------------------
# correlator keys
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class CorrelatorKey:
    """Index data of a generalized correlator T^(g)_{I || boundaries}.

    Attributes
    ----------
    g : int
        Genus.
    I : tuple of int
        Eigenvalue indices ``p`` of the derivative points ``eps_p``.
    boundaries : tuple of tuple of int
        Each boundary lists alternating indices ``(p_1, q_1, p_2, q_2, ...)``
        into ``eps`` and ``eps_t``.
    """

    g: int
    I: tuple = ()
    boundaries: tuple = ()

    def __post_init__(self):
        if self.g < 0:
            raise ValidationError("genus must be non-negative")
        for b in self.boundaries:
            if len(b) == 0 or len(b) % 2:
                raise ValidationError("boundary lengths must be even and positive")

    def canonical(self) -> "CorrelatorKey":
        """Rotate each boundary (by pairs) to its lexicographically smallest form."""
        bnds = []
        for b in self.boundaries:
            rots = [tuple(b[2 * i:] + b[:2 * i]) for i in range(len(b) // 2)]
            bnds.append(min(rots))
        return CorrelatorKey(self.g, tuple(sorted(self.I)), tuple(bnds))

    def points(self, curve: SpectralCurve):
        """Map indices to z-plane points: ``eps_p`` at even, ``eps_t_q`` at odd slots."""
        I = [curve.eps[p] for p in self.I]
        bnds = [tuple(curve.eps[v] if i % 2 == 0 else curve.eps_t[v] for i, v in enumerate(b))
                for b in self.boundaries]
        return I, bnds


# ----------------------------------------------------------------------------
# generalized correlators
# ----------------------------------------------------------------------------

def _arr(v):
    return np.asarray(v, dtype=complex)


class Correlators:
    """Evaluator for T^(g)(I || boundaries) on the z-plane.

    Boundaries longer than two are reduced by the algebraic boundary
    recursion; (2+...+2)-point functions are computed by the residue formula
    at ``t -> z, w^j, u_i, z^s``. ``T(g, I, [])`` is ``Omega_{g,|I|}(I)``.

    Parameters
    ----------
    engine : TREngine
        Source of Omega_{g,n}.
    nodes : int
        Trapezoid nodes per residue circle.
    diag_nodes : int
        Nodes of the Cauchy mean used for coinciding arguments.
    fast : bool
        Use the closed-form residues of T^(0)(u || z, w).
    max_depth : int
        Recursion budget.
    max_points : int
        Largest quadrature array a single residue evaluation may allocate.
    """

    def __init__(self, engine: TREngine, nodes: int = 24, diag_nodes: int = 24,
                 fast: bool = True, max_depth: int = 12, max_points: int = 4_000_000):
        self.engine = engine
        self.curve = engine.curve
        self.nodes = nodes
        self.diag_nodes = diag_nodes
        self.fast = fast
        self.max_depth = max_depth
        self.max_points = max_points
        self._depth = 0
        c = self.curve
        self._static = np.concatenate([engine.betas, c.eps_t, c.eps,
                                       preimages_x(c, c.eps).ravel()])

    # -- building blocks ------------------------------------------------------
    def G(self, z, w):
        return _arr(planar_two_point(self.curve, z, w))

    def omega(self, g, pts):
        pts = [_arr(p) for p in pts]
        if 2 * g - 2 + len(pts) <= 0:
            if len(pts) == 1:
                return self.engine.omega01(pts[0])
            return self.engine.omega02(pts[0], pts[1])
        return self.engine.omega(g, pts)

    # -- public entry ---------------------------------------------------------
    def T(self, g: int, I, boundaries):
        """Genus-g correlator with derivative points ``I`` and boundary point tuples."""
        I = [_arr(u) for u in I]
        bnds = [tuple(_arr(p) for p in b) for b in boundaries]
        for b in bnds:
            if len(b) % 2 or not b:
                raise ValidationError("boundary lengths must be even and positive")
        self._depth += 1
        try:
            if self._depth > self.max_depth:
                raise DepthExceeded("correlator recursion budget exhausted")
            if not bnds:
                if not I:
                    raise ValidationError("need a boundary or a derivative point")
                return self.omega(g, I)
            long = [i for i, b in enumerate(bnds) if len(b) > 2]
            if long:
                i = long[0]
                return self._reduce(g, I, [bnds[i]] + bnds[:i] + bnds[i + 1:])
            if g == 0 and not I and len(bnds) == 1:
                return self.G(*bnds[0])
            if self.fast and g == 0 and len(I) == 1 and len(bnds) == 1:
                return self.T0_u(I[0], *bnds[0])
            return self._residue(g, I, bnds)
        finally:
            self._depth -= 1

    # -- closed form for T^(0)(u || z, w) ---------------------------------------
    def T0_u(self, u, z, w):
        """Sum of the three closed-form residues of T^(0)(u || z, w)."""
        c = self.curve
        lam = c.lam
        u, z, w = np.broadcast_arrays(_arr(u), _arr(z), _arr(w))
        G = self.G(z, w)
        yw = c.y(w)
        xz = c.x(z)
        at_eps = _match(z, c.eps) >= 0
        zs = np.where(at_eps, z + 1.0, z)
        # the t -> z residue vanishes when y has its pole at z = eps_n
        res_z = np.where(at_eps, 0, -lam * G * self.engine.omega02(u, zs) / (yw - c.y(zs)))
        wh = preimages_y(c, w)
        res_w = np.sum(lam * G[..., None] * c.xp(wh) * self.engine.omega02(u[..., None], wh)
                       / ((xz[..., None] - c.x(wh)) * (-c.yp(wh))), axis=-1)
        pu = _match(u, c.eps)
        us = np.where(pu >= 0, u + 1.0, u)
        xu, yu = c.x(us), c.y(us)
        res_u = lam * G / c.xp(us) * (c.xp(us) / ((xz - xu) ** 2 * (yw - yu))
                                      + c.yp(us) / ((xz - xu) * (yw - yu) ** 2))
        # at u = eps_p the pole of y leaves -N G / (r_p (x(z) - e_p))
        pidx = np.maximum(pu, 0)
        res_u = np.where(pu >= 0, -c.N * G / (c.r[pidx] * (xz - c.e[pidx])), res_u)
        return res_z + res_w + res_u

    # -- boundary reduction ---------------------------------------------------
    def _reduce(self, g, I, bnds):
        c = self.curve
        B = bnds[0]
        rest = bnds[1:]
        Nb = len(B) // 2
        zs = B[0::2]
        ws = B[1::2]
        den_w = c.y(ws[0]) - c.y(ws[-1])
        if np.any(np.abs(den_w) <= _EXACT * np.maximum(1, np.abs(c.y(ws[0])))):
            raise CoincidingIndices("first and last y-arguments of a boundary coincide")
        total = 0

        def seq(zl, wl):
            out = []
            for a, b in zip(zl, wl):
                out += [a, b]
            return tuple(out)

        for k in range(1, Nb):
            den = c.x(zs[k]) - c.x(zs[0])
            if np.any(np.abs(den) <= _EXACT * np.maximum(1, np.abs(c.x(zs[0])))):
                raise CoincidingIndices("two x-arguments of a boundary coincide")
            Ba = seq((zs[k],) + zs[1:k], ws[:k])
            Bb = seq((zs[0],) + zs[k + 1:], ws[k:])
            Bc = seq(zs[:k], ws[:k])
            Bd = seq(zs[k:], ws[k:])
            acc = 0
            if g >= 1:
                acc = acc + (self.T(g - 1, I, [Ba, Bb] + rest) - self.T(g - 1, I, [Bc, Bd] + rest))
            for I1, I2 in _splits(I):
                for J1, J2 in _splits(rest):
                    for h in range(g + 1):
                        acc = acc + (self.T(h, I1, [Ba] + J1) * self.T(g - h, I2, [Bb] + J2)
                                     - self.T(h, I1, [Bc] + J1) * self.T(g - h, I2, [Bd] + J2))
            total = total + acc / den
        for beta, Jb in enumerate(rest):
            others = rest[:beta] + rest[beta + 1:]
            zb = Jb[0::2]
            wb = Jb[1::2]
            for k in range(len(zb)):
                den = c.x(zb[k]) - c.x(zs[0])
                if np.any(np.abs(den) <= _EXACT * np.maximum(1, np.abs(c.x(zs[0])))):
                    raise CoincidingIndices("x-arguments of two boundaries coincide")
                Ma = _merge_a(zb, wb, k, zs, ws)
                Mb = _merge_b(zb, wb, k, zs, ws)
                total = total + (self.T(g, I, [Ma] + others) - self.T(g, I, [Mb] + others)) / den
        return -c.lam / den_w * total

    # -- residue formula --------------------------------------------------------
    def _residue(self, g, I, bnds):
        c = self.curve
        lam = c.lam
        z, w = bnds[0]
        J = bnds[1:]
        shape = np.broadcast_shapes(z.shape, w.shape, *[u.shape for u in I],
                                    *[p.shape for b in J for p in b])
        z = np.broadcast_to(z, shape)
        w = np.broadcast_to(w, shape)
        I = [np.broadcast_to(u, shape) for u in I]
        J = [tuple(np.broadcast_to(p, shape) for p in b) for b in J]
        wh = preimages_y(c, w)
        centers = [z] + [wh[..., j] for j in range(c.d)] + list(I) + [b[0] for b in J]
        C = np.stack(centers, axis=-1)
        fib = [preimages_x(c, p) for p in centers]
        avoid = np.concatenate([C] + fib + [np.broadcast_to(self._static, shape + self._static.shape)],
                               axis=-1)
        dist = np.abs(C[..., :, None] - avoid[..., None, :])
        self_hit = dist <= 1e-10 * np.maximum(1, np.abs(C[..., :, None]))
        dist = np.where(self_hit, np.inf, dist)
        rad = 0.25 * np.min(dist, axis=-1)
        if not np.all(np.isfinite(rad)) or np.any(rad <= 0):
            raise ValidationError("coincident residue targets")
        m = self.nodes
        if int(np.prod(shape)) * len(centers) * m > self.max_points:
            raise BudgetExceeded("nested residue quadrature exceeds the point budget")
        uvec = np.exp(2j * np.pi * (np.arange(m) + 0.5) / m)
        dq = rad[..., None] * uvec
        t = C[..., None] + dq
        t = t.reshape(shape + (len(centers) * m,))
        ex = lambda a: np.asarray(a)[..., None]
        wE = ex(w)
        IE = [ex(u) for u in I]
        JE = [tuple(ex(p) for p in b) for b in J]
        xt = c.x(t)
        L = np.prod(xt[..., None] - c.x(wh)[..., None, :], axis=-1)
        E = np.prod(xt[..., None] - c.e, axis=-1)
        kern = lam * ex(self.G(z, w)) * c.xp(t) * E / ((ex(c.x(z)) - xt) * L)
        br = self._bracket(g, IE, t, wE, JE)
        vals = (kern * br).reshape(shape + (len(centers), m)) * dq
        return np.sum(np.mean(vals, axis=-1), axis=-1)

    def _bracket(self, g, I, t, w, J):
        c = self.curve
        tb = np.broadcast_to(t, np.broadcast_shapes(t.shape, w.shape))
        out = 0
        idx = range(len(I))
        for r1 in range(len(I) + 1):
            for I1 in itertools.combinations(idx, r1):
                I1s = [I[i] for i in I1]
                I2s = [I[i] for i in idx if i not in I1]
                for j1 in range(len(J) + 1):
                    for J1 in itertools.combinations(range(len(J)), j1):
                        J1s = [J[i] for i in J1]
                        J2s = [J[i] for i in range(len(J)) if i not in J1]
                        for g1 in range(g + 1):
                            if g1 == 0 and not I1s and not J1s:
                                continue
                            if J1s:
                                a = self.T(g1, I1s + [tb], J1s)
                            else:
                                a = self.omega(g1, I1s + [tb])
                            b = self.T(g - g1, I2s, [(tb, w)] + J2s)
                            out = out + a * b
        if g >= 1:
            out = out + self._diag(g - 1, I, tb, w, J)
        for s, Js in enumerate(J):
            zs_, ws_ = Js
            rest = J[:s] + J[s + 1:]
            out = out + self.T(g, I, [(tb, ws_, zs_, w)] + rest) / (c.x(zs_) - c.x(tb))
        return out

    def _diag(self, g, I, t, w, J):
        """T^(g)(I, t || t, w | J) as the mean over a small circle of the marked point."""
        c = self.curve
        cand = [self._static] + [np.asarray(u)[..., None] for u in I]
        d = min(np.min(np.abs(t[..., None] - np.broadcast_to(a, a.shape))) for a in cand)
        fibd = np.min(np.abs(t[..., None] - preimages_x(c, t)))
        rho = 0.2 * min(d, fibd)
        m = self.diag_nodes
        u = t[..., None] + rho * np.exp(2j * np.pi * np.arange(m) / m)
        ex = lambda a: np.asarray(a)[..., None]
        vals = self.T(g, [ex(v) for v in I] + [u], [(ex(t), ex(w))] + [tuple(ex(p) for p in b) for b in J])
        return np.mean(vals, axis=-1)


def _merge_a(zb, wb, k, zs, ws):
    """``z^b_1 w^b_1 .. z^b_k  w_1 z_2 .. w_N z_1  w^b_k .. w^b_Nb`` (k zero-based)."""
    out = []
    for i in range(k):
        out += [zb[i], wb[i]]
    out.append(zb[k])
    for i in range(len(ws)):
        out.append(ws[i])
        out.append(zs[(i + 1) % len(zs)])
    for i in range(k, len(wb)):
        out.append(wb[i])
        if i + 1 < len(zb):
            out.append(zb[i + 1])
    return tuple(out)


def _merge_b(zb, wb, k, zs, ws):
    """``z^b_1 w^b_1 .. w^b_{k-1}  z_1 w_1 .. z_N w_N  z^b_k .. w^b_Nb`` (k zero-based)."""
    out = []
    for i in range(k):
        out += [zb[i], wb[i]]
    for a, b in zip(zs, ws):
        out += [a, b]
    for i in range(k, len(zb)):
        out += [zb[i], wb[i]]
    return tuple(out)


def _splits(items):
    """All ordered splits ``(A, B)`` of a list into two sub-lists."""
    n = len(items)
    for r in range(n + 1):
        for A in itertools.combinations(range(n), r):
            yield [items[i] for i in A], [items[i] for i in range(n) if i not in A]


# ----------------------------------------------------------------------------
# index-keyed entry points
# ----------------------------------------------------------------------------

def generalized_T(corr: Correlators, key: CorrelatorKey):
    """(2+...+2)-point function T^(g)(I || eps_p, eps_t_q | ...) at eigenvalue points."""
    if any(len(b) != 2 for b in key.boundaries):
        raise ValidationError("generalized_T takes length-2 boundaries only")
    I, bnds = key.points(corr.curve)
    return complex(corr.T(key.g, I, bnds))


def _shift_repeats(I, bnds, h):
    """Move the j-th repetition of a point by ``j h (1 + i/2)``."""
    seen = {}

    def move(p, kind):
        k = (kind, complex(p))
        j = seen.get(k, 0)
        seen[k] = j + 1
        return p + j * h * (1 + 0.5j)

    I2 = [move(u, "u") for u in I]
    out = []
    for b in bnds:
        out.append(tuple(move(p, "z" if i % 2 == 0 else "w") for i, p in enumerate(b)))
    return I2, out


def full_correlator(corr: Correlators, key: CorrelatorKey, limit: bool = False,
                    h: float = 1e-3):
    """Correlator with arbitrary even boundary lengths at eigenvalue points.

    Parameters
    ----------
    corr : Correlators
    key : CorrelatorKey
    limit : bool
        When indices repeat so that a reduction denominator vanishes, evaluate
        at shifted copies of the repeated points (step ``h``, ``h/2``, ``h/4``)
        and Richardson-extrapolate to the coincident value.
    h : float
        Largest shift of the limit mode.

    Raises
    ------
    CoincidingIndices
        If a denominator vanishes and ``limit`` is off.
    """
    I, bnds = key.points(corr.curve)
    try:
        return complex(corr.T(key.g, I, bnds))
    except CoincidingIndices:
        if not limit:
            raise
    vals = []
    for s in (h, h / 2, h / 4):
        I2, b2 = _shift_repeats(I, bnds, s)
        vals.append(complex(corr.T(key.g, I2, b2)))
    return (8 * vals[2] - 6 * vals[1] + vals[0]) / 3


# ----------------------------------------------------------------------------
# Omega from correlation functions
# ----------------------------------------------------------------------------

def omega_from_G(corr: Correlators, g: int, indices) -> tuple:
    """Both sides of the representation of Omega^(g)_{p_1..p_n} by G-correlators.

    Returns ``(omega_engine, omega_from_correlators)`` for ``n = len(indices)``
    in ``{1, 2, 3}`` with pairwise distinct indices.
    """
    c = corr.curve
    eng = corr.engine
    n = len(indices)
    if n not in (1, 2, 3) or len(set(indices)) != n:
        raise ValidationError("need 1 to 3 distinct indices")
    w = c.rt / c.N
    L = range(c.dt)

    def G(bnds):
        return full_correlator(corr, CorrelatorKey(g, (), tuple(bnds)), limit=True)

    pts = [c.eps[p] for p in indices]
    if n == 1:
        p = indices[0]
        lhs = omega1_regularized(c, p) if g == 0 else complex(eng.omega(g, pts))
        rhs = sum(w[l] * G([(p, l)]) for l in L)
        return lhs, rhs
    if n == 2:
        p1, p2 = indices
        lhs = complex(eng.omega(g, pts)) if g else complex(eng.omega02(*pts))
        rhs = (1 / (c.e[p1] - c.e[p2]) ** 2 if g == 0 else 0)
        rhs += sum(w[a] * w[b] * G([(p1, a), (p2, b)]) for a in L for b in L)
        rhs += sum(w[l] * G([(p1, l, p2, l)]) for l in L)
        return lhs, rhs
    p1, p2, p3 = indices
    lhs = complex(eng.omega(g, pts))
    rhs = sum(w[a] * w[b] * w[k] * G([(p1, a), (p2, b), (p3, k)]) for a in L for b in L for k in L)
    for x1, x2, x3 in ((p1, p2, p3), (p2, p3, p1), (p3, p1, p2)):
        rhs += sum(w[a] * w[b] * G([(x1, a, x2, a), (x3, b)]) for a in L for b in L)
    rhs += sum(w[l] * G([(p1, l, p2, l, p3, l)]) for l in L)
    return lhs, rhs


def boundary_creation_check(spec: ModelSpec, p: int, p1: int, q: int, h: float = 1e-4,
                            nodes: int = 24) -> tuple:
    """Both sides of the boundary-creation relation for a new boundary at ``eps_p``.

    Compares ``T^(0)(eps_p || eps_p1, eps_t_q |)`` from the residue formula with
    ``-(N / r_p) dG^(0)(eps_p1, eps_t_q) / de_p``. The derivative re-solves the
    curve at ``e_p +- h`` and ``e_p +- h/2`` and Richardson-extrapolates the two
    central differences, so its error is ``O(h^4)``.

    Returns
    -------
    tuple
        ``(residue_value, finite_difference_value, relative_error)``.
    """
    if p == p1:
        raise CoincidingIndices("the created boundary must differ from the existing one")
    E = [[complex(v), m] for v, m in spec.eigenvalues_E]
    Et = [[complex(v), m] for v, m in spec.eigenvalues_Etilde]
    lam = complex(spec.lam)

    def G(shift):
        EE = [list(v) for v in E]
        EE[p][0] += shift
        c = solve_curve(make_spec(EE, Et, lam, spec.N, strict=False), tol=1e-15)
        return complex(planar_two_point(c, c.eps[p1], c.eps_t[q]))

    d1 = (G(h) - G(-h)) / (2 * h)
    d2 = (G(h / 2) - G(-h / 2)) / h
    deriv = (4 * d2 - d1) / 3
    c = solve_curve(make_spec(E, Et, lam, spec.N, strict=False))
    corr = Correlators(TREngine(c), nodes=nodes)
    t = complex(corr.T(0, [c.eps[p]], [(c.eps[p1], c.eps_t[q])]))
    fd = -c.N / c.r[p] * deriv
    return t, fd, abs(t - fd) / abs(fd)


def omega_from_G_check(spec, g: int, indices, order: int = 2, radius: float = 1 / 64,
                       nodes: int = 16) -> float:
    """Largest per-coefficient relative deviation of the two sides of ``omega_from_G``.

    Both sides are evaluated at complex couplings on a circle of ``radius``
    and their Taylor coefficients through ``order`` compared.
    """
    def f(lam):
        curve = solve_curve(spec.with_lambda(complex(lam)))
        corr = Correlators(TREngine(curve))
        return np.array(omega_from_G(corr, g, indices))

    coeffs = taylor_extract(f, radius, order, nodes=nodes)
    lhs, rhs = coeffs[:, 0], coeffs[:, 1]
    scale = np.maximum(np.abs(lhs), 1e-300)
    return float(np.max(np.abs(lhs - rhs) / np.maximum(scale, np.max(np.abs(lhs)) * 1e-12)))


# ----------------------------------------------------------------------------
# H and P functions
# ----------------------------------------------------------------------------

def _set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def _compositions(total, parts):
    if parts == 0:
        if total == 0:
            yield ()
        return
    for h in range(total + 1):
        for rest in _compositions(total - h, parts - 1):
            yield (h,) + rest


def calE(engine: TREngine, k: int, g: int, t, I):
    """E^(k) Omega_{g,n}(t; I): sum over set partitions of ``t`` with I distributed."""
    n = len(I) + 1
    if k == 0:
        return 1.0 if (g == 0 and n == 1) else 0.0
    c = engine.curve
    total = 0
    for mu in _set_partitions(list(t)):
        l = len(mu)
        budget = g + l - k
        if budget < 0:
            continue
        for assign in itertools.product(range(l), repeat=len(I)):
            groups = [list(part) for part in mu]
            for i, a in enumerate(assign):
                groups[a].append(I[i])
            for hs in _compositions(budget, l):
                prod = 1
                for h, grp in zip(hs, groups):
                    m = len(grp)
                    if (h, m) == (0, 1):
                        prod = prod * (-c.y(grp[0]) / c.lam)
                    elif (h, m) == (0, 2):
                        prod = prod * engine.omega02(grp[0], grp[1])
                    else:
                        prod = prod * engine.omega(h, grp)
                total = total + prod
    return total


def H_check(engine: TREngine, g: int, I, z, v, terms: list | None = None):
    """Fiber-sum form of H_{g,n}(v; z; I).

    If ``terms`` is a list, the magnitude of every summand is appended to it.
    """
    c = engine.curve
    terms = [] if terms is None else terms
    tau0 = list(preimages_x(c, complex(z)))
    s = 0
    for i in range(c.dt + 1):
        for t in itertools.combinations(tau0, i):
            u = c.lam ** i * v ** (c.dt - i) * calE(engine, i, g, t, I)
            terms.append(abs(u / np.prod(v - c.et)))
            s = s + u
    return -s / np.prod(v - c.et)


def P_check(engine: TREngine, g: int, I, z, v, terms: list | None = None):
    """Fiber-sum form of P_{g,n}(v; x(z); I).

    If ``terms`` is a list, the magnitude of every summand is appended to it.
    """
    c = engine.curve
    terms = [] if terms is None else terms
    tau = [complex(z)] + list(preimages_x(c, complex(z)))
    s = 0
    for i in range(c.dt + 2):
        for t in itertools.combinations(tau, i):
            u = c.lam ** i * v ** (c.dt + 1 - i) * calE(engine, i, g, t, I)
            terms.append(abs(u / np.prod(v - c.et)))
            s = s + u
    return s / np.prod(v - c.et)


def H_def(corr: Correlators, g: int, I, z, v, terms: list | None = None):
    """H_{g,n}(v; z; I) from its definition by T-correlators at (z, eps_t_k).

    If ``terms`` is a list, the magnitude of every summand is appended to it.
    """
    c = corr.curve
    terms = [] if terms is None else terms
    s = -1.0 if (g == 0 and not I) else 0.0
    terms.append(abs(s))
    for k in range(c.dt):
        t = c.lam / c.N * c.rt[k] * complex(corr.T(g, list(I), [(z, c.eps_t[k])])) / (v - c.et[k])
        terms.append(abs(t))
        s = s + t
    return s


def P_def(corr: Correlators, g: int, I, z, v, terms: list | None = None):
    """P_{g,n}(v; x(z); I) from its definition by T-correlators.

    If ``terms`` is a list, the magnitude of every summand is appended to it.
    """
    c = corr.curve
    terms = [] if terms is None else terms
    lam, N = c.lam, c.N
    x = c.x(complex(z))
    I = [complex(u) for u in I]
    s = (c.vtilde_prime(v) + c.v_prime(x)) if (g == 0 and not I) else 0.0
    terms.append(abs(s))
    for k in range(c.dt):
        for n in range(c.d):
            T = complex(corr.T(g, I, [(c.eps[n], c.eps_t[k])]))
            t = lam ** 2 / N ** 2 * c.rt[k] * c.r[n] * T / ((v - c.et[k]) * (x - c.e[n]))
            terms.append(abs(t))
            s = s + t
    for i, zi in enumerate(I):
        rest = I[:i] + I[i + 1:]
        xi = c.x(zi)
        for k in range(c.dt):
            if g == 0 and not rest:
                T = complex(planar_two_point(c, zi, c.eps_t[k]))
                dT = complex(planar_two_point_dz(c, zi, c.eps_t[k]))
            else:
                T = complex(corr.T(g, rest, [(zi, c.eps_t[k])]))
                dT = _dz_cauchy(lambda u: corr.T(g, rest, [(u, c.eps_t[k])]), zi, corr)
            # d/dx(z_i) of T / (x - x(z_i))
            d = dT / c.xp(zi) / (x - xi) + T / (x - xi) ** 2
            t = lam ** 2 / N * c.rt[k] * d / (v - c.et[k])
            terms.append(abs(t))
            s = s - t
    if g == 0 and len(I) == 1:
        t = lam / (x - c.x(I[0])) ** 2
        terms.append(abs(t))
        s = s + t
    return s


def _dz_cauchy(f, z, corr: Correlators, m: int = 16):
    """First derivative by the Cauchy integral on a small circle (vectorized ``f``)."""
    d = np.min(np.abs(z - corr._static))
    rho = 0.1 * d
    q = np.exp(2j * np.pi * np.arange(m) / m)
    vals = np.asarray(f(z + rho * q))
    return complex(np.mean(vals / q) / rho)


def check_H_P(corr: Correlators, g: int, I, z, v) -> dict:
    """Compare H, P from their definitions with the fiber-sum forms.

    Returns
    -------
    dict
        ``h_residual``, ``p_residual`` (absolute) and ``h_scale``, ``p_scale``,
        the largest of both sides and of the individual summands of either form.
    """
    eng = corr.engine
    ht, pt = [], []
    h1 = H_def(corr, g, I, z, v, ht)
    h2 = H_check(eng, g, list(I), z, v, ht)
    p1 = P_def(corr, g, I, z, v, pt)
    p2 = P_check(eng, g, list(I), z, v, pt)
    return {"h_residual": float(abs(h1 - h2)), "h_scale": float(max(abs(h1), abs(h2), *ht)),
            "p_residual": float(abs(p1 - p2)), "p_scale": float(max(abs(p1), abs(p2), *pt))}
