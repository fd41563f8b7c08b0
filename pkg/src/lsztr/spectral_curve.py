"""Spectral curve: the coupled rational functions x(z), y(z).

Conventions used throughout the package::

    x(z) =  z + (lam/N) sum_k rho~_k / (z - eps~_k),   rho~_k = r~_k / y'(eps~_k)
    y(z) = -z + (lam/N) sum_n rho_n  / (z - eps_n),    rho_n  = r_n  / x'(eps_n)

with x(eps_n) = e_n and y(eps~_k) = e~_k. At lam = 0 this gives eps = e,
eps~ = -e~, rho = r and rho~ = -r~.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from .errors import BranchCollision, NonConvergence, PoleEvaluation
from .model import ModelSpec
from .numerics import DEFAULT_BITS, RationalSeries, get_precision, poly_from_roots


@dataclass
class SpectralCurve:
    """Solved spectral curve with vectorized evaluators.

    Attributes
    ----------
    spec : ModelSpec
        The model (its ``lam`` may differ from ``lam`` for complex nodes).
    lam : complex
        Coupling the curve was solved at.
    eps, eps_t : numpy.ndarray
        Points with ``x(eps_n) = e_n`` and ``y(eps_t_k) = et_k``.
    rho, rho_t : numpy.ndarray
        Residue weights ``r_n / x'(eps_n)`` and ``rt_k / y'(eps_t_k)``.
    residual : float
        Max-norm of the defining equations at the solution.
    """

    spec: ModelSpec
    lam: complex
    eps: np.ndarray
    eps_t: np.ndarray
    rho: np.ndarray
    rho_t: np.ndarray
    residual: float = 0.0
    e: np.ndarray = field(init=False)
    et: np.ndarray = field(init=False)
    r: np.ndarray = field(init=False)
    rt: np.ndarray = field(init=False)
    N: int = field(init=False)

    def __post_init__(self):
        self.e = np.array([complex(v) for v in self.spec.e])
        self.et = np.array([complex(v) for v in self.spec.et])
        self.r = np.array(self.spec.r, dtype=float)
        self.rt = np.array(self.spec.rt, dtype=float)
        self.N = self.spec.N
        self.lam = complex(self.lam)
        # pole weights lam*rho/N used by all evaluators
        self._cx = self.lam * self.rho_t / self.N
        self._cy = self.lam * self.rho / self.N

    @property
    def d(self) -> int:
        return len(self.eps)

    @property
    def dt(self) -> int:
        return len(self.eps_t)

    # -- evaluators ---------------------------------------------------------
    def _poles(self, z, poles, check):
        z = np.asarray(z, dtype=complex)
        diff = z[..., None] - poles
        if check and np.any(np.abs(diff) == 0):
            raise PoleEvaluation("evaluation at a pole")
        return diff

    def x_derivative(self, z, k: int = 0, check: bool = True):
        """k-th derivative of x at ``z`` (vectorized)."""
        diff = self._poles(z, self.eps_t, check)
        coef = (-1) ** k * float(np.prod(np.arange(1, k + 1)))
        s = coef * np.sum(self._cx / diff ** (k + 1), axis=-1)
        z = np.asarray(z, dtype=complex)
        if k == 0:
            return z + s
        if k == 1:
            return 1.0 + s
        return s

    def y_derivative(self, z, k: int = 0, check: bool = True):
        """k-th derivative of y at ``z`` (vectorized)."""
        diff = self._poles(z, self.eps, check)
        coef = (-1) ** k * float(np.prod(np.arange(1, k + 1)))
        s = coef * np.sum(self._cy / diff ** (k + 1), axis=-1)
        z = np.asarray(z, dtype=complex)
        if k == 0:
            return -z + s
        if k == 1:
            return -1.0 + s
        return s

    def x(self, z):
        return self.x_derivative(z, 0)

    def y(self, z):
        return self.y_derivative(z, 0)

    def xp(self, z):
        return self.x_derivative(z, 1)

    def yp(self, z):
        return self.y_derivative(z, 1)

    def v_prime(self, x):
        """V'(x) = x - (lam/N) sum_n r_n / (x - e_n)."""
        diff = self._poles(x, self.e, True)
        return np.asarray(x, dtype=complex) - self.lam / self.N * np.sum(self.r / diff, axis=-1)

    def vtilde_prime(self, x):
        """Vtilde'(x) = x - (lam/N) sum_k rt_k / (x - et_k)."""
        diff = self._poles(x, self.et, True)
        return np.asarray(x, dtype=complex) - self.lam / self.N * np.sum(self.rt / diff, axis=-1)

    # -- polynomial forms ---------------------------------------------------
    def x_numden(self):
        """Numerator (degree dt+1) and denominator (degree dt) of x, low first."""
        q = poly_from_roots(self.eps_t)
        p = np.concatenate([[0], q])
        for k in range(self.dt):
            p[: self.dt] += self._cx[k] * poly_from_roots(np.delete(self.eps_t, k))
        return p, q

    def y_numden(self):
        """Numerator (degree d+1) and denominator (degree d) of y, low first."""
        q = poly_from_roots(self.eps)
        p = -np.concatenate([[0], q])
        for n in range(self.d):
            p[: self.d] += self._cy[n] * poly_from_roots(np.delete(self.eps, n))
        return p, q

    def xprime_numerator(self):
        """Numerator of x' over ``prod (z - eps_t)^2``, degree 2 dt."""
        q = poly_from_roots(self.eps_t)
        p = np.convolve(q, q)
        for k in range(self.dt):
            o = poly_from_roots(np.delete(self.eps_t, k))
            p[: 2 * self.dt - 1] -= self._cx[k] * np.convolve(o, o)
        return p

    def residuals(self) -> dict:
        """Residuals of the four defining equation families."""
        return {
            "x_eps": np.max(np.abs(self.x(self.eps) - self.e)),
            "y_eps_t": np.max(np.abs(self.y(self.eps_t) - self.et)),
            "rho": np.max(np.abs(self.xp(self.eps) * self.rho - self.r)),
            "rho_t": np.max(np.abs(self.yp(self.eps_t) * self.rho_t - self.rt)),
        }

    def to_json(self) -> dict:
        def c(arr):
            return [[float(v.real), float(v.imag)] for v in np.asarray(arr)]
        return {"eps": c(self.eps), "eps_tilde": c(self.eps_t), "rho": c(self.rho),
                "rho_tilde": c(self.rho_t), "residual": float(self.residual)}


# ----------------------------------------------------------------------------
# Newton solver with lambda homotopy
# ----------------------------------------------------------------------------

def _system(u, lam, e, et, r, rt, d, dt, xp=np):
    """Residual F and Jacobian J of the defining system.

    Unknowns ``u = (eps, eps_t, a, b)`` with ``a = rho/N``, ``b = rho_t/N``.
    """
    eps, epst, a, b = u[:d], u[d:d + dt], u[d + dt:2 * d + dt], u[2 * d + dt:]
    D = eps[:, None] - epst[None, :]                  # d x dt
    D2, D3 = D * D, D * D * D
    xv = eps + lam * (b[None, :] / D).sum(1)
    yv = -epst + lam * (a[:, None] / (-D)).sum(0)
    xpv = 1 - lam * (b[None, :] / D2).sum(1)
    ypv = -1 - lam * (a[:, None] / D2).sum(0)
    F = xp.concatenate([xv - e, yv - et, xpv * a - r, ypv * b - rt])
    n = 2 * (d + dt)
    J = xp.zeros((n, n), dtype=complex)
    ie, it, ia, ib = slice(0, d), slice(d, d + dt), slice(d + dt, 2 * d + dt), slice(2 * d + dt, n)
    # x(eps_n) - e_n
    J[ie, ie] = np.diag(1 - lam * (b[None, :] / D2).sum(1))
    J[ie, it] = lam * b[None, :] / D2
    J[ie, ib] = lam / D
    # y(eps_t_k) - et_k ; y = -z + lam sum a_n/(z - eps_n), z = eps_t
    J[it, it] = np.diag(-1 - lam * (a[:, None] / D2).sum(0))
    J[it, ie] = (lam * a[:, None] / D2).T
    J[it, ia] = (lam / (-D)).T
    # x'(eps_n) a_n - r_n
    J[ia, ie] = np.diag(a * 2 * lam * (b[None, :] / D3).sum(1))
    J[ia, it] = -2 * lam * a[:, None] * b[None, :] / D3
    J[ia, ia] = np.diag(xpv)
    J[ia, ib] = -lam * a[:, None] / D2
    # y'(eps_t_k) b_k - rt_k ; y' = -1 - lam sum a/(z-eps)^2
    J[ib, it] = np.diag(b * 2 * lam * (a[:, None] / (-D3)).sum(0))
    J[ib, ie] = (2 * lam * a[:, None] * b[None, :] / D3).T
    J[ib, ib] = np.diag(ypv)
    J[ib, ia] = (-lam * b[None, :] / D2).T
    return F, J


def _newton(u, lam, data, tol, maxit=50):
    for it in range(maxit):
        F, J = _system(u, lam, *data)
        nf = np.max(np.abs(F))
        if nf < tol:
            return u, nf, True
        try:
            du = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return u, nf, False
        if not np.all(np.isfinite(du)):
            return u, nf, False
        u = u + du
    F, _ = _system(u, lam, *data)
    nf = np.max(np.abs(F))
    return u, nf, nf < tol


def solve_curve(spec: ModelSpec, lam=None, homotopy_steps: int = 32, tol: float = 1e-13,
                max_halvings: int = 12) -> SpectralCurve:
    """Solve the defining system by Newton's method along a lam-homotopy.

    Parameters
    ----------
    spec : ModelSpec
        Validated model.
    lam : complex, optional
        Target coupling; defaults to ``spec.lam``. Complex values follow the
        straight path from 0.
    homotopy_steps : int
        Initial number of equal homotopy steps; a failing step is halved.
    tol : float
        Newton tolerance on the max-norm residual (scaled by the input size).

    Raises
    ------
    NonConvergence
        If step halving is exhausted.
    BranchCollision
        If two points of the same family collide along the path.
    """
    lam = complex(spec.lam if lam is None else lam)
    d, dt = spec.d, spec.dt
    e = np.array([complex(v) for v in spec.e])
    et = np.array([complex(v) for v in spec.et])
    r = np.array(spec.r, dtype=float) / spec.N
    rt = np.array(spec.rt, dtype=float) / spec.N
    data = (e, et, r, rt, d, dt)
    scale = max(1.0, np.max(np.abs(np.concatenate([e, et]))))
    tol_s = tol * scale
    u = np.concatenate([e, -et, r, -rt]).astype(complex)
    t, h = 0.0, 1.0 / max(homotopy_steps, 1)
    halvings = 0
    while t < 1.0:
        h = min(h, 1.0 - t)
        trial, nf, ok = _newton(u, (t + h) * lam, data, tol_s)
        if ok:
            _collision_check(trial, d, dt)
            u, t = trial, t + h
        else:
            halvings += 1
            if halvings > max_halvings * homotopy_steps:
                raise NonConvergence(
                    f"curve Newton failed at lam = {(t + h) * lam}; try more homotopy steps")
            h /= 2
            if h < 1e-12:
                raise NonConvergence("homotopy step underflow")
    if get_precision() > DEFAULT_BITS:
        u, nf = _refine_mp(u, lam, data)
    else:
        nf = np.max(np.abs(_system(u, lam, *data)[0]))
    return SpectralCurve(spec, lam, u[:d], u[d:d + dt], u[d + dt:2 * d + dt] * spec.N,
                         u[2 * d + dt:] * spec.N, residual=float(nf))


def _collision_check(u, d, dt):
    for block in (u[:d], u[d:d + dt]):
        if len(block) > 1:
            gaps = np.abs(block[:, None] - block[None, :]) + np.eye(len(block))
            if np.min(gaps) < 1e-10:
                raise BranchCollision("two curve points collided along the homotopy")


def _refine_mp(u, lam, data):
    """A few Newton steps in mpmath at the current working precision."""
    e, et, r, rt, d, dt = data
    mp = mpmath.mp
    U = [mp.mpc(v) for v in u]
    L = mp.mpc(lam)
    E = [mp.mpc(v) for v in e]
    ET = [mp.mpc(v) for v in et]
    R = [mp.mpf(v) for v in r]
    RT = [mp.mpf(v) for v in rt]

    def F(*args):
        eps, epst = args[:d], args[d:d + dt]
        a, b = args[d + dt:2 * d + dt], args[2 * d + dt:]
        out = []
        for n in range(d):
            out.append(eps[n] + L * sum(b[k] / (eps[n] - epst[k]) for k in range(dt)) - E[n])
        for k in range(dt):
            out.append(-epst[k] + L * sum(a[n] / (epst[k] - eps[n]) for n in range(d)) - ET[k])
        for n in range(d):
            xpv = 1 - L * sum(b[k] / (eps[n] - epst[k]) ** 2 for k in range(dt))
            out.append(xpv * a[n] - R[n])
        for k in range(dt):
            ypv = -1 - L * sum(a[n] / (epst[k] - eps[n]) ** 2 for n in range(d))
            out.append(ypv * b[k] - RT[k])
        return out

    sol = mpmath.findroot(F, U, tol=mpmath.mpf(2) ** (-2 * get_precision() // 3))
    sol = [sol[i] for i in range(len(U))]
    res = max(abs(v) for v in F(*sol))
    return np.array([complex(v) for v in sol]), float(res)


# ----------------------------------------------------------------------------
# exact lam-series of the curve data
# ----------------------------------------------------------------------------

@dataclass
class CurveSeries:
    """Exact lam-expansions of ``eps``, ``eps_t``, ``rho``, ``rho_t``."""

    spec: ModelSpec
    order: int
    eps: list
    eps_t: list
    rho: list
    rho_t: list


def solve_curve_series(spec: ModelSpec, order: int) -> CurveSeries:
    """Order-by-order fixed point iteration with exact rational coefficients.

    Parameters
    ----------
    spec : ModelSpec
        Model with rational (``int`` or ``Fraction``) eigenvalues.
    order : int
        Truncation order ``K``.
    """
    K = order
    e = [Fraction(v) for v in spec.e]
    et = [Fraction(v) for v in spec.et]
    N = spec.N
    r = [Fraction(m, N) for m in spec.r]
    rt = [Fraction(m, N) for m in spec.rt]
    S = RationalSeries
    lam = S.variable(K)
    eps = [S.constant(v, K) for v in e]
    epst = [S.constant(-v, K) for v in et]
    a = [S.constant(v, K) for v in r]
    b = [S.constant(-v, K) for v in rt]
    d, dt = len(e), len(et)
    for _ in range(K + 1):
        inv = [[(eps[n] - epst[k]).inverse() for k in range(dt)] for n in range(d)]
        new_eps = [e[n] - lam * sum((b[k] * inv[n][k] for k in range(dt)), S.constant(0, K))
                   for n in range(d)]
        new_epst = [-et[k] - lam * sum((a[n] * inv[n][k] for n in range(d)), S.constant(0, K))
                    for k in range(dt)]
        xpv = [1 - lam * sum((b[k] * inv[n][k] * inv[n][k] for k in range(dt)), S.constant(0, K))
               for n in range(d)]
        ypv = [-1 - lam * sum((a[n] * inv[n][k] * inv[n][k] for n in range(d)), S.constant(0, K))
               for k in range(dt)]
        a = [r[n] / xpv[n] for n in range(d)]
        b = [rt[k] / ypv[k] for k in range(dt)]
        eps, epst = new_eps, new_epst
    return CurveSeries(spec, K, eps, epst, [v * N for v in a], [v * N for v in b])
