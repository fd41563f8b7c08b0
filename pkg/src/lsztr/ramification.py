"""Ramification points of x, local involutions and preimage fibers."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BranchEscape, DegenerateRamification, FiberDegeneracy
from .numerics import poly_roots, poly_roots_batch
from .spectral_curve import SpectralCurve


@dataclass
class RamificationData:
    """The 2 dt simple zeros of x' with per-point local data.

    Attributes
    ----------
    curve : SpectralCurve
    betas : numpy.ndarray
        Ramification points, ``x'(beta_i) = 0``.
    x2 : numpy.ndarray
        ``x''(beta_i)``, nonzero for simple ramification.
    radius : numpy.ndarray
        Suggested contour radius: half the distance to the nearest other
        singular point.
    """

    curve: SpectralCurve
    betas: np.ndarray
    x2: np.ndarray
    radius: np.ndarray

    def __len__(self) -> int:
        return len(self.betas)


def _polish_zero(f, df, z, iters=8):
    for _ in range(iters):
        step = f(z) / df(z)
        z = z - step
        if np.all(np.abs(step) < 1e-16 * np.maximum(1, np.abs(z))):
            break
    return z


def ramification_points(curve: SpectralCurve, points=()) -> RamificationData:
    """Zeros of the degree-2dt numerator of x'.

    Parameters
    ----------
    curve : SpectralCurve
    points : sequence of complex, optional
        Evaluation points that the suggested radii must also avoid.

    Raises
    ------
    DegenerateRamification
        If two ramification points lie within 1e-8 of each other or x'' vanishes.
    """
    if curve.lam == 0:
        raise DegenerateRamification("no ramification structure at lam = 0")
    betas = poly_roots(curve.xprime_numerator())
    betas = _polish_zero(lambda z: curve.x_derivative(z, 1),
                         lambda z: curve.x_derivative(z, 2), betas)
    order = np.lexsort((betas.imag, betas.real))
    betas = betas[order]
    if len(betas) > 1:
        gaps = np.abs(betas[:, None] - betas[None, :])
        gaps[np.diag_indices(len(betas))] = np.inf
        if np.min(gaps) < 1e-8:
            raise DegenerateRamification("two ramification points coincide")
    x2 = curve.x_derivative(betas, 2)
    scale = max(1.0, np.max(np.abs(betas)))
    if np.any(np.abs(x2) < 1e-8 * scale):
        raise DegenerateRamification("x'' vanishes at a ramification point")
    others = np.concatenate([curve.eps_t, curve.eps, np.asarray(points, dtype=complex)])
    radius = np.empty(len(betas))
    for i, b in enumerate(betas):
        cand = np.concatenate([np.delete(betas, i), others])
        radius[i] = 0.5 * np.min(np.abs(cand - b))
    return RamificationData(curve, betas, x2, radius)


def galois_involution(rami: RamificationData, i: int, q):
    """Local involution sigma_i: the other preimage of x(q) near beta_i.

    Newton on ``x(v) = x(q)`` started at the reflection ``2 beta_i - q``.
    Vectorized over ``q``.

    Raises
    ------
    BranchEscape
        If Newton returns ``q`` itself or leaves the disk of twice the radius.
    """
    curve = rami.curve
    beta = rami.betas[i]
    q = np.asarray(q, dtype=complex)
    target = curve.x(q)
    v = 2 * beta - q
    for _ in range(60):
        step = (curve.x(v) - target) / curve.x_derivative(v, 1)
        step = np.where(np.isfinite(step), step, 0)
        v = v - step
        if np.all(np.abs(step) <= 1e-15 * np.maximum(1, np.abs(v))):
            break
    at_beta = np.abs(q - beta) < 1e-14 * max(1, abs(beta))
    v = np.where(at_beta, beta, v)
    dist_q = np.abs(q - beta)
    same = (np.abs(v - q) < 1e-3 * dist_q) & ~at_beta
    far = np.abs(v - beta) > 2 * rami.radius[i] + 2 * dist_q
    if np.any(same) or np.any(far):
        raise BranchEscape(f"involution around beta_{i} did not reach the paired branch")
    return v if v.ndim else complex(v)


def _remove_self(roots, z):
    dist = np.abs(roots - z[..., None])
    idx = np.argsort(dist, axis=-1)
    d1 = np.take_along_axis(dist, idx[..., :1], -1)[..., 0]
    if roots.shape[-1] > 1:
        d2 = np.take_along_axis(dist, idx[..., 1:2], -1)[..., 0]
        if np.any(d2 - d1 < 1e-3 * d2):
            raise FiberDegeneracy("cannot identify the point in its own fiber")
    keep = np.ones(roots.shape, dtype=bool)
    np.put_along_axis(keep, idx[..., :1], False, -1)
    return roots[keep].reshape(roots.shape[:-1] + (roots.shape[-1] - 1,))


def _fiber(num, den, target, z):
    z = np.asarray(z, dtype=complex)
    target = np.asarray(target, dtype=complex)
    coeffs = num[None, :] - target.reshape(-1, 1) * np.concatenate([den, [0]])[None, :]
    roots = poly_roots_batch(coeffs).reshape(z.shape + (len(num) - 1,))
    return _remove_self(roots, z)


def preimages_x(curve: SpectralCurve, z):
    """The dt other solutions of ``x(v) = x(z)``; shape ``z.shape + (dt,)``."""
    num, den = curve.x_numden()
    return _fiber(num, den, curve.x(z), z)


def preimages_y(curve: SpectralCurve, w):
    """The d other solutions of ``y(v) = y(w)``; shape ``w.shape + (d,)``."""
    num, den = curve.y_numden()
    return _fiber(num, den, curve.y(w), w)


def x_fiber_full(curve: SpectralCurve, z):
    """All dt+1 preimages of x(z), with z itself first."""
    z = np.asarray(z, dtype=complex)
    return np.concatenate([z[..., None], preimages_x(curve, z)], axis=-1)


def fiber_of_value_x(curve: SpectralCurve, X):
    """All dt+1 solutions of ``x(v) = X`` for given values ``X``."""
    num, den = curve.x_numden()
    X = np.asarray(X, dtype=complex)
    coeffs = num[None, :] - X.reshape(-1, 1) * np.concatenate([den, [0]])[None, :]
    return poly_roots_batch(coeffs).reshape(X.shape + (len(num) - 1,))


def fiber_of_value_y(curve: SpectralCurve, Y):
    """All d+1 solutions of ``y(v) = Y`` for given values ``Y``."""
    num, den = curve.y_numden()
    Y = np.asarray(Y, dtype=complex)
    coeffs = num[None, :] - Y.reshape(-1, 1) * np.concatenate([den, [0]])[None, :]
    return poly_roots_batch(coeffs).reshape(Y.shape + (len(num) - 1,))


def generic_points(rami: RamificationData, count: int, rng, margin: float = 0.05,
                   box: float | None = None) -> np.ndarray:
    """Seeded random points away from ramification points, eps and eps_t.

    Points are drawn uniformly from a square of half-width ``box`` (default:
    1.5 times the largest special point) and rejected when closer than
    ``margin`` times that scale to a special point or when their x-fiber
    comes that close to one.
    """
    curve = rami.curve
    special = np.concatenate([rami.betas, curve.eps, curve.eps_t])
    scale = 1.5 * max(1.0, float(np.max(np.abs(special))))
    box = box or scale
    out = []
    while len(out) < count:
        z = complex(rng.uniform(-box, box), rng.uniform(-box, box))
        if np.min(np.abs(z - special)) < margin * scale:
            continue
        cand = np.concatenate([[z], preimages_x(curve, z)])
        if np.min(np.abs(cand[:, None] - rami.betas[None, :])) < margin * scale:
            continue
        gaps = np.abs(cand[:, None] - cand[None, :])
        np.fill_diagonal(gaps, np.inf)
        if np.min(gaps) < margin * scale:
            continue
        out.append(z)
    return np.array(out)
