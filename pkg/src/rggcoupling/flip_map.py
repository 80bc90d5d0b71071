"""Flip-orientation maps.

``flip(law, a, z, b)`` moves ``z`` only along ``a`` so that the edge indicator
``<a, z'> >= tau`` equals ``b``.  When a move is needed the projection on ``a``
is replaced by ``phi(<a, z>)`` and the orthogonal part is rescaled to keep unit
norm, i.e. ``z' = z + psi(x) z + kappa(x) a`` with ``x = <a, z>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .sphere_law import Interval, SphericalLaw, clamp_inner

UNIT_TOL = 1e-9


@dataclass(frozen=True)
class FlipRecord:
    pre_inner: float
    post_inner: float
    flipped: bool
    psi_val: float
    kappa_val: float


def _target(law: SphericalLaw, x: float, iv: Interval | None) -> float:
    if iv is None:
        return float(law.phi(x))
    return float(law.phi_interval(x, iv))


def _force_side(y: float, tau: float, b: int) -> float:
    # Rounding may leave phi(x) a hair on the wrong side of tau when x ~ tau.
    if b and y < tau:
        return tau
    if not b and y >= tau:
        return math.nextafter(tau, -math.inf)
    return y


def flip_coefficients(law: SphericalLaw, x: float, b: int, iv: Interval | None = None):
    """Decide whether ``x = <a, z>`` must move and return ``(flipped, y, c_z, c_a)``.

    The moved vector is ``c_z * z + c_a * a`` (before renormalization), and
    ``y`` is its new projection on ``a``.
    """
    if iv is not None and (iv.is_empty or not iv.lo <= x <= iv.hi):
        return False, x, 1.0, 0.0
    if (x >= law.tau) == bool(b):
        return False, x, 1.0, 0.0
    xc = float(clamp_inner(x))
    if iv is not None:
        xc = min(max(xc, iv.lo), iv.hi)
    y = _force_side(_target(law, xc, iv), law.tau, b)
    c_z = math.sqrt(max(1.0 - y * y, 0.0) / (1.0 - xc * xc))
    c_a = y - c_z * xc
    return True, y, c_z, c_a


def _check_pair(a: np.ndarray, z: np.ndarray) -> None:
    if a.shape != z.shape or a.ndim != 1:
        raise DomainError(f"dimension mismatch: {a.shape} vs {z.shape}")
    if abs(np.linalg.norm(a) - 1.0) > UNIT_TOL or abs(np.linalg.norm(z) - 1.0) > UNIT_TOL:
        raise DomainError("flip needs unit vectors (tolerance 1e-9)")


def flip_linear(law: SphericalLaw, a: np.ndarray, z: np.ndarray, b: int, iv: Interval | None = None):
    """Core of :func:`flip` without input validation.

    Returns ``(z', record, alpha, beta)`` with ``z' = alpha * z + beta * a``
    exactly as computed, so callers can update cached inner products
    ``<w, z'> = alpha <w, z> + beta <w, a>`` without touching ``z'``.
    """
    x = float(a @ z)
    flipped, y, c_z, c_a = flip_coefficients(law, x, b, iv)
    if not flipped:
        return z.copy(), FlipRecord(x, x, False, 0.0, 0.0), 1.0, 0.0
    alpha, beta = c_z, c_a
    out = alpha * z + beta * a
    norm = np.linalg.norm(out)
    out /= norm
    alpha, beta = alpha / norm, beta / norm
    post = float(a @ out)
    # Keep the indicator exact after renormalization.
    for _ in range(4):
        if (post >= law.tau) == bool(b):
            break
        shift = law.tau - post + (1e-16 if b else -1e-16)
        out = out + shift * a
        beta += shift
        norm = np.linalg.norm(out)
        out /= norm
        alpha, beta = alpha / norm, beta / norm
        post = float(a @ out)
    xc = float(clamp_inner(x))
    psi_val = c_z - 1.0
    kappa_val = -xc - psi_val * xc + y
    return out, FlipRecord(x, post, True, psi_val, kappa_val), alpha, beta


def _apply(law, a, z, b, iv):
    out, rec, _, _ = flip_linear(law, a, z, b, iv)
    return out, rec


def flip(law: SphericalLaw, a, z, b: int):
    """Flip ``z`` around ``a`` so that its edge indicator equals ``b``."""
    a = np.asarray(a, dtype=float)
    z = np.asarray(z, dtype=float)
    _check_pair(a, z)
    return _apply(law, a, z, int(b), None)


def flip_interval(law: SphericalLaw, a, z, b: int, iv: Interval):
    """Like :func:`flip` but acting only when ``<a, z>`` lies in ``iv``."""
    a = np.asarray(a, dtype=float)
    z = np.asarray(z, dtype=float)
    _check_pair(a, z)
    iv.check(law)
    return _apply(law, a, z, int(b), iv)


def flip_batch(law: SphericalLaw, a, Z, b, iv: Interval | None = None):
    """Vectorized flip of the rows of ``Z`` around a fixed ``a``.

    Returns ``(Z', flipped_mask)``.  Used by the distributional checks, where
    ``10^5`` independent flips are needed.
    """
    a = np.asarray(a, dtype=float)
    Z = np.asarray(Z, dtype=float)
    b = np.broadcast_to(np.asarray(b, dtype=bool), (Z.shape[0],))
    x = Z @ a
    mask = (x >= law.tau) != b
    if iv is not None:
        mask &= (x >= iv.lo) & (x <= iv.hi) & (not iv.is_empty)
    if not mask.any():
        return Z.copy(), mask
    xm = clamp_inner(x[mask])
    if iv is None:
        y = np.asarray(law.phi(xm))
    else:
        y = np.asarray(law.phi_interval(np.clip(xm, iv.lo, iv.hi), iv))
    bm = b[mask]
    y = np.where(bm & (y < law.tau), law.tau, y)
    y = np.where(~bm & (y >= law.tau), np.nextafter(law.tau, -np.inf), y)
    c_z = np.sqrt(np.maximum(1.0 - y * y, 0.0) / (1.0 - xm * xm))
    c_a = y - c_z * xm
    out = Z.copy()
    moved = c_z[:, None] * Z[mask] + c_a[:, None] * a[None, :]
    out[mask] = moved / np.linalg.norm(moved, axis=1, keepdims=True)
    return out, mask


def psi(law: SphericalLaw, x, iv: Interval | None = None):
    """``sqrt((1 - phi(x)^2) / (1 - x^2)) - 1``."""
    arr = np.asarray(x, dtype=float)
    if np.any(np.abs(arr) > 1.0 - 1e-9):
        raise DomainError("psi is singular at |x| = 1")
    y = np.asarray(law.phi(arr) if iv is None else law.phi_interval(arr, iv))
    out = np.sqrt((1.0 - y * y) / (1.0 - arr * arr)) - 1.0
    return float(out) if out.ndim == 0 else out


def kappa(law: SphericalLaw, x, iv: Interval | None = None):
    """``-x - psi(x) x + phi(x)``: the coefficient of ``a`` in the flipped vector."""
    arr = np.asarray(x, dtype=float)
    y = np.asarray(law.phi(arr) if iv is None else law.phi_interval(arr, iv))
    out = -arr - np.asarray(psi(law, arr, iv)) * arr + y
    return float(out) if out.ndim == 0 else out
