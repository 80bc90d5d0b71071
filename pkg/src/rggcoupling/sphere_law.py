"""Coordinate marginal of the uniform law on the unit sphere.

For ``V`` uniform on the sphere in ``R^d`` the first coordinate ``X`` has density
proportional to ``(1 - x^2)^((d-3)/2)`` on ``[-1, 1]`` and ``X^2 ~ Beta(1/2, (d-1)/2)``.
All probabilities are evaluated through the regularized incomplete beta
function, always on the side of the distribution that avoids cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .errors import DomainError, NumericalError

_CLAMP = 1e-12


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _out(arr, scalar):
    return float(arr) if scalar else arr


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[lo, hi]`` around a threshold.

    ``lo == hi`` is allowed and denotes an empty round (no pair is ever inside).
    """

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise DomainError(f"interval needs lo <= hi, got [{self.lo}, {self.hi}]")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def is_empty(self) -> bool:
        return self.hi == self.lo

    def contains(self, x):
        return (np.asarray(x) >= self.lo) & (np.asarray(x) <= self.hi)

    def check(self, law: SphericalLaw) -> None:
        if self.is_empty:
            return
        if not (self.lo < law.tau < self.hi):
            raise DomainError(
                f"interval [{self.lo}, {self.hi}] must contain tau={law.tau} strictly inside"
            )


@dataclass(frozen=True)
class SphericalLaw:
    """Coordinate law ``D_d`` together with the edge threshold for density ``p``."""

    d: int
    p: float
    cdf_tol: float = 1e-12
    tau: float = field(init=False)

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 3:
            raise DomainError(f"dimension must be an integer >= 3, got {self.d}")
        if not (0.0 < self.p <= 0.5):
            raise DomainError(f"edge density must lie in (0, 1/2], got {self.p}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "tau", float(self.isf(self.p)))

    # -- beta parameters -------------------------------------------------
    @property
    def _a(self) -> float:
        return 0.5

    @property
    def _b(self) -> float:
        return 0.5 * (self.d - 1)

    @property
    def log_norm(self) -> float:
        d = self.d
        return special.gammaln(d / 2) - special.gammaln((d - 1) / 2) - 0.5 * math.log(math.pi)

    # -- density and tails ----------------------------------------------
    def pdf(self, x):
        arr, scalar = _as_array(x)
        if np.any(np.abs(arr) > 1):
            raise DomainError("pdf is defined on [-1, 1]")
        if self.d == 3:
            out = np.full(arr.shape, math.exp(self.log_norm))
        else:
            with np.errstate(divide="ignore"):
                out = np.exp(self.log_norm + 0.5 * (self.d - 3) * np.log1p(-arr * arr))
        return _out(out, scalar)

    def _lower(self, x):
        # P(X <= x) for x <= 0, via X^2 ~ Beta(1/2, (d-1)/2).
        x = np.asarray(x, dtype=float)
        x2 = x * x
        near = x2 < 0.5
        out = np.empty(x.shape)
        out[near] = special.betaincc(self._a, self._b, x2[near])
        ax = np.abs(x[~near])
        out[~near] = special.betainc(self._b, self._a, (1.0 - ax) * (1.0 + ax))
        return 0.5 * out

    def cdf(self, x):
        arr, scalar = _as_array(x)
        if np.any(np.abs(arr) > 1):
            raise DomainError("cdf is defined on [-1, 1]")
        neg = self._lower(-np.abs(arr))
        out = np.where(arr <= 0, neg, 1.0 - neg)
        return _out(out, scalar)

    def sf(self, x):
        """``P(X >= x)``."""
        arr, scalar = _as_array(x)
        return _out(np.asarray(self.cdf(-arr)), scalar)

    def mass(self, lo, hi):
        """``P(lo <= X <= hi)`` without cancellation on either side of zero."""
        lo_a = np.asarray(lo, dtype=float)
        hi_a = np.asarray(hi, dtype=float)
        both_pos = lo_a >= 0
        both_neg = hi_a <= 0
        pos = np.asarray(self.sf(lo_a)) - np.asarray(self.sf(hi_a))
        neg = np.asarray(self.cdf(hi_a)) - np.asarray(self.cdf(lo_a))
        mid = 1.0 - np.asarray(self.cdf(lo_a)) - np.asarray(self.sf(hi_a))
        out = np.where(both_pos, pos, np.where(both_neg, neg, mid))
        out = np.maximum(out, 0.0)
        return float(out) if out.ndim == 0 else out

    # -- inverses -------------------------------------------------------
    def _lower_quantile(self, q):
        # x <= 0 with P(X <= x) = q for q in [0, 1/2].
        q = np.clip(q, 0.0, 0.5)
        r2 = special.betainccinv(self._a, self._b, 2.0 * q)
        w = special.betaincinv(self._b, self._a, 2.0 * q)
        r = np.where(r2 < 0.5, np.sqrt(r2), np.sqrt(np.maximum(1.0 - w, 0.0)))
        x = -np.minimum(r, 1.0)
        # Newton polish on the lower tail; accepted only where it helps.
        for _ in range(2):
            f = self._lower(x) - q
            dens = np.asarray(self.pdf(x))
            ok = dens > 1e-300
            step = np.where(ok, f / np.where(ok, dens, 1.0), 0.0)
            cand = np.clip(x - step, -1.0, 0.0)
            better = np.abs(self._lower(cand) - q) < np.abs(f)
            x = np.where(better, cand, x)
        x = np.where(q <= 0.0, -1.0, x)
        x = np.where(q >= 0.5, 0.0, x)
        return x

    def quantile(self, q):
        arr, scalar = _as_array(q)
        if np.any((arr < 0) | (arr > 1)) or np.any(np.isnan(arr)):
            raise DomainError("quantile level must lie in [0, 1]")
        low = self._lower_quantile(np.minimum(arr, 1.0 - arr))
        out = np.where(arr <= 0.5, low, -low)
        return _out(out, scalar)

    def isf(self, q):
        """``x`` with ``P(X >= x) = q``."""
        arr, scalar = _as_array(q)
        return _out(-np.asarray(self.quantile(arr)), scalar)

    # -- scalar fast paths (the coupling calls phi once per flip) ---------
    def _lower_s(self, x: float) -> float:
        x2 = x * x
        if x2 < 0.5:
            return 0.5 * float(special.betaincc(self._a, self._b, x2))
        return 0.5 * float(special.betainc(self._b, self._a, (1.0 - abs(x)) * (1.0 + abs(x))))

    def _pdf_s(self, x: float) -> float:
        if self.d == 3:
            return math.exp(self.log_norm)
        w = 1.0 - x * x
        return 0.0 if w <= 0.0 else math.exp(self.log_norm + 0.5 * (self.d - 3) * math.log(w))

    def _lower_quantile_s(self, q: float) -> float:
        if q <= 0.0:
            return -1.0
        if q >= 0.5:
            return 0.0
        r2 = float(special.betainccinv(self._a, self._b, 2.0 * q))
        if r2 < 0.5:
            r = math.sqrt(r2)
        else:
            r = math.sqrt(max(1.0 - float(special.betaincinv(self._b, self._a, 2.0 * q)), 0.0))
        x = -min(r, 1.0)
        f = self._lower_s(x) - q
        for _ in range(2):
            dens = self._pdf_s(x)
            if dens <= 1e-300:
                break
            cand = min(max(x - f / dens, -1.0), 0.0)
            fc = self._lower_s(cand) - q
            if abs(fc) >= abs(f):
                break
            x, f = cand, fc
        return x

    def _phi_s(self, x: float) -> float:
        p, tau = self.p, self.tau
        if x == tau:
            return tau
        if x < tau:
            # cdf(x) * p / (1 - p) is the target upper-tail mass.
            cdf = self._lower_s(x) if x <= 0 else 1.0 - self._lower_s(-x)
            level = min(max(p * cdf / (1.0 - p), 0.0), p)
            return max(-self._lower_quantile_s(level), tau)
        sf = self._lower_s(-x) if x >= 0 else 1.0 - self._lower_s(x)
        level = min(max((1.0 - p) * sf / p, 0.0), 1.0 - p)
        y = self._lower_quantile_s(level) if level <= 0.5 else -self._lower_quantile_s(1.0 - level)
        return min(y, tau)

    def _cdf_s(self, x: float) -> float:
        return self._lower_s(x) if x <= 0 else 1.0 - self._lower_s(-x)

    def _quantile_s(self, q: float) -> float:
        return self._lower_quantile_s(q) if q <= 0.5 else -self._lower_quantile_s(1.0 - q)

    def _mass_s(self, lo: float, hi: float) -> float:
        if lo >= 0:
            out = self._cdf_s(-lo) - self._cdf_s(-hi)
        elif hi <= 0:
            out = self._cdf_s(hi) - self._cdf_s(lo)
        else:
            out = 1.0 - self._cdf_s(lo) - self._cdf_s(-hi)
        return max(out, 0.0)

    def _phi_interval_s(self, x: float, iv: Interval) -> float:
        tau = self.tau
        if x == tau:
            return tau
        if x == iv.lo:
            return iv.hi
        if x == iv.hi:
            return iv.lo
        lower, upper, sf_hi, cdf_lo = _interval_masses(self, iv)
        if x < tau:
            level = min(max(sf_hi + upper * self._mass_s(iv.lo, x) / lower, 0.0), 1.0)
            return min(max(-self._quantile_s(level), tau), iv.hi)
        level = min(max(cdf_lo + lower * self._mass_s(x, iv.hi) / upper, 0.0), 1.0)
        return min(max(self._quantile_s(level), iv.lo), tau)

    # -- flip involutions ------------------------------------------------
    def phi(self, x):
        """Decreasing measure-preserving involution swapping ``[-1, tau]`` and ``[tau, 1]``."""
        if isinstance(x, float):
            if abs(x) > 1:
                raise DomainError("phi is defined on [-1, 1]")
            return self._phi_s(x)
        arr, scalar = _as_array(x)
        if np.any(np.abs(arr) > 1):
            raise DomainError("phi is defined on [-1, 1]")
        p, tau = self.p, self.tau
        below = arr <= tau
        up_level = np.clip(p * np.asarray(self.cdf(arr)) / (1.0 - p), 0.0, p)
        down_level = np.clip((1.0 - p) * np.asarray(self.sf(arr)) / p, 0.0, 1.0 - p)
        up = np.maximum(np.asarray(self.isf(up_level)), tau)
        down = np.minimum(np.asarray(self.quantile(down_level)), tau)
        out = np.where(below, up, down)
        out = np.where(arr == tau, tau, out)
        return _out(out, scalar)

    def phi_interval(self, x, iv: Interval):
        """The same involution restricted to ``iv``, exchanging its endpoints."""
        iv.check(self)
        arr, scalar = _as_array(x)
        if np.any((arr < iv.lo) | (arr > iv.hi)):
            raise DomainError(f"phi_interval argument outside [{iv.lo}, {iv.hi}]")
        if iv.is_empty:
            return _out(arr.copy(), scalar)
        lower, upper, _, _ = _interval_masses(self, iv)
        if isinstance(x, float):
            return self._phi_interval_s(x, iv)
        tau = self.tau
        below = arr <= tau
        m_below = np.asarray(self.mass(iv.lo, np.minimum(arr, tau)))
        m_above = np.asarray(self.mass(np.maximum(arr, tau), iv.hi))
        # x <= tau: mass(y, hi) / upper = mass(lo, x) / lower.
        up_level = np.clip(self.sf(iv.hi) + upper * m_below / lower, 0.0, 1.0)
        # x >= tau: mass(lo, y) / lower = mass(x, hi) / upper.
        down_level = np.clip(self.cdf(iv.lo) + lower * m_above / upper, 0.0, 1.0)
        up = np.clip(np.asarray(self.isf(up_level)), tau, iv.hi)
        down = np.clip(np.asarray(self.quantile(down_level)), iv.lo, tau)
        out = np.where(below, up, down)
        out = np.where(arr == tau, tau, out)
        out = np.where(arr == iv.lo, iv.hi, out)
        out = np.where(arr == iv.hi, iv.lo, out)
        return _out(out, scalar)

    def q_interval(self, iv: Interval) -> float:
        """Conditional probability of landing above ``tau`` given a draw inside ``iv``."""
        iv.check(self)
        total = self.mass(iv.lo, iv.hi)
        if total < self.cdf_tol:
            raise NumericalError(f"degenerate interval: mass {total:.3g} below cdf_tol")
        return float(self.mass(self.tau, iv.hi) / total)

    # -- moments and masses around tau ------------------------------------
    def conditional_moment(self, k: int) -> float:
        """``E[X^k | X >= tau]`` by adaptive quadrature."""
        if not (1 <= k <= 8):
            raise DomainError("moment order must be in 1..8")
        width = min(1.0 - self.tau, 60.0 / math.sqrt(self.d))
        edge = self.tau + width
        points = [self.tau + width * f for f in (0.05, 0.2, 0.5)]
        integrand = lambda x: x**k * self.pdf(x)
        val, err = integrate.quad(integrand, self.tau, edge, points=points, limit=200,
                                  epsabs=0.0, epsrel=1e-11)
        if edge < 1.0:
            tail, tail_err = integrate.quad(integrand, edge, 1.0, limit=200)
            val, err = val + tail, err + tail_err
        if not np.isfinite(val) or err > 1e-8 * max(abs(val), 1e-300) + 1e-15:
            raise NumericalError(f"quadrature for moment {k} did not converge (err={err:.3g})")
        return val / self.p

    def interval_mass(self, delta: float) -> float:
        """Probability of ``[tau - delta, tau + delta]`` (clipped to [-1, 1])."""
        if delta < 0:
            raise DomainError("delta must be nonnegative")
        return float(self.mass(max(self.tau - delta, -1.0), min(self.tau + delta, 1.0)))


@lru_cache(maxsize=1024)
def _interval_masses(law: SphericalLaw, iv: Interval) -> tuple[float, float, float, float]:
    lower = law._mass_s(iv.lo, law.tau)
    upper = law._mass_s(law.tau, iv.hi)
    if lower + upper < law.cdf_tol or lower <= 0.0 or upper <= 0.0:
        raise NumericalError("interval carries no probability mass on one side of tau")
    return lower, upper, law._cdf_s(-iv.hi), law._cdf_s(iv.lo)


@lru_cache(maxsize=256)
def law_for(d: int, p: float, cdf_tol: float = 1e-12) -> SphericalLaw:
    """Cached constructor; laws are immutable so sharing is safe."""
    return SphericalLaw(d, p, cdf_tol)


def tau_threshold(d: int, p: float) -> float:
    return law_for(d, p).tau


def sample_coordinate(rng: np.random.Generator, law: SphericalLaw, size=None):
    """Draws from ``D_d`` by inverse CDF (one uniform per draw)."""
    u = rng.random(size)
    return law.quantile(u)


def sample_sphere(rng: np.random.Generator, d: int, size=None) -> np.ndarray:
    """Uniform unit vector(s); with ``size=m`` returns an ``(m, d)`` array of rows."""
    if d < 1:
        raise DomainError("dimension must be positive")
    shape = (d,) if size is None else (size, d)
    z = rng.standard_normal(shape)
    norms = np.linalg.norm(z, axis=-1, keepdims=True)
    return z / norms


def clamp_inner(x):
    """Keep inner products strictly inside (-1, 1) before evaluating flip maps."""
    return np.clip(x, -1.0 + _CLAMP, 1.0 - _CLAMP)


def lemma_ratios(d: int, p: float) -> dict[str, float]:
    """Scale-free ratios whose boundedness in ``d`` is what the tail lemmas assert.

    ``tau_ratio`` should stay in a fixed band, ``mean_ratio`` is ``1/C_B``-like,
    ``second_ratio`` bounds ``C_2``; ``density_ratio`` is the local mass per unit
    half-width divided by ``p sqrt(d log(1/p))``.
    """
    law = law_for(d, p)
    lg = math.log(1.0 / p)
    delta = 1e-3 / math.sqrt(d)
    return {
        "tau_ratio": law.tau * math.sqrt(d) / math.sqrt(lg),
        "mean_ratio": law.conditional_moment(1) * math.sqrt(d) / math.sqrt(lg),
        "second_ratio": law.conditional_moment(2) * d / lg,
        "density_ratio": law.interval_mass(delta) / (delta * p * math.sqrt(d * lg)),
    }
