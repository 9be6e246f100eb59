"""Density-to-violation regression and the critical-density threshold.

Given per-frame (density, violation count) samples, fit v = b0 + b1*rho
by ordinary least squares, wrap the line in a Student-t prediction band,
and report the largest density rho_c at which the band's lower bound is
still non-positive.  Below rho_c, violations are not statistically
expected; above it, they are.

Sums are accumulated with math.fsum so results do not depend on sample
order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

from .errors import DistmonError

# Root acceptance for the band's lower-bound crossing.
ROOT_TOL = 1e-9
# Absolute error bound for the t quantile inversion.
QUANTILE_TOL = 1e-8
# Bracket stretch past the largest observed density.
BRACKET_FACTOR = 10.0

STATUS_OK = "ok"
STATUS_ALREADY_VIOLATING = "already_violating"


class DensityError(DistmonError):
    """Base class for regression / threshold failures."""


class InsufficientData(DensityError):
    """Too few samples for the requested statistic."""


class DegenerateX(DensityError):
    """All densities identical; the slope is unidentifiable."""


class NonPositiveSlope(DensityError):
    """Violations do not increase with density; no safe threshold exists."""


class DomainError(DensityError):
    """A probability or degrees-of-freedom argument is out of range."""


class ZeroVariance(DensityError):
    """Skewness is undefined for a constant sample."""


@dataclass(frozen=True)
class RegressionFit:
    """OLS fit of violation count against density.

    rho_max records the largest density seen during fitting; the
    critical-density search brackets its root at ten times this value.
    """

    beta0: float
    beta1: float
    s: float
    n_samples: int
    rho_mean: float
    s_xx: float
    r_squared: float
    rho_max: float

    def __post_init__(self) -> None:
        if self.n_samples < 3:
            raise InsufficientData(f"fit needs >= 3 samples, got {self.n_samples}")
        if not (self.s >= 0):
            raise DensityError(f"residual standard error must be >= 0, got {self.s}")
        if not (self.s_xx > 0):
            raise DegenerateX(f"s_xx must be > 0, got {self.s_xx}")

    def predict(self, rho: float) -> float:
        return self.beta0 + self.beta1 * rho


@dataclass(frozen=True)
class PredictionBand:
    """Evaluable prediction-interval bounds around a fitted line."""

    fit: RegressionFit
    level: float
    t_mult: float

    def _half_width(self, rho: float) -> float:
        f = self.fit
        spread = (rho - f.rho_mean) ** 2 / f.s_xx
        return self.t_mult * f.s * math.sqrt(1.0 + 1.0 / f.n_samples + spread)

    def lower(self, rho: float) -> float:
        return self.fit.predict(rho) - self._half_width(rho)

    def upper(self, rho: float) -> float:
        return self.fit.predict(rho) + self._half_width(rho)


@dataclass(frozen=True)
class CriticalDensity:
    """The density threshold plus the fit it came from.

    status is "ok" for a solved root and "already_violating" when the
    band's lower bound is non-negative at zero density (rho_c = 0 then).
    """

    rho_c: float
    fit: RegressionFit
    level: float
    status: str


def fit_ols(samples: Iterable[tuple[float, float]]) -> RegressionFit:
    """Least-squares line through (density, violations) samples.

    Needs at least 3 samples (one residual degree of freedom) and at
    least two distinct densities.
    """
    pairs = [(float(r), float(v)) for r, v in samples]
    n = len(pairs)
    if n < 3:
        raise InsufficientData(f"fit needs >= 3 samples, got {n}")
    xs = [p[0] for p in pairs]
    ys = [p[1] for p in pairs]
    if not all(math.isfinite(x) for x in xs) or not all(math.isfinite(y) for y in ys):
        raise DensityError("samples must be finite")
    x_mean = math.fsum(xs) / n
    y_mean = math.fsum(ys) / n
    s_xx = math.fsum((x - x_mean) ** 2 for x in xs)
    if s_xx == 0.0:
        raise DegenerateX("all density samples are identical")
    s_xy = math.fsum((x - x_mean) * (y - y_mean) for x, y in pairs)
    beta1 = s_xy / s_xx
    beta0 = y_mean - beta1 * x_mean
    rss = math.fsum((y - (beta0 + beta1 * x)) ** 2 for x, y in pairs)
    s = math.sqrt(rss / (n - 2))
    s_yy = math.fsum((y - y_mean) ** 2 for y in ys)
    r_squared = 1.0 if s_yy == 0.0 else 1.0 - rss / s_yy
    return RegressionFit(
        beta0=beta0,
        beta1=beta1,
        s=s,
        n_samples=n,
        rho_mean=x_mean,
        s_xx=s_xx,
        r_squared=r_squared,
        rho_max=max(xs),
    )


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h


def _betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) for a, b > 0, x in [0, 1]."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_bt = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    bt = math.exp(log_bt)
    # the continued fraction converges fast only on its own side of the mean
    if x < (a + 1.0) / (a + b + 2.0):
        return bt * _betacf(a, b, x) / a
    return 1.0 - bt * _betacf(b, a, 1.0 - x) / b


def _t_tail(t: float, dof: float) -> float:
    """P(T > t) for t >= 0; kept on the tail scale for far-tail precision."""
    x = dof / (dof + t * t)
    return 0.5 * _betainc_reg(dof / 2.0, 0.5, x)


def t_cdf(t: float, dof: float) -> float:
    """Student-t CDF via the incomplete beta."""
    if dof < 1:
        raise DomainError(f"degrees of freedom must be >= 1, got {dof}")
    if t == 0.0:
        return 0.5
    tail = _t_tail(abs(t), dof)
    return 1.0 - tail if t > 0 else tail


@lru_cache(maxsize=1024)
def t_quantile(p: float, dof: float) -> float:
    """Inverse Student-t CDF by bisection on the incomplete-beta CDF.

    Absolute error at most 1e-8.  Cached: prediction bands ask for the
    same (level, dof) pair over and over.
    """
    if not (0.0 < p < 1.0):
        raise DomainError(f"probability must lie in (0, 1), got {p}")
    if dof < 1:
        raise DomainError(f"degrees of freedom must be >= 1, got {dof}")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -t_quantile(1.0 - p, dof)
    # invert the upper-tail probability: far tails stay well conditioned
    q = 1.0 - p
    lo, hi = 0.0, 1.0
    while _t_tail(hi, dof) > q:
        lo = hi
        hi *= 2.0
        if hi > 1e18:
            raise DomainError(f"quantile for p={p}, dof={dof} out of numeric range")
    while hi - lo > QUANTILE_TOL / 10.0:
        mid = (lo + hi) / 2.0
        if _t_tail(mid, dof) > q:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


def prediction_band(fit: RegressionFit, level: float = 0.95) -> PredictionBand:
    """Two-sided prediction interval for a new observation at each density."""
    if not (0.0 < level < 1.0):
        raise DomainError(f"level must lie in (0, 1), got {level}")
    t_mult = t_quantile((1.0 + level) / 2.0, fit.n_samples - 2)
    return PredictionBand(fit=fit, level=level, t_mult=t_mult)


def _bisect_root(f: Callable[[float], float], lo: float, hi: float) -> float:
    """Root of f on [lo, hi] given f(lo) < 0 < f(hi); stops at |f| < ROOT_TOL."""
    f_lo = f(lo)
    for _ in range(200):
        mid = (lo + hi) / 2.0
        f_mid = f(mid)
        if abs(f_mid) < ROOT_TOL:
            return mid
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
        if hi - lo <= 0.0:
            break
    return (lo + hi) / 2.0


def critical_density(fit: RegressionFit, level: float = 0.95) -> CriticalDensity:
    """Largest density at which the band's lower bound is still <= 0.

    The lower bound L is concave (line minus a convex half-width), so on
    a bracket with L(0) < 0 < L(hi) the bisection root is the first and
    only up-crossing, and L stays negative below it.

    Raises NonPositiveSlope when the slope is non-positive or too weak
    for the band ever to clear zero on [0, 10 * rho_max]; returns
    rho_c = 0 with status "already_violating" when L(0) >= 0.
    """
    if fit.beta1 <= 0:
        raise NonPositiveSlope(f"slope must be > 0, got {fit.beta1}")
    band = prediction_band(fit, level)
    if band.lower(0.0) >= 0.0:
        return CriticalDensity(
            rho_c=0.0, fit=fit, level=level, status=STATUS_ALREADY_VIOLATING
        )
    hi = BRACKET_FACTOR * fit.rho_max
    if hi <= 0.0:
        hi = 1.0
    f_hi = band.lower(hi)
    if abs(f_hi) < ROOT_TOL:
        return CriticalDensity(rho_c=hi, fit=fit, level=level, status=STATUS_OK)
    if f_hi < 0.0:
        raise NonPositiveSlope(
            "prediction band lower bound never clears zero on "
            f"[0, {hi:.6g}]; slope {fit.beta1:.6g} is too weak at level {level}"
        )
    rho_c = _bisect_root(band.lower, 0.0, hi)
    return CriticalDensity(rho_c=rho_c, fit=fit, level=level, status=STATUS_OK)


def skewness(samples: Sequence[float]) -> float:
    """Moment skewness m3 / m2^(3/2) with plain central sample moments."""
    vals = [float(v) for v in samples]
    n = len(vals)
    if n < 3:
        raise InsufficientData(f"skewness needs >= 3 samples, got {n}")
    mean = math.fsum(vals) / n
    m2 = math.fsum((v - mean) ** 2 for v in vals) / n
    if m2 == 0.0:
        raise ZeroVariance("skewness undefined for a constant sample")
    m3 = math.fsum((v - mean) ** 3 for v in vals) / n
    return m3 / m2 ** 1.5


def fit_report(crit: CriticalDensity) -> dict:
    """Flat JSON-ready summary of a fit and its threshold."""
    f = crit.fit
    return {
        "beta0": f.beta0,
        "beta1": f.beta1,
        "s": f.s,
        "n": f.n_samples,
        "rho_mean": f.rho_mean,
        "s_xx": f.s_xx,
        "r_squared": f.r_squared,
        "rho_c": crit.rho_c,
        "level": crit.level,
        "status": crit.status,
    }
