"""Minimal distribution library: Normal, Uniform, TruncatedNormal.

Just enough surface for the benchmark models and the analytic oracles:
sampling, natural-log densities, and the standard normal CDF / inverse
CDF used by truncated-normal normalizers and the collapsed-weight
oracle.

``normal_cdf`` is computed through the complementary error function,
``Phi(x) = erfc(-x / sqrt(2)) / 2``, which keeps full relative accuracy
deep into the lower tail.  The inverse CDF uses ``scipy.special.ndtri``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.special import ndtri

from .rng import RngStream

__all__ = [
    "Dist",
    "Normal",
    "Uniform",
    "TruncatedNormal",
    "normal_cdf",
    "normal_icdf",
    "gauss_mass",
]

_SQRT2 = math.sqrt(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_NEG_INF = float("-inf")
_INF = float("inf")


def normal_cdf(x: float) -> float:
    """Standard normal CDF via the error-function identity."""
    return 0.5 * math.erfc(-x / _SQRT2)


def normal_icdf(p: float) -> float:
    """Standard normal quantile function."""
    if not 0.0 < p < 1.0:
        if p == 0.0:
            return _NEG_INF
        if p == 1.0:
            return _INF
        raise ValueError(f"quantile argument outside [0, 1]: {p}")
    return float(ndtri(p))


def gauss_mass(a: float, b: float) -> float:
    """Phi(b) - Phi(a), evaluated tail-stably for a <= b (standardized)."""
    if a > b:
        raise ValueError("interval is empty")
    if a >= 0.0:
        # both endpoints in the upper tail: difference of survival functions
        return 0.5 * (math.erfc(a / _SQRT2) - math.erfc(b / _SQRT2))
    if b <= 0.0:
        return 0.5 * (math.erfc(-b / _SQRT2) - math.erfc(-a / _SQRT2))
    return normal_cdf(b) - normal_cdf(a)


class Dist:
    """Base class; subclasses are value types with sample/log_pdf/support."""

    def sample(self, rng: RngStream) -> float:
        raise NotImplementedError

    def log_pdf(self, x: float) -> float:
        raise NotImplementedError

    def support(self) -> tuple[float, float]:
        raise NotImplementedError


@dataclass
class Normal(Dist):
    mean: float
    std: float
    _log_norm: float = field(init=False, repr=False, compare=False)
    _inv2var: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.std > 0.0:
            raise ValueError(f"Normal std must be positive, got {self.std}")
        self._log_norm = -math.log(self.std) - _LOG_SQRT_2PI
        self._inv2var = 0.5 / (self.std * self.std)

    def sample(self, rng: RngStream) -> float:
        return rng.normal(self.mean, self.std)

    def log_pdf(self, x: float) -> float:
        d = x - self.mean
        return self._log_norm - d * d * self._inv2var

    def support(self) -> tuple[float, float]:
        return (_NEG_INF, _INF)

    def cdf(self, x: float) -> float:
        return normal_cdf((x - self.mean) / self.std)


@dataclass
class Uniform(Dist):
    low: float
    high: float
    _log_density: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.high > self.low:
            raise ValueError(f"Uniform needs high > low, got [{self.low}, {self.high}]")
        self._log_density = -math.log(self.high - self.low)

    def sample(self, rng: RngStream) -> float:
        return rng.uniform(self.low, self.high)

    def log_pdf(self, x: float) -> float:
        if self.low <= x <= self.high:
            return self._log_density
        return _NEG_INF

    def support(self) -> tuple[float, float]:
        return (self.low, self.high)

    def cdf(self, x: float) -> float:
        if x <= self.low:
            return 0.0
        if x >= self.high:
            return 1.0
        return (x - self.low) / (self.high - self.low)


# Below this truncation mass, inverse-CDF sampling starts to lose digits
# and we fall back to rejection from the parent normal.
_ICDF_MASS_FLOOR = 1e-3
_REJECTION_CAP = 10_000_000


@dataclass
class TruncatedNormal(Dist):
    """Normal(mean, std) conditioned on the open interval (low, high)."""

    mean: float
    std: float
    low: float = _NEG_INF
    high: float = _INF
    _mass: float = field(init=False, repr=False, compare=False)
    _log_norm: float = field(init=False, repr=False, compare=False)
    _inv2var: float = field(init=False, repr=False, compare=False)
    _cdf_low: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.std > 0.0:
            raise ValueError(f"TruncatedNormal std must be positive, got {self.std}")
        if not self.high > self.low:
            raise ValueError(
                f"TruncatedNormal needs high > low, got ({self.low}, {self.high})"
            )
        a = (self.low - self.mean) / self.std if self.low != _NEG_INF else _NEG_INF
        b = (self.high - self.mean) / self.std if self.high != _INF else _INF
        self._mass = gauss_mass(a, b)
        if not self._mass > 0.0:
            raise ValueError(
                f"TruncatedNormal has zero mass on ({self.low}, {self.high})"
            )
        self._cdf_low = normal_cdf(a) if a != _NEG_INF else 0.0
        self._log_norm = -math.log(self.std) - _LOG_SQRT_2PI - math.log(self._mass)
        self._inv2var = 0.5 / (self.std * self.std)

    @property
    def truncation_mass(self) -> float:
        return self._mass

    def sample(self, rng: RngStream) -> float:
        if self._mass >= _ICDF_MASS_FLOOR:
            u = self._cdf_low + rng.random() * self._mass
            x = self.mean + self.std * float(ndtri(u))
            # clamp inverse-CDF roundoff back into the open interval
            if x <= self.low or x >= self.high:
                x = min(max(x, math.nextafter(self.low, _INF)),
                        math.nextafter(self.high, _NEG_INF))
            return x
        for _ in range(_REJECTION_CAP):
            x = rng.normal(self.mean, self.std)
            if self.low < x < self.high:
                return x
        raise RuntimeError("truncated-normal rejection fallback exhausted its cap")

    def log_pdf(self, x: float) -> float:
        if not self.low < x < self.high:
            return _NEG_INF
        d = x - self.mean
        return self._log_norm - d * d * self._inv2var

    def support(self) -> tuple[float, float]:
        return (self.low, self.high)

    def cdf(self, x: float) -> float:
        if x <= self.low:
            return 0.0
        if x >= self.high:
            return 1.0
        return (normal_cdf((x - self.mean) / self.std) - self._cdf_low) / self._mass
