"""Stable-law parameters, regime classification and the scale map.

The distribution is defined by its characteristic function

    phi(z) = exp(-c |z|^alpha (1 - i beta tan(pi alpha / 2) sgn z) + i tau z)

with 0 < alpha < 2, alpha != 1, -1 < beta < 1 and c > 0.  Every density
series in this package is written for the standardized variable
``u = (x - tau) / c_tilde`` where ``c_tilde`` is a rescaled version of ``c``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

__all__ = [
    "ALPHA_MIN",
    "ALPHA_GAP",
    "BETA_MAX",
    "ParameterError",
    "Regime",
    "RegionConfig",
    "StableParams",
    "c_from_c_tilde",
    "c_tilde_from_c",
    "series_skew",
    "standardize",
    "unstandardize",
]

# guard bands keeping tan(pi alpha / 2) and the one-sided limits well conditioned
ALPHA_MIN = 1e-3
ALPHA_GAP = 1e-6
BETA_MAX = 1.0 - 1e-9


class ParameterError(ValueError):
    """Raised when a parameter falls outside the admissible box.

    The offending field name is available as ``field``.
    """

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field


class Regime(str, enum.Enum):
    """Which half of the alpha range a parameter vector belongs to."""

    UPPER = "upper"  # 1 < alpha < 2
    LOWER = "lower"  # 0 < alpha < 1

    @classmethod
    def of(cls, alpha: float) -> Regime:
        return cls.UPPER if alpha > 1.0 else cls.LOWER

    @property
    def alpha_bounds(self) -> tuple[float, float]:
        if self is Regime.UPPER:
            return 1.0 + ALPHA_GAP, 2.0 - ALPHA_GAP
        return ALPHA_MIN, 1.0 - ALPHA_GAP


def _check_alpha(alpha: float) -> None:
    if not math.isfinite(alpha):
        raise ParameterError("alpha", f"must be finite, got {alpha!r}")
    if alpha == 1.0:
        raise ParameterError("alpha", "alpha=1 unsupported (Cauchy case is excluded)")
    if alpha >= 2.0:
        raise ParameterError("alpha", f"must be < 2, got {alpha!r}")
    if alpha <= 0.0:
        raise ParameterError("alpha", f"must be > 0, got {alpha!r}")
    lo, hi = Regime.of(alpha).alpha_bounds
    if not lo <= alpha <= hi:
        raise ParameterError(
            "alpha", f"{alpha!r} lies inside a guard band; admissible range is [{lo}, {hi}]"
        )


@dataclass(frozen=True)
class StableParams:
    """Parameter vector (alpha, beta, tau, c_tilde).

    Parameters
    ----------
    alpha : float
        Characteristic exponent in (0, 1) or (1, 2).
    beta : float
        Skewness of the characteristic function, strictly inside (-1, 1).
    tau : float
        Drift (location).
    c_tilde : float
        Positive scale of the standardized variable ``(x - tau) / c_tilde``.
    """

    alpha: float
    beta: float
    tau: float
    c_tilde: float

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "tau", "c_tilde"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ParameterError(name, f"must be a real number, got {value!r}")
            object.__setattr__(self, name, float(value))
        _check_alpha(self.alpha)
        if not (math.isfinite(self.beta) and abs(self.beta) <= BETA_MAX):
            raise ParameterError("beta", f"must satisfy |beta| < 1, got {self.beta!r}")
        if not math.isfinite(self.tau):
            raise ParameterError("tau", f"must be finite, got {self.tau!r}")
        if not (math.isfinite(self.c_tilde) and self.c_tilde > 0.0):
            raise ParameterError("c_tilde", f"must be positive, got {self.c_tilde!r}")

    @property
    def regime(self) -> Regime:
        return Regime.of(self.alpha)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.alpha, self.beta, self.tau, self.c_tilde)

    def replace(self, **changes: float) -> StableParams:
        values = dict(zip(("alpha", "beta", "tau", "c_tilde"), self.as_tuple()))
        values.update(changes)
        return StableParams(**values)

    def reflected(self) -> StableParams:
        """Parameters of ``-x``: the skewness and drift change sign."""
        return StableParams(self.alpha, -self.beta, -self.tau, self.c_tilde)


def _skew_width(alpha: float) -> float:
    return alpha if alpha < 1.0 else 2.0 - alpha


def series_skew(alpha: float, beta: float) -> float:
    """Skewness entering the series expansions.

    The expansions are naturally written in terms of the angle
    ``arctan(beta * tan(pi alpha / 2))``.  Normalising it by ``pi w / 2`` with
    ``w = alpha`` (alpha < 1) or ``w = 2 - alpha`` (alpha > 1) gives a value in
    (-1, 1) that agrees with ``beta`` at -1, 0 and 1 and is monotone in
    between.  Plugging it in place of ``beta`` makes the classical series
    exact for the characteristic function above.
    """
    w = _skew_width(alpha)
    return 2.0 / (math.pi * w) * math.atan(beta * math.tan(math.pi * w / 2.0))


def _cos_factor(alpha: float, beta: float) -> float:
    # equals cos(pi * series_skew * w / 2) = 1 / sqrt(1 + (beta tan(pi alpha / 2))^2)
    return 1.0 / math.hypot(1.0, beta * math.tan(math.pi * alpha / 2.0))


def c_from_c_tilde(params: StableParams) -> float:
    """Scale ``c`` of the characteristic function for the given ``c_tilde``."""
    return _cos_factor(params.alpha, params.beta) * params.c_tilde**params.alpha


def c_tilde_from_c(alpha: float, beta: float, c: float) -> float:
    """Inverse of :func:`c_from_c_tilde`."""
    if not c > 0.0:
        raise ParameterError("c", f"must be positive, got {c!r}")
    return (c / _cos_factor(alpha, beta)) ** (1.0 / alpha)


def standardize(y, params: StableParams):
    return (y - params.tau) / params.c_tilde


def unstandardize(u, params: StableParams):
    return params.tau + params.c_tilde * u


@dataclass(frozen=True)
class RegionConfig:
    """Cut points ``r2 < r1`` (in data units) separating tails from the centre."""

    r1: float
    r2: float

    def __post_init__(self) -> None:
        for name in ("r1", "r2"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ParameterError(name, f"must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if not self.r2 < self.r1:
            raise ParameterError("r2", f"must be below r1, got r2={self.r2!r}, r1={self.r1!r}")

    def contains(self, tau: float) -> bool:
        return self.r2 < tau < self.r1

    def ratios(self, params: StableParams) -> tuple[float, float]:
        """Standardized distances ``((r1 - tau) / c_tilde, (tau - r2) / c_tilde)``."""
        if not self.contains(params.tau):
            raise ParameterError(
                "tau", f"must lie strictly between r2={self.r2!r} and r1={self.r1!r}, got {params.tau!r}"
            )
        return (self.r1 - params.tau) / params.c_tilde, (params.tau - self.r2) / params.c_tilde

    @classmethod
    def around(cls, params: StableParams, right: float, left: float | None = None) -> RegionConfig:
        """Cuts placed ``right`` and ``left`` scale units either side of tau."""
        left = right if left is None else left
        return cls(params.tau + right * params.c_tilde, params.tau - left * params.c_tilde)
