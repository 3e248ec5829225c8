"""Piecewise moment functions and integral-free expressions for their expectations.

For ``u = (y - tau) / c_tilde`` and cuts ``a1 = (R1 - tau) / c_tilde``,
``a2 = (tau - R2) / c_tilde`` the k-th moment function is

* ``1 < alpha < 2``: ``a1^2 u^s`` right of R1, ``|u|^(2 + s)`` between the
  cuts and ``a2^2 |u|^s`` left of R2, with ``s = 1 / (k + 1)``;
* ``0 < alpha < 1``: the same with ``s`` replaced by ``-s``.

The tail constants ``a^2`` splice the branches continuously.  Integrating the
tail series against the tail branches and the central series against the
central branch gives sums of elementary power integrals, which is what
:func:`expected_moment` evaluates.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .core import ParameterError, Regime, RegionConfig, StableParams
from .density import (
    Adaptive,
    Fixed,
    TruncationPolicy,
    _alternating_sines,
    balanced_cut,
    central_coefficients,
    central_order,
    series_angle,
    tail_coefficients,
    tail_order,
)

__all__ = [
    "MomentConfig",
    "Side",
    "central_moment_term",
    "default_region",
    "expected_moment",
    "expected_moments",
    "moment_exponents",
    "moment_fn",
    "sample_moment",
    "sample_moments",
    "tail_moment_term",
]


class Side(str, enum.Enum):
    RIGHT = "right"
    LEFT = "left"


@dataclass(frozen=True)
class MomentConfig:
    """Number of moment functions, their weights and the truncation policy."""

    m: int = 6
    weights: tuple[float, ...] | None = None
    truncation: TruncationPolicy = field(default_factory=Adaptive)

    def __post_init__(self) -> None:
        if int(self.m) != self.m or self.m < 5:
            raise ValueError(f"m must be an integer >= 5, got {self.m!r}")
        weights = (1.0,) * self.m if self.weights is None else tuple(float(w) for w in self.weights)
        if len(weights) != self.m:
            raise ValueError(f"expected {self.m} weights, got {len(weights)}")
        if not all(w > 0.0 and math.isfinite(w) for w in weights):
            raise ValueError("weights must be positive and finite")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "weights", weights)

    @property
    def ks(self) -> np.ndarray:
        return np.arange(1, self.m + 1)


def default_region(params: StableParams) -> RegionConfig:
    """Cuts at :func:`balanced_cut` scale units either side of tau."""
    return RegionConfig.around(params, balanced_cut(params.alpha))


def moment_exponents(k, regime: Regime):
    """(tail exponent, central exponent) of the k-th moment function."""
    k = np.asarray(k, dtype=float)
    if np.any(k < 1) or np.any(k != np.floor(k)):
        raise ValueError(f"moment index must be a positive integer, got {k!r}")
    s = 1.0 / (k + 1.0)
    if regime is Regime.LOWER:
        s = -s
    return s, 2.0 + s


def _check_k(k: int) -> int:
    if int(k) != k or k < 1:
        raise ValueError(f"moment index must be a positive integer, got {k!r}")
    return int(k)


def _moment_matrix(y, ks, params: StableParams, region: RegionConfig) -> np.ndarray:
    # rows: moment index, columns: observations
    a1, a2 = region.ratios(params)
    y = np.asarray(y, dtype=float)
    tail_exp, central_exp = moment_exponents(np.asarray(ks)[:, None], params.regime)
    right, left = y >= region.r1, y <= region.r2
    central = ~(right | left)
    out = np.empty((len(ks), y.size))
    with np.errstate(divide="ignore"):
        log_u = np.log(np.abs(y - params.tau) / params.c_tilde)
    # |u|^p as exp(p log|u|); log 0 = -inf gives 0 for the positive central powers
    out[:, central] = np.exp(central_exp * log_u[central])
    out[:, right] = a1 * a1 * np.exp(tail_exp * log_u[right])
    out[:, left] = a2 * a2 * np.exp(tail_exp * log_u[left])
    return out


def moment_fn(y, k: int, params: StableParams, region: RegionConfig):
    """k-th moment function at ``y`` (scalar or array)."""
    k = _check_k(k)
    y = np.asarray(y, dtype=float)
    out = _moment_matrix(np.atleast_1d(y), [k], params, region)[0]
    return float(out[0]) if y.ndim == 0 else out


def sample_moments(data, ks, params: StableParams, region: RegionConfig, *, presorted: bool = False) -> np.ndarray:
    """Sample means of several moment functions at once.

    With ``presorted=True`` the data must be in ascending order; the zones
    are then located by bisection, which is much faster for repeated calls.
    """
    data = np.asarray(data, dtype=float).ravel()
    if data.size == 0:
        raise ValueError("empty data")
    ks = [_check_k(k) for k in np.atleast_1d(ks)]
    if not presorted:
        if not np.all(np.isfinite(data)):
            raise ValueError("data contains non-finite values")
        return _moment_matrix(data, ks, params, region).mean(axis=1)
    a1, a2 = region.ratios(params)
    tail_exp, central_exp = moment_exponents(np.asarray(ks)[:, None], params.regime)
    lo = int(np.searchsorted(data, region.r2, side="right"))
    hi = int(np.searchsorted(data, region.r1, side="left"))
    with np.errstate(divide="ignore"):
        log_u = np.log(np.abs(data - params.tau)) - math.log(params.c_tilde)
    total = np.exp(central_exp * log_u[None, lo:hi]).sum(axis=1)
    total += a2 * a2 * np.exp(tail_exp * log_u[None, :lo]).sum(axis=1)
    total += a1 * a1 * np.exp(tail_exp * log_u[None, hi:]).sum(axis=1)
    return total / data.size


def sample_moment(data, k: int, params: StableParams, region: RegionConfig) -> float:
    """Sample mean of the k-th moment function."""
    return float(sample_moments(data, [k], params, region)[0])


# -- closed forms -------------------------------------------------------------


def _tail_terms(ks, n, params: StableParams, a: float, positive: bool) -> np.ndarray:
    """Matrix (len(ks), len(n)) of tail summands for cut ratio ``a``."""
    alpha = params.alpha
    s, _ = moment_exponents(np.asarray(ks, dtype=float)[:, None], params.regime)
    n = np.asarray(n, dtype=float)[None, :]
    sines = _alternating_sines(n, series_angle(params, "tail", positive))
    # a^2 * (1/pi) * coef * int_a^inf u^(s - n alpha - 1) du, exponent of a is 2 + s - n alpha
    log_mag = tail_coefficients(alpha, n) + (2.0 + s - n * alpha) * math.log(a)
    with np.errstate(over="ignore"):
        return sines * np.exp(log_mag) / (n * alpha - s) / math.pi


def _central_terms(ks, n, params: StableParams, a1: float, a2: float) -> np.ndarray:
    """Matrix (len(ks), len(n)) of central summands over ``[-a2, a1]``."""
    _, q = moment_exponents(np.asarray(ks, dtype=float)[:, None], params.regime)
    n = np.asarray(n, dtype=float)[None, :]
    sines = _alternating_sines(n, series_angle(params, "central"))
    coef = central_coefficients(params.alpha, n)
    p = n + q
    with np.errstate(over="ignore"):
        A1 = np.exp(coef + p * math.log(a1)) / p
        A2 = np.exp(coef + p * math.log(a2)) / p
    parity = np.where(n % 2 == 1, 1.0, -1.0)
    return sines * (A1 + parity * A2) / math.pi


def _check_ratios(params: StableParams, region: RegionConfig) -> tuple[float, float]:
    a1, a2 = region.ratios(params)
    if params.regime is Regime.UPPER:
        if a1 <= 1.0:
            raise ParameterError("r1", f"(R1 - tau) / c_tilde = {a1:.6g} must exceed 1 for alpha > 1")
        if a2 <= 1.0:
            raise ParameterError("r2", f"(tau - R2) / c_tilde = {a2:.6g} must exceed 1 for alpha > 1")
    return a1, a2


def tail_moment_term(k: int, n: int, params: StableParams, region: RegionConfig, side: Side) -> float:
    """n-th summand of the expected k-th moment over one tail."""
    k, n = _check_k(k), _check_k(n)
    a1, a2 = region.ratios(params)
    side = Side(side)
    a = a1 if side is Side.RIGHT else a2
    return float(_tail_terms([k], [n], params, a, side is Side.RIGHT)[0, 0])


def central_moment_term(k: int, n: int, params: StableParams, region: RegionConfig) -> float:
    """n-th summand of the expected k-th moment between the cuts."""
    k, n = _check_k(k), _check_k(n)
    a1, a2 = region.ratios(params)
    return float(_central_terms([k], [n], params, a1, a2)[0, 0])


def _orders(params, a1, a2, truncation) -> tuple[int, int, int]:
    if isinstance(truncation, (int, np.integer)):
        truncation = Fixed(int(truncation))
    return (
        tail_order(a1, params, truncation),
        tail_order(a2, params, truncation),
        central_order(max(a1, a2), params, truncation),
    )


def expected_moments(
    ks, params: StableParams, region: RegionConfig, truncation: TruncationPolicy | int = Adaptive()
) -> np.ndarray:
    """Truncated expectations of several moment functions.

    ``truncation`` is a policy or a fixed number of terms shared by the three
    pieces.  Raises :class:`~stablegmm.core.ParameterError` when the cuts are
    incompatible with the regime and
    :class:`~stablegmm.density.TruncationError` when no admissible order
    exists.
    """
    ks = [_check_k(k) for k in np.atleast_1d(ks)]
    a1, a2 = _check_ratios(params, region)
    n_right, n_left, n_central = _orders(params, a1, a2, truncation)
    right = _tail_terms(ks, np.arange(1, n_right + 1), params, a1, True).sum(axis=1)
    left = _tail_terms(ks, np.arange(1, n_left + 1), params, a2, False).sum(axis=1)
    central = _central_terms(ks, np.arange(1, n_central + 1), params, a1, a2).sum(axis=1)
    return right + left + central


def expected_moment(
    k: int, params: StableParams, region: RegionConfig, truncation: TruncationPolicy | int = Adaptive()
) -> float:
    """Truncated expectation of the k-th moment function."""
    return float(expected_moments([k], params, region, truncation)[0])
