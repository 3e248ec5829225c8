"""Weighted least-squares moment matching and the fit driver.

The objective is

    V(theta) = sum_k c_k (mean_i f_k(x_i; theta, R) - E_theta f_k(x; theta, R))^2

with the region ``R = (R1, R2)`` held fixed in data units during a minimiser
run.  The expectation uses the integral-free series sums of
:mod:`stablegmm.moments`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import BETA_MAX, ParameterError, Regime, RegionConfig, StableParams
from .density import TruncationError, balanced_cut
from .moments import MomentConfig, expected_moments, sample_moments
from .optimizer import OptimizerSettings, minimize

__all__ = [
    "FitConfig",
    "FitResult",
    "Objective",
    "OptimizerFailed",
    "RestartRecord",
    "SampleMode",
    "Status",
    "default_init",
    "fit",
    "objective",
    "parameter_bounds",
    "select_regime",
]

PENALTY = 1e10
# a fit whose alpha ends this close to 1 sits on the edge of its regime box
EDGE_TOLERANCE = 0.05


class OptimizerFailed(RuntimeError):
    """Raised by :func:`select_regime` when neither regime gives a usable fit."""


class Status(str, enum.Enum):
    CONVERGED = "converged"
    RESTART_LIMIT = "restart_limit"
    OPTIMIZER_FAILED = "optimizer_failed"


class SampleMode(str, enum.Enum):
    """How the sample side of the objective treats theta.

    ``CANDIDATE`` evaluates the moment functions at the candidate theta, the
    usual moment condition.  ``REFERENCE`` evaluates them once at the start
    point of each minimiser run and keeps them fixed during the run.
    """

    CANDIDATE = "candidate"
    REFERENCE = "reference"


@dataclass(frozen=True)
class FitConfig:
    """Settings of :func:`fit`.

    ``region`` and ``regime`` default to values derived from the start point.
    """

    moment_config: MomentConfig = field(default_factory=MomentConfig)
    region: RegionConfig | None = None
    regime: Regime | None = None
    max_restarts: int = 5
    restart_margin: float = 0.05
    widen_factor: float = 1.5
    sample_mode: SampleMode = SampleMode.CANDIDATE
    optimizer: OptimizerSettings = field(
        default_factory=lambda: OptimizerSettings(
            x_tolerance=1e-7, f_tolerance=1e-10, max_evaluations=3000, simplex_init_scale=(0.1, 0.2, 0.1, 0.1)
        )
    )

    def __post_init__(self) -> None:
        if int(self.max_restarts) != self.max_restarts or self.max_restarts < 0:
            raise ValueError(f"max_restarts must be a non-negative integer, got {self.max_restarts!r}")
        if not 0.0 < self.restart_margin < 0.5:
            raise ValueError(f"restart_margin must lie in (0, 0.5), got {self.restart_margin!r}")
        if not self.widen_factor > 1.0:
            raise ValueError(f"widen_factor must exceed 1, got {self.widen_factor!r}")
        object.__setattr__(self, "sample_mode", SampleMode(self.sample_mode))
        if self.regime is not None:
            object.__setattr__(self, "regime", Regime(self.regime))


@dataclass(frozen=True)
class RestartRecord:
    region: RegionConfig
    start: StableParams
    end: StableParams
    objective: float


@dataclass(frozen=True)
class FitResult:
    theta_hat: StableParams
    objective: float
    restarts: tuple[RestartRecord, ...]
    status: Status
    regime_chosen: Regime
    evaluations: int = 0

    @property
    def region(self) -> RegionConfig:
        return self.restarts[-1].region


def parameter_bounds(regime: Regime) -> list[tuple[float | None, float | None]]:
    """Box for (alpha, beta, tau, c_tilde) inside the guard bands."""
    lo, hi = regime.alpha_bounds
    return [(lo, hi), (-BETA_MAX, BETA_MAX), (None, None), (0.0, None)]


def _violation(theta: np.ndarray, region: RegionConfig, regime: Regime) -> float:
    """Squared distance of theta from the set the region admits."""
    _, _, tau, c_tilde = theta
    v = max(0.0, tau - region.r1) ** 2 + max(0.0, region.r2 - tau) ** 2
    if regime is Regime.UPPER:
        v += max(0.0, c_tilde - (region.r1 - tau)) ** 2 + max(0.0, c_tilde - (tau - region.r2)) ** 2
    return v


class Objective:
    """The moment-matching objective for fixed data, region and weights.

    Points that are not admissible parameters, put tau outside the region,
    violate the cut ratio of the regime or need more series terms than the
    truncation policy allows get ``PENALTY`` plus their squared distance to
    the admissible set.
    """

    def __init__(
        self,
        data,
        region: RegionConfig,
        moment_config: MomentConfig,
        regime: Regime,
        reference: StableParams | None = None,
        sample_override: np.ndarray | None = None,
    ) -> None:
        data = np.asarray(data, dtype=float).ravel()
        if data.size == 0:
            raise ValueError("empty data")
        if not np.all(np.isfinite(data)):
            raise ValueError("data contains non-finite values")
        self.data = np.sort(data)
        self.region = region
        self.config = moment_config
        self.regime = regime
        self.weights = np.asarray(moment_config.weights)
        self.ks = moment_config.ks
        self._fixed = None
        if sample_override is not None:
            self._fixed = np.asarray(sample_override, dtype=float)
        elif reference is not None:
            self._fixed = sample_moments(self.data, self.ks, reference, region, presorted=True)
        self.evaluations = 0

    def sample(self, params: StableParams) -> np.ndarray:
        if self._fixed is not None:
            return self._fixed
        return sample_moments(self.data, self.ks, params, self.region, presorted=True)

    def __call__(self, theta) -> float:
        self.evaluations += 1
        theta = np.asarray(theta, dtype=float)
        base = PENALTY + _violation(theta, self.region, self.regime)
        try:
            params = StableParams(*map(float, theta))
            if params.regime is not self.regime:
                return base
            expected = expected_moments(self.ks, params, self.region, self.config.truncation)
            gap = self.sample(params) - expected
        except (ParameterError, TruncationError):
            return base
        value = float(np.sum(self.weights * gap * gap))
        return value if math.isfinite(value) else base


def objective(theta: StableParams, data, cfg: FitConfig, region: RegionConfig | None = None) -> float:
    """Objective at ``theta`` with sample moments taken at ``theta``.

    ``region`` defaults to ``cfg.region`` and then to the default cuts around
    ``theta``.
    """
    if region is None and cfg.region is None:
        try:
            region = _default_region(theta, theta.regime)
        except TruncationError:
            # no cut at which the series can be evaluated (alpha just above 1)
            return PENALTY
    region = region or cfg.region
    return Objective(data, region, cfg.moment_config, theta.regime)(theta.as_tuple())


def _default_region(params: StableParams, regime: Regime) -> RegionConfig:
    return RegionConfig.around(params, balanced_cut(params.alpha if params.regime is regime else _mid(regime)))


def _mid(regime: Regime) -> float:
    return 1.5 if regime is Regime.UPPER else 0.5


def _tail_index(data: np.ndarray) -> float:
    """Log-log slope of the empirical survival function of |x - median|."""
    dev = np.sort(np.abs(data - np.median(data)))[::-1]
    n = dev.size
    # upper 10% down to upper 1% of the order statistics
    idx = np.arange(max(2, n // 100), max(3, n // 10))
    idx = idx[dev[idx] > 0.0]
    if idx.size < 2:
        return 1.5
    slope = np.polyfit(np.log(dev[idx]), np.log((idx + 1) / n), 1)[0]
    return float(-slope)


def default_init(data, regime: Regime | None = None) -> StableParams:
    """Crude start point: tail-index alpha, beta = 0, median, half the IQR."""
    data = np.asarray(data, dtype=float)
    if data.size == 0:
        raise ValueError("empty data")
    alpha = _tail_index(data)
    if regime is None:
        regime = Regime.of(alpha) if abs(alpha - 1.0) > 1e-3 else Regime.UPPER
    lo, hi = (1.05, 1.95) if regime is Regime.UPPER else (0.05, 0.95)
    alpha = min(max(alpha, lo), hi)
    q75, q25 = np.percentile(data, [75, 25])
    scale = 0.5 * (q75 - q25)
    if not scale > 0.0:
        scale = max(float(np.std(data)), 1e-8)
    return StableParams(alpha, 0.0, float(np.median(data)), float(scale))


def _near_cut(tau: float, region: RegionConfig, margin: float) -> tuple[bool, bool]:
    width = region.r1 - region.r2
    return region.r1 - tau <= margin * width, tau - region.r2 <= margin * width


def _widen(region: RegionConfig, right: bool, left: bool, factor: float) -> RegionConfig:
    width = region.r1 - region.r2
    r1 = region.r2 + factor * width if right else region.r1
    r2 = region.r1 - factor * width if left else region.r2
    if right and left:
        centre = 0.5 * (region.r1 + region.r2)
        r1, r2 = centre + 0.5 * factor * width, centre - 0.5 * factor * width
    return RegionConfig(r1, r2)


def fit(
    data,
    init: StableParams | None = None,
    cfg: FitConfig | None = None,
    *,
    sample_override: np.ndarray | None = None,
) -> FitResult:
    """Minimise the objective from ``init``, widening the region when needed.

    After each minimiser run, if the estimated tau lies within
    ``restart_margin * (R1 - R2)`` of a cut, that cut is moved away from tau
    so the region becomes ``widen_factor`` times wider, and the minimiser is
    restarted from the estimate.  ``sample_override`` replaces the sample
    moments by fixed values, which turns the fit into a pure moment-inversion
    problem.

    The minimiser works on data standardized by the location and scale of
    ``init``, so the fit of ``a + b * data`` from the correspondingly moved
    start point repeats the same steps.
    """
    cfg = FitConfig() if cfg is None else cfg
    data = np.asarray(data, dtype=float).ravel()
    regime = cfg.regime or (init.regime if init is not None else None)
    init = default_init(data, regime) if init is None else init
    regime = regime or init.regime
    if init.regime is not regime:
        raise ParameterError("alpha", f"start point {init.alpha} lies outside the {regime.value} regime")
    region = cfg.region or _default_region(init, regime)
    bounds = parameter_bounds(regime)
    loc, scale = init.tau, init.c_tilde
    work = (data - loc) / scale

    records: list[RestartRecord] = []
    start = _to_unit(init, loc, scale)
    status = Status.RESTART_LIMIT
    evaluations = 0
    for attempt in range(cfg.max_restarts + 1):
        reference = start if cfg.sample_mode is SampleMode.REFERENCE else None
        unit_region = RegionConfig((region.r1 - loc) / scale, (region.r2 - loc) / scale)
        f = Objective(work, unit_region, cfg.moment_config, regime, reference, sample_override)
        result = minimize(f, start.as_tuple(), bounds, cfg.optimizer)
        evaluations += result.evaluations
        end = StableParams(*map(float, result.x))
        records.append(
            RestartRecord(region, _from_unit(start, loc, scale), _from_unit(end, loc, scale), float(result.fun))
        )
        if result.fun >= PENALTY or not result.converged:
            status = Status.OPTIMIZER_FAILED
            break
        right, left = _near_cut(loc + scale * end.tau, region, cfg.restart_margin)
        moved = cfg.sample_mode is SampleMode.REFERENCE and not _same(start, end, cfg.optimizer.x_tolerance)
        if not (right or left or moved):
            status = Status.CONVERGED
            break
        if attempt == cfg.max_restarts:
            break
        if right or left:
            region = _widen(region, right, left, cfg.widen_factor)
        start = end
    final = records[-1]
    return FitResult(
        theta_hat=final.end,
        objective=final.objective,
        restarts=tuple(records),
        status=status,
        regime_chosen=regime,
        evaluations=evaluations,
    )


def _to_unit(params: StableParams, loc: float, scale: float) -> StableParams:
    if loc == 0.0 and scale == 1.0:
        return params
    return params.replace(tau=(params.tau - loc) / scale, c_tilde=params.c_tilde / scale)


def _from_unit(params: StableParams, loc: float, scale: float) -> StableParams:
    if loc == 0.0 and scale == 1.0:
        return params
    return params.replace(tau=loc + scale * params.tau, c_tilde=scale * params.c_tilde)


def _same(a: StableParams, b: StableParams, tol: float) -> bool:
    return max(abs(x - y) for x, y in zip(a.as_tuple(), b.as_tuple())) <= 10.0 * tol


def _disqualified(result: FitResult) -> bool:
    return result.status is Status.OPTIMIZER_FAILED or abs(result.theta_hat.alpha - 1.0) <= EDGE_TOLERANCE


def select_regime(data, cfg: FitConfig | None = None) -> tuple[Regime, dict[Regime, FitResult]]:
    """Fit under both regimes and keep the one with the smaller objective.

    Each fit uses the default start point and region of its regime.  A fit
    that failed, or whose alpha ran onto the alpha = 1 edge of its box (a
    corner solution that points at the other regime), only wins when the
    other fit is disqualified too.  Ties go to the upper regime.  Raises
    :class:`OptimizerFailed` when neither fit produces an unpenalised
    objective.
    """
    cfg = FitConfig() if cfg is None else cfg
    fits = {}
    for regime in (Regime.UPPER, Regime.LOWER):
        fits[regime] = fit(data, default_init(data, regime), replace(cfg, regime=regime, region=None))
    usable = {r: f for r, f in fits.items() if f.objective < PENALTY}
    if not usable:
        raise OptimizerFailed("optimizer failed under both regimes")
    best = min(usable, key=lambda r: (_disqualified(usable[r]), usable[r].objective, r is not Regime.UPPER))
    return best, fits
