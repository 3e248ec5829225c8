import math
from dataclasses import replace

import numpy as np
import pytest

from stablegmm import gmm
from stablegmm.core import ParameterError, Regime, RegionConfig, StableParams
from stablegmm.gmm import (
    PENALTY,
    FitConfig,
    FitResult,
    Objective,
    OptimizerFailed,
    RestartRecord,
    Status,
    default_init,
    fit,
    objective,
    parameter_bounds,
    select_regime,
)
from stablegmm.moments import MomentConfig, default_region, expected_moments
from stablegmm.optimizer import MinimizeResult
from stablegmm.sampler import SamplerSpec, sample

THETA0 = StableParams(1.5, 0.3, 0.0, 1.0)


@pytest.fixture(scope="module")
def data():
    return sample(SamplerSpec(THETA0, 2000, 1))


# -- objective -----------------------------------------------------------------


def test_objective_penalties(data):
    region = default_region(THETA0)
    f = Objective(data, region, MomentConfig(), Regime.UPPER)
    assert f(THETA0.as_tuple()) < 1.0
    # wrong regime, inadmissible beta, tau outside the region
    assert f((0.7, 0.0, 0.0, 1.0)) >= PENALTY
    assert f((1.5, 1.2, 0.0, 1.0)) >= PENALTY
    outside = f((1.5, 0.0, region.r1 + 1.0, 1.0))
    assert outside == pytest.approx(PENALTY + 1.0)
    # a scale too wide for the cut ratio of the upper regime
    assert f((1.5, 0.0, 0.0, region.r1 + 1.0)) > PENALTY


def test_objective_rejects_bad_data():
    region = RegionConfig(5.0, -5.0)
    with pytest.raises(ValueError):
        Objective([], region, MomentConfig(), Regime.UPPER)
    with pytest.raises(ValueError):
        Objective([0.0, math.inf], region, MomentConfig(), Regime.UPPER)


def test_objective_zero_for_exact_moments():
    region = default_region(THETA0)
    exact = expected_moments(np.arange(1, 7), THETA0, region)
    f = Objective([0.0], region, MomentConfig(), Regime.UPPER, sample_override=exact)
    assert f(THETA0.as_tuple()) == 0.0


def test_objective_median_decreases_with_n():
    medians = []
    for n in (1000, 10_000, 100_000):
        values = [objective(THETA0, sample(SamplerSpec(THETA0, n, s)), FitConfig()) for s in range(10)]
        medians.append(np.median(values))
    assert medians[0] > medians[1] > medians[2]


def test_objective_nonnegative_on_random_probes():
    rng = np.random.default_rng(3)
    x = sample(SamplerSpec(THETA0, 500, 2))
    for _ in range(200):
        regime = Regime.UPPER if rng.random() < 0.5 else Regime.LOWER
        lo, hi = regime.alpha_bounds
        theta = StableParams(rng.uniform(lo, hi), rng.uniform(-0.9, 0.9), rng.normal(0.0, 0.5), rng.uniform(0.3, 3.0))
        assert objective(theta, x, FitConfig()) >= 0.0


def test_objective_discriminates_alpha():
    worse = THETA0.replace(alpha=1.7)
    region = default_region(THETA0)
    wins = 0
    for seed in range(50):
        x = sample(SamplerSpec(THETA0, 20_000, seed))
        wins += objective(THETA0, x, FitConfig(), region) < objective(worse, x, FitConfig(), region)
    assert wins >= 48


def test_parameter_bounds():
    assert parameter_bounds(Regime.UPPER)[0] == Regime.UPPER.alpha_bounds
    assert parameter_bounds(Regime.LOWER)[3] == (0.0, None)


# -- start point and configuration --------------------------------------------


def test_default_init(data):
    init = default_init(data)
    assert init.regime is Regime.UPPER and init.beta == 0.0
    assert init.tau == pytest.approx(np.median(data))
    lower = default_init(data, Regime.LOWER)
    assert lower.regime is Regime.LOWER
    with pytest.raises(ValueError):
        default_init([])


def test_fit_config_validation():
    with pytest.raises(ValueError):
        FitConfig(max_restarts=-1)
    with pytest.raises(ValueError):
        FitConfig(restart_margin=0.5)
    with pytest.raises(ValueError):
        FitConfig(widen_factor=1.0)
    assert FitConfig(regime="lower").regime is Regime.LOWER


def test_start_outside_regime_rejected(data):
    with pytest.raises(ParameterError):
        fit(data, StableParams(0.7, 0.0, 0.0, 1.0), FitConfig(regime=Regime.UPPER))


# -- exact moments ------------------------------------------------------------


def _exact_fit(start):
    region = default_region(THETA0)
    exact = expected_moments(np.arange(1, 7), THETA0, region)
    cfg = FitConfig(region=region, regime=Regime.UPPER)
    return fit([0.0], start, cfg, sample_override=exact)


def test_exact_moments_from_the_true_point():
    res = _exact_fit(THETA0)
    assert res.theta_hat == THETA0 and res.objective == 0.0


def test_exact_moments_from_a_perturbed_start():
    # moment inversion should return theta* to optimizer tolerance
    res = _exact_fit(StableParams(1.52, 0.25, 0.02, 1.02))
    gap = np.abs(np.subtract(res.theta_hat.as_tuple(), THETA0.as_tuple()))
    assert gap.max() <= 1e-4


# -- fit behaviour ------------------------------------------------------------


def test_fit_deterministic(data):
    init = StableParams(1.4, 0.0, 0.0, 1.0)
    a, b = fit(data, init), fit(data, init)
    assert a.theta_hat == b.theta_hat and a.objective == b.objective


@pytest.mark.parametrize("lam", [0.1, 1.0, 10.0])
def test_weight_rescaling_invariance(data, lam):
    init = StableParams(1.4, 0.0, 0.0, 1.0)
    base = fit(data, init)
    cfg = FitConfig(moment_config=MomentConfig(weights=(lam,) * 6))
    scaled = fit(data, init, cfg)
    np.testing.assert_allclose(scaled.theta_hat.as_tuple(), base.theta_hat.as_tuple(), rtol=1e-9, atol=1e-9)


def test_location_scale_equivariance(data):
    shift, scale = 3.0, 2.0
    base = fit(data, StableParams(1.4, 0.0, float(np.median(data)), 1.0))
    y = shift + scale * data
    moved = fit(y, StableParams(1.4, 0.0, float(np.median(y)), scale))
    a, b = base.theta_hat, moved.theta_hat
    assert abs(b.alpha - a.alpha) <= 0.05
    assert abs(b.beta - a.beta) <= 0.05
    assert abs(b.tau - (shift + scale * a.tau)) <= 0.1 * scale * a.c_tilde
    assert b.c_tilde == pytest.approx(scale * a.c_tilde, rel=0.1)


def test_fit_result_fields(data):
    res = fit(data, StableParams(1.4, 0.0, 0.0, 1.0))
    assert res.status is Status.CONVERGED and res.regime_chosen is Regime.UPPER
    assert res.objective < 1e-2 and res.evaluations > 0
    assert res.region == res.restarts[-1].region


def _stub_minimizer(monkeypatch, taus):
    """Minimiser stand-in whose successive runs end at the given tau values."""
    ends = iter(taus)

    def fake(f, x0, bounds, settings):
        x = np.array(x0, dtype=float)
        x[2] = next(ends)
        return MinimizeResult(x=x, fun=1e-3, evaluations=1, converged=True)

    monkeypatch.setattr(gmm, "minimize", fake)


def test_region_widens_when_tau_hits_a_cut(monkeypatch, data):
    _stub_minimizer(monkeypatch, [-4.9, -9.5, 0.0])
    cfg = FitConfig(region=RegionConfig(5.0, -5.0), regime=Regime.UPPER)
    res = fit(data, StableParams(1.5, 0.0, 0.0, 1.0), cfg)
    regions = [r.region for r in res.restarts]
    # the left cut moves away from tau, the right one stays
    assert regions == [RegionConfig(5.0, -5.0), RegionConfig(5.0, -10.0), RegionConfig(5.0, -17.5)]
    assert res.status is Status.CONVERGED
    assert res.restarts[1].start == res.restarts[0].end


def test_restart_limit_status(monkeypatch, data):
    _stub_minimizer(monkeypatch, [4.9, 9.5, 17.0])
    cfg = FitConfig(region=RegionConfig(5.0, -5.0), regime=Regime.UPPER, max_restarts=2)
    res = fit(data, StableParams(1.5, 0.0, 0.0, 1.0), cfg)
    assert res.status is Status.RESTART_LIMIT and len(res.restarts) == 3


def test_optimizer_failure_status(monkeypatch, data):
    def fake(f, x0, bounds, settings):
        return MinimizeResult(x=np.array(x0, dtype=float), fun=PENALTY, evaluations=1, converged=False)

    monkeypatch.setattr(gmm, "minimize", fake)
    res = fit(data, StableParams(1.5, 0.0, 0.0, 1.0))
    assert res.status is Status.OPTIMIZER_FAILED


def test_restarts_never_worsen_the_objective(data):
    res = fit(data, StableParams(1.4, 0.0, 0.0, 1.0), FitConfig(region=RegionConfig(1.3, -4.5), restart_margin=0.3))
    assert len(res.restarts) >= 2
    for record in res.restarts:
        f = Objective(data, record.region, MomentConfig(), Regime.UPPER)
        assert record.objective <= f(record.start.as_tuple())


def test_reported_objective_is_v_at_theta_hat(data):
    res = fit(data, StableParams(1.4, 0.0, 0.0, 1.0))
    f = Objective(data, res.region, MomentConfig(), Regime.UPPER)
    assert res.objective == pytest.approx(f(res.theta_hat.as_tuple()), rel=1e-9)


def test_widen_helper():
    region = RegionConfig(2.0, -1.0)
    assert gmm._widen(region, True, False, 2.0) == RegionConfig(5.0, -1.0)
    assert gmm._widen(region, False, True, 2.0) == RegionConfig(2.0, -4.0)
    assert gmm._widen(region, True, True, 2.0) == RegionConfig(3.5, -2.5)
    assert gmm._near_cut(1.9, region, 0.05) == (True, False)


# -- regime selection -----------------------------------------------------------


def _failed(regime):
    p = StableParams(1.5 if regime is Regime.UPPER else 0.5, 0.0, 0.0, 1.0)
    record = RestartRecord(RegionConfig(1.0, -1.0), p, p, PENALTY)
    return FitResult(p, PENALTY, (record,), Status.OPTIMIZER_FAILED, regime)


def test_select_regime_raises_when_both_fail(monkeypatch, data):
    monkeypatch.setattr(gmm, "fit", lambda data, init, cfg: _failed(cfg.regime))
    with pytest.raises(OptimizerFailed):
        select_regime(data)


def test_select_regime_edge_rule(monkeypatch, data):
    def fake(data, init, cfg):
        p = StableParams(1.03, 0.0, 0.0, 1.0) if cfg.regime is Regime.UPPER else StableParams(0.6, 0.0, 0.0, 1.0)
        value = 1e-8 if cfg.regime is Regime.UPPER else 1e-4
        record = RestartRecord(RegionConfig(1.0, -1.0), p, p, value)
        return FitResult(p, value, (record,), Status.CONVERGED, cfg.regime)

    monkeypatch.setattr(gmm, "fit", fake)
    chosen, fits = select_regime(data)
    assert chosen is Regime.LOWER and set(fits) == {Regime.UPPER, Regime.LOWER}


def test_select_regime_upper_data(data):
    chosen, fits = select_regime(data)
    assert chosen is Regime.UPPER
    assert fits[Regime.UPPER].objective < PENALTY
    _, again = select_regime(data)
    for regime in fits:
        assert again[regime].objective == fits[regime].objective
