import math

import numpy as np
import pytest
from scipy import stats

from stablegmm.core import StableParams
from stablegmm.sampler import SamplerSpec, cms_parameters, sample, standard_variates


def _scipy_law(params):
    k = params.beta * math.tan(math.pi * params.alpha / 2.0)
    scale = params.c_tilde * math.hypot(1.0, k) ** (-1.0 / params.alpha)
    return stats.levy_stable(params.alpha, params.beta, loc=params.tau, scale=scale)


def test_same_seed_same_draws():
    spec = SamplerSpec(StableParams(1.5, 0.3, 0.0, 1.0), 1000, 42)
    np.testing.assert_array_equal(sample(spec), sample(spec))
    other = sample(SamplerSpec(spec.params, 1000, 43))
    assert not np.array_equal(sample(spec), other)


def test_draws_have_requested_length_and_are_finite():
    p = StableParams(0.8, -0.4, 1.0, 2.0)
    short = sample(SamplerSpec(p, 10, 7))
    assert short.shape == (10,) and np.all(np.isfinite(short))


@pytest.mark.parametrize("n", [0, -3, 2.5, True])
def test_invalid_n(n):
    with pytest.raises(ValueError):
        SamplerSpec(StableParams(1.5, 0.0, 0.0, 1.0), n, 0)


@pytest.mark.parametrize("seed", [-1, 2**64, 1.5])
def test_invalid_seed(seed):
    with pytest.raises(ValueError):
        SamplerSpec(StableParams(1.5, 0.0, 0.0, 1.0), 10, seed)


def test_cms_parameters():
    assert cms_parameters(1.5, 0.0) == (0.0, 1.0)
    B, S = cms_parameters(0.5, 1.0)
    assert B == pytest.approx(math.pi / 2.0, rel=1e-15) and S == 1.0


def test_location_scale_exact():
    base = StableParams(1.3, 0.2, 0.0, 1.0)
    moved = base.replace(tau=-2.5, c_tilde=3.0)
    x = sample(SamplerSpec(base, 500, 3))
    y = sample(SamplerSpec(moved, 500, 3))
    np.testing.assert_allclose(y, -2.5 + 3.0 * x, rtol=1e-15, atol=1e-15)


def test_centre_uniform_gives_zero_for_symmetric_law():
    # U = 1/2 gives V = 0, so a symmetric law yields exactly zero
    u = np.array([[0.5], [0.3]])
    assert standard_variates(1.5, 0.0, u)[0] == 0.0


@pytest.mark.parametrize(
    "params",
    [StableParams(1.5, 0.3, 0.0, 1.0), StableParams(0.7, -0.2, 1.0, 0.5), StableParams(1.9, 0.0, 0.0, 2.0)],
)
def test_matches_scipy_distribution(params):
    x = sample(SamplerSpec(params, 2000, 17))
    result = stats.kstest(x, _scipy_law(params).cdf)
    assert result.pvalue > 1e-3


def test_median_near_tau_when_symmetric():
    x = sample(SamplerSpec(StableParams(1.2, 0.0, 4.0, 1.0), 100_000, 9))
    assert abs(np.median(x) - 4.0) < 0.02
