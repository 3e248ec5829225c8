import math

import numpy as np
import pytest

from stablegmm.core import (
    ALPHA_GAP,
    BETA_MAX,
    ParameterError,
    Regime,
    RegionConfig,
    StableParams,
    c_from_c_tilde,
    c_tilde_from_c,
    series_skew,
    standardize,
    unstandardize,
)


def test_regime_classification():
    assert StableParams(1.5, 0.0, 0.0, 1.0).regime is Regime.UPPER
    assert StableParams(0.7, 0.0, 0.0, 1.0).regime is Regime.LOWER


@pytest.mark.parametrize(
    "values, field",
    [
        ((1.0, 0.0, 0.0, 1.0), "alpha"),
        ((2.0, 0.0, 0.0, 1.0), "alpha"),
        ((0.0, 0.0, 0.0, 1.0), "alpha"),
        ((1.0 + ALPHA_GAP / 2, 0.0, 0.0, 1.0), "alpha"),
        ((1.5, 1.0, 0.0, 1.0), "beta"),
        ((1.5, -1.0, 0.0, 1.0), "beta"),
        ((1.5, 0.0, math.nan, 1.0), "tau"),
        ((1.5, 0.0, 0.0, 0.0), "c_tilde"),
        ((1.5, 0.0, 0.0, -2.0), "c_tilde"),
    ],
)
def test_invalid_parameters_name_the_field(values, field):
    with pytest.raises(ParameterError) as info:
        StableParams(*values)
    assert info.value.field == field


def test_alpha_one_message():
    with pytest.raises(ParameterError, match="alpha=1 unsupported"):
        StableParams(1.0, 0.0, 0.0, 1.0)


def test_guard_band_edges_are_admissible():
    lo, hi = Regime.UPPER.alpha_bounds
    StableParams(lo, BETA_MAX, 0.0, 1.0)
    StableParams(hi, -BETA_MAX, 0.0, 1.0)
    lo, hi = Regime.LOWER.alpha_bounds
    StableParams(lo, 0.0, 0.0, 1.0)
    StableParams(hi, 0.0, 0.0, 1.0)


def test_boolean_is_not_a_number():
    with pytest.raises(ParameterError):
        StableParams(True, 0.0, 0.0, 1.0)


def test_replace_and_reflected():
    p = StableParams(1.5, 0.3, 2.0, 1.0)
    assert p.replace(beta=-0.1).as_tuple() == (1.5, -0.1, 2.0, 1.0)
    assert p.reflected().as_tuple() == (1.5, -0.3, -2.0, 1.0)


@pytest.mark.parametrize("alpha", [0.3, 0.7, 1.3, 1.8])
def test_series_skew_endpoints_and_symmetry(alpha):
    assert series_skew(alpha, 0.0) == 0.0
    assert series_skew(alpha, 1.0) == pytest.approx(1.0, abs=1e-12)
    assert series_skew(alpha, -1.0) == pytest.approx(-1.0, abs=1e-12)
    betas = np.linspace(-0.99, 0.99, 41)
    values = np.array([series_skew(alpha, b) for b in betas])
    assert np.all(np.diff(values) > 0.0)
    mirrored = np.array([series_skew(alpha, -b) for b in betas])
    np.testing.assert_array_equal(values, -mirrored)


def test_scale_map_symmetric_case():
    # with beta = 0 the characteristic function is exp(-|c_tilde z|^alpha)
    p = StableParams(1.5, 0.0, 0.0, 2.0)
    assert c_from_c_tilde(p) == pytest.approx(2.0**1.5, rel=1e-15)


@pytest.mark.parametrize("alpha, beta", [(1.5, 0.3), (1.9, -0.8), (0.6, 0.5), (0.2, -0.9)])
def test_scale_map_round_trip(alpha, beta):
    p = StableParams(alpha, beta, 0.0, 1.7)
    assert c_tilde_from_c(alpha, beta, c_from_c_tilde(p)) == pytest.approx(1.7, rel=1e-13)


def test_scale_map_rejects_nonpositive_c():
    with pytest.raises(ParameterError):
        c_tilde_from_c(1.5, 0.0, 0.0)


def test_standardize_round_trip():
    p = StableParams(1.2, 0.1, -3.0, 0.25)
    y = np.array([-4.0, -3.0, 0.5])
    np.testing.assert_allclose(unstandardize(standardize(y, p), p), y, rtol=0, atol=1e-15)
    assert standardize(-3.0, p) == 0.0


def test_region_validation_and_ratios():
    with pytest.raises(ParameterError):
        RegionConfig(1.0, 1.0)
    with pytest.raises(ParameterError):
        RegionConfig(math.inf, 0.0)
    region = RegionConfig(3.0, -1.0)
    p = StableParams(1.5, 0.0, 1.0, 0.5)
    assert region.contains(1.0) and not region.contains(3.0)
    assert region.ratios(p) == (4.0, 4.0)
    with pytest.raises(ParameterError) as info:
        region.ratios(p.replace(tau=5.0))
    assert info.value.field == "tau"


def test_region_around():
    p = StableParams(1.5, 0.0, 1.0, 2.0)
    region = RegionConfig.around(p, 3.0, 1.0)
    assert (region.r1, region.r2) == (7.0, -1.0)
    assert region.ratios(p) == (3.0, 1.0)
