import math

import numpy as np
import pytest

from stablenv.environment import SimConfig
from stablenv.fluctuation import bias_gamma
from stablenv.montecarlo import (
    MIN_N_PATHS,
    Comparison,
    Estimate,
    InsufficientPool,
    McConfig,
    analytic_b_cdf,
    default_ks_grid,
    empirical_cdf,
    estimate_b1_law,
    estimate_slope_stats,
    proportion,
    renewal_overshoot_check,
    run_all,
    sample_mean,
    simulate_paths,
)
from stablenv.scale import ScaleContext

KS_GRID = tuple(np.linspace(-3.0, 3.0, 13))


def small_config(a: float = 2.0, **kwargs) -> McConfig:
    return McConfig(SimConfig(a, h=0.01, seed=31), n_paths=MIN_N_PATHS, ks_grid=KS_GRID, **kwargs)


@pytest.fixture(scope="module")
def sample():
    return simulate_paths(small_config())


def test_config_validation():
    with pytest.raises(ValueError):
        McConfig(SimConfig(1.5), n_paths=10)
    with pytest.raises(ValueError):
        McConfig(SimConfig(1.5), threads=0)
    with pytest.raises(ValueError):
        McConfig(SimConfig(1.5), transform_us=(-1.0,))
    assert McConfig(SimConfig(1.5), spectrally_positive=True).stop_rule.records_per_side == 4
    assert McConfig(SimConfig(1.5)).stop_rule.records_per_side == 3


def test_simulation_is_deterministic(sample):
    again = simulate_paths(small_config())
    assert np.array_equal(sample.b_values, again.b_values)
    assert np.array_equal(sample.up_lengths, again.up_lengths)


def test_partition_does_not_change_results(sample):
    split = simulate_paths(small_config(threads=2))
    assert np.array_equal(sample.b_values, split.b_values)
    assert np.array_equal(sample.down_lengths, split.down_lengths)
    assert split.partition == {"workers": 2, "block_size": 50, "blocks": 2}


def test_sample_contents(sample):
    assert len(sample.b_values) == MIN_N_PATHS
    for lengths, heights in ((sample.up_lengths, sample.up_heights), (sample.down_lengths, sample.down_heights)):
        assert len(lengths) == len(heights) > 0
        assert np.all(lengths > 0)
        assert np.all(heights >= 1.0)


def test_b1_report(sample):
    report = estimate_b1_law(small_config(), sample)
    negative = report.comparisons["b1_negative_fraction"]
    assert negative.analytic == pytest.approx(0.5)
    assert 0.3 < negative.empirical < 0.7
    assert 0.0 <= report.ks_statistic <= 1.0
    assert report.flags == {"ks_grid_points": len(KS_GRID)}


def test_slope_report(sample):
    report = estimate_slope_stats(small_config(), sample)
    assert set(report.comparisons) == {
        f"{name}_{statistic}"
        for name in ("up", "down")
        for statistic in ("length_mean", "height_mean", "length_lt_u0.5", "length_lt_u1", "length_lt_u2")
    }
    assert report.comparisons["up_height_mean"].analytic == pytest.approx(2.0)


def test_renewal(sample):
    beyond = float(sample.down_lengths.max())
    report = renewal_overshoot_check(small_config(), (0.0, beyond), sample)
    far = report.comparisons[f"renewal_odd_overshoot_x{beyond:g}"]
    assert far.analytic == pytest.approx(0.0, abs=1e-12)
    assert far.empirical == 0.0
    assert 0.0 < report.comparisons["renewal_odd_fraction_vs_bias"].empirical < 1.0
    assert report.flags["renewal_replicates"] == MIN_N_PATHS


def test_report_schema():
    report, sample = run_all(small_config(a=1.5), renewal_x_values=(0.5,))
    document = report.to_dict()
    assert set(document) == {"config", "estimates", "comparisons", "ks", "retries", "partition", "flags"}
    assert document["config"]["a"] == 1.5
    assert "renewal_odd_overshoot_x0.5" in document["comparisons"]
    assert document["retries"] == sample.cap_retry_count


def test_spectrally_positive_mirrors_bias():
    cfg = small_config(a=1.5, spectrally_positive=True)
    report = estimate_b1_law(cfg)
    assert report.comparisons["b1_negative_fraction"].analytic == pytest.approx(1.0 - math.pi / 4.0)


def test_proportion():
    estimate = proportion(np.ones(100, dtype=bool))
    assert estimate.value == 1.0
    assert estimate.se > 0
    assert proportion(np.array([True, False, True, False])).value == 0.5


def test_sample_mean():
    estimate = sample_mean(np.array([1.0, 2.0, 3.0]))
    assert estimate.value == 2.0
    assert estimate.se == pytest.approx(1.0 / math.sqrt(3.0))
    with pytest.raises(InsufficientPool):
        sample_mean(np.array([1.0]))


def test_empirical_cdf():
    values = empirical_cdf(np.array([3.0, 1.0, 2.0, 2.0]), [0.0, 1.0, 2.0, 5.0])
    assert np.allclose(values, [0.0, 0.25, 0.75, 1.0])


def test_comparison():
    comparison = Comparison.build(0.5, Estimate(0.53, 0.01, 100))
    assert comparison.z == pytest.approx(3.0)
    assert comparison.within(3.5)
    assert not comparison.within(2.0)
    assert comparison.within(2.0, allowance=0.02)
    assert Comparison.build(0.0, Estimate(0.0, 0.0, 10)).z == 0.0


@pytest.mark.parametrize("a", (1.3, 1.5, 1.7, 2.0))
def test_analytic_cdf_on_default_grid(a):
    ctx = ScaleContext(a)
    grid = default_ks_grid(ctx)
    values = analytic_b_cdf(ctx, grid, False)
    assert np.all((values >= 0.0) & (values <= 1.0))
    assert np.all(np.diff(values) >= -1e-4)
    assert values[0] < bias_gamma(a) < values[-1]
    mirrored = analytic_b_cdf(ctx, grid, True)
    assert np.all((mirrored >= 0.0) & (mirrored <= 1.0))


def test_stable_b1_law_runs_on_default_grid():
    cfg = McConfig(SimConfig(1.5, h=0.01, seed=31), n_paths=MIN_N_PATHS)
    report = estimate_b1_law(cfg)
    assert 0.0 <= report.ks_statistic <= 1.0
    assert report.comparisons["b1_negative_fraction"].analytic == pytest.approx(math.pi / 4.0)


def test_standard_error_shrinks_with_paths(sample):
    doubled = simulate_paths(McConfig(SimConfig(2.0, h=0.01, seed=31), n_paths=2 * MIN_N_PATHS, ks_grid=KS_GRID))
    se_small = proportion(sample.b_values < 0).se
    se_large = proportion(doubled.b_values < 0).se
    assert se_large / se_small == pytest.approx(1.0 / math.sqrt(2.0), rel=0.15)
