import math

import numpy as np
import pytest

from stablenv.environment import (
    CapExceeded,
    EnvironmentPath,
    SimConfig,
    StopRule,
    generate_path,
    generate_two_sided,
    reflect,
    sample_increment,
    sample_increments,
    stable_scale,
)
from stablenv.extrema import find_x_extrema
from stablenv.special import NumericalDomainError
from stablenv.utilities import substream

DRAWS = 100_000


def test_stable_scale():
    assert stable_scale(2.0) == 1.0
    assert stable_scale(1.5) == pytest.approx(math.sqrt(0.5) ** (1.0 / 1.5), rel=1e-14)
    with pytest.raises(NumericalDomainError):
        stable_scale(1.0)


def test_brownian_increments():
    increments = sample_increments(2.0, 1.0, DRAWS, substream(11, 0))
    standard_error = math.sqrt(8.0 / DRAWS)
    assert increments.var() == pytest.approx(2.0, abs=4 * standard_error)
    assert abs(increments.mean()) < 4 * math.sqrt(2.0 / DRAWS)


def test_single_increment_follows_the_vector_draw():
    for a in (1.5, 2.0):
        single = sample_increment(a, 0.01, substream(13, 0))
        assert single == sample_increments(a, 0.01, 1, substream(13, 0))[0]
    rng = substream(13, 1)
    draws = [sample_increment(1.5, 1.0, rng) for _ in range(2000)]
    assert np.mean(np.array(draws) >= 0) == pytest.approx(1.0 / 1.5, abs=0.05)
    with pytest.raises(NumericalDomainError):
        sample_increment(1.5, 0.0, rng)


def test_increment_scaling():
    increments = sample_increments(2.0, 0.01, DRAWS, substream(12, 0))
    assert increments.var() == pytest.approx(0.02, rel=0.05)


@pytest.mark.parametrize("a", (1.3, 1.5, 1.8))
def test_exponential_moment(a):
    lam = 0.25
    moments = np.exp(lam * sample_increments(a, 1.0, DRAWS, substream(13, int(10 * a))))
    standard_error = moments.std() / math.sqrt(DRAWS)
    assert moments.mean() == pytest.approx(math.exp(lam ** a), abs=4 * standard_error)


@pytest.mark.parametrize("a", (1.5, 2.0))
def test_positivity(a):
    increments = sample_increments(a, 1.0, DRAWS, substream(14, int(10 * a)))
    assert np.mean(increments >= 0) == pytest.approx(1.0 / a, abs=0.01)


def test_spectrally_negative():
    increments = sample_increments(1.5, 1.0, DRAWS, substream(15, 0))
    # heavy lower tail, light upper tail
    assert increments.min() < -20.0
    assert increments.max() < 10.0


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(1.0)
    with pytest.raises(ValueError):
        SimConfig(1.5, h=0.0)
    with pytest.raises(ValueError):
        StopRule(-1.0)
    with pytest.raises(ValueError):
        StopRule(1.0, 0)


def test_from_values():
    path = EnvironmentPath.from_values(0.5, [3.0, 1.0, 2.0, 5.0], 1)
    assert path.origin_index == 1
    assert len(path) == 4
    assert np.array_equal(path.values(), [2.0, 0.0, 1.0, 4.0])
    assert np.array_equal(path.positions(), [-0.5, 0.0, 0.5, 1.0])
    with pytest.raises(ValueError):
        EnvironmentPath.from_values(1.0, [0.0, 1.0], 2)


def test_generation_is_deterministic():
    cfg = SimConfig(1.5, h=0.01, seed=7)
    first = generate_two_sided(cfg, path_index=3)
    second = generate_two_sided(cfg, path_index=3)
    other = generate_two_sided(cfg, path_index=4)
    assert np.array_equal(first.values(), second.values())
    assert not np.array_equal(first.values()[:10], other.values()[:10])


def test_degenerate_stop_rule():
    path = generate_two_sided(SimConfig(1.5, h=0.01, seed=1), StopRule(0.0, 1, 5))
    assert len(path.left_values) == 5
    assert len(path.right_values) == 5
    assert path.values()[path.origin_index] == 0.0


@pytest.mark.parametrize("a", (1.5, 2.0))
def test_records_on_both_sides(a):
    cfg = SimConfig(a, h=0.01, seed=5)
    for index in range(5):
        path = generate_two_sided(cfg, StopRule(1.0, 2), index)
        records = find_x_extrema(path, 1.0)
        assert sum(1 for record in records if record.position <= 0) >= 2
        assert sum(1 for record in records if record.position > 0) >= 2


def test_reflect():
    path = generate_two_sided(SimConfig(1.5, h=0.01, seed=2))
    mirrored = reflect(path)
    assert np.array_equal(mirrored.values(), path.values()[::-1])
    assert np.array_equal(reflect(mirrored).values(), path.values())


def test_cap():
    cfg = SimConfig(2.0, h=1e-3, seed=3, max_side_length=10)
    with pytest.raises(CapExceeded):
        generate_two_sided(cfg)
    with pytest.warns(UserWarning):
        with pytest.raises(CapExceeded):
            generate_path(cfg, max_attempts=2)


def test_generate_path_reports_retries():
    path, retries = generate_path(SimConfig(1.5, h=0.01, seed=9), StopRule(), 0)
    assert retries == 0
    assert len(path) > 2
