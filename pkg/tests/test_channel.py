import math

import numpy as np
import pytest

from blindmac.channel import (
    ChannelSpec,
    DegenerateChainError,
    sample_scenario,
    sample_trajectory,
    sense,
    sense_trajectory,
    stationary_free_prob,
    step_channel,
)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def test_step_absorbing(rng):
    assert step_channel(True, ChannelSpec(p11=1.0, p01=0.4), rng) is True
    assert step_channel(False, ChannelSpec(p11=0.4, p01=0.0), rng) is False


def test_step_frequency(rng):
    spec = ChannelSpec(p11=0.6, p01=0.3)
    freq = np.mean([step_channel(False, spec, rng) for _ in range(10_000)])
    assert abs(freq - 0.3) < 0.02


def test_sense_perfect(rng):
    spec = ChannelSpec(p_fa=0.0, p_md=0.0)
    assert sense(True, spec, rng) is True
    assert sense(False, spec, rng) is False


def test_sense_false_alarm_frequency(rng):
    spec = ChannelSpec(p_fa=0.1)
    busy = np.mean([not sense(True, spec, rng) for _ in range(10_000)])
    assert abs(busy - 0.1) < 0.01


@pytest.mark.parametrize(
    "p11, p01, expected",
    [(0.3, 0.3, 0.3), (0.8, 0.3, 0.6), (0.5, 0.5, 0.5)],
)
def test_stationary(p11, p01, expected):
    assert stationary_free_prob(ChannelSpec(p11=p11, p01=p01)) == pytest.approx(expected, abs=1e-15)


def test_degenerate_chain_rejected():
    with pytest.raises(DegenerateChainError):
        ChannelSpec(p11=1.0, p01=0.0)


@pytest.mark.parametrize("field", ["p11", "p01", "p_fa", "p_md"])
def test_spec_range(field):
    with pytest.raises(ValueError, match=field):
        ChannelSpec(**{field: 1.5})


def test_scenario_degenerate_interval(rng):
    specs = sample_scenario(5, 0.5, 0.5, [1.0] * 5, rng)
    assert all(s.p11 == 0.5 and s.p01 == 0.5 for s in specs)


def test_scenario_range_and_mean(rng):
    specs = sample_scenario(1000, 0.1, 0.9, [1.0] * 1000, rng)
    p11 = np.array([s.p11 for s in specs])
    p01 = np.array([s.p01 for s in specs])
    assert p11.min() >= 0.1 and p11.max() <= 0.9
    assert p01.min() >= 0.1 and p01.max() <= 0.9
    assert abs(p11.mean() - 0.5) < 0.02


def test_scenario_iid(rng):
    specs = sample_scenario(5, 0.1, 0.9, [1.0] * 5, rng, iid=True)
    assert all(s.is_iid for s in specs)


def test_scenario_bad_range(rng):
    with pytest.raises(ValueError):
        sample_scenario(2, 0.9, 0.1, [1.0, 1.0], rng)


@pytest.mark.parametrize("start", [True, False])
def test_trajectory_free_fraction_converges(start):
    spec = ChannelSpec(p11=0.8, p01=0.3)
    t = 100_000
    states = sample_trajectory(spec, t, np.random.default_rng(7), initial=start)
    pi = stationary_free_prob(spec)
    rho = spec.p11 - spec.p01
    # binomial error inflated by the chain's lag correlation
    sigma = math.sqrt(pi * (1 - pi) / t * (1 + rho) / (1 - rho))
    assert abs(states.mean() - pi) < 3 * sigma


def test_sense_trajectory_identity_without_errors():
    spec = ChannelSpec(p11=0.7, p01=0.2)
    rng = np.random.default_rng(3)
    states = sample_trajectory(spec, 1000, rng)
    np.testing.assert_array_equal(sense_trajectory(states, spec, rng), states)


def test_iid_chain_uncorrelated():
    spec = ChannelSpec(p11=0.4, p01=0.4)
    states = sample_trajectory(spec, 100_000, np.random.default_rng(11)).astype(float)
    corr = np.corrcoef(states[:-1], states[1:])[0, 1]
    assert abs(corr) < 0.03
