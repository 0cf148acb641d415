import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blindmac.channel import ChannelSpec, sample_trajectory
from blindmac.estimation import (
    TransitionCounts,
    UcbStats,
    estimate,
    estimate_iid_free_prob,
    forget_last,
    record_sensing,
    ucb_index,
)


def count(seq):
    c = TransitionCounts()
    for s in seq:
        c = record_sensing(c, s) if s is not None else forget_last(c)
    return c


def test_hand_count():
    c = count([True, True, False, True])
    assert (c.n1, c.n0, c.n11, c.n01) == (3, 1, 1, 1)


def test_single_observation():
    c = count([True])
    assert (c.n1, c.n11, c.n01) == (1, 0, 0)


def test_gap_breaks_transition():
    c = count([True, None, True])
    assert c.n11 == 0 and c.n1 == 2


def test_estimate_from_counts():
    assert estimate(TransitionCounts(n0=1, n1=2, n01=1, n11=1)) == (1.0, 0.5)


def test_estimate_defaults():
    assert estimate(TransitionCounts()) == (0.5, 0.5)
    assert estimate(TransitionCounts(n1=4, n11=3)).p01_hat == 0.5


def test_estimator_consistency():
    spec = ChannelSpec(p11=0.8, p01=0.3)
    hits = 0
    for seed in range(100):
        c = TransitionCounts()
        for s in sample_trajectory(spec, 10_000, np.random.default_rng(seed)).tolist():
            c = record_sensing(c, s)
        e = estimate(c)
        hits += abs(e.p11_hat - 0.8) < 0.02 and abs(e.p01_hat - 0.3) < 0.02
    assert hits >= 95


@given(st.lists(st.one_of(st.booleans(), st.none()), max_size=60))
def test_count_bookkeeping(seq):
    c = count(seq)
    sensed = [s for s in seq if s is not None]
    assert c.n0 + c.n1 == len(sensed)
    assert c.n01 <= c.n0 and c.n11 <= c.n1
    pairs = list(zip(seq, seq[1:]))
    assert c.n11 == sum(a is True and b is True for a, b in pairs)
    assert c.n01 == sum(a is False and b is True for a, b in pairs)


def test_ucb_value():
    assert ucb_index(UcbStats(3, 5), 10) == pytest.approx(0.6 + math.sqrt(2 * math.log(10) / 5), abs=1e-15)
    assert round(ucb_index(UcbStats(3, 5), 10), 4) == 1.5597


def test_ucb_unexplored():
    assert ucb_index(UcbStats(0, 0), 7) == math.inf


def test_ucb_log_vanishes():
    assert ucb_index(UcbStats(4, 4), 1) == 1.0


@given(st.integers(1, 50), st.integers(1, 200), st.integers(2, 10**6))
def test_ucb_monotone(y, scale, j):
    # same x/y ratio (1/2), more pulls -> smaller bonus
    assert ucb_index(UcbStats(y, 2 * y), j) > ucb_index(UcbStats(y * (scale + 1), 2 * y * (scale + 1)), j)
    assert ucb_index(UcbStats(y, 2 * y), j + 1) > ucb_index(UcbStats(y, 2 * y), j)


def test_ucb_rejects_slot_zero():
    with pytest.raises(ValueError):
        ucb_index(UcbStats(1, 1), 0)


@pytest.mark.parametrize("n1, j, expected", [(6, 10, 0.6), (0, 5, 0.0), (7, 7, 1.0)])
def test_iid_free_prob(n1, j, expected):
    assert estimate_iid_free_prob(n1, j) == expected


def test_large_counts_do_not_overflow():
    c = TransitionCounts(n0=10**12, n1=10**12, n01=3 * 10**11, n11=8 * 10**11, last_sensed=True)
    c = record_sensing(c, True)
    assert c.n11 == 8 * 10**11 + 1
    assert estimate(c).p01_hat == 0.3
