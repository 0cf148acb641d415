"""Channel-selection rule and analytic throughput benchmarks."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .channel import ChannelSpec, stationary_free_prob

MAX_BOUND_CHANNELS = 20


def decide_weighted_argmax(weights: Sequence[float], bandwidths: Sequence[float]) -> int:
    """Index maximising ``weights[i] * bandwidths[i]``; lowest index wins ties.

    Transmitter and receiver must break ties identically, so the rule is
    deterministic. A zero bandwidth scores 0 even against an infinite weight.
    """
    if len(weights) == 0:
        raise ValueError("no channels to choose from")
    if len(weights) != len(bandwidths):
        raise ValueError("weights and bandwidths differ in length")
    best = 0
    best_val = -np.inf
    for i, (w, b) in enumerate(zip(weights, bandwidths)):
        val = w * b if b else 0.0
        if val > best_val:
            best, best_val = i, val
    return best


def upper_bound_throughput(specs: Sequence[ChannelSpec]) -> float:
    """Expected per-slot throughput with the previous slot's joint state known.

    Sums, over all 2^N joint states weighted by their stationary probability,
    the best one-step expected reward ``max_i P(S_i -> free) B_i``.
    """
    n = len(specs)
    if n == 0:
        raise ValueError("no channels")
    if n > MAX_BOUND_CHANNELS:
        raise ValueError(f"2^N enumeration limited to N <= {MAX_BOUND_CHANNELS}, got {n}")
    pi = np.array([stationary_free_prob(s) for s in specs])
    p11 = np.array([s.p11 for s in specs])
    p01 = np.array([s.p01 for s in specs])
    bw = np.array([s.bandwidth for s in specs])
    free = (np.arange(2**n)[:, None] >> np.arange(n)) & 1 == 1
    weight = np.where(free, pi, 1.0 - pi).prod(axis=1)
    best = (np.where(free, p11, p01) * bw).max(axis=1)
    return float(weight @ best)


def offline_best_throughput(specs: Sequence[ChannelSpec]) -> tuple[int, float]:
    """Always use the channel with the largest stationary throughput."""
    if not specs:
        raise ValueError("no channels")
    scores = [stationary_free_prob(s) * s.bandwidth for s in specs]
    best = decide_weighted_argmax(scores, [1.0] * len(scores))
    return best, scores[best]


def iid_genie_throughput(specs: Sequence[ChannelSpec]) -> float:
    """max_i P(free) B_i, the known-statistics optimum for i.i.d. channels."""
    return max(stationary_free_prob(s) * s.bandwidth for s in specs)
