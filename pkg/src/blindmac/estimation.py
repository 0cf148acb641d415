"""Online learning of channel statistics from sensing results.

Counting estimator for the transition probabilities, the i.i.d. free
probability estimate and the UCB statistic. All records are immutable
``NamedTuple`` values; updates return a new record.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Optional

DEFAULT_ESTIMATE = 0.5


class TransitionCounts(NamedTuple):
    n0: int = 0
    n1: int = 0
    n01: int = 0
    n11: int = 0
    # sensed state of the previous slot, only if that slot sensed this channel
    last_sensed: Optional[bool] = None


class TransitionEstimate(NamedTuple):
    p01_hat: float
    p11_hat: float


class UcbStats(NamedTuple):
    x: int = 0  # successful slots on the channel
    y: int = 0  # slots the channel was chosen


def record_sensing(counts: TransitionCounts, sensed_now: bool) -> TransitionCounts:
    n0, n1, n01, n11, last = counts
    if sensed_now:
        n1 += 1
        if last is True:
            n11 += 1
        elif last is False:
            n01 += 1
    else:
        n0 += 1
    return TransitionCounts(n0, n1, n01, n11, sensed_now)


def forget_last(counts: TransitionCounts) -> TransitionCounts:
    """Break the consecutive-sensing chain (channel skipped a slot)."""
    if counts.last_sensed is None:
        return counts
    return counts._replace(last_sensed=None)


def estimate(counts: TransitionCounts, default: float = DEFAULT_ESTIMATE) -> TransitionEstimate:
    p01 = counts.n01 / counts.n0 if counts.n0 else default
    p11 = counts.n11 / counts.n1 if counts.n1 else default
    return TransitionEstimate(p01, p11)


def ucb_index(stats: UcbStats, j: int) -> float:
    """x/y + sqrt(2 ln j / y); ``inf`` for a channel never chosen."""
    if j < 1:
        raise ValueError(f"slot index must be >= 1, got {j}")
    if stats.y == 0:
        return math.inf
    return stats.x / stats.y + math.sqrt(2.0 * math.log(j) / stats.y)


def estimate_iid_free_prob(n1: int, j: int) -> float:
    if j < 1:
        raise ValueError(f"slot index must be >= 1, got {j}")
    return min(1.0, max(0.0, n1 / j))
