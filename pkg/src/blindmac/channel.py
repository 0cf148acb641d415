"""Primary network: independent two-state (free/busy) Markov channels and an
imperfect binary sensing front-end.

States are booleans, ``True`` meaning free. Random draws always come from an
explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


class DegenerateChainError(ValueError):
    """Both states absorbing (p11=1, p01=0): no unique stationary law."""


def _check_prob(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class ChannelSpec:
    """One primary channel.

    Only the free-column of the transition matrix is stored; p00 = 1 - p01 and
    p10 = 1 - p11 are implied.
    """

    bandwidth: float = 1.0
    p11: float = 0.5
    p01: float = 0.5
    p_fa: float = 0.0
    p_md: float = 0.0

    def __post_init__(self):
        if self.bandwidth < 0:
            raise ValueError(f"bandwidth must be nonnegative, got {self.bandwidth!r}")
        for name in ("p11", "p01", "p_fa", "p_md"):
            _check_prob(name, getattr(self, name))
        if self.p11 == 1.0 and self.p01 == 0.0:
            raise DegenerateChainError("p11=1 and p01=0: both states absorbing")

    @property
    def p00(self) -> float:
        return 1.0 - self.p01

    @property
    def p10(self) -> float:
        return 1.0 - self.p11

    @property
    def is_iid(self) -> bool:
        return self.p11 == self.p01


@dataclass
class NetworkState:
    states: list[bool]
    slot: int = 0


def step_channel(state: bool, spec: ChannelSpec, rng: np.random.Generator) -> bool:
    p_free = spec.p11 if state else spec.p01
    return bool(rng.random() < p_free)


def sensed_state(state: bool, spec: ChannelSpec, u: float) -> bool:
    """Sensing result for a given uniform draw ``u``."""
    if state:
        return u >= spec.p_fa
    return u < spec.p_md


def sense(state: bool, spec: ChannelSpec, rng: np.random.Generator) -> bool:
    return sensed_state(state, spec, rng.random())


def stationary_free_prob(spec: ChannelSpec) -> float:
    return stationary_free(spec.p11, spec.p01)


def stationary_free(p11: float, p01: float) -> float:
    denom = 1.0 - p11 + p01
    if denom == 0.0:
        raise DegenerateChainError("p11=1 and p01=0: both states absorbing")
    return p01 / denom


def sample_scenario(
    n: int,
    low: float,
    high: float,
    bandwidths: Sequence[float],
    rng: np.random.Generator,
    p_fa: float = 0.0,
    p_md: float = 0.0,
    iid: bool = False,
) -> list[ChannelSpec]:
    """Draw ``n`` channels with p11, p01 uniform in [low, high].

    With ``iid=True`` a single draw is used for both (p11 = p01).
    """
    if not 0.0 <= low <= high <= 1.0:
        raise ValueError(f"need 0 <= low <= high <= 1, got [{low}, {high}]")
    if len(bandwidths) != n:
        raise ValueError(f"expected {n} bandwidths, got {len(bandwidths)}")
    specs = []
    for i in range(n):
        p11 = float(rng.uniform(low, high))
        p01 = p11 if iid else float(rng.uniform(low, high))
        specs.append(ChannelSpec(float(bandwidths[i]), p11, p01, p_fa, p_md))
    return specs


def initial_state(spec: ChannelSpec, rng: np.random.Generator) -> bool:
    """Slot-1 state drawn from the stationary distribution."""
    return bool(rng.random() < stationary_free_prob(spec))


def sample_trajectory(
    spec: ChannelSpec,
    t: int,
    rng: np.random.Generator,
    initial: bool | None = None,
) -> np.ndarray:
    """True states for slots 1..t as a boolean array of length ``t``."""
    state = initial_state(spec, rng) if initial is None else bool(initial)
    draws = rng.random(t).tolist()
    out = np.empty(t, dtype=bool)
    p11, p01 = spec.p11, spec.p01
    for k in range(t):
        if k > 0:
            state = draws[k] < (p11 if state else p01)
        out[k] = state
    return out


def sense_trajectory(states: np.ndarray, spec: ChannelSpec, rng: np.random.Generator) -> np.ndarray:
    """Vectorised ``sense`` over a whole trajectory."""
    u = rng.random(states.shape[0])
    return np.where(states, u >= spec.p_fa, u < spec.p_md)
