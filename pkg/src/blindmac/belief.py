"""Belief-vector updates for the secondary pair.

A belief vector holds, per channel, the probability that the channel is free
at the start of the current slot. Vectors are plain lists of floats; every
update returns a new list. ``estimates`` arguments are sequences of
``(p01, p11)`` pairs (``TransitionEstimate``) and ``specs`` supply each
channel's ``p_fa``/``p_md``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

BeliefVector = list  # list[float], one entry per channel


class PosteriorFactors(NamedTuple):
    a: float  # Pr(free | sensed free)
    c: float  # Pr(free | sensed busy)
    d: float  # Pr(free | no ACK on the accessed channel)


@dataclass(frozen=True)
class SlotObservation:
    accessed: int
    ack: bool
    sensed: Optional[Sequence[bool]] = None


def _ratio(num: float, den: float, omega: float) -> float:
    # 0/0 only where the observation is impossible; the prior is then kept,
    # which gives 0 at omega=0 and 1 at omega=1.
    if den == 0.0:
        return omega
    return num / den


def posterior_factors(omega: float, p_fa: float, p_md: float) -> PosteriorFactors:
    free = omega
    busy = 1.0 - omega
    a = _ratio((1.0 - p_fa) * free, (1.0 - p_fa) * free + p_md * busy, omega)
    c = _ratio(p_fa * free, p_fa * free + (1.0 - p_md) * busy, omega)
    d = _ratio(p_fa * free, p_fa * free + busy, omega)
    return PosteriorFactors(a, c, d)


def propagate_unobserved(omega: float, p11: float, p01: float) -> float:
    return omega * p11 + (1.0 - omega) * p01


def _check_dims(belief, estimates, specs) -> int:
    n = len(belief)
    if len(estimates) != n or len(specs) != n:
        raise ValueError(
            f"dimension mismatch: belief {n}, estimates {len(estimates)}, specs {len(specs)}"
        )
    return n


def update_shared_full(shared, obs: SlotObservation, shared_estimates, specs) -> BeliefVector:
    """Common belief for the next slot when the transmitter senses every channel.

    On ACK the packet carried the sensing vector, so channels other than the
    accessed one are refined with it; without ACK only the accessed channel's
    "no success" is common knowledge.
    """
    n = _check_dims(shared, shared_estimates, specs)
    star = obs.accessed
    if not 0 <= star < n:
        raise ValueError(f"accessed channel {star} out of range for {n} channels")
    if obs.ack and (obs.sensed is None or len(obs.sensed) != n):
        raise ValueError("an ACKed slot needs the full piggybacked sensing vector")
    out = []
    for i in range(n):
        p01, p11 = shared_estimates[i]
        w = shared[i]
        if obs.ack:
            if i == star:
                out.append(p11)
                continue
            spec = specs[i]
            f = posterior_factors(w, spec.p_fa, spec.p_md)
            post = f.a if obs.sensed[i] else f.c
        elif i == star:
            spec = specs[i]
            post = posterior_factors(w, spec.p_fa, spec.p_md).d
        else:
            post = w
        out.append(post * p11 + (1.0 - post) * p01)
    return out


def update_private_full(private, obs: SlotObservation, local_estimates, specs, shared_next) -> BeliefVector:
    """Transmitter-only belief using its own sensing vector and estimates."""
    n = _check_dims(private, local_estimates, specs)
    if len(shared_next) != n:
        raise ValueError("dimension mismatch: shared_next")
    if obs.ack:
        return list(shared_next)
    if obs.sensed is None or len(obs.sensed) != n:
        raise ValueError("the transmitter senses every channel; sensed vector required")
    star = obs.accessed
    out = []
    for i in range(n):
        p01, p11 = local_estimates[i]
        spec = specs[i]
        f = posterior_factors(private[i], spec.p_fa, spec.p_md)
        if i == star:
            post = f.d
        else:
            post = f.a if obs.sensed[i] else f.c
        out.append(post * p11 + (1.0 - post) * p01)
    return out


def update_shared_single(shared, obs: SlotObservation, shared_estimates, specs) -> BeliefVector:
    """Common belief when only the accessed channel is sensed."""
    n = _check_dims(shared, shared_estimates, specs)
    star = obs.accessed
    if not 0 <= star < n:
        raise ValueError(f"accessed channel {star} out of range for {n} channels")
    out = []
    for i in range(n):
        p01, p11 = shared_estimates[i]
        if i == star:
            if obs.ack:
                out.append(p11)
                continue
            spec = specs[i]
            post = posterior_factors(shared[i], spec.p_fa, spec.p_md).d
        else:
            post = shared[i]
        out.append(post * p11 + (1.0 - post) * p01)
    return out
