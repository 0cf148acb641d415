"""Slot-level simulation of the secondary transmitter/receiver pair.

Each slot runs decision, sensing, learning, access and ACK in that order.
The transmitter and the receiver each hold their own copy of the shared
state (``SyncState``); the channel each end picks is computed by ``decide``,
which sees nothing but that copy and static public knowledge (``LinkContext``).
Synchronisation is therefore a checked property rather than an assumption.

Channel evolution and sensing noise are drawn up front per run from named
substreams of ``(base_seed, run)``, so every protocol in a paired comparison
sees the same primary traffic and the same sensing errors.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .belief import (
    SlotObservation,
    update_private_full,
    update_shared_full,
    update_shared_single,
)
from .channel import (
    ChannelSpec,
    sample_scenario,
    sample_trajectory,
    sense_trajectory,
    stationary_free,
)
from .estimation import (
    DEFAULT_ESTIMATE,
    TransitionCounts,
    TransitionEstimate,
    UcbStats,
    estimate,
    estimate_iid_free_prob,
    forget_last,
    record_sensing,
    ucb_index,
)
from .policies import (
    decide_weighted_argmax,
    iid_genie_throughput,
    offline_best_throughput,
    upper_bound_throughput,
)
from .whittle import ArmModel, IndexTable, _unit_index

log = logging.getLogger(__name__)

DEFAULT_DISCOUNT = 0.9999
DEFAULT_GRID_SIZE = 2001

# substream purposes
EVOLUTION, SENSING, SCENARIO = 0, 1, 2


class SyncError(RuntimeError):
    """The transmitter's and receiver's shared state diverged."""


class Variant(str, Enum):
    FULL_SENSING_BLIND = "FullSensingBlind"
    FULL_SENSING_KNOWN = "FullSensingKnown"
    WHITTLE_BLIND_LP = "WhittleBlindLP"
    WHITTLE_KNOWN = "WhittleKnown"
    UCB_IID = "UcbIid"
    IID_COUNTING_BLIND = "IidCountingBlind"
    GREEDY_KNOWN_L1 = "GreedyKnownL1"
    OFFLINE_BEST = "OfflineBest"


FULL_SENSING = {Variant.FULL_SENSING_BLIND, Variant.FULL_SENSING_KNOWN, Variant.IID_COUNTING_BLIND}
KNOWN_STATISTICS = {
    Variant.FULL_SENSING_KNOWN,
    Variant.WHITTLE_KNOWN,
    Variant.GREEDY_KNOWN_L1,
    Variant.OFFLINE_BEST,
}
COUNTING = {Variant.FULL_SENSING_BLIND, Variant.WHITTLE_BLIND_LP, Variant.IID_COUNTING_BLIND}


@dataclass(frozen=True)
class ProtocolKind:
    variant: Variant
    lp: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.variant is Variant.WHITTLE_BLIND_LP:
            if self.lp is None or int(self.lp) != self.lp or self.lp < 1:
                raise ValueError(f"WhittleBlindLP needs an integer learning period >= 1, got {self.lp!r}")
        elif self.lp is not None:
            raise ValueError(f"{self.variant.value} takes no learning period")

    @property
    def name(self) -> str:
        if self.lp is None:
            return self.variant.value
        return f"{self.variant.value}({self.lp})"

    def __str__(self):
        return self.name

    @classmethod
    def parse(cls, text: str) -> "ProtocolKind":
        text = text.strip()
        if text.endswith(")") and "(" in text:
            head, arg = text[:-1].split("(", 1)
            try:
                lp = int(arg)
            except ValueError:
                raise ValueError(f"bad learning period in {text!r}") from None
            return cls(Variant(head.strip()), lp)
        try:
            return cls(Variant(text))
        except ValueError:
            known = ", ".join(v.value for v in Variant)
            raise ValueError(f"unknown protocol {text!r} (known: {known})") from None


class SensingErrors(NamedTuple):
    p_fa: float
    p_md: float


@dataclass
class LinkContext:
    """Static knowledge common to both ends before slot 1.

    Blind protocols get no transition probabilities here; genie protocols get
    the true ones in ``known``.
    """

    protocol: ProtocolKind
    bandwidths: list
    sensing: list
    discount: float = DEFAULT_DISCOUNT
    known: Optional[list] = None
    tables: Optional[list] = None
    offline_channel: Optional[int] = None
    _index_memo: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return len(self.bandwidths)

    @property
    def learning_slots(self) -> int:
        if self.protocol.variant is Variant.WHITTLE_BLIND_LP:
            return self.n * self.protocol.lp
        return 0

    def blind_index(self, omega: float, est: TransitionEstimate) -> float:
        key = (omega, est.p11_hat, est.p01_hat)
        val = self._index_memo.get(key)
        if val is None:
            if est.p11_hat == 1.0 and est.p01_hat == 0.0:
                val = omega
            else:
                val = _unit_index(omega, est.p11_hat, est.p01_hat, self.discount)
            self._index_memo[key] = val
        return val


@lru_cache(maxsize=256)
def _cached_table(p11: float, p01: float, beta: float, grid_size: int) -> IndexTable:
    return IndexTable.for_arm(ArmModel(p11, p01, 1.0, beta), grid_size)


def build_context(
    protocol: ProtocolKind,
    specs: Sequence[ChannelSpec],
    discount: float = DEFAULT_DISCOUNT,
    grid_size: int = DEFAULT_GRID_SIZE,
) -> LinkContext:
    ctx = LinkContext(
        protocol=protocol,
        bandwidths=[s.bandwidth for s in specs],
        sensing=[SensingErrors(s.p_fa, s.p_md) for s in specs],
        discount=discount,
    )
    v = protocol.variant
    if v in KNOWN_STATISTICS:
        ctx.known = [TransitionEstimate(s.p01, s.p11) for s in specs]
    if v is Variant.WHITTLE_KNOWN:
        # indices at unit bandwidth; the decision multiplies by B_i
        ctx.tables = [_cached_table(s.p11, s.p01, discount, grid_size) for s in specs]
    if v is Variant.OFFLINE_BEST:
        ctx.offline_channel = offline_best_throughput(specs)[0]
    return ctx


@dataclass
class TxState:
    """Transmitter-private working memory."""

    private_belief: list
    counts: list
    estimates: list
    prev_sensed: Optional[int] = None


@dataclass(frozen=True)
class SyncState:
    """What both ends must hold identically."""

    shared_belief: tuple
    shared_estimates: tuple
    pending_resync: bool = False
    ucb: Optional[tuple] = None


class PacketPayload(NamedTuple):
    sensed_vector: Optional[tuple]
    counts: Optional[tuple]
    resync_belief: Optional[tuple]


class SlotOutcome(NamedTuple):
    slot: int
    tx_channel: int
    rx_channel: int
    sensed_free: bool
    transmitted: bool
    true_free: bool
    ack: bool
    reward: float
    interference: bool


def init_tx(ctx: LinkContext) -> TxState:
    n = ctx.n
    if ctx.known is not None:
        belief = [stationary_free(e.p11_hat, e.p01_hat) for e in ctx.known]
        estimates = list(ctx.known)
    else:
        belief = [DEFAULT_ESTIMATE] * n
        estimates = [TransitionEstimate(DEFAULT_ESTIMATE, DEFAULT_ESTIMATE)] * n
    return TxState(belief, [TransitionCounts()] * n, estimates)


def initialize_sync(ctx: LinkContext, tx: TxState) -> SyncState:
    """Out-of-band handshake: the receiver learns the transmitter's state."""
    ucb = (UcbStats(),) * ctx.n if ctx.protocol.variant is Variant.UCB_IID else None
    return SyncState(tuple(tx.private_belief), tuple(tx.estimates), False, ucb)


def _finish_learning(ctx: LinkContext, tx: TxState) -> None:
    """Beliefs at the end of the learning phase from each channel's last look."""
    lp, n = ctx.protocol.lp, ctx.n
    belief = []
    for i, (c, est) in enumerate(zip(tx.counts, tx.estimates)):
        w = est.p11_hat if c.last_sensed else est.p01_hat
        for _ in range((n - 1 - i) * lp):
            w = w * est.p11_hat + (1.0 - w) * est.p01_hat
        belief.append(w)
    tx.private_belief = belief


def decide(ctx: LinkContext, sync: SyncState, j: int) -> int:
    """Access channel for slot ``j`` from the shared state alone."""
    v = ctx.protocol.variant
    if v is Variant.OFFLINE_BEST:
        return ctx.offline_channel
    if v is Variant.WHITTLE_BLIND_LP:
        if j <= ctx.learning_slots:
            return (j - 1) // ctx.protocol.lp
        weights = [ctx.blind_index(w, e) for w, e in zip(sync.shared_belief, sync.shared_estimates)]
    elif v is Variant.WHITTLE_KNOWN:
        weights = [tab(w) for tab, w in zip(ctx.tables, sync.shared_belief)]
    elif v is Variant.UCB_IID:
        weights = [ucb_index(s, j) for s in sync.ucb]
    else:
        weights = sync.shared_belief
    return decide_weighted_argmax(weights, ctx.bandwidths)


def advance_sync(
    ctx: LinkContext, sync: SyncState, accessed: int, packet: Optional[PacketPayload]
) -> SyncState:
    """Shared state for the next slot given this end's decision and whether a
    packet got through (``packet`` is None otherwise)."""
    v = ctx.protocol.variant
    ack = packet is not None
    estimates = sync.shared_estimates
    if ack and packet.counts is not None and v is not Variant.IID_COUNTING_BLIND:
        estimates = tuple(estimate(c) for c in packet.counts)

    belief = sync.shared_belief
    ucb = sync.ucb
    if v in (Variant.FULL_SENSING_BLIND, Variant.FULL_SENSING_KNOWN):
        if ack:
            prior = packet.resync_belief if packet.resync_belief is not None else belief
            obs = SlotObservation(accessed, True, packet.sensed_vector)
            belief = update_shared_full(prior, obs, estimates, ctx.sensing)
        else:
            belief = update_shared_full(belief, SlotObservation(accessed, False), estimates, ctx.sensing)
    elif v is Variant.IID_COUNTING_BLIND:
        if ack:
            belief = [estimate_iid_free_prob(c.n1, max(1, c.n0 + c.n1)) for c in packet.counts]
    elif v in (Variant.WHITTLE_KNOWN, Variant.WHITTLE_BLIND_LP, Variant.GREEDY_KNOWN_L1):
        belief = update_shared_single(belief, SlotObservation(accessed, ack), estimates, ctx.sensing)
    elif v is Variant.UCB_IID:
        x, y = ucb[accessed]
        ucb = ucb[:accessed] + (UcbStats(x + ack, y + 1),) + ucb[accessed + 1 :]
    return SyncState(tuple(belief), tuple(estimates), not ack, ucb)


def run_slot(
    ctx: LinkContext,
    j: int,
    true_free: Sequence[bool],
    sensed_all: Sequence[bool],
    tx: TxState,
    tx_sync: SyncState,
    rx_sync: SyncState,
) -> tuple[SlotOutcome, SyncState, SyncState]:
    """Play slot ``j``.

    ``true_free`` is the primary network state and ``sensed_all`` what the
    transmitter's detector would report for each channel this slot; only the
    entries the protocol senses are read. ``tx`` is updated in place; the new
    shared states of both ends are returned.
    """
    v = ctx.protocol.variant
    tx_ch = decide(ctx, tx_sync, j)
    rx_ch = decide(ctx, rx_sync, j)
    learning = j <= ctx.learning_slots

    # sensing + learning
    counting = v in COUNTING
    if v in FULL_SENSING:
        sensed = tuple(sensed_all)
        if counting:
            tx.counts = [record_sensing(c, s) for c, s in zip(tx.counts, sensed)]
            if v is Variant.FULL_SENSING_BLIND:
                tx.estimates = [estimate(c) for c in tx.counts]
    else:
        sensed = None
        if counting:
            c = tx.counts[tx_ch]
            if tx.prev_sensed != tx_ch:
                c = forget_last(c)
            c = record_sensing(c, sensed_all[tx_ch])
            tx.counts[tx_ch] = c
            tx.estimates[tx_ch] = estimate(c)
        tx.prev_sensed = tx_ch
    sensed_free = bool(sensed_all[tx_ch])
    channel_free = bool(true_free[tx_ch])

    # access
    transmitted = sensed_free and not learning
    packet = None
    if transmitted:
        resync = None
        if tx_sync.pending_resync and v in (Variant.FULL_SENSING_BLIND, Variant.FULL_SENSING_KNOWN):
            resync = tuple(tx.private_belief)
        packet = PacketPayload(sensed, tuple(tx.counts) if counting else None, resync)
    delivered = transmitted and channel_free and rx_ch == tx_ch

    # ACK + belief update
    if learning:
        if j == ctx.learning_slots:
            _finish_learning(ctx, tx)
            tx_sync = initialize_sync(ctx, tx)
            rx_sync = initialize_sync(ctx, tx)
    else:
        received = packet if delivered else None
        new_tx_sync = advance_sync(ctx, tx_sync, tx_ch, received)
        rx_sync = advance_sync(ctx, rx_sync, rx_ch, received)
        if v in (Variant.FULL_SENSING_BLIND, Variant.FULL_SENSING_KNOWN) and not delivered:
            local = tx.estimates if v is Variant.FULL_SENSING_BLIND else ctx.known
            obs = SlotObservation(tx_ch, False, sensed)
            tx.private_belief = update_private_full(
                tx.private_belief, obs, local, ctx.sensing, new_tx_sync.shared_belief
            )
        else:
            tx.private_belief = list(new_tx_sync.shared_belief)
        tx_sync = new_tx_sync
        if not tx_sync.pending_resync and tuple(tx.private_belief) != tx_sync.shared_belief:
            raise SyncError(f"slot {j}: private belief differs from shared belief after ACK")

    reward = ctx.bandwidths[tx_ch] if delivered else 0.0
    outcome = SlotOutcome(
        j, tx_ch, rx_ch, sensed_free, transmitted, channel_free, delivered, reward,
        transmitted and not channel_free,
    )
    return outcome, tx_sync, rx_sync


def substream(base_seed: int, run: int, purpose: int, channel: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(base_seed, spawn_key=(run, purpose, channel)))


@dataclass
class NetworkTrace:
    """Pre-drawn primary states and detector outputs, shape (t, n) as lists."""

    free: list
    sensed: list


def draw_network(
    specs: Sequence[ChannelSpec],
    t: int,
    base_seed: int,
    run: int = 0,
    initial: Optional[Sequence[bool]] = None,
) -> NetworkTrace:
    free_cols, sensed_cols = [], []
    for i, spec in enumerate(specs):
        start = None if initial is None else initial[i]
        states = sample_trajectory(spec, t, substream(base_seed, run, EVOLUTION, i), start)
        free_cols.append(states)
        sensed_cols.append(sense_trajectory(states, spec, substream(base_seed, run, SENSING, i)))
    return NetworkTrace(np.column_stack(free_cols).tolist(), np.column_stack(sensed_cols).tolist())


def simulate(ctx: LinkContext, trace: NetworkTrace) -> list:
    tx = init_tx(ctx)
    tx_sync = initialize_sync(ctx, tx)
    rx_sync = initialize_sync(ctx, tx)
    out = []
    for k, (free, sensed) in enumerate(zip(trace.free, trace.sensed)):
        o, tx_sync, rx_sync = run_slot(ctx, k + 1, free, sensed, tx, tx_sync, rx_sync)
        out.append(o)
    return out


def run_block(
    protocol: ProtocolKind,
    specs: Sequence[ChannelSpec],
    t: int,
    seed: int = 0,
    discount: float = DEFAULT_DISCOUNT,
    grid_size: int = DEFAULT_GRID_SIZE,
    initial: Optional[Sequence[bool]] = None,
) -> list:
    """Simulate ``t`` slots of one protocol on one block of fixed statistics."""
    if t < 1:
        raise ValueError(f"horizon must be >= 1, got {t}")
    trace = draw_network(specs, t, seed, 0, initial)
    return simulate(build_context(protocol, specs, discount, grid_size), trace)


@dataclass(frozen=True)
class ScenarioSampler:
    """Random channel statistics, drawn afresh for each run."""

    n: int
    low: float = 0.1
    high: float = 0.9
    bandwidths: Optional[tuple] = None
    p_fa: float = 0.0
    p_md: float = 0.0
    iid: bool = False

    def sample(self, rng: np.random.Generator) -> list:
        bw = self.bandwidths if self.bandwidths is not None else (1.0,) * self.n
        return sample_scenario(self.n, self.low, self.high, bw, rng, self.p_fa, self.p_md, self.iid)


ScenarioSource = Union[Sequence[ChannelSpec], ScenarioSampler]

BOUND_NAMES = ("UpperBound", "OfflineBound", "GenieIidBound")


def scenario_for_run(source: ScenarioSource, base_seed: int, run: int) -> list:
    if isinstance(source, ScenarioSampler):
        return source.sample(substream(base_seed, run, SCENARIO))
    return list(source)


def _one_run(args):
    protocols, source, t, base_seed, run, discount, grid_size = args
    specs = scenario_for_run(source, base_seed, run)
    trace = draw_network(specs, t, base_seed, run)
    slots = np.arange(1, t + 1)
    curves = []
    for p in protocols:
        outcomes = simulate(build_context(p, specs, discount, grid_size), trace)
        rewards = np.fromiter((o.reward for o in outcomes), dtype=float, count=t)
        curves.append(np.cumsum(rewards) / slots)
    bounds = (
        upper_bound_throughput(specs),
        offline_best_throughput(specs)[1],
        iid_genie_throughput(specs),
    )
    return curves, bounds


@dataclass
class MonteCarloResult:
    """Cross-run statistics of the running-average throughput curves."""

    protocols: list
    t: int
    runs: int
    mean: list  # per protocol, array over slots 1..t
    mean_sq: list
    bound_mean: dict
    bound_sq: dict

    def _index(self, name: str) -> int:
        for k, p in enumerate(self.protocols):
            if p.name == name:
                return k
        raise KeyError(name)

    def curve(self, name: str) -> np.ndarray:
        return self.mean[self._index(name)]

    def stderr_curve(self, name: str) -> np.ndarray:
        k = self._index(name)
        return _stderr(self.mean[k], self.mean_sq[k], self.runs)

    def final(self, name: str) -> float:
        return float(self.curve(name)[-1])

    def final_stderr(self, name: str) -> float:
        return float(self.stderr_curve(name)[-1])

    def window_mean(self, name: str, start: int, stop: int) -> float:
        """Mean per-slot reward over slots ``start+1..stop``."""
        c = self.curve(name)
        return float((c[stop - 1] * stop - c[start - 1] * start) / (stop - start))

    def bound(self, name: str) -> float:
        return self.bound_mean[name]

    def bound_stderr(self, name: str) -> float:
        return float(_stderr(np.array(self.bound_mean[name]), np.array(self.bound_sq[name]), self.runs))


def _stderr(mean, mean_sq, runs):
    if runs < 2:
        return np.zeros_like(mean)
    var = np.maximum(mean_sq - mean * mean, 0.0) * runs / (runs - 1)
    return np.sqrt(var / runs)


def monte_carlo(
    protocols: Sequence[ProtocolKind],
    source: ScenarioSource,
    runs: int,
    t: int,
    base_seed: int = 0,
    discount: float = DEFAULT_DISCOUNT,
    grid_size: int = DEFAULT_GRID_SIZE,
    workers: int = 1,
) -> MonteCarloResult:
    """Paired Monte Carlo over ``runs`` independent blocks.

    Within a run every protocol faces the same statistics and the same primary
    traffic. Runs are reduced in index order, so the result does not depend on
    ``workers``.
    """
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    if t < 1:
        raise ValueError(f"horizon must be >= 1, got {t}")
    protocols = list(protocols)
    jobs = [(protocols, source, t, base_seed, r, discount, grid_size) for r in range(runs)]
    total = [np.zeros(t) for _ in protocols]
    total_sq = [np.zeros(t) for _ in protocols]
    bsum = dict.fromkeys(BOUND_NAMES, 0.0)
    bsq = dict.fromkeys(BOUND_NAMES, 0.0)

    def reduce(results):
        for r, (curves, bounds) in enumerate(results):
            for k, c in enumerate(curves):
                total[k] += c
                total_sq[k] += c * c
            for name, b in zip(BOUND_NAMES, bounds):
                bsum[name] += b
                bsq[name] += b * b
            if (r + 1) % max(1, runs // 10) == 0:
                log.info("completed %d/%d runs", r + 1, runs)

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reduce(pool.map(_one_run, jobs))
    else:
        reduce(map(_one_run, jobs))
    return MonteCarloResult(
        protocols=protocols,
        t=t,
        runs=runs,
        mean=[s / runs for s in total],
        mean_sq=[s / runs for s in total_sq],
        bound_mean={k: v / runs for k, v in bsum.items()},
        bound_sq={k: v / runs for k, v in bsq.items()},
    )


def log_subsampled_slots(t: int) -> list:
    """Every slot to 100, every 10th to 10^4, every 100th beyond; always ``t``."""
    slots = [j for j in range(1, t + 1) if j <= 100 or (j <= 10_000 and j % 10 == 0) or j % 100 == 0]
    if slots[-1] != t:
        slots.append(t)
    return slots

