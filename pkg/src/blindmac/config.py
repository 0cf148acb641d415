"""Scenario configuration: YAML loading, validation, serialisation and the
figure presets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Union

import yaml

from .channel import ChannelSpec
from .simulator import DEFAULT_DISCOUNT, DEFAULT_GRID_SIZE, ProtocolKind, ScenarioSampler


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` lists ``(field, message)`` pairs."""

    def __init__(self, problems, line=None):
        self.problems = list(problems)
        self.line = line
        msg = "; ".join(f"{f}: {m}" for f, m in self.problems)
        if line is not None:
            msg = f"line {line}: {msg}"
        super().__init__(msg)


@dataclass(frozen=True)
class Sampler:
    low: float = 0.1
    high: float = 0.9
    iid: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    n: int = 5
    t: int = 10_000
    runs: int = 100
    seed: int = 0
    bandwidths: tuple = ()
    # explicit ((p11, p01), ...) per channel, or a Sampler
    transitions: Union[tuple, Sampler] = field(default_factory=Sampler)
    p_fa: float = 0.0
    p_md: float = 0.0
    protocols: tuple = ()
    discount: float = DEFAULT_DISCOUNT
    grid_size: int = DEFAULT_GRID_SIZE
    output_path: str = "results.csv"

    def scenario_source(self):
        bw = self.bandwidths or (1.0,) * self.n
        if isinstance(self.transitions, Sampler):
            s = self.transitions
            return ScenarioSampler(self.n, s.low, s.high, tuple(bw), self.p_fa, self.p_md, s.iid)
        return [ChannelSpec(b, p11, p01, self.p_fa, self.p_md) for b, (p11, p01) in zip(bw, self.transitions)]

    @property
    def is_iid(self) -> bool:
        if isinstance(self.transitions, Sampler):
            return self.transitions.iid
        return all(p11 == p01 for p11, p01 in self.transitions)


_KEYS = {f.name for f in fields(ScenarioConfig)}


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_real(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _prob(problems, name, v):
    if not _is_real(v) or not 0.0 <= v <= 1.0:
        problems.append((name, f"must be a probability in [0, 1], got {v!r}"))
        return False
    return True


def config_from_dict(doc: dict) -> ScenarioConfig:
    """Validate a parsed document and apply defaults; reports every problem."""
    if not isinstance(doc, dict):
        raise ConfigError([("<document>", "expected a mapping of keys to values")])
    problems = []
    for key in doc:
        if key not in _KEYS:
            problems.append((str(key), "unknown key"))

    defaults = ScenarioConfig()
    get = lambda k: doc.get(k, getattr(defaults, k))  # noqa: E731

    ints = {}
    for key, low in (("n", 1), ("t", 1), ("runs", 1), ("seed", 0), ("grid_size", 101)):
        v = get(key)
        if not _is_int(v) or v < low:
            problems.append((key, f"must be an integer >= {low}, got {v!r}"))
        ints[key] = v
    n = ints["n"] if _is_int(ints["n"]) and ints["n"] >= 1 else None

    reals = {}
    for key in ("p_fa", "p_md"):
        v = get(key)
        _prob(problems, key, v)
        reals[key] = float(v) if _is_real(v) else v
    discount = get("discount")
    if not _is_real(discount) or not 0.0 < discount < 1.0:
        problems.append(("discount", f"must lie in (0, 1), got {discount!r}"))

    bw = doc.get("bandwidths")
    if bw is None:
        bandwidths = (1.0,) * n if n else ()
    elif not isinstance(bw, list) or not all(_is_real(b) and b >= 0 for b in bw):
        problems.append(("bandwidths", "must be a list of nonnegative numbers"))
        bandwidths = ()
    else:
        bandwidths = tuple(float(b) for b in bw)
        if n is not None and len(bandwidths) != n:
            problems.append(("bandwidths", f"expected {n} entries, got {len(bandwidths)}"))

    transitions = _parse_transitions(doc.get("transitions"), n, problems)

    protocols = []
    raw = doc.get("protocols")
    if not isinstance(raw, list) or not raw:
        problems.append(("protocols", "must be a non-empty list of protocol names"))
    else:
        for k, name in enumerate(raw):
            try:
                protocols.append(ProtocolKind.parse(str(name)))
            except ValueError as exc:
                problems.append((f"protocols[{k}]", str(exc)))

    out = get("output_path")
    if not isinstance(out, str) or not out:
        problems.append(("output_path", "must be a non-empty path string"))

    if problems:
        raise ConfigError(problems)
    return ScenarioConfig(
        n=ints["n"],
        t=ints["t"],
        runs=ints["runs"],
        seed=ints["seed"],
        bandwidths=bandwidths,
        transitions=transitions,
        p_fa=reals["p_fa"],
        p_md=reals["p_md"],
        protocols=tuple(protocols),
        discount=float(discount),
        grid_size=ints["grid_size"],
        output_path=out,
    )


def _parse_transitions(raw, n, problems):
    if raw is None:
        return Sampler()
    if isinstance(raw, dict):
        if set(raw) != {"sampler"} or not isinstance(raw["sampler"], dict):
            problems.append(("transitions", "expected {sampler: {low, high, iid}} or a list of {p11, p01}"))
            return Sampler()
        s = raw["sampler"]
        for key in s:
            if key not in ("low", "high", "iid"):
                problems.append((f"transitions.sampler.{key}", "unknown key"))
        low, high, iid = s.get("low", 0.1), s.get("high", 0.9), s.get("iid", False)
        ok = _prob(problems, "transitions.sampler.low", low)
        ok &= _prob(problems, "transitions.sampler.high", high)
        if ok and low > high:
            problems.append(("transitions.sampler", f"low {low} exceeds high {high}"))
        if not isinstance(iid, bool):
            problems.append(("transitions.sampler.iid", "must be true or false"))
        return Sampler(float(low) if ok else 0.1, float(high) if ok else 0.9, bool(iid))
    if not isinstance(raw, list):
        problems.append(("transitions", "expected a sampler mapping or a list of {p11, p01}"))
        return Sampler()
    if n is not None and len(raw) != n:
        problems.append(("transitions", f"expected {n} channels, got {len(raw)}"))
    pairs = []
    for k, entry in enumerate(raw):
        if not isinstance(entry, dict) or set(entry) != {"p11", "p01"}:
            problems.append((f"transitions[{k}]", "expected a mapping with keys p11 and p01"))
            continue
        p11, p01 = entry["p11"], entry["p01"]
        ok = _prob(problems, f"transitions[{k}].p11", p11)
        ok &= _prob(problems, f"transitions[{k}].p01", p01)
        if ok and p11 == 1.0 and p01 == 0.0:
            problems.append((f"transitions[{k}]", "p11=1 with p01=0 is a degenerate chain"))
        pairs.append((float(p11) if ok else 0.5, float(p01) if ok else 0.5))
    return tuple(pairs)


def parse_config(text: str) -> ScenarioConfig:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError([("<syntax>", problem)], line=line) from None
    return config_from_dict(doc if doc is not None else {})


def load_config(path) -> ScenarioConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def config_to_dict(cfg: ScenarioConfig) -> dict:
    if isinstance(cfg.transitions, Sampler):
        s = cfg.transitions
        transitions = {"sampler": {"low": s.low, "high": s.high, "iid": s.iid}}
    else:
        transitions = [{"p11": p11, "p01": p01} for p11, p01 in cfg.transitions]
    return {
        "n": cfg.n,
        "t": cfg.t,
        "runs": cfg.runs,
        "seed": cfg.seed,
        "bandwidths": list(cfg.bandwidths),
        "transitions": transitions,
        "p_fa": cfg.p_fa,
        "p_md": cfg.p_md,
        "protocols": [p.name for p in cfg.protocols],
        "discount": cfg.discount,
        "grid_size": cfg.grid_size,
        "output_path": cfg.output_path,
    }


def dump_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False)


FIGURES = ("fig2", "fig3", "fig4", "fig5")

_PRESET_PROTOCOLS = {
    "fig2": ("FullSensingKnown", "WhittleKnown", "GreedyKnownL1", "OfflineBest"),
    "fig3": ("FullSensingBlind", "FullSensingKnown"),
    "fig4": ("IidCountingBlind", "FullSensingBlind"),
    "fig5": ("WhittleBlindLP(20)", "WhittleBlindLP(200)", "WhittleKnown"),
}


def preset(figure: str, scale: float = 1.0, seed: int = 0, output_path: str | None = None) -> ScenarioConfig:
    """Numerical setup of one figure; ``scale`` shrinks the run count only.

    N=5 unit-bandwidth channels with transition probabilities uniform in
    [0.1, 0.9] (p11 = p01 for fig4), perfect sensing, discount 0.9999,
    1000 runs at scale 1, T=10^4 (10^5 for fig5). Analytic bounds are
    reported with every run, so they are not listed as protocols.
    """
    if figure not in FIGURES:
        raise ValueError(f"unknown figure {figure!r}; expected one of {', '.join(FIGURES)}")
    if not 0.0 < scale <= 1.0:
        raise ValueError(f"scale must lie in (0, 1], got {scale!r}")
    return ScenarioConfig(
        n=5,
        t=100_000 if figure == "fig5" else 10_000,
        runs=math.ceil(round(1000 * scale, 9)),
        seed=seed,
        bandwidths=(1.0,) * 5,
        transitions=Sampler(0.1, 0.9, iid=figure == "fig4"),
        p_fa=0.0,
        p_md=0.0,
        protocols=tuple(ProtocolKind.parse(p) for p in _PRESET_PROTOCOLS[figure]),
        discount=DEFAULT_DISCOUNT,
        grid_size=DEFAULT_GRID_SIZE,
        output_path=output_path or f"{figure}.csv",
    )
