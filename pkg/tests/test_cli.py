import csv
import math
import os
import tempfile

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blindmac.cli import (
    CurveRecord,
    format_curves,
    main,
    read_curves,
    run_experiment,
    summary_path_for,
)
from blindmac.config import (
    ConfigError,
    Sampler,
    ScenarioConfig,
    config_from_dict,
    dump_config,
    load_config,
    parse_config,
    preset,
)
from blindmac.simulator import ProtocolKind

BASIC = """\
n: 2
t: 10
runs: 2
seed: 3
transitions:
  - {p11: 0.8, p01: 0.3}
  - {p11: 0.5, p01: 0.5}
protocols: [FullSensingBlind, WhittleKnown]
"""


def write(tmp_path, text, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_defaults_applied(tmp_path):
    cfg = load_config(write(tmp_path, "n: 5\nprotocols: [FullSensingKnown]\n"))
    assert cfg.p_fa == 0.0 and cfg.p_md == 0.0
    assert cfg.discount == 0.9999
    assert cfg.transitions == Sampler(0.1, 0.9, False)
    assert cfg.bandwidths == (1.0,) * 5


def test_bad_probability_names_field():
    with pytest.raises(ConfigError) as err:
        parse_config(BASIC.replace("p11: 0.8", "p11: 1.2"))
    assert "p11" in str(err.value)


def test_every_problem_reported():
    with pytest.raises(ConfigError) as err:
        config_from_dict({"n": 0, "p_fa": 2.0, "protocols": ["Bogus"], "colour": 1})
    fields = {f for f, _ in err.value.problems}
    assert {"n", "p_fa", "protocols[0]", "colour"} <= fields


def test_degenerate_chain_rejected():
    with pytest.raises(ConfigError):
        parse_config(BASIC.replace("p11: 0.8, p01: 0.3", "p11: 1.0, p01: 0.0"))


def test_sampler_config():
    cfg = parse_config("n: 3\ntransitions: {sampler: {low: 0.2, high: 0.7}}\nprotocols: [UcbIid]\n")
    assert cfg.transitions == Sampler(0.2, 0.7, False)
    src = cfg.scenario_source()
    specs = src.sample(np.random.default_rng(0))
    assert len(specs) == 3 and all(0.2 <= s.p11 <= 0.7 and 0.2 <= s.p01 <= 0.7 for s in specs)


def test_parse_error_has_line():
    with pytest.raises(ConfigError) as err:
        parse_config("n: 5\nprotocols: [a, b\nt: 4\n")
    assert err.value.line is not None and "line" in str(err.value)


def test_config_roundtrip(tmp_path):
    for cfg in (parse_config(BASIC), preset("fig4", 0.01), preset("fig5", 0.05, seed=7)):
        assert parse_config(dump_config(cfg)) == cfg


def test_run_experiment_small_case(tmp_path):
    cfg = parse_config(BASIC + f"output_path: {tmp_path / 'out.csv'}\n")
    result, rows = run_experiment(cfg)
    records = read_curves(cfg.output_path)
    assert len(records) == 2 * 10
    assert [r.slot for r in records[:10]] == list(range(1, 11))
    text = (tmp_path / "out.csv").read_bytes()
    assert text.startswith(b"protocol,slot,avg_throughput\n") and b"\r" not in text
    summary = list(csv.DictReader(open(summary_path_for(cfg.output_path), newline="")))
    ub = next(float(r["final_avg_throughput"]) for r in summary if r["name"] == "UpperBound")
    for r in summary:
        if r["kind"] == "protocol":
            assert ub >= float(r["final_avg_throughput"]) - 3 * float(r["stderr"]) - 1e-12
    assert {r["name"] for r in summary} >= {"UpperBound", "OfflineBound"}


def test_run_experiment_byte_identical(tmp_path):
    a = parse_config(BASIC + f"output_path: {tmp_path / 'a.csv'}\n")
    b = parse_config(BASIC + f"output_path: {tmp_path / 'b.csv'}\n")
    run_experiment(a)
    run_experiment(b)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a_summary.csv").read_bytes() == (tmp_path / "b_summary.csv").read_bytes()


def test_failed_write_leaves_nothing(tmp_path):
    blocker = tmp_path / "blocked"
    blocker.write_text("")
    cfg = parse_config(BASIC + f"output_path: {blocker / 'x.csv'}\n")
    with pytest.raises(OSError):
        run_experiment(cfg)
    assert list(tmp_path.iterdir()) == [blocker]


def test_preset_scaling():
    cfg = preset("fig2", 0.1)
    assert cfg.runs == 100 and cfg.t == 10_000
    assert [p.name for p in cfg.protocols] == ["FullSensingKnown", "WhittleKnown", "GreedyKnownL1", "OfflineBest"]
    assert preset("fig3", 0.3).runs == 300
    assert preset("fig3", 0.0001).runs == 1


def test_preset_fig5():
    cfg = preset("fig5", 1.0)
    assert cfg.t == 100_000
    assert {p.lp for p in cfg.protocols if p.lp} == {20, 200}


def test_preset_fig4_iid():
    cfg = preset("fig4", 0.05)
    assert cfg.is_iid
    for seed in range(5):
        assert all(s.p11 == s.p01 for s in cfg.scenario_source().sample(np.random.default_rng(seed)))


def test_preset_full_scale_parameters():
    for fig in ("fig2", "fig3", "fig4", "fig5"):
        cfg = preset(fig, 1.0)
        assert cfg.n == 5 and cfg.bandwidths == (1.0,) * 5
        assert cfg.runs == 1000 and cfg.discount == 0.9999
        assert cfg.p_fa == 0.0 and cfg.p_md == 0.0


def test_preset_rejects_unknown():
    with pytest.raises(ValueError):
        preset("fig9")
    with pytest.raises(ValueError):
        preset("fig2", 0.0)


@given(st.lists(st.tuples(
    st.sampled_from(["FullSensingBlind", "WhittleBlindLP(20)", "UcbIid"]),
    st.integers(1, 10**6),
    st.floats(0.0, 50.0, allow_nan=False),
), max_size=20))
def test_csv_roundtrip(rows):
    records = [CurveRecord(*r) for r in rows]
    fd, path = tempfile.mkstemp(suffix=".csv")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(format_curves(records))
        assert read_curves(path) == records
    finally:
        os.unlink(path)


def test_main_exit_codes(tmp_path, capsys):
    good = write(tmp_path, BASIC + f"output_path: {tmp_path / 'o.csv'}\n")
    assert main(["run", str(good)]) == 0
    assert (tmp_path / "o.csv").exists()
    bad = write(tmp_path, BASIC.replace("p11: 0.8", "p11: 1.2"), "bad.yaml")
    assert main(["run", str(bad)]) == 1
    assert "p11" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.yaml")]) == 1
    blocker = tmp_path / "file"
    blocker.write_text("")
    unwritable = write(tmp_path, BASIC + f"output_path: {blocker / 'o.csv'}\n", "uw.yaml")
    assert main(["run", str(unwritable)]) == 2


def test_main_bounds(tmp_path, capsys):
    cfg = write(tmp_path, BASIC)
    assert main(["bounds", str(cfg)]) == 0
    out = dict(line.split() for line in capsys.readouterr().out.strip().splitlines())
    assert math.isclose(float(out["UpperBound"]), 0.68, abs_tol=1e-12)
    assert math.isclose(float(out["OfflineBound"]), 0.6, abs_tol=1e-12)


def test_main_preset(tmp_path):
    out = tmp_path / "f3.csv"
    assert main(["preset", "fig3", "--scale", "0.002", "--seed", "1", "--out", str(out)]) == 0
    recs = read_curves(out)
    assert {r.protocol for r in recs} == {"FullSensingBlind", "FullSensingKnown"}
    assert recs[-1].slot == 10_000


def test_config_equality_is_value_based():
    assert ScenarioConfig(protocols=(ProtocolKind.parse("UcbIid"),)) == ScenarioConfig(
        protocols=(ProtocolKind.parse("UcbIid"),))
