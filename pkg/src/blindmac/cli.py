"""Command-line front end.

    blindmac run CONFIG [--workers K] [--full-resolution]
    blindmac preset {fig2,fig3,fig4,fig5} [--scale S] [--seed K] [--out PATH]
    blindmac bounds CONFIG
    blindmac plot CSV [--out PNG]

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .config import FIGURES, ConfigError, ScenarioConfig, load_config, preset
from .simulator import MonteCarloResult, log_subsampled_slots, monte_carlo, scenario_for_run
from .policies import offline_best_throughput, upper_bound_throughput

log = logging.getLogger(__name__)

CSV_HEADER = ("protocol", "slot", "avg_throughput")


class CurveRecord(NamedTuple):
    protocol: str
    slot: int
    avg_throughput: float


class SummaryRow(NamedTuple):
    name: str
    kind: str  # "protocol" or "bound"
    value: float
    stderr: float


def curve_records(result: MonteCarloResult, full_resolution: bool = False):
    slots = range(1, result.t + 1) if full_resolution else log_subsampled_slots(result.t)
    for p, curve in zip(result.protocols, result.mean):
        for j in slots:
            yield CurveRecord(p.name, j, float(curve[j - 1]))


def summary_rows(result: MonteCarloResult, iid: bool = False) -> list:
    rows = [
        SummaryRow(p.name, "protocol", result.final(p.name), result.final_stderr(p.name))
        for p in result.protocols
    ]
    bounds = ["UpperBound", "OfflineBound"] + (["GenieIidBound"] if iid else [])
    rows += [SummaryRow(b, "bound", result.bound(b), result.bound_stderr(b)) for b in bounds]
    return rows


def format_curves(records) -> str:
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow((r.protocol, r.slot, repr(r.avg_throughput)))
    return buf.getvalue()


def read_curves(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"unexpected header {header!r}")
        return [CurveRecord(p, int(s), float(v)) for p, s, v in reader]


def format_summary(rows) -> str:
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("name", "kind", "final_avg_throughput", "stderr"))
    for r in rows:
        w.writerow((r.name, r.kind, repr(r.value), repr(r.stderr)))
    return buf.getvalue()


def summary_path_for(output_path) -> Path:
    p = Path(output_path)
    return p.with_name(f"{p.stem}_summary{p.suffix or '.csv'}")


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run_experiment(config: ScenarioConfig, workers: int = 1, full_resolution: bool = False):
    """Run the Monte Carlo study and write the curve CSV plus its summary CSV.

    Returns ``(result, summary_rows)``. Nothing is left on disk if either
    file cannot be written.
    """
    result = monte_carlo(
        config.protocols,
        config.scenario_source(),
        config.runs,
        config.t,
        base_seed=config.seed,
        discount=config.discount,
        grid_size=config.grid_size,
        workers=workers,
    )
    rows = summary_rows(result, iid=config.is_iid)
    out = Path(config.output_path)
    summary = summary_path_for(out)
    _write_atomic(out, format_curves(curve_records(result, full_resolution)))
    try:
        _write_atomic(summary, format_summary(rows))
    except BaseException:
        out.unlink(missing_ok=True)
        raise
    return result, rows


def analytic_bounds(config: ScenarioConfig) -> dict:
    """Bounds averaged over the scenarios the runs would face."""
    source = config.scenario_source()
    runs = config.runs if not isinstance(source, list) else 1
    ub, off = [], []
    for r in range(runs):
        specs = scenario_for_run(source, config.seed, r)
        ub.append(upper_bound_throughput(specs))
        off.append(offline_best_throughput(specs)[1])
    return {"UpperBound": float(np.mean(ub)), "OfflineBound": float(np.mean(off))}


def _print_summary(rows, stream=sys.stdout):
    width = max(len(r.name) for r in rows)
    print(f"{'name':<{width}}  {'throughput':>10}  {'stderr':>9}", file=stream)
    for r in rows:
        print(f"{r.name:<{width}}  {r.value:>10.5f}  {r.stderr:>9.5f}", file=stream)


def plot_csv(csv_path, out_path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    records = read_curves(csv_path)
    fig, ax = plt.subplots(figsize=(6, 4))
    for name in dict.fromkeys(r.protocol for r in records):
        pts = [(r.slot, r.avg_throughput) for r in records if r.protocol == name]
        ax.plot(*zip(*pts), label=name)
    ax.set_xscale("log")
    ax.set_xlabel("slot")
    ax.set_ylabel("average throughput per slot")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="blindmac", description="Blind cognitive MAC simulator")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a YAML scenario configuration")
    run.add_argument("config")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--full-resolution", action="store_true", help="write every slot")

    pre = sub.add_parser("preset", help="run a named experiment preset")
    pre.add_argument("figure", choices=FIGURES)
    pre.add_argument("--scale", type=float, default=0.1, help="fraction of the 1000 runs")
    pre.add_argument("--seed", type=int, default=0)
    pre.add_argument("--out", default=None)
    pre.add_argument("--workers", type=int, default=1)
    pre.add_argument("--full-resolution", action="store_true")

    bnd = sub.add_parser("bounds", help="print the analytic bounds only")
    bnd.add_argument("config")

    plot = sub.add_parser("plot", help="render a curve CSV")
    plot.add_argument("csv")
    plot.add_argument("--out", default=None)
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "run":
            config = load_config(args.config)
        elif args.command == "preset":
            config = preset(args.figure, args.scale, args.seed, args.out)
        elif args.command == "bounds":
            config = load_config(args.config)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1

    try:
        if args.command in ("run", "preset"):
            _, rows = run_experiment(config, args.workers, args.full_resolution)
            _print_summary(rows)
            print(f"wrote {config.output_path} and {summary_path_for(config.output_path)}")
        elif args.command == "bounds":
            for name, value in analytic_bounds(config).items():
                print(f"{name} {value!r}")
        elif args.command == "plot":
            out = args.out or str(Path(args.csv).with_suffix(".png"))
            plot_csv(args.csv, out)
            print(f"wrote {out}")
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
