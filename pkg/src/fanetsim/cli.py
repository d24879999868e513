"""Command-line entry point: run, sweep, report, serve, replay."""

from __future__ import annotations

import errno
import json
import signal
import sys
from pathlib import Path

import click

from . import experiments
from .experiments import UnknownSeries, compare, load_reference_dataset
from .groundstation import GroundStation, SimFleetBridge, create_app
from .scenario import ConfigInvalid, load_scenario

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_UNKNOWN_SERIES = 4
EXIT_BIND = 5


@click.group()
def main():
    """Field-experiment simulator and ground station."""


def _load(scenario_path: str):
    try:
        return load_scenario(scenario_path)
    except ConfigInvalid as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except OSError as exc:
        click.echo(f"io error: {exc}", err=True)
        sys.exit(EXIT_IO)


@main.command()
@click.option("--scenario", required=True, type=click.Path(), help="scenario JSON file")
@click.option("--seed", type=int, default=None, help="override master seed")
@click.option("--reps", type=int, default=None, help="override replication count")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="output directory")
def run(scenario, seed, reps, out_dir):
    """Run a collection scenario; writes metrics.json, chart.csv, trace.jsonl."""
    cfg = _load(scenario)
    if seed is not None:
        cfg.master_seed = seed
    if reps is not None:
        cfg.replications = reps
    try:
        all_metrics = []
        traces = []
        for rep in range(cfg.replications):
            metrics, sim = experiments.run_collection(cfg, rep)
            all_metrics.append(metrics)
            traces.append(sim.trace)
    except ConfigInvalid as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.json").write_text(
            json.dumps([m.to_dict() for m in all_metrics], sort_keys=True, indent=2) + "\n"
        )
        with (out / "trace.jsonl").open("w") as fh:
            for tr in traces:
                fh.write(tr.to_jsonl())
        experiments.emit_chart_data(all_metrics, out / "chart.csv")
    except OSError as exc:
        click.echo(f"io error: {exc}", err=True)
        sys.exit(EXIT_IO)
    _print_sensor_table(all_metrics)


def _print_sensor_table(all_metrics):
    m = all_metrics[0]
    click.echo(f"protocol={m.protocol} altitude={m.altitude_m}m speed={m.speed_mps}m/s")
    click.echo(f"{'sensor':>8} {'count':>8}")
    agg: dict[str, int] = {}
    for m in all_metrics:
        for sid, c in m.per_sensor.items():
            agg[sid] = agg.get(sid, 0) + c
    for sid in sorted(agg, key=lambda s: int(s.lstrip("S"))):
        click.echo(f"{sid:>8} {agg[sid]:>8}")
    click.echo(f"{'total':>8} {sum(agg.values()):>8}")


@main.command()
@click.option("--scenario", required=True, type=click.Path())
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
def sweep(scenario, seed, out_dir):
    """Run the two-drone throughput-vs-distance sweep."""
    cfg = _load(scenario)
    if seed is not None:
        cfg.master_seed = seed
    try:
        result = experiments.run_link_sweep(cfg)
    except ConfigInvalid as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.json").write_text(
            json.dumps(result.to_dict(), sort_keys=True, indent=2) + "\n"
        )
        experiments.emit_chart_data(result, out / "chart.csv")
    except OSError as exc:
        click.echo(f"io error: {exc}", err=True)
        sys.exit(EXIT_IO)
    a, b, c = result.fit
    click.echo(f"{'d (m)':>8} {'mean rate (bit/s)':>20}")
    for d, mean, _ in result.stops:
        click.echo(f"{d:>8.0f} {mean:>20.0f}")
    click.echo(f"fit: rate(d) = {a:.1f} + {b:.3f} d + {c:.5f} d^2")


@main.command()
@click.option("--run-dir", type=click.Path(), default=None, help="run artifacts to compare")
@click.option("--series", default=None, help="embedded series to use as the observed side")
@click.option("--ref-series", required=True, help="reference key, e.g. mesh/field/20")
@click.option("--out", "out_csv", type=click.Path(), default=None)
def report(run_dir, series, ref_series, out_csv):
    """Compare a run (or an embedded series) against a reference series."""
    ref = load_reference_dataset()
    try:
        if series is not None:
            per_sensor = ref.get(series)
        elif run_dir is not None:
            metrics_path = Path(run_dir) / "metrics.json"
            data = json.loads(metrics_path.read_text())
            per_sensor: dict[str, int] = {}
            for m in data:
                for sid, c in m["per_sensor"].items():
                    per_sensor[sid] = per_sensor.get(sid, 0) + c
        else:
            click.echo("need --run-dir or --series", err=True)
            sys.exit(EXIT_CONFIG)
        rep = compare(per_sensor, ref, ref_series)
    except UnknownSeries as exc:
        click.echo(f"unknown reference series: {exc}", err=True)
        sys.exit(EXIT_UNKNOWN_SERIES)
    except OSError as exc:
        click.echo(f"io error: {exc}", err=True)
        sys.exit(EXIT_IO)
    click.echo(f"{'sensor':>8} {'observed':>9} {'reference':>10} {'delta':>7} {'flag':>5}")
    for row in rep.rows:
        flag = "DIV" if row["divergent"] else ""
        click.echo(
            f"{row['sensor']:>8} {row['observed']:>9} {row['reference']:>10} "
            f"{row['abs_delta']:>7} {flag:>5}"
        )
    click.echo(f"{'total':>8} {rep.total_observed:>9} {rep.total_reference:>10}")
    if out_csv:
        import csv as _csv

        with open(out_csv, "w", newline="") as fh:
            w = _csv.DictWriter(
                fh,
                fieldnames=["sensor", "observed", "reference", "abs_delta", "rel_delta", "divergent"],
            )
            w.writeheader()
            w.writerows(rep.rows)


@main.command()
@click.option("--port", type=int, default=8470)
@click.option("--host", default="127.0.0.1")
@click.option("--runs-dir", type=click.Path(), default="runs")
@click.option("--sim", "sim_scenario", type=click.Path(), default=None,
              help="attach an in-process simulated fleet from this scenario")
@click.option("--ui-dir", type=click.Path(), default=None, help="serve a built UI from this dir")
def serve(port, host, runs_dir, sim_scenario, ui_dir):
    """Start the ground-station service (and optional simulated fleet)."""
    import uvicorn

    gs = GroundStation(runs_dir)
    gs.create_run({"source": "serve"})
    bridge = None
    if sim_scenario:
        bridge = SimFleetBridge(gs, _load(sim_scenario))
        bridge.start()
    app = create_app(gs, ui_dir=ui_dir)

    def shutdown(*_):
        if bridge is not None:
            bridge.detach()
        gs.close()
        raise SystemExit(0)

    signal.signal(signal.SIGTERM, shutdown)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except OSError as exc:
        if exc.errno in (errno.EADDRINUSE, errno.EACCES):
            click.echo(f"bind failed: {exc}", err=True)
            sys.exit(EXIT_BIND)
        raise
    except SystemExit as exc:
        # uvicorn exits 1 on bind failure; map to the documented code
        if exc.code not in (0, None):
            sys.exit(EXIT_BIND)
    finally:
        if bridge is not None:
            bridge.detach()
        gs.close()


@main.command()
@click.option("--trace", required=True, type=click.Path(), help="trace.jsonl to replay")
@click.option("--limit", type=int, default=20)
def replay(trace, limit):
    """Print events from a stored trace in execution order."""
    try:
        lines = Path(trace).read_text().splitlines()
    except OSError as exc:
        click.echo(f"io error: {exc}", err=True)
        sys.exit(EXIT_IO)
    count = 0
    for line in lines:
        if not line.strip():
            continue
        ev = json.loads(line)
        if count < limit:
            click.echo(
                f"{ev['time_us'] / 1e6:>10.3f}s  #{ev['id']:<6} {ev['node_id']:<8} {ev['kind']}"
            )
        count += 1
    click.echo(f"{count} events")


if __name__ == "__main__":
    main()
