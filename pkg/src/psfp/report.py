"""Metrics export: CSV files, a JSON summary and per-figure plot data."""

from __future__ import annotations

import csv
import json
import statistics
from pathlib import Path

from psfp.bridge import DropReason
from psfp.simulator import NS_PER_S, MetricsLog, Simulation

CSV_FILES = ("rates.csv", "drops.csv", "forwarded.csv", "latency.csv", "sync.csv")


def _bps(nbytes: int, span: int) -> int:
    return nbytes * 8 * NS_PER_S // span


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def latency_stats(samples) -> dict:
    by_source: dict[str, list[int]] = {}
    for s in samples:
        by_source.setdefault(s.source, []).append(s.latency)
    return {
        name: {
            "count": len(v),
            "min_ns": min(v),
            "median_ns": int(statistics.median_low(v)),
            "max_ns": max(v),
        }
        for name, v in sorted(by_source.items())
    }


def summarize(sim: Simulation, metrics: MetricsLog, scenario=None) -> dict:
    b = sim.bridge
    out = {
        "scenario": getattr(scenario, "name", None),
        "duration_ns": metrics.duration,
        "bin_ns": metrics.bin_width,
        "scale": getattr(scenario, "scale", None),
        "frames": {
            "ingested": b.ingested,
            "forwarded": b.forwarded,
            "best_effort": b.best_effort,
            "dropped": {r.value: b.dropped.get(r, 0) for r in DropReason},
            "in_flight": b.in_flight,
        },
        "bytes": {
            "offered": sum(metrics.offered),
            "psfp_offered": sum(metrics.psfp_offered),
            "green": sum(metrics.colors["green"]),
            "yellow": sum(metrics.colors["yellow"]),
            "red": sum(metrics.colors["red"]),
            "forwarded": sum(metrics.forwarded_bytes),
            "recirculation_leg": b.recirc_bytes,
        },
        "links": {
            name: {"capacity_bps": l.capacity, "queue_limit_bytes": l.queue_limit,
                   "departed": l.departed, "tail_drops": l.tail_drops}
            for name, l in sorted(sim.links.items())
        },
        "latency": latency_stats(metrics.latency),
        "position_fallbacks": b.position_stats.fallbacks,
        "conservation_ok": b.conservation_holds(),
    }
    return out


def write_outputs(sim: Simulation, metrics: MetricsLog, out_dir, scenario=None) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    m = metrics
    rows = []
    for i in range(m.n_bins):
        lo, hi = m.bin_edges(i)
        span = hi - lo
        rows.append([lo, hi, _bps(m.offered[i], span), _bps(m.psfp_offered[i], span),
                     _bps(m.colors["green"][i], span), _bps(m.colors["yellow"][i], span),
                     _bps(m.colors["red"][i], span), _bps(m.forwarded_bytes[i], span),
                     _bps(m.best_effort_bytes[i], span)])
    _write_csv(out / "rates.csv",
               ["bin_start_ns", "bin_end_ns", "offered_bps", "psfp_offered_bps", "green_bps",
                "yellow_bps", "red_bps", "forwarded_bps", "best_effort_bps"], rows)

    reasons = list(DropReason)
    _write_csv(out / "drops.csv", ["bin_start_ns"] + [r.value for r in reasons],
               [[m.bin_edges(i)[0]] + [m.drops[r][i] for r in reasons] for i in range(m.n_bins)])

    _write_csv(out / "forwarded.csv", ["arrival_ns", "port", "stream_handle", "cumulative"],
               [[t, port, h, n + 1] for n, (t, port, h) in enumerate(m.forwarded)])
    _write_csv(out / "latency.csv", ["departure_ns", "source", "latency_ns"],
               [list(s) for s in m.latency])
    _write_csv(out / "sync.csv", ["time_ns", "port", "epsilon1_ns", "epsilon2_ns", "delta_ns"],
               [list(s) for s in m.sync])

    summary = summarize(sim, metrics, scenario)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")

    centers = [(m.bin_edges(i)[0] + m.bin_edges(i)[1]) // 2 for i in range(m.n_bins)]
    plots = {
        "plot_color_rates.json": {
            "x_ns": centers,
            "series_bps": {c: [r[4 + k] for r in rows] for k, c in enumerate(("green", "yellow", "red"))},
        },
        "plot_cumulative_forwarded.json": {
            "x_ns": [t for t, _ in m.cumulative_forwarded()],
            "cumulative": [n for _, n in m.cumulative_forwarded()],
        },
        "plot_latency.json": {
            "x_ns": [s.departure for s in m.latency],
            "latency_ns": [s.latency for s in m.latency],
            "source": [s.source for s in m.latency],
        },
    }
    written = [out / f for f in CSV_FILES] + [out / "summary.json"]
    for name, data in plots.items():
        (out / name).write_text(json.dumps(data, sort_keys=True) + "\n")
        written.append(out / name)
    return written


def read_rates(out_dir) -> list[dict]:
    with (Path(out_dir) / "rates.csv").open() as fh:
        return [{k: int(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def resummarize(out_dir) -> str:
    """Plain-text summary rebuilt from the CSVs of a previous run."""
    out = Path(out_dir)
    rates = read_rates(out)
    lines = [f"{out}: {len(rates)} bins"]
    if rates:
        total = rates[-1]["bin_end_ns"] - rates[0]["bin_start_ns"]
        for col in ("offered_bps", "green_bps", "yellow_bps", "red_bps", "forwarded_bps"):
            mean = sum(r[col] * (r["bin_end_ns"] - r["bin_start_ns"]) for r in rates) // total
            lines.append(f"  mean {col}: {mean}")
    with (out / "drops.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    if rows:
        for reason in (k for k in rows[0] if k != "bin_start_ns"):
            n = sum(int(r[reason]) for r in rows)
            if n:
                lines.append(f"  dropped {reason}: {n}")
    with (out / "forwarded.csv").open() as fh:
        lines.append(f"  forwarded PSFP frames: {sum(1 for _ in fh) - 1}")
    with (out / "latency.csv").open() as fh:
        lat = [int(r["latency_ns"]) for r in csv.DictReader(fh)]
    if lat:
        lines.append(f"  latency ns: min {min(lat)} median {statistics.median_low(lat)} max {max(lat)}")
    return "\n".join(lines)
