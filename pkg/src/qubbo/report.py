"""Report artifacts derived from run traces.

Everything here is a pure function of the trace files: the header
records carry the space, orientation and threshold, so reports can be
(re)generated long after a run without the original config.  Internal
values are minimize-oriented; this layer restores the user's sign.

Each CSV starts with a schema comment line, then a normal header row.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .driver import RunTrace

__all__ = ["ReportBundle", "build_report", "proposal_diversity", "added_points"]

_SCHEMA = "schema=1"
_N_BINS = 20


@dataclass
class ReportBundle:
    """Paths and headline numbers produced by :func:`build_report`."""

    out_dir: Path
    files: list[str] = field(default_factory=list)
    summary: dict = field(default_factory=dict)


def _sign(trace: RunTrace) -> float:
    return -1.0 if trace.orientation == "maximize" else 1.0


def added_points(trace: RunTrace) -> tuple[np.ndarray, np.ndarray]:
    """All proposed-and-evaluated bits and their internal y, in loop order."""
    bits = [row for rec in trace.records for row in rec.proposals]
    y = [v for rec in trace.records for v in rec.y]
    width = trace.n_bits or (len(bits[0]) if bits else 0)
    return (
        np.array(bits, dtype=np.uint8).reshape(len(bits), width),
        np.array(y, dtype=np.float64),
    )


def proposal_diversity(trace: RunTrace) -> int:
    """Distinct (site, category) values among the run's proposals."""
    bits, _ = added_points(trace)
    if len(bits) == 0:
        return 0
    codes = np.atleast_2d(trace.space().decode(bits))
    return int(sum(len(np.unique(codes[:, s])) for s in range(codes.shape[1])))


def _writer(path: Path, name: str):
    fh = path.open("w", newline="")
    fh.write(f"# qubbo {name} {_SCHEMA}\n")
    return fh, csv.writer(fh)


def _fmt(v: float | None) -> str:
    return "" if v is None else repr(float(v))


def _write_r2_series(traces: list[RunTrace], path: Path) -> None:
    fh, w = _writer(path, "r2-series")
    with fh:
        w.writerow(["label", "loop", "r2"])
        for trace in traces:
            for rec in trace.records:
                w.writerow([trace.label, rec.loop, _fmt(rec.r2)])


def _write_best_so_far(traces: list[RunTrace], path: Path) -> None:
    fh, w = _writer(path, "best-so-far")
    with fh:
        w.writerow(["label", "loop", "best_y"])
        for trace in traces:
            sign = _sign(trace)
            best = min(trace.initial_y)
            w.writerow([trace.label, 0, _fmt(sign * best)])
            for rec in trace.records:
                w.writerow([trace.label, rec.loop, _fmt(sign * rec.best_so_far)])


def _write_site_histograms(traces: list[RunTrace], path: Path) -> None:
    fh, w = _writer(path, "site-histograms")
    with fh:
        w.writerow(["label", "site", "category", "count"])
        for trace in traces:
            space = trace.space()
            bits, _ = added_points(trace)
            codes = (
                np.atleast_2d(space.decode(bits))
                if len(bits)
                else np.empty((0, len(space.sites)), dtype=np.int64)
            )
            for s, site in enumerate(space.sites):
                counts = np.bincount(codes[:, s], minlength=site.cardinality)
                for cat in range(site.cardinality):
                    w.writerow([trace.label, site.name, cat, int(counts[cat])])


def _write_y_histograms(traces: list[RunTrace], path: Path) -> None:
    fh, w = _writer(path, "y-histograms")
    with fh:
        w.writerow(["label", "group", "bin_left", "bin_right", "count"])
        for trace in traces:
            sign = _sign(trace)
            initial = sign * np.asarray(trace.initial_y)
            _, y_added = added_points(trace)
            added = sign * y_added
            combined = np.concatenate([initial, added]) if len(added) else initial
            lo, hi = float(combined.min()), float(combined.max())
            if lo == hi:
                lo, hi = lo - 0.5, hi + 0.5
            edges = np.linspace(lo, hi, _N_BINS + 1)
            for group, values in (("initial", initial), ("added", added)):
                counts, _ = np.histogram(values, bins=edges)
                for k in range(_N_BINS):
                    w.writerow(
                        [trace.label, group, _fmt(edges[k]), _fmt(edges[k + 1]),
                         int(counts[k])]
                    )


def _above_threshold_rows(trace: RunTrace, threshold: float) -> list[tuple]:
    """Proposed points whose user-oriented y clears the threshold.

    Maximize runs keep y >= threshold sorted descending; minimize runs
    mirror that (y <= threshold, ascending).  Ties break on the
    assignment tuple so output order is total.
    """
    space = trace.space()
    bits, y_internal = added_points(trace)
    if len(bits) == 0:
        return []
    sign = _sign(trace)
    y_user = sign * y_internal
    codes = np.atleast_2d(space.decode(bits))
    if trace.orientation == "maximize":
        keep = y_user >= threshold
    else:
        keep = y_user <= threshold
    rows = [
        (tuple(int(c) for c in codes[k]), float(y_user[k]))
        for k in range(len(bits))
        if keep[k]
    ]
    reverse = trace.orientation == "maximize"
    rows.sort(key=lambda r: ((-r[1] if reverse else r[1]), r[0]))
    return rows


def _write_above_threshold(trace: RunTrace, threshold: float, path: Path) -> None:
    fh, w = _writer(path, "above-threshold")
    with fh:
        w.writerow(list(trace.names) + ["y"])
        for code, y in _above_threshold_rows(trace, threshold):
            w.writerow(list(code) + [_fmt(y)])


def build_report(
    traces: list[RunTrace], out_dir, threshold: float | None = None
) -> ReportBundle:
    """Write every report artifact for a set of traces.

    ``threshold`` overrides the per-trace threshold; arms without either
    get no above-threshold table.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    bundle = ReportBundle(out_dir=out_dir)

    for name, writer in (
        ("r2_series.csv", _write_r2_series),
        ("best_so_far.csv", _write_best_so_far),
        ("site_histograms.csv", _write_site_histograms),
        ("y_histograms.csv", _write_y_histograms),
    ):
        writer(traces, out_dir / name)
        bundle.files.append(name)

    for trace in traces:
        thr = threshold if threshold is not None else trace.threshold
        sign = _sign(trace)
        _, y_added = added_points(trace)
        y_all = np.concatenate([np.asarray(trace.initial_y), y_added])
        entry = {
            "sigma2": trace.sigma2,
            "n_initial": len(trace.initial_y),
            "n_added": int(len(y_added)),
            "best_y": float(sign * y_all.min()),
            "final_r2": trace.records[-1].r2 if trace.records else None,
            "diversity": proposal_diversity(trace),
            "aborted": trace.aborted,
            "solver_calls": trace.solver_calls,
        }
        if thr is not None:
            name = f"above_threshold_{trace.label}.csv"
            _write_above_threshold(trace, thr, out_dir / name)
            bundle.files.append(name)
            entry["n_above_threshold"] = len(_above_threshold_rows(trace, thr))
        bundle.summary[trace.label] = entry

    with (out_dir / "summary.json").open("w") as fh:
        json.dump(bundle.summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    bundle.files.append("summary.json")
    return bundle
