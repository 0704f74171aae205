"""Tracking-error metrics, trace serialization, and comparison tables.

SRMSE is the sample root mean square of the raw tracking error on the
trace grid, reported x10^3 in tables. The oscillation index quantifies
post-jump ringing: the RMS of the error minus its 1 s moving average,
over a 5 s window after each jump.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

T_CUT = 10.0            # "after the initial peak" report window start
JUMP_WINDOW = 5.0       # seconds inspected after each jump
SMOOTH_SPAN = 1.0       # moving-average span for the oscillation index


class EmptyWindowError(ValueError):
    """A metric window contains no trace samples."""


class MissingBaselineError(KeyError):
    """comparison_table was not given the required labeled rows."""


@dataclass(frozen=True)
class RunSummary:
    """Per-run error metrics.

    srmse / srmse_after are per-joint pairs (srmse_after restricted to
    t >= 10 s, None when the trace is shorter than that). The per-jump
    lists are ordered like the jump schedule.
    """

    srmse: tuple[float, float]
    srmse_after: tuple[float, float] | None
    peak_error_per_jump: tuple[float, ...]
    oscillation_index: tuple[float, ...]


def srmse(trace, joint: int, t_start: float = 0.0) -> float:
    """Sample RMS of the tracking error of one joint over t >= t_start."""
    mask = trace.t >= t_start
    if not np.any(mask):
        raise EmptyWindowError(
            f"no samples at t >= {t_start} (trace ends at "
            f"{trace.t[-1] if len(trace) else 'empty'})")
    e = trace.err[mask, joint]
    return float(np.sqrt(np.mean(e * e)))


def peak_error(trace, t_start: float = 0.0, t_stop: float = np.inf) -> float:
    """Largest Euclidean tracking-error norm over a time window."""
    mask = (trace.t >= t_start) & (trace.t <= t_stop)
    if not np.any(mask):
        raise EmptyWindowError(f"no samples in [{t_start}, {t_stop}]")
    return float(np.max(np.linalg.norm(trace.err[mask], axis=1)))


def oscillation_index(trace, t_start: float, t_stop: float,
                      span: float = SMOOTH_SPAN) -> float:
    """RMS of the high-passed error (error minus its moving average over
    `span` seconds) across both joints, over [t_start, t_stop]."""
    i0 = int(np.searchsorted(trace.t, t_start, side="left"))
    i1 = int(np.searchsorted(trace.t, t_stop, side="right"))
    if i0 >= i1:
        raise EmptyWindowError(f"no samples in [{t_start}, {t_stop}]")
    half = 0.5 * span
    acc = 0.0
    for i in range(i0, i1):
        j0 = int(np.searchsorted(trace.t, trace.t[i] - half, side="left"))
        j1 = int(np.searchsorted(trace.t, trace.t[i] + half, side="right"))
        avg = trace.err[j0:j1].mean(axis=0)
        hp = trace.err[i] - avg
        acc += float(hp @ hp)
    return float(np.sqrt(acc / (2 * (i1 - i0))))


def summarize_run(trace, jump_times, t_cut: float = T_CUT,
                  window: float = JUMP_WINDOW) -> RunSummary:
    """Standard per-run metrics bundle."""
    full = (srmse(trace, 0), srmse(trace, 1))
    after = None
    if len(trace) and trace.t[-1] > t_cut:
        after = (srmse(trace, 0, t_cut), srmse(trace, 1, t_cut))
    t_last = trace.t[-1] if len(trace) else 0.0
    peaks = []
    osc = []
    for tj in jump_times:
        stop = min(tj + window, t_last)
        if stop <= tj:
            continue
        mask = (trace.t >= tj) & (trace.t <= stop)
        if not np.any(mask):
            continue
        peaks.append(float(np.max(np.abs(trace.err[mask]))))
        osc.append(oscillation_index(trace, tj, stop))
    return RunSummary(srmse=full, srmse_after=after,
                      peak_error_per_jump=tuple(peaks),
                      oscillation_index=tuple(osc))


def percent_reduction(baseline: float, proposed: float) -> float:
    if baseline == 0.0:
        return 0.0
    return 100.0 * (baseline - proposed) / baseline


def comparison_table(entries, baseline: str, proposed: str,
                     after: bool = False, title: str = "SRMSE x 10^3") -> str:
    """Render labeled run summaries as a text table with a reduction row.

    entries: ordered (label, RunSummary) pairs. The reduction row is
    100*(I - II)/I per joint, I being the baseline label's SRMSE and II
    the proposed label's.
    """
    entries = list(entries)
    labels = [lab for lab, _ in entries]
    if baseline not in labels or proposed not in labels:
        raise MissingBaselineError(
            f"table needs rows {baseline!r} and {proposed!r}, got {labels}")

    def values(summary):
        vals = summary.srmse_after if after else summary.srmse
        if vals is None:
            raise EmptyWindowError("run too short for the t>10 window")
        return vals

    width = max(len(lab) for lab in labels + ["% reduction"]) + 8
    header = f"{title:<{width}}joint 1    joint 2"
    lines = [header, "-" * len(header)]
    table = dict(entries)
    for lab, summary in entries:
        v = values(summary)
        tag = " [I]" if lab == baseline else (" [II]" if lab == proposed else "")
        lines.append(f"{lab + tag:<{width}}{1e3 * v[0]:7.2f}    {1e3 * v[1]:7.2f}")
    b = values(table[baseline])
    p = values(table[proposed])
    red = [percent_reduction(b[j], p[j]) for j in (0, 1)]
    lines.append(f"{'% reduction (I -> II)':<{width}}"
                 f"{red[0]:6.1f} %   {red[1]:6.1f} %")
    return "\n".join(lines)


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{value:.12g}"


def write_trace_csv(trace, path) -> None:
    """One row per sample; vector fields get _1.._k suffixes; floats carry
    12 significant digits so a round trip stays within 1e-9."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(trace.column_names())
        for i in range(len(trace)):
            writer.writerow([_fmt(v) for v in trace.row(i)])


def read_trace_csv(path):
    """Load a trace CSV back into columnar arrays (a simulation.Trace)."""
    from .simulation import Trace

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    data = np.array(rows, dtype=float) if rows else np.zeros((0, len(header)))
    cols = {name: data[:, i] for i, name in enumerate(header)}

    def stack(prefix, n):
        if n == 0:
            return np.zeros((data.shape[0], 0))
        return np.stack([cols[f"{prefix}_{k + 1}"] for k in range(n)], axis=1)

    n_read = sum(1 for h in header if h.startswith("read_"))
    n_att = sum(1 for h in header if h.startswith("att_w_"))
    return Trace(
        t=cols["t"], x=stack("x", 2), xdot=stack("xdot", 2),
        ref=stack("ref", 2), err=stack("err", 2), ferr=stack("ferr", 2),
        tau=stack("tau", 2), u_ad=stack("u_ad", 2),
        read=stack("read", n_read), att_w=stack("att_w", n_att),
        att_dist=stack("att_dist", n_att),
        n_active=cols["n_active"].astype(np.int64),
        att_index=cols["att_index"].astype(np.int64),
        realloc_fired=cols["realloc_fired"].astype(np.int64))


def summary_entry(label: str, result) -> dict:
    """JSON-ready record of one run (stable key order via sort on dump)."""
    s = result.summary
    return {
        "label": label,
        "controller": result.scenario.controller,
        "seed": result.diagnostics["seed"],
        "srmse": list(s.srmse),
        "srmse_x1e3": [1e3 * v for v in s.srmse],
        "srmse_after": list(s.srmse_after) if s.srmse_after else None,
        "peak_error_per_jump": list(s.peak_error_per_jump),
        "oscillation_index": list(s.oscillation_index),
        "diagnostics": {k: v for k, v in result.diagnostics.items()
                        if k != "engine"},
    }


def write_summary_json(document: dict, path) -> None:
    """Deterministic JSON dump (sorted keys, stable float reprs)."""
    with open(path, "w") as fh:
        json.dump(document, fh, indent=2, sort_keys=True)
        fh.write("\n")
