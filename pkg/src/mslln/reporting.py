"""Plot-ready tables and rendered figures from a results directory.

``render_report`` reads the manifest and delimited outputs written by
``runner.run_experiment`` and emits, under ``<results>/report/``, both
plot-ready CSV tables (log2 block maxima against dyadic level, fitted
exponents against theory, deviation trends) and the corresponding PNG
figures rendered with the Agg backend.
"""

import csv
import json
import math
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .runner import render_rows


class ReportError(ValueError):
    """Missing or unreadable results; CLI maps this to exit code 3."""


def _load_rows(results_dir, name, fmt):
    path = os.path.join(results_dir, f"{name}.{fmt}")
    if not os.path.exists(path):
        raise ReportError(f"missing results file {path}")
    with open(path, "r", encoding="utf-8") as fh:
        if fmt == "json":
            return json.load(fh)
        reader = csv.DictReader(fh)
        rows = []
        for raw in reader:
            row = {}
            for key, value in raw.items():
                try:
                    row[key] = int(value)
                except ValueError:
                    try:
                        row[key] = float(value)
                    except ValueError:
                        row[key] = value
            rows.append(row)
        return rows


def _write(out_dir, name, header, rows, written):
    path = os.path.join(out_dir, f"{name}.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_rows(header, rows, "csv"))
    written.append(path)


def _save_fig(fig, out_dir, name, written):
    path = os.path.join(out_dir, f"{name}.png")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    written.append(path)


def _ledger_report(results_dir, out_dir, fmt, prefix, written):
    ledger = _load_rows(results_dir, f"{prefix}_ledger", fmt)
    summary = _load_rows(results_dir, f"{prefix}_summary", fmt)

    # log2 of the median block maxima per (grid point, level)
    table = []
    fig, ax = plt.subplots(figsize=(6, 4))
    for point in summary:
        gi = point["grid_index"]
        by_level = {}
        for row in ledger:
            if row["grid_index"] == gi and not (
                isinstance(row["m_r"], float) and math.isnan(row["m_r"])
            ):
                by_level.setdefault(row["r"], []).append(row["m_r"])
        levels = sorted(by_level)
        logmed = [math.log2(np.median(by_level[r])) for r in levels]
        table.extend((gi, r, lm) for r, lm in zip(levels, logmed))
        ax.plot(levels, logmed, "o-", label=f"grid {gi} (fit {point['e_hat']:.3f})")
        r_fit = np.asarray([r for r in levels if point["r_lo"] <= r <= point["r_hi"]])
        ax.plot(r_fit, point["e_hat"] * (r_fit - point["r_lo"])
                + logmed[levels.index(point["r_lo"])], "--", color="gray")
    ax.set_xlabel("dyadic level r")
    ax.set_ylabel("log2 median block max")
    ax.legend(fontsize=8)
    _write(out_dir, f"{prefix}_blockmax_table", ["grid_index", "r", "log2_median_m_r"],
           table, written)
    _save_fig(fig, out_dir, f"{prefix}_blockmax", written)

    # fitted exponent against the theoretical one
    scatter = [(p["grid_index"], p["e_star"], p["e_hat"], p["stderr"]) for p in summary]
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    e_star = [s[1] for s in scatter]
    e_hat = [s[2] for s in scatter]
    err = [s[3] for s in scatter]
    ax.errorbar(e_star, e_hat, yerr=err, fmt="o")
    lo = min(0.45, min(e_star + e_hat) - 0.05)
    hi = max(1.0, max(e_star + e_hat) + 0.05)
    ax.plot([lo, hi], [lo, hi], "k--", linewidth=0.8)
    ax.set_xlabel("theoretical exponent")
    ax.set_ylabel("fitted exponent")
    _write(out_dir, f"{prefix}_exponents", ["grid_index", "e_star", "e_hat", "stderr"],
           scatter, written)
    _save_fig(fig, out_dir, f"{prefix}_exponents", written)


def _sa_report(results_dir, out_dir, fmt, written):
    trace = _load_rows(results_dir, "sa_trace", fmt)
    summary = _load_rows(results_dir, "sa_summary", fmt)
    table = []
    fig, ax = plt.subplots(figsize=(6, 4))
    for point in summary:
        gi = point["grid_index"]
        by_level = {}
        for row in trace:
            err = row["error"]
            if row["grid_index"] == gi and not (isinstance(err, float) and math.isnan(err)):
                by_level.setdefault(row["r"], []).append(err)
        levels = sorted(by_level)
        logmed = [math.log2(np.median(by_level[r])) for r in levels]
        table.extend((gi, r, lm) for r, lm in zip(levels, logmed))
        label = f"grid {gi} (gamma0 {point['gamma0']:.3f}, fit {point['gamma_hat']:.3f})"
        ax.plot(levels, logmed, "o-", label=label)
    ax.set_xlabel("dyadic level r")
    ax.set_ylabel("log2 median error")
    ax.legend(fontsize=8)
    _write(out_dir, "sa_decay_table", ["grid_index", "r", "log2_median_error"],
           table, written)
    _save_fig(fig, out_dir, "sa_decay", written)


def _autocov_report(results_dir, out_dir, fmt, written):
    rows = _load_rows(results_dir, "autocov_deviations", fmt)
    fig, ax = plt.subplots(figsize=(6, 4))
    table = []
    series = {}
    for row in rows:
        series.setdefault((row["grid_index"], row["h"]), []).append(row)
    for (gi, h), pts in sorted(series.items()):
        pts.sort(key=lambda r: r["r"])
        levels = [p["r"] for p in pts]
        meds = [p["median_abs_scaled_dev"] for p in pts]
        table.extend((gi, h, r, m) for r, m in zip(levels, meds))
        ax.semilogy(levels, meds, "o-", label=f"grid {gi}, lag {h}")
    ax.set_xlabel("dyadic level r")
    ax.set_ylabel("median |scaled deviation|")
    ax.legend(fontsize=8)
    _write(out_dir, "autocov_trend_table",
           ["grid_index", "h", "r", "median_abs_scaled_dev"], table, written)
    _save_fig(fig, out_dir, "autocov_trend", written)


def _decompose_report(results_dir, out_dir, fmt, written):
    rows = _load_rows(results_dir, "decompose_pieces", fmt)
    from .partial_sums import PIECES

    fig, ax = plt.subplots(figsize=(6, 4))
    first = [r for r in rows if r["grid_index"] == 0 and r["replication"] == 0]
    first.sort(key=lambda r: r["r"])
    levels = [r["r"] for r in first]
    for name in PIECES:
        vals = [abs(r[name]) for r in first]
        if any(v > 0 for v in vals):
            ax.semilogy(levels, [max(v, 1e-18) for v in vals], "o-", label=name)
    ax.set_xlabel("dyadic level r")
    ax.set_ylabel("|cumulative piece|")
    ax.legend(fontsize=7)
    _save_fig(fig, out_dir, "decompose_pieces", written)

    table = [(r["grid_index"], r["replication"], r["r"], r["rel_err"]) for r in rows]
    _write(out_dir, "decompose_reconstruction",
           ["grid_index", "replication", "r", "rel_err"], table, written)


def _simulate_report(results_dir, out_dir, fmt, manifest, written):
    names = [f["path"] for f in manifest["files"] if f["path"].startswith("paths_")]
    if not names:
        return
    name = sorted(names)[0]
    rows = _load_rows(results_dir, name.rsplit(".", 1)[0], fmt)
    ks = [r["k"] for r in rows[:1024]]
    fig, ax = plt.subplots(figsize=(6, 3))
    ax.plot(ks, [r["x"] for r in rows[:1024]], linewidth=0.7, label="x")
    ax.plot(ks, [r["x_bar"] for r in rows[:1024]], linewidth=0.7, label="x_bar", alpha=0.7)
    ax.set_xlabel("k")
    ax.legend(fontsize=8)
    _save_fig(fig, out_dir, "paths", written)


def render_report(results_dir, out_dir=None):
    """Render report tables and figures for a finished experiment."""
    manifest_path = os.path.join(results_dir, "manifest.json")
    if not os.path.exists(manifest_path):
        raise ReportError(f"no manifest.json under {results_dir}")
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    fmt = manifest["config_echo"].get("format", "csv")
    scenario = manifest["scenario"]
    out_dir = out_dir or os.path.join(results_dir, "report")
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if scenario in ("rates", "appell"):
        _ledger_report(results_dir, out_dir, fmt, scenario, written)
    elif scenario == "sa":
        _sa_report(results_dir, out_dir, fmt, written)
    elif scenario == "autocov":
        _autocov_report(results_dir, out_dir, fmt, written)
    elif scenario == "decompose":
        _decompose_report(results_dir, out_dir, fmt, written)
    elif scenario == "simulate":
        _simulate_report(results_dir, out_dir, fmt, manifest, written)
    return written
