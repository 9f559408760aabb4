"""Deterministic execution of replication grids and report persistence.

Every replication is keyed by ``mix_seed(base_seed, grid_index, rep_index)``
and computed by a pure task function, so outputs depend only on
(config, base_seed) and are byte-identical across runs and across ``jobs``
settings (tasks are gathered in index order before aggregation).  Delimited
report bodies carry no timestamps; wall time lives in the manifest only.
"""

import csv
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .coefficients import CAUSAL, CoefficientSpec, coefficient_inner
from .config import build_pair
from .estimators import (
    appell2_sums,
    autocov_pair,
    empirical_exponent,
    heavy_tail_witness,
    normalized_deviation,
    theoretical_exponent,
)
from .innovations import (
    IDENTICAL,
    InnovationStream,
    cross_moment,
    cross_moment_matrix,
    moment,
    product_tail_alpha,
    sample_pair_sequence,
)
from .linear_process import PathConfig, generate_pair_paths, path_from_innovations
from .partial_sums import AnalyticMean, centered_ledger, decompose, outer_series
from .seeding import mix_seed
from .stochastic_approx import SAConfig, sa_decay_exponent, sa_iterate, sa_target, sa_theoretical_rate


# --------------------------------------------------------------- formatting

def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def render_rows(header, rows, fmt):
    """Render a report body as CSV text or a JSON array of row objects."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
        return buf.getvalue()
    payload = [
        {key: (float(v) if isinstance(v, np.floating) else int(v) if isinstance(v, np.integer) else v)
         for key, v in zip(header, row)}
        for row in rows
    ]
    return json.dumps(payload, indent=1, sort_keys=True) + "\n"


# ------------------------------------------------------------ scenario tasks

def _kernel(point, default_sided="two_sided"):
    return CoefficientSpec(
        sigma=float(point["sigma"]),
        sidedness=point.get("sidedness", default_sided),
        scale=float(point.get("scale", 1.0)),
    )


def _kernel_bar(point, default_sided="two_sided"):
    return CoefficientSpec(
        sigma=float(point.get("sigma_bar", point["sigma"])),
        sidedness=point.get("sidedness", default_sided),
        scale=float(point.get("scale", 1.0)),
    )


def _sa_joint_kernel(point):
    h_true = float(point.get("h_true", 1.0))
    noise = float(point.get("noise", 1.0))
    scale = float(point.get("scale", 0.45))
    return CoefficientSpec.with_direction(
        float(point["sigma"]), "two_sided", scale, [[1.0, 0.0], [h_true, noise]]
    )


def _rep_task(task):
    """One replication of one grid point (pure function of the task dict)."""
    scenario = task["scenario"]
    point = task["point"]
    levels = task["levels"]
    half = task["half_width"]
    seed = task["seed"]
    n = 2**levels

    if scenario in ("rates", "appell", "simulate"):
        spec, spec_bar, coupling = build_pair(point)
        default_sided = CAUSAL if scenario == "appell" else "two_sided"
        coef = _kernel(point, default_sided)
        coef_bar = _kernel_bar(point, default_sided)
        stream = InnovationStream(spec, spec_bar, coupling, seed=seed,
                                  length=n + 2 * half, dim=1)
        pc = PathConfig(coef, coef_bar, stream, n=n, half_width=half)
        x, x_bar = generate_pair_paths(pc)
        if scenario == "simulate":
            return {"x": x[:, 0], "x_bar": x_bar[:, 0]}
        if scenario == "appell":
            mu2 = moment(spec, 2) * coefficient_inner(coef, coef, 0, half).value
            return {"ledger": appell2_sums(x[:, 0], mu2, levels)}
        mean = AnalyticMean(
            matrix=np.array([[cross_moment(spec, spec_bar, coupling)
                              * coefficient_inner(coef, coef_bar, 0, half).value]]),
            remainder_bound=0.0,
        )
        return {"ledger": centered_ledger(outer_series(x, x_bar), mean, levels)}

    if scenario == "decompose":
        spec, spec_bar, coupling = build_pair(point)
        coef = _kernel(point)
        coef_bar = _kernel_bar(point)
        stream = InnovationStream(spec, spec_bar, coupling, seed=seed,
                                  length=n + 2 * half, dim=1)
        xi, xi_bar = sample_pair_sequence(stream)
        cm = cross_moment(spec, spec_bar, coupling)
        dec = decompose(xi[:, 0], xi_bar[:, 0], coef, coef_bar, n,
                        float(point["nu"]), half, cm)
        x = path_from_innovations(xi[: n + 2 * half], coef, n, half)[:, 0]
        x_bar = path_from_innovations(xi_bar[: n + 2 * half], coef_bar, n, half)[:, 0]
        direct = np.cumsum(x * x_bar - dec.centering["diagonal"])
        recon = np.cumsum(dec.total())
        scale = np.maximum.reduce(
            [np.abs(direct), np.cumsum(np.abs(x * x_bar)), np.full(n, 1e-30)]
        )
        rel = np.abs(recon - direct) / scale
        checkpoints = 2 ** np.arange(levels + 1) - 1
        out = {
            "checkpoints": checkpoints + 1,
            "pieces": {k: np.cumsum(v)[checkpoints] for k, v in dec.pieces.items()},
            "direct": direct[checkpoints],
            "rel_err": rel[checkpoints],
            "witness_diagonal": heavy_tail_witness(dec.pieces["diagonal"], levels),
            "witness_in_window": heavy_tail_witness(dec.pieces["in_window_off_diag"], levels),
        }
        return out

    if scenario == "sa":
        spec, _, _ = build_pair(point)
        joint = _sa_joint_kernel(point)
        cfg = SAConfig(chi=float(point["chi"]), joint_coef=joint, spec=spec,
                       levels=levels, seed=seed, half_width=half)
        return {"trace": sa_iterate(cfg, target=task.get("sa_target"))}

    if scenario == "autocov":
        spec, _, _ = build_pair(point)
        coef = CoefficientSpec(sigma=float(point["sigma"]), sidedness=CAUSAL,
                               scale=float(point.get("scale", 1.0)))
        lags = [int(h) for h in point["lags"]]
        h_max = max(lags)
        stream = InnovationStream(spec, spec, IDENTICAL, seed=seed,
                                  length=n + h_max + 2 * half, dim=1)
        xi, _ = sample_pair_sequence(stream)
        ext = path_from_innovations(xi[: n + h_max + 2 * half], coef, n + h_max, half)[:, 0]
        iota = moment(spec, 2)
        out = {}
        for h in lags:
            gamma_pop = iota * coefficient_inner(coef, coef, h, half).value
            pair = autocov_pair(ext, n, h, gamma_pop)
            out[h] = pair.deviations
        return {"deviations": out}

    raise ValueError(f"unknown scenario {scenario!r}")


# ------------------------------------------------------------- aggregation

def _ledger_rows(grid_index, ledgers):
    rows = []
    for rep, led in enumerate(ledgers):
        for r in range(led.levels + 1):
            m_r = led.block_max[r] if r < led.levels else math.nan
            rows.append(
                (grid_index, rep, r, int(led.checkpoints[r]), led.sums[r, 0, 0], m_r)
            )
    return rows


def _aggregate_rates(config, grid_index, point, payloads):
    spec, spec_bar, coupling = build_pair(point)
    tail = product_tail_alpha(spec, spec_bar, coupling)
    sigma = float(point["sigma"])
    sigma_bar = float(point.get("sigma_bar", sigma))
    theo = theoretical_exponent(sigma, sigma_bar, tail.alpha)
    ledgers = [p["ledger"] for p in payloads]
    est = empirical_exponent(ledgers, min_replications=min(32, len(ledgers)))
    summary = (
        grid_index, sigma, sigma_bar, tail.alpha, theo.regime, theo.exponent,
        est.slope, est.stderr, est.r_lo, est.r_hi, len(ledgers),
        2**config.levels, config.base_seed, theo.near_bifurcation,
    )
    return summary, _ledger_rows(grid_index, ledgers)


def _aggregate_appell(config, grid_index, point, payloads):
    spec, _, _ = build_pair(point)
    tail = product_tail_alpha(spec, spec, IDENTICAL)
    sigma = float(point["sigma"])
    theo = theoretical_exponent(sigma, sigma, tail.alpha)
    ledgers = [p["ledger"] for p in payloads]
    est = empirical_exponent(ledgers, min_replications=min(32, len(ledgers)))
    summary = (
        grid_index, sigma, tail.alpha, theo.regime, theo.exponent,
        est.slope, est.stderr, est.r_lo, est.r_hi, len(ledgers),
        2**config.levels, config.base_seed, theo.near_bifurcation,
    )
    return summary, _ledger_rows(grid_index, ledgers)


def run_experiment(config, out_dir):
    """Run all grid points and persist reports; returns the manifest dict.

    The manifest records every written file with its SHA-256 hash and row
    count; per-grid-point failures are recorded rather than raised, and the
    caller maps a nonempty failure list to a nonzero exit code.
    """
    config.validate()
    started = time.time()
    half = config.resolved_half_width()
    tasks = []
    for gi, point in enumerate(config.grid):
        extra = {}
        if config.scenario == "sa":
            spec, _, _ = build_pair(point)
            joint = _sa_joint_kernel(point)
            extra["sa_target"] = sa_target(
                joint, cross_moment_matrix(spec, spec, IDENTICAL, 2), half
            )
        for rep in range(config.replications):
            tasks.append({
                "scenario": config.scenario,
                "point": point,
                "levels": config.levels,
                "half_width": half,
                "seed": mix_seed(config.base_seed, gi, rep),
                "grid_index": gi,
                **extra,
            })

    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_rep_task, tasks, chunksize=1))
    else:
        results = [_rep_task(t) for t in tasks]

    by_grid = {}
    for task, payload in zip(tasks, results):
        by_grid.setdefault(task["grid_index"], []).append(payload)

    files = {}
    failures = []
    scenario = config.scenario
    for gi, point in enumerate(config.grid):
        payloads = by_grid[gi]
        try:
            _aggregate_into_files(config, scenario, gi, point, payloads, files)
        except Exception as exc:  # record and continue with other grid points
            failures.append({"grid_index": gi, "error": f"{type(exc).__name__}: {exc}"})

    os.makedirs(out_dir, exist_ok=True)
    manifest = {
        "version": __version__,
        "scenario": scenario,
        "config_echo": config.to_dict(),
        "files": [],
        "failures": failures,
        "wall_time_s": None,
    }
    ext = "csv" if config.format == "csv" else "json"
    for name in sorted(files):
        header, rows = files[name]
        body = render_rows(header, rows, config.format)
        path = os.path.join(out_dir, f"{name}.{ext}")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(body)
        manifest["files"].append({
            "path": os.path.basename(path),
            "sha256": hashlib.sha256(body.encode()).hexdigest(),
            "rows": len(rows),
        })
    manifest["wall_time_s"] = round(time.time() - started, 3)
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return manifest


def _aggregate_into_files(config, scenario, gi, point, payloads, files):
    if scenario == "rates":
        summary, ledger_rows = _aggregate_rates(config, gi, point, payloads)
        files.setdefault("rates_summary", (
            ["grid_index", "sigma", "sigma_bar", "alpha", "regime", "e_star",
             "e_hat", "stderr", "r_lo", "r_hi", "reps", "n_max", "seed",
             "near_bifurcation"], []))[1].append(summary)
        files.setdefault("rates_ledger", (
            ["grid_index", "replication", "r", "n_r", "s_00", "m_r"], []
        ))[1].extend(ledger_rows)
    elif scenario == "appell":
        summary, ledger_rows = _aggregate_appell(config, gi, point, payloads)
        files.setdefault("appell_summary", (
            ["grid_index", "sigma", "alpha", "regime", "e_star", "e_hat",
             "stderr", "r_lo", "r_hi", "reps", "n_max", "seed",
             "near_bifurcation"], []))[1].append(summary)
        files.setdefault("appell_ledger", (
            ["grid_index", "replication", "r", "n_r", "s_00", "m_r"], []
        ))[1].extend(ledger_rows)
    elif scenario == "decompose":
        from .partial_sums import PIECES

        header = (["grid_index", "replication", "r", "n_r"]
                  + list(PIECES) + ["total", "direct", "rel_err",
                                    "witness_diagonal", "witness_in_window"])
        rows = files.setdefault("decompose_pieces", (header, []))[1]
        for rep, p in enumerate(payloads):
            for idx, n_r in enumerate(p["checkpoints"]):
                pieces = [p["pieces"][name][idx] for name in PIECES]
                rows.append((gi, rep, idx, int(n_r), *pieces, sum(pieces),
                             p["direct"][idx], p["rel_err"][idx],
                             p["witness_diagonal"][idx], p["witness_in_window"][idx]))
    elif scenario == "sa":
        spec, _, _ = build_pair(point)
        tail = product_tail_alpha(spec, spec, IDENTICAL)
        rate = sa_theoretical_rate(float(point["chi"]), float(point["sigma"]), tail.alpha)
        traces = [p["trace"] for p in payloads]
        clean = [t for t in traces if not t.aborted]
        aborted = len(traces) - len(clean)
        gamma_hat, stderr = (math.nan, math.nan)
        if len(clean) >= 2:
            gamma_hat, stderr = sa_decay_exponent(clean, top_levels=min(5, config.levels + 1))
        files.setdefault("sa_summary", (
            ["grid_index", "chi", "sigma", "alpha", "gamma0", "gamma_hat",
             "stderr", "reps", "n_max", "aborted_count", "seed"], []
        ))[1].append((gi, float(point["chi"]), float(point["sigma"]), tail.alpha,
                      rate.gamma0, gamma_hat, stderr, len(traces),
                      2**config.levels, aborted, config.base_seed))
        trace_rows = files.setdefault("sa_trace", (
            ["grid_index", "replication", "r", "n_r", "error"], []))[1]
        for rep, t in enumerate(traces):
            for r in range(config.levels + 1):
                trace_rows.append((gi, rep, r, int(t.checkpoints[r]), t.errors[r]))
    elif scenario == "autocov":
        sigma = float(point["sigma"])
        p_exp = float(point["p"])
        spec, _, _ = build_pair(point)
        tail = product_tail_alpha(spec, spec, IDENTICAL)
        p_max = min(1.0 / (2.0 - 2.0 * sigma) if sigma < 1 else math.inf, tail.alpha, 2.0)
        lags = [int(h) for h in point["lags"]]
        checkpoints = 2 ** np.arange(config.levels + 1)
        dev_rows = files.setdefault("autocov_deviations", (
            ["grid_index", "h", "p", "r", "n_r", "median_abs_scaled_dev",
             "admissible"], []))[1]
        sum_rows = files.setdefault("autocov_summary", (
            ["grid_index", "h", "p", "p_max", "admissible", "trend_levels",
             "strictly_decreasing", "final_median_abs_scaled_dev", "seed"], []))[1]
        for h in lags:
            scaled = []
            admissible = None
            for payload in payloads:
                dev = payload["deviations"][h]
                vals, admissible = normalized_deviation(
                    checkpoints, p_exp, dev + 0.0, 0.0, p_max=p_max
                )
                scaled.append(np.abs(vals))
            med = np.median(np.stack(scaled), axis=0)
            for r in range(config.levels + 1):
                dev_rows.append((gi, h, p_exp, r, int(checkpoints[r]), med[r], admissible))
            top = med[-4:]
            sum_rows.append((gi, h, p_exp, p_max, admissible, 4,
                             bool(np.all(np.diff(top) < 0)), med[-1], config.base_seed))
    elif scenario == "simulate":
        for rep, payload in enumerate(payloads):
            name = f"paths_g{gi}_r{rep}"
            header = ["k", "x", "x_bar"]
            rows = [(k + 1, payload["x"][k], payload["x_bar"][k])
                    for k in range(len(payload["x"]))]
            files[name] = (header, rows)
    else:
        raise ValueError(f"unknown scenario {scenario!r}")
