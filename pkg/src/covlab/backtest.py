"""Repeated-optimization backtest across estimators, horizons and
constraint modes.

For every horizon T the panel is cut into back-to-back estimation/holding
window pairs. Each estimator produces a covariance on the estimation range,
the global-minimum-variance weights are computed with and/or without the
long-only constraint, and the portfolio is scored on the holding range:
predicted and realized risk (annualized, percent), reliability (their
absolute and relative gap), diversification (effective names and the
90 percent concentration count) and short exposure. Cells aggregate window
results into means with standard errors plus paired t-tests against the
sample-covariance baseline. All t-tests are two-sided.
"""

from __future__ import annotations

import concurrent.futures
import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import betainc

from .errors import CovlabError
from .estimators import estimate_covariance, validate_estimator_ids
from .market_data import ReturnPanel, make_windows
from .matrix_core import sample_covariance
from .optimizer import PortfolioWeights, gmv_long_only, gmv_unconstrained

BASELINE_ID = "markowitz"
CONSTRAINT_MODES = ("unconstrained", "long_only")
DEFAULT_ANNUALIZATION_DAYS = 252


def _weights_vector(weights) -> np.ndarray:
    if isinstance(weights, PortfolioWeights):
        return weights.weights
    return np.asarray(weights, dtype=float)


def predicted_risk(weights, matrix, annualization_days: int = DEFAULT_ANNUALIZATION_DAYS) -> float:
    """Annualized percent risk of ``weights`` under covariance ``matrix``."""
    w = _weights_vector(weights)
    variance = max(float(w @ matrix.values @ w), 0.0)
    return math.sqrt(variance) * math.sqrt(annualization_days) * 100.0


def realized_risk(
    weights, panel: ReturnPanel, holding_range,
    annualization_days: int = DEFAULT_ANNUALIZATION_DAYS,
) -> float:
    """Annualized percent risk measured on the holding window's sample
    covariance."""
    return predicted_risk(weights, sample_covariance(panel, holding_range), annualization_days)


def n_eff(weights) -> float:
    """Effective number of invested names, ``1 / sum(w_i^2)``."""
    w = _weights_vector(weights)
    return float(1.0 / np.sum(w**2))


def n_q(weights, q: float = 0.9) -> int:
    """Smallest number of names whose absolute weights reach the fraction
    ``q`` of total absolute weight."""
    if not 0.0 < q <= 1.0:
        raise ValueError(f"q = {q} outside (0, 1]")
    w = np.sort(np.abs(_weights_vector(weights)))[::-1]
    total = w.sum()
    cumulative = np.cumsum(w)
    hits = np.flatnonzero(cumulative >= q * total - 1e-12 * max(total, 1.0))
    return int(hits[0]) + 1


def short_ratio(weights) -> float:
    """Total absolute negative weight over total positive weight."""
    w = _weights_vector(weights)
    negative = -w[w < 0.0].sum()
    positive = w[w > 0.0].sum()
    if negative == 0.0:
        return 0.0
    return float(negative / positive)


@dataclass(frozen=True)
class TTestResult:
    """One-sample two-sided t-test on paired differences."""

    t: float
    df: int
    p: float
    stars: str
    exact: bool = False


def _stars(p: float) -> str:
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def paired_t_test(diffs) -> TTestResult:
    """Test whether the mean of the paired differences is zero.

    When every difference is identical the test is reported as exact:
    ``p = 0`` for a nonzero mean and ``p = 1`` otherwise.
    """
    diffs = np.asarray(diffs, dtype=float)
    n = diffs.size
    if n < 2:
        raise ValueError("paired t-test needs at least 2 observations")
    df = n - 1
    mean = float(diffs.mean())
    sd = float(diffs.std(ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return TTestResult(t=0.0, df=df, p=1.0, stars="", exact=True)
        t = math.copysign(math.inf, mean)
        return TTestResult(t=t, df=df, p=0.0, stars="**", exact=True)
    t = mean / (sd / math.sqrt(n))
    p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return TTestResult(t=t, df=df, p=p, stars=_stars(p))


@dataclass(frozen=True)
class WindowResult:
    """Metrics of one (estimator, constraint mode, window) cell entry."""

    estimator_id: str
    constraint_mode: str
    horizon: int
    t0: int
    predicted_risk: float
    realized_risk: float
    reliability_abs: float
    reliability_rel: float
    n_eff: float
    n_90: int
    short_ratio: float
    alpha: Optional[float]
    weights: np.ndarray


@dataclass(frozen=True)
class WindowSkip:
    """A window an estimator could not score, with the failure reason."""

    estimator_id: str
    constraint_mode: str
    horizon: int
    t0: int
    reason: str


@dataclass(frozen=True)
class CellSummary:
    """Aggregate of one (estimator, horizon, mode) cell over its windows."""

    estimator_id: str
    constraint_mode: str
    horizon: int
    n_windows: int
    n_skipped: int
    predicted_risk_mean: float
    predicted_risk_se: Optional[float]
    realized_risk_mean: float
    realized_risk_se: Optional[float]
    rel_risk_mean: Optional[float]
    rel_risk_se: Optional[float]
    reliability_abs_mean: float
    reliability_abs_se: Optional[float]
    reliability_rel_mean: float
    reliability_rel_se: Optional[float]
    n_eff_mean: float
    n_eff_se: Optional[float]
    n_90_mean: float
    n_90_se: Optional[float]
    short_ratio_mean: float
    short_ratio_se: Optional[float]
    alpha_mean: Optional[float]
    risk_test: Optional[TTestResult]
    reliability_test: Optional[TTestResult]


@dataclass
class BacktestReport:
    """Full campaign output: raw window results, skips and cell summaries."""

    config: dict
    metadata: dict
    windows: list
    skips: list
    cells: list


def _mean_se(values):
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    if values.size < 2:
        return mean, None
    return mean, float(values.std(ddof=1) / math.sqrt(values.size))


def _score_window(
    estimate, weights: PortfolioWeights, panel, pair, q, annualization_days
) -> WindowResult:
    s_pred = predicted_risk(weights, estimate.matrix, annualization_days)
    s_real = realized_risk(weights, panel, pair.holding, annualization_days)
    gap = abs(s_real - s_pred)
    return WindowResult(
        estimator_id=estimate.estimator_id,
        constraint_mode=weights.constraint_mode,
        horizon=pair.length,
        t0=pair.t0,
        predicted_risk=s_pred,
        realized_risk=s_real,
        reliability_abs=gap,
        reliability_rel=gap / s_real if s_real > 0.0 else math.inf,
        n_eff=n_eff(weights),
        n_90=n_q(weights, q),
        short_ratio=short_ratio(weights),
        alpha=estimate.alpha,
        weights=weights.weights,
    )


def _run_window_task(task):
    """Score every estimator and mode on one window pair.

    Estimation or optimization failures never abort the campaign; they are
    recorded as skips for the affected (estimator, mode) entries.
    """
    panel, pair, estimator_ids, modes, q, annualization_days, rank_tol = task
    results = []
    skips = []
    for estimator_id in estimator_ids:
        try:
            estimate = estimate_covariance(estimator_id, panel, pair.estimation)
        except CovlabError as exc:
            reason = f"{type(exc).__name__}: {exc}"
            for mode in modes:
                skips.append(
                    WindowSkip(estimator_id, mode, pair.length, pair.t0, reason)
                )
            continue
        for mode in modes:
            try:
                if mode == "unconstrained":
                    weights = gmv_unconstrained(
                        estimate.matrix, rank_tol=rank_tol, estimator_id=estimator_id
                    )
                else:
                    weights = gmv_long_only(estimate.matrix, estimator_id=estimator_id)
                results.append(
                    _score_window(estimate, weights, panel, pair, q, annualization_days)
                )
            except CovlabError as exc:
                skips.append(
                    WindowSkip(
                        estimator_id,
                        mode,
                        pair.length,
                        pair.t0,
                        f"{type(exc).__name__}: {exc}",
                    )
                )
    return results, skips


def aggregate_cells(windows, skips, modes_order=None) -> list:
    """Fold window results into per-(estimator, horizon, mode) summaries.

    Relative risk and the paired tests compare each estimator to the
    baseline on exactly the windows both scored.
    """
    baseline = {}
    for w in windows:
        if w.estimator_id == BASELINE_ID:
            baseline[(w.constraint_mode, w.horizon, w.t0)] = w

    groups = {}
    for w in windows:
        groups.setdefault((w.estimator_id, w.constraint_mode, w.horizon), []).append(w)
    skip_counts = {}
    for s in skips:
        key = (s.estimator_id, s.constraint_mode, s.horizon)
        skip_counts[key] = skip_counts.get(key, 0) + 1

    estimator_order = {e: i for i, e in enumerate(validate_estimator_ids(
        sorted({w.estimator_id for w in windows} | {s.estimator_id for s in skips})
    ))} if (windows or skips) else {}
    if modes_order is None:
        modes_order = CONSTRAINT_MODES
    mode_rank = {m: i for i, m in enumerate(modes_order)}

    keys = sorted(
        set(groups) | set(skip_counts),
        key=lambda k: (k[2], mode_rank.get(k[1], 99), estimator_order.get(k[0], 99)),
    )

    cells = []
    for key in keys:
        estimator_id, mode, horizon = key
        rows = groups.get(key, [])
        n_skipped = skip_counts.get(key, 0)
        if not rows:
            cells.append(
                CellSummary(
                    estimator_id=estimator_id, constraint_mode=mode, horizon=horizon,
                    n_windows=0, n_skipped=n_skipped,
                    predicted_risk_mean=math.nan, predicted_risk_se=None,
                    realized_risk_mean=math.nan, realized_risk_se=None,
                    rel_risk_mean=None, rel_risk_se=None,
                    reliability_abs_mean=math.nan, reliability_abs_se=None,
                    reliability_rel_mean=math.nan, reliability_rel_se=None,
                    n_eff_mean=math.nan, n_eff_se=None,
                    n_90_mean=math.nan, n_90_se=None,
                    short_ratio_mean=math.nan, short_ratio_se=None,
                    alpha_mean=None, risk_test=None, reliability_test=None,
                )
            )
            continue

        rel_values = []
        risk_diffs = []
        reliability_diffs = []
        for w in rows:
            base = baseline.get((w.constraint_mode, w.horizon, w.t0))
            if base is None or base.realized_risk <= 0.0:
                continue
            rel_values.append(1.0 - w.realized_risk / base.realized_risk)
            risk_diffs.append(base.realized_risk - w.realized_risk)
            reliability_diffs.append(base.reliability_abs - w.reliability_abs)

        pred_mean, pred_se = _mean_se([w.predicted_risk for w in rows])
        real_mean, real_se = _mean_se([w.realized_risk for w in rows])
        rel_mean, rel_se = _mean_se(rel_values) if rel_values else (None, None)
        rabs_mean, rabs_se = _mean_se([w.reliability_abs for w in rows])
        rrel_mean, rrel_se = _mean_se([w.reliability_rel for w in rows])
        neff_mean, neff_se = _mean_se([w.n_eff for w in rows])
        n90_mean, n90_se = _mean_se([w.n_90 for w in rows])
        short_mean, short_se = _mean_se([w.short_ratio for w in rows])
        alphas = [w.alpha for w in rows if w.alpha is not None]
        alpha_mean = float(np.mean(alphas)) if alphas else None

        risk_test = paired_t_test(risk_diffs) if len(risk_diffs) >= 2 else None
        reliability_test = (
            paired_t_test(reliability_diffs) if len(reliability_diffs) >= 2 else None
        )

        cells.append(
            CellSummary(
                estimator_id=estimator_id, constraint_mode=mode, horizon=horizon,
                n_windows=len(rows), n_skipped=n_skipped,
                predicted_risk_mean=pred_mean, predicted_risk_se=pred_se,
                realized_risk_mean=real_mean, realized_risk_se=real_se,
                rel_risk_mean=rel_mean, rel_risk_se=rel_se,
                reliability_abs_mean=rabs_mean, reliability_abs_se=rabs_se,
                reliability_rel_mean=rrel_mean, reliability_rel_se=rrel_se,
                n_eff_mean=neff_mean, n_eff_se=neff_se,
                n_90_mean=n90_mean, n_90_se=n90_se,
                short_ratio_mean=short_mean, short_ratio_se=short_se,
                alpha_mean=alpha_mean,
                risk_test=risk_test, reliability_test=reliability_test,
            )
        )
    return cells


_WORKER_PAYLOAD = None


def _init_worker(payload):
    global _WORKER_PAYLOAD
    _WORKER_PAYLOAD = payload


def _worker_run(pair):
    panel, estimator_ids, modes, q, annualization_days, rank_tol = _WORKER_PAYLOAD
    return _run_window_task(
        (panel, pair, estimator_ids, modes, q, annualization_days, rank_tol)
    )


def run_backtest(
    panel: ReturnPanel,
    estimator_ids,
    horizons,
    constraint_modes,
    *,
    q: float = 0.9,
    annualization_days: int = DEFAULT_ANNUALIZATION_DAYS,
    extra_offsets: Optional[dict] = None,
    rank_tol: float = 1e-10,
    workers: int = 1,
    config_echo: Optional[dict] = None,
) -> BacktestReport:
    """Run the full repeated-optimization campaign.

    ``extra_offsets`` maps a horizon to additional start offsets whose
    window passes pool into the same cells (used to densify long horizons).
    The baseline estimator is always evaluated even when not requested,
    because relative metrics and t-tests need it; only requested estimators
    are reported. Results are merged in deterministic order, so serial and
    parallel runs produce identical reports.
    """
    requested = validate_estimator_ids(estimator_ids)
    if not requested:
        raise ValueError("estimator list is empty")
    ids_to_run = validate_estimator_ids(list(requested) + [BASELINE_ID])
    modes = tuple(constraint_modes)
    if not modes:
        raise ValueError("constraint mode list is empty")
    for mode in modes:
        if mode not in CONSTRAINT_MODES:
            raise ValueError(
                f"unknown constraint mode {mode!r}; choose from {CONSTRAINT_MODES}"
            )
    horizons = [int(h) for h in horizons]
    if not horizons:
        raise ValueError("horizon list is empty")
    extra_offsets = extra_offsets or {}

    pairs = []
    for horizon in horizons:
        for offset in [0] + list(extra_offsets.get(horizon, [])):
            pairs.extend(make_windows(panel.n_days, horizon, offset))

    payload = (panel, ids_to_run, modes, q, annualization_days, rank_tol)
    if workers > 1 and len(pairs) > 1:
        with concurrent.futures.ProcessPoolExecutor(
            max_workers=workers, initializer=_init_worker, initargs=(payload,)
        ) as pool:
            chunks = list(pool.map(_worker_run, pairs, chunksize=max(1, len(pairs) // (workers * 4))))
    else:
        chunks = [_run_window_task((panel, pair, *payload[1:])) for pair in pairs]

    all_windows = []
    skips = []
    for chunk_windows, chunk_skips in chunks:
        all_windows.extend(chunk_windows)
        skips.extend(s for s in chunk_skips if s.estimator_id in requested)

    # The baseline always runs (relative metrics need it) but only the
    # requested estimators are reported.
    windows = [w for w in all_windows if w.estimator_id in requested]
    cells = [
        c
        for c in aggregate_cells(all_windows, skips, modes_order=modes)
        if c.estimator_id in requested
    ]

    config = dict(config_echo) if config_echo else {}
    for key, value in (
        ("estimators", ",".join(requested)),
        ("horizons", ",".join(str(h) for h in horizons)),
        ("modes", ",".join(modes)),
        ("q", q),
        ("annualization_days", annualization_days),
    ):
        config.setdefault(key, value)
    metadata = {
        "t_test_sides": 2,
        "baseline": BASELINE_ID,
        "n_windows": len(windows),
        "n_skips": len(skips),
    }
    return BacktestReport(
        config=config, metadata=metadata, windows=windows, skips=skips, cells=cells
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def _config_header(config: dict) -> str:
    return "".join(f"# {key} = {value}\n" for key, value in config.items())


WINDOW_CSV_COLUMNS = (
    "estimator,mode,horizon,t0,predicted_risk,realized_risk,reliability_abs,"
    "reliability_rel,n_eff,n_90,short_ratio,alpha,weights"
)


def write_window_csv(report: BacktestReport, path) -> None:
    """Per-window CSV with every metric and the weight vector."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_config_header(report.config))
        fh.write(WINDOW_CSV_COLUMNS + "\n")
        for w in report.windows:
            weights = ";".join(repr(float(v)) for v in w.weights)
            fh.write(
                ",".join(
                    [
                        w.estimator_id,
                        w.constraint_mode,
                        str(w.horizon),
                        str(w.t0),
                        _fmt(w.predicted_risk),
                        _fmt(w.realized_risk),
                        _fmt(w.reliability_abs),
                        _fmt(w.reliability_rel),
                        _fmt(w.n_eff),
                        str(w.n_90),
                        _fmt(w.short_ratio),
                        _fmt(w.alpha),
                        weights,
                    ]
                )
                + "\n"
            )


def read_window_csv(path):
    """Read back a per-window CSV written by :func:`write_window_csv`."""
    config = {}
    windows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                config[key.strip()] = value.strip()
                continue
            if line.startswith("estimator,"):
                continue
            parts = line.split(",")
            weights = np.array([float(v) for v in parts[12].split(";")]) if parts[12] else np.array([])
            windows.append(
                WindowResult(
                    estimator_id=parts[0],
                    constraint_mode=parts[1],
                    horizon=int(parts[2]),
                    t0=int(parts[3]),
                    predicted_risk=float(parts[4]),
                    realized_risk=float(parts[5]),
                    reliability_abs=float(parts[6]),
                    reliability_rel=float(parts[7]),
                    n_eff=float(parts[8]),
                    n_90=int(parts[9]),
                    short_ratio=float(parts[10]),
                    alpha=float(parts[11]) if parts[11] else None,
                    weights=weights,
                )
            )
    return config, windows


SUMMARY_CSV_COLUMNS = (
    "estimator,n_windows,n_skipped,predicted_risk_mean,predicted_risk_se,"
    "realized_risk_mean,realized_risk_se,risk_stars,rel_risk_pct_mean,"
    "rel_risk_pct_se,reliability_abs_mean,reliability_abs_se,reliability_stars,"
    "n_eff_mean,n_eff_se,n_90_mean,n_90_se,short_ratio_mean,short_ratio_se,"
    "alpha_mean"
)


def write_summary_tables(report: BacktestReport, out_dir) -> list:
    """One paper-layout table per (horizon, mode); returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    combos = []
    for cell in report.cells:
        key = (cell.horizon, cell.constraint_mode)
        if key not in combos:
            combos.append(key)
    paths = []
    for horizon, mode in combos:
        path = os.path.join(out_dir, f"summary_T{horizon}_{mode}.csv")
        rows = [
            c for c in report.cells
            if c.horizon == horizon and c.constraint_mode == mode
        ]
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(_config_header(report.config))
            fh.write(SUMMARY_CSV_COLUMNS + "\n")
            for c in rows:
                rel_pct = None if c.rel_risk_mean is None else 100.0 * c.rel_risk_mean
                rel_pct_se = None if c.rel_risk_se is None else 100.0 * c.rel_risk_se
                fh.write(
                    ",".join(
                        [
                            c.estimator_id,
                            str(c.n_windows),
                            str(c.n_skipped),
                            _fmt(c.predicted_risk_mean),
                            _fmt(c.predicted_risk_se),
                            _fmt(c.realized_risk_mean),
                            _fmt(c.realized_risk_se),
                            c.risk_test.stars if c.risk_test else "",
                            _fmt(rel_pct),
                            _fmt(rel_pct_se),
                            _fmt(c.reliability_abs_mean),
                            _fmt(c.reliability_abs_se),
                            c.reliability_test.stars if c.reliability_test else "",
                            _fmt(c.n_eff_mean),
                            _fmt(c.n_eff_se),
                            _fmt(c.n_90_mean),
                            _fmt(c.n_90_se),
                            _fmt(c.short_ratio_mean),
                            _fmt(c.short_ratio_se),
                            _fmt(c.alpha_mean),
                        ]
                    )
                    + "\n"
                )
        paths.append(path)
    return paths


def _jsonable(value):
    if isinstance(value, float) and (math.isnan(value) or math.isinf(value)):
        return _fmt(value)
    return value


def write_report_json(report: BacktestReport, path) -> None:
    """Full-detail JSON: config, metadata, cells with t-tests, skips."""
    def test_dict(test):
        if test is None:
            return None
        return {
            "t": _jsonable(test.t),
            "df": test.df,
            "p": _jsonable(test.p),
            "stars": test.stars,
            "exact": test.exact,
        }

    payload = {
        "config": {k: _jsonable(v) for k, v in report.config.items()},
        "metadata": report.metadata,
        "cells": [
            {
                "estimator": c.estimator_id,
                "mode": c.constraint_mode,
                "horizon": c.horizon,
                "n_windows": c.n_windows,
                "n_skipped": c.n_skipped,
                "predicted_risk": [_jsonable(c.predicted_risk_mean), _jsonable(c.predicted_risk_se)],
                "realized_risk": [_jsonable(c.realized_risk_mean), _jsonable(c.realized_risk_se)],
                "rel_risk": [_jsonable(c.rel_risk_mean), _jsonable(c.rel_risk_se)],
                "reliability_abs": [_jsonable(c.reliability_abs_mean), _jsonable(c.reliability_abs_se)],
                "reliability_rel": [_jsonable(c.reliability_rel_mean), _jsonable(c.reliability_rel_se)],
                "n_eff": [_jsonable(c.n_eff_mean), _jsonable(c.n_eff_se)],
                "n_90": [_jsonable(c.n_90_mean), _jsonable(c.n_90_se)],
                "short_ratio": [_jsonable(c.short_ratio_mean), _jsonable(c.short_ratio_se)],
                "alpha": _jsonable(c.alpha_mean),
                "risk_test": test_dict(c.risk_test),
                "reliability_test": test_dict(c.reliability_test),
            }
            for c in report.cells
        ],
        "skips": [
            {
                "estimator": s.estimator_id,
                "mode": s.constraint_mode,
                "horizon": s.horizon,
                "t0": s.t0,
                "reason": s.reason,
            }
            for s in report.skips
        ],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=False)
        fh.write("\n")


def write_plot_data(report: BacktestReport, out_dir) -> list:
    """Plot-ready CSV series: mean realized risk and mean short ratio per
    horizon, plus the per-window realized-risk time series."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    modes = []
    for c in report.cells:
        if c.constraint_mode not in modes:
            modes.append(c.constraint_mode)

    for mode in modes:
        path = os.path.join(out_dir, f"risk_vs_horizon_{mode}.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(_config_header(report.config))
            fh.write("estimator,horizon,realized_risk_mean,realized_risk_se\n")
            for c in report.cells:
                if c.constraint_mode == mode:
                    fh.write(
                        f"{c.estimator_id},{c.horizon},"
                        f"{_fmt(c.realized_risk_mean)},{_fmt(c.realized_risk_se)}\n"
                    )
        paths.append(path)

        path = os.path.join(out_dir, f"realized_risk_timeseries_{mode}.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(_config_header(report.config))
            fh.write("estimator,horizon,t0,realized_risk\n")
            for w in report.windows:
                if w.constraint_mode == mode:
                    fh.write(
                        f"{w.estimator_id},{w.horizon},{w.t0},{_fmt(w.realized_risk)}\n"
                    )
        paths.append(path)

        path = os.path.join(out_dir, f"short_ratio_vs_horizon_{mode}.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(_config_header(report.config))
            fh.write("estimator,horizon,short_ratio_mean,short_ratio_se\n")
            for c in report.cells:
                if c.constraint_mode == mode:
                    fh.write(
                        f"{c.estimator_id},{c.horizon},"
                        f"{_fmt(c.short_ratio_mean)},{_fmt(c.short_ratio_se)}\n"
                    )
        paths.append(path)
    return paths
