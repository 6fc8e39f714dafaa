"""Command-line front end: generate synthetic panels, run single
estimations, run full backtest campaigns, re-render report tables.

Configuration is a flat ``key = value`` text file; every key can also be
set (and overrides the file) through a CLI flag. All randomness flows from
the single ``seed`` key.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import backtest as bt
from .errors import CovlabError
from .estimators import ESTIMATOR_IDS, estimate_covariance, validate_estimator_ids
from .market_data import (
    factor_model_covariance,
    load_price_csv,
    synthesize_factor_panel,
    to_returns,
    write_price_csv,
)
from .matrix_core import SymmetricMatrix

logger = logging.getLogger(__name__)

DEFAULT_HORIZONS = (20, 40, 60, 125, 187, 250, 500)


class ConfigError(CovlabError):
    """Invalid or inconsistent campaign configuration; names the field."""


@dataclass
class CampaignConfig:
    """Everything a campaign needs, echoed into every output header."""

    data: str = ""
    index_ticker: str = ""
    n_assets: int = 90
    n_days: int = 2761
    factor_vol: float = 0.01
    beta_min: float = 0.8
    beta_max: float = 1.2
    idio_vol_min: float = 0.01
    idio_vol_max: float = 0.03
    estimators: tuple = ESTIMATOR_IDS
    horizons: tuple = DEFAULT_HORIZONS
    modes: tuple = ("unconstrained", "long_only")
    q: float = 0.9
    annualization_days: int = 252
    seed: int = 0
    workers: int = 0  # 0 means "all available cores"
    out: str = "out"
    restart_offsets: tuple = ()  # (horizon, offset) pairs

    def echo(self) -> dict:
        values = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.name in ("estimators", "horizons", "modes"):
                value = ",".join(str(v) for v in value)
            elif f.name == "restart_offsets":
                value = ",".join(f"{h}:{o}" for h, o in value)
            values[f.name] = value
        return values


def _parse_list(value: str):
    return [v.strip() for v in value.split(",") if v.strip()]


def _parse_restarts(value: str):
    pairs = []
    for item in _parse_list(value):
        horizon, sep, offset = item.partition(":")
        if not sep:
            raise ConfigError(f"restart_offsets entry {item!r} is not horizon:offset")
        try:
            pairs.append((int(horizon), int(offset)))
        except ValueError:
            raise ConfigError(f"restart_offsets entry {item!r} is not numeric") from None
    return tuple(pairs)


def parse_config_file(path) -> dict:
    """Read a flat 'key = value' config file ('#' starts a comment)."""
    raw = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            raw[key.strip()] = value.strip()
    return raw


_FIELD_PARSERS = {
    "data": str,
    "index_ticker": str,
    "n_assets": int,
    "n_days": int,
    "factor_vol": float,
    "beta_min": float,
    "beta_max": float,
    "idio_vol_min": float,
    "idio_vol_max": float,
    "estimators": lambda v: tuple(_parse_list(v)),
    "horizons": lambda v: tuple(int(h) for h in _parse_list(v)),
    "modes": lambda v: tuple(_parse_list(v)),
    "q": float,
    "annualization_days": int,
    "seed": int,
    "workers": int,
    "out": str,
    "restart_offsets": _parse_restarts,
}


def build_config(file_values: dict, overrides: dict) -> CampaignConfig:
    """Layer config file values and CLI overrides over the defaults."""
    config = CampaignConfig()
    for source in (file_values, overrides):
        for key, value in source.items():
            if value is None:
                continue
            if key not in _FIELD_PARSERS:
                raise ConfigError(f"unknown config key {key!r}")
            if isinstance(value, str):
                try:
                    value = _FIELD_PARSERS[key](value)
                except (ValueError, TypeError):
                    raise ConfigError(f"config key {key!r} has invalid value {value!r}") from None
            setattr(config, key, value)
    validate_config(config)
    return config


def validate_config(config: CampaignConfig) -> None:
    config.estimators = validate_estimator_ids(config.estimators)
    if not config.estimators:
        raise ConfigError("estimators: list is empty")
    if not config.horizons or any(h < 2 for h in config.horizons):
        raise ConfigError("horizons: every horizon must be an integer >= 2")
    for mode in config.modes:
        if mode not in bt.CONSTRAINT_MODES:
            raise ConfigError(f"modes: unknown mode {mode!r}")
    if not config.modes:
        raise ConfigError("modes: list is empty")
    if not 0.0 < config.q <= 1.0:
        raise ConfigError("q: must be in (0, 1]")
    if config.annualization_days < 1:
        raise ConfigError("annualization_days: must be positive")
    if not config.data:
        if config.n_assets < 1:
            raise ConfigError("n_assets: must be positive")
        if config.n_days < 4:
            raise ConfigError("n_days: must be at least 4")
        if config.factor_vol <= 0:
            raise ConfigError("factor_vol: must be strictly positive")
        if config.idio_vol_min < 0 or config.idio_vol_max < 0:
            raise ConfigError("idio_vol_min/idio_vol_max: must be non-negative")
    if config.workers < 0:
        raise ConfigError("workers: must be >= 0")


def synthetic_parameters(config: CampaignConfig):
    betas = np.linspace(config.beta_min, config.beta_max, config.n_assets)
    idio_vols = np.linspace(config.idio_vol_min, config.idio_vol_max, config.n_assets)
    return betas, idio_vols


def build_panel(config: CampaignConfig):
    """Materialize the campaign's return panel (CSV or synthetic)."""
    if config.data:
        prices = load_price_csv(config.data)
        index_ticker = config.index_ticker or None
        if index_ticker is None and "INDEX" in prices.tickers:
            index_ticker = "INDEX"
        return to_returns(prices, index_ticker=index_ticker)
    betas, idio_vols = synthetic_parameters(config)
    return synthesize_factor_panel(
        config.n_assets,
        config.n_days,
        betas,
        config.factor_vol,
        idio_vols,
        config.seed,
    )


def _workers(config: CampaignConfig) -> int:
    return config.workers if config.workers > 0 else (os.cpu_count() or 1)


def cmd_generate(config: CampaignConfig) -> int:
    """Write a reproducible synthetic price panel and its true covariance."""
    if config.data:
        raise ConfigError("data: generate works on synthetic specs only")
    panel = build_panel(config)
    betas, idio_vols = synthetic_parameters(config)
    os.makedirs(config.out, exist_ok=True)
    panel_path = os.path.join(config.out, "panel.csv")
    write_price_csv(panel, panel_path)
    cov_path = os.path.join(config.out, "true_covariance.csv")
    SymmetricMatrix(factor_model_covariance(betas, config.factor_vol, idio_vols)).to_csv(cov_path)
    logger.info("wrote %s and %s", panel_path, cov_path)
    return 0


def cmd_estimate(config: CampaignConfig, estimator_id: str, start: int, length: int) -> int:
    """Run one estimator on one window; emit the matrix and diagnostics."""
    panel = build_panel(config)
    window = (start, start + length)
    estimate = estimate_covariance(estimator_id, panel, window)
    os.makedirs(config.out, exist_ok=True)
    matrix_path = os.path.join(config.out, f"covariance_{estimator_id}.csv")
    estimate.matrix.to_csv(matrix_path)
    spectrum = np.linalg.eigvalsh(estimate.matrix.values)[::-1]
    diagnostics = {
        "estimator": estimator_id,
        "window": [window[0], window[1]],
        "spectrum": [float(v) for v in spectrum],
        **{k: v for k, v in estimate.diagnostics.items() if v is None or np.isscalar(v)},
    }
    diag_path = os.path.join(config.out, f"diagnostics_{estimator_id}.json")
    with open(diag_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(diagnostics, fh, indent=2)
        fh.write("\n")
    logger.info("wrote %s and %s", matrix_path, diag_path)
    return 0


def cmd_backtest(config: CampaignConfig) -> int:
    """Run the campaign and write all report files; exit code 2 flags
    partial window failures."""
    panel = build_panel(config)
    extra_offsets = {}
    for horizon, offset in config.restart_offsets:
        extra_offsets.setdefault(horizon, []).append(offset)
    report = bt.run_backtest(
        panel,
        config.estimators,
        config.horizons,
        config.modes,
        q=config.q,
        annualization_days=config.annualization_days,
        extra_offsets=extra_offsets,
        workers=_workers(config),
        config_echo=config.echo(),
    )
    os.makedirs(config.out, exist_ok=True)
    bt.write_window_csv(report, os.path.join(config.out, "windows.csv"))
    bt.write_summary_tables(report, config.out)
    bt.write_report_json(report, os.path.join(config.out, "report.json"))
    bt.write_plot_data(report, config.out)
    logger.info(
        "campaign complete: %d window results, %d skips, outputs in %s",
        len(report.windows),
        len(report.skips),
        config.out,
    )
    return 2 if report.skips else 0


def cmd_report(windows_path: str, out_dir: str) -> int:
    """Re-render summary tables from a previously written per-window CSV."""
    config, windows = bt.read_window_csv(windows_path)
    modes = []
    for w in windows:
        if w.constraint_mode not in modes:
            modes.append(w.constraint_mode)
    cells = bt.aggregate_cells(windows, [], modes_order=modes)
    report = bt.BacktestReport(
        config=config,
        metadata={"t_test_sides": 2, "baseline": bt.BASELINE_ID},
        windows=windows,
        skips=[],
        cells=cells,
    )
    write_dir = out_dir or os.path.dirname(windows_path) or "."
    paths = bt.write_summary_tables(report, write_dir)
    logger.info("re-rendered %d summary tables in %s", len(paths), write_dir)
    return 0


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--data", help="price CSV path (omit to use a synthetic panel)")
    parser.add_argument("--index-ticker", dest="index_ticker", help="price column holding the reference index")
    parser.add_argument("--n-assets", dest="n_assets", type=int)
    parser.add_argument("--n-days", dest="n_days", type=int)
    parser.add_argument("--factor-vol", dest="factor_vol", type=float)
    parser.add_argument("--beta-min", dest="beta_min", type=float)
    parser.add_argument("--beta-max", dest="beta_max", type=float)
    parser.add_argument("--idio-vol-min", dest="idio_vol_min", type=float)
    parser.add_argument("--idio-vol-max", dest="idio_vol_max", type=float)
    parser.add_argument("--estimators", help="comma-separated estimator ids")
    parser.add_argument("--horizons", help="comma-separated window lengths in days")
    parser.add_argument("--modes", help="comma-separated constraint modes")
    parser.add_argument("--q", type=float)
    parser.add_argument("--annualization-days", dest="annualization_days", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--restart-offsets", dest="restart_offsets",
                        help="extra horizon:offset passes, comma-separated")


def _config_from_args(args) -> CampaignConfig:
    file_values = parse_config_file(args.config) if args.config else {}
    overrides = {
        key: getattr(args, key)
        for key in _FIELD_PARSERS
        if hasattr(args, key) and getattr(args, key) is not None
    }
    return build_config(file_values, overrides)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="covlab",
        description="Covariance filtering and minimum-variance portfolio laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_generate = sub.add_parser("generate", help="write a synthetic price panel")
    _add_config_flags(p_generate)

    p_estimate = sub.add_parser("estimate", help="run one estimator on one window")
    _add_config_flags(p_estimate)
    p_estimate.add_argument("--estimator", required=True, help="one of: " + ", ".join(ESTIMATOR_IDS))
    p_estimate.add_argument("--start", type=int, default=0, help="window start day index")
    p_estimate.add_argument("--length", type=int, required=True, help="window length in days")

    p_backtest = sub.add_parser("backtest", help="run a full campaign")
    _add_config_flags(p_backtest)

    p_report = sub.add_parser("report", help="re-render tables from a windows CSV")
    p_report.add_argument("--windows", required=True, help="per-window CSV from a backtest run")
    p_report.add_argument("--out", default="", help="output directory (default: alongside the CSV)")

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")

    try:
        if args.command == "generate":
            return cmd_generate(_config_from_args(args))
        if args.command == "estimate":
            return cmd_estimate(_config_from_args(args), args.estimator, args.start, args.length)
        if args.command == "backtest":
            return cmd_backtest(_config_from_args(args))
        if args.command == "report":
            return cmd_report(args.windows, args.out)
        parser.error(f"unknown command {args.command!r}")
    except CovlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
