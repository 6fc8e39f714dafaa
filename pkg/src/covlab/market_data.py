"""Price/return panel loading, validation, synthesis and window slicing.

A panel is a dense assets-by-days matrix. Prices enter through a strict CSV
reader (missing or non-positive cells are hard errors: estimator comparisons
require identical inputs), returns are simple daily returns, and the
synthetic generator draws from a Gaussian one-factor model so the population
covariance is known in closed form.
"""

from __future__ import annotations

import csv
import datetime as _dt
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import CovlabError


class MissingCell(CovlabError):
    """A CSV cell is absent or unparseable; names the row and column."""


class NonPositivePrice(CovlabError):
    """A price is zero or negative; names the ticker and date."""


class UnsortedDates(CovlabError):
    """CSV rows are not in strictly increasing date order."""


class InvalidDimension(CovlabError):
    """A vector argument has the wrong length or an invalid value."""


class WindowTooLong(CovlabError):
    """No estimation/holding window pair fits in the available days."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PricePanel:
    """Close prices for N assets over L+1 trading days."""

    tickers: tuple
    dates: tuple
    prices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "prices", _freeze(self.prices))
        n, days = self.prices.shape
        if n != len(self.tickers):
            raise InvalidDimension(
                f"{len(self.tickers)} tickers but {n} price rows"
            )
        if days != len(self.dates):
            raise InvalidDimension(f"{len(self.dates)} dates but {days} price columns")
        if not np.all(np.isfinite(self.prices)):
            raise MissingCell("price matrix contains non-finite entries")
        if np.any(self.prices <= 0.0):
            i, j = np.argwhere(self.prices <= 0.0)[0]
            raise NonPositivePrice(
                f"non-positive price for {self.tickers[i]} on {self.dates[j]}"
            )
        for k in range(1, len(self.dates)):
            if not self.dates[k - 1] < self.dates[k]:
                raise UnsortedDates(
                    f"dates not strictly increasing at row {k} ({self.dates[k]})"
                )

    @property
    def n_assets(self) -> int:
        return self.prices.shape[0]

    @property
    def n_days(self) -> int:
        return self.prices.shape[1]


@dataclass(frozen=True)
class ReturnPanel:
    """Daily simple returns for N assets over L days.

    ``index_returns``, when present, is the reference-index return series
    used by single-index style estimators.
    """

    tickers: tuple
    dates: tuple
    returns: np.ndarray
    index_returns: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "returns", _freeze(self.returns))
        n, days = self.returns.shape
        if n != len(self.tickers):
            raise InvalidDimension(f"{len(self.tickers)} tickers but {n} return rows")
        if days != len(self.dates):
            raise InvalidDimension(f"{len(self.dates)} dates but {days} return columns")
        if days < 2:
            raise InvalidDimension("a return panel needs at least 2 days")
        if not np.all(np.isfinite(self.returns)):
            raise InvalidDimension("return matrix contains non-finite entries")
        if self.index_returns is not None:
            idx = _freeze(self.index_returns)
            if idx.shape != (days,):
                raise InvalidDimension(
                    f"index series has shape {idx.shape}, expected ({days},)"
                )
            object.__setattr__(self, "index_returns", idx)

    @property
    def n_assets(self) -> int:
        return self.returns.shape[0]

    @property
    def n_days(self) -> int:
        return self.returns.shape[1]


@dataclass(frozen=True)
class WindowPair:
    """Back-to-back estimation and holding ranges of equal length T.

    Ranges are half-open ``(start, stop)`` day-index pairs; the holding
    range starts exactly where the estimation range ends (day ``t0``).
    """

    estimation: tuple
    holding: tuple

    def __post_init__(self):
        e0, e1 = self.estimation
        h0, h1 = self.holding
        if e1 - e0 != h1 - h0:
            raise InvalidDimension("estimation and holding ranges differ in length")
        if e1 - e0 < 2:
            raise InvalidDimension("window length must be at least 2 days")
        if h0 != e1:
            raise InvalidDimension("holding range must start where estimation ends")

    @property
    def length(self) -> int:
        return self.estimation[1] - self.estimation[0]

    @property
    def t0(self) -> int:
        return self.holding[0]


def load_price_csv(path) -> PricePanel:
    """Read a close-price panel from CSV.

    Expected layout: header ``date,<ticker>,...`` then one row per trading
    day with ISO-8601 dates and strictly positive decimal prices. Rows must
    already be in date order; out-of-order, missing or non-positive cells
    raise rather than being repaired.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MissingCell(f"{path}: file is empty") from None
        if not header or header[0].strip() != "date":
            raise MissingCell(f"{path}: header must start with 'date'")
        tickers = [h.strip() for h in header[1:]]
        if not tickers or any(not t for t in tickers):
            raise MissingCell(f"{path}: empty ticker name in header")

        dates = []
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(tickers) + 1:
                raise MissingCell(
                    f"{path}: line {lineno} has {len(row)} fields, expected {len(tickers) + 1}"
                )
            date = row[0].strip()
            if not date:
                raise MissingCell(f"{path}: line {lineno} has an empty date")
            values = []
            for ticker, cell in zip(tickers, row[1:]):
                cell = cell.strip()
                if not cell:
                    raise MissingCell(f"{path}: missing price for {ticker} on {date}")
                try:
                    value = float(cell)
                except ValueError:
                    raise MissingCell(
                        f"{path}: unreadable price {cell!r} for {ticker} on {date}"
                    ) from None
                if not np.isfinite(value):
                    raise MissingCell(f"{path}: non-finite price for {ticker} on {date}")
                if value <= 0.0:
                    raise NonPositivePrice(
                        f"non-positive price {value} for {ticker} on {date}"
                    )
                values.append(value)
            if dates and not dates[-1] < date:
                raise UnsortedDates(
                    f"{path}: date {date} on line {lineno} not after {dates[-1]}"
                )
            dates.append(date)
            rows.append(values)

    if len(dates) < 2:
        raise MissingCell(f"{path}: need at least two price rows")
    return PricePanel(tickers=tickers, dates=dates, prices=np.array(rows).T)


def to_returns(panel: PricePanel, index_ticker: Optional[str] = None) -> ReturnPanel:
    """Convert close prices to simple daily returns.

    ``returns[i, t] = prices[i, t+1] / prices[i, t] - 1``. If
    ``index_ticker`` is given, that row is removed from the asset set and
    exposed as ``index_returns``.
    """
    rets = panel.prices[:, 1:] / panel.prices[:, :-1] - 1.0
    dates = panel.dates[1:]
    tickers = list(panel.tickers)
    index_returns = None
    if index_ticker is not None:
        if index_ticker not in tickers:
            raise InvalidDimension(f"index ticker {index_ticker!r} not in the panel")
        pos = tickers.index(index_ticker)
        index_returns = rets[pos]
        rets = np.delete(rets, pos, axis=0)
        tickers.pop(pos)
    return ReturnPanel(
        tickers=tickers, dates=dates, returns=rets, index_returns=index_returns
    )


def synthesize_factor_panel(
    n_assets: int,
    n_days: int,
    betas,
    factor_vol: float,
    idio_vols,
    seed: int,
) -> ReturnPanel:
    """Draw a Gaussian one-factor return panel.

    Returns follow ``r[i, t] = betas[i] * f[t] + eps[i, t]`` with
    ``f ~ N(0, factor_vol^2)`` and ``eps[i] ~ N(0, idio_vols[i]^2)``, all
    i.i.d. over time. The factor series is exposed as ``index_returns``.
    Output is bit-for-bit reproducible for a fixed seed.
    """
    if n_assets < 1 or n_days < 2:
        raise InvalidDimension("need n_assets >= 1 and n_days >= 2")
    betas = np.asarray(betas, dtype=float)
    if betas.ndim == 0:
        betas = np.full(n_assets, float(betas))
    if betas.shape != (n_assets,):
        raise InvalidDimension(f"betas has shape {betas.shape}, expected ({n_assets},)")
    idio_vols = np.asarray(idio_vols, dtype=float)
    if idio_vols.ndim == 0:
        idio_vols = np.full(n_assets, float(idio_vols))
    if idio_vols.shape != (n_assets,):
        raise InvalidDimension(
            f"idio_vols has shape {idio_vols.shape}, expected ({n_assets},)"
        )
    if factor_vol <= 0.0:
        raise InvalidDimension("factor_vol must be strictly positive")
    if np.any(idio_vols < 0.0):
        raise InvalidDimension("idio_vols must be non-negative")

    rng = np.random.default_rng(seed)
    factor = rng.standard_normal(n_days) * factor_vol
    eps = rng.standard_normal((n_assets, n_days)) * idio_vols[:, None]
    rets = betas[:, None] * factor[None, :] + eps

    width = max(2, len(str(n_assets - 1)))
    tickers = [f"A{i:0{width}d}" for i in range(n_assets)]
    start = _dt.date(1997, 1, 2)
    dates = [(start + _dt.timedelta(days=t)).isoformat() for t in range(n_days)]
    return ReturnPanel(
        tickers=tickers, dates=dates, returns=rets, index_returns=factor
    )


def factor_model_covariance(betas, factor_vol: float, idio_vols) -> np.ndarray:
    """Population covariance of the one-factor generator:
    ``factor_vol^2 * outer(betas, betas) + diag(idio_vols^2)``."""
    betas = np.asarray(betas, dtype=float)
    idio_vols = np.asarray(idio_vols, dtype=float)
    cov = factor_vol**2 * np.outer(betas, betas)
    cov[np.diag_indices_from(cov)] += idio_vols**2
    return cov


def make_windows(total_days: int, window_length: int, offset: int = 0):
    """Maximal list of back-to-back, non-overlapping window pairs.

    Pair k covers estimation ``[offset + k*T, offset + (k+1)*T)`` and
    holding ``[offset + (k+1)*T, offset + (k+2)*T)``; the number of pairs is
    ``floor((total_days - offset) / T) - 1``.
    """
    if window_length < 2:
        raise InvalidDimension("window length must be at least 2 days")
    if offset < 0:
        raise InvalidDimension("offset must be non-negative")
    count = (total_days - offset) // window_length - 1
    if count < 1:
        raise WindowTooLong(
            f"no estimation/holding pair of length {window_length} fits in "
            f"{total_days} days at offset {offset}"
        )
    pairs = []
    for k in range(count):
        e0 = offset + k * window_length
        e1 = e0 + window_length
        pairs.append(WindowPair(estimation=(e0, e1), holding=(e1, e1 + window_length)))
    return pairs


def returns_to_prices(panel: ReturnPanel, initial_price: float = 100.0) -> np.ndarray:
    """Cumulate simple returns into a price path starting at ``initial_price``."""
    growth = np.cumprod(1.0 + panel.returns, axis=1)
    return np.hstack(
        [np.full((panel.n_assets, 1), initial_price), initial_price * growth]
    )


def write_price_csv(
    panel: ReturnPanel,
    path,
    initial_price: float = 100.0,
    index_ticker: str = "INDEX",
) -> None:
    """Export a return panel as a close-price CSV in the load format.

    The index series, when present, is written as an additional leading
    price column named ``index_ticker``.
    """
    prices = returns_to_prices(panel, initial_price)
    tickers = list(panel.tickers)
    if panel.index_returns is not None:
        idx_prices = initial_price * np.concatenate(
            [[1.0], np.cumprod(1.0 + panel.index_returns)]
        )
        prices = np.vstack([idx_prices, prices])
        tickers = [index_ticker] + tickers
    first = _dt.date.fromisoformat(panel.dates[0]) - _dt.timedelta(days=1)
    dates = [first.isoformat()] + list(panel.dates)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("date," + ",".join(tickers) + "\n")
        for j, date in enumerate(dates):
            fh.write(date + "," + ",".join(repr(float(p)) for p in prices[:, j]) + "\n")
