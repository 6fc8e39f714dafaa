"""Covariance estimators driven by eigenvalue structure.

Three filters live here: the single-index (one-factor regression) model and
two random-matrix-theory filters that compare the sample correlation
spectrum against the noise-band upper edge

    lambda_max = sigma^2 * (1 + q + 2*sqrt(q)),   q = N / T,

with ``sigma^2 = 1 - lambda_1 / N`` discounting the market mode. Eigenvalues
below the edge are either zeroed (``rmt0``) or replaced by their average,
which preserves the trace (``rmtm``); the filtered correlation is then
rescaled by the sample standard deviations.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import CovlabError
from .market_data import ReturnPanel
from .matrix_core import (
    DegenerateWindow,
    SymmetricMatrix,
    cov_to_corr,
    eig_symmetric,
    sample_covariance,
)

logger = logging.getLogger(__name__)

PD_EPS = 1e-8


class MissingIndex(CovlabError):
    """The panel carries no reference-index series."""


class ZeroIndexVariance(CovlabError):
    """The reference index is constant over the estimation window."""


class InvalidLambda1(CovlabError):
    """The supplied top eigenvalue is outside [0, N]."""


class AllEigenvaluesClipped(CovlabError):
    """Every correlation eigenvalue fell below the noise edge.

    The exception carries a usable fallback: the diagonal matrix of sample
    variances, in ``fallback``.
    """

    def __init__(self, message: str, fallback: SymmetricMatrix):
        super().__init__(message)
        self.fallback = fallback


@dataclass(frozen=True)
class SingleIndexFit:
    """Per-asset regression loadings on the reference index.

    ``betas[i]`` is the slope of asset i on the index, ``index_variance``
    the index's sample variance and ``idio_variances[i]`` the residual
    variance (floored at zero).
    """

    betas: np.ndarray
    index_variance: float
    idio_variances: np.ndarray


@dataclass(frozen=True)
class RmtBound:
    """Noise-band upper edge for sample correlation eigenvalues."""

    lambda_max: float
    sigma_sq: float
    q: float


def fit_single_index(panel: ReturnPanel, window) -> SingleIndexFit:
    """Regress each asset's returns on the index over the window."""
    if panel.index_returns is None:
        raise MissingIndex("panel has no index series; single-index fit impossible")
    start, stop = int(window[0]), int(window[1])
    t = stop - start
    if t < 3:
        raise DegenerateWindow("single-index fit needs a window of at least 3 days")
    rets = panel.returns[:, start:stop]
    idx = panel.index_returns[start:stop]

    idx_c = idx - idx.mean()
    var_f = float(idx_c @ idx_c) / (t - 1)
    if var_f <= 0.0:
        raise ZeroIndexVariance("index series is constant over the window")
    rets_c = rets - rets.mean(axis=1, keepdims=True)
    betas = (rets_c @ idx_c) / ((t - 1) * var_f)
    asset_var = np.einsum("ij,ij->i", rets_c, rets_c) / (t - 1)
    idio = np.maximum(asset_var - betas**2 * var_f, 0.0)
    return SingleIndexFit(betas=betas, index_variance=var_f, idio_variances=idio)


def si_covariance(fit: SingleIndexFit) -> SymmetricMatrix:
    """Covariance implied by the one-factor model:
    ``index_variance * outer(betas, betas) + diag(idio_variances)``."""
    cov = fit.index_variance * np.outer(fit.betas, fit.betas)
    cov[np.diag_indices_from(cov)] += fit.idio_variances
    return SymmetricMatrix(cov)


def rmt_bound(n_assets: int, n_days: int, lambda1: float) -> RmtBound:
    """Noise edge for an N-asset, T-day sample correlation matrix.

    ``lambda1`` is the largest eigenvalue of that correlation matrix; the
    residual noise variance is ``1 - lambda1 / N``.
    """
    if n_assets < 1 or n_days < 1:
        raise InvalidLambda1("need n_assets >= 1 and n_days >= 1")
    if not (0.0 <= lambda1 <= n_assets):
        raise InvalidLambda1(
            f"lambda1 = {lambda1} outside [0, {n_assets}] for a correlation matrix"
        )
    q = n_assets / n_days
    sigma_sq = 1.0 - lambda1 / n_assets
    lambda_max = sigma_sq * (1.0 + q + 2.0 * math.sqrt(q))
    return RmtBound(lambda_max=lambda_max, sigma_sq=sigma_sq, q=q)


def _floor_eigenvalues(matrix: np.ndarray, eps: float) -> np.ndarray:
    """Raise all eigenvalues below ``eps`` to ``eps`` and renormalize the
    result back to unit diagonal, guaranteeing positive definiteness."""
    vals, vecs = np.linalg.eigh(matrix)
    vals = np.maximum(vals, eps)
    fixed = (vecs * vals) @ vecs.T
    d = np.sqrt(np.diag(fixed))
    fixed = fixed / np.outer(d, d)
    np.fill_diagonal(fixed, 1.0)
    return fixed


def _finalize_correlation(corr: np.ndarray, label: str):
    """Clamp out-of-range entries and restore positive definiteness.

    Returns the (possibly adjusted) correlation matrix plus diagnostics on
    how many entries were clamped and whether an eigenvalue floor was
    applied.
    """
    clamped = int(np.count_nonzero((corr < -1.0) | (corr > 1.0)))
    if clamped:
        logger.warning("%s: clamped %d correlation entries into [-1, 1]", label, clamped)
        corr = np.clip(corr, -1.0, 1.0)
        np.fill_diagonal(corr, 1.0)
    min_eig = float(np.linalg.eigvalsh(corr).min())
    pd_fixed = False
    if min_eig <= 0.0:
        logger.warning(
            "%s: filtered correlation not positive definite (min eig %.3e); "
            "flooring eigenvalues at %.1e",
            label,
            min_eig,
            PD_EPS,
        )
        corr = _floor_eigenvalues(corr, PD_EPS)
        pd_fixed = True
    return corr, {"clamped_entries": clamped, "pd_fixed": pd_fixed, "min_eig": min_eig}


def _rescale(corr: np.ndarray, stds: np.ndarray, variances: np.ndarray) -> SymmetricMatrix:
    cov = corr * np.outer(stds, stds)
    cov[np.diag_indices_from(cov)] = variances
    return SymmetricMatrix(cov)


def rmt0_covariance(panel: ReturnPanel, window, return_diagnostics: bool = False):
    """Eigenvalue-clipping filter: zero the sub-edge correlation modes.

    Modes below the noise edge are dropped, the diagonal is forced back to
    one and the result is rescaled by the sample standard deviations, so
    the output carries the sample variances on its diagonal. Raises
    :class:`AllEigenvaluesClipped` (with a diagonal fallback attached) when
    no mode survives.
    """
    cov = sample_covariance(panel, window)
    corr, stds = cov_to_corr(cov)
    n = cov.n
    t = int(window[1]) - int(window[0])
    eig = eig_symmetric(corr)
    lambda1 = float(np.clip(eig.eigenvalues[0], 0.0, n))
    bound = rmt_bound(n, t, lambda1)

    keep = eig.eigenvalues >= bound.lambda_max
    if not np.any(keep):
        raise AllEigenvaluesClipped(
            f"all {n} eigenvalues fall below the noise edge {bound.lambda_max:.4f}; "
            "fallback diagonal matrix attached",
            fallback=SymmetricMatrix(np.diag(cov.diagonal())),
        )
    vecs = eig.eigenvectors[:, keep]
    filtered = (vecs * eig.eigenvalues[keep]) @ vecs.T
    np.fill_diagonal(filtered, 1.0)
    filtered, fix_info = _finalize_correlation(filtered, "rmt0")
    result = _rescale(filtered, stds, cov.diagonal())
    if not return_diagnostics:
        return result
    diagnostics = {
        "lambda_max": bound.lambda_max,
        "sigma_sq": bound.sigma_sq,
        "q": bound.q,
        "n_kept": int(np.count_nonzero(keep)),
        "n_clipped": int(n - np.count_nonzero(keep)),
        **fix_info,
    }
    return result, diagnostics


def rmtm_covariance(panel: ReturnPanel, window, return_diagnostics: bool = False):
    """Eigenvalue-averaging filter: replace sub-edge modes by their mean.

    The replacement preserves the trace (still N before renormalization);
    the reconstructed matrix is renormalized to unit diagonal and rescaled
    by the sample standard deviations.
    """
    cov = sample_covariance(panel, window)
    corr, stds = cov_to_corr(cov)
    n = cov.n
    t = int(window[1]) - int(window[0])
    eig = eig_symmetric(corr)
    lambda1 = float(np.clip(eig.eigenvalues[0], 0.0, n))
    bound = rmt_bound(n, t, lambda1)

    vals = eig.eigenvalues.copy()
    below = vals < bound.lambda_max
    if np.any(below):
        vals[below] = vals[below].mean()
    raw = (eig.eigenvectors * vals) @ eig.eigenvectors.T
    h_trace = float(np.trace(raw))

    diag = np.diag(raw).copy()
    if np.any(diag <= 0.0):
        # Degenerate spectra (e.g. rank-1 windows) can zero the diagonal;
        # floor the eigenvalues before renormalizing.
        logger.warning("rmtm: non-positive diagonal after filtering; flooring eigenvalues")
        raw = (eig.eigenvectors * np.maximum(vals, PD_EPS)) @ eig.eigenvectors.T
        diag = np.diag(raw).copy()
    d = np.sqrt(diag)
    renorm = raw / np.outer(d, d)
    np.fill_diagonal(renorm, 1.0)
    renorm, fix_info = _finalize_correlation(renorm, "rmtm")
    result = _rescale(renorm, stds, cov.diagonal())
    if not return_diagnostics:
        return result
    diagnostics = {
        "lambda_max": bound.lambda_max,
        "sigma_sq": bound.sigma_sq,
        "q": bound.q,
        "n_replaced": int(np.count_nonzero(below)),
        "h_trace": h_trace,
        **fix_info,
    }
    return result, diagnostics
