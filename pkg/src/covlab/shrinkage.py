"""Linear shrinkage of the sample covariance toward structured targets.

The blend is ``Q = alpha * T + (1 - alpha) * S`` with three supported
targets:

* ``si``:          one-factor (single-index) model covariance,
* ``common_cov``:  equal variances (their average) and equal covariances
                   (their average),
* ``const_corr``:  unit diagonal and the average sample correlation
                   everywhere else, blended in correlation space and then
                   rescaled by the sample standard deviations.

The intensity ``alpha`` is the analytic unbiased estimate

    alpha = sum_pairs Var_hat(s_ij) / sum_pairs (s_ij - t_ij)^2

clamped to [0, 1], where ``Var_hat(s_ij)`` is the unbiased sampling-variance
estimate of the entry,

    Var_hat(s_ij) = T / (T - 1)^3 * sum_t (w_ijt - w_bar_ij)^2,
    w_ijt = (x_it - x_bar_i) * (x_jt - x_bar_j),

and the pair set matches the target's free entries: off-diagonal entries for
``si`` (whose target carries the sample variances on the diagonal) and for
``const_corr`` (computed on standardized data), all entries for
``common_cov``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .market_data import ReturnPanel
from .matrix_core import (
    DegenerateWindow,
    SymmetricMatrix,
    cov_to_corr,
    sample_covariance,
)
from .spectral import fit_single_index, si_covariance

logger = logging.getLogger(__name__)

TARGET_IDS = ("si", "common_cov", "const_corr")


@dataclass(frozen=True)
class ShrinkageResult:
    """Shrunk covariance with the intensity and target that produced it.

    For ``const_corr`` the stored target is the constant-correlation matrix
    itself (the blend happens in correlation space); for the other targets
    it is the covariance-space target.
    """

    matrix: SymmetricMatrix
    alpha: float
    target_id: str
    target: SymmetricMatrix


def target_common_covariance(cov: SymmetricMatrix) -> SymmetricMatrix:
    """Homogeneous target: average variance on the diagonal, average
    covariance off it."""
    values = cov.values
    n = cov.n
    mean_var = float(np.mean(np.diag(values)))
    if n > 1:
        off_mask = ~np.eye(n, dtype=bool)
        mean_cov = float(values[off_mask].mean())
    else:
        mean_cov = 0.0
    target = np.full((n, n), mean_cov)
    np.fill_diagonal(target, mean_var)
    return SymmetricMatrix(target)


def target_constant_correlation(corr: SymmetricMatrix) -> SymmetricMatrix:
    """Constant-correlation target: unit diagonal, average sample
    correlation off it."""
    n = corr.n
    if n > 1:
        off_mask = ~np.eye(n, dtype=bool)
        mean_corr = float(corr.values[off_mask].mean())
    else:
        mean_corr = 0.0
    target = np.full((n, n), mean_corr)
    np.fill_diagonal(target, 1.0)
    return SymmetricMatrix(target)


def _entry_variances(data: np.ndarray) -> np.ndarray:
    """Unbiased sampling-variance estimate of every sample-covariance entry
    of ``data`` (assets in rows, days in columns)."""
    t = data.shape[1]
    centered = data - data.mean(axis=1, keepdims=True)
    w_bar = centered @ centered.T / t
    w_sq_sum = (centered**2) @ (centered**2).T
    return t / (t - 1) ** 3 * (w_sq_sum - t * w_bar**2)


def _intensity_inputs(panel: ReturnPanel, window, target_id: str):
    """Sample matrix, target matrix, entry variances and free-entry mask in
    the space where the blend happens."""
    start, stop = int(window[0]), int(window[1])
    if stop - start < 3:
        raise DegenerateWindow("shrinkage needs a window of at least 3 days")
    cov = sample_covariance(panel, window)
    n = cov.n
    data = panel.returns[:, start:stop]

    if target_id == "si":
        target = si_covariance(fit_single_index(panel, window))
        variances = _entry_variances(data)
        mask = ~np.eye(n, dtype=bool)
        return cov.values, target.values, variances, mask
    if target_id == "common_cov":
        target = target_common_covariance(cov)
        variances = _entry_variances(data)
        mask = np.ones((n, n), dtype=bool)
        return cov.values, target.values, variances, mask
    if target_id == "const_corr":
        corr, stds = cov_to_corr(cov)
        target = target_constant_correlation(corr)
        variances = _entry_variances(data / stds[:, None])
        mask = ~np.eye(n, dtype=bool)
        return corr.values, target.values, variances, mask
    raise ValueError(f"unknown shrinkage target {target_id!r}; choose one of {TARGET_IDS}")


def shrinkage_intensity(panel: ReturnPanel, window, target_id: str) -> float:
    """Analytic shrinkage intensity, clamped to [0, 1].

    A zero denominator means the sample matrix already equals the target on
    the free entries; the intensity is then 1 by convention.
    """
    sample, target, variances, mask = _intensity_inputs(panel, window, target_id)
    numerator = float(variances[mask].sum())
    denominator = float(((sample - target) ** 2)[mask].sum())
    if denominator == 0.0:
        logger.warning(
            "shrinkage_intensity(%s): sample equals target on free entries; alpha = 1",
            target_id,
        )
        return 1.0
    return float(np.clip(numerator / denominator, 0.0, 1.0))


def shrink(panel: ReturnPanel, window, target_id: str, alpha=None) -> ShrinkageResult:
    """Shrunk covariance estimate for one window.

    ``alpha`` overrides the analytic intensity when given (useful for
    endpoint checks). ``si`` and ``common_cov`` blend covariances directly;
    ``const_corr`` blends correlations and rescales by the sample standard
    deviations, which is applied entrywise so the ``alpha = 0`` endpoint
    reproduces the sample covariance exactly.
    """
    if target_id not in TARGET_IDS:
        raise ValueError(f"unknown shrinkage target {target_id!r}; choose one of {TARGET_IDS}")
    cov = sample_covariance(panel, window)
    if alpha is None:
        alpha = shrinkage_intensity(panel, window, target_id)
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha = {alpha} outside [0, 1]")

    if target_id == "si":
        target = si_covariance(fit_single_index(panel, window))
        blended = alpha * target.values + (1.0 - alpha) * cov.values
    elif target_id == "common_cov":
        target = target_common_covariance(cov)
        blended = alpha * target.values + (1.0 - alpha) * cov.values
    else:
        corr, stds = cov_to_corr(cov)
        target = target_constant_correlation(corr)
        scale = np.outer(stds, stds)
        blended = alpha * (target.values * scale) + (1.0 - alpha) * cov.values
    return ShrinkageResult(
        matrix=SymmetricMatrix(blended),
        alpha=alpha,
        target_id=target_id,
        target=target,
    )
