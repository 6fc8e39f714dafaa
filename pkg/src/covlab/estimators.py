"""Uniform access to the ten covariance estimators.

Every estimator maps an estimation window of a return panel to a covariance
matrix. The canonical ids, in report order (baseline, spectral, clustering,
shrinkage):

    markowitz  - sample covariance (the comparison baseline)
    si         - single-index (one-factor regression) model
    rmt0       - random-matrix filter, sub-edge eigenvalues zeroed
    rmtm       - random-matrix filter, sub-edge eigenvalues averaged
    upgma      - clustering filter, size-weighted average linkage
    wpgma      - clustering filter, plain average linkage
    hausdorff  - clustering filter, min/max linkage
    shrink_si  - shrinkage toward the single-index covariance
    shrink_cc  - shrinkage toward the common-covariance target
    shrink_ccorr - shrinkage toward the constant-correlation target
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .clustering import cluster_covariance
from .errors import CovlabError
from .market_data import ReturnPanel
from .matrix_core import SymmetricMatrix, sample_covariance
from .shrinkage import shrink
from .spectral import fit_single_index, rmt0_covariance, rmtm_covariance, si_covariance

ESTIMATOR_IDS = (
    "markowitz",
    "si",
    "rmt0",
    "rmtm",
    "upgma",
    "wpgma",
    "hausdorff",
    "shrink_si",
    "shrink_cc",
    "shrink_ccorr",
)

_SHRINK_TARGETS = {"shrink_si": "si", "shrink_cc": "common_cov", "shrink_ccorr": "const_corr"}
_LINKAGES = {"upgma": "upgma", "wpgma": "wpgma", "hausdorff": "hausdorff"}


class UnknownEstimator(CovlabError):
    """Raised for an estimator id outside the canonical ten."""

    def __init__(self, estimator_id: str):
        super().__init__(
            f"unknown estimator {estimator_id!r}; valid ids: {', '.join(ESTIMATOR_IDS)}"
        )


@dataclass(frozen=True)
class CovarianceEstimate:
    """A covariance matrix with provenance and estimator diagnostics."""

    matrix: SymmetricMatrix
    estimator_id: str
    window: tuple
    diagnostics: dict = field(default_factory=dict)

    @property
    def alpha(self) -> Optional[float]:
        return self.diagnostics.get("alpha")


def validate_estimator_ids(estimator_ids) -> tuple:
    seen = []
    for estimator_id in estimator_ids:
        if estimator_id not in ESTIMATOR_IDS:
            raise UnknownEstimator(estimator_id)
        if estimator_id not in seen:
            seen.append(estimator_id)
    # Canonical report order regardless of request order.
    return tuple(e for e in ESTIMATOR_IDS if e in seen)


def estimate_covariance(
    estimator_id: str, panel: ReturnPanel, window
) -> CovarianceEstimate:
    """Run one estimator on one estimation window."""
    window = (int(window[0]), int(window[1]))
    if estimator_id == "markowitz":
        matrix = sample_covariance(panel, window)
        diagnostics = {}
    elif estimator_id == "si":
        fit = fit_single_index(panel, window)
        matrix = si_covariance(fit)
        diagnostics = {
            "index_variance": fit.index_variance,
            "min_idio_variance": float(fit.idio_variances.min()),
        }
    elif estimator_id == "rmt0":
        matrix, diagnostics = rmt0_covariance(panel, window, return_diagnostics=True)
    elif estimator_id == "rmtm":
        matrix, diagnostics = rmtm_covariance(panel, window, return_diagnostics=True)
    elif estimator_id in _LINKAGES:
        matrix, diagnostics = cluster_covariance(
            panel, window, _LINKAGES[estimator_id], return_diagnostics=True
        )
    elif estimator_id in _SHRINK_TARGETS:
        result = shrink(panel, window, _SHRINK_TARGETS[estimator_id])
        matrix = result.matrix
        diagnostics = {"alpha": result.alpha, "target_id": result.target_id}
    else:
        raise UnknownEstimator(estimator_id)
    return CovarianceEstimate(
        matrix=matrix, estimator_id=estimator_id, window=window, diagnostics=diagnostics
    )
