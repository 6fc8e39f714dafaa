"""covlab: covariance matrix filtering and minimum-variance portfolio lab.

Ten covariance estimators (sample baseline, spectral filters, hierarchical
clustering filters, linear shrinkage), exact global-minimum-variance solvers
with and without a long-only constraint, and a repeated-optimization
backtest engine with paired statistical comparisons.
"""

from .backtest import (
    BacktestReport,
    CellSummary,
    TTestResult,
    WindowResult,
    WindowSkip,
    aggregate_cells,
    n_eff,
    n_q,
    paired_t_test,
    predicted_risk,
    realized_risk,
    run_backtest,
    short_ratio,
)
from .clustering import (
    Dendrogram,
    FilteredCorrelation,
    MergeEvent,
    cluster,
    cluster_covariance,
    filtered_correlation,
)
from .errors import CovlabError
from .estimators import (
    ESTIMATOR_IDS,
    CovarianceEstimate,
    UnknownEstimator,
    estimate_covariance,
)
from .market_data import (
    PricePanel,
    ReturnPanel,
    WindowPair,
    factor_model_covariance,
    load_price_csv,
    make_windows,
    synthesize_factor_panel,
    to_returns,
    write_price_csv,
)
from .matrix_core import (
    EigenDecomposition,
    SymmetricMatrix,
    corr_to_cov,
    cov_to_corr,
    eig_symmetric,
    pseudoinverse,
    sample_covariance,
)
from .optimizer import (
    EfficientFrontierSolution,
    PortfolioWeights,
    frontier_solution,
    gmv_long_only,
    gmv_unconstrained,
)
from .shrinkage import (
    ShrinkageResult,
    shrink,
    shrinkage_intensity,
    target_common_covariance,
    target_constant_correlation,
)
from .spectral import (
    RmtBound,
    SingleIndexFit,
    fit_single_index,
    rmt0_covariance,
    rmt_bound,
    rmtm_covariance,
    si_covariance,
)

__version__ = "0.1.0"
