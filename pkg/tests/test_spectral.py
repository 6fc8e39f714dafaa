import numpy as np
import pytest

from covlab.market_data import ReturnPanel, synthesize_factor_panel
from covlab.matrix_core import cov_to_corr, sample_covariance
from covlab.spectral import (
    AllEigenvaluesClipped,
    InvalidLambda1,
    MissingIndex,
    ZeroIndexVariance,
    fit_single_index,
    rmt0_covariance,
    rmt_bound,
    rmtm_covariance,
    si_covariance,
)


def panel_from(returns, index=None):
    returns = np.asarray(returns, dtype=float)
    n, days = returns.shape
    return ReturnPanel(
        tickers=[f"A{i}" for i in range(n)],
        dates=[f"2000-{1 + d // 28:02d}-{1 + d % 28:02d}" for d in range(days)],
        returns=returns,
        index_returns=index,
    )


def exact_correlation_panel(rho, t=8, scale=0.01):
    """Two assets whose sample correlation is exactly ``rho``: built from an
    orthonormal, zero-mean basis of R^t."""
    u = np.array([1.0] * (t // 2) + [-1.0] * (t // 2))
    v = np.array(([1.0, 1.0, -1.0, -1.0] * t)[:t])
    u /= np.linalg.norm(u)
    v /= np.linalg.norm(v)
    assert abs(u @ v) < 1e-15 and abs(u.sum()) < 1e-15 and abs(v.sum()) < 1e-15
    x1 = scale * u
    x2 = scale * (rho * u + np.sqrt(1 - rho * rho) * v)
    return panel_from(np.vstack([x1, x2]))


# ---------------------------------------------------------------------------
# single index
# ---------------------------------------------------------------------------

def test_fit_exact_regression():
    rng = np.random.default_rng(0)
    f = rng.normal(0, 0.01, 100)
    panel = panel_from(np.vstack([2.0 * f, -0.5 * f]), index=f)
    fit = fit_single_index(panel, (0, 100))
    assert np.allclose(fit.betas, [2.0, -0.5], atol=1e-12)
    assert np.allclose(fit.idio_variances, 0.0, atol=1e-18)


def test_fit_independent_asset_has_zero_beta():
    rng = np.random.default_rng(1)
    f = rng.normal(0, 0.01, 200_000)
    eps = rng.normal(0, 0.01, 200_000)
    panel = panel_from(eps[None, :], index=f)
    fit = fit_single_index(panel, (0, 200_000))
    assert abs(fit.betas[0]) < 0.01


def test_fit_monte_carlo_beta():
    panel = synthesize_factor_panel(2, 100_000, np.full(2, 1.5), 0.01, np.full(2, 0.02), seed=4)
    fit = fit_single_index(panel, (0, 100_000))
    assert np.max(np.abs(fit.betas - 1.5)) < 0.02


def test_fit_requires_index():
    panel = panel_from(np.zeros((2, 10)) + np.arange(10))
    with pytest.raises(MissingIndex):
        fit_single_index(panel, (0, 10))


def test_fit_rejects_constant_index():
    panel = panel_from(np.arange(10)[None, :] * 0.01, index=np.zeros(10))
    with pytest.raises(ZeroIndexVariance):
        fit_single_index(panel, (0, 10))


def test_si_covariance_formula():
    from covlab.spectral import SingleIndexFit

    fit = SingleIndexFit(betas=np.ones(2), index_variance=1.0, idio_variances=np.ones(2))
    cov = si_covariance(fit)
    assert np.allclose(cov.values, [[2.0, 1.0], [1.0, 2.0]])


def test_si_covariance_zero_beta_is_diagonal():
    from covlab.spectral import SingleIndexFit

    fit = SingleIndexFit(betas=np.zeros(3), index_variance=2.0, idio_variances=np.array([1.0, 2.0, 3.0]))
    cov = si_covariance(fit)
    assert np.array_equal(cov.values, np.diag([1.0, 2.0, 3.0]))


def test_si_factor_part_is_rank_one():
    rng = np.random.default_rng(5)
    from covlab.spectral import SingleIndexFit

    fit = SingleIndexFit(
        betas=rng.normal(1, 0.2, 6),
        index_variance=1e-4,
        idio_variances=rng.uniform(1e-5, 1e-4, 6),
    )
    cov = si_covariance(fit)
    factor_part = cov.values - np.diag(fit.idio_variances)
    vals = np.linalg.eigvalsh(factor_part)
    assert np.sum(np.abs(vals) > 1e-12 * np.abs(vals).max()) == 1


# ---------------------------------------------------------------------------
# noise edge
# ---------------------------------------------------------------------------

def test_bound_pure_noise_square():
    bound = rmt_bound(10, 10, lambda1=0.0)
    assert bound.sigma_sq == 1.0
    assert bound.lambda_max == 4.0


def test_bound_discounts_market_mode():
    bound = rmt_bound(90, 90, lambda1=9.0)
    assert np.isclose(bound.sigma_sq, 0.9)


def test_bound_arithmetic():
    bound = rmt_bound(90, 250, lambda1=27.0)
    assert np.isclose(bound.sigma_sq, 0.7)
    assert np.isclose(bound.q, 0.36)
    assert np.isclose(bound.lambda_max, 0.7 * (1 + 0.36 + 1.2))
    assert np.isclose(bound.lambda_max, 1.792)


def test_bound_invariant_exact():
    bound = rmt_bound(7, 13, lambda1=2.5)
    assert bound.lambda_max == bound.sigma_sq * (1 + bound.q + 2 * np.sqrt(bound.q))


def test_bound_rejects_bad_lambda1():
    with pytest.raises(InvalidLambda1):
        rmt_bound(5, 10, lambda1=6.0)
    with pytest.raises(InvalidLambda1):
        rmt_bound(5, 10, lambda1=-0.1)


# ---------------------------------------------------------------------------
# RMT-0
# ---------------------------------------------------------------------------

def test_rmt0_nothing_clipped_returns_sample():
    # With an exact sample correlation of 0.9 and only 3 days, the noise
    # edge sits above both eigenvalues only if sigma_sq is large; choose a
    # long window instead so lambda_max cannot reach the smaller eigenvalue.
    rng = np.random.default_rng(8)
    f = rng.normal(0, 0.01, 5000)
    eps = rng.normal(0, 0.01, (2, 5000))
    panel = panel_from(np.vstack([f + eps[0], -f + eps[1]]))
    sample = sample_covariance(panel, (0, 5000))
    out = rmt0_covariance(panel, (0, 5000))
    assert np.max(np.abs(out.values - sample.values)) < 1e-10


def test_rmt0_two_asset_hand_oracle():
    # Sample correlation exactly 0.9 over T=8 days: eigenvalues (1.9, 0.1),
    # noise edge 0.05 * (1 + 0.25 + 1) = 0.1125, so only the top mode stays.
    # Forcing the diagonal of the 1.9-mode outer product back to one leaves
    # off-diagonal (1 + 0.9) / 2 = 0.95.
    panel = exact_correlation_panel(0.9, t=8)
    sample = sample_covariance(panel, (0, 8))
    corr, _ = cov_to_corr(sample)
    assert np.isclose(corr.values[0, 1], 0.9, atol=1e-12)
    out, diag = rmt0_covariance(panel, (0, 8), return_diagnostics=True)
    assert diag["n_kept"] == 1
    filtered_corr, _ = cov_to_corr(out)
    assert np.isclose(filtered_corr.values[0, 1], 0.95, atol=1e-12)


def test_rmt0_diagonal_carries_sample_variances():
    panel = synthesize_factor_panel(10, 60, np.linspace(0.5, 1.5, 10), 0.01, np.full(10, 0.02), seed=6)
    sample = sample_covariance(panel, (0, 30))
    out = rmt0_covariance(panel, (0, 30))
    assert np.array_equal(np.diag(out.values), np.diag(sample.values))


def test_rmt0_all_clipped_raises_with_fallback():
    # Two uncorrelated assets over 3 days: lambda1 = 1 stays below the edge
    # (1 - 1/2) * (1 + 2/3 + 2 sqrt(2/3)) ~ 1.65, so everything is clipped.
    sub = panel_from(0.01 * np.array([[1.0, 0.0, -1.0], [1.0, -2.0, 1.0]]))
    corr, _ = cov_to_corr(sample_covariance(sub, (0, 3)))
    assert abs(corr.values[0, 1]) < 0.245
    with pytest.raises(AllEigenvaluesClipped) as excinfo:
        rmt0_covariance(sub, (0, 3))
    fallback = excinfo.value.fallback
    sample = sample_covariance(sub, (0, 3))
    assert np.array_equal(fallback.values, np.diag(np.diag(sample.values)))


# ---------------------------------------------------------------------------
# RMT-M
# ---------------------------------------------------------------------------

def test_rmtm_nothing_replaced_returns_sample():
    rng = np.random.default_rng(12)
    f = rng.normal(0, 0.01, 5000)
    eps = rng.normal(0, 0.01, (2, 5000))
    panel = panel_from(np.vstack([f + eps[0], -f + eps[1]]))
    sample = sample_covariance(panel, (0, 5000))
    out = rmtm_covariance(panel, (0, 5000))
    assert np.max(np.abs(out.values - sample.values)) < 1e-10


def test_rmtm_replacement_arithmetic():
    # Spectrum (2.5, 0.9, 0.6) with edge 1.0: replaced mean 0.75, new
    # spectrum (2.5, 0.75, 0.75), trace 4.0 preserved.
    vals = np.array([2.5, 0.9, 0.6])
    below = vals < 1.0
    replaced = vals.copy()
    replaced[below] = vals[below].mean()
    assert np.allclose(replaced, [2.5, 0.75, 0.75])
    assert replaced.sum() == vals.sum() == 4.0


def test_rmtm_trace_preserved_and_pd_for_short_windows():
    rng = np.random.default_rng(13)
    for seed in range(5):
        panel = synthesize_factor_panel(
            20, 50, rng.normal(1, 0.2, 20), 0.01, rng.uniform(0.01, 0.03, 20), seed=seed
        )
        out, diag = rmtm_covariance(panel, (0, 10), return_diagnostics=True)
        assert abs(diag["h_trace"] - 20.0) < 1e-10
        assert np.linalg.eigvalsh(out.values).min() > 0.0


def test_rmtm_diagonal_carries_sample_variances():
    panel = synthesize_factor_panel(10, 60, np.linspace(0.5, 1.5, 10), 0.01, np.full(10, 0.02), seed=14)
    sample = sample_covariance(panel, (0, 30))
    out = rmtm_covariance(panel, (0, 30))
    assert np.array_equal(np.diag(out.values), np.diag(sample.values))


def test_filtered_offdiagonals_within_unit_interval():
    for seed in range(10):
        panel = synthesize_factor_panel(
            12, 40, np.linspace(0.6, 1.4, 12), 0.01, np.full(12, 0.01), seed=seed
        )
        for op in (rmt0_covariance, rmtm_covariance):
            out = op(panel, (0, 40))
            corr, _ = cov_to_corr(out)
            off = corr.values[~np.eye(12, dtype=bool)]
            assert np.max(np.abs(off)) <= 1.0 + 1e-10
