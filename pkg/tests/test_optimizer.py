import numpy as np
import pytest

from covlab.market_data import ReturnPanel
from covlab.matrix_core import SymmetricMatrix, sample_covariance
from covlab.optimizer import (
    DegenerateDenominator,
    DegenerateFrontier,
    SingularCovariance,
    frontier_solution,
    gmv_long_only,
    gmv_unconstrained,
    write_weights_csv,
)


def random_pd(rng, n=4, scale=1.0):
    a = rng.normal(size=(n, n))
    return SymmetricMatrix(scale * (a @ a.T + n * np.eye(n)))


# ---------------------------------------------------------------------------
# unconstrained
# ---------------------------------------------------------------------------

def test_identity_gives_equal_weights():
    sol = gmv_unconstrained(SymmetricMatrix(np.eye(5)))
    assert np.allclose(sol.weights, 0.2)


def test_diagonal_weights_inverse_variance():
    sol = gmv_unconstrained(SymmetricMatrix(np.diag([1.0, 4.0])))
    assert np.allclose(sol.weights, [0.8, 0.2])


def test_rank_deficient_uses_minimum_norm_solution():
    # 4 assets, 3 observations: the budget-constrained problem is
    # undetermined. The returned weights must solve it restricted to the
    # row space (checked by a brute-force sweep over that parametrization)
    # and be minimum-norm within their equal-objective family.
    rng = np.random.default_rng(0)
    returns = rng.normal(0, 0.01, (4, 3))
    panel = ReturnPanel(
        tickers=list("ABCD"),
        dates=["2000-01-01", "2000-01-02", "2000-01-03"],
        returns=returns,
    )
    s = sample_covariance(panel, (0, 3))
    sol = gmv_unconstrained(s)
    assert abs(sol.weights.sum() - 1.0) < 1e-10

    vals, vecs = np.linalg.eigh(s.values)
    keep = vals > 1e-12 * vals.max()
    basis = vecs[:, keep]          # row-space basis, rank 2
    null = vecs[:, ~keep]
    lam = vals[keep]
    a = basis.T @ np.ones(4)

    # Independent closed-form solve of the reduced problem
    # min u' diag(lam) u  s.t.  a'u = 1, then w = basis @ u.
    u_star = (a / lam) / (a @ (a / lam))
    w_oracle = basis @ u_star
    assert np.max(np.abs(sol.weights - w_oracle)) < 1e-8

    # Brute force along the in-row-space feasible line through u_star:
    # objective is minimal at u_star.
    direction = np.array([-a[1], a[0]])  # spans {a}^orthogonal in R^2
    objective = lambda u: float(u @ (lam * u))
    base_obj = objective(u_star)
    for step in np.linspace(-2.0, 2.0, 2001):
        if step == 0.0:
            continue
        assert objective(u_star + step * direction) >= base_obj - 1e-15

    # Null-space moves that keep the budget leave the objective unchanged
    # but strictly increase the norm: the returned point is minimum-norm
    # within its equal-objective family.
    ones_in_null = null.T @ np.ones(4)
    budget_neutral = null @ np.array([-ones_in_null[1], ones_in_null[0]])
    assert abs(budget_neutral.sum()) < 1e-10
    for step in (-1.0, -0.1, 0.1, 1.0):
        w_alt = sol.weights + step * budget_neutral
        assert abs(w_alt.sum() - 1.0) < 1e-9
        assert abs(w_alt @ s.values @ w_alt - base_obj) < 1e-12
        assert w_alt @ w_alt > sol.weights @ sol.weights


def test_degenerate_denominator():
    # Ones vector lies in the null space: S 1 = 0.
    s = SymmetricMatrix([[1.0, -1.0], [-1.0, 1.0]])
    with pytest.raises(DegenerateDenominator):
        gmv_unconstrained(s)


def test_scale_invariance_both_modes():
    rng = np.random.default_rng(1)
    for _ in range(20):
        s = random_pd(rng)
        scaled = SymmetricMatrix(s.values * 37.5)
        w_u = gmv_unconstrained(s).weights
        w_us = gmv_unconstrained(scaled).weights
        assert np.max(np.abs(w_u - w_us)) < 1e-10
        w_l = gmv_long_only(s).weights
        w_ls = gmv_long_only(scaled).weights
        assert np.max(np.abs(w_l - w_ls)) < 1e-10


# ---------------------------------------------------------------------------
# frontier
# ---------------------------------------------------------------------------

def test_frontier_hand_case():
    sol = frontier_solution(SymmetricMatrix(np.eye(2)), [0.1, 0.2], 0.2)
    assert np.isclose(sol.a, 2.0)
    assert np.isclose(sol.b, 0.3)
    assert np.isclose(sol.c, 0.05)
    assert np.isclose(sol.delta, 0.01)
    assert np.isclose(sol.lam, -1.0)
    assert np.isclose(sol.gamma, 10.0)
    assert np.allclose(sol.weights, [0.0, 1.0], atol=1e-12)
    assert abs(sol.delta - (sol.a * sol.c - sol.b**2)) < 1e-10


def test_frontier_gmv_return_reduces_to_gmv():
    rng = np.random.default_rng(2)
    s = random_pd(rng, n=5)
    m = rng.normal(0.05, 0.03, 5)
    gmv = gmv_unconstrained(s)
    r_gmv = None
    # At the GMV return b/a the return multiplier vanishes.
    sol_probe = frontier_solution(s, m, 0.01)
    r_gmv = sol_probe.b / sol_probe.a
    sol = frontier_solution(s, m, r_gmv)
    assert abs(sol.gamma) < 1e-10
    assert np.max(np.abs(sol.weights - gmv.weights)) < 1e-8


def test_frontier_hits_target_return():
    rng = np.random.default_rng(3)
    for _ in range(10):
        s = random_pd(rng, n=6)
        m = rng.normal(0.05, 0.02, 6)
        target = float(rng.uniform(0.0, 0.1))
        sol = frontier_solution(s, m, target)
        assert abs(sol.weights @ m - target) < 1e-10
        assert abs(sol.weights.sum() - 1.0) < 1e-10


def test_frontier_two_fund_spanning():
    rng = np.random.default_rng(4)
    s = random_pd(rng, n=5)
    m = rng.normal(0.05, 0.02, 5)
    sol1 = frontier_solution(s, m, 0.02)
    sol2 = frontier_solution(s, m, 0.08)
    for theta in (0.25, 0.5, 0.75):
        blend = theta * sol1.weights + (1 - theta) * sol2.weights
        target = float(blend @ m)
        direct = frontier_solution(s, m, target)
        assert np.max(np.abs(direct.weights - blend)) < 1e-8


def test_frontier_degenerate_for_parallel_means():
    s = SymmetricMatrix(np.diag([1.0, 2.0, 3.0]))
    with pytest.raises(DegenerateFrontier):
        frontier_solution(s, np.full(3, 0.07), 0.07)


def test_frontier_rejects_singular():
    s = SymmetricMatrix([[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(SingularCovariance):
        frontier_solution(s, [0.1, 0.2], 0.15)


# ---------------------------------------------------------------------------
# long-only
# ---------------------------------------------------------------------------

def test_long_only_interior_solution():
    sol = gmv_long_only(SymmetricMatrix(np.diag([1.0, 4.0])))
    assert np.allclose(sol.weights, [0.8, 0.2])
    assert sol.kkt_residual < 1e-8


def test_long_only_boundary_case():
    # Unconstrained solution is (-1, 2); the long-only optimum pins the
    # first asset at zero with risk^2 = 0.85 (grid-checked over w1 in [0,1]).
    s = SymmetricMatrix([[1.0, 0.9], [0.9, 0.85]])
    unconstrained = gmv_unconstrained(s)
    assert np.allclose(unconstrained.weights, [-1.0, 2.0])
    sol = gmv_long_only(s)
    assert np.allclose(sol.weights, [0.0, 1.0], atol=1e-12)
    obj = sol.weights @ s.values @ sol.weights
    grid = np.arange(0.0, 1.0 + 1e-9, 1e-4)
    grid_obj = min(
        w1 * w1 * 1.0 + (1 - w1) ** 2 * 0.85 + 2 * w1 * (1 - w1) * 0.9 for w1 in grid
    )
    assert abs(obj - grid_obj) < 1e-8


def test_long_only_matches_simplex_grid():
    rng = np.random.default_rng(5)
    step = 1e-3
    w1 = np.arange(0.0, 1.0 + step / 2, step)
    blocks = []
    for a in w1:
        b = np.arange(0.0, 1.0 - a + step / 2, step)
        blocks.append(np.column_stack([np.full(b.size, a), b, 1.0 - a - b]))
    grid = np.vstack(blocks)
    for _ in range(30):
        a = rng.normal(size=(3, 3))
        s = a.T @ a
        s *= 3.0 / np.trace(s)
        sm = SymmetricMatrix(s)
        sol = gmv_long_only(sm)
        obj = sol.weights @ s @ sol.weights
        grid_obj = ((grid @ s) * grid).sum(axis=1).min()
        assert abs(obj - grid_obj) < 1e-5


def test_long_only_never_below_unconstrained():
    rng = np.random.default_rng(6)
    for _ in range(30):
        s = random_pd(rng, n=5)
        u = gmv_unconstrained(s)
        l = gmv_long_only(s)
        obj_u = u.weights @ s.values @ u.weights
        obj_l = l.weights @ s.values @ l.weights
        assert obj_l >= obj_u - 1e-12


def test_long_only_returns_interior_unconstrained_solution():
    rng = np.random.default_rng(7)
    found = 0
    for _ in range(50):
        s = random_pd(rng, n=4)
        u = gmv_unconstrained(s)
        if u.weights.min() >= 0.0:
            l = gmv_long_only(s)
            assert np.max(np.abs(l.weights - u.weights)) < 1e-8
            found += 1
    assert found > 0


def test_long_only_on_singular_matrix():
    # Rank-1: every simplex point has the same objective; the solver must
    # still terminate on a valid simplex point with KKT residual ~ 0.
    s = SymmetricMatrix(np.ones((3, 3)))
    sol = gmv_long_only(s)
    assert abs(sol.weights.sum() - 1.0) < 1e-12
    assert sol.weights.min() >= 0.0
    assert sol.kkt_residual < 1e-8


def test_long_only_kkt_certificate():
    rng = np.random.default_rng(8)
    for _ in range(50):
        s = random_pd(rng, n=6, scale=1e-4)
        sol = gmv_long_only(s)
        grad = 2.0 * s.values @ sol.weights
        invested = sol.weights > 1e-10
        mu = grad[invested].mean()
        assert np.max(np.abs(grad[invested] - mu)) < 1e-8
        if np.any(~invested):
            assert np.min(grad[~invested]) >= mu - 1e-8


def test_weights_csv(tmp_path):
    sol = gmv_unconstrained(SymmetricMatrix(np.diag([1.0, 4.0])))
    path = tmp_path / "weights.csv"
    write_weights_csv(["AA", "BB"], sol, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "ticker,weight"
    assert lines[1] == "AA,0.8"
