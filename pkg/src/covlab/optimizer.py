"""Global-minimum-variance portfolio solvers.

The unconstrained solution is the closed form ``w = S^+ 1 / (1' S^+ 1)``
(true inverse when the matrix is nonsingular, Moore-Penrose pseudoinverse
otherwise, in which case the returned weights are the minimum-norm
representative of the undetermined solution set). The long-only problem

    min w' S w   s.t.  sum(w) = 1,  w >= 0

is solved exactly with a primal active-set method: starting from equal
weights, the equality-constrained subproblem on the currently free assets
is solved, blocked assets are pinned at zero one at a time, and pinned
assets with a negative multiplier are released (most negative first).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import CovlabError
from .matrix_core import SymmetricMatrix, eig_symmetric

_FEAS_TOL = 1e-11
_MULT_TOL = 1e-9


class DegenerateDenominator(CovlabError):
    """``1' S^+ 1`` vanished: the ones vector is orthogonal to the row space."""


class SingularCovariance(CovlabError):
    """An operation requiring an invertible covariance received a singular one."""


class DegenerateFrontier(CovlabError):
    """Mean returns are proportional to ones; the frontier collapses."""


class MaxIterations(CovlabError):
    """The active-set solver exceeded its iteration budget."""


@dataclass(frozen=True)
class PortfolioWeights:
    """Normalized portfolio weights plus solver diagnostics."""

    weights: np.ndarray
    constraint_mode: str
    estimator_id: Optional[str] = None
    iterations: int = 0
    kkt_residual: float = 0.0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if abs(w.sum() - 1.0) > 1e-10:
            raise ValueError(f"weights sum to {w.sum()!r}, expected 1")
        if self.constraint_mode == "long_only" and w.min() < -1e-12:
            raise ValueError(f"long-only weights contain {w.min()!r} < 0")


@dataclass(frozen=True)
class EfficientFrontierSolution:
    """Frontier portfolio for a target mean return.

    ``lam`` and ``gamma`` are the budget and return multipliers; ``a``,
    ``b``, ``c`` are the quadratic forms 1'S^-1 1, 1'S^-1 m, m'S^-1 m and
    ``delta = a*c - b^2``.
    """

    lam: float
    gamma: float
    a: float
    b: float
    c: float
    delta: float
    weights: np.ndarray


def _spectral_solve(matrix: SymmetricMatrix, rank_tol: float):
    """Eigendecomposition plus a flag for numerical nonsingularity."""
    eig = eig_symmetric(matrix)
    lam_max = float(eig.eigenvalues[0])
    nonsingular = lam_max > 0.0 and float(eig.eigenvalues[-1]) > rank_tol * lam_max
    return eig, nonsingular


def gmv_unconstrained(
    matrix: SymmetricMatrix,
    rank_tol: float = 1e-10,
    estimator_id: Optional[str] = None,
) -> PortfolioWeights:
    """Unconstrained global-minimum-variance weights."""
    n = matrix.n
    ones = np.ones(n)
    eig, nonsingular = _spectral_solve(matrix, rank_tol)
    if nonsingular:
        y = np.linalg.solve(matrix.values, ones)
    else:
        vals = eig.eigenvalues
        inv = np.zeros_like(vals)
        keep = vals > rank_tol * max(float(vals[0]), 0.0)
        inv[keep] = 1.0 / vals[keep]
        y = eig.eigenvectors @ (inv * (eig.eigenvectors.T @ ones))
    denom = float(y.sum())
    if denom <= 1e-14:
        raise DegenerateDenominator(
            f"1' S^+ 1 = {denom!r}; ones vector orthogonal to the row space"
        )
    w = y / denom
    w = w / w.sum()
    grad = 2.0 * matrix.values @ w
    mu = float(w @ grad)
    residual = grad - mu
    if not nonsingular:
        # Stationarity only holds within the row space for singular input.
        keep = eig.eigenvalues > rank_tol * max(float(eig.eigenvalues[0]), 0.0)
        basis = eig.eigenvectors[:, keep]
        residual = basis @ (basis.T @ residual)
    return PortfolioWeights(
        weights=w,
        constraint_mode="unconstrained",
        estimator_id=estimator_id,
        iterations=1,
        kkt_residual=float(np.max(np.abs(residual))),
    )


def frontier_solution(
    matrix: SymmetricMatrix, mean_returns, target_return: float
) -> EfficientFrontierSolution:
    """Mean-variance frontier portfolio hitting ``target_return``.

    Requires a nonsingular covariance and mean returns not proportional to
    the ones vector.
    """
    n = matrix.n
    mean_returns = np.asarray(mean_returns, dtype=float)
    if mean_returns.shape != (n,):
        raise ValueError(f"mean returns shape {mean_returns.shape}, expected ({n},)")
    _, nonsingular = _spectral_solve(matrix, 1e-10)
    if not nonsingular:
        raise SingularCovariance("frontier solution needs an invertible covariance")
    ones = np.ones(n)
    y_ones = np.linalg.solve(matrix.values, ones)
    y_mean = np.linalg.solve(matrix.values, mean_returns)
    a = float(ones @ y_ones)
    b = float(ones @ y_mean)
    c = float(mean_returns @ y_mean)
    delta = a * c - b * b
    if delta <= 1e-14:
        raise DegenerateFrontier(
            "a*c - b^2 is numerically zero (mean returns proportional to ones)"
        )
    lam = (c - target_return * b) / delta
    gamma = (target_return * a - b) / delta
    weights = lam * y_ones + gamma * y_mean
    return EfficientFrontierSolution(
        lam=lam, gamma=gamma, a=a, b=b, c=c, delta=delta, weights=weights
    )


def _equality_subproblem(values: np.ndarray, free: np.ndarray):
    """Minimize w'Sw over the free assets subject to their sum being one.

    Returns the free-weight vector and the budget multiplier. Falls back to
    a least-squares (minimum-norm) solve when the KKT system is singular,
    which happens for rank-deficient covariances.
    """
    idx = np.flatnonzero(free)
    k = idx.size
    kkt = np.zeros((k + 1, k + 1))
    kkt[:k, :k] = 2.0 * values[np.ix_(idx, idx)]
    kkt[:k, k] = -1.0
    kkt[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    try:
        sol = np.linalg.solve(kkt, rhs)
        bad = not np.all(np.isfinite(sol)) or np.max(
            np.abs(kkt @ sol - rhs)
        ) > 1e-10 * max(1.0, float(np.abs(sol).max()))
        if bad:
            raise np.linalg.LinAlgError("inaccurate solve")
    except np.linalg.LinAlgError:
        sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
    return sol[:k], float(sol[k])


def gmv_long_only(
    matrix: SymmetricMatrix,
    max_iterations: Optional[int] = None,
    estimator_id: Optional[str] = None,
) -> PortfolioWeights:
    """Long-only global-minimum-variance weights via a primal active set.

    Exact for convex problems: at the returned point there is a multiplier
    ``mu`` with gradient component equal to ``mu`` on every invested asset
    and at least ``mu`` on every asset pinned at zero.
    """
    values = matrix.values
    n = matrix.n
    budget = max_iterations if max_iterations is not None else 100 * n
    w = np.full(n, 1.0 / n)
    pinned = np.zeros(n, dtype=bool)
    changes = 0
    # Indices ineligible for release until the iterate actually moves;
    # breaks degenerate release/re-pin cycles on singular matrices.
    barred = set()

    while True:
        free = ~pinned
        target_free, mu = _equality_subproblem(values, free)
        idx = np.flatnonzero(free)

        if target_free.min() >= -_FEAS_TOL:
            w = np.zeros(n)
            w[idx] = np.maximum(target_free, 0.0)
            grad = 2.0 * values @ w
            multipliers = grad[pinned] - mu
            eligible = [
                (multipliers[j], i)
                for j, i in enumerate(np.flatnonzero(pinned))
                if multipliers[j] < -_MULT_TOL and i not in barred
            ]
            if not eligible:
                break
            _, release = min(eligible)
            pinned[release] = False
            barred.add(release)
            changes += 1
        else:
            direction = np.zeros(n)
            direction[idx] = target_free - w[idx]
            blockers = idx[direction[idx] < -1e-15]
            steps = w[blockers] / -direction[blockers]
            j = int(np.argmin(steps))
            step = float(steps[j])
            block = int(blockers[j])
            if step > 0.0:
                w = w + min(step, 1.0) * direction
                barred.clear()
            w[block] = 0.0
            pinned[block] = True
            changes += 1

        if changes > budget:
            raise MaxIterations(
                f"active-set budget of {budget} changes exhausted at n = {n}"
            )

    w[pinned] = 0.0
    w = np.maximum(w, 0.0)
    w = w / w.sum()
    grad = 2.0 * values @ w
    mu = float(w @ grad)
    invested = w > _FEAS_TOL
    residual = 0.0
    if np.any(invested):
        residual = float(np.max(np.abs(grad[invested] - mu)))
    if np.any(~invested):
        residual = max(residual, float(np.max(mu - grad[~invested])))
    return PortfolioWeights(
        weights=w,
        constraint_mode="long_only",
        estimator_id=estimator_id,
        iterations=changes,
        kkt_residual=max(residual, 0.0),
    )


def write_weights_csv(tickers, weights: PortfolioWeights, path) -> None:
    """Export weights as a (ticker, weight) CSV."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("ticker,weight\n")
        for ticker, value in zip(tickers, weights.weights):
            fh.write(f"{ticker},{repr(float(value))}\n")
