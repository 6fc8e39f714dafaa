"""Dense symmetric-matrix numerics: sample moments, eigendecomposition,
pseudoinverse and covariance/correlation conversions.

All estimators exchange :class:`SymmetricMatrix` values, whose storage is
exactly symmetric by construction, so downstream code never has to worry
about asymmetric roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import CovlabError

if TYPE_CHECKING:  # pragma: no cover
    from .market_data import ReturnPanel


class DegenerateWindow(CovlabError):
    """Raised when a data window is too short to estimate second moments."""


class ZeroVariance(CovlabError):
    """Raised when an asset has zero sample variance; names the asset."""


class DimensionMismatch(CovlabError):
    """Raised when vector/matrix dimensions do not line up."""


class NoConvergence(CovlabError):
    """Raised when the eigensolver fails to produce a valid decomposition."""


class SymmetricMatrix:
    """Square real matrix stored with exact symmetry.

    Construction symmetrizes the input through ``(a + a.T) / 2`` (an exact
    no-op in IEEE arithmetic for already-symmetric input) and freezes the
    underlying buffer, so ``values[i, j] == values[j, i]`` holds bitwise.
    """

    __slots__ = ("values",)

    def __init__(self, values):
        arr = np.array(values, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionMismatch(f"expected a square matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("matrix entries must be finite")
        arr = (arr + arr.T) / 2.0
        arr.setflags(write=False)
        self.values = arr

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def diagonal(self) -> np.ndarray:
        return np.diag(self.values).copy()

    def __repr__(self):
        return f"SymmetricMatrix(n={self.n})"

    def to_csv(self, path) -> None:
        """Write the matrix as CSV: a single 'n' header line, then n rows."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"{self.n}\n")
            for row in self.values:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "SymmetricMatrix":
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
        n = int(lines[0])
        rows = [[float(v) for v in ln.split(",")] for ln in lines[1 : n + 1]]
        arr = np.array(rows, dtype=float)
        if arr.shape != (n, n):
            raise DimensionMismatch(f"expected {n}x{n} body, got {arr.shape}")
        return cls(arr)


@dataclass(frozen=True)
class EigenDecomposition:
    """Spectral decomposition with eigenvalues sorted descending.

    ``eigenvectors[:, k]`` is the unit eigenvector for ``eigenvalues[k]``;
    the columns are orthonormal to 1e-10.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _window_slice(panel: "ReturnPanel", window) -> np.ndarray:
    start, stop = int(window[0]), int(window[1])
    if not (0 <= start < stop <= panel.n_days):
        raise DimensionMismatch(
            f"window [{start}, {stop}) outside the panel's {panel.n_days} days"
        )
    if stop - start < 2:
        raise DegenerateWindow(f"window [{start}, {stop}) has fewer than 2 days")
    return panel.returns[:, start:stop]


def sample_covariance(panel: "ReturnPanel", window) -> SymmetricMatrix:
    """Sample covariance of the returns in ``window`` (divisor T - 1).

    ``window`` is a half-open ``(start, stop)`` pair of day indices.
    """
    data = _window_slice(panel, window)
    t = data.shape[1]
    centered = data - data.mean(axis=1, keepdims=True)
    cov = centered @ centered.T / (t - 1)
    return SymmetricMatrix(cov)


def cov_to_corr(matrix: SymmetricMatrix):
    """Split a covariance matrix into (correlation matrix, std vector).

    Raises ZeroVariance naming the first asset whose variance is not
    strictly positive.
    """
    variances = np.diag(matrix.values)
    bad = np.flatnonzero(variances <= 0.0)
    if bad.size:
        raise ZeroVariance(f"asset {int(bad[0])} has non-positive variance")
    stds = np.sqrt(variances)
    corr = matrix.values / np.outer(stds, stds)
    corr = np.array(corr)
    np.fill_diagonal(corr, 1.0)
    return SymmetricMatrix(corr), stds


def corr_to_cov(corr: SymmetricMatrix, stds) -> SymmetricMatrix:
    """Rescale a correlation matrix by per-asset standard deviations."""
    stds = np.asarray(stds, dtype=float)
    if stds.shape != (corr.n,):
        raise DimensionMismatch(
            f"stds has shape {stds.shape}, expected ({corr.n},)"
        )
    if np.any(stds <= 0.0):
        raise ZeroVariance("all standard deviations must be strictly positive")
    if np.max(np.abs(np.diag(corr.values) - 1.0)) > 1e-10:
        raise ValueError("input is not a correlation matrix (diagonal != 1)")
    return SymmetricMatrix(corr.values * np.outer(stds, stds))


def eig_symmetric(matrix: SymmetricMatrix) -> EigenDecomposition:
    """Full eigendecomposition with deterministic descending order.

    Ties between equal eigenvalues keep the solver's original ordering
    (stable sort), so repeated calls give identical output.
    """
    a = matrix.values
    try:
        vals, vecs = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(f"eigendecomposition failed: {exc}") from exc
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]

    n = a.shape[0]
    ortho_err = np.max(np.abs(vecs.T @ vecs - np.eye(n)))
    scale = np.max(np.abs(a))
    recon_err = np.max(np.abs((vecs * vals) @ vecs.T - a))
    if ortho_err > 1e-10 or recon_err > 1e-8 * max(scale, 1e-300):
        raise NoConvergence(
            f"eigendecomposition inaccurate (ortho={ortho_err:.2e}, recon={recon_err:.2e})"
        )
    return EigenDecomposition(eigenvalues=vals, eigenvectors=vecs)


def pseudoinverse(matrix: SymmetricMatrix, rank_tol: float = 1e-10) -> SymmetricMatrix:
    """Moore-Penrose pseudoinverse of a symmetric PSD matrix.

    Eigenvalues at or below ``rank_tol`` times the largest one are treated
    as exact zeros and inverted to zero; a zero matrix maps to itself.
    """
    eig = eig_symmetric(matrix)
    lam_max = float(eig.eigenvalues[0]) if matrix.n else 0.0
    threshold = rank_tol * max(lam_max, 0.0)
    vals = eig.eigenvalues
    inv = np.zeros_like(vals)
    keep = vals > threshold
    inv[keep] = 1.0 / vals[keep]
    return SymmetricMatrix((eig.eigenvectors * inv) @ eig.eigenvectors.T)
