"""Hierarchical-clustering correlation filters.

Assets are agglomerated greedily on similarity (the correlation itself),
merging the most similar pair first. Three inter-cluster similarity rules
are supported when cluster L = A + B meets another cluster F:

* ``upgma``:     (N_A * rho_AF + N_B * rho_BF) / (N_A + N_B)
* ``wpgma``:     (rho_AF + rho_BF) / 2
* ``hausdorff``: min( min_{i in L} max_{j in F} rho_ij,
                      max_{i in L} min_{j in F} rho_ij )
                 recomputed from the raw pairwise correlations each step.

The filtered correlation sets entry (i, j) to the merge similarity of the
smallest cluster containing both assets. Hausdorff merge sequences can be
non-monotone; such reversals are removed by clamping each merge similarity
to the minimum of its children's, which restores the ultrametric structure.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .market_data import ReturnPanel
from .matrix_core import SymmetricMatrix, cov_to_corr, sample_covariance
from .spectral import PD_EPS

logger = logging.getLogger(__name__)

LINKAGES = ("upgma", "wpgma", "hausdorff")


@dataclass(frozen=True)
class MergeEvent:
    """One agglomeration step: clusters ``left`` and ``right`` (ids) join at
    ``similarity`` into cluster ``new_id`` with leaf set ``members``."""

    left: int
    right: int
    similarity: float
    new_id: int
    members: frozenset


@dataclass(frozen=True)
class Dendrogram:
    """Full merge history of one linkage run over ``n_leaves`` assets."""

    n_leaves: int
    linkage: str
    merges: tuple

    def __post_init__(self):
        if len(self.merges) != self.n_leaves - 1:
            raise ValueError(
                f"expected {self.n_leaves - 1} merges, got {len(self.merges)}"
            )


@dataclass(frozen=True)
class FilteredCorrelation:
    """Correlation matrix rebuilt from a dendrogram.

    ``reversal_fixed`` marks dendrograms whose merge similarities had to be
    clamped into non-increasing order first.
    """

    matrix: SymmetricMatrix
    linkage: str
    reversal_fixed: bool


def cluster(corr: SymmetricMatrix, linkage: str) -> Dendrogram:
    """Agglomerate a correlation matrix under the given linkage.

    At every step the pair of clusters with maximal similarity merges; ties
    are broken by the lexicographically smallest (cluster id, cluster id)
    pair so runs are deterministic.
    """
    if linkage not in LINKAGES:
        raise ValueError(f"unknown linkage {linkage!r}; choose one of {LINKAGES}")
    n = corr.n
    if n < 2:
        raise ValueError("clustering needs at least 2 assets")

    raw = corr.values
    # Working similarity between active slots; retired slots drop to -inf.
    sim = raw.copy()
    np.fill_diagonal(sim, -np.inf)
    active = np.ones(n, dtype=bool)
    slot_id = list(range(n))
    sizes = np.ones(n)
    members = [frozenset([i]) for i in range(n)]
    if linkage == "hausdorff":
        # max_by_leaf[i, f] / min_by_leaf[i, f]: extreme raw correlation
        # between leaf i and the members of the cluster in slot f.
        max_by_leaf = raw.copy()
        min_by_leaf = raw.copy()

    merges = []
    next_id = n
    for _ in range(n - 1):
        best = sim.max()
        ties = np.argwhere(sim == best)
        pair = min(
            (tuple(sorted((slot_id[i], slot_id[j]))), (i, j))
            for i, j in ties
            if i < j
        )
        left_id, right_id = pair[0]
        a, b = pair[1]

        merged = members[a] | members[b]
        merges.append(
            MergeEvent(
                left=left_id,
                right=right_id,
                similarity=float(best),
                new_id=next_id,
                members=merged,
            )
        )

        others = active.copy()
        others[a] = others[b] = False
        if linkage == "upgma":
            updated = (sizes[a] * sim[a, others] + sizes[b] * sim[b, others]) / (
                sizes[a] + sizes[b]
            )
        elif linkage == "wpgma":
            updated = (sim[a, others] + sim[b, others]) / 2.0
        else:
            max_by_leaf[:, a] = np.maximum(max_by_leaf[:, a], max_by_leaf[:, b])
            min_by_leaf[:, a] = np.minimum(min_by_leaf[:, a], min_by_leaf[:, b])
            rows = np.fromiter(merged, dtype=int)
            minimax = max_by_leaf[np.ix_(rows, np.flatnonzero(others))].min(axis=0)
            maximin = min_by_leaf[np.ix_(rows, np.flatnonzero(others))].max(axis=0)
            updated = np.minimum(minimax, maximin)

        # New cluster takes over slot a; slot b retires.
        sim[a, others] = updated
        sim[others, a] = updated
        sim[b, :] = -np.inf
        sim[:, b] = -np.inf
        sim[a, a] = -np.inf
        active[b] = False
        sizes[a] += sizes[b]
        members[a] = merged
        slot_id[a] = next_id
        next_id += 1

    return Dendrogram(n_leaves=n, linkage=linkage, merges=tuple(merges))


def _monotone_similarities(dendrogram: Dendrogram):
    """Per-merge effective similarity after reversal clamping.

    A merge may not sit above either child merge; each similarity is
    clamped to the minimum of its own value and its children's effective
    values.
    """
    n = dendrogram.n_leaves
    effective = []
    fixed = False
    for merge in dendrogram.merges:
        value = merge.similarity
        for child in (merge.left, merge.right):
            if child >= n:
                value = min(value, effective[child - n])
        if value < merge.similarity:
            fixed = True
        effective.append(value)
    return effective, fixed


def filtered_correlation(dendrogram: Dendrogram) -> FilteredCorrelation:
    """Build the filtered correlation matrix from a merge history.

    Entry (i, j) takes the similarity of the first merge whose member set
    contains both assets, after reversal clamping.
    """
    n = dendrogram.n_leaves
    effective, fixed = _monotone_similarities(dendrogram)
    member_map = {i: (i,) for i in range(n)}
    out = np.eye(n)
    for merge, value in zip(dendrogram.merges, effective):
        left = member_map[merge.left]
        right = member_map[merge.right]
        out[np.ix_(left, right)] = value
        out[np.ix_(right, left)] = value
        member_map[merge.new_id] = left + right
    return FilteredCorrelation(
        matrix=SymmetricMatrix(out), linkage=dendrogram.linkage, reversal_fixed=fixed
    )


def cluster_covariance(
    panel: ReturnPanel, window, linkage: str, return_diagnostics: bool = False
):
    """Clustering-filtered covariance for one estimation window.

    The sample correlation is clustered, rebuilt from the dendrogram and
    rescaled by the sample standard deviations. Filtered matrices with
    negative entries are not guaranteed positive definite; when the minimum
    eigenvalue is not positive the matrix is diagonally loaded (and its
    diagonal renormalized to one) before rescaling.
    """
    cov = sample_covariance(panel, window)
    corr, stds = cov_to_corr(cov)
    dendrogram = cluster(corr, linkage)
    filtered = filtered_correlation(dendrogram)
    values = filtered.matrix.values

    pd_fixed = False
    min_eig = None
    if np.any(values < 0.0):
        min_eig = float(np.linalg.eigvalsh(values).min())
        if min_eig <= 0.0:
            load = max(PD_EPS, PD_EPS - min_eig)
            logger.warning(
                "%s: filtered correlation has min eigenvalue %.3e; "
                "diagonal loading by %.3e",
                linkage,
                min_eig,
                load,
            )
            values = (values + load * np.eye(cov.n)) / (1.0 + load)
            np.fill_diagonal(values, 1.0)
            pd_fixed = True

    scaled = values * np.outer(stds, stds)
    scaled[np.diag_indices_from(scaled)] = cov.diagonal()
    result = SymmetricMatrix(scaled)
    if not return_diagnostics:
        return result
    diagnostics = {
        "reversal_fixed": filtered.reversal_fixed,
        "pd_fixed": pd_fixed,
        "min_eig": min_eig,
    }
    return result, diagnostics


def write_merge_csv(dendrogram: Dendrogram, path) -> None:
    """Export a dendrogram as a merge-list CSV (left, right, similarity)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("left,right,similarity\n")
        for merge in dendrogram.merges:
            fh.write(f"{merge.left},{merge.right},{repr(merge.similarity)}\n")
