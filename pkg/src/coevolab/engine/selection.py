"""Opponent clustering, agent selection and end-of-phase ranking.

All ties break toward the lower genotype id.
"""
from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError
from .config import Variant, halving_rounds
from .evaluation import CrossEvalMatrix


def cluster_vectors(vectors: np.ndarray, ids, n: int) -> list[list[int]]:
    """Greedy pairwise agglomeration of ``len(ids)`` vectors into ``n`` groups.

    Each round pairs every group with another one, repeatedly taking the
    globally closest pair of still-unpaired groups (Euclidean distance
    between group centroids), so the group count halves per round.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    ids = [int(i) for i in ids]
    if halving_rounds(len(ids), n) is None:
        raise ConfigurationError(f"{len(ids)} opponents cannot be halved down to {n} groups")
    order = sorted(range(len(ids)), key=lambda i: ids[i])
    groups = [[i] for i in order]
    while len(groups) > n:
        cents = np.array([vectors[g].mean(axis=0) for g in groups])
        diff = cents[:, None, :] - cents[None, :, :]
        dist = np.sqrt((diff * diff).sum(axis=-1))
        keys = [ids[g[0]] for g in groups]
        m = len(groups)
        candidates = sorted((dist[a, b], keys[a], keys[b], a, b)
                            for a in range(m) for b in range(a + 1, m))
        free = [True] * m
        merged = []
        for _, _, _, a, b in candidates:
            if free[a] and free[b]:
                free[a] = free[b] = False
                merged.append(sorted(groups[a] + groups[b], key=lambda i: ids[i]))
        groups = sorted(merged, key=lambda g: ids[g[0]])
    return [[ids[i] for i in g] for g in groups]


def cluster_opponents(matrix: CrossEvalMatrix, n: int) -> list[list[int]]:
    """Group opponents by how they fare against every agent."""
    return cluster_vectors(matrix.opponent_view().T, matrix.opponent_ids, n)


def _best(ids, scores):
    return min(zip(ids, scores), key=lambda p: (-p[1], p[0]))[0]


def opponent_means(matrix: CrossEvalMatrix) -> np.ndarray:
    view = matrix.opponent_view()
    return _row_sums(view.T) / view.shape[0]


def select_opponents(matrix: CrossEvalMatrix, n: int, variant) -> list[int]:
    variant = Variant(variant)
    ids = list(matrix.opponent_ids)
    if variant is Variant.VANILLA:
        return sorted(ids)
    means = dict(zip(ids, opponent_means(matrix)))
    if variant is Variant.SIMPLIFIED:
        return sorted(sorted(ids, key=lambda i: (-means[i], i))[:n])
    groups = cluster_opponents(matrix, n)
    return sorted(_best(g, [means[i] for i in g]) for g in groups)


def select_agents(matrix: CrossEvalMatrix, selected_opponents) -> list[int]:
    """For each opponent (ascending id), the best agent against it not yet taken."""
    chosen: list[int] = []
    taken = set()
    for opp in sorted(selected_opponents):
        col = matrix.column(opp)
        free = [(aid, v) for aid, v in zip(matrix.agent_ids, col) if aid not in taken]
        best = _best([a for a, _ in free], [v for _, v in free])
        chosen.append(best)
        taken.add(best)
    return chosen


def _row_sums(m: np.ndarray) -> np.ndarray:
    # left-to-right over columns, so exactly tied rows give bit-identical sums
    total = np.zeros(m.shape[0])
    for j in range(m.shape[1]):
        total = total + m[:, j]
    return total


def opponent_weights(fits: np.ndarray) -> np.ndarray:
    """Mean opponent-perspective fitness of each opponent (column) over all candidates."""
    fits = np.asarray(fits, dtype=np.float64)
    return _row_sums((1.0 - fits).T) / fits.shape[0]


def ranking_scores(fits: np.ndarray, variant, weights: np.ndarray | None = None) -> np.ndarray:
    """Validation score of each candidate (row) against all opponents (columns)."""
    fits = np.asarray(fits, dtype=np.float64)
    if Variant(variant) is Variant.SIMPLIFIED:
        return _row_sums(fits) / fits.shape[1]
    if weights is None:
        weights = opponent_weights(fits)
    return _row_sums(fits * np.asarray(weights, dtype=np.float64)[None, :])


def top_by_score(ids, scores, k: int) -> list[int]:
    ranked = sorted(zip(ids, scores), key=lambda p: (-p[1], p[0]))
    return [i for i, _ in ranked[:k]]
