"""Embedding comparison: principal subspace angle, Procrustes residual and trustworthiness."""

import numpy as np
from scipy.linalg import orthogonal_procrustes, subspace_angles

from .errors import ContractError
from .lle import pairwise_sq_distances


def subspace_angle_deg(y_a, y_b):
    """Largest principal angle between the row spaces of two ``d x N`` embeddings."""
    return float(np.degrees(np.max(subspace_angles(np.asarray(y_a).T, np.asarray(y_b).T))))


def procrustes_residual(y_a, y_b):
    """``min_R |R y_a - y_b|_F / |y_b|_F`` over orthogonal ``R``."""
    y_a, y_b = np.asarray(y_a, float), np.asarray(y_b, float)
    r, _ = orthogonal_procrustes(y_a.T, y_b.T)
    return float(np.linalg.norm(y_a.T @ r - y_b.T) / np.linalg.norm(y_b))


def _neighbor_order(sq):
    sq = sq.copy()
    np.fill_diagonal(sq, np.inf)
    return np.argsort(sq, axis=1, kind="stable")


def trustworthiness(data, y, k):
    """Fraction of the embedding's k-NN structure that is faithful to the data.

    ``T = 1 - 2 / (N k (2N - 3k - 1)) * sum_i sum_{j in U_i} (r(i, j) - k)``
    with ``U_i`` the embedding neighbors of ``i`` that are not among its ``k``
    nearest in the data and ``r(i, j)`` the rank of ``j`` by data distance.
    Needs ``k < N / 2``.
    """
    data, y = np.asarray(data, float), np.asarray(y, float)
    n = data.shape[1]
    if y.shape[1] != n:
        raise ContractError("data and embedding have different point counts")
    if not 1 <= k < n / 2:
        raise ContractError(f"trustworthiness needs 1 <= k < N/2, got k={k}, N={n}")
    order_x = _neighbor_order(pairwise_sq_distances(data))
    ranks = np.empty((n, n), dtype=int)
    ranks[np.arange(n)[:, None], order_x] = np.arange(1, n + 1)
    nn_y = _neighbor_order(pairwise_sq_distances(y))[:, :k]
    excess = ranks[np.arange(n)[:, None], nn_y] - k
    penalty = np.sum(np.maximum(excess, 0))
    return float(1.0 - penalty * 2.0 / (n * k * (2.0 * n - 3.0 * k - 1.0)))


def compare(y_a, y_b, data, k):
    """Metrics between two embeddings of ``data``; keys are JSON-ready."""
    y_a, y_b = np.asarray(y_a, float), np.asarray(y_b, float)
    if y_a.shape != y_b.shape:
        raise ContractError(f"embedding shapes differ: {y_a.shape} vs {y_b.shape}")
    return {
        "subspace_angle_deg": subspace_angle_deg(y_a, y_b),
        "procrustes_residual": procrustes_residual(y_a, y_b),
        "trustworthiness_a": trustworthiness(data, y_a, k),
        "trustworthiness_b": trustworthiness(data, y_b, k),
    }
