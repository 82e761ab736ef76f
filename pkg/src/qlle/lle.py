"""Classical locally linear embedding, used as the reference for the quantum pipelines.

Conventions: data is ``D x N``; the weight matrix ``W`` is ``N x N`` with
column ``i`` holding the reconstruction weights of point ``i`` (nonzero only
on its neighbors, summing to one); ``M = (I - W)(I - W)^T``; the embedding
``Y`` is ``d x N``.
"""

from dataclasses import dataclass, field

import numpy as np

from .datasets import validate_data
from .errors import ContractError
from .linalg import canonical_signs, check_hermitian, orthonormal_complement

DEFAULT_REG = 0.1
SINGULAR_RTOL = 1e-10
TIE_RTOL = 1e-9


@dataclass(frozen=True)
class NeighborGraph:
    """``indices[i]`` are the k nearest neighbors of point i, nearest first."""

    indices: np.ndarray
    distances: np.ndarray

    @property
    def k(self):
        return self.indices.shape[1]

    @property
    def n(self):
        return self.indices.shape[0]

    def edges(self):
        return {(i, int(j)) for i in range(self.n) for j in self.indices[i]}

    def __eq__(self, other):
        return isinstance(other, NeighborGraph) and np.array_equal(self.indices, other.indices)

    def __hash__(self):
        return hash(self.indices.tobytes())


def pairwise_sq_distances(data):
    diff = data[:, :, None] - data[:, None, :]
    return np.einsum("dij,dij->ij", diff, diff)


def select_neighbors(sq_dist, k):
    """Pick k neighbors per row of a squared-distance matrix.

    The diagonal is excluded. Distances equal within a relative ``1e-9`` are
    treated as ties and resolved by the lower index, so two routes that
    compute the same distances with different rounding agree.
    """
    sq_dist = np.asarray(sq_dist, dtype=float)
    n = sq_dist.shape[0]
    if not 1 <= k < n:
        raise ContractError(f"need 1 <= k < N, got k={k}, N={n}")
    scale = max(float(np.max(np.abs(sq_dist))), 1e-300)
    tol = TIE_RTOL * scale
    idx = np.empty((n, k), dtype=int)
    dist = np.empty((n, k))
    for i in range(n):
        cand = np.array([j for j in range(n) if j != i])
        d = sq_dist[i, cand]
        order = cand[np.argsort(d, kind="stable")]
        ds = sq_dist[i, order]
        # re-sort runs of near-equal distances by index
        out, start = [], 0
        while start < len(order):
            stop = start + 1
            while stop < len(order) and ds[stop] - ds[stop - 1] <= tol:
                stop += 1
            out.extend(sorted(order[start:stop]))
            start = stop
        chosen = np.array(out[:k])
        idx[i] = chosen
        dist[i] = np.sqrt(np.maximum(sq_dist[i, chosen], 0.0))
    return NeighborGraph(idx, dist)


def knn(data, k):
    """Exact Euclidean k nearest neighbors of every column of ``data``."""
    data = validate_data(data)
    if not 1 <= k < data.shape[1]:
        raise ContractError(f"need 1 <= k < N, got k={k}, N={data.shape[1]}")
    return select_neighbors(pairwise_sq_distances(data), k)


def local_gram(data, graph, i):
    """``C_i = dX^T dX`` on the k neighbor slots of point i (the unpadded block)."""
    z = data[:, graph.indices[i]] - data[:, [i]]
    return z.T @ z


def is_singular(c, rtol=SINGULAR_RTOL):
    s = np.linalg.svd(c, compute_uv=False)
    return s[0] == 0.0 or s[-1] <= rtol * s[0]


def regularized_gram(c, reg=DEFAULT_REG):
    """Return ``(C + reg tr(C) I, flagged)``; the shift is applied only to singular ``C``."""
    if is_singular(c):
        tr = np.trace(c)
        shift = reg * tr if tr > 0 else reg
        return c + shift * np.eye(c.shape[0]), True
    return c, False


def local_weights(data, graph, reg=DEFAULT_REG, report=None):
    """Reconstruction weights: column i solves ``C_i w = 1`` rescaled to sum one.

    When ``report`` is a dict it receives per-point regularization flags and
    reconstruction residuals.
    """
    data = validate_data(data)
    n = data.shape[1]
    if graph.n != n:
        raise ContractError("neighbor graph does not match the data")
    w = np.zeros((n, n))
    flags = []
    for i in range(n):
        c, flagged = regularized_gram(local_gram(data, graph, i), reg)
        col = np.linalg.solve(c, np.ones(graph.k))
        w[graph.indices[i], i] = col / col.sum()
        flags.append(bool(flagged))
    if report is not None:
        report["regularized"] = flags
        report["residuals"] = reconstruction_residuals(data, w).tolist()
    return w


def reconstruction_residuals(data, w):
    return np.linalg.norm(data - data @ w, axis=0)


def build_m(w):
    """Target matrix ``(I - W)(I - W)^T``, exactly symmetric."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ContractError(f"weight matrix must be square, got {w.shape}")
    a = np.eye(w.shape[0]) - w
    m = a @ a.T
    return 0.5 * (m + m.T)


def embed(m, d, return_eigenvalues=False):
    """Bottom ``d`` eigenvectors of ``M`` orthogonal to the all-ones vector, scaled by sqrt(N).

    The constant vector is always an eigenvector of ``M`` with eigenvalue 0, so
    restricting to its complement returns eigenvectors 2..d+1 when that
    eigenvalue is simple and picks the correct basis when it is not (for
    example on a disconnected neighbor graph).
    """
    m = check_hermitian(m, tol=1e-10)
    n = m.shape[0]
    if not 1 <= d <= n - 1:
        raise ContractError(f"need 1 <= d <= N-1, got d={d}, N={n}")
    q = orthonormal_complement(np.ones(n))
    vals, vecs = np.linalg.eigh(q.T @ m @ q)
    u = canonical_signs(q @ vecs[:, :d])
    y = np.sqrt(n) * u.T
    if return_eigenvalues:
        return y, vals[:d]
    return y


def embedding_defects(y):
    """Max deviations from the centering and whitening constraints."""
    y = np.asarray(y)
    n = y.shape[1]
    center = float(np.max(np.abs(y.sum(axis=1))))
    white = float(np.max(np.abs(y @ y.T / n - np.eye(y.shape[0]))))
    return center, white


@dataclass
class LLEResult:
    graph: NeighborGraph
    weights: np.ndarray
    m: np.ndarray
    embedding: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def lle(data, k, d, reg=DEFAULT_REG):
    """Run the full classical pipeline and collect a JSON-ready diagnostics report."""
    graph = knn(data, k)
    report = {}
    w = local_weights(data, graph, reg=reg, report=report)
    m = build_m(w)
    y = embed(m, d)
    report["eigenvalues"] = np.linalg.eigvalsh(m).tolist()
    return LLEResult(graph, w, m, y, report)
