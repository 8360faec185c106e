"""Similarity graphs built from feature vectors and the normalized Laplacian.

Fully connected constructions return dense weight matrices; the K-nearest
neighbour construction returns a CSR matrix.  Every builder symmetrizes its
output and (for the Gaussian-kernel recipes) keeps the unit self-loops the
kernel produces on the diagonal.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import cdist

from .errors import DataError, GraphError


def as_features(points):
    """Validate and return an ``(N, d)`` float array of feature vectors."""
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DataError(f"features must be a 2-D array, got shape {X.shape}")
    if X.shape[0] < 2:
        raise DataError("at least two feature vectors are required")
    if X.shape[1] < 1:
        raise DataError("feature dimension must be at least 1")
    if not np.all(np.isfinite(X)):
        raise DataError("features contain non-finite entries")
    return X


@dataclass(frozen=True)
class WeightedGraph:
    """Symmetric nonnegative weight matrix with its degree vector."""

    weights: object
    degrees: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        W = self.weights
        if sparse.issparse(W):
            W = sparse.csr_matrix(W, dtype=float)
            deg = np.asarray(W.sum(axis=1)).ravel()
        else:
            W = np.asarray(W, dtype=float)
            if W.ndim != 2 or W.shape[0] != W.shape[1]:
                raise GraphError(f"weight matrix must be square, got {W.shape}")
            deg = W.sum(axis=1)
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "degrees", deg)

    @property
    def n_nodes(self):
        return self.weights.shape[0]

    @property
    def is_sparse(self):
        return sparse.issparse(self.weights)

    def dense(self):
        return self.weights.toarray() if self.is_sparse else self.weights

    def is_connected(self):
        n_comp, _ = connected_components(sparse.csr_matrix(self.weights != 0), directed=False)
        return n_comp == 1


def symmetrize(W):
    """Return ``(W + W^T) / 2`` for a dense array, sparse matrix or graph."""
    if isinstance(W, WeightedGraph):
        return WeightedGraph(symmetrize(W.weights))
    if sparse.issparse(W):
        if W.shape[0] != W.shape[1]:
            raise GraphError(f"weight matrix must be square, got {W.shape}")
        return ((W + W.T) * 0.5).tocsr()
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise GraphError(f"weight matrix must be square, got {W.shape}")
    return (W + W.T) * 0.5


def _sq_distances(X):
    return cdist(X, X, "sqeuclidean")


def _check_k(k, n):
    if not 1 <= k < n:
        raise GraphError(f"K must satisfy 1 <= K < N, got K={k}, N={n}")


def _scales_from_sq_distances(d2, k):
    off = d2.copy()
    np.fill_diagonal(off, np.inf)
    tau = np.sqrt(np.partition(off, k - 1, axis=1)[:, k - 1])
    if np.any(tau <= 0):
        bad = np.flatnonzero(tau <= 0)[:5].tolist()
        raise GraphError(f"degenerate local scale: tau = 0 at nodes {bad} (duplicate points)")
    return tau


def local_scales(points, k):
    """Distance from every point to its ``k``-th nearest other point."""
    X = as_features(points)
    _check_k(k, X.shape[0])
    return _scales_from_sq_distances(_sq_distances(X), k)


def self_tuning_weights(points, k):
    """Fully connected graph with Zelnik-Manor/Perona self-tuning bandwidths.

    ``a_ij = exp(-|x_i - x_j|^2 / (2 tau_i tau_j))`` where ``tau_j`` is the
    distance from ``x_j`` to its ``k``-th nearest neighbour.
    """
    X = as_features(points)
    _check_k(k, X.shape[0])
    d2 = _sq_distances(X)
    tau = _scales_from_sq_distances(d2, k)
    A = np.exp(-d2 / (2.0 * np.outer(tau, tau)))
    return WeightedGraph(symmetrize(A))


def rbf_weights(points, tau):
    """Fully connected Gaussian-kernel graph with a global bandwidth ``tau``."""
    if not tau > 0:
        raise GraphError(f"bandwidth tau must be positive, got {tau}")
    X = as_features(points)
    A = np.exp(-_sq_distances(X) / (2.0 * tau * tau))
    return WeightedGraph(symmetrize(A))


def knn_mask(points, k):
    """Boolean adjacency: ``i ~ j`` if either is among the other's ``k`` nearest.

    Ties in distance are broken by node index.  The diagonal is set.
    """
    X = as_features(points)
    n = X.shape[0]
    _check_k(k, n)
    d2 = _sq_distances(X)
    np.fill_diagonal(d2, np.inf)
    order = np.argsort(d2, axis=1, kind="stable")[:, :k]
    mask = np.zeros((n, n), dtype=bool)
    mask[np.repeat(np.arange(n), k), order.ravel()] = True
    mask |= mask.T
    np.fill_diagonal(mask, True)
    return mask


def knn_weights(points, k):
    """Sparse K-nearest-neighbour graph carrying self-tuning weights."""
    X = as_features(points)
    tau = local_scales(X, k)
    mask = knn_mask(X, k)
    rows, cols = np.nonzero(mask)
    diff = X[rows] - X[cols]
    vals = np.exp(-np.einsum("ij,ij->i", diff, diff) / (2.0 * tau[rows] * tau[cols]))
    W = sparse.csr_matrix((vals, (rows, cols)), shape=mask.shape)
    graph = WeightedGraph(symmetrize(W))
    if not graph.is_connected():
        raise GraphError("graph not connected: increase K")
    return graph


def cosine_weights(points):
    """Fully connected cosine-similarity graph, negative similarities clamped to 0."""
    X = as_features(points)
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0):
        bad = np.flatnonzero(norms == 0)[:5].tolist()
        raise GraphError(f"zero feature vector at rows {bad}")
    Y = X / norms[:, None]
    A = np.clip(Y @ Y.T, 0.0, 1.0)
    return WeightedGraph(symmetrize(A))


def normalized_laplacian(graph):
    """``L = I - D^{-1/2} A D^{-1/2}``; dense for dense graphs, CSR otherwise."""
    if not isinstance(graph, WeightedGraph):
        graph = WeightedGraph(graph)
    deg = graph.degrees
    if np.any(deg <= 0):
        raise GraphError(f"zero degree at nodes {np.flatnonzero(deg <= 0)[:5].tolist()}")
    if not graph.is_connected():
        raise GraphError("graph not connected: lambda_1 would vanish")
    s = 1.0 / np.sqrt(deg)
    n = graph.n_nodes
    if graph.is_sparse:
        Dm = sparse.diags(s)
        L = sparse.identity(n, format="csr") - Dm @ graph.weights @ Dm
        return symmetrize(L.tocsr())
    L = np.eye(n) - graph.weights * np.outer(s, s)
    return symmetrize(L)


def dirichlet_energy(L, u):
    """Graph Dirichlet energy ``0.5 <u, L u>``."""
    u = np.asarray(u, dtype=float)
    if u.shape != (L.shape[0],):
        raise DataError(f"vector of length {L.shape[0]} expected, got shape {u.shape}")
    return 0.5 * float(u @ (L @ u))


def null_vector(graph):
    """Unit vector along ``D^{1/2} 1``, the kernel of the normalized Laplacian."""
    v = np.sqrt(graph.degrees)
    return v / np.linalg.norm(v)
