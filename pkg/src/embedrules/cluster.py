"""K-means over embedding vectors, silhouette-based model selection, and
nearest-neighbour subsets for local explanations.

All randomness flows through numpy SeedSequences derived from the caller's
seed, so clustering results are reproducible and independent of evaluation
order (each restart and each k in a sweep gets its own child stream).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateData


@dataclass
class EmbeddingSet:
    """Embedding rows keyed by document id."""

    ids: list[str]
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.ndim != 2:
            raise ValueError("embedding matrix must be 2-dimensional")
        if len(self.ids) != self.matrix.shape[0]:
            raise ValueError(
                f"{len(self.ids)} ids for {self.matrix.shape[0]} embedding rows"
            )
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("duplicate document ids")
        if not np.isfinite(self.matrix).all():
            raise ValueError("non-finite entries in embedding matrix")

    def __len__(self):
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]


@dataclass
class ClusterAssignment:
    k: int
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float


def _sq_distances(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, (n, k), clipped at zero for fp safety."""
    x2 = np.einsum("ij,ij->i", X, X)
    c2 = np.einsum("ij,ij->i", C, C)
    d = x2[:, None] + c2[None, :] - 2.0 * (X @ C.T)
    return np.maximum(d, 0.0)


def _kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    first = int(rng.integers(n))
    centers[0] = X[first]
    closest = _sq_distances(X, centers[:1]).ravel()
    for j in range(1, k):
        total = closest.sum()
        if total > 0.0:
            probs = closest / total
            idx = int(rng.choice(n, p=probs))
        else:
            idx = int(rng.integers(n))  # all residual points coincide with centers
        centers[j] = X[idx]
        closest = np.minimum(closest, _sq_distances(X, centers[j : j + 1]).ravel())
    return centers


def _lloyd(X, k, rng, max_iter, tol):
    centers = _kmeans_pp_init(X, k, rng)
    labels = np.zeros(len(X), dtype=int)
    for _ in range(max_iter):
        d = _sq_distances(X, centers)
        labels = d.argmin(axis=1)
        # an emptied cluster restarts at the point farthest from its centroid
        for j in range(k):
            if not (labels == j).any():
                farthest = int(d[np.arange(len(X)), labels].argmax())
                centers[j] = X[farthest]
                d = _sq_distances(X, centers)
                labels = d.argmin(axis=1)
        new_centers = np.vstack([X[labels == j].mean(axis=0) for j in range(k)])
        shift = np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max()
        centers = new_centers
        if shift <= tol:
            break
    d = _sq_distances(X, centers)
    labels = d.argmin(axis=1)
    inertia = float(d[np.arange(len(X)), labels].sum())
    return labels, centers, inertia


def _check_metric(metric: str) -> None:
    if metric not in ("euclidean", "cosine"):
        raise ValueError(f"metric must be 'euclidean' or 'cosine', got {metric!r}")
    if metric == "cosine":
        # reserved option; only Euclidean is implemented
        raise NotImplementedError("cosine distance is not implemented yet")


def kmeans(
    embeddings: EmbeddingSet | np.ndarray,
    k: int,
    seed: int,
    max_iter: int = 300,
    restarts: int = 10,
    tol: float = 1e-6,
    metric: str = "euclidean",
) -> ClusterAssignment:
    """Best-of-``restarts`` Lloyd iterations with k-means++ seeding."""
    _check_metric(metric)
    X = embeddings.matrix if isinstance(embeddings, EmbeddingSet) else np.asarray(embeddings, dtype=float)
    n = X.shape[0]
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    if n < k:
        raise ValueError(f"cannot form {k} clusters from {n} points")
    if np.unique(X, axis=0).shape[0] < k:
        raise DegenerateData(f"fewer than {k} distinct points")
    best = None
    for child in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(child)
        labels, centers, inertia = _lloyd(X, k, rng, max_iter, tol)
        if best is None or inertia < best[2]:
            best = (labels, centers, inertia)
    labels, centers, inertia = best
    return ClusterAssignment(k=k, labels=labels, centroids=centers, inertia=inertia)


def silhouette(embeddings: EmbeddingSet | np.ndarray, labels: np.ndarray) -> float:
    """Mean silhouette value over all samples.

    For each point, a is the mean distance to its own cluster (self excluded)
    and b the smallest mean distance to another cluster; the point scores
    (b - a) / max(a, b).  Singletons (and coincident-point ties with
    max(a, b) = 0) contribute 0.
    """
    X = embeddings.matrix if isinstance(embeddings, EmbeddingSet) else np.asarray(embeddings, dtype=float)
    labels = np.asarray(labels, dtype=int)
    clusters = np.unique(labels)
    if clusters.size < 2:
        raise ValueError("silhouette needs at least 2 clusters")
    D = np.sqrt(_sq_distances(X, X))
    scores = np.zeros(len(X))
    member = {c: labels == c for c in clusters}
    for i in range(len(X)):
        own = member[labels[i]]
        own_size = own.sum()
        if own_size == 1:
            continue  # singleton: score 0
        a = D[i, own].sum() / (own_size - 1)
        b = min(D[i, member[c]].mean() for c in clusters if c != labels[i])
        peak = max(a, b)
        if peak > 0.0:
            scores[i] = (b - a) / peak
    return float(scores.mean())


def sweep_k(
    embeddings: EmbeddingSet | np.ndarray,
    k_range: Sequence[int],
    seed: int,
    max_iter: int = 300,
    restarts: int = 10,
    metric: str = "euclidean",
) -> tuple[list[tuple[int, float]], int]:
    """Silhouette for every k in ``k_range``; returns the rows and the argmax k."""
    _check_metric(metric)
    X = embeddings.matrix if isinstance(embeddings, EmbeddingSet) else np.asarray(embeddings, dtype=float)
    ks = sorted(set(int(k) for k in k_range))
    if not ks:
        raise ValueError("empty k range")
    if ks[0] < 2 or ks[-1] > len(X) - 1:
        raise ValueError(f"k range {ks[0]}..{ks[-1]} outside [2, {len(X) - 1}]")
    rows = []
    for k in ks:
        # per-k child seed keeps each entry independent of sweep order
        child_seed = int(np.random.SeedSequence((seed, k)).generate_state(1)[0])
        assignment = kmeans(X, k, child_seed, max_iter=max_iter, restarts=restarts)
        rows.append((k, silhouette(X, assignment.labels)))
    best_k = max(rows, key=lambda row: (row[1], -row[0]))[0]
    return rows, best_k


def local_subset(embeddings: EmbeddingSet, anchor_id: str, m: int) -> EmbeddingSet:
    """The ``m`` nearest rows to the anchor (inclusive), Euclidean distance,
    distance ties broken by id so the result ignores input row order."""
    if anchor_id not in embeddings.ids:
        raise KeyError(f"anchor id {anchor_id!r} not found")
    if not 1 <= m <= len(embeddings):
        raise ValueError(f"subset size {m} outside [1, {len(embeddings)}]")
    anchor = embeddings.matrix[embeddings.ids.index(anchor_id)]
    dist = np.sqrt(((embeddings.matrix - anchor[None, :]) ** 2).sum(axis=1))
    order = sorted(range(len(embeddings)), key=lambda i: (dist[i], embeddings.ids[i]))
    chosen = order[:m]
    return EmbeddingSet(
        ids=[embeddings.ids[i] for i in chosen],
        matrix=embeddings.matrix[chosen],
    )
