"""K-means (Lloyd iterations, k-means++ seeding) over an embedding matrix."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, KExceedsN, ValidationError

log = logging.getLogger(__name__)

DEFAULT_MAX_K = 32
DEFAULT_MAX_ITER = 100
DEFAULT_TOL = 1e-6


@dataclass(frozen=True)
class Clustering:
    centers: np.ndarray  # (K, d)
    assignments: np.ndarray  # (N,) int
    inertia: float
    iterations_run: int
    inertia_history: tuple[float, ...] = ()
    degenerate: bool = False

    @property
    def k(self) -> int:
        return self.centers.shape[0]


def default_k(n: int) -> int:
    return min(DEFAULT_MAX_K, n)


def distances_to_centers(x, centers) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    if centers.ndim != 2 or x.ndim != 1 or centers.shape[1] != x.shape[0]:
        raise DimMismatch(0, x.shape[-1] if x.ndim else 0, centers.shape[-1])
    return np.sqrt(((centers - x) ** 2).sum(axis=1))


def _sq_dists(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # exact (X - c)^2 per center; avoids the cancellation of the |x|^2 - 2x.c + |c|^2 trick
    out = np.empty((X.shape[0], centers.shape[0]))
    for j, c in enumerate(centers):
        diff = X - c
        out[:, j] = np.einsum("ij,ij->i", diff, diff)
    return out


def _assign(X, centers):
    d2 = _sq_dists(X, centers)
    assign = np.argmin(d2, axis=1)  # first minimum -> lowest index on ties
    return assign, d2[np.arange(X.shape[0]), assign]


def _kmeans_pp(X: np.ndarray, k: int, rng: np.random.Generator):
    n = X.shape[0]
    idx = [int(rng.integers(n))]
    closest = _sq_dists(X, X[idx[0]][None, :])[:, 0]
    degenerate = False
    for _ in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            # fewer distinct points than K
            degenerate = True
            idx.append(idx[0])
            continue
        nxt = int(rng.choice(n, p=closest / total))
        idx.append(nxt)
        closest = np.minimum(closest, _sq_dists(X, X[nxt][None, :])[:, 0])
    return X[idx].copy(), degenerate


def _update_centers(X, assign, point_cost, k):
    """Recompute means; an empty cluster takes the point farthest from its own center."""
    d = X.shape[1]
    sums = np.zeros((k, d))
    np.add.at(sums, assign, X)
    counts = np.bincount(assign, minlength=k)
    centers = np.empty((k, d))
    nonempty = counts > 0
    centers[nonempty] = sums[nonempty] / counts[nonempty, None]

    assign = assign.copy()
    cost = point_cost.copy()
    for j in np.flatnonzero(~nonempty):
        far = int(np.argmax(cost))
        centers[j] = X[far]
        assign[far] = j
        cost[far] = 0.0
    return centers, assign


def _inertia(X, centers, assign) -> float:
    diff = X - centers[assign]
    return float(np.einsum("ij,ij->", diff, diff))


def kmeans(
    X,
    k: int,
    seed: int = 0,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> Clustering:
    """Cluster the rows of ``X`` into ``k`` groups.

    Initialization is k-means++ driven by ``numpy.random.default_rng(seed)``
    (PCG64). Iteration stops once the relative inertia improvement drops below
    ``tol`` or after ``max_iter`` Lloyd steps. Final assignments are always the
    argmin over the returned centers.
    """
    X = np.asarray(getattr(X, "data", X), dtype=np.float64)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise KExceedsN(k, n)
    if max_iter < 1 or tol <= 0:
        raise ValidationError(f"need max_iter >= 1 and tol > 0, got {max_iter}, {tol}")

    rng = np.random.default_rng(seed)
    centers, degenerate = _kmeans_pp(X, k, rng)
    if degenerate and k > 1:
        log.warning("k-means: fewer than K=%d distinct points; duplicate centers returned", k)

    assign, cost = _assign(X, centers)
    inertia = float(cost.sum())
    history = [inertia]
    iterations = 0
    for _ in range(max_iter):
        if inertia == 0.0:
            break
        centers, assign = _update_centers(X, assign, cost, k)
        assign, cost = _assign(X, centers)
        new_inertia = float(cost.sum())
        history.append(new_inertia)
        iterations += 1
        improvement = inertia - new_inertia
        inertia = new_inertia
        if improvement <= tol * history[-2]:
            break

    return Clustering(
        centers=centers,
        assignments=assign,
        inertia=_inertia(X, centers, assign),
        iterations_run=iterations,
        inertia_history=tuple(history),
        degenerate=degenerate,
    )


def dump_clusters(clustering: Clustering, item_ids, path) -> None:
    """Write one line per center, then one line per assigned item."""
    with open(path, "w", encoding="utf-8") as fh:
        for j, c in enumerate(clustering.centers):
            fh.write(json.dumps({"center": j, "vector": c.tolist()}) + "\n")
        for item_id, a in zip(item_ids, clustering.assignments):
            fh.write(json.dumps({"item_id": item_id, "cluster": int(a)}) + "\n")
