"""Greedy one-at-a-time sample selectors.

Three strategies share one incremental contract: given the indices still in
the pool, return the next index to spend teacher budget on and fold it into
the selector's state.

* ``js``: soft cluster membership (softmax of negative distances to K-means
  centers) scored by entropy plus ``lam`` times the JS divergence from the mean
  membership of the already selected set.
* ``fisher``: gain ``log(1 + x' L x)`` where ``L`` is the inverse design
  covariance, kept current with rank-one Sherman-Morrison updates.
* ``random_uniform``: uniform draw from the pool.

All logs are natural. Ties resolve to the lowest index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .clustering import Clustering
from .errors import (
    BudgetExceedsPool,
    ConfigError,
    DimMismatch,
    EmptyRemaining,
    LengthMismatch,
    ValidationError,
)

LOG_EPS = 1e-12
LN2 = math.log(2.0)
MEAN_REFRESH_EVERY = 256

STRATEGIES = (
    "random_uniform",
    "js",
    "fisher",
    "metadata_js",
    "metadata_fisher",
    "user_js",
    "user_fisher",
)


def base_strategy(name: str) -> str:
    """Map a strategy name to its selector kind (fused variants share selectors)."""
    if name not in STRATEGIES:
        raise ConfigError(f"unknown strategy {name!r}; choose from {', '.join(STRATEGIES)}")
    if name.endswith("_js") or name == "js":
        return "js"
    if name.endswith("_fisher") or name == "fisher":
        return "fisher"
    return "random_uniform"


def aux_source(name: str) -> Optional[str]:
    """Which auxiliary embedding a strategy fuses in: 'metadata', 'user' or None."""
    base_strategy(name)
    if name.startswith("metadata_"):
        return "metadata"
    if name.startswith("user_"):
        return "user"
    return None


# --- cluster distributions and information measures ------------------------------


def _softmax_neg(dist: np.ndarray) -> np.ndarray:
    # softmax(-d) along the last axis, shifted by the smallest distance
    z = -(dist - dist.min(axis=-1, keepdims=True))
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cluster_distribution(x, centers) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    if x.ndim != 1 or centers.ndim != 2 or centers.shape[1] != x.shape[0]:
        raise DimMismatch(0, x.shape[-1] if x.ndim else 0, centers.shape[-1])
    return _softmax_neg(np.sqrt(((centers - x) ** 2).sum(axis=1)))


def cluster_distributions(X, centers) -> np.ndarray:
    """Row-wise :func:`cluster_distribution` for a whole matrix."""
    X = np.asarray(getattr(X, "data", X), dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    if centers.ndim != 2 or X.shape[1] != centers.shape[1]:
        raise DimMismatch(0, X.shape[1], centers.shape[-1])
    dist = np.empty((X.shape[0], centers.shape[0]))
    for j, c in enumerate(centers):
        diff = X - c
        dist[:, j] = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return _softmax_neg(dist)


def _entropy_rows(P: np.ndarray) -> np.ndarray:
    # 0 ln 0 := 0
    logs = np.log(np.where(P > 0, P, 1.0))
    return -(P * logs).sum(axis=-1)


def entropy(p) -> float:
    return float(_entropy_rows(np.asarray(p, dtype=np.float64)))


def _js_rows(P: np.ndarray, q: np.ndarray) -> np.ndarray:
    m = 0.5 * (P + q)
    log_m = np.log(np.maximum(m, LOG_EPS))
    kl_p = (P * (np.log(np.maximum(P, LOG_EPS)) - log_m)).sum(axis=-1)
    kl_q = (q * (np.log(np.maximum(q, LOG_EPS)) - log_m)).sum(axis=-1)
    return np.clip(0.5 * kl_p + 0.5 * kl_q, 0.0, LN2)


def js_divergence(p, q) -> float:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise LengthMismatch(p.shape[-1], q.shape[-1])
    return float(_js_rows(p, q))


# --- state ---------------------------------------------------------------------------


@dataclass
class JsState:
    distributions: np.ndarray  # (N, K)
    lam: float = 1.0
    selected: list[int] = field(default_factory=list)
    mean_selected: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.lam < 0:
            raise ValidationError(f"lambda must be >= 0, got {self.lam}")
        self.distributions = np.asarray(self.distributions, dtype=np.float64)
        if self.selected and self.mean_selected is None:
            self.recompute_mean()

    def recompute_mean(self):
        if self.selected:
            self.mean_selected = self.distributions[self.selected].mean(axis=0)
        else:
            self.mean_selected = None

    def add(self, i: int):
        self.selected.append(i)
        n = len(self.selected)
        if n == 1 or n % MEAN_REFRESH_EVERY == 0:
            self.recompute_mean()
        else:
            self.mean_selected = self.mean_selected + (self.distributions[i] - self.mean_selected) / n


@dataclass
class FisherState:
    lambda_inv: np.ndarray  # (d, d)
    selected: list[int] = field(default_factory=list)

    @classmethod
    def initial(cls, d: int) -> "FisherState":
        return cls(np.eye(d))

    @property
    def dim(self) -> int:
        return self.lambda_inv.shape[0]


@dataclass
class RandomState:
    selected: list[int] = field(default_factory=list)


def _pool(remaining: Iterable[int]) -> np.ndarray:
    pool = np.unique(np.fromiter(remaining, dtype=np.int64))
    if pool.size == 0:
        raise EmptyRemaining()
    return pool


# --- JS ------------------------------------------------------------------------------


def js_scores(state: JsState, pool: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Entropy and JS-to-selected-mean for each index in ``pool``."""
    P = state.distributions[pool]
    h = _entropy_rows(P)
    if state.mean_selected is None:
        return h, np.zeros_like(h)
    return h, _js_rows(P, state.mean_selected)


def _js_pick(state: JsState, remaining):
    pool = _pool(remaining)
    h, js = js_scores(state, pool)
    total = h + state.lam * js if state.selected else h
    w = int(np.argmax(total))
    i = int(pool[w])
    state.add(i)
    return i, {"entropy": float(h[w]), "js": float(js[w]), "score": float(total[w])}


def js_select_next(state: JsState, remaining) -> int:
    return _js_pick(state, remaining)[0]


# --- Fisher ----------------------------------------------------------------------------


def fisher_gain(x, state: FisherState) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (state.dim,):
        raise DimMismatch(0, x.shape[-1] if x.ndim else 0, state.dim)
    return math.log1p(float(x @ state.lambda_inv @ x))


def sherman_morrison_update(state: FisherState, x) -> FisherState:
    """Inverse of ``inv(L) + x x'`` from ``L`` in O(d^2)."""
    x = np.asarray(x, dtype=np.float64)
    L = state.lambda_inv
    if x.shape != (L.shape[0],):
        raise DimMismatch(0, x.shape[-1] if x.ndim else 0, L.shape[0])
    Lx = L @ x
    new = L - np.outer(Lx, Lx) / (1.0 + x @ Lx)
    new = 0.5 * (new + new.T)
    return FisherState(new, list(state.selected))


def fisher_gains(state: FisherState, X: np.ndarray, pool: np.ndarray) -> np.ndarray:
    Xp = X[pool]
    quad = np.einsum("ij,jk,ik->i", Xp, state.lambda_inv, Xp)
    return np.log1p(quad)


def _fisher_pick(state: FisherState, X, remaining):
    X = np.asarray(getattr(X, "data", X), dtype=np.float64)
    if X.shape[1] != state.dim:
        raise DimMismatch(0, X.shape[1], state.dim)
    pool = _pool(remaining)
    gains = fisher_gains(state, X, pool)
    w = int(np.argmax(gains))
    i = int(pool[w])
    state.lambda_inv = sherman_morrison_update(state, X[i]).lambda_inv
    state.selected.append(i)
    return i, {"fisher_gain": float(gains[w])}


def fisher_select_next(state: FisherState, X, remaining) -> int:
    return _fisher_pick(state, X, remaining)[0]


# --- random ----------------------------------------------------------------------------


def random_select_next(state: Optional[RandomState], remaining, rng: np.random.Generator) -> int:
    pool = _pool(remaining)
    i = int(pool[rng.integers(pool.size)])
    if state is not None:
        state.selected.append(i)
    if isinstance(remaining, set):
        remaining.discard(i)
    return i


# --- stateful wrappers -------------------------------------------------------------------


class Selector:
    """Selector with state threaded across calls; ``history`` keeps per-pick scores."""

    kind = ""

    def __init__(self):
        self.history: list[dict] = []

    @property
    def selected(self) -> list[int]:
        return self.state.selected

    def next(self, remaining) -> tuple[int, dict]:
        i, scores = self._pick(remaining)
        self.history.append(scores)
        return i, scores

    def _pick(self, remaining):
        raise NotImplementedError


class JsSelector(Selector):
    kind = "js"

    def __init__(self, X, clustering: Clustering, lam: float = 1.0):
        super().__init__()
        self.state = JsState(cluster_distributions(X, clustering.centers), lam)

    def recluster(self, X, clustering: Clustering):
        self.state.distributions = cluster_distributions(X, clustering.centers)
        self.state.recompute_mean()

    def _pick(self, remaining):
        return _js_pick(self.state, remaining)


class FisherSelector(Selector):
    kind = "fisher"

    def __init__(self, X):
        super().__init__()
        self.X = np.asarray(getattr(X, "data", X), dtype=np.float64)
        self.state = FisherState.initial(self.X.shape[1])

    def _pick(self, remaining):
        return _fisher_pick(self.state, self.X, remaining)


class RandomSelector(Selector):
    kind = "random_uniform"

    def __init__(self, rng: np.random.Generator):
        super().__init__()
        self.rng = rng
        self.state = RandomState()

    def _pick(self, remaining):
        return random_select_next(self.state, remaining, self.rng), {}


def make_selector(strategy: str, X, clustering: Optional[Clustering] = None, lam: float = 1.0, seed: int = 0) -> Selector:
    kind = base_strategy(strategy)
    if kind == "js":
        if clustering is None:
            raise ConfigError(f"strategy {strategy!r} needs a clustering")
        return JsSelector(X, clustering, lam)
    if kind == "fisher":
        return FisherSelector(X)
    return RandomSelector(np.random.default_rng(seed))


def select_batch(
    strategy: str,
    X,
    clustering: Optional[Clustering] = None,
    budget: int = 1,
    lam: float = 1.0,
    seed: int = 0,
    remaining=None,
) -> list[int]:
    """Greedily pick ``budget`` distinct indices, in selection order."""
    n = len(getattr(X, "data", X))
    pool = set(range(n) if remaining is None else remaining)
    if budget < 0 or budget > len(pool):
        raise BudgetExceedsPool(budget, len(pool))
    selector = make_selector(strategy, X, clustering, lam, seed)
    picks = []
    for _ in range(budget):
        i, _ = selector.next(pool)
        pool.discard(i)
        picks.append(i)
    return picks
