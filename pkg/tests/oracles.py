"""Brute-force reference implementations used only by the tests.

Everything here is written with plain Python floats and loops (plus
``numpy.linalg.inv`` for the direct-inversion check) and shares no code with
``actsel``.
"""

import itertools
import math

import numpy as np


def dist(a, b):
    return math.sqrt(sum((float(u) - float(v)) ** 2 for u, v in zip(a, b)))


def softmax_neg_dist(x, centers):
    ds = [dist(x, c) for c in centers]
    ws = [math.exp(-d) for d in ds]
    s = sum(ws)
    return [w / s for w in ws]


def entropy(p):
    return -sum(v * math.log(v) for v in p if v > 0)


def kl(p, q, eps=1e-12):
    return sum(a * (math.log(max(a, eps)) - math.log(max(b, eps))) for a, b in zip(p, q) if a > 0)


def js(p, q):
    m = [(a + b) / 2 for a, b in zip(p, q)]
    return 0.5 * kl(p, m) + 0.5 * kl(q, m)


def greedy_js(X, centers, budget, lam):
    """Re-score every candidate from scratch at every step."""
    P = [softmax_neg_dist(x, centers) for x in X]
    chosen = []
    for _ in range(budget):
        best, best_score = None, -math.inf
        if chosen:
            K = len(centers)
            mean = [sum(P[c][j] for c in chosen) / len(chosen) for j in range(K)]
        for i in range(len(X)):
            if i in chosen:
                continue
            score = entropy(P[i])
            if chosen:
                score += lam * js(P[i], mean)
            if score > best_score:
                best, best_score = i, score
        chosen.append(best)
    return chosen


def direct_inverse(xs, d):
    A = np.eye(d)
    for x in xs:
        A = A + np.outer(x, x)
    return np.linalg.inv(A)


def greedy_fisher(X, budget):
    """Greedy log(1 + x' A^-1 x) with A = I + sum of outer products, inverted directly."""
    X = np.asarray(X, dtype=float)
    d = X.shape[1]
    chosen = []
    for _ in range(budget):
        L = direct_inverse([X[c] for c in chosen], d)
        best, best_gain = None, -math.inf
        for i in range(len(X)):
            if i in chosen:
                continue
            q = sum(X[i, a] * L[a, b] * X[i, b] for a in range(d) for b in range(d))
            g = math.log(1 + q)
            if g > best_gain:
                best, best_gain = i, g
        chosen.append(best)
    return chosen


def best_partition_inertia(points, k):
    """Minimum within-cluster sum of squares over all k-labelings (tiny inputs only)."""
    pts = [list(map(float, p)) for p in points]
    best = math.inf
    best_centers = None
    for labels in itertools.product(range(k), repeat=len(pts)):
        if len(set(labels)) != k:
            continue
        total, centers = 0.0, []
        for j in range(k):
            members = [p for p, l in zip(pts, labels) if l == j]
            c = [sum(col) / len(members) for col in zip(*members)]
            centers.append(c)
            total += sum(dist(p, c) ** 2 for p in members)
        if total < best:
            best, best_centers = total, centers
    return best, best_centers


def recall(ranked, gt, k):
    top = ranked[:k]
    return len(set(top) & set(gt)) / len(set(gt))


def ndcg(ranked, gt, k, truncate_ideal=False):
    gt = set(gt)
    dcg = 0.0
    seen = set()
    for r in range(min(k, len(ranked))):
        t = ranked[r]
        if t in gt and t not in seen:
            seen.add(t)
            dcg += 1.0 / math.log2(r + 2)
    idcg = 0.0
    for r in range(min(len(gt), k) if truncate_ideal else len(gt)):
        idcg += 1.0 / math.log2(r + 2)
    return dcg / idcg
