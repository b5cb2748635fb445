"""Fairness-penalised k-means (FairKM-style) and cluster fairness ranking.

Objective over a partition of m points into k clusters:

    O = sum_C sum_{x in C} ||x - c_C||^2  +  lam * F

    F = sum_C (|C|/m)^2 * sum_S (1/|V_S|) * sum_{v in V_S} (Fr_C(v) - Fr_X(v))^2

where S runs over sensitive attributes and V_S are the values S takes in the
clustered set. Written in counts, a cluster's contribution to F for one
attribute is sum_v (n_Cv - |C| p_v)^2 / (|V_S| m^2), which is what the greedy
pass updates incrementally.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numba
import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class FairKMConfig:
    k: int
    lam: float = 1e8
    max_iters: int = 100
    tol: float = 1e-6
    seed: int = 0
    n_init: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.n_init < 1:
            raise ValueError("n_init must be >= 1")


@dataclass(frozen=True)
class ClusterModel:
    centroids: np.ndarray
    assignment: np.ndarray
    objective: float
    per_cluster_fairness: np.ndarray
    ranking: tuple[int, ...]
    sizes: np.ndarray
    history: tuple[float, ...] = ()
    assignments: tuple[np.ndarray, ...] = field(default=(), repr=False)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]


def _group_codes(s) -> np.ndarray:
    """(m, A) matrix of 0-based value codes, one column per sensitive attribute."""
    s = np.asarray(s)
    if s.ndim == 1:
        s = s[:, None]
    return np.column_stack(
        [np.unique(s[:, a], return_inverse=True)[1] for a in range(s.shape[1])]
    ).astype(np.int64)


def attribute_deviation(cluster_points, all_points, s, attribute: int = 0) -> float:
    """Normalised deviation of one cluster's value mix from the whole set's.

    (1/|V|) * sum_v (Fr_C(v) - Fr_X(v))^2, with V the values present among
    ``all_points``. Point sets are index arrays into ``s``.
    """
    s = np.asarray(s)
    col = s if s.ndim == 1 else s[:, attribute]
    cluster_points = np.asarray(cluster_points, dtype=np.int64)
    all_points = np.asarray(all_points, dtype=np.int64)
    if len(cluster_points) == 0:
        raise ValueError("empty cluster")
    if not np.isin(cluster_points, all_points).all():
        raise ValueError("cluster points must be a subset of all points")
    values, inv_all = np.unique(col[all_points], return_inverse=True)
    fr_all = np.bincount(inv_all, minlength=len(values)) / len(all_points)
    inv_c = np.searchsorted(values, col[cluster_points])
    fr_c = np.bincount(inv_c, minlength=len(values)) / len(cluster_points)
    return float(np.sum((fr_c - fr_all) ** 2) / len(values))


def cluster_fairness_score(cluster_points, all_points, s) -> float:
    """(|C|/|X|)^2 times the summed attribute deviations; lower is fairer."""
    s = np.asarray(s)
    n_attr = 1 if s.ndim == 1 else s.shape[1]
    dev = sum(attribute_deviation(cluster_points, all_points, s, a) for a in range(n_attr))
    return (len(cluster_points) / len(all_points)) ** 2 * dev


def total_fairness_deviation(model: ClusterModel, s) -> float:
    """Sum of per-cluster fairness scores; ``s`` is aligned with the clustered points."""
    all_points = np.arange(len(model.assignment))
    return math.fsum(
        cluster_fairness_score(np.flatnonzero(model.assignment == c), all_points, s)
        for c in range(model.k) if np.any(model.assignment == c)
    )


def rank_clusters(scores: Sequence[float]) -> list[int]:
    """Cluster ids from most fair (lowest score) to least; ties by smaller id."""
    return sorted(range(len(scores)), key=lambda c: (scores[c], c))


def kmeanspp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Indices of k seed points chosen by k-means++ on squared distances."""
    m = X.shape[0]
    xx = np.einsum("ij,ij->i", X, X)

    def to_point(i):
        return np.maximum(xx - 2.0 * (X @ X[i]) + xx[i], 0.0)

    chosen = [int(rng.integers(m))]
    d2 = to_point(chosen[0])
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(m, p=d2 / total))
        else:
            # fewer distinct points than k; the empty-cluster rule sorts it out
            nxt = int(rng.integers(m))
        chosen.append(nxt)
        d2 = np.minimum(d2, to_point(nxt))
    return np.array(chosen, dtype=np.int64)


def sq_distances(X: np.ndarray, C: np.ndarray, xx: np.ndarray | None = None) -> np.ndarray:
    if xx is None:
        xx = np.einsum("ij,ij->i", X, X)
    d = xx[:, None] - 2.0 * (X @ C.T) + np.einsum("ij,ij->i", C, C)[None, :]
    return np.maximum(d, 0.0)


def _centroids(X, assign, k):
    m = X.shape[0]
    M = sp.csr_matrix((np.ones(m), (assign, np.arange(m))), shape=(k, m))
    sizes = np.bincount(assign, minlength=k).astype(float)
    return np.asarray(M @ X) / np.maximum(sizes, 1.0)[:, None]


def _fix_empty(X, assign, k):
    """Re-seed each empty cluster with the farthest member of the largest cluster."""
    assign = assign.copy()
    sizes = np.bincount(assign, minlength=k)
    for c in np.flatnonzero(sizes == 0):
        big = int(np.argmax(sizes))
        members = np.flatnonzero(assign == big)
        centre = X[members].mean(0)
        far = members[int(np.argmax(np.sum((X[members] - centre) ** 2, axis=1)))]
        assign[far] = c
        sizes[big] -= 1
        sizes[c] += 1
    return assign


def _count_table(codes, assign, k, vmax):
    A = codes.shape[1]
    counts = np.zeros((A, k, vmax))
    for a in range(A):
        np.add.at(counts[a], (assign, codes[:, a]), 1.0)
    return counts


def _fairness_from_counts(counts, sizes, p, nvals, m):
    """Per-cluster fairness contributions from the count table."""
    e = counts - sizes[None, :, None] * p[:, None, :]
    mask = (np.arange(p.shape[1])[None, :] < nvals[:, None])[:, None, :]
    per_attr = np.sum(np.where(mask, e * e, 0.0), axis=2) / nvals[:, None]
    return per_attr.sum(0) / (m * m)


@numba.njit(cache=True)
def _greedy_pass(D, assign, order, codes, counts, sizes, p, nvals, lam_m2):
    """Visit points in ``order``; move each to the cluster with the lowest
    distance-plus-fairness cost. Mutates assign/counts/sizes; returns moves.

    A point never leaves a singleton cluster, so no cluster empties.
    """
    m, k = D.shape
    A = codes.shape[1]
    cost = np.empty(k)
    moves = 0
    for t in range(order.shape[0]):
        i = order[t]
        a = assign[i]
        if sizes[a] <= 1.0:
            continue
        for j in range(k):
            cost[j] = D[i, j]
        if lam_m2 > 0.0:
            for att in range(A):
                u = codes[i, att]
                nv = nvals[att]
                sum_p2 = 0.0
                for v in range(nv):
                    sum_p2 += p[att, v] * p[att, v]
                q = 1.0 - 2.0 * p[att, u] + sum_p2
                w = lam_m2 / nv
                # change from removing i from its current cluster
                ep = 0.0
                for v in range(nv):
                    ep += (counts[att, a, v] - sizes[a] * p[att, v]) * p[att, v]
                eu = counts[att, a, u] - sizes[a] * p[att, u]
                d_remove = -2.0 * (eu - ep) + q
                for j in range(k):
                    if j == a:
                        continue
                    ep = 0.0
                    for v in range(nv):
                        ep += (counts[att, j, v] - sizes[j] * p[att, v]) * p[att, v]
                    eu = counts[att, j, u] - sizes[j] * p[att, u]
                    cost[j] += w * (d_remove + 2.0 * (eu - ep) + q)
        best = a
        for j in range(k):
            if cost[j] < cost[best]:
                best = j
        if best != a:
            for att in range(A):
                u = codes[i, att]
                counts[att, a, u] -= 1.0
                counts[att, best, u] += 1.0
            sizes[a] -= 1.0
            sizes[best] += 1.0
            assign[i] = best
            moves += 1
    return moves


OrderFn = Callable[[int], np.ndarray]


def fit_from(X, s, centroids, lam: float, max_iters: int = 100, tol: float = 1e-6,
             order_fn: OrderFn | None = None, record: bool = False) -> ClusterModel:
    """Alternate greedy reassignment and mean updates from given seed centroids.

    ``order_fn(it)`` returns the point visit order for pass ``it``; the default
    is index order. With ``record`` the assignment after every pass is kept.
    Raises AssertionError if the objective ever increases.
    """
    X = np.ascontiguousarray(X, dtype=float)
    m = X.shape[0]
    k = centroids.shape[0]
    codes = _group_codes(s)
    A = codes.shape[1]
    nvals = codes.max(0) + 1
    vmax = int(nvals.max())
    p = np.zeros((A, vmax))
    for a in range(A):
        p[a, :nvals[a]] = np.bincount(codes[:, a], minlength=nvals[a]) / m
    if order_fn is None:
        order_fn = lambda it: np.arange(m)  # noqa: E731

    xx = np.einsum("ij,ij->i", X, X)
    assign = np.argmin(sq_distances(X, centroids, xx), axis=1).astype(np.int64)
    assign = _fix_empty(X, assign, k)
    C = _centroids(X, assign, k)
    sizes = np.bincount(assign, minlength=k).astype(float)
    counts = _count_table(codes, assign, k, vmax)

    def value(C, assign):
        dist = float(np.sum((X - C[assign]) ** 2))
        return dist + lam * float(_fairness_from_counts(counts, sizes, p, nvals, m).sum())

    obj = value(C, assign)
    history = [obj]
    snapshots = [assign.copy()] if record else []
    for it in range(max_iters):
        D = sq_distances(X, C, xx)
        order = np.asarray(order_fn(it), dtype=np.int64)
        moves = _greedy_pass(D, assign, order, codes, counts, sizes, p,
                             nvals.astype(np.int64), lam / (m * m))
        C = _centroids(X, assign, k)
        new = value(C, assign)
        assert new <= obj + 1e-9 * max(1.0, abs(obj)), \
            f"objective increased from {obj} to {new} at pass {it}"
        history.append(new)
        if record:
            snapshots.append(assign.copy())
        improved = obj - new
        obj = new
        if moves == 0 or improved < tol * abs(obj):
            break

    all_points = np.arange(m)
    scores = np.array([cluster_fairness_score(np.flatnonzero(assign == c), all_points, s)
                       for c in range(k)])
    return ClusterModel(centroids=C, assignment=assign, objective=obj,
                        per_cluster_fairness=scores, ranking=tuple(rank_clusters(scores)),
                        sizes=sizes.astype(np.int64), history=tuple(history),
                        assignments=tuple(snapshots))


def fit(X, s, cfg: FairKMConfig) -> ClusterModel:
    """Fair k-means with k-means++ seeding; best of ``cfg.n_init`` restarts."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    m = X.shape[0]
    if m < cfg.k:
        raise ValueError(f"cannot form {cfg.k} clusters from {m} points")
    if not np.isfinite(X).all():
        raise ValueError("non-finite values in X")
    if len(np.asarray(s)) != m:
        raise ValueError("s must have one entry per point")
    rng = np.random.default_rng(cfg.seed)
    best = None
    for _ in range(cfg.n_init):
        seeds = kmeanspp_init(X, cfg.k, rng)
        order_rng = np.random.default_rng(rng.integers(2**63))
        model = fit_from(X, s, X[seeds], cfg.lam, cfg.max_iters, cfg.tol,
                         order_fn=lambda it: order_rng.permutation(m))
        if best is None or model.objective < best.objective:
            best = model
    return best
