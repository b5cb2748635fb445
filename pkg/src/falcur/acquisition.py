"""Uncertainty + representativeness scoring and round-robin batch selection.

Within each fair cluster, a sample's entropy and its summed Euclidean distance
to the other members are min-max normalised (distance negated, so higher
means more representative) and mixed as

    score = beta * rep_norm + (1 - beta) * entropy_norm

Clusters are then visited in fairness-rank order, taking the j-th best sample
of each cluster in round j, until the batch is full.
"""
from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist

from . import fair_clustering


@dataclass(frozen=True)
class AcquisitionConfig:
    beta: float = 0.6
    batch_size: int = 180
    k: int = 180
    pre_filter: int | None = None
    # literal form uses (beta - 1) on the entropy term
    literal_weights: bool = False

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.pre_filter is not None and self.pre_filter < 1:
            raise ValueError("pre_filter must be positive")


@dataclass(frozen=True)
class SampleScore:
    index: int
    cluster: int
    entropy_raw: float
    rep_raw: float
    entropy_norm: float
    rep_norm: float
    combined: float


@dataclass(frozen=True)
class Pick:
    round: int
    rank: int
    cluster: int
    index: int


@dataclass(frozen=True)
class BatchSelection:
    chosen: tuple[int, ...]
    trace: tuple[Pick, ...] = ()
    exhausted: bool = False

    def digest(self) -> str:
        payload = ",".join(map(str, self.chosen)).encode()
        return hashlib.sha256(payload).hexdigest()[:16]


def entropy(proba) -> np.ndarray:
    """Binary entropy in nats of P(y=1|x); inputs are assumed clipped to (0, 1)."""
    p = np.asarray(proba, dtype=float)
    q = 1.0 - p
    return -(p * np.log(p) + q * np.log(q))


def representativeness_raw(members, chunk: int = 2048) -> np.ndarray:
    """Sum of Euclidean distances from each member to every member."""
    members = np.atleast_2d(np.asarray(members, dtype=float))
    n = members.shape[0]
    out = np.empty(n)
    for lo in range(0, n, chunk):
        out[lo:lo + chunk] = cdist(members[lo:lo + chunk], members).sum(1)
    return out


def normalize_scores(raw, higher_is_better: bool = True) -> np.ndarray:
    """Min-max to [0, 1], flipped for lower-is-better; flat input maps to 0.5."""
    v = np.asarray(raw, dtype=float)
    if not higher_is_better:
        v = -v
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.full(v.shape, 0.5)
    return (v - lo) / (hi - lo)


def combined_score(rep_norm, entropy_norm, beta: float, literal: bool = False):
    if literal:
        return beta * np.asarray(rep_norm) + (beta - 1.0) * np.asarray(entropy_norm)
    return beta * np.asarray(rep_norm) + (1.0 - beta) * np.asarray(entropy_norm)


def score_clusters(X_pool, proba_pool, assignment, pool_index, beta: float,
                   literal: bool = False, k: int | None = None) -> tuple[list[list[int]], list[SampleScore]]:
    """Rank each cluster's samples by combined score, best first.

    ``pool_index`` maps pool rows to global indices; the returned lists hold
    global indices. Ties go to the smaller global index.
    """
    pool_index = np.asarray(pool_index)
    assignment = np.asarray(assignment)
    h = entropy(proba_pool)
    if k is None:
        k = int(assignment.max()) + 1 if len(assignment) else 0
    ranked, records = [], []
    for c in range(k):
        rows = np.flatnonzero(assignment == c)
        if len(rows) == 0:
            ranked.append([])
            continue
        rep = representativeness_raw(X_pool[rows])
        rep_n = normalize_scores(rep, higher_is_better=False)
        ent_n = normalize_scores(h[rows])
        comb = combined_score(rep_n, ent_n, beta, literal)
        gidx = pool_index[rows]
        order = np.lexsort((gidx, -comb))
        ranked.append([int(g) for g in gidx[order]])
        records.extend(SampleScore(int(gidx[o]), c, float(h[rows][o]), float(rep[o]),
                                   float(ent_n[o]), float(rep_n[o]), float(comb[o]))
                       for o in order)
    return ranked, records


def select_batch(ranked_clusters: Sequence[int], per_cluster: Sequence[Sequence[int]],
                 b: int) -> BatchSelection:
    """Round-robin over clusters in rank order: round j takes each cluster's
    j-th sample, skipping clusters that have run out."""
    if b < 1:
        raise ValueError("b must be >= 1")
    chosen, trace = [], []
    longest = max((len(per_cluster[c]) for c in ranked_clusters), default=0)
    for j in range(longest):
        for rank, c in enumerate(ranked_clusters):
            if len(chosen) == b:
                return BatchSelection(tuple(chosen), tuple(trace), False)
            if j < len(per_cluster[c]):
                chosen.append(per_cluster[c][j])
                trace.append(Pick(j, rank, c, per_cluster[c][j]))
    return BatchSelection(tuple(chosen), tuple(trace), exhausted=len(chosen) < b)


def entropy_baseline(proba, b: int) -> list[int]:
    """Positions of the b most uncertain samples; ties to the smaller position."""
    h = entropy(proba)
    order = np.lexsort((np.arange(len(h)), -h))
    return [int(i) for i in order[:b]]


@dataclass
class FalcurStep:
    """Everything one FAL-CUR acquisition produced, for audit output."""

    selection: BatchSelection
    clusters: fair_clustering.ClusterModel | None
    scores: list[SampleScore] = field(default_factory=list)
    clustered: np.ndarray | None = None


def falcur_select(X_pool, proba_pool, groups_pool, pool_index, acq: AcquisitionConfig,
                  km: fair_clustering.FairKMConfig) -> FalcurStep:
    """Fair-cluster the pool, rank clusters by fairness, pick a batch.

    With ``acq.pre_filter`` only the most uncertain ``pre_filter`` pool
    samples are clustered.
    """
    X_pool = np.asarray(X_pool, dtype=float)
    proba_pool = np.asarray(proba_pool, dtype=float)
    groups_pool = np.asarray(groups_pool)
    pool_index = np.asarray(pool_index)
    rows = np.arange(len(pool_index))
    if acq.pre_filter is not None and acq.pre_filter < len(rows):
        rows = np.sort(np.asarray(entropy_baseline(proba_pool, acq.pre_filter)))
    k = min(km.k, len(rows))
    if k != km.k:
        km = dataclasses.replace(km, k=k)
    model = fair_clustering.fit(X_pool[rows], groups_pool[rows], km)
    ranked, scores = score_clusters(X_pool[rows], proba_pool[rows], model.assignment,
                                    pool_index[rows], acq.beta, acq.literal_weights, k=model.k)
    selection = select_batch(model.ranking, ranked, acq.batch_size)
    return FalcurStep(selection, model, scores, pool_index[rows])
