"""Partitions, the linearized Markov Stability quality and partition distances.

For Markov time ``t`` the linearized stability of a partition is

    Q(t) = sum over communities C of
           t * (sum_{i,j in C} A_ij) / 2m  -  (sum_{i in C} d_i / 2m) ** 2

which is modularity at resolution ``1/t`` scaled by ``t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractError
from .graph import WeightedGraph


def _canonical(labels) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ContractError("partition labels must be one-dimensional")
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    # relabel by first appearance so equal partitions get equal arrays
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    out = rank[inverse.ravel()].astype(np.int64)
    out.setflags(write=False)
    return out


class Partition:
    """Assignment of nodes ``0..N-1`` to communities ``0..c-1``.

    Labels are canonicalised on construction (communities numbered by first
    appearance), so two partitions compare equal iff they are identical up
    to relabeling.
    """

    __slots__ = ("labels", "_sizes")

    def __init__(self, labels: Iterable[int]):
        self.labels = _canonical(list(labels) if not isinstance(labels, np.ndarray) else labels)
        self._sizes = np.bincount(self.labels) if len(self.labels) else np.zeros(0, dtype=np.int64)
        self._sizes.setflags(write=False)

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(np.arange(n))

    @classmethod
    def whole(cls, n: int) -> "Partition":
        return cls(np.zeros(n, dtype=np.int64))

    @classmethod
    def from_communities(cls, communities: Sequence[Iterable[int]], n: int | None = None) -> "Partition":
        members = [list(c) for c in communities]
        if n is None:
            n = sum(len(c) for c in members)
        labels = np.full(n, -1, dtype=np.int64)
        for k, c in enumerate(members):
            for node in c:
                if labels[node] != -1:
                    raise ContractError(f"node {node} assigned twice")
                labels[node] = k
        if (labels < 0).any():
            raise ContractError("some nodes are unassigned")
        return cls(labels)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def num_nodes(self) -> int:
        return len(self.labels)

    @property
    def num_communities(self) -> int:
        return len(self._sizes)

    @property
    def community_sizes(self) -> np.ndarray:
        return self._sizes

    @property
    def singleton_fraction(self) -> float:
        if not self.num_communities:
            return 0.0
        return float(np.count_nonzero(self._sizes == 1) / self.num_communities)

    def communities(self) -> list[np.ndarray]:
        order = np.argsort(self.labels, kind="stable")
        bounds = np.cumsum(self._sizes)[:-1]
        return np.split(order, bounds)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return np.array_equal(self.labels, other.labels)

    def __hash__(self) -> int:
        return hash(self.labels.tobytes())

    def __repr__(self) -> str:
        return f"Partition(N={self.num_nodes}, c={self.num_communities})"


@dataclass(frozen=True)
class QualityModel:
    """Linearized Markov Stability of ``graph`` at Markov time ``scale``."""

    graph: WeightedGraph
    scale: float
    constructor: str = "linearized"

    def __post_init__(self):
        if not self.scale > 0:
            raise ContractError(f"Markov time must be positive, got {self.scale}")
        if self.constructor != "linearized":
            raise ContractError(f"unsupported constructor {self.constructor!r}")


def quality(model: QualityModel, p: Partition) -> float:
    g = model.graph
    if p.num_nodes != g.num_nodes:
        raise ContractError(f"partition covers {p.num_nodes} nodes, graph has {g.num_nodes}")
    two_m = g.total_weight
    if two_m <= 0:
        raise ContractError("quality is undefined on a graph without edges")
    adj = g.adjacency.tocoo()
    same = p.labels[adj.row] == p.labels[adj.col]
    internal = math.fsum(adj.data[same].tolist())
    totals = np.bincount(p.labels, weights=g.degree, minlength=p.num_communities) / two_m
    return model.scale * internal / two_m - math.fsum((totals * totals).tolist())


def _entropy(counts: np.ndarray, n: int) -> float:
    probs = counts[counts > 0] / n
    return -math.fsum((probs * np.log(probs)).tolist())


def nvi(p: Partition, q: Partition) -> float:
    """Variation of information normalised by the joint entropy, in ``[0, 1]``."""
    if p.num_nodes != q.num_nodes:
        raise ContractError(f"node-set mismatch: {p.num_nodes} vs {q.num_nodes}")
    if p == q:
        return 0.0
    n = p.num_nodes
    joint = p.labels * q.num_communities + q.labels
    _, joint_counts = np.unique(joint, return_counts=True)
    h_joint = _entropy(joint_counts, n)
    if h_joint == 0.0:
        return 0.0
    h_p = _entropy(p.community_sizes, n)
    h_q = _entropy(q.community_sizes, n)
    vi = 2.0 * h_joint - (h_p + h_q)
    return float(min(1.0, max(0.0, vi / h_joint)))


def mean_pairwise_nvi(partitions: Sequence[Partition], max_pairs: int = 200,
                      rng: np.random.Generator | None = None) -> float:
    """Mean NVI over all pairs, or over ``max_pairs`` random pairs when there are more."""
    k = len(partitions)
    if k < 2:
        return 0.0
    pairs = [(a, b) for a in range(k) for b in range(a + 1, k)]
    if len(pairs) > max_pairs:
        rng = rng if rng is not None else np.random.default_rng(0)
        pick = np.sort(rng.choice(len(pairs), size=max_pairs, replace=False))
        pairs = [pairs[i] for i in pick]
    return math.fsum(nvi(partitions[a], partitions[b]) for a, b in pairs) / len(pairs)
