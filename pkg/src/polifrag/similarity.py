"""Community attribute vectors, size-weighted cosine similarity and merge tests.

Pairs of communities at one level are intra-branch when they share at least
one parent at the next coarser level and extra-branch otherwise. A pair's
weighted similarity is its cosine times the geometric mean of the two
community sizes, divided by the average geometric mean over the pairs of its
own class (``norm="class"``) or over all pairs of the level (``norm="all"``).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractError, PolifragError
from .graph import IDEOLOGY_AXES, AttributeTable
from .hierarchy import MultilevelPartition, parents
from .stats import mann_whitney_u, noether_power

log = logging.getLogger(__name__)

MODES = ("ideology", "identity")


class UndefinedSimilarityError(PolifragError):
    pass


@dataclass(frozen=True)
class CommunityVector:
    level: int | None
    community: int | None
    mean_vector: np.ndarray
    size: int

    @property
    def key(self) -> tuple:
        return (self.level, self.community)


@dataclass(frozen=True)
class PairSimilarityRecord:
    level: int
    i: int
    j: int
    cosine: float
    weighted: float
    branch: str


def axes(attrs: AttributeTable, mode: str) -> tuple[str, ...]:
    if mode == "ideology":
        return tuple(i.value for i in IDEOLOGY_AXES)
    if mode == "identity":
        return attrs.categories
    raise ContractError(f"mode must be one of {MODES}, got {mode!r}")


def _rows(attrs: AttributeTable, node_ids: Sequence[str], mode: str) -> np.ndarray:
    axes(attrs, mode)
    if mode == "ideology":
        return attrs.ideology_matrix(node_ids)
    return attrs.identity_matrix(node_ids)


def mean_vector(members: Sequence[str], attrs: AttributeTable, mode: str,
                level: int | None = None, community: int | None = None) -> CommunityVector:
    """Share of members carrying each label.

    Ideology is one-hot over Left/Center/Right (Unlabeled members count in
    the denominator only); identity is multi-hot over the configured
    categories.
    """
    members = list(members)
    if not members:
        raise ContractError("community is empty")
    x = _rows(attrs, members, mode)
    return CommunityVector(level, community, x.mean(axis=0), len(members))


def community_vectors(m: MultilevelPartition, attrs: AttributeTable, level: int,
                      mode: str) -> list[CommunityVector]:
    x = _rows(attrs, m.node_ids, mode)
    part = m.levels[level]
    sums = np.zeros((part.num_communities, x.shape[1]))
    np.add.at(sums, part.labels, x)
    sizes = part.community_sizes
    return [CommunityVector(level, c, sums[c] / sizes[c], int(sizes[c])) for c in range(part.num_communities)]


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise UndefinedSimilarityError("cosine of a zero vector is undefined")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def mean_geometric_size(pairs: Iterable[tuple[CommunityVector, CommunityVector]]) -> float:
    geo = [math.sqrt(a.size * b.size) for a, b in pairs]
    if not geo:
        raise ContractError("normalisation set is empty")
    return math.fsum(geo) / len(geo)


def weighted_similarity(a: CommunityVector, b: CommunityVector,
                        norm_set: Sequence[tuple[CommunityVector, CommunityVector]],
                        norm: float | None = None) -> float:
    """Cosine of ``a`` and ``b`` scaled by ``sqrt(|a||b|)`` over the norm set's mean.

    ``norm`` may carry a precomputed mean geometric size for ``norm_set``.
    """
    keys = {(p.key, q.key) for p, q in norm_set}
    if (a.key, b.key) not in keys and (b.key, a.key) not in keys:
        raise ContractError("the pair must belong to its normalisation set")
    if norm is None:
        norm = mean_geometric_size(norm_set)
    return cosine(a.mean_vector, b.mean_vector) * (math.sqrt(a.size * b.size) / norm)


def classify_pairs(m: MultilevelPartition, level: int) -> dict[str, list[tuple[int, int]]]:
    """Split all community pairs at ``level`` into intra- and extra-branch lists."""
    if level < 1:
        raise ContractError("the coarsest level has no ancestors to classify against")
    n = m.levels[level].num_communities
    par = [parents(m, level, c) for c in range(n)]
    out: dict[str, list[tuple[int, int]]] = {"intra": [], "extra": []}
    for i in range(n):
        for j in range(i + 1, n):
            out["intra" if par[i] & par[j] else "extra"].append((i, j))
    return out


def level_similarities(m: MultilevelPartition, attrs: AttributeTable, level: int, mode: str,
                       norm: str = "class") -> tuple[list[PairSimilarityRecord], int]:
    """Similarity records for every defined pair at ``level`` and the count of skipped pairs."""
    if norm not in ("class", "all"):
        raise ContractError(f"norm must be 'class' or 'all', got {norm!r}")
    vectors = community_vectors(m, attrs, level, mode)
    classes = classify_pairs(m, level)
    records: list[PairSimilarityRecord] = []
    skipped = 0
    all_pairs = [(vectors[i], vectors[j]) for cls in classes.values() for i, j in cls]
    for branch, pairs in classes.items():
        if not pairs:
            continue
        norm_pairs = [(vectors[i], vectors[j]) for i, j in pairs] if norm == "class" else all_pairs
        scale = mean_geometric_size(norm_pairs)
        for i, j in pairs:
            try:
                cos = cosine(vectors[i].mean_vector, vectors[j].mean_vector)
            except UndefinedSimilarityError:
                skipped += 1
                continue
            weighted = cos * (math.sqrt(vectors[i].size * vectors[j].size) / scale)
            records.append(PairSimilarityRecord(level, i, j, cos, weighted, branch))
    if skipped:
        log.warning("level %d (%s): skipped %d pair(s) with an all-zero mean vector", level, mode, skipped)
    return records, skipped


@dataclass(frozen=True)
class MergeTestSummary:
    level: int
    mode: str
    weighted: bool
    n_intra: int
    n_extra: int
    mean_intra: float | None
    mean_extra: float | None
    statistic: float | None
    pvalue: float | None
    method: str | None
    power: float | None
    skipped: bool
    reason: str | None = None


def merge_test(m: MultilevelPartition, attrs: AttributeTable, level: int, mode: str,
               weighted: bool = True, alternative: str = "greater", norm: str = "class",
               effect: float = 0.75, alpha: float = 0.05,
               records: list[PairSimilarityRecord] | None = None) -> MergeTestSummary:
    """Mann-Whitney comparison of intra- against extra-branch similarities at one level.

    Levels where either class has fewer than two pairs are reported as
    skipped. The power figure is Noether's approximation for the observed
    class sizes at the given effect ``P(X > Y)``.
    """
    if records is None:
        records, _ = level_similarities(m, attrs, level, mode, norm)
    value = (lambda r: r.weighted) if weighted else (lambda r: r.cosine)
    intra = [value(r) for r in records if r.branch == "intra"]
    extra = [value(r) for r in records if r.branch == "extra"]
    mi = math.fsum(intra) / len(intra) if intra else None
    me = math.fsum(extra) / len(extra) if extra else None
    if len(intra) < 2 or len(extra) < 2:
        return MergeTestSummary(level, mode, weighted, len(intra), len(extra), mi, me,
                                None, None, None, None, True, "a class has fewer than two pairs")
    res = mann_whitney_u(intra, extra, alternative=alternative)
    power = noether_power(len(intra), len(extra), effect, alpha,
                          "two-sided" if alternative == "two-sided" else "greater")
    return MergeTestSummary(level, mode, weighted, len(intra), len(extra), mi, me,
                            res.statistic, res.pvalue, res.method, power, False)
