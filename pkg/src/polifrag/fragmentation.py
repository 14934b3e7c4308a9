"""Effective number of communities, effective branching and the FRAG score.

FRAG for the transition from level ``l`` to ``l + 1`` is the size-weighted
average, over communities at level ``l``, of the effective number of
level ``l + 1`` communities each one splits into. The overall score is the
plain mean over transitions. Subgroup scores apply the same formula to the
nodes of one ideology while keeping the partitions fixed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ContractError, UndefinedSubgroupError
from .graph import AttributeTable, Ideology
from .hierarchy import MultilevelPartition, OverlapTable, level_name, overlap_matrix

log = logging.getLogger(__name__)


def enc(proportions: Sequence[float]) -> float:
    """Effective number of communities, ``1 / sum(p_i ** 2)``."""
    p = [float(x) for x in proportions]
    if not p:
        raise ContractError("enc needs at least one proportion")
    if min(p) < 0:
        raise ContractError("proportions must be non-negative")
    total = math.fsum(p)
    if abs(total - 1.0) > 1e-9:
        raise ContractError(f"proportions must sum to 1, got {total!r}")
    if max(p) == min(p):
        # equal shares: exactly len(p), free of rounding in 1/n
        return float(len(p))
    return 1.0 / math.fsum(x * x for x in p)


def enc_from_counts(counts: Sequence[int]) -> float:
    """``enc`` of the shares implied by non-negative counts (seats, members)."""
    counts = [int(c) for c in counts if c]
    if not counts or min(counts) < 0:
        raise ContractError("counts must be non-negative with a positive total")
    total = sum(counts)
    return float(Fraction(total * total, sum(c * c for c in counts)))


def effective_branching(row) -> float:
    """Effective branching factor of one parent from its overlap counts with the children."""
    counts = np.asarray(row.toarray() if hasattr(row, "toarray") else row).ravel().astype(np.int64)
    size = int(counts.sum())
    if size <= 0:
        raise ContractError("parent community is empty")
    return float(Fraction(size * size, int((counts * counts).sum())))


def _frag_from_table(table) -> Fraction:
    table = table.tocsr()
    sizes = np.asarray(table.sum(axis=1)).ravel().astype(np.int64)
    squares = np.asarray(table.multiply(table).sum(axis=1)).ravel().astype(np.int64)
    total = int(sizes.sum())
    if total == 0:
        raise UndefinedSubgroupError("no nodes of the subgroup fall in any community")
    acc = Fraction(0)
    for r, sq in zip(sizes.tolist(), squares.tolist()):
        if r:
            acc += Fraction(r * r * r, sq)
    return acc / total


def frag_transition(m: MultilevelPartition, overlaps: OverlapTable | None, level: int,
                    subset: np.ndarray | None = None) -> float:
    """FRAG from ``level`` to ``level + 1``.

    With ``subset`` (a boolean node mask) both the parent weights and the
    branching proportions are computed over subset nodes only; parents with
    no subset members are skipped.
    """
    if not 0 <= level < len(m) - 1:
        raise ContractError(f"transition {level} out of range for {len(m)} levels")
    if subset is None and overlaps is not None:
        table = overlaps[level]
    else:
        if subset is not None:
            subset = np.asarray(subset, dtype=bool)
            if subset.shape != (m.num_nodes,):
                raise ContractError("subset mask must cover every node")
        table = overlap_matrix(m.levels[level], m.levels[level + 1], subset)
    return float(_frag_from_table(table))


@dataclass
class FragmentationReport:
    transitions: list[str]
    overall: list[float]
    left: list[float | None]
    right: list[float | None]
    n_nodes: int
    n_left: int
    n_right: int
    overall_mean: float = field(init=False)
    left_mean: float | None = field(init=False)
    right_mean: float | None = field(init=False)
    skipped_left: list[str] = field(init=False)
    skipped_right: list[str] = field(init=False)

    def __post_init__(self):
        self.overall_mean = _mean(self.overall)
        self.left_mean = _mean([v for v in self.left if v is not None])
        self.right_mean = _mean([v for v in self.right if v is not None])
        self.skipped_left = [t for t, v in zip(self.transitions, self.left) if v is None]
        self.skipped_right = [t for t, v in zip(self.transitions, self.right) if v is None]

    def rounded(self, digits: int = 1) -> dict:
        """Values as surfaced in tables, at ``digits`` decimals."""
        def r(v):
            return None if v is None else round(v, digits)
        return {
            "overall": r(self.overall_mean), "left": r(self.left_mean), "right": r(self.right_mean),
            "transitions": [
                {"transition": t, "overall": r(o), "left": r(lf), "right": r(rt)}
                for t, o, lf, rt in zip(self.transitions, self.overall, self.left, self.right)
            ],
        }


def _mean(values: Sequence[float]) -> float | None:
    values = list(values)
    if not values:
        return None
    return math.fsum(values) / len(values)


def transition_labels(n_levels: int) -> list[str]:
    return [f"{level_name(k)}->{level_name(k + 1)}" for k in range(n_levels - 1)]


def _subgroup(m: MultilevelPartition, mask: np.ndarray | None, name: str) -> list[float | None]:
    out: list[float | None] = []
    labels = transition_labels(len(m))
    for k in range(len(m) - 1):
        if mask is None or not mask.any():
            out.append(None)
            continue
        try:
            out.append(frag_transition(m, None, k, mask))
        except UndefinedSubgroupError:
            out.append(None)
        if out[-1] is None:
            log.warning("%s subgroup empty at transition %s; skipped", name, labels[k])
    return out


def frag_overall(m: MultilevelPartition, attrs: AttributeTable | None = None) -> FragmentationReport:
    """Per-transition and averaged FRAG, overall and for the left and right subgroups.

    Center and Unlabeled nodes count towards the overall score only. Subgroup
    averages run over the transitions where the subgroup is present.
    """
    if len(m) < 2:
        raise ContractError("fragmentation needs at least two levels")
    overall = [frag_transition(m, None, k) for k in range(len(m) - 1)]
    left_mask = right_mask = None
    if attrs is not None:
        attrs.check_covers(m.node_ids)
        left_mask = attrs.subset(Ideology.LEFT, m.node_ids)
        right_mask = attrs.subset(Ideology.RIGHT, m.node_ids)
    return FragmentationReport(
        transitions=transition_labels(len(m)),
        overall=overall,
        left=_subgroup(m, left_mask, "left"),
        right=_subgroup(m, right_mask, "right"),
        n_nodes=m.num_nodes,
        n_left=int(left_mask.sum()) if left_mask is not None else 0,
        n_right=int(right_mask.sum()) if right_mask is not None else 0,
    )
