"""Multilevel partitions, level-to-level overlaps and ancestor lookup.

Levels are indexed from 0 (coarsest) to ``L - 1`` (finest). Levels are not
required to nest, so a community may have several ancestors.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import sparse

from .errors import ContractError, EmptyHierarchyError
from .stability import Partition

log = logging.getLogger(__name__)


def level_name(index: int) -> str:
    """Letter label for a level: A, B, ..., Z, AA, AB, ..."""
    name = ""
    index += 1
    while index:
        index, rem = divmod(index - 1, 26)
        name = chr(ord("A") + rem) + name
    return name


@dataclass(frozen=True)
class MultilevelPartition:
    node_ids: tuple[str, ...]
    levels: tuple[Partition, ...]
    scales: tuple[float | None, ...] = ()
    warning: str | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "node_ids", tuple(self.node_ids))
        object.__setattr__(self, "levels", tuple(self.levels))
        if not self.scales:
            object.__setattr__(self, "scales", (None,) * len(self.levels))
        object.__setattr__(self, "scales", tuple(self.scales))
        if len(self.scales) != len(self.levels):
            raise ContractError("one scale per level is required")
        n = len(self.node_ids)
        for k, p in enumerate(self.levels):
            if p.num_nodes != n:
                raise ContractError(f"level {k} covers {p.num_nodes} nodes, expected {n}")
        counts = [p.num_communities for p in self.levels]
        if any(a > b for a, b in zip(counts, counts[1:])):
            raise ContractError(f"community counts must be non-decreasing coarse to fine, got {counts}")

    def __len__(self) -> int:
        return len(self.levels)

    @property
    def num_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def singleton_fraction(self) -> tuple[float, ...]:
        return tuple(p.singleton_fraction for p in self.levels)


@dataclass(frozen=True)
class OverlapTable:
    """``tables[l][i, j] = |C_i^(l) & C_j^(l+1)|`` for each adjacent level pair."""

    tables: tuple[sparse.csr_matrix, ...]

    def __getitem__(self, level: int) -> sparse.csr_matrix:
        return self.tables[level]

    def __len__(self) -> int:
        return len(self.tables)


def filter_singleton_levels(m: MultilevelPartition, threshold: float = 0.9) -> MultilevelPartition:
    """Drop levels where more than ``threshold`` of the communities are singletons."""
    if not 0.0 < threshold <= 1.0:
        raise ContractError(f"threshold must lie in (0, 1], got {threshold}")
    keep = [k for k, frac in enumerate(m.singleton_fraction) if not frac > threshold]
    if not keep:
        raise EmptyHierarchyError(f"every level has more than {threshold:.0%} singleton communities")
    dropped = len(m) - len(keep)
    if dropped:
        log.info("dropped %d singleton-dominated level(s)", dropped)
    return MultilevelPartition(
        m.node_ids,
        tuple(m.levels[k] for k in keep),
        tuple(m.scales[k] for k in keep),
        m.warning,
        {**m.meta, "kept_levels": [int(k) for k in keep]},
    )


def overlap_matrix(coarse: Partition, fine: Partition, subset: np.ndarray | None = None) -> sparse.csr_matrix:
    """Intersection counts between two partitions, optionally over a node mask."""
    rows, cols = coarse.labels, fine.labels
    if subset is not None:
        rows, cols = rows[subset], cols[subset]
    data = np.ones(len(rows), dtype=np.int64)
    shape = (coarse.num_communities, fine.num_communities)
    return sparse.csr_matrix((data, (rows, cols)), shape=shape)


def overlaps(m: MultilevelPartition, subset: np.ndarray | None = None) -> OverlapTable:
    if len(m) < 2:
        raise ContractError("overlaps need at least two levels")
    return OverlapTable(tuple(
        overlap_matrix(a, b, subset) for a, b in zip(m.levels, m.levels[1:])
    ))


def parents(m: MultilevelPartition, level: int, community: int) -> set[int]:
    """Communities at ``level - 1`` that share at least one node with ``community``."""
    if not 1 <= level < len(m):
        raise ContractError(f"level {level} has no coarser level")
    fine = m.levels[level]
    if not 0 <= community < fine.num_communities:
        raise ContractError(f"unknown community {community} at level {level}")
    members = fine.labels == community
    return set(np.unique(m.levels[level - 1].labels[members]).tolist())


def ancestors(m: MultilevelPartition, level: int, community: int) -> set[tuple[int, int]]:
    """All ``(level', community')`` pairs at coarser levels reachable through overlaps."""
    if level < 1:
        raise ContractError("the coarsest level has no ancestors")
    frontier = {community}
    found: set[tuple[int, int]] = set()
    for lvl in range(level, 0, -1):
        nxt: set[int] = set()
        for c in frontier:
            nxt |= parents(m, lvl, c)
        found |= {(lvl - 1, c) for c in nxt}
        frontier = nxt
    return found
