"""Planted multi-level benchmark graphs with known fragmentation.

A plan lists, level by level, how every community of the previous level
splits into children. ``plan[0]`` splits the whole node set into the
top-level communities; ``plan[k]`` has one fraction list per community of
level ``k - 1``, in order. Pairs in the same finest-level community connect
with ``p_in``; pairs whose deepest shared community is at level ``k - 1``
connect with ``p_between[k]`` (``p_between[0]`` for pairs in different
top-level communities). Connected pairs get weight ``1 + Binomial(3, p)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .fragmentation import FragmentationReport, transition_labels
from .graph import AttributeTable, Ideology, NodeAttributes, WeightedGraph, DEFAULT_CATEGORIES
from .hierarchy import MultilevelPartition
from .stability import Partition


@dataclass(frozen=True)
class PlantedSpec:
    n_nodes: int
    plan: list[list[list[float]]]
    p_in: float
    p_between: list[float]
    seed: int = 0
    ideology: list[dict[str, float]] | None = None
    identity: list[dict[str, float]] | None = None
    categories: tuple[str, ...] = DEFAULT_CATEGORIES

    def __post_init__(self):
        object.__setattr__(self, "categories", tuple(self.categories))
        if self.n_nodes < 1:
            raise ValidationError("n_nodes must be positive")
        if not self.plan or len(self.plan[0]) != 1:
            raise ValidationError("plan[0] must hold exactly one split (the whole node set)")
        width = 1
        for k, level in enumerate(self.plan):
            if len(level) != width:
                raise ValidationError(f"plan level {k} needs {width} splits, found {len(level)}")
            for fractions in level:
                if not fractions or min(fractions) <= 0:
                    raise ValidationError(f"plan level {k}: fractions must be positive")
                if abs(math.fsum(fractions) - 1.0) > 1e-9:
                    raise ValidationError(f"plan level {k}: fractions {fractions} do not sum to 1")
            width = sum(len(f) for f in level)
        if len(self.p_between) != len(self.plan):
            raise ValidationError(f"p_between needs {len(self.plan)} entries")
        for p in [self.p_in, *self.p_between]:
            if not 0.0 <= p <= 1.0:
                raise ValidationError(f"probability {p} outside [0, 1]")
        if not all(self.p_in > p for p in self.p_between):
            raise ValidationError("p_in must exceed every between-community probability")
        leaves = width
        for name, dists in (("ideology", self.ideology), ("identity", self.identity)):
            if dists is not None and len(dists) != leaves:
                raise ValidationError(f"{name} needs one distribution per leaf ({leaves})")
        if self.identity is not None:
            for dist in self.identity:
                unknown = set(dist) - set(self.categories)
                if unknown:
                    raise ValidationError(f"identity {sorted(unknown)[0]!r} not in categories")

    @property
    def num_levels(self) -> int:
        return len(self.plan)

    @classmethod
    def from_json(cls, path: str | Path) -> "PlantedSpec":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        data.pop("schema_version", None)
        data.pop("kind", None)
        return cls(**data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["categories"] = list(self.categories)
        return d


def _split(n: int, fractions: Sequence[float]) -> list[int]:
    """Largest-remainder rounding of ``n * fractions``."""
    raw = [n * f for f in fractions]
    sizes = [int(math.floor(x)) for x in raw]
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - sizes[i]), i))
    for i in order[: n - sum(sizes)]:
        sizes[i] += 1
    return sizes


def _planted_labels(spec: PlantedSpec) -> list[np.ndarray]:
    """Community label per node for every planted level; nodes are contiguous per leaf."""
    sizes = [spec.n_nodes]
    level_sizes = []
    parent_of = []
    for k, level in enumerate(spec.plan):
        new_sizes, new_parent = [], []
        for parent, (size, fractions) in enumerate(zip(sizes, level)):
            for child in _split(size, fractions):
                new_sizes.append(child)
                new_parent.append(parent)
        if min(new_sizes) == 0:
            raise ValidationError(f"plan level {k} yields an empty community for {spec.n_nodes} nodes")
        level_sizes.append(new_sizes)
        parent_of.append(new_parent)
        sizes = new_sizes
    leaf = np.repeat(np.arange(len(sizes)), sizes)
    labels = [leaf]
    for k in range(len(spec.plan) - 1, 0, -1):
        labels.append(np.asarray(parent_of[k])[labels[-1]])
    return labels[::-1]


def generate(spec: PlantedSpec) -> tuple[WeightedGraph, MultilevelPartition, AttributeTable]:
    """Sample a planted graph, returning it with its true levels and sampled labels."""
    rng = np.random.default_rng(spec.seed)
    labels = _planted_labels(spec)
    n = spec.n_nodes
    iu, ju = np.triu_indices(n, k=1)
    # depth of the deepest shared level: -1 none, L-1 same leaf
    depth = np.full(len(iu), -1)
    for k, lab in enumerate(labels):
        depth[lab[iu] == lab[ju]] = k
    probs = np.asarray(spec.p_between + [spec.p_in])[depth + 1]
    connected = rng.random(len(iu)) < probs
    weights = 1 + rng.binomial(3, probs[connected])
    width = len(str(n - 1))
    node_ids = [f"n{i:0{width}d}" for i in range(n)]
    graph = WeightedGraph.from_edges(
        node_ids, zip(iu[connected].tolist(), ju[connected].tolist(), weights.tolist()))

    truth = MultilevelPartition(node_ids, tuple(Partition(lab) for lab in labels), meta={"planted": True})

    leaf = labels[-1]
    rows = {}
    ideo_choices = [i.value for i in Ideology]
    for v in range(n):
        ideology = Ideology.UNLABELED
        if spec.ideology is not None:
            dist = spec.ideology[leaf[v]]
            weights_ = np.array([dist.get(name, 0.0) for name in ideo_choices], dtype=float)
            ideology = Ideology(ideo_choices[rng.choice(len(ideo_choices), p=weights_ / weights_.sum())])
        identities = frozenset()
        if spec.identity is not None:
            dist = spec.identity[leaf[v]]
            identities = frozenset(c for c in spec.categories if rng.random() < dist.get(c, 0.0))
        rows[node_ids[v]] = NodeAttributes(ideology, identities)
    return graph, truth, AttributeTable(spec.categories, rows)


def ground_truth_frag(spec: PlantedSpec) -> FragmentationReport:
    """Analytic FRAG per transition from the size fractions alone."""
    shares = [Fraction(f).limit_denominator(10**12) for f in spec.plan[0][0]]
    overall = []
    for level in spec.plan[1:]:
        value = Fraction(0)
        children = []
        for share, fractions in zip(shares, level):
            fr = [Fraction(f).limit_denominator(10**12) for f in fractions]
            value += share / sum(f * f for f in fr)
            children += [share * f for f in fr]
        overall.append(float(value))
        shares = children
    return FragmentationReport(
        transitions=transition_labels(spec.num_levels),
        overall=overall,
        left=[None] * len(overall),
        right=[None] * len(overall),
        n_nodes=spec.n_nodes, n_left=0, n_right=0,
    )
