"""Bipartite follow data, the weighted co-follow projection and node annotations."""

from __future__ import annotations

import csv
import enum
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy import sparse

from .errors import ContractError, EmptyInputError, ParseError, ValidationError

log = logging.getLogger(__name__)

DEFAULT_CATEGORIES = ("Women", "Black", "LGBTQ", "Religious")
US_CATEGORIES = DEFAULT_CATEGORIES + ("Veteran", "Jewish")

_EDGE_HEADER_NAMES = {
    "user", "user_id", "users", "follower", "follower_id", "source",
    "influencer", "influencer_id", "influencers", "followee", "target", "account",
}
_ATTR_HEADER_NAMES = {
    "influencer", "influencer_id", "id", "node", "account",
    "ideology", "identity", "identities",
}
_EMPTY_IDENTITY = {"", "non", "none", "nan"}


class Ideology(str, enum.Enum):
    LEFT = "Left"
    CENTER = "Center"
    RIGHT = "Right"
    UNLABELED = "Unlabeled"

    @classmethod
    def parse(cls, text: str) -> "Ideology | None":
        """Map a free-form label to an ideology; ``None`` if unrecognised."""
        key = text.strip().lower()
        if key in ("", "unlabeled", "unlabelled", "non", "none", "nan"):
            return cls.UNLABELED
        return _IDEOLOGY_ALIASES.get(key)


_IDEOLOGY_ALIASES = {
    "left": Ideology.LEFT,
    "center": Ideology.CENTER,
    "centre": Ideology.CENTER,
    "centrist": Ideology.CENTER,
    "right": Ideology.RIGHT,
}

# one-hot order for ideology mean vectors
IDEOLOGY_AXES = (Ideology.LEFT, Ideology.CENTER, Ideology.RIGHT)


@dataclass(frozen=True)
class BipartiteGraph:
    """Users following influencers.

    ``edges`` holds ``(user_index, influencer_index)`` pairs into the two id
    tuples, sorted and free of duplicates.
    """

    user_ids: tuple[str, ...]
    influencer_ids: tuple[str, ...]
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        nu, ns = len(self.user_ids), len(self.influencer_ids)
        if len(set(self.user_ids)) != nu or len(set(self.influencer_ids)) != ns:
            raise ContractError("duplicate identifiers")
        if len(set(self.edges)) != len(self.edges):
            raise ContractError("duplicate edges")
        for u, s in self.edges:
            if not (0 <= u < nu and 0 <= s < ns):
                raise ContractError(f"edge ({u}, {s}) refers to an unknown node")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> "BipartiteGraph":
        """Build from ``(user, influencer)`` string pairs; ids sorted lexicographically."""
        unique = set(pairs)
        users = tuple(sorted({u for u, _ in unique}))
        influencers = tuple(sorted({s for _, s in unique}))
        uix = {u: i for i, u in enumerate(users)}
        six = {s: i for i, s in enumerate(influencers)}
        edges = tuple(sorted((uix[u], six[s]) for u, s in unique))
        return cls(users, influencers, edges)

    def incidence(self) -> sparse.csr_matrix:
        """Users x influencers 0/1 matrix."""
        shape = (len(self.user_ids), len(self.influencer_ids))
        if not self.edges:
            return sparse.csr_matrix(shape, dtype=np.int64)
        rows, cols = np.array(self.edges, dtype=np.int64).T
        data = np.ones(len(rows), dtype=np.int64)
        return sparse.csr_matrix((data, (rows, cols)), shape=shape)

    def followers(self, influencer: int) -> frozenset[int]:
        return frozenset(u for u, s in self.edges if s == influencer)


class WeightedGraph:
    """Undirected graph with positive integer edge weights and no self-loops.

    Immutable after construction. ``adjacency`` is a symmetric CSR matrix;
    ``degree[i]`` is the weighted degree and ``total_weight`` is ``2m``.
    """

    def __init__(self, node_ids: Sequence[str], adjacency):
        self.node_ids = tuple(node_ids)
        n = len(self.node_ids)
        if len(set(self.node_ids)) != n:
            raise ContractError("duplicate node identifiers")
        adj = sparse.csr_matrix(adjacency, dtype=np.int64)
        if adj.shape != (n, n):
            raise ContractError(f"adjacency shape {adj.shape} does not match {n} nodes")
        adj.eliminate_zeros()
        adj.sort_indices()
        if adj.diagonal().any():
            raise ContractError("self-loops are not allowed")
        if adj.nnz and adj.data.min() < 1:
            raise ContractError("edge weights must be positive integers")
        if (adj != adj.T).nnz:
            raise ContractError("adjacency must be symmetric")
        adj.data.setflags(write=False)
        self.adjacency = adj
        self.degree = np.asarray(adj.sum(axis=1)).ravel().astype(np.int64)
        self.degree.setflags(write=False)
        self.total_weight = int(self.degree.sum())
        self._index = {s: i for i, s in enumerate(self.node_ids)}

    @classmethod
    def from_edges(cls, node_ids: Sequence[str], edges: Iterable[tuple[int, int, int]]):
        """Build from ``(i, j, w)`` index triples, each undirected edge listed once."""
        n = len(node_ids)
        rows, cols, data = [], [], []
        for i, j, w in edges:
            rows += [i, j]
            cols += [j, i]
            data += [w, w]
        adj = sparse.csr_matrix((data, (rows, cols)), shape=(n, n), dtype=np.int64)
        return cls(node_ids, adj)

    @property
    def num_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def num_edges(self) -> int:
        return self.adjacency.nnz // 2

    def index(self, node_id: str) -> int:
        return self._index[node_id]

    def weight(self, i: int, j: int) -> int:
        return int(self.adjacency[i, j])

    def edges(self) -> Iterator[tuple[int, int, int]]:
        """Yield ``(i, j, w)`` with ``i < j`` in row-major order."""
        coo = sparse.triu(self.adjacency, k=1).tocoo()
        order = np.lexsort((coo.col, coo.row))
        for k in order:
            yield int(coo.row[k]), int(coo.col[k]), int(coo.data[k])

    def __eq__(self, other):
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return (self.node_ids == other.node_ids
                and (self.adjacency != other.adjacency).nnz == 0)

    def __repr__(self):
        return f"WeightedGraph(nodes={self.num_nodes}, edges={self.num_edges}, 2m={self.total_weight})"


@dataclass(frozen=True)
class NodeAttributes:
    ideology: Ideology
    identities: frozenset[str] = frozenset()


@dataclass(frozen=True)
class AttributeTable:
    """Per-influencer ideology and social-identity set."""

    categories: tuple[str, ...]
    rows: dict[str, NodeAttributes] = field(default_factory=dict)
    unknown_ideology_count: int = 0

    def __post_init__(self):
        allowed = set(self.categories)
        for node, attrs in self.rows.items():
            bad = attrs.identities - allowed
            if bad:
                raise ValidationError(f"{node}: identity {sorted(bad)[0]!r} not in {list(self.categories)}")

    def __getitem__(self, node_id: str) -> NodeAttributes:
        return self.rows[node_id]

    def __contains__(self, node_id: str) -> bool:
        return node_id in self.rows

    def __len__(self):
        return len(self.rows)

    def check_covers(self, node_ids: Iterable[str]) -> None:
        missing = [n for n in node_ids if n not in self.rows]
        if missing:
            raise ValidationError(f"{len(missing)} graph nodes lack attributes, e.g. {missing[0]!r}")

    def ideologies(self, node_ids: Sequence[str]) -> list[Ideology]:
        return [self.rows[n].ideology for n in node_ids]

    def ideology_matrix(self, node_ids: Sequence[str]) -> np.ndarray:
        """One-hot rows over (Left, Center, Right); Unlabeled rows are all zero."""
        x = np.zeros((len(node_ids), len(IDEOLOGY_AXES)))
        for r, n in enumerate(node_ids):
            ideo = self.rows[n].ideology
            if ideo in IDEOLOGY_AXES:
                x[r, IDEOLOGY_AXES.index(ideo)] = 1.0
        return x

    def identity_matrix(self, node_ids: Sequence[str]) -> np.ndarray:
        """Multi-hot rows over the configured categories."""
        col = {c: k for k, c in enumerate(self.categories)}
        x = np.zeros((len(node_ids), len(self.categories)))
        for r, n in enumerate(node_ids):
            for c in self.rows[n].identities:
                x[r, col[c]] = 1.0
        return x

    def subset(self, ideology: Ideology, node_ids: Sequence[str]) -> np.ndarray:
        """Boolean mask over ``node_ids`` selecting one ideology."""
        return np.array([self.rows[n].ideology is ideology for n in node_ids], dtype=bool)

    def to_rows(self) -> list[tuple[str, str, str]]:
        return [(n, a.ideology.value, ";".join(c for c in self.categories if c in a.identities))
                for n, a in sorted(self.rows.items())]


# ---------------------------------------------------------------- loaders

def _read_records(path: Path) -> tuple[list[tuple[int, list[str]]], str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise
    lines = [(no, line) for no, line in enumerate(text.splitlines(), start=1) if line.strip()]
    if not lines:
        raise EmptyInputError(f"{path}: no records")
    delimiter = "\t" if "\t" in lines[0][1] else ","
    records = []
    for no, line in lines:
        fields = next(csv.reader(io.StringIO(line), delimiter=delimiter))
        records.append((no, [f.strip() for f in fields]))
    return records, delimiter


def load_bipartite(path: str | Path) -> BipartiteGraph:
    """Read a ``user<sep>influencer`` edge list (comma or tab separated).

    A first row made only of known column names is treated as a header.
    Duplicate records collapse to one edge.
    """
    records, _ = _read_records(Path(path))
    if all(f.lower() in _EDGE_HEADER_NAMES for f in records[0][1]):
        records = records[1:]
    if not records:
        raise EmptyInputError(f"{path}: header only, no records")
    pairs = []
    for no, fields in records:
        if len(fields) != 2:
            raise ParseError(f"expected 2 fields, found {len(fields)}", no)
        user, influencer = fields
        if not user or not influencer:
            raise ParseError("empty identifier", no)
        pairs.append((user, influencer))
    return BipartiteGraph.from_pairs(pairs)


def load_attributes(path: str | Path, categories: Sequence[str] = DEFAULT_CATEGORIES) -> AttributeTable:
    """Read ``influencer<sep>ideology<sep>identity1;identity2`` rows.

    Ideology strings outside left/center/right map to Unlabeled and are
    counted in ``unknown_ideology_count``. Identity strings are matched
    case-insensitively against ``categories``; anything else is rejected.
    """
    categories = tuple(categories)
    lookup = {c.lower(): c for c in categories}
    records, _ = _read_records(Path(path))
    first = [f.lower() for f in records[0][1]]
    if len(first) >= 2 and first[0] in _ATTR_HEADER_NAMES and first[1] in _ATTR_HEADER_NAMES:
        records = records[1:]
    if not records:
        raise EmptyInputError(f"{path}: header only, no records")
    rows: dict[str, NodeAttributes] = {}
    unknown = 0
    for no, fields in records:
        if len(fields) == 2:
            fields = fields + [""]
        if len(fields) != 3:
            raise ParseError(f"expected 3 fields, found {len(fields)}", no)
        node, ideo_text, ident_text = fields
        if not node:
            raise ParseError("empty identifier", no)
        if node in rows:
            raise ParseError(f"duplicate row for {node!r}", no)
        ideology = Ideology.parse(ideo_text)
        if ideology is None:
            unknown += 1
            ideology = Ideology.UNLABELED
        identities = set()
        for raw in ident_text.split(";"):
            key = raw.strip().lower()
            if key in _EMPTY_IDENTITY:
                continue
            if key not in lookup:
                raise ValidationError(f"line {no}: identity {raw.strip()!r} not in {list(categories)}")
            identities.add(lookup[key])
        rows[node] = NodeAttributes(ideology, frozenset(identities))
    if unknown:
        log.warning("%d unknown ideology labels mapped to Unlabeled", unknown)
    return AttributeTable(categories, rows, unknown)


def write_attributes(table: AttributeTable, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["influencer", "ideology", "identities"])
        writer.writerows(table.to_rows())


def write_bipartite(g: BipartiteGraph, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for u, s in g.edges:
            writer.writerow([g.user_ids[u], g.influencer_ids[s]])


# ------------------------------------------------------------- projection

def project(g: BipartiteGraph) -> WeightedGraph:
    """Co-follow projection onto influencers.

    ``w_ij`` is the number of users following both ``i`` and ``j``.
    Influencers without shared followers stay in the graph as isolated nodes.
    """
    if not g.influencer_ids:
        raise ContractError("cannot project an empty bipartite graph")
    b = g.incidence()
    co = (b.T @ b).tocsr()
    co.setdiag(0)
    co.eliminate_zeros()
    return WeightedGraph(g.influencer_ids, co)
