"""Figure-ready payloads for similarity heatmaps and ideology x identity association."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .graph import IDEOLOGY_AXES, AttributeTable
from .hierarchy import MultilevelPartition, level_name
from .io import envelope
from .similarity import MODES, axes, community_vectors, level_similarities, merge_test
from .stats import ContingencyTable, association_test


def _summary(s) -> dict:
    return {
        "n_intra": s.n_intra, "n_extra": s.n_extra,
        "mean_intra": s.mean_intra, "mean_extra": s.mean_extra,
        "U": s.statistic, "pvalue": s.pvalue, "method": s.method,
        "power": s.power, "skipped": s.skipped, "reason": s.reason,
    }


def similarity_payload(m: MultilevelPartition, attrs: AttributeTable, norm: str = "class",
                       alternative: str = "greater", effect: float = 0.75, alpha: float = 0.05) -> dict:
    """Per-level community vectors, pair heatmaps and intra/extra merge tests for both modes."""
    modes = {}
    for mode in MODES:
        levels = []
        for k in range(len(m)):
            vectors = community_vectors(m, attrs, k, mode)
            entry = {
                "level": level_name(k), "index": k,
                "communities": [{"id": v.community, "size": v.size, "vector": v.mean_vector.tolist()}
                                for v in vectors],
            }
            if k >= 1:
                records, skipped = level_similarities(m, attrs, k, mode, norm)
                n = len(vectors)
                weighted = [[None] * n for _ in range(n)]
                raw = [[None] * n for _ in range(n)]
                branch = [[None] * n for _ in range(n)]
                for r in records:
                    for a, b in ((r.i, r.j), (r.j, r.i)):
                        weighted[a][b] = r.weighted
                        raw[a][b] = r.cosine
                        branch[a][b] = r.branch
                entry["heatmap"] = {"weighted": weighted, "cosine": raw, "branch": branch}
                entry["skipped_pairs"] = skipped
                entry["tests"] = {
                    "weighted": _summary(merge_test(m, attrs, k, mode, True, alternative, norm,
                                                    effect, alpha, records)),
                    "unweighted": _summary(merge_test(m, attrs, k, mode, False, alternative, norm,
                                                      effect, alpha, records)),
                }
            levels.append(entry)
        modes[mode] = {"axes": list(axes(attrs, mode)), "levels": levels}
    return envelope("similarity", {
        "norm": norm, "alternative": alternative, "effect": effect, "alpha": alpha, "modes": modes,
    })


def ideology_identity_table(attrs: AttributeTable, node_ids: Sequence[str]) -> ContingencyTable:
    """Rows Left/Center/Right, columns identity categories; a node counts once per identity."""
    counts = np.zeros((len(IDEOLOGY_AXES), len(attrs.categories)), dtype=np.int64)
    col = {c: j for j, c in enumerate(attrs.categories)}
    for n in node_ids:
        row = attrs[n]
        if row.ideology not in IDEOLOGY_AXES:
            continue
        i = IDEOLOGY_AXES.index(row.ideology)
        for c in row.identities:
            counts[i, col[c]] += 1
    return ContingencyTable(counts, tuple(i.value for i in IDEOLOGY_AXES), attrs.categories)


def correlation_payload(attrs: AttributeTable, node_ids: Sequence[str], mc_samples: int = 10_000,
                        seed: int = 0) -> dict:
    """Counts, row proportions, standardized residuals and the chosen association test."""
    table = ideology_identity_table(attrs, node_ids)
    result = association_test(table, mc_samples, seed)
    used = result.table
    row_tot = used.counts.sum(axis=1, keepdims=True)
    return envelope("correlation", {
        "rows": list(used.row_labels),
        "cols": list(used.col_labels),
        "counts": used.counts.tolist(),
        "proportions": (used.counts / np.where(row_tot == 0, 1, row_tot)).tolist(),
        "expected": result.expected.tolist(),
        "residuals": result.residuals.tolist(),
        "full_counts": {"rows": list(table.row_labels), "cols": list(table.col_labels),
                        "counts": table.counts.tolist()},
        "test": result.test,
        "statistic": result.statistic,
        "df": result.df,
        "pvalue": result.pvalue,
        "std_error": result.std_error,
        "sparse_fraction": result.sparse_fraction,
        "mc_samples": mc_samples if result.test == "fisher-monte-carlo" else 0,
    })
