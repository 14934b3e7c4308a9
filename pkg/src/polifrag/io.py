"""Versioned JSON artifacts for every pipeline stage.

Every document carries ``kind`` and ``schema_version``; readers reject
documents of another kind or version. Writers sort keys and use a fixed
layout so identical inputs give byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any

import numpy as np

from .errors import SchemaError
from .fragmentation import FragmentationReport
from .graph import WeightedGraph
from .hierarchy import MultilevelPartition, level_name, overlaps
from .scan import ScaleScanResult
from .stability import Partition

SCHEMA_VERSION = 1


def _plain(obj: Any):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        if value != value or value in (float("inf"), float("-inf")):
            return None
        return value
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dumps(doc: dict) -> str:
    return json.dumps(_plain(doc), indent=1, sort_keys=True, ensure_ascii=False, allow_nan=False) + "\n"


def write(doc: dict, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(dumps(doc), encoding="utf-8")
    return path


def envelope(kind: str, body: dict) -> dict:
    return {"kind": kind, "schema_version": SCHEMA_VERSION, **body}


def read(path: str | Path, kind: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    check(doc, kind, source=str(path))
    return doc


def check(doc: dict, kind: str, source: str = "document") -> None:
    if not isinstance(doc, dict) or doc.get("kind") != kind:
        found = doc.get("kind") if isinstance(doc, dict) else type(doc).__name__
        raise SchemaError(f"{source}: expected a {kind!r} document, found {found!r}")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"{source}: schema_version {doc.get('schema_version')!r}, "
                          f"this reader supports {SCHEMA_VERSION}")


def sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# ------------------------------------------------------------------ graph

def graph_to_dict(g: WeightedGraph) -> dict:
    return envelope("graph", {
        "nodes": list(g.node_ids),
        "edges": [[i, j, w] for i, j, w in g.edges()],
        "total_weight": g.total_weight,
    })


def graph_from_dict(doc: dict) -> WeightedGraph:
    check(doc, "graph")
    return WeightedGraph.from_edges(doc["nodes"], (tuple(e) for e in doc["edges"]))


# ------------------------------------------------------------------- scan

def scan_to_dict(scan: ScaleScanResult, selected: list[int] | None = None) -> dict:
    return envelope("scan", {
        "params": scan.params,
        "node_ids": list(scan.node_ids),
        "scales": [
            {"index": k, "t": float(t), "log10_t": float(np.log10(t)),
             "num_communities": p.num_communities, "quality": float(q),
             "ensemble_nvi": float(v), "labels": p.labels.tolist()}
            for k, (t, p, q, v) in enumerate(zip(scan.scales, scan.partitions,
                                                  scan.qualities, scan.ensemble_nvi))
        ],
        "selected": list(selected or []),
    })


def scan_from_dict(doc: dict) -> tuple[ScaleScanResult, list[int]]:
    check(doc, "scan")
    rows = doc["scales"]
    scan = ScaleScanResult(
        scales=[r["t"] for r in rows],
        partitions=[Partition(r["labels"]) for r in rows],
        qualities=[r["quality"] for r in rows],
        ensemble_nvi=[r["ensemble_nvi"] for r in rows],
        node_ids=tuple(doc["node_ids"]),
        params=doc["params"],
    )
    return scan, list(doc["selected"])


# -------------------------------------------------------------- hierarchy

def hierarchy_to_dict(m: MultilevelPartition) -> dict:
    levels = [
        {"name": level_name(k), "scale": m.scales[k], "num_communities": p.num_communities,
         "singleton_fraction": p.singleton_fraction, "community_sizes": p.community_sizes.tolist(),
         "labels": p.labels.tolist()}
        for k, p in enumerate(m.levels)
    ]
    transitions = []
    if len(m) >= 2:
        for k, table in enumerate(overlaps(m).tables):
            coo = table.tocoo()
            order = np.lexsort((coo.col, coo.row))
            transitions.append({
                "from": level_name(k), "to": level_name(k + 1),
                "flows": [[int(coo.row[i]), int(coo.col[i]), int(coo.data[i])] for i in order],
            })
    return envelope("hierarchy", {
        "node_ids": list(m.node_ids),
        "levels": levels,
        "transitions": transitions,
        "warning": m.warning,
        "meta": m.meta,
    })


def hierarchy_from_dict(doc: dict) -> MultilevelPartition:
    check(doc, "hierarchy")
    return MultilevelPartition(
        tuple(doc["node_ids"]),
        tuple(Partition(lv["labels"]) for lv in doc["levels"]),
        tuple(lv["scale"] for lv in doc["levels"]),
        doc.get("warning"),
        doc.get("meta") or {},
    )


# ---------------------------------------------------------- fragmentation

def fragmentation_to_dict(rep: FragmentationReport, run_id: str = "run") -> dict:
    return envelope("fragmentation", {
        "run_id": run_id,
        "n_nodes": rep.n_nodes, "n_left": rep.n_left, "n_right": rep.n_right,
        "transitions": [
            {"transition": t, "overall": o, "left": lf, "right": rt}
            for t, o, lf, rt in zip(rep.transitions, rep.overall, rep.left, rep.right)
        ],
        "overall": {"overall": rep.overall_mean, "left": rep.left_mean, "right": rep.right_mean},
        "skipped": {"left": rep.skipped_left, "right": rep.skipped_right},
        "display": rep.rounded(1),
    })


def fragmentation_from_dict(doc: dict) -> FragmentationReport:
    check(doc, "fragmentation")
    rows = doc["transitions"]
    return FragmentationReport(
        transitions=[r["transition"] for r in rows],
        overall=[r["overall"] for r in rows],
        left=[r["left"] for r in rows],
        right=[r["right"] for r in rows],
        n_nodes=doc["n_nodes"], n_left=doc["n_left"], n_right=doc["n_right"],
    )
