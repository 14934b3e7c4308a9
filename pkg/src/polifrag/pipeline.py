"""Run configuration and end-to-end orchestration."""

from __future__ import annotations

import dataclasses
import json
import logging
import os
import platform
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import io
from .errors import ConfigError, StageError
from .fragmentation import frag_overall
from .graph import DEFAULT_CATEGORIES, load_attributes, load_bipartite, project
from .hierarchy import filter_singleton_levels
from .reports import correlation_payload, similarity_payload
from .scan import PROFILES, scan_scales, select_robust_scales

log = logging.getLogger(__name__)

REPORT_FILES = ("graph.json", "scan.json", "hierarchy.json", "fragmentation.json",
                "similarity.json", "correlation.json")
ENV_OUTPUT_DIR = "POLIFRAG_OUTPUT_DIR"
ENV_THREADS = "POLIFRAG_THREADS"


@dataclass
class RunConfig:
    edges: str | None = None
    graph: str | None = None
    attributes: str | None = None
    categories: list[str] = field(default_factory=lambda: list(DEFAULT_CATEGORIES))
    profile: str = "brazil"
    min_scale: float | None = None
    max_scale: float | None = None
    n_scale: int | None = None
    n_tries: int | None = None
    seed: int = 0
    n_workers: int = 1
    window: int = 5
    min_basin: int = 3
    eps: float = 0.02
    keep_trivial: bool = False
    ensemble_aggregate: str = "mean"
    max_pairs: int = 200
    singleton_threshold: float = 0.9
    norm: str = "class"
    alternative: str = "greater"
    mc_samples: int = 10_000
    output_dir: str = "polifrag-run"
    run_id: str = "run"

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ConfigError(f"unknown profile {self.profile!r}; choose from {sorted(PROFILES)}")
        for name, value in PROFILES[self.profile].items():
            if getattr(self, name) is None:
                setattr(self, name, value)
        if self.min_scale >= self.max_scale:
            raise ConfigError("min_scale must be below max_scale")
        if self.n_scale < 2 or self.n_tries < 2:
            raise ConfigError("n_scale and n_tries must be at least 2")
        if not 0 < self.singleton_threshold <= 1:
            raise ConfigError("singleton_threshold must lie in (0, 1]")
        if self.norm not in ("class", "all"):
            raise ConfigError("norm must be 'class' or 'all'")
        if self.alternative not in ("greater", "two-sided"):
            raise ConfigError("alternative must be 'greater' or 'two-sided'")
        if self.mc_samples < 1000:
            raise ConfigError("mc_samples must be at least 1000")
        if self.n_workers < 1:
            raise ConfigError("n_workers must be positive")
        self.categories = list(self.categories)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: str | Path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(data)

    def apply_env(self) -> "RunConfig":
        if os.environ.get(ENV_OUTPUT_DIR):
            self.output_dir = os.environ[ENV_OUTPUT_DIR]
        if os.environ.get(ENV_THREADS):
            try:
                self.n_workers = int(os.environ[ENV_THREADS])
            except ValueError as exc:
                raise ConfigError(f"{ENV_THREADS} must be an integer") from exc
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def fingerprint(self) -> str:
        # output location and worker count do not change results
        relevant = {k: v for k, v in self.to_dict().items() if k not in ("output_dir", "n_workers")}
        return io.sha256(io.dumps(relevant))


def versions() -> dict:
    return {"polifrag": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


class _Stage:
    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        log.info("stage %s", self.name)
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


def _prepare_output(target: Path) -> Path:
    if target.exists():
        if not target.is_dir():
            raise ConfigError(f"{target} exists and is not a directory")
        contents = set(os.listdir(target))
        if contents and "manifest.json" not in contents:
            raise ConfigError(f"{target} is not empty and holds no previous run; refusing to overwrite")
    target.parent.mkdir(parents=True, exist_ok=True)
    return Path(tempfile.mkdtemp(prefix=f".{target.name}.", dir=target.parent))


def run_pipeline(config: RunConfig) -> Path:
    """project -> scan -> select -> filter -> fragment -> similarity -> correlate.

    Reports are written to a scratch directory and moved into
    ``config.output_dir`` only when every stage succeeded.
    """
    target = Path(config.output_dir)
    staging = _prepare_output(target)
    try:
        docs = _execute(config)
        hashes = {}
        for name, doc in docs.items():
            text = io.dumps(doc)
            (staging / name).write_text(text, encoding="utf-8")
            hashes[name] = io.sha256(text)
        manifest = io.envelope("manifest", {
            "config": config.to_dict() | {"output_dir": None, "n_workers": None},
            "config_hash": config.fingerprint(),
            "seed": config.seed,
            "versions": versions(),
            "files": hashes,
        })
        io.write(manifest, staging / "manifest.json")
        if target.exists():
            shutil.rmtree(target)
        staging.rename(target)
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    return target


def _execute(config: RunConfig) -> dict[str, dict]:
    with _Stage("project"):
        if config.graph:
            graph = io.graph_from_dict(io.read(config.graph, "graph"))
        elif config.edges:
            graph = project(load_bipartite(config.edges))
        else:
            raise ConfigError("either 'edges' or 'graph' must be given")
    with _Stage("attributes"):
        if not config.attributes:
            raise ConfigError("an attribute file is required")
        attrs = load_attributes(config.attributes, config.categories)
        attrs.check_covers(graph.node_ids)
    with _Stage("scan"):
        scan = scan_scales(graph, config.min_scale, config.max_scale, config.n_scale, config.n_tries,
                           config.seed, n_workers=config.n_workers, max_pairs=config.max_pairs,
                           aggregate=config.ensemble_aggregate)
    with _Stage("select"):
        selected = select_robust_scales(scan, config.window, config.min_basin, config.eps,
                                        config.keep_trivial)
    with _Stage("filter"):
        hierarchy = filter_singleton_levels(selected, config.singleton_threshold)
        hierarchy.meta["singleton_fraction_before_filter"] = list(selected.singleton_fraction)
    with _Stage("fragment"):
        report = frag_overall(hierarchy, attrs)
    with _Stage("similarity"):
        similarity = similarity_payload(hierarchy, attrs, config.norm, config.alternative)
    with _Stage("correlate"):
        correlation = correlation_payload(attrs, graph.node_ids, config.mc_samples, config.seed)
    return {
        "graph.json": io.graph_to_dict(graph),
        "scan.json": io.scan_to_dict(scan, selected.meta["selected_indices"]),
        "hierarchy.json": io.hierarchy_to_dict(hierarchy),
        "fragmentation.json": io.fragmentation_to_dict(report, config.run_id),
        "similarity.json": similarity,
        "correlation.json": correlation,
    }


def bundle_report(run_dir: str | Path) -> dict:
    """Collect every JSON artifact of a run directory into one summary document."""
    run_dir = Path(run_dir)
    parts = {}
    kinds = {"graph.json": "graph", "scan.json": "scan", "hierarchy.json": "hierarchy",
             "fragmentation.json": "fragmentation", "similarity.json": "similarity",
             "correlation.json": "correlation", "manifest.json": "manifest"}
    for name, kind in kinds.items():
        path = run_dir / name
        if path.exists():
            doc = io.read(path, kind)
            if kind in ("graph", "scan"):
                # keep the summary small: drop per-node payloads
                doc = {k: v for k, v in doc.items() if k not in ("edges", "scales", "node_ids")} | {
                    "size": len(doc.get("edges", doc.get("scales", [])))}
            parts[kind] = doc
    if not parts:
        raise ConfigError(f"{run_dir} holds no pipeline artifacts")
    return io.envelope("summary", {"parts": parts})
