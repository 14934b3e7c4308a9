"""Command-line entry point: ``polifrag <subcommand> ...``.

Exit codes: 0 success, 2 input error, 3 stage failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import io
from .errors import (ConfigError, ContractError, EmptyInputError, ParseError, PolifragError,
                     SchemaError, StageError, ValidationError)
from .fragmentation import frag_overall
from .graph import DEFAULT_CATEGORIES, load_attributes, load_bipartite, project, write_attributes
from .hierarchy import filter_singleton_levels
from .pipeline import ENV_OUTPUT_DIR, ENV_THREADS, RunConfig, bundle_report, run_pipeline
from .reports import correlation_payload, similarity_payload
from .scan import PROFILES, scan_scales, select_robust_scales
from .synth import PlantedSpec, generate, ground_truth_frag

log = logging.getLogger("polifrag")

INPUT_ERRORS = (ParseError, EmptyInputError, ValidationError, SchemaError, ConfigError,
                ContractError, FileNotFoundError, IsADirectoryError)


def _categories(text: str | None) -> list[str]:
    if not text:
        return list(DEFAULT_CATEGORIES)
    return [c.strip() for c in text.split(",") if c.strip()]


def _out_dir(args) -> Path:
    path = Path(args.out_dir or os.environ.get(ENV_OUTPUT_DIR) or ".")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _workers(args) -> int:
    if args.workers is not None:
        return args.workers
    return int(os.environ.get(ENV_THREADS, "1"))


def cmd_project(args) -> None:
    graph = project(load_bipartite(args.edges))
    io.write(io.graph_to_dict(graph), args.out)
    log.info("projected %d influencers, %d edges -> %s", graph.num_nodes, graph.num_edges, args.out)


def cmd_detect(args) -> None:
    graph = io.graph_from_dict(io.read(args.graph, "graph"))
    params = dict(PROFILES[args.profile])
    for name in ("min_scale", "max_scale", "n_scale", "n_tries"):
        if getattr(args, name) is not None:
            params[name] = getattr(args, name)
    scan = scan_scales(graph, seed=args.seed, n_workers=_workers(args), **params)
    selected = select_robust_scales(scan, args.window, args.min_basin, args.eps, args.keep_trivial)
    hierarchy = filter_singleton_levels(selected, args.singleton_threshold)
    hierarchy.meta["singleton_fraction_before_filter"] = list(selected.singleton_fraction)
    out = _out_dir(args)
    io.write(io.scan_to_dict(scan, selected.meta["selected_indices"]), out / "scan.json")
    io.write(io.hierarchy_to_dict(hierarchy), out / "hierarchy.json")
    log.info("%d robust level(s), %d kept after the singleton filter", len(selected), len(hierarchy))


def cmd_fragment(args) -> None:
    hierarchy = io.hierarchy_from_dict(io.read(args.hierarchy, "hierarchy"))
    attrs = load_attributes(args.attributes, _categories(args.categories)) if args.attributes else None
    report = frag_overall(hierarchy, attrs)
    io.write(io.fragmentation_to_dict(report, args.run_id), args.out)
    log.info("overall FRAG %.3f", report.overall_mean)


def cmd_similarity(args) -> None:
    hierarchy = io.hierarchy_from_dict(io.read(args.hierarchy, "hierarchy"))
    attrs = load_attributes(args.attributes, _categories(args.categories))
    attrs.check_covers(hierarchy.node_ids)
    io.write(similarity_payload(hierarchy, attrs, args.norm, args.alternative), args.out)


def cmd_correlate(args) -> None:
    attrs = load_attributes(args.attributes, _categories(args.categories))
    if args.hierarchy:
        nodes = io.hierarchy_from_dict(io.read(args.hierarchy, "hierarchy")).node_ids
        attrs.check_covers(nodes)
    else:
        nodes = sorted(attrs.rows)
    io.write(correlation_payload(attrs, nodes, args.mc_samples, args.seed), args.out)


def cmd_synth(args) -> None:
    spec = PlantedSpec.from_json(args.spec)
    graph, truth, attrs = generate(spec)
    out = _out_dir(args)
    io.write(io.graph_to_dict(graph), out / "graph.json")
    io.write(io.hierarchy_to_dict(truth), out / "truth.json")
    io.write(io.fragmentation_to_dict(ground_truth_frag(spec), "ground-truth"), out / "ground_truth.json")
    write_attributes(attrs, out / "attributes.csv")
    log.info("wrote planted fixture with %d nodes to %s", graph.num_nodes, out)


def cmd_report(args) -> None:
    summary = bundle_report(args.run_dir)
    out = args.out or str(Path(args.run_dir) / "summary.json")
    io.write(summary, out)


def cmd_run(args) -> None:
    data = json.loads(Path(args.config).read_text(encoding="utf-8")) if args.config else {}
    for key in ("edges", "graph", "attributes", "profile", "min_scale", "max_scale", "n_scale",
                "n_tries", "seed", "output_dir", "run_id", "mc_samples", "norm", "alternative",
                "singleton_threshold"):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    if args.categories:
        data["categories"] = _categories(args.categories)
    if args.workers is not None:
        data["n_workers"] = args.workers
    config = RunConfig.from_dict(data).apply_env()
    path = run_pipeline(config)
    print(path)


def _scan_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--profile", choices=sorted(PROFILES), default="brazil")
    p.add_argument("--min-scale", dest="min_scale", type=float)
    p.add_argument("--max-scale", dest="max_scale", type=float)
    p.add_argument("--n-scale", dest="n_scale", type=int)
    p.add_argument("--n-tries", dest="n_tries", type=int)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, help=f"parallel processes (env {ENV_THREADS})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polifrag", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("project", help="bipartite edge list -> co-follow graph JSON")
    p.add_argument("--edges", required=True)
    p.add_argument("--out", default="graph.json")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("detect", help="scale scan, robust-scale selection and singleton filter")
    p.add_argument("--graph", required=True)
    _scan_flags(p)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--min-basin", dest="min_basin", type=int, default=3)
    p.add_argument("--eps", type=float, default=0.02)
    p.add_argument("--keep-trivial", dest="keep_trivial", action="store_true")
    p.add_argument("--singleton-threshold", dest="singleton_threshold", type=float, default=0.9)
    p.add_argument("--out-dir", dest="out_dir")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("fragment", help="hierarchy JSON -> fragmentation report JSON")
    p.add_argument("--hierarchy", required=True)
    p.add_argument("--attributes")
    p.add_argument("--categories")
    p.add_argument("--run-id", dest="run_id", default="run")
    p.add_argument("--out", default="fragmentation.json")
    p.set_defaults(func=cmd_fragment)

    p = sub.add_parser("similarity", help="intra/extra-branch similarity and merge tests")
    p.add_argument("--hierarchy", required=True)
    p.add_argument("--attributes", required=True)
    p.add_argument("--categories")
    p.add_argument("--norm", choices=("class", "all"), default="class")
    p.add_argument("--alternative", choices=("greater", "two-sided"), default="greater")
    p.add_argument("--out", default="similarity.json")
    p.set_defaults(func=cmd_similarity)

    p = sub.add_parser("correlate", help="ideology x identity association")
    p.add_argument("--attributes", required=True)
    p.add_argument("--hierarchy", help="restrict to the nodes of this hierarchy")
    p.add_argument("--categories")
    p.add_argument("--mc-samples", dest="mc_samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="correlation.json")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("synth", help="generate a planted benchmark fixture")
    p.add_argument("--spec", required=True)
    p.add_argument("--out-dir", dest="out_dir")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report", help="bundle a run directory into summary.json")
    p.add_argument("--run-dir", dest="run_dir", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("run", help="full pipeline from a config file and/or flags")
    p.add_argument("--config")
    p.add_argument("--edges")
    p.add_argument("--graph")
    p.add_argument("--attributes")
    p.add_argument("--categories")
    _scan_flags(p)
    p.set_defaults(profile=None)
    p.add_argument("--singleton-threshold", dest="singleton_threshold", type=float)
    p.add_argument("--norm", choices=("class", "all"))
    p.add_argument("--alternative", choices=("greater", "two-sided"))
    p.add_argument("--mc-samples", dest="mc_samples", type=int)
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--run-id", dest="run_id")
    p.set_defaults(func=cmd_run)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "seed", 0) is None:
        args.seed = None if args.command == "run" else 0
    try:
        args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc.cause, INPUT_ERRORS) else 3
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PolifragError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
