"""Acceptance gate: one check per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` (or plain ``pytest``; the
result lines are written past output capture either way).
"""

import itertools
import json
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from polifrag.fragmentation import enc, frag_overall
from polifrag.graph import WeightedGraph
from polifrag.hierarchy import MultilevelPartition, filter_singleton_levels
from polifrag.leiden import optimize
from polifrag.parties import COUNTRIES, effective_number_of_parties, load_seat_counts
from polifrag.pipeline import REPORT_FILES, RunConfig, run_pipeline
from polifrag.scan import scan_scales, select_robust_scales
from polifrag.similarity import CommunityVector, classify_pairs, cosine, weighted_similarity
from polifrag.stability import Partition, QualityModel, nvi, quality
from polifrag.stats import ContingencyTable, chi_square, fisher_exact, mann_whitney_u, noether_power
from polifrag.synth import generate, ground_truth_frag, PlantedSpec

from oracles import best_partition, desk_graphs, fisher_2x2_enum, mw_exact_greater
from planted import PLANTS, SCAN, plant
from test_stats import POWER_GRID, simulated_power


def report(capsys, number: int, ok: bool, title: str, detail: str = "") -> None:
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title}" + (f" | {detail}" if detail else ""))


def test_criterion_01_enc_oracle(capsys):
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 21))
        p = rng.random(n) + 1e-3
        p = (p / math.fsum(p)).tolist()
        direct = 1 / float(sum(Fraction(x) ** 2 for x in p))
        worst = max(worst, abs(enc(p) - direct))
    uniform_ok = all(enc([1 / n] * n) == n for n in range(1, 21))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and uniform_ok and elapsed < 1.0
    report(capsys, 1, ok, "ENC oracle equivalence",
           f"max |diff| {worst:.1e}, uniform exact {uniform_ok}, {elapsed:.2f}s")
    assert ok


def test_criterion_02_party_enc(capsys):
    targets = {"brazil": 11.8, "spain": 3.4, "us": 2.0}
    seats = load_seat_counts()
    values = {c: effective_number_of_parties(seats[c]) for c in COUNTRIES}
    hits = {c: abs(round(values[c], 1) - targets[c]) <= 0.2 + 1e-9 for c in COUNTRIES}
    ok = all(hits.values())
    report(capsys, 2, ok, "party-seat ENC",
           ", ".join(f"{c} {values[c]:.2f} (target {targets[c]})" for c in COUNTRIES))
    assert ok


def _detected_frag(name: str, seed: int):
    spec = plant(name, seed)
    g, _, _ = generate(spec)
    t0 = time.perf_counter()
    scan = scan_scales(g, seed=seed, **SCAN)
    m = filter_singleton_levels(select_robust_scales(scan))
    got = frag_overall(m).overall if len(m) >= 2 else []
    return got, time.perf_counter() - t0


def test_criterion_03_frag_recovery(capsys):
    hand = PlantedSpec(10, [[[0.6, 0.4]], [[0.5, 0.5], [1.0]]], 0.9, [0.01, 0.2])
    b_ary = PlantedSpec(27, [[[1.0]], [[1 / 3] * 3], [[1 / 3] * 3] * 3], 0.9, [0.0, 0.1, 0.2])
    analytic_ok = (abs(ground_truth_frag(hand).overall[0] - 1.6) <= 1e-9
                   and all(abs(v - 3.0) <= 1e-9 for v in ground_truth_frag(b_ary).overall))
    details, ok = [f"analytic {'ok' if analytic_ok else 'wrong'}"], analytic_ok
    for name in PLANTS:
        truth = ground_truth_frag(plant(name)).overall
        good, slowest = 0, 0.0
        for seed in range(10):
            got, elapsed = _detected_frag(name, seed)
            slowest = max(slowest, elapsed)
            if len(got) == len(truth) and all(abs(a - b) <= 0.15 for a, b in zip(got, truth)):
                good += 1
        plant_ok = good >= 9 and slowest < 120
        ok &= plant_ok
        details.append(f"{name}: {good}/10 within 0.15 of {truth}, slowest run {slowest:.1f}s")
    report(capsys, 3, ok, "FRAG analytic recovery", "; ".join(details))
    assert ok


def test_criterion_04_optimizer_enumeration(capsys):
    cases = hits = 0
    quality_ok = True
    for adj in desk_graphs():
        g = WeightedGraph([f"v{i}" for i in range(len(adj))], adj)
        for t in (0.5, 1.0, 2.0):
            best, arg = best_partition(adj, t)
            model = QualityModel(g, t)
            got = optimize(model, seed=0)
            cases += 1
            q = quality(model, got)
            if abs(q - best) <= 1e-12:
                hits += 1
            if got == Partition(arg):
                quality_ok &= abs(q - best) <= 1e-12
    rate = hits / cases
    ok = rate >= 0.95 and quality_ok and len(desk_graphs()) >= 20
    report(capsys, 4, ok, "optimizer vs exhaustive enumeration",
           f"{hits}/{cases} cases optimal ({rate:.1%}), quality agreement {quality_ok}")
    assert ok


def test_criterion_05_scan_structure(capsys):
    spec = plant("binary-2x2", seed=0)
    g, truth, _ = generate(spec)
    m = select_robust_scales(scan_scales(g, seed=0, **SCAN))
    counts = [p.num_communities for p in m.levels]
    distances = [nvi(a, b) for a, b in zip(m.levels, truth.levels)]
    ok = (len(m) == 2 and counts == sorted(counts) and counts[0] < counts[1]
          and all(d <= 0.05 for d in distances))
    report(capsys, 5, ok, "scale-scan structure",
           f"levels {counts}, NVI vs plant {[round(d, 4) for d in distances]}")
    assert ok


def test_criterion_06_country_results_documented(capsys):
    # the country-level figures need private follower data; they live in the README as targets
    from pathlib import Path
    readme = (Path(__file__).parents[1] / "README.md").read_text(encoding="utf-8")
    ok = all(s in readme for s in ("2.8", "1.8", "1.7")) and "not reproducible" in readme
    report(capsys, 6, ok, "country-level results documented, substituted by criteria 3-5")
    assert ok


def test_criterion_07_statistics(capsys):
    rng = np.random.default_rng(77)
    sets = 0
    mw_ok = True
    for n1 in range(1, 10):
        for n2 in range(1, 11 - n1):
            for _ in range(6):
                xs, ys = rng.integers(0, 6, n1).tolist(), rng.integers(0, 6, n2).tolist()
                got = mann_whitney_u(xs, ys, method="exact").pvalue
                mw_ok &= abs(got - mw_exact_greater(xs, ys)) <= 1e-12
                sets += 1
    chi = chi_square(ContingencyTable(np.array([[10, 0], [0, 10]]))).statistic
    chi_ok = abs(chi - 20.0) <= 1e-9
    tables = [[[1, 9], [11, 3]], [[3, 1], [1, 3]], [[0, 5], [5, 0]], [[7, 2], [4, 9]], [[12, 5], [3, 8]]]
    fisher_ok = all(abs(fisher_exact(ContingencyTable(np.array(t))).pvalue - fisher_2x2_enum(t)) <= 1e-9
                    for t in tables)
    spain = noether_power(6, 9, 0.75, 0.05)
    spain_ok = abs(spain - 0.46) <= 0.02
    gaps = {(a, b): simulated_power(a, b) - noether_power(a, b) for a, b in POWER_GRID}
    sim_ok = all(abs(g) <= 0.03 for g in gaps.values())
    ok = mw_ok and sets >= 100 and chi_ok and fisher_ok and spain_ok and sim_ok
    report(capsys, 7, ok, "statistics oracles",
           f"U exact {sets} sets {mw_ok}; chi2 {chi:.12g}; fisher {fisher_ok}; "
           f"power(6,9) {spain:.3f}; simulation-minus-formula "
           + ", ".join(f"{k}: {v:+.3f}" for k, v in gaps.items()))
    assert ok


def test_criterion_08_similarity(capsys):
    rng = np.random.default_rng(8)
    exact = True
    for _ in range(200):
        size = int(rng.integers(1, 100))
        vecs = [CommunityVector(1, k, rng.random(4) + 0.01, size) for k in range(4)]
        norm_set = list(itertools.combinations(vecs, 2))
        exact &= all(weighted_similarity(a, b, norm_set) == cosine(a.mean_vector, b.mean_vector)
                     for a, b in norm_set)
    a, b = CommunityVector(1, 0, np.array([1.0, 0]), 4), CommunityVector(1, 1, np.array([1.0, 0]), 9)
    c, d = CommunityVector(1, 2, np.array([0, 1.0]), 1), CommunityVector(1, 3, np.array([0, 1.0]), 1)
    ws = weighted_similarity(a, b, [(a, b), (c, d)]), weighted_similarity(c, d, [(a, b), (c, d)])
    example_ok = abs(ws[0] - 12 / 7) <= 1e-9 and abs(ws[1] - 2 / 7) <= 1e-9
    cover_ok = True
    for _ in range(50):
        n = int(rng.integers(2, 30))
        coarse = Partition(rng.integers(0, 3, n))
        fine = Partition(np.arange(n) if rng.random() < 0.3 else rng.integers(0, 8, n))
        if coarse.num_communities > fine.num_communities:
            coarse, fine = fine, coarse
        m = MultilevelPartition([str(i) for i in range(n)], [coarse, fine])
        cls = classify_pairs(m, 1)
        pairs = cls["intra"] + cls["extra"]
        cover_ok &= len(set(pairs)) == len(pairs) == math.comb(fine.num_communities, 2)
    ok = exact and example_ok and cover_ok
    report(capsys, 8, ok, "similarity contracts",
           f"equal sizes exact {exact}; example {ws[0]:.6f}/{ws[1]:.6f}; pair coverage {cover_ok}")
    assert ok


def test_criterion_09_determinism(capsys, tmp_path):
    from polifrag.cli import main
    spec = plant("binary-2x2", seed=4,
                 ideology=[{"Left": 0.9, "Center": 0.1}, {"Left": 0.7, "Right": 0.3},
                           {"Right": 0.9, "Center": 0.1}, {"Right": 0.6, "Left": 0.4}],
                 identity=[{"Women": 0.6}, {"LGBTQ": 0.5}, {"Religious": 0.8}, {"Religious": 0.5}])
    (tmp_path / "spec.json").write_text(json.dumps(spec.to_dict()))
    assert main(["synth", "--spec", str(tmp_path / "spec.json"), "--out-dir", str(tmp_path)]) == 0
    runs = [run_pipeline(RunConfig(graph=str(tmp_path / "graph.json"),
                                   attributes=str(tmp_path / "attributes.csv"),
                                   min_scale=-1.5, max_scale=1.5, n_scale=30, n_tries=5,
                                   seed=17, mc_samples=1000, output_dir=str(tmp_path / f"run{k}")))
            for k in range(2)]
    names = (*REPORT_FILES, "manifest.json")
    same = [(runs[0] / n).read_bytes() == (runs[1] / n).read_bytes() for n in names]
    ok = all(same)
    report(capsys, 9, ok, "determinism", f"{sum(same)}/{len(names)} files byte-identical")
    assert ok


def test_criterion_10_singleton_filter(capsys):
    levels = [[0] * 10 + [1] * 11, [0] * 9 + [1] + [2] * 10 + [3], list(range(19)) + [19, 19]]
    m = MultilevelPartition([f"n{i}" for i in range(21)], [Partition(x) for x in levels])
    kept = filter_singleton_levels(m, 0.9)
    fractions = [round(f, 4) for f in m.singleton_fraction]
    ok = fractions == [0.0, 0.5, 0.95] and kept.levels == m.levels[:2]
    report(capsys, 10, ok, "singleton filter",
           f"fractions {fractions}, kept levels {[k + 1 for k in kept.meta['kept_levels']]} (1-based)")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
