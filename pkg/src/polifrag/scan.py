"""Scale scan over Markov time and selection of robust scales.

At every scale an ensemble of Leiden runs is collected. The spread of the
ensemble (mean pairwise NVI) is low where the optimiser reliably lands on the
same partition; such valleys, smoothed and split wherever the best partition
changes between neighbouring scales, become the levels of the hierarchy.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .graph import WeightedGraph
from .hierarchy import MultilevelPartition
from .leiden import optimize
from .seeds import derive_seed, stream
from .stability import Partition, QualityModel, mean_pairwise_nvi, nvi, quality

log = logging.getLogger(__name__)

# per-country scan profiles: (min log10 t, max log10 t, n_scale, n_tries)
PROFILES = {
    "brazil": dict(min_scale=-3.0, max_scale=3.0, n_scale=1000, n_tries=100),
    "spain": dict(min_scale=-1.0, max_scale=1.0, n_scale=300, n_tries=100),
    "us": dict(min_scale=-1.0, max_scale=1.5, n_scale=400, n_tries=100),
}


@dataclass
class ScaleScanResult:
    scales: np.ndarray
    partitions: list[Partition]
    qualities: np.ndarray
    ensemble_nvi: np.ndarray
    ensembles: list[list[Partition]] = field(default_factory=list, repr=False)
    node_ids: tuple[str, ...] = ()
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.scales = np.asarray(self.scales, dtype=float)
        self.qualities = np.asarray(self.qualities, dtype=float)
        self.ensemble_nvi = np.asarray(self.ensemble_nvi, dtype=float)
        if len(self.scales) > 1 and not np.all(np.diff(self.scales) > 0):
            raise ContractError("scales must be strictly increasing")

    def __len__(self) -> int:
        return len(self.scales)

    @property
    def num_communities(self) -> np.ndarray:
        return np.array([p.num_communities for p in self.partitions])


def scale_grid(min_scale: float, max_scale: float, n_scale: int) -> np.ndarray:
    return np.logspace(min_scale, max_scale, n_scale)


def _scan_one(args):
    graph, t, index, n_tries, seed, max_pairs, aggregate, keep_ensemble = args
    model = QualityModel(graph, float(t))
    runs = [optimize(model, derive_seed(seed, "scan/optimize", index, k), restarts=1) for k in range(n_tries)]
    if graph.total_weight > 0:
        scores = [quality(model, p) for p in runs]
    else:
        scores = [0.0] * n_tries
    # first maximum wins, so the reduction does not depend on float noise ordering
    best = int(np.argmax(scores))
    rng = stream(seed, "scan/nvi-pairs", index)
    if aggregate == "mean":
        spread = mean_pairwise_nvi(runs, max_pairs, rng)
    elif aggregate == "median":
        spread = _median_pairwise_nvi(runs, max_pairs, rng)
    else:
        raise ContractError(f"unknown ensemble aggregate {aggregate!r}")
    return runs[best], scores[best], spread, (runs if keep_ensemble else [])


def _median_pairwise_nvi(runs, max_pairs, rng) -> float:
    k = len(runs)
    pairs = [(a, b) for a in range(k) for b in range(a + 1, k)]
    if len(pairs) > max_pairs:
        pick = np.sort(rng.choice(len(pairs), size=max_pairs, replace=False))
        pairs = [pairs[i] for i in pick]
    return float(np.median([nvi(runs[a], runs[b]) for a, b in pairs]))


def scan_scales(g: WeightedGraph, min_scale: float = -3.0, max_scale: float = 3.0,
                n_scale: int = 1000, n_tries: int = 100, seed: int = 0, *,
                n_workers: int = 1, max_pairs: int = 200, aggregate: str = "mean",
                keep_ensembles: bool = False) -> ScaleScanResult:
    """Optimise at ``n_scale`` log-spaced Markov times in ``[10**min_scale, 10**max_scale]``.

    Each scale gets ``n_tries`` runs with seeds derived from ``seed``; the
    best-quality run and the ensemble spread are recorded. Serial and
    parallel runs give identical results.
    """
    if not min_scale < max_scale:
        raise ContractError("min_scale must be below max_scale")
    if n_scale < 2 or n_tries < 2:
        raise ContractError("n_scale and n_tries must both be at least 2")
    if g.num_nodes == 0:
        raise ContractError("cannot scan an empty graph")
    grid = scale_grid(min_scale, max_scale, n_scale)
    jobs = [(g, t, i, n_tries, seed, max_pairs, aggregate, keep_ensembles) for i, t in enumerate(grid)]
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_scan_one, jobs, chunksize=max(1, len(jobs) // (4 * n_workers))))
    else:
        results = [_scan_one(job) for job in jobs]
    return ScaleScanResult(
        scales=grid,
        partitions=[r[0] for r in results],
        qualities=[r[1] for r in results],
        ensemble_nvi=[r[2] for r in results],
        ensembles=[r[3] for r in results] if keep_ensembles else [],
        node_ids=g.node_ids,
        params=dict(min_scale=float(min_scale), max_scale=float(max_scale), n_scale=int(n_scale),
                    n_tries=int(n_tries), seed=int(seed), max_pairs=int(max_pairs), aggregate=aggregate),
    )


def smooth(values: np.ndarray, window: int) -> np.ndarray:
    """Centred moving average; the window shrinks at the ends of the curve."""
    values = np.asarray(values, dtype=float)
    if window <= 1:
        return values.copy()
    half = window // 2
    out = np.empty_like(values)
    for k in range(len(values)):
        lo, hi = max(0, k - half), min(len(values), k + half + 1)
        out[k] = math.fsum(values[lo:hi]) / (hi - lo)
    return out


def _segments(partitions: list[Partition], eps: float) -> list[tuple[int, int]]:
    bounds, start = [], 0
    for k in range(len(partitions) - 1):
        if nvi(partitions[k], partitions[k + 1]) > eps:
            bounds.append((start, k))
            start = k + 1
    bounds.append((start, len(partitions) - 1))
    return bounds


def _segment_minimum(s: np.ndarray, lo: int, hi: int) -> int:
    seg = s[lo:hi + 1]
    floor = seg.min() + 1e-12
    runs, run = [], []
    for k in range(lo, hi + 1):
        if s[k] <= floor:
            run.append(k)
        elif run:
            runs.append(run)
            run = []
    if run:
        runs.append(run)
    longest = max(runs, key=len)
    return longest[(len(longest) - 1) // 2]


def _is_trivial(p: Partition) -> bool:
    return p.num_communities == 1 or p.num_communities == p.num_nodes


def select_robust_scales(scan: ScaleScanResult, window: int = 5, min_basin: int = 3,
                         eps: float = 0.02, keep_trivial: bool = False) -> MultilevelPartition:
    """Pick robust levels from a scan.

    The ensemble-NVI curve is smoothed with a centred window. The scan is cut
    into runs where the best partition stays the same (consecutive NVI at
    most ``eps``); within each run, the lowest point of the smoothed curve is
    a candidate if it is also a local minimum of the whole curve. Its basin
    is the contiguous stretch within ``eps`` of that minimum, and it must
    cover at least ``min_basin`` grid points. The best partition at each
    accepted minimum becomes one level. Levels are deduplicated and sorted by
    community count (ties: larger Markov time first).

    Trivial partitions (one community, or all singletons) are skipped unless
    ``keep_trivial``. If nothing qualifies, the best partition at the lowest
    point of the curve is returned with ``warning`` set.
    """
    n = len(scan)
    if n == 0:
        raise ContractError("empty scan")
    s = smooth(scan.ensemble_nvi, window)
    candidates = []
    for lo, hi in _segments(scan.partitions, eps):
        k = _segment_minimum(s, lo, hi)
        if (k > 0 and s[k - 1] < s[k]) or (k < n - 1 and s[k + 1] < s[k]):
            continue
        a = b = k
        while a > lo and s[a - 1] <= s[k] + eps:
            a -= 1
        while b < hi and s[b + 1] <= s[k] + eps:
            b += 1
        if b - a + 1 < min_basin:
            continue
        if not keep_trivial and _is_trivial(scan.partitions[k]):
            continue
        candidates.append((float(s[k]), k, (a, b)))

    warning = None
    chosen: list[tuple[int, tuple[int, int]]] = []
    for _, k, basin in sorted(candidates):
        if any(scan.partitions[k] == scan.partitions[j] for j, _ in chosen):
            continue
        chosen.append((k, basin))
    if not chosen:
        order = np.argsort(s, kind="stable")
        pool = [int(k) for k in order if keep_trivial or not _is_trivial(scan.partitions[k])]
        k = pool[0] if pool else int(order[0])
        chosen = [(k, (k, k))]
        warning = "no robust minimum found; returning the partition at the lowest ensemble NVI"
        log.warning(warning)

    chosen.sort(key=lambda kb: (scan.partitions[kb[0]].num_communities, -scan.scales[kb[0]]))
    return MultilevelPartition(
        scan.node_ids or tuple(str(i) for i in range(scan.partitions[0].num_nodes)),
        tuple(scan.partitions[k] for k, _ in chosen),
        tuple(float(scan.scales[k]) for k, _ in chosen),
        warning,
        {
            "selected_indices": [int(k) for k, _ in chosen],
            "basins": [[int(a), int(b)] for _, (a, b) in chosen],
            "window": int(window), "min_basin": int(min_basin), "eps": float(eps),
        },
    )
