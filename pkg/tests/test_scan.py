import numpy as np
import pytest
from scipy.stats import spearmanr

from polifrag.errors import ContractError
from polifrag.graph import WeightedGraph
from polifrag.scan import ScaleScanResult, scale_grid, scan_scales, select_robust_scales, smooth
from polifrag.stability import Partition, nvi
from polifrag.synth import generate

from planted import SCAN, plant

TWO_TRIANGLES = WeightedGraph.from_edges(
    [f"v{i}" for i in range(6)], [(0, 1, 1), (0, 2, 1), (1, 2, 1), (3, 4, 1), (3, 5, 1), (4, 5, 1)])


def test_grid_endpoints():
    scan = scan_scales(TWO_TRIANGLES, -1.0, 1.0, n_scale=2, n_tries=2)
    assert scan.scales.tolist() == pytest.approx([0.1, 10.0])
    assert len(scan.partitions) == 2


def test_grid_log_spaced():
    grid = scale_grid(-3, 3, 7)
    assert np.allclose(np.log10(grid), np.arange(-3, 4))


def test_two_triangles_ensemble_agrees():
    scan = scan_scales(TWO_TRIANGLES, -1.0, 1.0, n_scale=20, n_tries=10, seed=4)
    # the split beats singletons once t > 1/3
    for t, p in zip(scan.scales, scan.partitions):
        assert p == (Partition([0, 0, 0, 1, 1, 1]) if t > 1 / 3 else Partition.singletons(6))
    assert np.all(np.asarray(scan.ensemble_nvi) == 0.0)
    m = select_robust_scales(scan)
    assert len(m) == 1 and m.warning is None
    assert m.levels[0] == Partition([0, 0, 0, 1, 1, 1])


def test_scan_preconditions():
    with pytest.raises(ContractError):
        scan_scales(TWO_TRIANGLES, 1.0, 1.0, 5, 5)
    with pytest.raises(ContractError):
        scan_scales(TWO_TRIANGLES, 0.0, 1.0, 1, 5)
    with pytest.raises(ContractError):
        scan_scales(TWO_TRIANGLES, 0.0, 1.0, 5, 1)


def test_scan_deterministic_and_parallel_identical():
    g, _, _ = generate(plant("binary-2x2", seed=3))
    a = scan_scales(g, -1, 1, 6, 4, seed=9)
    b = scan_scales(g, -1, 1, 6, 4, seed=9)
    c = scan_scales(g, -1, 1, 6, 4, seed=9, n_workers=2)
    for other in (b, c):
        assert a.partitions == other.partitions
        assert np.array_equal(a.ensemble_nvi, other.ensemble_nvi)
        assert np.array_equal(a.qualities, other.qualities)


def test_smooth_window():
    assert smooth([0, 3, 0, 3, 0], 3).tolist() == pytest.approx([1.5, 1.0, 2.0, 1.0, 1.5])
    assert smooth([1, 2], 1).tolist() == [1.0, 2.0]


@pytest.fixture(scope="module")
def planted_scan():
    spec = plant("binary-2x2", seed=0)
    g, truth, _ = generate(spec)
    return scan_scales(g, seed=0, **SCAN), truth


def test_planted_two_levels(planted_scan):
    scan, truth = planted_scan
    m = select_robust_scales(scan)
    assert [p.num_communities for p in m.levels] == [2, 4]
    assert m.scales[0] > m.scales[1]
    for found, planted_level in zip(m.levels, truth.levels):
        assert nvi(found, planted_level) <= 0.05


def test_planted_ensemble_minima_at_planted_scales(planted_scan):
    scan, truth = planted_scan
    s = smooth(scan.ensemble_nvi, 5)
    for level in truth.levels:
        hits = [k for k, p in enumerate(scan.partitions) if p == level]
        assert hits
        assert min(s[k] for k in hits) <= min(s) + 0.02


def test_monotone_resolution(planted_scan):
    scan, _ = planted_scan
    rho = spearmanr(scan.scales, scan.num_communities).statistic
    assert rho <= 0


def test_fallback_warns():
    parts = [Partition([0, 1, 2, 3])] * 5
    scan = ScaleScanResult(scales=np.logspace(-1, 1, 5), partitions=parts, qualities=[0.0] * 5,
                           ensemble_nvi=[0.5, 0.4, 0.3, 0.4, 0.5], node_ids=tuple("abcd"), params={})
    m = select_robust_scales(scan)
    assert len(m) == 1 and m.warning


def test_dedup_and_order():
    coarse, fine = Partition([0, 0, 1, 1, 2, 2]), Partition([0, 0, 1, 1, 2, 3])
    parts = [fine] * 6 + [coarse] * 6
    curve = [0.1, 0.0, 0.0, 0.0, 0.0, 0.1, 0.1, 0.0, 0.0, 0.0, 0.0, 0.1]
    scan = ScaleScanResult(scales=np.logspace(-1, 1, 12), partitions=parts, qualities=[0.0] * 12,
                           ensemble_nvi=curve, node_ids=tuple("abcdef"), params={})
    m = select_robust_scales(scan, window=1)
    assert [p.num_communities for p in m.levels] == [3, 4]
    assert m.levels[0] == coarse


def test_flat_curve_single_level():
    scan = scan_scales(TWO_TRIANGLES, 0.0, 1.0, n_scale=12, n_tries=4)
    assert len(set(scan.partitions)) == 1
    assert len(select_robust_scales(scan)) == 1
