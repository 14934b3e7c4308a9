import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polifrag.errors import ContractError, EmptyHierarchyError
from polifrag.hierarchy import (MultilevelPartition, ancestors, filter_singleton_levels, level_name,
                                overlaps, parents)
from polifrag.stability import Partition


def _m(*levels):
    n = len(levels[0])
    return MultilevelPartition([f"n{i}" for i in range(n)], [Partition(x) for x in levels])


def singleton_fixture():
    # 21 nodes; singleton fractions 0.0, 0.5, 0.95
    a = [0] * 10 + [1] * 11
    b = [0] * 9 + [1] + [2] * 10 + [3]
    c = list(range(19)) + [19, 19]
    return _m(a, b, c)


def test_singleton_fractions_fixture():
    assert singleton_fixture().singleton_fraction == pytest.approx((0.0, 0.5, 0.95))


def test_filter_keeps_first_two():
    m = singleton_fixture()
    kept = filter_singleton_levels(m, 0.9)
    assert len(kept) == 2
    assert kept.levels == m.levels[:2]
    assert kept.meta["kept_levels"] == [0, 1]


def test_filter_everything_singleton():
    m = _m(list(range(5)))
    with pytest.raises(EmptyHierarchyError):
        filter_singleton_levels(m, 0.9)


def test_level_names():
    assert [level_name(k) for k in (0, 1, 25, 26, 27)] == ["A", "B", "Z", "AA", "AB"]


def test_counts_must_not_decrease():
    with pytest.raises(ContractError):
        _m([0, 1, 2, 3], [0, 0, 1, 1])


two_level = st.integers(2, 30).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 3), min_size=n, max_size=n),
    st.lists(st.integers(0, 9), min_size=n, max_size=n)))


@settings(max_examples=80, deadline=None)
@given(two_level)
def test_overlap_brute_force(pair):
    coarse, fine = Partition(pair[0]), Partition(pair[1])
    if coarse.num_communities > fine.num_communities:
        coarse, fine = fine, coarse
    m = MultilevelPartition([str(i) for i in range(len(pair[0]))], [coarse, fine])
    table = overlaps(m)[0].toarray()
    for i in range(coarse.num_communities):
        for j in range(fine.num_communities):
            assert table[i, j] == int(np.sum((coarse.labels == i) & (fine.labels == j)))
    assert table.sum(axis=1).tolist() == coarse.community_sizes.tolist()
    assert table.sum(axis=0).tolist() == fine.community_sizes.tolist()


def test_overlap_subset():
    m = _m([0, 0, 1, 1], [0, 1, 2, 3])
    mask = np.array([True, False, True, True])
    assert overlaps(m, mask)[0].toarray().tolist() == [[1, 0, 0, 0], [0, 0, 1, 1]]


def test_parents_and_ancestors():
    # fine community 1 straddles both parents
    m = _m([0, 0, 0, 1, 1, 1], [0, 0, 1, 1, 2, 2], [0, 1, 2, 3, 4, 5])
    assert parents(m, 1, 1) == {0, 1}
    assert parents(m, 1, 0) == {0}
    assert ancestors(m, 2, 2) == {(1, 1), (0, 0), (0, 1)}
    assert ancestors(m, 2, 0) == {(1, 0), (0, 0)}
    with pytest.raises(ContractError):
        ancestors(m, 0, 0)
