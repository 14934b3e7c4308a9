import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polifrag.errors import ContractError
from polifrag.graph import AttributeTable, Ideology, NodeAttributes
from polifrag.hierarchy import MultilevelPartition
from polifrag.similarity import (CommunityVector, UndefinedSimilarityError, classify_pairs, cosine,
                                 level_similarities, mean_vector, merge_test, weighted_similarity)
from polifrag.stability import Partition

CATS = ("Women", "Black", "LGBTQ", "Religious")


def _vec(key, size, values):
    return CommunityVector(1, key, np.asarray(values, dtype=float), size)


def test_weighted_example():
    a, b = _vec(0, 4, [1, 0, 0]), _vec(1, 9, [2, 0, 0])
    c, d = _vec(2, 1, [0, 1, 0]), _vec(3, 1, [0, 3, 0])
    norm_set = [(a, b), (c, d)]
    assert weighted_similarity(a, b, norm_set) == pytest.approx(6 / 3.5, abs=1e-9)
    assert weighted_similarity(c, d, norm_set) == pytest.approx(1 / 3.5, abs=1e-9)
    assert weighted_similarity(a, b, norm_set) == pytest.approx(1.7142857142857, abs=1e-9)
    assert weighted_similarity(c, d, norm_set) == pytest.approx(0.2857142857143, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 50), st.lists(st.lists(st.floats(0.01, 1.0), min_size=3, max_size=3),
                                    min_size=3, max_size=6))
def test_equal_sizes_reduce_to_cosine(size, rows):
    vecs = [_vec(k, size, r) for k, r in enumerate(rows)]
    norm_set = list(itertools.combinations(vecs, 2))
    for a, b in norm_set:
        assert weighted_similarity(a, b, norm_set) == cosine(a.mean_vector, b.mean_vector)


def test_pair_outside_norm_set():
    a, b, c = _vec(0, 1, [1, 0]), _vec(1, 1, [0, 1]), _vec(2, 1, [1, 1])
    with pytest.raises(ContractError):
        weighted_similarity(a, c, [(a, b)])


def test_zero_vector_cosine():
    with pytest.raises(UndefinedSimilarityError):
        cosine(np.zeros(3), np.ones(3))


def _attrs(specs):
    rows = {f"n{i}": NodeAttributes(Ideology(ideo), frozenset(ids)) for i, (ideo, ids) in enumerate(specs)}
    return AttributeTable(CATS, rows)


def test_mean_vectors():
    attrs = _attrs([("Left", {"Women"}), ("Right", {"Women", "Black"}), ("Unlabeled", set())])
    ideo = mean_vector(["n0", "n1", "n2"], attrs, "ideology")
    assert ideo.mean_vector.tolist() == pytest.approx([1 / 3, 0, 1 / 3])
    ident = mean_vector(["n0", "n1"], attrs, "identity")
    assert ident.mean_vector.tolist() == [1.0, 0.5, 0.0, 0.0]
    # brute-force tally on a random 30-member community
    rng = np.random.default_rng(5)
    specs = [(str(rng.choice(["Left", "Center", "Right", "Unlabeled"])),
              {c for c in CATS if rng.random() < 0.4}) for _ in range(30)]
    attrs = _attrs(specs)
    v = mean_vector(list(attrs.rows), attrs, "identity").mean_vector
    for j, c in enumerate(CATS):
        assert v[j] == sum(c in ids for _, ids in specs) / 30


def _hierarchy(coarse, fine):
    return MultilevelPartition([f"n{i}" for i in range(len(coarse))], [Partition(coarse), Partition(fine)])


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 25).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 2), min_size=n, max_size=n),
    st.lists(st.integers(0, 7), min_size=n, max_size=n))))
def test_classify_covers_all_pairs(data):
    a, b = Partition(data[0]), Partition(data[1])
    if a.num_communities > b.num_communities:
        a, b = b, a
    m = MultilevelPartition([str(i) for i in range(len(data[0]))], [a, b])
    classes = classify_pairs(m, 1)
    n = b.num_communities
    pairs = classes["intra"] + classes["extra"]
    assert len(pairs) == len(set(pairs)) == math.comb(n, 2)
    for i, j in classes["intra"]:
        assert set(a.labels[b.labels == i]) & set(a.labels[b.labels == j])


def test_classify_rejects_top_level():
    with pytest.raises(ContractError):
        classify_pairs(_hierarchy([0, 0, 1, 1], [0, 1, 2, 3]), 0)


def test_merge_test_runs_and_skips():
    # 6 fine communities under 2 parents: 6 intra and 9 extra pairs
    coarse = [0] * 6 + [1] * 6
    fine = [0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5]
    m = _hierarchy(coarse, fine)
    specs = [("Left", {"Women"})] * 6 + [("Right", {"Religious"})] * 6
    attrs = _attrs(specs)
    s = merge_test(m, attrs, 1, "ideology")
    assert (s.n_intra, s.n_extra) == (6, 9)
    assert not s.skipped
    assert s.mean_intra > s.mean_extra
    assert s.pvalue < 0.01
    assert s.power == pytest.approx(0.478, abs=0.01)
    # a single intra-branch pair is too few to test
    small = _hierarchy([0, 0, 1, 1], [0, 0, 1, 2])
    s2 = merge_test(small, _attrs(specs[:4]), 1, "ideology")
    assert s2.skipped and (s2.n_intra, s2.n_extra) == (1, 2)


def test_zero_vector_pairs_skipped():
    m = _hierarchy([0, 0, 0, 0], [0, 0, 1, 1])
    attrs = _attrs([("Left", set())] * 2 + [("Unlabeled", set())] * 2)
    records, skipped = level_similarities(m, attrs, 1, "ideology")
    assert records == [] and skipped == 1
