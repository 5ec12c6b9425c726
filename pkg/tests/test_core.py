import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hurra.core import (
    Dataset,
    GroundTruth,
    ScoreSeries,
    derive_feature_labels,
    derive_timeslot_labels,
    rank_features,
)

from conftest import make_gt

binary_matrices = arrays(np.int8, st.tuples(st.integers(1, 6), st.integers(1, 8)), elements=st.integers(0, 1))


def test_timeslot_labels_zero():
    assert not derive_timeslot_labels(make_gt(np.zeros((3, 5)))).any()


def test_timeslot_labels_single_cell():
    g = np.zeros((4, 7), dtype=np.int8)
    g[2, 5] = 1
    a = derive_timeslot_labels(make_gt(g))
    assert a.tolist() == [0, 0, 0, 0, 0, 1, 0]


@given(binary_matrices)
def test_timeslot_labels_column_or(g):
    expected = [int(any(g[j, t] for j in range(g.shape[0]))) for t in range(g.shape[1])]
    assert derive_timeslot_labels(make_gt(g)).tolist() == expected


@given(binary_matrices, st.data())
def test_timeslot_labels_monotone(g, data):
    j = data.draw(st.integers(0, g.shape[0] - 1))
    t = data.draw(st.integers(0, g.shape[1] - 1))
    before = derive_timeslot_labels(make_gt(g))
    g2 = g.copy()
    g2[j, t] = 1
    after = derive_timeslot_labels(make_gt(g2))
    assert np.all(after >= before)


def test_feature_labels_cases():
    assert derive_feature_labels(make_gt(np.zeros((3, 4)))) == set()
    g = np.zeros((3, 4))
    g[1] = 1
    assert derive_feature_labels(make_gt(g)) == {"f1"}


@given(binary_matrices)
def test_feature_labels_row_or(g):
    expected = {f"f{j}" for j in range(g.shape[0]) if any(g[j])}
    assert derive_feature_labels(make_gt(g)) == expected


def test_rank_features_examples():
    assert rank_features({"A": 1.0, "B": 2.0}).features == ["B", "A"]
    assert rank_features({"A": 1.0, "B": 1.0}).features == ["A", "B"]


def test_rank_features_rejects_non_finite():
    with pytest.raises(ValueError, match="'B'"):
        rank_features({"A": 1.0, "B": float("nan")})


def test_rank_features_sort_oracle(rng):
    names = [f"k{i:02d}" for i in range(50)]
    scores = dict(zip(names, rng.integers(0, 10, 50).astype(float)))
    got = rank_features(scores).features
    # insertion sort on (score desc, name asc)
    expected = []
    for n in names:
        i = 0
        while i < len(expected) and (scores[expected[i]] > scores[n] or
                                     (scores[expected[i]] == scores[n] and expected[i] < n)):
            i += 1
        expected.insert(i, n)
    assert got == expected


@given(st.dictionaries(st.text("abcdef", min_size=1, max_size=4),
                       st.floats(-1e6, 1e6, allow_nan=False), min_size=1),
       st.floats(1e-3, 1e3))
def test_rank_features_permutation_and_scale(scores, c):
    r = rank_features(scores)
    assert sorted(r.features) == sorted(scores)
    scaled = rank_features({k: v * c for k, v in scores.items()})
    # scaling can only merge near-ties through rounding; strict orderings survive
    for (a, sa), (b, sb) in zip(r.entries, r.entries[1:]):
        if sa * c > sb * c:
            assert scaled.position(a) < scaled.position(b)


def test_dataset_invariants():
    with pytest.raises(ValueError, match="duplicate"):
        Dataset("d", ("a", "a"), [0, 1], np.zeros((2, 2)))
    with pytest.raises(ValueError, match="increasing"):
        Dataset("d", ("a",), [1, 1], np.zeros((1, 2)))
    with pytest.raises(ValueError, match="shape"):
        Dataset("d", ("a",), [0, 1, 2], np.zeros((1, 2)))
    d = Dataset("d", ("a",), [0, 1], [[1.0, np.nan]])
    assert d.missing_mask().tolist() == [[False, True]]
    with pytest.raises(ValueError):
        d.values[0, 0] = 3.0


def test_ground_truth_rejects_non_binary():
    with pytest.raises(ValueError):
        GroundTruth(("a",), np.array([[0, 2]]))


def test_score_series_finite():
    with pytest.raises(ValueError):
        ScoreSeries([0.0, np.inf])
    with pytest.raises(ValueError):
        ScoreSeries([0.0, 1.0], binary=[1])
