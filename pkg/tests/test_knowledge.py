import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hurra.core import rank_features
from hurra.knowledge import Counters, EKBase, EKGains, case_counters, ek_apply, ek_merge, ek_update

from conftest import make_gt

names = st.sampled_from(["a", "b", "c", "d", "e"])


@st.composite
def counters(draw):
    n = draw(st.integers(0, 20))
    return Counters(n, draw(st.integers(0, n)), draw(st.integers(0, n)))


bases = st.dictionaries(names, counters()).map(EKBase)


def test_apply_examples():
    s = {"a": 1.0, "b": 0.3}
    assert ek_apply(s, EKBase()) == s
    base = EKBase({"a": Counters(2, 1, 0)})
    assert ek_apply(s, base, EKGains(0.0, 0.0)) == s
    assert ek_apply(s, base, EKGains(2.0, 0.0)) == {"a": 2.0, "b": 0.3}


def test_apply_clamps_negative_multiplier():
    base = EKBase({"a": Counters(1, 0, 1)})
    assert ek_apply({"a": 1.0}, base, EKGains(0.0, 3.0)) == {"a": 0.0}


def test_gains_validation():
    with pytest.raises(ValueError):
        EKGains(-1.0, 0.0)
    with pytest.raises(ValueError):
        EKGains(float("inf"), 0.0)


def test_update_example():
    g = np.zeros((3, 4), dtype=np.int8)
    g[1, 2] = 1
    gt = make_gt(g, ["A", "B", "C"])
    base = ek_update(EKBase(), {"A": 0.9, "B": 0.5, "C": 0.1}, gt)
    assert base.get("A") == Counters(1, 0, 1)
    assert base.get("B") == Counters(1, 1, 0)
    assert base.get("C") == Counters(1, 0, 0)


def test_update_without_anomaly():
    gt = make_gt(np.zeros((2, 3)), ["A", "B"])
    base = ek_update(EKBase(), {"A": 1.0, "B": 2.0}, gt)
    assert base.get("A") == Counters(1, 0, 0) and base.get("B") == Counters(1, 0, 0)


def test_update_brute_force(rng):
    feats = [f"k{i}" for i in range(8)]
    for _ in range(50):
        g = (rng.random((8, 5)) < 0.1).astype(np.int8)
        s = dict(zip(feats, rng.random(8)))
        got = case_counters(s, make_gt(g, feats))
        flagged = [f for j, f in enumerate(feats) if g[j].any()]
        for j, f in enumerate(feats):
            plus = f in flagged
            minus = not plus and any(s[f] > s[k] for k in flagged)
            assert got.get(f) == Counters(1, int(plus), int(minus))


def test_merge_arithmetic():
    m = ek_merge([EKBase({"a": Counters(2, 1, 0)}), EKBase({"a": Counters(2, 2, 0)})])
    assert m.k_plus("a") == 0.75
    one = EKBase({"a": Counters(3, 1, 2)})
    assert ek_merge([one]) == one
    with pytest.raises(ValueError):
        ek_merge([])


@given(bases, bases, bases)
def test_merge_commutative_associative(x, y, z):
    assert ek_merge([x, y]) == ek_merge([y, x])
    assert ek_merge([ek_merge([x, y]), z]) == ek_merge([x, ek_merge([y, z])])


@given(st.lists(st.dictionaries(names, st.floats(0, 10)), min_size=1, max_size=4),
       st.floats(0.1, 10))
def test_uniform_rates_keep_order(score_maps, gamma):
    base = EKBase({n: Counters(4, 2, 1) for n in "abcde"})
    for s in score_maps:
        if not s:
            continue
        adjusted = ek_apply(s, base, EKGains(gamma, 0.0))
        assert rank_features(adjusted).features == rank_features(s).features


def test_json_round_trip():
    base = EKBase({"z": Counters(3, 1, 1), "a": Counters(1, 0, 0)})
    js = base.to_json()
    assert list(js["features"]) == ["a", "z"]
    assert EKBase.from_json(js) == base
    with pytest.raises(ValueError):
        EKBase.from_json({"features": {"a": {"n": 1}}})


def test_counters_invariants():
    with pytest.raises(ValueError):
        Counters(1, 2, 0)
    with pytest.raises(ValueError):
        Counters(-1, 0, 0)
    assert Counters().k_plus == 0.0
