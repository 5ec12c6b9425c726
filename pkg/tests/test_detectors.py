import math

import numpy as np
import pytest
from scipy.stats import kurtosis
from sklearn.ensemble import IsolationForest

from hurra.core import ScoreSeries
from hurra.detectors import (
    LB_DEFAULTS,
    UB_GRIDS,
    BinarizationPolicy,
    DetectorSpec,
    HyperGrid,
    binarize,
    dbscan_flags,
    grid_search,
    hst_score,
    ideal_ensemble,
    if_score,
    loda_score,
    oracle_detector,
    rhf_score,
    run_detector,
    xstream_score,
)
from hurra.detectors.hst import build_forest, node_paths
from hurra.detectors.iforest import average_path_length
from hurra.detectors.loda import sparse_projections
from hurra.detectors.rhf import grow_tree, kurtosis_weights
from hurra.detectors.xstream import CountMinSketch, chain_bin_keys, streamhash_projection
from hurra.metrics import pr_auc
from hurra.preprocess import preprocess

from conftest import make_dataset, make_gt


def harmonic(n):
    return sum(1.0 / i for i in range(1, n + 1))


def c_exact(n):
    if n <= 1:
        return 0.0
    return 2.0 * harmonic(n - 1) - 2.0 * (n - 1) / n


def single_outlier(rng, F=4, T=120, at=70):
    X = rng.normal(size=(F, T))
    X[:, at] += 12.0
    return make_dataset(X), at


def shifted(rng, F=5, T=300, start=200, stop=215, culprits=(0, 1, 2)):
    X = rng.normal(size=(F, T))
    for j in culprits:
        X[j, start:stop] += 6.0
    g = np.zeros((F, T), dtype=np.int8)
    g[list(culprits), start:stop] = 1
    d, _ = preprocess(make_dataset(X))
    return d, make_gt(g)


# ---- isolation forest -------------------------------------------------------

def test_average_path_length():
    assert average_path_length(1) == 0.0
    assert average_path_length(2) == 1.0
    for n in (3, 10, 256, 1500):
        assert float(average_path_length(n)) == pytest.approx(c_exact(n), abs=1e-10)


def test_if_matches_manual_tree_walk(rng):
    d = make_dataset(rng.normal(size=(4, 60)))
    got = if_score(d, trees=8, sample_frac=0.5, feature_frac=0.75, seed=3).scores
    X = d.values.T
    forest = IsolationForest(n_estimators=8, max_samples=30, max_features=3, random_state=3).fit(X)
    total = np.zeros(60)
    for est, feats in zip(forest.estimators_, forest.estimators_features_):
        t = est.tree_
        for i, row in enumerate(X[:, feats].astype(np.float32)):
            node, depth = 0, 0
            while t.children_left[node] != -1:
                node = (t.children_left[node] if row[t.feature[node]] <= t.threshold[node]
                        else t.children_right[node])
                depth += 1
            total[i] += depth + c_exact(int(t.n_node_samples[node]))
    expected = 2.0 ** (-(total / 8) / c_exact(30))
    np.testing.assert_allclose(got, expected, atol=1e-12)


def test_if_lb_defaults():
    assert LB_DEFAULTS["IF"] == {"trees": 200, "sample_frac": 0.75, "feature_frac": 0.5}
    spec = DetectorSpec.lower_bound("if")
    assert spec.resolved_params() == LB_DEFAULTS["IF"]


# ---- random histogram forest ------------------------------------------------

def test_kurtosis_weights(rng):
    XT = rng.standard_t(3, size=(5, 200))
    XT[4] = 2.0
    w = kurtosis_weights(XT)
    np.testing.assert_allclose(w[:4], np.log1p(kurtosis(XT[:4], axis=1, fisher=False)), atol=1e-10)
    assert w[4] == 0.0


def test_rhf_leaves_partition_and_feature_choice(rng):
    XT = rng.normal(size=(3, 100))
    XT[1] = 0.0  # constant: never chosen for a split
    picked = []
    leaves = grow_tree(XT, 6, np.random.default_rng(0), on_split=picked.append)
    rows = np.sort(np.concatenate([r for r, _ in leaves]))
    assert rows.tolist() == list(range(100))
    assert 1 not in picked
    assert all(size == r.size for r, size in leaves)


def test_rhf_duplicates_count_once():
    X = np.zeros((2, 10))
    X[:, 5:] = 1.0
    X[:, 9] = 4.0
    d = make_dataset(X)
    with_dup = rhf_score(d, trees=5, max_height=2, seed=0).scores
    without = rhf_score(d, trees=5, max_height=2, check_duplicates=False, seed=0).scores
    assert np.all(with_dup >= without)
    r = np.random.default_rng(0)
    expected = np.zeros(10)
    for _ in range(5):
        for rows, _ in grow_tree(np.ascontiguousarray(X), 2, r):
            distinct = {tuple(X[:, i]) for i in rows}
            expected[rows] += math.log(10 / len(distinct))
    np.testing.assert_allclose(with_dup, expected)


def test_rhf_score_is_leaf_information(rng):
    d = make_dataset(rng.normal(size=(3, 40)))
    got = rhf_score(d, trees=3, max_height=3, check_duplicates=False, seed=9).scores
    r = np.random.default_rng(9)
    expected = np.zeros(40)
    for _ in range(3):
        for rows, _ in grow_tree(np.ascontiguousarray(d.values), 3, r):
            expected[rows] += math.log(40 / rows.size)
    np.testing.assert_allclose(got, expected)


# ---- half-space trees -------------------------------------------------------

def test_hst_paths_match_traversal(rng):
    U = rng.random((30, 3))
    dims, cuts = build_forest(3, 4, 4, np.random.default_rng(1))
    paths = node_paths(U, dims, cuts, 4)
    for t in range(30):
        for k in range(4):
            node = 0
            for depth in range(4):
                node = 2 * node + (2 if U[t, dims[k, node]] > cuts[k, node] else 1)
                assert paths[t, k, depth + 1] == node


def hst_oracle(X, psi_frac, trees, h, seed):
    T, F = X.shape
    W = int(round(psi_frac * T))
    lo, hi = X[:W].min(axis=0), X[:W].max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    U = (X - lo) / span
    dims, cuts = build_forest(F, trees, h, np.random.default_rng(seed))

    def path(u, k):
        nodes = [0]
        for _ in range(h):
            n = nodes[-1]
            nodes.append(2 * n + (2 if u[dims[k, n]] > cuts[k, n] else 1))
        return nodes

    windows = [(s, min(s + W, T)) for s in range(0, T, W)]
    out = np.zeros(T)
    for i, (a, b) in enumerate(windows):
        ra, rb = windows[i - 1] if i else windows[min(1, len(windows) - 1)]
        for t in range(a, b):
            total = 0.0
            for k in range(trees):
                mine = path(U[t], k)
                ref_paths = [path(U[r], k) for r in range(ra, rb)]
                for depth in range(h + 1):
                    mass = sum(p[depth] == mine[depth] for p in ref_paths) * W / (rb - ra)
                    if mass < 0.1 * W or depth == h:
                        total += mass * 2**depth
                        break
            out[t] = -total
    return out


def test_hst_matches_oracle(rng):
    X = rng.normal(size=(3, 50))
    got = hst_score(make_dataset(X), psi_frac=0.3, trees=3, h=4, seed=2).scores
    np.testing.assert_allclose(got, hst_oracle(X.T, 0.3, 3, 4, 2), atol=1e-9)


# ---- LODA -------------------------------------------------------------------

def loda_oracle(X, window_frac, k, seed):
    T, F = X.shape
    W = int(round(window_frac * T))
    P = sparse_projections(F, k, np.random.default_rng(seed))
    nb = math.ceil(math.sqrt(W))
    out = np.zeros(T)
    for i in range(k):
        z = X @ P[i]
        lo, hi = z[:W].min(), z[:W].max()

        def b(v):
            if v < lo or v > hi:
                return None
            return nb - 1 if v == hi else int((v - lo) / (hi - lo) * nb)

        for t in range(T):
            ref = range(W, min(2 * W, T)) if t < W else range(t - W, t)
            mine = b(z[t])
            count = 0 if mine is None else sum(b(z[r]) == mine for r in ref)
            out[t] -= math.log(max(count / len(ref), 1e-12)) / k
    return out


def test_loda_matches_oracle(rng):
    X = rng.normal(size=(4, 60))
    got = loda_score(make_dataset(X), window_frac=0.25, seed=4, n_projections=6).scores
    np.testing.assert_allclose(got, loda_oracle(X.T, 0.25, 6, 4), atol=1e-9)


def test_loda_projection_sparsity():
    P = sparse_projections(16, 50, np.random.default_rng(0))
    assert ((P != 0).sum(axis=1) == 4).all()


# ---- xStream ----------------------------------------------------------------

def test_streamhash_distribution():
    R = streamhash_projection(200, 300, np.random.default_rng(0))
    vals, counts = np.unique(R, return_counts=True)
    np.testing.assert_allclose(vals, [-math.sqrt(3), 0, math.sqrt(3)])
    np.testing.assert_allclose(counts / R.size, [1 / 6, 2 / 3, 1 / 6], atol=0.01)


def test_chain_keys_follow_bin_coordinates(rng):
    Y = rng.normal(size=(40, 5))
    delta = np.full(5, 0.7)
    keys = chain_bin_keys(Y, delta, 3, 6, np.random.default_rng(8))
    r = np.random.default_rng(8)
    shift = r.uniform(size=(3, 5)) * delta
    picks = r.integers(0, 5, size=(3, 6))
    for c in range(3):
        seen = {}
        coords = []
        for level in range(6):
            f = int(picks[c, level])
            m = seen.get(f, -1) + 1
            seen[f] = m
            # bin width halves every time a dimension comes back
            cell = np.floor((2.0**m * Y[:, f] + shift[c, f]) / delta[f]).astype(int)
            coords = [cur + ((f, int(v)),) for cur, v in
                      zip(coords or [()] * 40, cell)]
            current = {}
            for t, key in enumerate(coords):
                current.setdefault(tuple(sorted(dict(key).items())), set()).add(int(keys[t, c, level]))
            # same coordinates <=> same hashed key
            assert all(len(v) == 1 for v in current.values())
            assert len({next(iter(v)) for v in current.values()}) == len(current)


def test_count_min_sketch_never_undercounts(rng):
    keys = rng.integers(0, 2**63, size=5000, dtype=np.uint64) % np.uint64(300)
    cms = CountMinSketch(np.random.default_rng(0), log2_width=8)
    table = cms.table(keys)
    est = cms.query(table, np.arange(300, dtype=np.uint64))
    exact = np.bincount(keys.astype(np.int64), minlength=300)
    assert np.all(est >= exact)


def xstream_oracle(X, k, c, d, init_frac, seed):
    T, F = X.shape
    W = int(round(init_frac * T))
    r = np.random.default_rng(seed)
    Y = X @ streamhash_projection(F, k, r)
    delta = (Y[:W].max(axis=0) - Y[:W].min(axis=0)) / 2
    delta[delta <= 0] = 1.0
    keys = chain_bin_keys(Y, delta, c, d, r)
    windows = [(s, min(s + W, T)) for s in range(0, T, W)]
    out = np.zeros(T)
    for i, (a, b) in enumerate(windows):
        ra, rb = windows[i - 1] if i else windows[min(1, len(windows) - 1)]
        for t in range(a, b):
            chain_scores = []
            for ch in range(c):
                best = math.inf
                for lv in range(d):
                    n = sum(keys[s, ch, lv] == keys[t, ch, lv] for s in range(ra, rb)) * W / (rb - ra)
                    best = min(best, math.log2(1 + n) + lv + 1)
                chain_scores.append(best)
            out[t] = -np.mean(chain_scores)
    return out


def test_xstream_matches_exact_count_oracle(rng):
    X = rng.normal(size=(4, 45))
    got = xstream_score(make_dataset(X), k_proj=6, c_chains=4, d_depth=5, init_frac=0.3, seed=5).scores
    np.testing.assert_allclose(got, xstream_oracle(X.T, 6, 4, 5, 0.3, 5), atol=1e-9)


# ---- DBSCAN -----------------------------------------------------------------

def dbscan_noise_oracle(X, eps, min_samples):
    n = len(X)
    dist = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2))
    core = (dist <= eps).sum(axis=1) >= min_samples
    return np.array([not core[i] and not any(core[j] and dist[i, j] <= eps for j in range(n))
                     for i in range(n)]).astype(float)


@pytest.mark.parametrize("eps,min_samples", [(0.5, 2), (1.0, 5), (2.0, 10)])
def test_dbscan_matches_brute_force(rng, eps, min_samples):
    X = rng.normal(size=(3, 80))
    got = dbscan_flags(make_dataset(X), eps=eps, min_samples=min_samples)
    np.testing.assert_array_equal(got.scores, dbscan_noise_oracle(X.T, eps, min_samples))
    np.testing.assert_array_equal(got.binary, got.scores)


# ---- shared properties ------------------------------------------------------

ALGOS = ["IF", "RHF", "HST", "LODA", "XSTREAM", "DBSCAN"]


@pytest.mark.parametrize("algo", ALGOS)
def test_orientation(rng, algo):
    d, at = single_outlier(rng)
    params = {"eps": 4.0} if algo == "DBSCAN" else {}
    s = run_detector(d, DetectorSpec.lower_bound(algo, 0, **params)).scores
    assert s[at] >= np.median(s)


@pytest.mark.parametrize("algo", ALGOS)
def test_deterministic(rng, algo):
    d, _ = single_outlier(rng)
    spec = DetectorSpec.lower_bound(algo, 7)
    np.testing.assert_array_equal(run_detector(d, spec).scores, run_detector(d, spec).scores)


def test_detectors_reject_missing():
    d = make_dataset([[1.0, np.nan, 2.0], [1.0, 2.0, 3.0]])
    with pytest.raises(ValueError, match="missing"):
        if_score(d)


# ---- registry ---------------------------------------------------------------

def test_spec_validation_and_json():
    with pytest.raises(ValueError, match="does not accept"):
        DetectorSpec("IF", {"depth": 3})
    with pytest.raises(ValueError):
        DetectorSpec("HST", {"psi_frac": 1.5})
    with pytest.raises(ValueError):
        DetectorSpec("nope")
    spec = DetectorSpec.lower_bound("loda", 4)
    assert DetectorSpec.from_json(spec.to_json()) == spec
    assert spec.to_json() == {"algo": "LODA", "params": {"window_frac": 0.3}, "seed": 4}


def test_grid_sizes():
    assert len(HyperGrid.upper_bound("IF")) == 125
    assert len(HyperGrid.upper_bound("DBSCAN")) == 260
    assert UB_GRIDS["DBSCAN"]["eps"] == [float(e) for e in range(1, 21)]


def test_binarize_examples(rng):
    assert binarize(np.array([1.0, 2, 3, 4]), BinarizationPolicy.quantile(0.75)).tolist() == [0, 0, 0, 1]
    b = np.array([0.0, 1, 1, 0])
    assert binarize(b, BinarizationPolicy.threshold(0.5)).tolist() == b.tolist()
    with pytest.raises(ValueError):
        BinarizationPolicy.quantile(1.0)
    s = rng.integers(0, 30, 200).astype(float)
    a = binarize(s, BinarizationPolicy.quantile(0.9))
    cut = np.sort(s)[::-1][19]
    assert a.sum() == 20 + int((s[np.argsort(-s, kind="stable")[20:]] == cut).sum())
    # count independent of positive affine transforms
    assert binarize(3 * s + 1, BinarizationPolicy.quantile(0.9)).sum() == a.sum()


def test_binarize_float_edge():
    a = binarize(np.arange(2000.0))
    assert a.sum() == 100


def test_oracle_detector():
    g = np.zeros((2, 5), dtype=np.int8)
    g[1, 3] = 1
    gt = make_gt(g)
    assert oracle_detector(gt).tolist() == [0, 0, 0, 1, 0]
    s = run_detector(make_dataset(np.zeros((2, 5))), DetectorSpec("ORACLE"), gt)
    assert s.scores.tolist() == [0, 0, 0, 1, 0]
    with pytest.raises(ValueError):
        run_detector(make_dataset(np.zeros((2, 5))), DetectorSpec("ORACLE"))


def test_ideal_ensemble(rng):
    g = np.zeros((1, 30), dtype=np.int8)
    g[0, 10:14] = 1
    gt = make_gt(g)
    a = g[0]
    cands = [(DetectorSpec("LODA", seed=i), ScoreSeries(rng.random(30))) for i in range(3)]
    best = max(range(3), key=lambda i: (pr_auc(cands[i][1], a), -i))
    assert ideal_ensemble(cands, gt) == cands[best]
    assert ideal_ensemble(cands[:1], gt) == cands[0]
    perfect = (DetectorSpec("ORACLE"), ScoreSeries(a.astype(float)))
    assert ideal_ensemble(cands + [perfect], gt) == perfect
    with pytest.raises(ValueError):
        ideal_ensemble([], gt)


def test_grid_search(rng):
    d, gt = shifted(rng)
    spec, _, auc = grid_search(d, HyperGrid("LODA", {"window_frac": [0.3]}), gt)
    assert spec.params == {"window_frac": 0.3}
    spec, _, auc = grid_search(d, HyperGrid("HST", {"psi_frac": [0.01, 0.3], "trees": [50], "h": [10]}), gt)
    crippled = pr_auc(run_detector(d, DetectorSpec("HST", {"psi_frac": 0.01, "trees": 50})), gt.labels.max(axis=0))
    assert spec.params["psi_frac"] == 0.3 and auc > crippled
    flipped, _, _ = grid_search(d, HyperGrid("HST", {"psi_frac": [0.3, 0.01], "trees": [50], "h": [10]}), gt)
    assert flipped == spec


def test_grid_search_skips_and_fails():
    d = make_dataset(np.random.default_rng(0).normal(size=(2, 20)))
    g = np.zeros((2, 20), dtype=np.int8)
    g[0, 5] = 1
    with pytest.raises(ValueError, match="every"):
        grid_search(d, HyperGrid("HST", {"psi_frac": [0.01]}), make_gt(g))
    spec, _, _ = grid_search(d, HyperGrid("HST", {"psi_frac": [0.01, 0.5], "trees": [5]}), make_gt(g))
    assert spec.params["psi_frac"] == 0.5
