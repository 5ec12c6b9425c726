import numpy as np
import pytest

from hurra.errors import EmptyDataError
from hurra.preprocess import (
    align_and_pad,
    drop_degenerate_features,
    grid_interval,
    impute_sample_and_hold,
    preprocess,
    standardize,
)

from conftest import make_dataset


def test_grid_interval():
    assert grid_interval(np.array([0, 1, 3])) == 1
    assert grid_interval(np.array([0, 5, 10, 20])) == 5
    with pytest.raises(ValueError):
        grid_interval(np.array([0]))


def test_align_pads_gaps():
    d = make_dataset([[1.0, 2.0, 3.0]], timestamps=np.array([0, 1, 3]))
    out = align_and_pad(d)
    assert out.timestamps.tolist() == [0, 1, 2, 3]
    assert np.isnan(out.values[0, 2])
    assert out.values[0, 3] == 3.0


def test_align_is_identity_on_regular_grid():
    d = make_dataset([[1.0, 2.0, 3.0]], timestamps=np.array([10, 15, 20]))
    assert align_and_pad(d) is d


def test_drop_degenerate():
    vals = [[1, 1, 1, 1], [1, np.nan, np.nan, np.nan], [1, 2, 3, 4], [np.nan, np.nan, 2, 3]]
    kept, rep = drop_degenerate_features(make_dataset(vals))
    assert kept.feature_names == ("f2", "f3")
    assert rep.dropped_constant == ("f0",)
    assert rep.dropped_missing == (("f1", 0.75),)
    with pytest.raises(EmptyDataError):
        drop_degenerate_features(make_dataset([[2, 2, 2]]))


def test_sample_and_hold():
    d = make_dataset([[np.nan, 1.0, np.nan, np.nan, 4.0, np.nan]])
    assert impute_sample_and_hold(d).values[0].tolist() == [1, 1, 1, 1, 4, 4]


def test_standardize(rng):
    d = make_dataset(rng.normal(3, 2, (4, 50)))
    z, rep = standardize(d)
    np.testing.assert_allclose(z.values.mean(axis=1), 0, atol=1e-12)
    np.testing.assert_allclose(z.values.std(axis=1), 1, atol=1e-12)
    assert set(rep.per_feature_stats) == set(d.feature_names)


def test_preprocess_idempotent(rng):
    vals = rng.normal(5, 3, (5, 80))
    vals[vals > 8] = np.nan
    x1, rep = preprocess(make_dataset(vals))
    x2, _ = preprocess(x1)
    assert np.array_equal(x1.values, x2.values)
    assert rep.imputed_cells == int(np.isnan(vals).sum())
    assert not np.isnan(x1.values).any()


def test_report_json():
    vals = [[1, 1, 1, 1], [1, 2, 3, 5]]
    _, rep = preprocess(make_dataset(vals))
    js = rep.to_json()
    assert js["dropped_constant"] == ["f0"]
    assert set(js["stats"]) == {"f1"}
