import numpy as np
import pytest

from lifnet.data import Dataset, compute_metrics, make_moons, read_csv, split, write_csv


def test_noiseless_upper_moon_on_circle():
    ds = make_moons(252, 0.0, 3)
    upper = ds.points[ds.labels == 0]
    np.testing.assert_allclose(np.linalg.norm(upper, axis=1), 1.0, atol=1e-12)
    lower = ds.points[ds.labels == 1]
    np.testing.assert_allclose(np.linalg.norm(lower - [1.0, 0.5], axis=1), 1.0, atol=1e-12)


def test_moons_not_linearly_separable():
    ds = make_moons(252, 0.0, 0)
    X = np.column_stack([ds.points, np.ones(len(ds))])
    y = 2.0 * ds.labels - 1.0
    w = np.zeros(3)
    errors = 1
    for _ in range(2000):
        errors = 0
        for xi, yi in zip(X, y):
            if yi * (xi @ w) <= 0:
                w += yi * xi
                errors += 1
        if errors == 0:
            break
    assert errors > 0


def test_moons_deterministic_and_balanced():
    a, b = make_moons(101, 0.2, 7), make_moons(101, 0.2, 7)
    np.testing.assert_array_equal(a.points, b.points)
    assert abs(int(np.sum(a.labels == 0)) - int(np.sum(a.labels == 1))) <= 1
    assert not np.array_equal(a.points, make_moons(101, 0.2, 8).points)


def test_moons_rejects_negative_noise():
    with pytest.raises(ValueError):
        make_moons(10, -0.1, 0)


@pytest.mark.parametrize("n,sizes", [(100, (70, 5, 25)), (252, (176, 13, 63))])
def test_split_sizes(n, sizes):
    parts = split(make_moons(n, 0.0, 0), (0.70, 0.05, 0.25), 0)
    assert tuple(len(p) for p in parts) == sizes


def test_split_partition_and_stratified():
    ds = make_moons(252, 0.1, 2)
    parts = split(ds, (0.70, 0.05, 0.25), 5)
    rows = np.vstack([p.points for p in parts])
    assert len(np.unique(rows, axis=0)) == len(ds)
    for p in parts:
        expected = len(p) * np.mean(ds.labels)
        assert abs(np.sum(p.labels) - expected) <= 1.0


def test_split_rejects_empty():
    with pytest.raises(ValueError):
        split(make_moons(10, 0.0, 0), (0.70, 0.05, 0.25), 0)
    with pytest.raises(ValueError):
        split(make_moons(100, 0.0, 0), (0.5, 0.2, 0.2), 0)


def test_metrics_table_counts():
    pred = [1] * 26 + [1] * 2 + [0] * 5 + [0] * 30
    true = [1] * 26 + [0] * 2 + [1] * 5 + [0] * 30
    m = compute_metrics(pred, true)
    assert round(m.accuracy, 4) == 0.8889
    assert round(m.precision, 4) == 0.9286
    assert round(m.recall, 4) == 0.8387
    assert round(m.f1, 4) == 0.8814


def test_metrics_extremes():
    y = np.array([0, 1] * 5)
    assert compute_metrics(y, y).to_dict() == {"accuracy": 1.0, "precision": 1.0,
                                               "recall": 1.0, "f1": 1.0}
    assert compute_metrics(1 - y, y).to_dict() == {"accuracy": 0.0, "precision": 0.0,
                                                   "recall": 0.0, "f1": 0.0}
    with pytest.raises(ValueError):
        compute_metrics([0, 1], [0])


def test_csv_round_trip(tmp_path):
    ds = make_moons(30, 0.3, 4)
    write_csv(ds, tmp_path / "d.csv")
    back = read_csv(tmp_path / "d.csv")
    np.testing.assert_array_equal(back.points, ds.points)
    np.testing.assert_array_equal(back.labels, ds.labels)


def test_dataset_length_mismatch():
    with pytest.raises(ValueError):
        Dataset(np.zeros((3, 2)), [0, 1])
