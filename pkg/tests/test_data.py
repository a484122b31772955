import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topostat import data
from topostat.data import MatrixKind, PointCloud, SquareMatrix
from topostat.errors import (
    AsymmetryTooLarge,
    BadRadii,
    EmptyCloud,
    NonFiniteEntry,
    NonSquare,
    OutOfRangeEntry,
    WrongKind,
)


def _write(tmp_path, text, name="m.csv"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_load_minimal_correlation(tmp_path):
    m = data.load_matrix_csv(_write(tmp_path, "1,0.5\n0.5,1\n"), "correlation")
    assert m.n == 2
    assert m.kind is MatrixKind.CORRELATION


def test_header_row_is_skipped(tmp_path):
    m = data.load_matrix_csv(_write(tmp_path, "a,b\n0,2\n2,0\n"), "distance")
    assert m.entries[0, 1] == 2.0


@pytest.mark.parametrize("text,kind,exc", [
    ("1,2\n2,1\n", "correlation", OutOfRangeEntry),
    ("1,0.5,0\n0.5,1,0\n", "correlation", NonSquare),
    ("1,0.5\n0.4,1\n", "correlation", AsymmetryTooLarge),
    ("0,nan\nnan,0\n", "distance", NonFiniteEntry),
    ("0,-1\n-1,0\n", "distance", OutOfRangeEntry),
    ("1,1\n1,0\n", "distance", OutOfRangeEntry),
])
def test_bad_matrices(tmp_path, text, kind, exc):
    with pytest.raises(exc):
        data.load_matrix_csv(_write(tmp_path, text), kind)


def test_tiny_asymmetry_is_symmetrized():
    a = np.array([[0.0, 1.0], [1.0 + 1e-12, 0.0]])
    m = SquareMatrix.from_array(a, "distance")
    assert m.entries[0, 1] == m.entries[1, 0]


def test_dynamical_distance_values():
    c = SquareMatrix.from_array(np.array([
        [1.0, -0.76, 1.0, 0.0],
        [-0.76, 1.0, 0.0, -1.0],
        [1.0, 0.0, 1.0, 0.3],
        [0.0, -1.0, 0.3, 1.0],
    ]), "correlation")
    d = data.dynamical_distance(c)
    assert d.kind is MatrixKind.DISTANCE
    assert d.entries[0, 1] == pytest.approx(0.24, abs=1e-15)
    assert d.entries[0, 2] == 0.0
    assert d.entries[0, 3] == 1.0
    assert d.entries[1, 3] == 0.0
    assert np.all(np.diag(d.entries) == 0.0)
    with pytest.raises(WrongKind):
        data.dynamical_distance(d)


def test_euclidean_examples(square_distances):
    pts = PointCloud(np.array([[0.0, 0.0], [3.0, 4.0]]))
    assert data.euclidean_distances(pts).entries[0, 1] == 5.0
    one = data.euclidean_distances(PointCloud(np.array([[1.0, 2.0]])))
    assert one.entries.shape == (1, 1) and one.entries[0, 0] == 0.0
    for row in square_distances.entries:
        assert sorted(row[row > 0].tolist()) == pytest.approx([1.0, 1.0, math.sqrt(2)])


@settings(max_examples=50, deadline=None)
@given(st.integers(3, 12), st.integers(1, 4), st.integers(0, 10_000))
def test_euclidean_triangle_inequality(n, dim, seed):
    pts = np.random.default_rng(seed).normal(size=(n, dim))
    d = data.euclidean_distances(PointCloud(pts)).entries
    assert np.all(d[:, None, :] <= d[:, :, None] + d[None, :, :].transpose(1, 0, 2) + 1e-9)


def test_samplers():
    disk = data.sample_disk(150, 1.0, 3)
    assert disk.points.shape == (150, 2)
    assert np.all(np.linalg.norm(disk.points, axis=1) <= 1.0)
    again = data.sample_disk(150, 1.0, 3)
    assert np.array_equal(disk.points, again.points)
    assert not np.array_equal(disk.points, data.sample_disk(150, 1.0, 3, 1).points)


def test_annulus_mean_radius():
    ri, ro, n = 0.5, 1.0, 1000
    r = np.linalg.norm(data.sample_annulus(n, ri, ro, 11).points, axis=1)
    expected = (2 / 3) * (ro**3 - ri**3) / (ro**2 - ri**2)
    assert r.min() >= ri and r.max() <= ro
    assert abs(r.mean() - expected) <= 3 * r.std(ddof=1) / math.sqrt(n)


def test_sampler_errors():
    with pytest.raises(EmptyCloud):
        data.sample_disk(0, 1.0, 0)
    with pytest.raises(BadRadii):
        data.sample_annulus(5, 1.0, 0.5, 0)


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    a = rng.random((6, 6))
    a = (a + a.T) / 2
    np.fill_diagonal(a, 0.0)
    m = SquareMatrix.from_array(a, "distance")
    path = str(tmp_path / "d.csv")
    data.save_matrix_csv(path, m)
    back = data.load_matrix_csv(path, "distance")
    assert np.array_equal(back.entries, m.entries)
    data.save_matrix_csv(path, back)
    assert open(path).read() == data.matrix_to_csv(m.entries)


def test_point_cloud_round_trip(tmp_path):
    pc = data.sample_annulus(20, 0.5, 1.0, 1)
    path = str(tmp_path / "p.csv")
    data.save_point_cloud_csv(path, pc)
    assert np.array_equal(data.load_point_cloud_csv(path).points, pc.points)


def test_correlation_ensemble():
    c = data.block_correlation(12, 3, 0.6, 200, 5)
    assert c.kind is MatrixKind.CORRELATION
    within = c.entries[0, 1:4].mean()
    across = c.entries[0, 4:].mean()
    assert within > across + 0.3
    s = data.shuffle_correlation(c, 5)
    iu = np.triu_indices(12, 1)
    assert np.array_equal(np.sort(s.entries[iu]), np.sort(c.entries[iu]))
    assert np.array_equal(s.entries, s.entries.T)
    assert np.all(np.diag(s.entries) == 1.0)
