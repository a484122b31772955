import numpy as np
import pytest

from topostat import embedding as emb
from topostat.data import PointCloud, euclidean_distances
from topostat.errors import DisconnectedGraph, MalformedInput, SizeMismatch


def test_exact_on_euclidean_input():
    pts = np.random.default_rng(0).normal(size=(25, 3))
    d = euclidean_distances(PointCloud(pts))
    e = emb.isomap(d, k=24, target_dim=3)
    max_abs, mse = emb.embedding_error(d, e)
    assert max_abs <= 1e-8 and mse <= 1e-16
    assert e.neighborhood == {"k": 24}
    assert e.residual_variance[-1] == pytest.approx(0.0, abs=1e-12)


def test_arc_is_one_dimensional():
    theta = np.linspace(0, np.pi, 40)
    pts = np.column_stack([np.cos(theta), np.sin(theta)])
    e = emb.isomap(euclidean_distances(PointCloud(pts)), k=2, target_dim=2)
    assert e.residual_variance[0] < 1e-3
    assert np.all(np.diff(e.residual_variance) <= 1e-12)


def test_epsilon_rule_and_disconnected():
    pts = np.array([[0.0], [1.0], [2.0], [10.0], [11.0]])
    d = euclidean_distances(PointCloud(pts))
    with pytest.raises(DisconnectedGraph) as info:
        emb.isomap(d, epsilon=1.5)
    assert "2" in str(info.value)
    e = emb.isomap(d, epsilon=9.0, target_dim=1)
    assert e.neighborhood == {"epsilon": 9.0}
    with pytest.raises(MalformedInput):
        emb.isomap(d, k=2, epsilon=1.0)


def test_zero_distances_keep_edges():
    pts = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
    e = emb.isomap(euclidean_distances(PointCloud(pts)), k=1, target_dim=1)
    assert e.geodesic[0, 1] == 0.0


def test_embedding_error_contract():
    pts = np.random.default_rng(3).normal(size=(15, 5))
    d = euclidean_distances(PointCloud(pts))
    e = emb.isomap(d, k=6, target_dim=2)
    max_abs, mse = emb.embedding_error(d, e)
    assert max_abs >= 0 and mse <= max_abs**2
    with pytest.raises(SizeMismatch):
        emb.embedding_error(d, e.coordinates[:3])


def test_rigid_motion_invariance():
    pts = np.random.default_rng(5).normal(size=(12, 3))
    q, _ = np.linalg.qr(np.random.default_rng(6).normal(size=(3, 3)))
    a = emb.isomap(euclidean_distances(PointCloud(pts)), k=11)
    b = emb.isomap(euclidean_distances(PointCloud(pts @ q + 4.0)), k=11)
    assert np.allclose(np.abs(a.coordinates), np.abs(b.coordinates), atol=1e-8)
