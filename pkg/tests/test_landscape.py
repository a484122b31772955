import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from topostat import landscape as ls
from topostat.errors import BadGrid, BadP, CapTooSmall, DegreeMismatch, EmptyList, Unordered
from topostat.persistence import Barcode, PersistenceInterval


def _bars(pairs, degree=1):
    return Barcode([PersistenceInterval(degree, a, b) for a, b in pairs], (0, 1))


def _oracle(pairs, t):
    """k-th largest tent value at each t, as a (len(t), m) array."""
    pairs = np.asarray(pairs, dtype=float).reshape(-1, 2)
    vals = np.maximum(np.minimum(t[:, None] - pairs[:, 0], pairs[:, 1] - t[:, None]), 0.0)
    return -np.sort(-vals, axis=1)


barcodes = st.lists(
    st.tuples(st.floats(0, 10, allow_nan=False), st.floats(0, 5, allow_nan=False)).map(
        lambda ab: (ab[0], ab[0] + ab[1])),
    min_size=0, max_size=8)


def test_tent():
    f = ls.tent(0, 2)
    assert f(1.0) == 1.0 and f(-1.0) == 0.0 and f(3.0) == 0.0
    g = ls.tent(0.2, 0.6)
    assert g(0.4) == pytest.approx(0.2, abs=1e-15)
    assert ls.tent(0.5, 0.5).is_zero
    with pytest.raises(Unordered):
        ls.tent(1, 0)


def test_single_interval():
    lv = ls.landscape_from_pairs([(0, 2)])
    assert lv.depth == 1
    assert np.array_equal(lv.level(1).t, [0, 1, 2]) and np.array_equal(lv.level(1).y, [0, 1, 0])
    assert ls.evaluate(lv, 2, 1.0) == 0.0


def test_two_intervals():
    lv = ls.landscape_from_pairs([(0, 2), (1, 3)])
    assert lv.level(1).t.tolist() == [0, 1, 1.5, 2, 3]
    assert lv.level(1).y.tolist() == [0, 1, 0.5, 1, 0]
    assert lv.level(2).t.tolist() == [1, 1.5, 2]
    assert lv.level(2).y.tolist() == [0, 0.5, 0]
    assert ls.landscape_integral(lv) == 2.0
    assert ls.evaluate(lv, 10**6, 1.5) == 0.0


def test_capping():
    b = _bars([(0.1, math.inf), (0.2, 0.5)])
    lv = ls.build_landscape(b, 1, 1.0)
    assert ls.landscape_integral(lv) == pytest.approx(0.9**2 / 4 + 0.3**2 / 4)
    with pytest.raises(CapTooSmall):
        ls.build_landscape(b, 1, 0.4)
    with pytest.raises(CapTooSmall):
        ls.build_landscape(b, 1, None)


@settings(max_examples=200, deadline=None)
@given(barcodes, st.integers(0, 2**31))
def test_pointwise_oracle(pairs, seed):
    lv = ls.landscape_from_pairs(pairs)
    t = np.random.default_rng(seed).uniform(-1, 16, 200)
    if pairs:
        t = np.concatenate([t, np.asarray(pairs).ravel(), np.asarray(pairs).mean(axis=1)])
    expected = _oracle(pairs, t)
    for k in range(1, expected.shape[1] + 2):
        want = expected[:, k - 1] if k <= expected.shape[1] else np.zeros_like(t)
        assert np.max(np.abs(ls.evaluate(lv, k, t) - want), initial=0.0) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(barcodes)
def test_shape_properties(pairs):
    lv = ls.landscape_from_pairs(pairs)
    for k in range(1, lv.depth + 1):
        s = lv.level(k).slopes()
        assert np.all(np.abs(s) <= 1 + 1e-12)
        ts = ls._union_grid(lv.level(k), lv.level(k + 1))
        assert np.all(lv.level(k)(ts) >= lv.level(k + 1)(ts))
    expected = sum((b - a) ** 2 / 4 for a, b in pairs)
    assert ls.landscape_integral(lv) == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_mean():
    a = ls.landscape_from_pairs([(0, 2)])
    assert ls.landscape_distance(ls.mean_landscape([a]), a) == 0.0
    zero = ls.landscape_from_pairs([])
    half = ls.mean_landscape([a, zero])
    t = np.linspace(-1, 3, 101)
    assert np.allclose(ls.evaluate(half, 1, t), ls.evaluate(a, 1, t) / 2, atol=1e-15)
    b = ls.landscape_from_pairs([(0.5, 2.5), (0.3, 1.0)])
    m = ls.mean_landscape([a, b])
    t = np.linspace(-1, 3, 4001)
    for k in (1, 2):
        want = (ls.evaluate(a, k, t) + ls.evaluate(b, k, t)) / 2
        assert np.max(np.abs(ls.evaluate(m, k, t) - want)) < 1e-12
    with pytest.raises(EmptyList):
        ls.mean_landscape([])
    with pytest.raises(DegreeMismatch):
        ls.mean_landscape([a, ls.landscape_from_pairs([(0, 1)], degree=1)])


def test_distance_and_kernel_examples():
    a = ls.landscape_from_pairs([(0, 2)])
    zero = ls.landscape_from_pairs([])
    assert ls.landscape_distance(a, a) == 0.0
    assert ls.landscape_distance(a, zero) == pytest.approx(math.sqrt(2 / 3), rel=1e-15)
    assert ls.landscape_kernel(a, a) == pytest.approx(2 / 3, rel=1e-15)
    assert ls.landscape_kernel(a, zero) == 0.0
    assert ls.landscape_distance(a, zero, p=math.inf) == 1.0
    assert ls.landscape_distance(a, zero, p=1) == 1.0
    with pytest.raises(BadP):
        ls.landscape_distance(a, zero, p=0.5)


@pytest.mark.parametrize("p", [1, 1.5, 2, 3, 4.5])
def test_distance_matches_quadrature(p):
    a = ls.landscape_from_pairs([(0, 2), (0.5, 1.7), (1.2, 3.1)])
    b = ls.landscape_from_pairs([(0.2, 1.9), (1.0, 2.5)])
    total = 0.0
    for k in range(1, 4):
        f, g = a.level(k), b.level(k)
        pts = np.unique(np.concatenate([f.t, g.t]))
        total += quad(lambda t: abs(f(t) - g(t)) ** p, -1, 4, points=pts, limit=200, epsabs=1e-14)[0]
    assert ls.landscape_distance(a, b, p) == pytest.approx(total ** (1 / p), rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(barcodes, barcodes, barcodes)
def test_metric_and_kernel(p1, p2, p3):
    l1, l2, l3 = (ls.landscape_from_pairs(p) for p in (p1, p2, p3))
    d12 = ls.landscape_distance(l1, l2)
    assert d12 == ls.landscape_distance(l2, l1)
    assert d12 <= ls.landscape_distance(l1, l3) + ls.landscape_distance(l3, l2) + 1e-9
    k11, k22, k12 = ls.landscape_kernel(l1, l1), ls.landscape_kernel(l2, l2), ls.landscape_kernel(l1, l2)
    assert d12**2 == pytest.approx(k11 + k22 - 2 * k12, abs=1e-9)
    gram = np.array([[ls.landscape_kernel(x, y) for y in (l1, l2, l3)] for x in (l1, l2, l3)])
    assert np.linalg.eigvalsh(gram).min() >= -1e-9


def test_discretize():
    lv = ls.landscape_from_pairs([(0, 2), (1, 3)])
    m = ls.discretize(lv, 0, 3, 50, 4)
    assert m.shape == (4, 50)
    assert np.all(m[:-1] >= m[1:])
    assert np.all(ls.discretize(ls.landscape_from_pairs([]), 0, 1, 5, 2) == 0)
    with pytest.raises(BadGrid):
        ls.discretize(lv, 1, 1, 50, 2)
    with pytest.raises(BadGrid):
        ls.discretize(lv, 0, 1, 1, 2)


def test_serialization(tmp_path):
    lv = ls.landscape_from_pairs([(0.1, 0.7), (0.3, 0.9)], degree=1)
    path = str(tmp_path / "l.json")
    ls.save_landscape(path, lv)
    back = ls.load_landscape(path)
    assert back.degree == 1 and back.depth == lv.depth
    for x, y in zip(back.levels, lv.levels):
        assert np.array_equal(x.t, y.t) and np.array_equal(x.y, y.y)
    rows = ls.landscape_grid_csv(lv, 0, 1, 11).strip().split("\n")
    assert len(rows) == 1 + lv.depth and len(rows[0].split(",")) == 11
