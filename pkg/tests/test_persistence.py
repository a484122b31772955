import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topostat import persistence, rips
from topostat.data import PointCloud, euclidean_distances
from topostat.errors import InfiniteIntervalUnsupported, MalformedInput, NoRepresentativeStored, TooLarge

from conftest import random_distance_matrix

SQRT2 = math.sqrt(2.0)


def _square_barcode(square_distances, keep=True):
    f = rips.build_rips(square_distances, max_dim=2, threshold=2.0)
    return f, persistence.compute_persistence(f, keep_representatives=keep)


def test_square_degree_one(square_distances):
    _, b = _square_barcode(square_distances)
    (iv,) = b.in_degree(1)
    assert iv.birth == 1.0
    assert iv.death == pytest.approx(SQRT2, abs=1e-15)
    rep = persistence.representative_cycle(b, iv)
    assert sorted(rep) == [(0, 1), (0, 2), (1, 3), (2, 3)]
    assert persistence.boundary_of_chain(rep) == set()


def test_square_degree_zero(square_distances):
    _, b = _square_barcode(square_distances)
    zero = b.in_degree(0)
    assert sum(not iv.is_finite for iv in zero) == 1
    assert sorted(iv.death for iv in zero if iv.is_finite) == [1.0, 1.0, 1.0]


def test_isolated_points_are_essential():
    pts = PointCloud(np.array([[0.0, 0.0], [5.0, 0.0], [0.0, 7.0]]))
    f = rips.build_rips(euclidean_distances(pts), max_dim=2, threshold=1.0)
    b = persistence.compute_persistence(f)
    assert len(b.in_degree(0)) == 3
    assert all(not iv.is_finite for iv in b.in_degree(0))


def test_representative_errors(square_distances):
    _, b = _square_barcode(square_distances, keep=False)
    with pytest.raises(NoRepresentativeStored):
        persistence.representative_cycle(b, b.in_degree(1)[0])
    _, b = _square_barcode(square_distances)
    with pytest.raises(MalformedInput):
        persistence.representative_cycle(b, b.in_degree(0)[0])
    # the loop never fills below threshold 1
    f = rips.build_rips(square_distances, max_dim=2, threshold=1.0)
    b = persistence.compute_persistence(f, keep_representatives=True)
    (essential,) = b.in_degree(1)
    assert not essential.is_finite
    with pytest.raises(InfiniteIntervalUnsupported):
        persistence.representative_cycle(b, essential)


def test_bruteforce_examples(square_distances):
    f = rips.build_rips(square_distances, max_dim=2, threshold=2.0)
    assert persistence.betti_numbers_bruteforce(f, 1.0) == [1, 1]
    assert persistence.betti_numbers_bruteforce(f, 0.0)[0] == 4
    assert persistence.betti_numbers_bruteforce(f, 2.0) == [1, 0]


def test_bruteforce_limit():
    pts = PointCloud(np.random.default_rng(0).random((40, 2)))
    f = rips.build_rips(euclidean_distances(pts), max_dim=2, threshold=2.0)
    with pytest.raises(TooLarge):
        persistence.betti_numbers_bruteforce(f, 2.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 9), st.integers(0, 2**31))
def test_betti_oracle(n, seed):
    d = random_distance_matrix(np.random.default_rng(seed), n)
    f = rips.build_rips(d, max_dim=3, threshold=1.0)
    b = persistence.compute_persistence(f)
    for v in np.unique(f.values):
        expected = persistence.betti_numbers_bruteforce(f, v)
        assert [b.betti_at(k, v) for k in range(3)] == expected


@settings(max_examples=20, deadline=None)
@given(st.integers(4, 10), st.integers(0, 2**31))
def test_representatives_are_cycles(n, seed):
    d = random_distance_matrix(np.random.default_rng(seed), n)
    f = rips.build_rips(d, max_dim=2, threshold=1.0)
    b = persistence.compute_persistence(f, keep_representatives=True)
    for iv in b.in_degree(1):
        if not iv.is_finite:
            continue
        rep = persistence.representative_cycle(b, iv)
        assert persistence.boundary_of_chain(rep) == set()
        assert max(f.simplex_value(e) for e in rep) == iv.birth


@settings(max_examples=20, deadline=None)
@given(st.integers(4, 9), st.integers(0, 2**31))
def test_pairing_is_a_matching(n, seed):
    d = random_distance_matrix(np.random.default_rng(seed), n)
    f = rips.build_rips(d, max_dim=2, threshold=1.0)
    b = persistence.compute_persistence(f)
    births = [(deg, i) for deg, i, _ in b.pairing]
    deaths = [(deg + 1, j) for deg, _, j in b.pairing]
    assert len(set(births)) == len(births) and len(set(deaths)) == len(deaths)
    assert not set(births) & set(deaths)
    # every simplex below the top dimension is a birth or a death
    counts = rips.simplex_count_by_dim(f)
    essential = [iv for iv in b.intervals if not iv.is_finite]
    for k in range(2):
        n_births = sum(1 for deg, _ in births if deg == k) + sum(1 for iv in essential if iv.degree == k)
        n_deaths = sum(1 for deg, _ in deaths if deg == k)
        assert n_births + n_deaths == counts[k]


@settings(max_examples=15, deadline=None)
@given(st.integers(4, 9), st.integers(0, 2**31))
def test_relabelling_invariance(n, seed):
    rng = np.random.default_rng(seed)
    d = random_distance_matrix(rng, n)
    perm = rng.permutation(n)
    d2 = type(d)(d.entries[np.ix_(perm, perm)], d.kind)
    bars = []
    for m in (d, d2):
        b = persistence.compute_persistence(rips.build_rips(m, max_dim=2, threshold=1.0))
        bars.append(sorted((iv.degree, iv.birth, iv.death) for iv in b.intervals))
    assert bars[0] == bars[1]


def test_barcode_csv_round_trip(tmp_path, square_distances):
    _, b = _square_barcode(square_distances)
    path = str(tmp_path / "b.csv")
    persistence.save_barcode_csv(path, b)
    text = open(path).read()
    assert text.startswith("degree,birth,death\n")
    assert "inf" in text
    back = persistence.load_barcode_csv(path)
    assert [(iv.degree, iv.birth, iv.death) for iv in back.intervals] == \
        [(iv.degree, iv.birth, iv.death) for iv in b.intervals]
