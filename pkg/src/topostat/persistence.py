"""Persistent homology over Z/2 by boundary-matrix reduction.

Columns are Python integers used as bitsets: bit ``i`` of a column of
dimension ``d`` stands for the ``i``-th ``(d-1)``-simplex in filtration order.
Adding two columns over Z/2 is then a single XOR and the pivot ("low") is the
highest set bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

import numba
import numpy as np

from . import gf2
from .data import atomic_write_text, format_float, read_numeric_csv
from .errors import (
    InfiniteIntervalUnsupported,
    MalformedInput,
    NoRepresentativeStored,
    TooLarge,
)
from .rips import Filtration, Simplex

INF = math.inf
BRUTEFORCE_LIMIT = 5000


@dataclass(frozen=True)
class PersistenceInterval:
    degree: int
    birth: float
    death: float
    representative: Optional[Tuple[Simplex, ...]] = field(default=None, compare=False)
    # indices local to the birth / death simplex dimension; -1 when unknown
    birth_index: int = field(default=-1, compare=False)
    death_index: int = field(default=-1, compare=False)

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.death)

    @property
    def length(self) -> float:
        return self.death - self.birth


@dataclass
class Barcode:
    intervals: List[PersistenceInterval]
    degrees_computed: Tuple[int, ...]
    # (degree, birth index, death index) for every reduction pair, zero-length
    # ones included.  Indices are local to the simplex dimension (degree for
    # births, degree + 1 for deaths).  Empty when read from disk.
    pairing: List[Tuple[int, int, int]] = field(default_factory=list)

    def in_degree(self, degree: int) -> List[PersistenceInterval]:
        return [iv for iv in self.intervals if iv.degree == degree]

    def pairs(self, degree: int) -> np.ndarray:
        """(birth, death) rows of one degree as an ``(m, 2)`` array."""
        rows = [(iv.birth, iv.death) for iv in self.intervals if iv.degree == degree]
        return np.array(rows, dtype=np.float64).reshape(-1, 2)

    def betti_at(self, degree: int, value: float) -> int:
        """Number of intervals alive at ``value`` (half-open ``[birth, death)``)."""
        return sum(1 for iv in self.intervals
                   if iv.degree == degree and iv.birth <= value < iv.death)


def _binomial_table(n: int, k: int) -> np.ndarray:
    table = np.zeros((n + 1, k + 1), dtype=np.int64)
    for v in range(n + 1):
        for i in range(k + 1):
            table[v, i] = math.comb(v, i)
    return table


def _simplex_keys(rows: np.ndarray, binom: np.ndarray) -> np.ndarray:
    """Combinatorial-number-system code of each increasing vertex row."""
    keys = np.zeros(len(rows), dtype=np.int64)
    for q in range(rows.shape[1]):
        keys += binom[rows[:, q], q + 1]
    return keys


def boundary_columns(faces: np.ndarray, simplices: np.ndarray, binom: np.ndarray) -> np.ndarray:
    """Row ``j`` lists the local indices of the facets of simplex ``j``, ascending."""
    if len(simplices) == 0:
        return np.zeros((0, simplices.shape[1]), dtype=np.int64)
    face_keys = _simplex_keys(faces, binom)
    order = np.argsort(face_keys, kind="stable")
    sorted_keys = face_keys[order]
    width = simplices.shape[1]
    out = np.empty((len(simplices), width), dtype=np.int64)
    for q in range(width):
        facet = np.delete(simplices, q, axis=1)
        out[:, q] = order[np.searchsorted(sorted_keys, _simplex_keys(facet, binom))]
    out.sort(axis=1)
    return out


@numba.njit(cache=True)
def _reduce_columns(bnd, n_rows, skip, limit):
    """Reduce the columns of one boundary matrix left to right.

    Returns the pivot row of each column (-1 when it reduces to zero or is
    skipped) and the reduced pivot columns packed into ``arena``.
    """
    m, w = bnd.shape
    owner = np.full(n_rows, -1, dtype=np.int64)
    lows = np.full(m, -1, dtype=np.int64)
    start = np.zeros(m, dtype=np.int64)
    length = np.zeros(m, dtype=np.int64)
    arena = np.empty(max(64, 2 * m * w), dtype=np.int64)
    used = 0
    work = np.empty(n_rows + w, dtype=np.int64)
    tmp = np.empty(n_rows + w, dtype=np.int64)
    paired = 0
    for j in range(m):
        if limit >= 0 and paired == limit:
            break
        if skip[j]:
            continue
        size = w
        for q in range(w):
            work[q] = bnd[j, q]
        low = -1
        while size > 0:
            low = work[size - 1]
            o = owner[low]
            if o < 0:
                break
            # symmetric difference of two ascending index lists
            a = 0
            b = start[o]
            b_end = b + length[o]
            t = 0
            while a < size and b < b_end:
                x = work[a]
                y = arena[b]
                if x < y:
                    tmp[t] = x
                    t += 1
                    a += 1
                elif y < x:
                    tmp[t] = y
                    t += 1
                    b += 1
                else:
                    a += 1
                    b += 1
            while a < size:
                tmp[t] = work[a]
                t += 1
                a += 1
            while b < b_end:
                tmp[t] = arena[b]
                t += 1
                b += 1
            work, tmp = tmp, work
            size = t
        if size == 0:
            continue
        owner[low] = j
        lows[j] = low
        if used + size > arena.shape[0]:
            grown = np.empty(max(2 * arena.shape[0], used + size), dtype=np.int64)
            grown[:used] = arena[:used]
            arena = grown
        arena[used:used + size] = work[:size]
        start[j] = used
        length[j] = size
        used += size
        paired += 1
    return lows, start, length, arena


def _spanning_forest_size(n: int, edges: np.ndarray) -> int:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    merged = 0
    for u, v in edges.tolist():
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            merged += 1
    return merged


def compute_persistence(f: Filtration, keep_representatives: bool = False) -> Barcode:
    """Column reduction with clearing, processing dimensions top-down.

    A ``d``-column that becomes the pivot of a reduced ``(d+1)``-column is a
    birth, so its own column is never reduced.  Zero-length intervals are
    dropped; pairs of every length are kept in ``Barcode.pairing``.
    """
    top = f.max_dim
    binom = _binomial_table(f.n_vertices, top + 1)
    n_simplices = [len(v) for v in f.dim_values]
    cleared = [np.zeros(m, dtype=np.bool_) for m in n_simplices]
    killers = [np.zeros(m, dtype=np.bool_) for m in n_simplices]
    intervals: List[PersistenceInterval] = []
    pairing: List[Tuple[int, int, int]] = []

    # Pivots of triangle columns are exactly the cycle-closing edges, whose
    # number follows from the connected components; once all of them are
    # paired every remaining triangle column reduces to zero.
    open_cycles = -1
    if top >= 2:
        open_cycles = n_simplices[1] - _spanning_forest_size(f.n_vertices, f.vertices[1])

    for dim in range(top, 0, -1):
        bnd = boundary_columns(f.vertices[dim - 1], f.vertices[dim], binom)
        limit = open_cycles if dim == 2 else -1
        lows, start, length, arena = _reduce_columns(bnd, n_simplices[dim - 1], cleared[dim], limit)
        paired = np.nonzero(lows >= 0)[0]
        birth_idx = lows[paired]
        cleared[dim - 1][birth_idx] = True
        killers[dim][paired] = True
        births = f.dim_values[dim - 1][birth_idx]
        deaths = f.dim_values[dim][paired]
        face_rows = f.vertices[dim - 1]
        for j, lo, birth, death in zip(paired.tolist(), birth_idx.tolist(),
                                       births.tolist(), deaths.tolist()):
            pairing.append((dim - 1, lo, j))
            if death <= birth:
                continue
            rep = None
            if keep_representatives:
                faces = arena[start[j]:start[j] + length[j]]
                rep = tuple(tuple(r) for r in face_rows[faces].tolist())
            intervals.append(PersistenceInterval(dim - 1, birth, death, rep, lo, j))

    # Simplices below the top dimension that are neither births of a finite
    # interval nor deaths are essential classes.
    for dim in range(top):
        alive = np.nonzero(~cleared[dim] & ~killers[dim])[0]
        for k, birth in zip(alive.tolist(), f.dim_values[dim][alive].tolist()):
            intervals.append(PersistenceInterval(dim, birth, INF, None, k, -1))

    intervals.sort(key=lambda iv: (iv.degree, iv.birth, iv.death, iv.birth_index))
    pairing.sort()
    return Barcode(intervals, tuple(range(top)), pairing)


def representative_cycle(b: Barcode, interval: PersistenceInterval) -> List[Simplex]:
    """The stored cycle of a finite interval of degree >= 1."""
    if interval.degree < 1:
        raise MalformedInput("representative cycles exist for degree >= 1 only")
    if not interval.is_finite:
        raise InfiniteIntervalUnsupported("essential classes carry no stored cycle")
    for iv in b.intervals:
        if iv == interval and iv.death_index == interval.death_index:
            if iv.representative is None:
                raise NoRepresentativeStored(
                    "barcode was computed without keep_representatives")
            return list(iv.representative)
    raise NoRepresentativeStored("interval does not belong to this barcode")


def boundary_of_chain(chain: Sequence[Simplex]) -> set:
    """Z/2 boundary of a chain given as simplices (faces of odd multiplicity)."""
    out = set()
    for s in chain:
        if len(s) < 2:
            continue
        for face in combinations(s, len(s) - 1):
            out ^= {face}
    return out


def betti_numbers_bruteforce(f: Filtration, value: float,
                             limit: int = BRUTEFORCE_LIMIT) -> List[int]:
    """Betti numbers of the complex at ``value`` by dense Z/2 elimination.

    Returns ``[b_0, ..., b_{max_dim - 1}]``; the top dimension is omitted
    because its cycles are not cut down by any boundary in the filtration.
    """
    cx = f.at(value)
    if len(cx) > limit:
        raise TooLarge(f"{len(cx)} simplices exceed the brute-force limit {limit}")
    by_dim: List[List[Simplex]] = [[] for _ in range(f.max_dim + 1)]
    for s in cx:
        by_dim[len(s) - 1].append(s)
    ranks = [0] * (f.max_dim + 2)
    for dim in range(1, f.max_dim + 1):
        ranks[dim] = gf2.rank(gf2.boundary_matrix(by_dim[dim - 1], by_dim[dim]))
    return [len(by_dim[k]) - ranks[k] - ranks[k + 1] for k in range(f.max_dim)]


def barcode_to_csv(b: Barcode) -> str:
    lines = ["degree,birth,death"]
    for iv in b.intervals:
        lines.append(f"{iv.degree},{format_float(iv.birth)},{format_float(iv.death)}")
    return "\n".join(lines) + "\n"


def save_barcode_csv(path, b: Barcode) -> None:
    atomic_write_text(path, barcode_to_csv(b))


def load_barcode_csv(path) -> Barcode:
    """Read ``degree,birth,death`` rows; ``inf`` marks essential classes."""
    a = read_numeric_csv(path)
    if a.size == 0:
        return Barcode([], ())
    if a.shape[1] != 3:
        raise MalformedInput(f"{path}: expected 3 columns degree,birth,death")
    intervals = []
    for deg, birth, death in a.tolist():
        if deg != int(deg) or deg < 0 or not math.isfinite(birth) or death < birth:
            raise MalformedInput(f"{path}: bad interval row {deg},{birth},{death}")
        intervals.append(PersistenceInterval(int(deg), birth, death))
    degrees = tuple(range(int(a[:, 0].max()) + 1))
    return Barcode(intervals, degrees)
