"""Vietoris-Rips filtrations from distance matrices."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Tuple

import numba
import numpy as np

from .data import MatrixKind, SquareMatrix, atomic_write_text, format_float
from .errors import CapacityExceeded, MalformedInput, WrongKind

DEFAULT_MAX_DIM = 2
DEFAULT_THRESHOLD = 1.0
DEFAULT_CAPACITY = 50_000_000

Simplex = Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class Filtration:
    """A Rips filtration stored per dimension.

    ``vertices[d]`` is an ``(m_d, d + 1)`` array of increasing vertex indices
    and ``dim_values[d]`` the matching filtration values.  Within a dimension,
    rows are ordered by (value, vertices); the global order used by
    ``simplices``/``values`` is (value, dimension, vertices).
    """

    vertices: Tuple[np.ndarray, ...]
    dim_values: Tuple[np.ndarray, ...]
    max_dim: int
    threshold: float
    n_vertices: int
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __len__(self):
        return sum(len(v) for v in self.dim_values)

    @cached_property
    def _global(self):
        values = np.concatenate(self.dim_values) if self.dim_values else np.zeros(0)
        dims = np.concatenate([np.full(len(v), d) for d, v in enumerate(self.dim_values)])
        local = np.concatenate([np.arange(len(v)) for v in self.dim_values])
        # rows within a dimension are already in (value, vertex) order, so the
        # local index is a valid final tie-breaker.
        order = np.lexsort((local, dims, values))
        return order, dims, local, values

    @property
    def values(self) -> np.ndarray:
        order, _, _, values = self._global
        return values[order]

    @cached_property
    def simplices(self) -> List[Simplex]:
        order, dims, local, _ = self._global
        rows = [v.tolist() for v in self.vertices]
        return [tuple(rows[d][k]) for d, k in zip(dims[order].tolist(), local[order].tolist())]

    def position(self, dim: int, local: int) -> int:
        """Global filtration position of the ``local``-th simplex of dimension ``dim``."""
        order, dims, loc, _ = self._global
        if "inverse" not in self._cache:
            inv = np.empty_like(order)
            inv[order] = np.arange(len(order))
            offsets = np.cumsum([0] + [len(v) for v in self.dim_values])
            self._cache["inverse"] = (inv, offsets)
        inv, offsets = self._cache["inverse"]
        return int(inv[offsets[dim] + local])

    def dims(self) -> np.ndarray:
        order, dims, _, _ = self._global
        return dims[order]

    def at(self, value: float) -> List[Simplex]:
        """Simplices of the complex at scale ``value``, in filtration order."""
        stop = int(np.searchsorted(self.values, value, side="right"))
        return self.simplices[:stop]

    def simplex_value(self, simplex) -> float:
        """Filtration value of ``simplex``; ``inf`` when it is not in the filtration."""
        s = tuple(sorted(simplex))
        d = len(s) - 1
        if d > self.max_dim:
            return np.inf
        rows = self.vertices[d]
        hit = np.nonzero(np.all(rows == np.array(s), axis=1))[0]
        return float(self.dim_values[d][hit[0]]) if hit.size else np.inf


@numba.njit(cache=True)
def _count_children(parents, adj):
    m, width = parents.shape
    n = adj.shape[0]
    counts = np.zeros(m, dtype=np.int64)
    for r in range(m):
        last = parents[r, width - 1]
        c = 0
        for k in range(last + 1, n):
            ok = True
            for q in range(width):
                if not adj[parents[r, q], k]:
                    ok = False
                    break
            if ok:
                c += 1
        counts[r] = c
    return counts


@numba.njit(cache=True)
def _fill_children(parents, parent_values, adj, dist, total):
    m, width = parents.shape
    n = adj.shape[0]
    out = np.empty((total, width + 1), dtype=np.int64)
    vals = np.empty(total, dtype=np.float64)
    pos = 0
    for r in range(m):
        last = parents[r, width - 1]
        for k in range(last + 1, n):
            ok = True
            v = parent_values[r]
            for q in range(width):
                u = parents[r, q]
                if not adj[u, k]:
                    ok = False
                    break
                if dist[u, k] > v:
                    v = dist[u, k]
            if ok:
                for q in range(width):
                    out[pos, q] = parents[r, q]
                out[pos, width] = k
                vals[pos] = v
                pos += 1
    return out, vals


def _sort_rows(rows: np.ndarray, vals: np.ndarray):
    keys = tuple(rows[:, q] for q in range(rows.shape[1] - 1, -1, -1)) + (vals,)
    order = np.lexsort(keys)
    return np.ascontiguousarray(rows[order]), vals[order]


def build_rips(d: SquareMatrix, max_dim: int = DEFAULT_MAX_DIM,
               threshold: float = DEFAULT_THRESHOLD,
               capacity: int = DEFAULT_CAPACITY) -> Filtration:
    """Every clique of at most ``max_dim + 1`` vertices with diameter <= threshold.

    Cliques grow one vertex at a time, only by vertices larger than their
    current last vertex, so each simplex is produced exactly once; its value
    is the parent's value maxed with the new edge lengths.
    """
    if d.kind is not MatrixKind.DISTANCE:
        raise WrongKind("Rips construction needs a distance matrix")
    if max_dim < 0 or threshold < 0:
        raise MalformedInput("max_dim and threshold must be non-negative")
    dist = np.ascontiguousarray(d.entries)
    n = d.n
    adj = dist <= threshold
    np.fill_diagonal(adj, False)

    verts = [np.arange(n, dtype=np.int64).reshape(n, 1)]
    vals = [np.zeros(n)]
    total = n
    for dim in range(1, max_dim + 1):
        parents = verts[-1]
        counts = _count_children(parents, adj) if len(parents) else np.zeros(0, np.int64)
        m = int(counts.sum())
        total += m
        if total > capacity:
            raise CapacityExceeded(f"{total} simplices exceed capacity {capacity}")
        rows, v = _fill_children(parents, vals[-1], adj, dist, m)
        rows, v = _sort_rows(rows, v)
        verts.append(rows)
        vals.append(v)
        if m == 0:
            # no larger cliques can exist; keep empty arrays for the rest
            for rest in range(dim + 1, max_dim + 1):
                verts.append(np.zeros((0, rest + 1), dtype=np.int64))
                vals.append(np.zeros(0))
            break
    for a in verts + vals:
        a.setflags(write=False)
    return Filtration(tuple(verts), tuple(vals), max_dim, float(threshold), n)


def simplex_count_by_dim(f: Filtration) -> List[int]:
    return [len(v) for v in f.dim_values]


def filtration_to_csv(f: Filtration) -> str:
    lines = []
    for s, v in zip(f.simplices, f.values.tolist()):
        lines.append(",".join([format_float(v), str(len(s) - 1)] + [str(x) for x in s]))
    return "\n".join(lines) + ("\n" if lines else "")


def save_filtration_csv(path, f: Filtration) -> None:
    atomic_write_text(path, filtration_to_csv(f))
