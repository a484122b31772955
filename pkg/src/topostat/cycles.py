"""Tightening degree-1 representatives by triangle moves.

A move takes two cycle edges ``(u, v), (v, w)`` and, when the triangle
``{u, v, w}`` is in the complex, adds its boundary to the cycle.  That replaces
the two edges by ``(u, w)`` (or cancels ``(u, w)`` if it was already there) and
never leaves the homology class.  This is a greedy shortening heuristic, not a
shortest-representative solver.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from . import gf2
from .errors import EdgesMissing, NoFiniteInterval, NotACycle
from .persistence import Barcode
from .rips import Filtration

Edge = Tuple[int, int]
DEFAULT_MAX_ROUNDS = 100_000


@dataclass(frozen=True)
class TightCycle:
    edges: Tuple[Edge, ...]
    filtration_value: float

    @property
    def length(self) -> int:
        return len(self.edges)

    def vertices(self) -> List[int]:
        return sorted({v for e in self.edges for v in e})


def midpoint_filtration(b: Barcode, degree: int = 1) -> float:
    """Middle of the longest finite interval; ties go to the earliest birth."""
    finite = [iv for iv in b.in_degree(degree) if iv.is_finite]
    if not finite:
        raise NoFiniteInterval(f"no finite interval in degree {degree}")
    best = min(finite, key=lambda iv: (-(iv.death - iv.birth), iv.birth))
    return (best.birth + best.death) / 2


def most_persistent(b: Barcode, degree: int = 1):
    finite = [iv for iv in b.in_degree(degree) if iv.is_finite]
    if not finite:
        raise NoFiniteInterval(f"no finite interval in degree {degree}")
    return min(finite, key=lambda iv: (-(iv.death - iv.birth), iv.birth))


def edge_values(f: Filtration) -> Dict[Edge, float]:
    rows = f.vertices[1].tolist() if f.max_dim >= 1 else []
    return {(u, v): val for (u, v), val in zip(rows, f.dim_values[1].tolist())} if rows else {}


def _normalize(edges: Iterable[Sequence[int]]) -> List[Edge]:
    """Reduce an edge multiset mod 2 and sort it."""
    counts = Counter(tuple(sorted(int(x) for x in e)) for e in edges)
    return sorted(e for e, c in counts.items() if c % 2)


def is_cycle(edges: Iterable[Edge]) -> bool:
    degree = Counter(v for e in edges for v in e)
    return all(c % 2 == 0 for c in degree.values())


def tighten_cycle(f: Filtration, value: float, seed_cycle: Iterable[Sequence[int]],
                  max_rounds: int = DEFAULT_MAX_ROUNDS) -> TightCycle:
    """Apply first-found triangle moves until none applies or ``max_rounds`` moves.

    Vertices are scanned in increasing order and, at each vertex, pairs of its
    cycle neighbours in lexicographic order, so the result is deterministic.
    """
    seed = [tuple(e) for e in seed_cycle]
    for e in seed:
        if len(e) != 2 or e[0] == e[1]:
            raise NotACycle(f"{e} is not an edge")
    edges = _normalize(seed)
    if not is_cycle(edges):
        raise NotACycle("every vertex must have even degree")
    present = {e for e, v in edge_values(f).items() if v <= value}
    missing = [e for e in edges if e not in present]
    if missing:
        raise EdgesMissing(f"edges not in the complex at {value}: {missing[:5]}")
    # triangles are in the complex iff their three edges are (flag complex)
    can_fill = f.max_dim >= 2

    cycle = set(edges)
    rounds = 0
    while can_fill and rounds < max_rounds:
        move = _find_move(cycle, present)
        if move is None:
            break
        u, v, w = move
        cycle ^= {_e(u, v), _e(v, w), _e(u, w)}
        rounds += 1
    return TightCycle(tuple(sorted(cycle)), float(value))


def _e(a: int, b: int) -> Edge:
    return (a, b) if a < b else (b, a)


def _find_move(cycle: set, present: set):
    nbrs: Dict[int, List[int]] = {}
    for a, b in cycle:
        nbrs.setdefault(a, []).append(b)
        nbrs.setdefault(b, []).append(a)
    for v in sorted(nbrs):
        around = sorted(nbrs[v])
        for i, u in enumerate(around):
            for w in around[i + 1:]:
                if _e(u, w) in present:
                    return u, v, w
    return None


def homologous(f: Filtration, value: float, c1: Iterable[Sequence[int]],
               c2: Iterable[Sequence[int]]) -> bool:
    """Z/2 certificate: ``c1 + c2`` is a sum of triangle boundaries at ``value``."""
    diff = set(_normalize(c1)) ^ set(_normalize(c2))
    if not diff:
        return True
    cx = f.at(value)
    edges = [s for s in cx if len(s) == 2]
    triangles = [s for s in cx if len(s) == 3]
    row = {e: i for i, e in enumerate(edges)}
    if any(e not in row for e in diff):
        return False
    vec = np.zeros(len(edges), dtype=np.uint8)
    for e in diff:
        vec[row[e]] = 1
    return gf2.in_span(gf2.boundary_matrix(edges, triangles), vec)


def vertex_proximity(f: Filtration, value: float, cycle: TightCycle,
                     marked: Iterable[int]) -> List[Tuple[int, int]]:
    """Hop distance in the 1-skeleton at ``value`` from each marked vertex to
    the nearest cycle vertex; -1 when unreachable."""
    adj: Dict[int, List[int]] = {}
    for (u, v), val in edge_values(f).items():
        if val <= value:
            adj.setdefault(u, []).append(v)
            adj.setdefault(v, []).append(u)
    hops = {v: 0 for v in cycle.vertices()}
    queue = deque(hops)
    while queue:
        x = queue.popleft()
        for y in adj.get(x, ()):
            if y not in hops:
                hops[y] = hops[x] + 1
                queue.append(y)
    return [(int(v), hops.get(int(v), -1)) for v in marked]


def cycle_to_csv(cycle: TightCycle) -> str:
    return "u,v\n" + "".join(f"{u},{v}\n" for u, v in cycle.edges)


def proximity_to_csv(rows: Sequence[Tuple[int, int]]) -> str:
    return "vertex,hops\n" + "".join(f"{v},{h}\n" for v, h in rows)
