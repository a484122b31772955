"""Isomap: neighborhood graph, graph geodesics, classical MDS."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.sparse.csgraph import connected_components, csgraph_from_dense, shortest_path

from .data import SquareMatrix
from .errors import DisconnectedGraph, MalformedInput, NoPositiveEigenvalues, SizeMismatch

DEFAULT_K_LANDSCAPE = 7
DEFAULT_K_RESIDUE = 12


@dataclass
class Embedding:
    coordinates: np.ndarray        # (n, d)
    residual_variance: np.ndarray  # entry i is for an (i + 1)-dimensional embedding
    neighborhood: dict             # {"k": int} or {"epsilon": float}
    eigenvalues: np.ndarray        # of the double-centered matrix, descending
    geodesic: np.ndarray

    @property
    def dim(self) -> int:
        return self.coordinates.shape[1]


def _as_array(d) -> np.ndarray:
    a = d.entries if isinstance(d, SquareMatrix) else np.asarray(d, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise MalformedInput("distance matrix must be square")
    return a


def neighborhood_graph(dist: np.ndarray, k: Optional[int] = None,
                       epsilon: Optional[float] = None) -> np.ndarray:
    """Dense weight matrix with ``inf`` for missing edges.

    The k-nearest-neighbor rule keeps an edge when either endpoint lists the
    other among its ``k`` nearest (ties broken by index).
    """
    n = dist.shape[0]
    if (k is None) == (epsilon is None):
        raise MalformedInput("give exactly one of k or epsilon")
    keep = np.zeros((n, n), dtype=bool)
    if k is not None:
        if not 1 <= k <= n - 1:
            raise MalformedInput(f"k must lie in [1, {n - 1}], got {k}")
        for i in range(n):
            others = np.delete(np.arange(n), i)
            order = others[np.argsort(dist[i, others], kind="stable")]
            keep[i, order[:k]] = True
        keep |= keep.T
    else:
        keep = dist <= epsilon
    np.fill_diagonal(keep, False)
    return np.where(keep, dist, np.inf)


def geodesic_distances(graph: np.ndarray) -> np.ndarray:
    g = csgraph_from_dense(graph, null_value=np.inf)
    n_comp, _ = connected_components(g, directed=False)
    if n_comp > 1:
        raise DisconnectedGraph(n_comp)
    geo = shortest_path(g, method="D", directed=False)
    return (geo + geo.T) / 2


def classical_mds(dist: np.ndarray, target_dim: int) -> Tuple[np.ndarray, np.ndarray]:
    """Coordinates from ``-1/2 J D^2 J`` and its eigenvalues (descending)."""
    n = dist.shape[0]
    j = np.eye(n) - np.ones((n, n)) / n
    b = -0.5 * j @ (dist**2) @ j
    b = (b + b.T) / 2
    w, v = np.linalg.eigh(b)
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]
    tol = max(abs(w[0]), 1.0) * n * np.finfo(float).eps
    positive = int(np.sum(w > tol))
    if positive == 0:
        raise NoPositiveEigenvalues("centered matrix has no positive eigenvalues")
    d = min(target_dim, positive)
    vecs = v[:, :d]
    # sign convention: largest-magnitude entry of each eigenvector positive
    lead = vecs[np.argmax(np.abs(vecs), axis=0), np.arange(d)]
    vecs = vecs * np.where(lead < 0, -1.0, 1.0)
    coords = vecs * np.sqrt(w[:d])
    coords -= coords.mean(axis=0)
    return coords, w


def _pairwise(coords: np.ndarray) -> np.ndarray:
    diff = coords[:, None, :] - coords[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def residual_variances(geodesic: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """``1 - r^2`` between geodesic and embedded distances, per leading dimension."""
    iu = np.triu_indices(geodesic.shape[0], 1)
    g = geodesic[iu]
    out = []
    for d in range(1, coords.shape[1] + 1):
        e = _pairwise(coords[:, :d])[iu]
        if np.std(g) == 0 or np.std(e) == 0:
            out.append(1.0)
            continue
        r = np.corrcoef(g, e)[0, 1]
        out.append(float(1.0 - r * r))
    return np.array(out)


def isomap(d, k: Optional[int] = None, epsilon: Optional[float] = None,
           target_dim: int = 3) -> Embedding:
    if target_dim < 1:
        raise MalformedInput("target_dim must be at least 1")
    dist = _as_array(d)
    if k is None and epsilon is None:
        k = min(DEFAULT_K_LANDSCAPE, dist.shape[0] - 1)
    geo = geodesic_distances(neighborhood_graph(dist, k, epsilon))
    coords, eig = classical_mds(geo, target_dim)
    hood = {"k": int(k)} if k is not None else {"epsilon": float(epsilon)}
    return Embedding(coords, residual_variances(geo, coords), hood, eig, geo)


def embedding_error(d, e: Embedding) -> Tuple[float, float]:
    """Largest absolute and mean squared error of embedded pairwise distances."""
    dist = _as_array(d)
    coords = e.coordinates if isinstance(e, Embedding) else np.asarray(e)
    if coords.shape[0] != dist.shape[0]:
        raise SizeMismatch(f"{dist.shape[0]} points but {coords.shape[0]} coordinates")
    iu = np.triu_indices(dist.shape[0], 1)
    if iu[0].size == 0:
        return 0.0, 0.0
    err = np.abs(dist[iu] - _pairwise(coords)[iu])
    return float(err.max()), float(np.mean(err * err))
