"""Dense linear algebra over the two-element field.

Used as an independent oracle for the sparse reduction, so it deliberately
works on full 0/1 matrices with plain Gaussian elimination.
"""

from typing import Sequence

import numpy as np


def boundary_matrix(faces: Sequence[tuple], simplices: Sequence[tuple]) -> np.ndarray:
    """0/1 matrix with one row per face and one column per simplex."""
    row = {f: i for i, f in enumerate(faces)}
    m = np.zeros((len(faces), len(simplices)), dtype=np.uint8)
    for j, s in enumerate(simplices):
        for drop in range(len(s)):
            m[row[s[:drop] + s[drop + 1:]], j] = 1
    return m


def row_echelon(m: np.ndarray) -> tuple:
    """Return ``(echelon form, pivot columns)`` of ``m`` over Z/2."""
    a = (np.asarray(m, dtype=np.uint8) & 1).copy()
    rows, cols = a.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hit = np.nonzero(a[r:, c])[0]
        if hit.size == 0:
            continue
        p = r + hit[0]
        if p != r:
            a[[r, p]] = a[[p, r]]
        below = np.nonzero(a[r + 1:, c])[0] + r + 1
        if below.size:
            a[below] ^= a[r]
        pivots.append(c)
        r += 1
    return a, pivots


def rank(m: np.ndarray) -> int:
    m = np.asarray(m)
    if m.size == 0:
        return 0
    return len(row_echelon(m)[1])


def in_span(m: np.ndarray, v: np.ndarray) -> bool:
    """True when vector ``v`` is a Z/2 combination of the columns of ``m``."""
    v = np.asarray(v, dtype=np.uint8).reshape(-1, 1)
    if not v.any():
        return True
    m = np.asarray(m, dtype=np.uint8).reshape(v.shape[0], -1)
    return rank(np.hstack([m, v])) == rank(m)
