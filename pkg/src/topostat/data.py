"""Input matrices, point clouds and the synthetic shape samplers."""

from __future__ import annotations

import csv
import enum
import io
import math
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    AsymmetryTooLarge,
    BadRadii,
    EmptyCloud,
    MalformedInput,
    NonFiniteEntry,
    NonSquare,
    OutOfRangeEntry,
    WrongKind,
)
from .rng import make_rng

SYMMETRY_TOL = 1e-9


class MatrixKind(enum.Enum):
    CORRELATION = "correlation"
    DISTANCE = "distance"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise MalformedInput(f"unknown matrix kind {value!r}") from None


@dataclass(frozen=True)
class SquareMatrix:
    """Validated symmetric matrix of correlations or distances."""

    entries: np.ndarray
    kind: MatrixKind

    def __post_init__(self):
        a = np.array(self.entries, dtype=np.float64)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)
        object.__setattr__(self, "kind", MatrixKind.parse(self.kind))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def from_array(cls, values, kind) -> "SquareMatrix":
        """Validate ``values`` and symmetrize rounding noise up to 1e-9."""
        kind = MatrixKind.parse(kind)
        a = np.asarray(values, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise NonSquare(f"expected a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise NonFiniteEntry("matrix contains NaN or infinite entries")
        asym = float(np.max(np.abs(a - a.T)))
        if asym > SYMMETRY_TOL:
            raise AsymmetryTooLarge(f"max |M - M^T| = {asym:.3g} exceeds {SYMMETRY_TOL}")
        if asym > 0:
            a = (a + a.T) / 2
        diag = np.diag(a)
        if kind is MatrixKind.CORRELATION:
            if np.any(a < -1) or np.any(a > 1):
                raise OutOfRangeEntry("correlation entries must lie in [-1, 1]")
            if np.any(np.abs(diag - 1) > SYMMETRY_TOL):
                raise OutOfRangeEntry("correlation diagonal must be 1")
            a = a.copy()
            np.fill_diagonal(a, 1.0)
        else:
            if np.any(a < 0):
                raise OutOfRangeEntry("distance entries must be non-negative")
            if np.any(np.abs(diag) > SYMMETRY_TOL):
                raise OutOfRangeEntry("distance diagonal must be 0")
            a = a.copy()
            np.fill_diagonal(a, 0.0)
        return cls(a, kind)


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    labels: Optional[Sequence[str]] = field(default=None)

    def __post_init__(self):
        p = np.array(self.points, dtype=np.float64)
        if p.ndim == 1:
            p = p.reshape(-1, 1)
        if p.ndim != 2 or p.shape[1] < 1:
            raise MalformedInput("points must form an (n, d) array with d >= 1")
        if not np.all(np.isfinite(p)):
            raise NonFiniteEntry("point coordinates must be finite")
        if self.labels is not None and len(self.labels) != p.shape[0]:
            raise MalformedInput("one label per point required")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def read_numeric_csv(path) -> np.ndarray:
    """Read a comma separated numeric table, skipping one optional header row."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if rows and not _is_number(rows[0][0].strip()):
        rows = rows[1:]
    if not rows:
        return np.zeros((0, 0))
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise NonSquare(f"{path}: rows have differing lengths")
    try:
        return np.array([[float(c) for c in r] for r in rows], dtype=np.float64)
    except ValueError as exc:
        raise MalformedInput(f"{path}: {exc}") from None


def load_matrix_csv(path, kind) -> SquareMatrix:
    a = read_numeric_csv(path)
    if a.shape[0] != a.shape[1]:
        raise NonSquare(f"{path}: {a.shape[0]} rows but {a.shape[1]} columns")
    return SquareMatrix.from_array(a, kind)


def format_float(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def matrix_to_csv(values) -> str:
    buf = io.StringIO()
    for row in np.asarray(values, dtype=np.float64):
        buf.write(",".join(format_float(float(x)) for x in row))
        buf.write("\n")
    return buf.getvalue()


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file and rename."""
    path = os.fspath(path)
    d = os.path.dirname(path) or "."
    os.makedirs(d, exist_ok=True)
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def save_matrix_csv(path, m) -> None:
    values = m.entries if isinstance(m, SquareMatrix) else m
    atomic_write_text(path, matrix_to_csv(values))


def load_point_cloud_csv(path) -> PointCloud:
    a = read_numeric_csv(path)
    if a.size == 0:
        raise EmptyCloud(f"{path}: no points")
    return PointCloud(a)


def save_point_cloud_csv(path, pc: PointCloud) -> None:
    atomic_write_text(path, matrix_to_csv(pc.points))


def dynamical_distance(c: SquareMatrix) -> SquareMatrix:
    """Map correlations to distances, ``1 - |C_ij|``."""
    if c.kind is not MatrixKind.CORRELATION:
        raise WrongKind(f"expected a correlation matrix, got {c.kind.value}")
    d = 1.0 - np.abs(c.entries)
    np.fill_diagonal(d, 0.0)
    return SquareMatrix(d, MatrixKind.DISTANCE)


def euclidean_distances(pc: PointCloud) -> SquareMatrix:
    p = pc.points
    if p.shape[0] == 0:
        raise EmptyCloud("point cloud is empty")
    diff = p[:, None, :] - p[None, :, :]
    d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    np.fill_diagonal(d, 0.0)
    return SquareMatrix(d, MatrixKind.DISTANCE)


def sample_annulus(n: int, r_inner: float, r_outer: float, rng_seed, *key) -> PointCloud:
    """Uniform-by-area sample of an annulus via inverse CDF on the radius."""
    if n < 1:
        raise EmptyCloud("n must be at least 1")
    if not (0 <= r_inner < r_outer) or not math.isfinite(r_outer):
        raise BadRadii(f"need 0 <= r_inner < r_outer, got {r_inner}, {r_outer}")
    rng = make_rng(rng_seed, *key)
    u = rng.random(n)
    theta = 2 * np.pi * rng.random(n)
    r = np.sqrt(u * (r_outer**2 - r_inner**2) + r_inner**2)
    return PointCloud(np.column_stack([r * np.cos(theta), r * np.sin(theta)]))


def sample_disk(n: int, radius: float, rng_seed, *key) -> PointCloud:
    return sample_annulus(n, 0.0, radius, rng_seed, *key)


def block_correlation(n: int, n_blocks: int, strength: float, n_frames: int,
                      rng_seed, *key) -> SquareMatrix:
    """Sample correlation of a block factor model.

    Variable i in block b is ``sqrt(s) f_b + sqrt(1 - s) e_i`` observed over
    ``n_frames`` frames, so within-block correlations sit near ``strength``
    and cross-block ones near 0.
    """
    if n < 2 or not (1 <= n_blocks <= n) or n_frames < 3:
        raise EmptyCloud("need n >= 2, 1 <= n_blocks <= n and n_frames >= 3")
    if not 0.0 <= strength <= 1.0:
        raise OutOfRangeEntry(f"strength must lie in [0, 1], got {strength}")
    rng = make_rng(rng_seed, *key)
    block = np.arange(n) * n_blocks // n
    factors = rng.standard_normal((n_blocks, n_frames))
    noise = rng.standard_normal((n, n_frames))
    x = math.sqrt(strength) * factors[block] + math.sqrt(1.0 - strength) * noise
    c = np.clip(np.corrcoef(x), -1.0, 1.0)
    c = (c + c.T) / 2
    np.fill_diagonal(c, 1.0)
    return SquareMatrix.from_array(c, MatrixKind.CORRELATION)


def shuffle_correlation(c: SquareMatrix, rng_seed, *key) -> SquareMatrix:
    """Permute the off-diagonal entries of ``c`` (kept symmetric).

    The entry distribution is unchanged but any block structure is gone.
    The result need not be positive semidefinite.
    """
    if c.kind is not MatrixKind.CORRELATION:
        raise WrongKind(f"expected a correlation matrix, got {c.kind.value}")
    rng = make_rng(rng_seed, *key)
    iu = np.triu_indices(c.n, 1)
    vals = c.entries[iu][rng.permutation(len(iu[0]))]
    out = np.eye(c.n)
    out[iu] = vals
    out[(iu[1], iu[0])] = vals
    return SquareMatrix(out, MatrixKind.CORRELATION)
