"""Exact persistence landscapes.

A landscape level is stored as its breakpoints ``(t, y)``; between breakpoints
it is linear and outside them it is zero.  All integrals (areas, inner
products, p-distances) are computed in closed form segment by segment, so a
grid is only needed when a feature matrix is requested.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .data import atomic_write_text, format_float
from .errors import (
    BadGrid,
    BadP,
    CapTooSmall,
    DegreeMismatch,
    EmptyList,
    MalformedInput,
    NonFinite,
    Unordered,
)
from .persistence import Barcode

# rows of (critical points x intervals) evaluated per block
_BLOCK_CELLS = 2_000_000


@dataclass(frozen=True)
class PiecewiseLinear:
    """Continuous non-negative function given by breakpoints, zero outside them."""

    t: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        t = np.array(self.t, dtype=np.float64).reshape(-1)
        y = np.array(self.y, dtype=np.float64).reshape(-1)
        if t.shape != y.shape:
            raise MalformedInput("breakpoint arrays differ in length")
        if t.size and np.any(np.diff(t) <= 0):
            raise Unordered("breakpoint abscissae must be strictly increasing")
        t.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "y", y)

    def __call__(self, s):
        if self.t.size == 0:
            return np.zeros_like(np.asarray(s, dtype=np.float64))
        return np.interp(s, self.t, self.y, left=0.0, right=0.0)

    @property
    def is_zero(self) -> bool:
        return not np.any(self.y)

    def slopes(self) -> np.ndarray:
        return np.diff(self.y) / np.diff(self.t)

    def area(self) -> float:
        return float(np.sum(np.diff(self.t) * (self.y[1:] + self.y[:-1]) / 2)) if self.t.size > 1 else 0.0


ZERO = PiecewiseLinear(np.zeros(0), np.zeros(0))


@dataclass(frozen=True)
class PersistenceLandscape:
    levels: Tuple[PiecewiseLinear, ...]
    degree: int

    def level(self, k: int) -> PiecewiseLinear:
        """``k``-th level, counting from 1; zero beyond the stored ones."""
        return self.levels[k - 1] if 1 <= k <= len(self.levels) else ZERO

    @property
    def depth(self) -> int:
        return len(self.levels)

    def support(self) -> Tuple[float, float]:
        ts = [lv.t for lv in self.levels if lv.t.size]
        if not ts:
            return (0.0, 0.0)
        return (min(float(t[0]) for t in ts), max(float(t[-1]) for t in ts))


def tent(a: float, b: float) -> PiecewiseLinear:
    """The function ``t -> max(min(t - a, b - t), 0)``."""
    if not (math.isfinite(a) and math.isfinite(b)):
        raise NonFinite(f"tent endpoints must be finite, got ({a}, {b})")
    if a > b:
        raise Unordered(f"tent needs a <= b, got ({a}, {b})")
    if a == b:
        return ZERO
    return PiecewiseLinear([a, (a + b) / 2, b], [0.0, (b - a) / 2, 0.0])


def capped_pairs(b: Barcode, degree: int, infinite_cap: Optional[float]) -> np.ndarray:
    """Finite ``(birth, death)`` rows of one degree, essential deaths set to the cap."""
    pairs = b.pairs(degree)
    inf_rows = ~np.isfinite(pairs[:, 1])
    if inf_rows.any():
        if infinite_cap is None or not math.isfinite(infinite_cap):
            raise CapTooSmall("essential classes need a finite infinite_cap")
        finite_deaths = pairs[~inf_rows, 1]
        if (finite_deaths.size and infinite_cap < finite_deaths.max()) or \
                infinite_cap < pairs[inf_rows, 0].max():
            raise CapTooSmall(f"infinite_cap {infinite_cap} is below a finite death or birth")
        pairs = pairs.copy()
        pairs[inf_rows, 1] = infinite_cap
    return pairs


def _critical_points(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    mid = (a + b) / 2
    # A rising edge of tent i can only meet a falling edge of tent j, at
    # (a_i + b_j) / 2; keep the meetings that lie on both edges.
    cross = (a[:, None] + b[None, :]) / 2
    ok = (cross >= a[:, None]) & (cross <= mid[:, None]) & (cross >= mid[None, :]) & (cross <= b[None, :])
    return np.unique(np.concatenate([a, b, mid, cross[ok]]))


def landscape_from_pairs(pairs, degree: int = 0) -> PersistenceLandscape:
    """Landscape of finite intervals given as ``(birth, death)`` rows."""
    pairs = np.asarray(pairs, dtype=np.float64).reshape(-1, 2)
    if not np.all(np.isfinite(pairs)):
        raise NonFinite("intervals must be finite; cap essential classes first")
    if np.any(pairs[:, 1] < pairs[:, 0]):
        raise Unordered("interval death precedes birth")
    pairs = pairs[pairs[:, 1] > pairs[:, 0]]
    m = len(pairs)
    if m == 0:
        return PersistenceLandscape((), degree)
    a, b = pairs[:, 0], pairs[:, 1]
    ts = _critical_points(a, b)

    # Between consecutive critical points every tent is linear and no two
    # tents cross, so each k-th largest value is linear there too.
    ranked = np.empty((len(ts), m))
    step = max(1, _BLOCK_CELLS // m)
    for lo in range(0, len(ts), step):
        s = ts[lo:lo + step, None]
        vals = np.maximum(np.minimum(s - a[None, :], b[None, :] - s), 0.0)
        vals.sort(axis=1)
        ranked[lo:lo + step] = vals[:, ::-1]

    levels = []
    for k in range(m):
        y = ranked[:, k]
        if not y.any():
            break
        levels.append(_trim(ts, y))
    return PersistenceLandscape(tuple(levels), degree)


def _trim(t: np.ndarray, y: np.ndarray) -> PiecewiseLinear:
    """Drop zero runs, keeping the zero breakpoints that bound each bump."""
    pos = y > 0
    keep = pos.copy()
    keep[1:] |= pos[:-1]
    keep[:-1] |= pos[1:]
    return PiecewiseLinear(t[keep], y[keep])


def build_landscape(b: Barcode, degree: int, infinite_cap: Optional[float] = None) -> PersistenceLandscape:
    return landscape_from_pairs(capped_pairs(b, degree, infinite_cap), degree)


def evaluate(landscape: PersistenceLandscape, k: int, t):
    """Value of the ``k``-th level at ``t`` (scalar or array)."""
    if k < 1:
        raise MalformedInput("levels are numbered from 1")
    out = landscape.level(k)(t)
    return float(out) if np.ndim(out) == 0 else out


def _check_same_degree(landscapes: Sequence[PersistenceLandscape]) -> int:
    degrees = {lv.degree for lv in landscapes}
    if len(degrees) > 1:
        raise DegreeMismatch(f"landscapes of several degrees: {sorted(degrees)}")
    return degrees.pop()


def _union_grid(*funcs: PiecewiseLinear) -> np.ndarray:
    parts = [f.t for f in funcs if f.t.size]
    return np.unique(np.concatenate(parts)) if parts else np.zeros(0)


def mean_landscape(landscapes: Sequence[PersistenceLandscape]) -> PersistenceLandscape:
    """Pointwise average, exact on the union of breakpoints."""
    landscapes = list(landscapes)
    if not landscapes:
        raise EmptyList("cannot average an empty list of landscapes")
    degree = _check_same_degree(landscapes)
    depth = max(lv.depth for lv in landscapes)
    levels = []
    for k in range(1, depth + 1):
        funcs = [lv.level(k) for lv in landscapes]
        ts = _union_grid(*funcs)
        y = sum(f(ts) for f in funcs) / len(landscapes)
        levels.append(PiecewiseLinear(ts, y))
    return PersistenceLandscape(tuple(levels), degree)


def _abs_power_integral(d0: np.ndarray, d1: np.ndarray, h: np.ndarray, p: float) -> float:
    """Sum over segments of the integral of |linear|^p, in closed form."""
    total = 0.0
    flips = d0 * d1 < 0
    if flips.any():
        # split at the zero crossing; each side then has a fixed sign
        z = h[flips] * np.abs(d0[flips]) / (np.abs(d0[flips]) + np.abs(d1[flips]))
        total += _abs_power_integral(np.abs(d0[flips]), np.zeros(z.size), z, p)
        total += _abs_power_integral(np.zeros(z.size), np.abs(d1[flips]), h[flips] - z, p)
        d0, d1, h = d0[~flips], d1[~flips], h[~flips]
    u, v = np.abs(d0), np.abs(d1)
    hi = np.maximum(u, v)
    lo = np.minimum(u, v)
    nz = hi > 0
    hi, lo, h = hi[nz], lo[nz], h[nz]
    if hi.size == 0:
        return total
    # h * (hi^(p+1) - lo^(p+1)) / ((p+1)(hi - lo)), rewritten in r = lo/hi
    # so that nearly flat segments keep full precision.
    r = lo / hi
    ratio = np.empty_like(r)
    flat = r >= 1.0
    ratio[flat] = 1.0
    rr = r[~flat]
    with np.errstate(divide="ignore"):
        logr = np.log(rr)
    ratio[~flat] = np.where(rr > 0, np.expm1((p + 1) * logr) / ((p + 1) * np.expm1(logr)), 1.0 / (p + 1))
    return total + float(np.sum(h * hi**p * ratio))


def _segment_diffs(f: PiecewiseLinear, g: PiecewiseLinear):
    ts = _union_grid(f, g)
    d = f(ts) - g(ts)
    return d[:-1], d[1:], np.diff(ts)


def landscape_distance(l1: PersistenceLandscape, l2: PersistenceLandscape, p=2) -> float:
    """Lp distance summed over levels; ``p`` may be ``inf``."""
    if not (p == math.inf or (isinstance(p, (int, float)) and p >= 1)):
        raise BadP(f"p must be >= 1 or inf, got {p}")
    _check_same_degree([l1, l2])
    depth = max(l1.depth, l2.depth)
    if p == math.inf:
        best = 0.0
        for k in range(1, depth + 1):
            f, g = l1.level(k), l2.level(k)
            ts = _union_grid(f, g)
            if ts.size:
                best = max(best, float(np.max(np.abs(f(ts) - g(ts)))))
        return best
    total = 0.0
    for k in range(1, depth + 1):
        d0, d1, h = _segment_diffs(l1.level(k), l2.level(k))
        if h.size == 0:
            continue
        if p == 1:
            same = d0 * d1 >= 0
            total += float(np.sum(h[same] * np.abs(d0[same] + d1[same]) / 2))
            a0, a1, hh = np.abs(d0[~same]), np.abs(d1[~same]), h[~same]
            total += float(np.sum(hh * (a0**2 + a1**2) / (2 * (a0 + a1))))
        elif p == 2:
            total += float(np.sum(h * (d0 * d0 + d0 * d1 + d1 * d1) / 3))
        else:
            total += _abs_power_integral(d0, d1, h, float(p))
    return total ** (1.0 / p)


def landscape_kernel(l1: PersistenceLandscape, l2: PersistenceLandscape) -> float:
    """L2 inner product summed over levels."""
    _check_same_degree([l1, l2])
    total = 0.0
    for k in range(1, min(l1.depth, l2.depth) + 1):
        f, g = l1.level(k), l2.level(k)
        ts = _union_grid(f, g)
        if ts.size < 2:
            continue
        x, y, h = f(ts), g(ts), np.diff(ts)
        total += float(np.sum(h * (2 * x[:-1] * y[:-1] + x[:-1] * y[1:] + x[1:] * y[:-1]
                                   + 2 * x[1:] * y[1:]) / 6))
    return total


def landscape_integral(landscape: PersistenceLandscape) -> float:
    """Total area under all levels."""
    return float(sum(lv.area() for lv in landscape.levels))


def grid(t_min: float, t_max: float, n_grid: int) -> np.ndarray:
    if not (t_min < t_max) or n_grid < 2:
        raise BadGrid(f"need t_min < t_max and n_grid >= 2, got {t_min}, {t_max}, {n_grid}")
    return np.linspace(t_min, t_max, n_grid)


def discretize(landscape: PersistenceLandscape, t_min: float, t_max: float,
               n_grid: int, n_levels: int) -> np.ndarray:
    """``n_levels x n_grid`` samples on a uniform grid including both ends."""
    ts = grid(t_min, t_max, n_grid)
    if n_levels < 0:
        raise BadGrid("n_levels must be non-negative")
    out = np.zeros((n_levels, n_grid))
    for k in range(1, min(n_levels, landscape.depth) + 1):
        out[k - 1] = landscape.level(k)(ts)
    return out


# serialization

def landscape_grid_csv(landscape: PersistenceLandscape, t_min: float, t_max: float,
                       n_grid: int, n_levels: Optional[int] = None) -> str:
    """Header of grid abscissae, then one row per level."""
    n_levels = landscape.depth if n_levels is None else n_levels
    ts = grid(t_min, t_max, n_grid)
    mat = discretize(landscape, t_min, t_max, n_grid, n_levels)
    lines = [",".join(format_float(x) for x in ts.tolist())]
    lines += [",".join(format_float(x) for x in row) for row in mat.tolist()]
    return "\n".join(lines) + "\n"


def landscape_to_json(landscape: PersistenceLandscape) -> str:
    doc = {
        "degree": landscape.degree,
        "levels": [{"t": lv.t.tolist(), "y": lv.y.tolist()} for lv in landscape.levels],
    }
    return json.dumps(doc, indent=1) + "\n"


def landscape_from_json(text: str) -> PersistenceLandscape:
    try:
        doc = json.loads(text)
        levels = tuple(PiecewiseLinear(lv["t"], lv["y"]) for lv in doc["levels"])
        return PersistenceLandscape(levels, int(doc["degree"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInput(f"bad landscape file: {exc}") from None


def save_landscape(path, landscape: PersistenceLandscape) -> None:
    atomic_write_text(path, landscape_to_json(landscape))


def load_landscape(path) -> PersistenceLandscape:
    with open(path) as fh:
        return landscape_from_json(fh.read())


def integrals(landscapes: Iterable[PersistenceLandscape]) -> List[float]:
    return [landscape_integral(lv) for lv in landscapes]
