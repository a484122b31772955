"""Two-sample permutation tests, PCA and a hard linear-separability check."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import combinations, islice
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import GroupTooSmall, ObservedNotInNull, TooFewSamples
from .rng import make_rng

DEFAULT_EXHAUSTIVE_LIMIT = 1_000_000
DEFAULT_RESAMPLES = 100_000
# Null values within this relative distance of the observed statistic count as
# ties; different summation orders may otherwise split an exact tie.
TIE_RTOL = 1e-12
_CHUNK = 20_000


@dataclass
class PermutationTestResult:
    t_obs: float
    null_distribution: np.ndarray
    p_value: float
    n1: int
    n2: int
    m: int
    exhaustive: bool = True
    collapsed: bool = False

    def histogram(self, bins: int = 20):
        """Counts and edges of the finite part of the null distribution."""
        finite = self.null_distribution[np.isfinite(self.null_distribution)]
        if finite.size == 0:
            return np.zeros(bins, dtype=np.int64), np.linspace(0.0, 1.0, bins + 1)
        lo, hi = float(finite.min()), float(finite.max())
        if hi <= lo:
            hi = lo + 1.0
        counts, edges = np.histogram(finite, bins=bins, range=(lo, hi))
        return counts, edges


def welch_statistic(g1: np.ndarray, g2: np.ndarray) -> np.ndarray:
    """``|mean1 - mean2| / sqrt(var1/n1 + var2/n2)`` row-wise, unbiased variances.

    A zero denominator gives 0 when the means agree and ``inf`` otherwise.
    """
    g1 = np.atleast_2d(g1)
    g2 = np.atleast_2d(g2)
    n1, n2 = g1.shape[1], g2.shape[1]
    diff = np.abs(g1.mean(axis=1) - g2.mean(axis=1))
    se = np.sqrt(g1.var(axis=1, ddof=1) / n1 + g2.var(axis=1, ddof=1) / n2)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = diff / se
    t[se == 0] = np.where(diff[se == 0] == 0, 0.0, np.inf)
    return t


def pvalue_from_null(null, t_obs: float) -> float:
    """Fraction of the null at least as large as the observed statistic."""
    null = np.asarray(null, dtype=np.float64)
    if null.size == 0 or not np.any(null == t_obs):
        raise ObservedNotInNull("observed statistic must be one of the null values")
    return _count_extreme(null, t_obs) / null.size


def _count_extreme(null: np.ndarray, t_obs: float) -> int:
    if math.isinf(t_obs):
        return int(np.sum(null == t_obs))
    return int(np.sum(null >= t_obs - TIE_RTOL * abs(t_obs)))


def _assignments(n_total: int, n1: int, collapse: bool):
    """Group-1 index sets in lexicographic order, identity assignment first."""
    if collapse:
        # fixing sample 0 in group 1 picks one of each complementary pair
        for rest in combinations(range(1, n_total), n1 - 1):
            yield (0,) + rest
    else:
        yield from combinations(range(n_total), n1)


def permutation_test(xs1: Sequence[float], xs2: Sequence[float],
                     exhaustive_limit: int = DEFAULT_EXHAUSTIVE_LIMIT,
                     rng_seed: int = 0,
                     n_resamples: int = DEFAULT_RESAMPLES) -> PermutationTestResult:
    """Permutation test of equal means with the Welch-type statistic.

    All ``C(n1 + n2, n1)`` relabelings are enumerated when that count is at most
    ``exhaustive_limit``; with equal group sizes complementary relabelings give
    the same statistic and only one of each pair is kept.  Larger problems use
    ``n_resamples`` random relabelings with the observed one included first.
    """
    x1 = np.asarray(xs1, dtype=np.float64).reshape(-1)
    x2 = np.asarray(xs2, dtype=np.float64).reshape(-1)
    n1, n2 = x1.size, x2.size
    if n1 < 2 or n2 < 2:
        raise GroupTooSmall(f"each group needs at least 2 values, got {n1} and {n2}")
    pooled = np.concatenate([x1, x2])
    n = n1 + n2
    total = math.comb(n, n1)
    collapse = n1 == n2
    exhaustive = total <= exhaustive_limit

    if exhaustive:
        m = total // 2 if collapse else total
        it = _assignments(n, n1, collapse)
        null = np.empty(m)
        done = 0
        while done < m:
            block = np.array(list(islice(it, _CHUNK)), dtype=np.int64)
            null[done:done + len(block)] = _statistics_for(pooled, block)
            done += len(block)
    else:
        collapse = False
        m = int(n_resamples)
        rng = make_rng(rng_seed)
        idx = np.empty((m, n1), dtype=np.int64)
        idx[0] = np.arange(n1)
        for r in range(1, m):
            idx[r] = np.sort(rng.permutation(n)[:n1])
        null = np.concatenate([_statistics_for(pooled, idx[lo:lo + _CHUNK])
                               for lo in range(0, m, _CHUNK)])

    t_obs = float(null[0])
    p = _count_extreme(null, t_obs) / m
    return PermutationTestResult(t_obs, null, p, n1, n2, m, exhaustive, collapse)


def _statistics_for(pooled: np.ndarray, group1: np.ndarray) -> np.ndarray:
    n = pooled.size
    mask = np.zeros((len(group1), n), dtype=bool)
    np.put_along_axis(mask, group1, True, axis=1)
    vals = np.broadcast_to(pooled, mask.shape)
    g1 = vals[mask].reshape(len(group1), -1)
    g2 = vals[~mask].reshape(len(group1), -1)
    return welch_statistic(g1, g2)


def format_test_report(result: PermutationTestResult, group_names=("group1", "group2"),
                       values1=None, values2=None, bins: int = 20, extra: Optional[dict] = None) -> str:
    """Plain-text report: header fields then the null histogram as CSV rows."""
    from .data import format_float

    lines = [
        f"group1 = {group_names[0]}",
        f"group2 = {group_names[1]}",
        f"n1 = {result.n1}",
        f"n2 = {result.n2}",
    ]
    if values1 is not None:
        lines.append("values1 = " + ",".join(format_float(float(v)) for v in values1))
    if values2 is not None:
        lines.append("values2 = " + ",".join(format_float(float(v)) for v in values2))
    for key, value in (extra or {}).items():
        lines.append(f"{key} = {value}")
    lines += [
        f"exhaustive = {str(result.exhaustive).lower()}",
        f"complements_collapsed = {str(result.collapsed).lower()}",
        f"t_obs = {format_float(result.t_obs)}",
        f"m = {result.m}",
        f"p_value = {format_float(result.p_value)}",
        "",
        "[null_histogram]",
        "bin_low,bin_high,count",
    ]
    counts, edges = result.histogram(bins)
    for c, lo, hi in zip(counts.tolist(), edges[:-1].tolist(), edges[1:].tolist()):
        lines.append(f"{format_float(lo)},{format_float(hi)},{c}")
    n_inf = int(np.sum(np.isinf(result.null_distribution)))
    if n_inf:
        lines.append(f"inf,inf,{n_inf}")
    return "\n".join(lines) + "\n"


@dataclass
class PcaResult:
    components: np.ndarray          # (r, p') orthonormal rows
    variance_explained: np.ndarray  # fraction per component
    scores: np.ndarray              # (n, r)
    eigenvalues: np.ndarray
    mean: np.ndarray
    scale: np.ndarray
    kept_columns: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.variance_explained)


def _orient(vectors: np.ndarray) -> np.ndarray:
    """Flip each row so that its largest-magnitude entry is positive."""
    if vectors.size == 0:
        return vectors
    lead = vectors[np.arange(len(vectors)), np.argmax(np.abs(vectors), axis=1)]
    return vectors * np.where(lead < 0, -1.0, 1.0)[:, None]


def pca(features, standardize: bool = False, rtol: float = 1e-12) -> PcaResult:
    """Principal components of a sample-by-feature matrix.

    With more features than samples the eigenproblem is solved on the
    ``n x n`` Gram matrix of the centered samples instead of the covariance.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise TooFewSamples("PCA needs at least 2 samples")
    n = x.shape[0]
    kept = np.arange(x.shape[1])
    mean = x.mean(axis=0)
    xc = x - mean
    scale = np.ones(x.shape[1])
    if standardize:
        sd = x.std(axis=0, ddof=1)
        constant = sd == 0
        if constant.any():
            warnings.warn(f"dropping {int(constant.sum())} zero-variance feature columns",
                          RuntimeWarning, stacklevel=2)
        kept = np.nonzero(~constant)[0]
        xc = xc[:, kept] / sd[kept]
        mean, scale = mean[kept], sd[kept]

    p = xc.shape[1]
    if p > n:
        gram = xc @ xc.T
        w, u = np.linalg.eigh(gram)
        order = np.argsort(w)[::-1]
        w, u = w[order], u[:, order]
        keep = w > rtol * max(w[0], 0.0) if w.size and w[0] > 0 else np.zeros(w.size, bool)
        comps = (xc.T @ u[:, keep]) / np.sqrt(w[keep])
        eig = w[keep] / (n - 1)
        comps = comps.T
    else:
        cov = xc.T @ xc / (n - 1)
        w, v = np.linalg.eigh(cov)
        order = np.argsort(w)[::-1]
        w, v = w[order], v[:, order]
        keep = w > rtol * max(w[0], 0.0) if w.size and w[0] > 0 else np.zeros(w.size, bool)
        eig = w[keep]
        comps = v[:, keep].T
    comps = _orient(comps)
    total = float(np.sum(xc * xc)) / (n - 1)
    frac = eig / total if total > 0 else np.zeros_like(eig)
    return PcaResult(comps, frac, xc @ comps.T, eig, mean, scale, kept)


@dataclass(frozen=True)
class Hyperplane:
    """``normal . x + offset = 0`` with unit ``normal``; ``margin`` is the
    smallest signed distance of any sample to the plane."""

    normal: np.ndarray
    offset: float
    margin: float

    def side(self, points) -> np.ndarray:
        return np.sign(np.asarray(points, dtype=np.float64) @ self.normal + self.offset)


def linear_separability(points, labels) -> Optional[Hyperplane]:
    """Strictly separating hyperplane of two labelled classes, or ``None``.

    Solves the linear program ``min |w|_1`` subject to
    ``y_i (w . x_i + b) >= 1``, which is feasible exactly when the classes are
    strictly linearly separable.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    lab = np.asarray(labels)
    classes = np.unique(lab)
    if len(classes) != 2:
        raise TooFewSamples("need exactly two classes with at least one point each")
    y = np.where(lab == classes[1], 1.0, -1.0)
    n, d = x.shape
    # variables: w_plus (d), w_minus (d), b
    c = np.concatenate([np.ones(2 * d), [0.0]])
    a_ub = -y[:, None] * np.hstack([x, -x, np.ones((n, 1))])
    b_ub = -np.ones(n)
    bounds = [(0, None)] * (2 * d) + [(None, None)]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        return None
    w = res.x[:d] - res.x[d:2 * d]
    b = float(res.x[-1])
    norm = float(np.linalg.norm(w))
    if norm == 0:
        return None
    normal = w / norm
    offset = b / norm
    margin = float(np.min(y * (x @ normal + offset)))
    if margin <= 0:
        return None
    return Hyperplane(normal, offset, margin)
