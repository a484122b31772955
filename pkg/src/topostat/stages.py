"""Pipeline stages.

Each stage reads the files written by the previous one and writes its own
outputs under the run directory, so any stage can be rerun on its own:

    samples/<name>.csv            point clouds (sampler source)
    filtrations/<name>.csv        value,dim,v0,v1,... (debug dump)
    barcodes/<name>.csv           degree,birth,death
    landscapes/deg<d>/<name>.json exact breakpoints; .csv is the grid matrix
    tests/deg<d>.txt              permutation test report; _null.csv the null
    embedding/deg<d>_*.csv        landscape distances, Isomap coordinates, scree
    pca/*                         PCA of concatenated landscape grids
    cycles/<name>.csv             tightened loop edges; summary.csv
    plots/*.svg
"""

from __future__ import annotations

import json
import logging
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .config import RunConfig
from .cycles import (
    cycle_to_csv,
    midpoint_filtration,
    most_persistent,
    proximity_to_csv,
    tighten_cycle,
    vertex_proximity,
)
from .data import (
    MatrixKind,
    SquareMatrix,
    atomic_write_text,
    dynamical_distance,
    euclidean_distances,
    format_float,
    load_matrix_csv,
    load_point_cloud_csv,
    matrix_to_csv,
    read_numeric_csv,
    sample_annulus,
    sample_disk,
    save_point_cloud_csv,
)
from .embedding import embedding_error, isomap
from .errors import MalformedInput, TopostatError
from .inference import format_test_report, linear_separability, pca, permutation_test
from .landscape import (
    build_landscape,
    discretize,
    landscape_distance,
    landscape_grid_csv,
    landscape_integral,
    load_landscape,
    mean_landscape,
    save_landscape,
)
from .persistence import compute_persistence, load_barcode_csv, save_barcode_csv
from .rips import Filtration, build_rips, filtration_to_csv, simplex_count_by_dim
from . import plotting

log = logging.getLogger(__name__)

INPUT_KINDS = ("points", "distance", "correlation", "filtration")


class StageError(TopostatError):
    """A module error annotated with the stage it came from."""

    def __init__(self, stage, cause):
        super().__init__(f"{type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


def stem(path) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def load_distances(path, kind: str) -> SquareMatrix:
    """Distance matrix from a point cloud, distance or correlation CSV."""
    if kind == "points":
        return euclidean_distances(load_point_cloud_csv(path))
    if kind == "correlation":
        return dynamical_distance(load_matrix_csv(path, MatrixKind.CORRELATION))
    if kind == "distance":
        return load_matrix_csv(path, MatrixKind.DISTANCE)
    raise MalformedInput(f"unknown input kind {kind!r}")


def load_filtration_csv(path, max_dim: Optional[int] = None,
                        threshold: float = np.inf) -> Filtration:
    """Rebuild a filtration from its ``value,dim,v0,...`` dump."""
    with open(path) as fh:
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if rows and rows[0][0] == "value":
        rows = rows[1:]
    try:
        parsed = [(float(r[0]), int(r[1]), tuple(int(x) for x in r[2:])) for r in rows]
    except (ValueError, IndexError) as exc:
        raise MalformedInput(f"{path}: {exc}") from None
    top = max((d for _, d, _ in parsed), default=0) if max_dim is None else max_dim
    n = 1 + max((max(s) for _, _, s in parsed if s), default=-1)
    verts, vals = [], []
    for d in range(top + 1):
        sel = [(v, s) for v, dd, s in parsed if dd == d]
        if any(len(s) != d + 1 for _, s in sel):
            raise MalformedInput(f"{path}: dimension {d} rows have the wrong vertex count")
        sel.sort(key=lambda x: (x[0], x[1]))
        verts.append(np.array([s for _, s in sel], dtype=np.int64).reshape(-1, d + 1))
        vals.append(np.array([v for v, _ in sel], dtype=np.float64))
    return Filtration(tuple(verts), tuple(vals), top, float(threshold), n)


def _filtration_for(path, kind, cfg: RunConfig) -> Filtration:
    if kind == "filtration":
        return load_filtration_csv(path, threshold=cfg.threshold)
    return build_rips(load_distances(path, kind), cfg.max_dim, cfg.threshold, cfg.capacity)


def _barcode_job(args) -> str:
    path, kind, cfg = args
    from .persistence import barcode_to_csv

    return barcode_to_csv(compute_persistence(_filtration_for(path, kind, cfg)))


def _map(fn, jobs, threads: int):
    if threads <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, jobs))


# stages

def sample_stage(cfg: RunConfig, out: str) -> List[Tuple[str, str]]:
    """Draw ``n_per_group`` disks and annuli; stream (group, i) of the run seed."""
    named = []
    for g, shape in enumerate(("disk", "annulus")):
        for i in range(cfg.n_per_group):
            if shape == "disk":
                pc = sample_disk(cfg.n_points, cfg.disk_radius, cfg.seed, g, i)
            else:
                pc = sample_annulus(cfg.n_points, cfg.annulus_inner, cfg.annulus_outer, cfg.seed, g, i)
            name = f"{shape}_{i:02d}"
            path = os.path.join(out, "samples", f"{name}.csv")
            save_point_cloud_csv(path, pc)
            named.append((name, path))
    return named


def rips_stage(inputs: Sequence[Tuple[str, str]], kind: str, cfg: RunConfig, out: str) -> List[str]:
    lines = ["name," + ",".join(f"dim{d}" for d in range(cfg.max_dim + 1))]
    written = []
    for name, path in inputs:
        f = _filtration_for(path, kind, cfg)
        dest = os.path.join(out, "filtrations", f"{name}.csv")
        atomic_write_text(dest, filtration_to_csv(f))
        counts = simplex_count_by_dim(f)
        lines.append(name + "," + ",".join(str(c) for c in counts))
        written.append(dest)
    atomic_write_text(os.path.join(out, "filtrations", "counts.csv"), "\n".join(lines) + "\n")
    return written


def persist_stage(inputs: Sequence[Tuple[str, str]], kind: str, cfg: RunConfig, out: str) -> List[str]:
    jobs = [(path, kind, cfg) for _, path in inputs]
    texts = _map(_barcode_job, jobs, cfg.threads)
    written = []
    for (name, _), text in zip(inputs, texts):
        dest = os.path.join(out, "barcodes", f"{name}.csv")
        atomic_write_text(dest, text)
        written.append(dest)
    return written


def landscape_stage(barcodes: Sequence[Tuple[str, str]], degree: int, cfg: RunConfig, out: str,
                    groups: Optional[Dict[str, List[str]]] = None) -> Dict[str, str]:
    """Landscapes of one degree; ``groups`` maps a group name to member names
    whose mean landscape is also written."""
    folder = os.path.join(out, "landscapes", f"deg{degree}")
    paths = {}
    landscapes = {}
    for name, path in barcodes:
        lv = build_landscape(load_barcode_csv(path), degree, cfg.cap)
        landscapes[name] = lv
        paths[name] = _write_landscape(folder, name, lv, cfg)
    for gname, members in (groups or {}).items():
        mean = mean_landscape([landscapes[m] for m in members]) if members else None
        if mean is not None:
            paths[f"mean_{gname}"] = _write_landscape(folder, f"mean_{gname}", mean, cfg)
    return paths


def _write_landscape(folder, name, lv, cfg: RunConfig) -> str:
    dest = os.path.join(folder, f"{name}.json")
    save_landscape(dest, lv)
    atomic_write_text(os.path.join(folder, f"{name}.csv"),
                      landscape_grid_csv(lv, cfg.t_min, cfg.grid_max, cfg.n_grid))
    return dest


def read_values(paths: Sequence[str]) -> List[float]:
    """Landscape integrals of JSON files, or the numbers in CSV files."""
    values = []
    for path in paths:
        if path.endswith(".json"):
            values.append(landscape_integral(load_landscape(path)))
        else:
            values.extend(float(x) for x in read_numeric_csv(path).reshape(-1))
    return values


def permutation_stage(group1: Sequence[str], group2: Sequence[str], name: str, cfg: RunConfig, out: str,
               names=("group1", "group2")) -> str:
    x1, x2 = read_values(group1), read_values(group2)
    res = permutation_test(x1, x2, cfg.exhaustive_limit, cfg.seed, cfg.n_resamples)
    dest = os.path.join(out, "tests", f"{name}.txt")
    atomic_write_text(dest, format_test_report(res, names, x1, x2))
    atomic_write_text(os.path.join(out, "tests", f"{name}_null.csv"),
                      "t\n" + "".join(format_float(float(t)) + "\n" for t in res.null_distribution))
    return dest


def landscape_distance_matrix(paths: Sequence[str], p: float) -> np.ndarray:
    ls = [load_landscape(path) for path in paths]
    n = len(ls)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d[i, j] = d[j, i] = landscape_distance(ls[i], ls[j], p)
    return d


def embed_stage(inputs: Sequence[str], name: str, cfg: RunConfig, out: str) -> str:
    """Isomap of a distance CSV, or of the pairwise distances of landscape JSONs."""
    folder = os.path.join(out, "embedding")
    if len(inputs) == 1 and not inputs[0].endswith(".json"):
        dist = load_matrix_csv(inputs[0], MatrixKind.DISTANCE).entries
    else:
        dist = landscape_distance_matrix(inputs, cfg.p)
        atomic_write_text(os.path.join(folder, f"{name}_distances.csv"), matrix_to_csv(dist))
    n = dist.shape[0]
    k = None if cfg.k is None else min(cfg.k, n - 1)
    emb = isomap(dist, k=k, epsilon=cfg.epsilon, target_dim=min(cfg.target_dim, n - 1))
    max_err, mse = embedding_error(dist, emb)
    atomic_write_text(os.path.join(folder, f"{name}_coords.csv"), matrix_to_csv(emb.coordinates))
    atomic_write_text(os.path.join(folder, f"{name}_scree.csv"),
                      "dim,residual_variance\n" + "".join(
                          f"{i + 1},{format_float(float(v))}\n" for i, v in enumerate(emb.residual_variance)))
    hood = ", ".join(f"{key} = {val}" for key, val in emb.neighborhood.items())
    meta = [
        f"n = {n}",
        f"neighborhood: {hood}",
        f"target_dim = {emb.dim}",
        "eigenvalues = " + ",".join(format_float(float(v)) for v in emb.eigenvalues[:10]),
        f"max_abs_error = {format_float(max_err)}",
        f"mse = {format_float(mse)}",
    ]
    dest = os.path.join(folder, f"{name}_meta.txt")
    atomic_write_text(dest, "\n".join(meta) + "\n")
    return dest


def pca_stage(landscape_paths: Dict[int, List[str]], labels: Sequence[str], cfg: RunConfig,
              out: str) -> str:
    """PCA of concatenated landscape grids (all degrees), plus a separability check
    of the two groups on the leading components."""
    blocks = []
    for degree in sorted(landscape_paths):
        ls = [load_landscape(p) for p in landscape_paths[degree]]
        depth = max(1, max(lv.depth for lv in ls))
        blocks.append(np.array([discretize(lv, cfg.t_min, cfg.grid_max, cfg.n_grid, depth).ravel()
                                for lv in ls]))
    features = np.hstack(blocks)
    res = pca(features, standardize=False)
    folder = os.path.join(out, "pca")
    atomic_write_text(os.path.join(folder, "scores.csv"), matrix_to_csv(res.scores))
    atomic_write_text(os.path.join(folder, "variance.csv"),
                      "component,fraction,cumulative\n" + "".join(
                          f"{i + 1},{format_float(float(f))},{format_float(float(c))}\n"
                          for i, (f, c) in enumerate(zip(res.variance_explained, res.cumulative()))))
    lines = []
    for d in (2, 3):
        d = min(d, res.scores.shape[1])
        plane = linear_separability(res.scores[:, :d], labels) if d >= 1 else None
        if plane is None:
            lines.append(f"components = {d}\nseparable = false")
        else:
            lines.append(f"components = {d}\nseparable = true\nmargin = {format_float(plane.margin)}\n"
                         "normal = " + ",".join(format_float(float(v)) for v in plane.normal))
    dest = os.path.join(folder, "separability.txt")
    atomic_write_text(dest, "\n\n".join(lines) + "\n")
    return dest


def cycle_stage(inputs: Sequence[Tuple[str, str]], kind: str, cfg: RunConfig, out: str) -> str:
    """Tighten the most persistent loop of each input at its lifetime midpoint."""
    folder = os.path.join(out, "cycles")
    rows = ["name,birth,death,midpoint,seed_length,tight_length"]
    for name, path in inputs:
        f = _filtration_for(path, kind, cfg)
        b = compute_persistence(f, keep_representatives=True)
        finite = [iv for iv in b.in_degree(cfg.cycle_degree) if iv.is_finite]
        if not finite:
            rows.append(f"{name},,,,,")
            continue
        iv = most_persistent(b, cfg.cycle_degree)
        mid = midpoint_filtration(b, cfg.cycle_degree)
        seed = [tuple(e) for e in iv.representative]
        tight = tighten_cycle(f, mid, seed, cfg.max_rounds)
        atomic_write_text(os.path.join(folder, f"{name}.csv"), cycle_to_csv(tight))
        if cfg.marked:
            atomic_write_text(os.path.join(folder, f"{name}_proximity.csv"),
                              proximity_to_csv(vertex_proximity(f, mid, tight, cfg.marked)))
        rows.append(",".join([name, format_float(iv.birth), format_float(iv.death),
                              format_float(mid), str(len(seed)), str(tight.length)]))
    dest = os.path.join(folder, "summary.csv")
    atomic_write_text(dest, "\n".join(rows) + "\n")
    return dest


# plots from stage files

def plot_file(kind: str, inputs: Sequence[str], dest: str, title: str = "",
              labels: Optional[Sequence[str]] = None, infinite_cap: Optional[float] = None) -> str:
    try:
        if kind == "barcode":
            rows = read_numeric_csv(inputs[0])
            fig = plotting.plot_barcode(rows.reshape(-1, 3) if rows.size else np.zeros((0, 3)),
                                        title, infinite_cap)
        elif kind == "landscape":
            ls = [load_landscape(p) for p in inputs]
            fig = plotting.plot_landscape([[(lv.t, lv.y) for lv in x.levels] for x in ls], title,
                                          list(labels) if labels else None)
        elif kind == "scree":
            a = read_numeric_csv(inputs[0])
            fig = plotting.plot_scree(a[:, 1] if a.size else [], title)
        elif kind == "null":
            null = read_numeric_csv(inputs[0]).reshape(-1)
            if null.size == 0:
                raise MalformedInput("empty null distribution")
            t_obs = float(null[0])
            p = float(np.sum(null >= t_obs - 1e-12 * abs(t_obs)) / null.size) if np.isfinite(t_obs) else None
            fig = plotting.plot_null_hist(null, t_obs, p, title=title)
        else:
            raise MalformedInput(f"unknown plot kind {kind!r}")
    except (IndexError, ValueError) as exc:
        if isinstance(exc, TopostatError):
            raise
        raise MalformedInput(f"cannot plot {inputs}: {exc}") from None
    plotting.save_svg(fig, dest)
    return dest


# run manifest

def versions() -> dict:
    import matplotlib
    import numba
    import scipy

    return {
        "topostat": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "matplotlib": matplotlib.__version__,
        "numba": numba.__version__,
    }


def write_manifest(out: str, cfg: RunConfig, stage: str, outputs: Sequence[str], wall: float) -> str:
    """Add ``stage`` to ``out/manifest.json``; wall times are the only
    run-dependent fields."""
    dest = os.path.join(out, "manifest.json")
    doc = {}
    if os.path.exists(dest):
        try:
            with open(dest) as fh:
                doc = json.load(fh)
        except (OSError, ValueError):
            doc = {}
    doc.update({
        "config_sha256": cfg.digest(),
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "random_generator": "numpy Philox (SeedSequence(seed, spawn_key=(group, index)))",
        "versions": versions(),
    })
    stages = doc.setdefault("stages", {})
    stages[stage] = {
        "outputs": sorted(os.path.relpath(p, out) for p in outputs),
        "wall_time_s": round(wall, 3),
    }
    atomic_write_text(dest, json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return dest


def input_pairs(cfg: RunConfig, out: str):
    """(name, path) pairs per group and the input kind for the configured source."""
    if cfg.source == "sample":
        named = sample_stage(cfg, out)
        half = len(named) // 2
        return [named[:half], named[half:]], "points"
    groups = []
    for g, (gname, paths) in enumerate(zip(cfg.group_names, (cfg.group1, cfg.group2))):
        groups.append([(f"{gname}_{i:02d}", p) for i, p in enumerate(paths)])
    kind = "points" if cfg.source == "points" else cfg.kind
    return groups, kind


def run_pipeline(cfg: RunConfig, out: str) -> dict:
    """Samples, barcodes, landscapes, tests, embedding, PCA, cycles and plots."""
    t_start = time.perf_counter()
    produced: List[str] = []

    def stage(name, fn, *args, **kwargs):
        t0 = time.perf_counter()
        try:
            result = fn(*args, **kwargs)
        except TopostatError as exc:
            raise StageError(name, exc) from exc
        log.info("stage %s done in %.2fs", name, time.perf_counter() - t0)
        return result

    groups, kind = stage("sample", input_pairs, cfg, out)
    names = cfg.group_names
    members = {names[g]: [n for n, _ in groups[g]] for g in range(2)}
    flat = groups[0] + groups[1]
    labels = [names[0]] * len(groups[0]) + [names[1]] * len(groups[1])
    produced += [p for _, p in flat if cfg.source == "sample"]

    barcodes = stage("persist", persist_stage, flat, kind, cfg, out)
    produced += barcodes
    bc_named = [(n, p) for (n, _), p in zip(flat, barcodes)]

    summary = {"tests": {}}
    per_degree: Dict[int, List[str]] = {}
    for degree in cfg.degrees:
        paths = stage("landscape", landscape_stage, bc_named, degree, cfg, out, members)
        produced += list(paths.values())
        per_degree[degree] = [paths[n] for n, _ in flat]
        g1 = [paths[n] for n in members[names[0]]]
        g2 = [paths[n] for n in members[names[1]]]
        report = stage("test", permutation_stage, g1, g2, f"deg{degree}", cfg, out, names)
        produced.append(report)
        summary["tests"][degree] = _read_report(report)
        if cfg.embed and len(flat) >= 3:
            produced.append(stage("embed", embed_stage, per_degree[degree], f"deg{degree}", cfg, out))

    if len(flat) >= 3 and per_degree:
        produced.append(stage("pca", pca_stage, per_degree, labels, cfg, out))

    if cfg.cycles and cfg.max_dim >= 2 and cfg.cycle_degree == 1:
        produced.append(stage("cycle", cycle_stage, flat, kind, cfg, out))

    if cfg.plots:
        produced += stage("plot", _pipeline_plots, cfg, out, groups, barcodes, members)

    write_manifest(out, cfg, "pipeline", produced, time.perf_counter() - t_start)
    return summary


def _pipeline_plots(cfg: RunConfig, out: str, groups, barcodes, members) -> List[str]:
    written = []
    pdir = os.path.join(out, "plots")
    bc_by_name = {stem(p): p for p in barcodes}
    for g, members_g in enumerate(groups):
        if members_g:
            name = members_g[0][0]
            written.append(plot_file("barcode", [bc_by_name[name]],
                                     os.path.join(pdir, f"barcode_{name}.svg"), name, infinite_cap=cfg.cap))
    names = cfg.group_names
    for degree in cfg.degrees:
        folder = os.path.join(out, "landscapes", f"deg{degree}")
        means = [os.path.join(folder, f"mean_{n}.json") for n in names]
        written.append(plot_file("landscape", means, os.path.join(pdir, f"mean_landscape_deg{degree}.svg"),
                                 f"mean landscapes, degree {degree}", labels=names))
        written.append(plot_file("null", [os.path.join(out, "tests", f"deg{degree}_null.csv")],
                                 os.path.join(pdir, f"null_deg{degree}.svg"), f"null distribution, degree {degree}"))
        scree = os.path.join(out, "embedding", f"deg{degree}_scree.csv")
        if os.path.exists(scree):
            written.append(plot_file("scree", [scree], os.path.join(pdir, f"scree_deg{degree}.svg"),
                                     f"Isomap scree, degree {degree}"))
    return written


def _read_report(path) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            if line.startswith("["):
                break
            if " = " in line:
                key, value = line.rstrip("\n").split(" = ", 1)
                out[key] = value
    return out
