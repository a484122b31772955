"""Run configuration: an INI file with one section per stage.

Every key has a default, listed in ``DEFAULTS``; the resolved values are
echoed into each run manifest.
"""

from __future__ import annotations

import configparser
import glob
import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field
from typing import List, Optional

from .errors import ConfigError

DEFAULTS = {
    "run": {
        "seed": "2016",
        "threads": "1",
    },
    "input": {
        # sample: draw disks and annuli; matrices: CSV matrices; points: CSV point clouds
        "source": "sample",
        "kind": "correlation",
        "group1": "",
        "group2": "",
        "group1_name": "group1",
        "group2_name": "group2",
    },
    "sample": {
        "n_points": "150",
        "n_per_group": "10",
        "disk_radius": "1.0",
        "annulus_inner": "0.5",
        "annulus_outer": "1.0",
    },
    "rips": {
        "max_dim": "2",
        "threshold": "1.0",
        "capacity": "50000000",
    },
    "landscape": {
        # blank: use the Rips threshold
        "infinite_cap": "",
        "t_min": "0.0",
        # blank: use infinite_cap
        "t_max": "",
        "n_grid": "50",
    },
    "test": {
        "degrees": "0, 1",
        "exhaustive_limit": "1000000",
        "n_resamples": "100000",
    },
    "embed": {
        "enabled": "true",
        "k": "7",
        "epsilon": "",
        "target_dim": "3",
        "p": "2",
    },
    "cycle": {
        "enabled": "true",
        "degree": "1",
        "max_rounds": "100000",
        "marked": "",
    },
    "plot": {
        "enabled": "true",
    },
}

HELP = """configuration file (INI); sections and defaults:
""" + "\n".join(
    f"  [{sec}] " + ", ".join(f"{k}={v or '(auto)'}" for k, v in keys.items())
    for sec, keys in DEFAULTS.items()
)


@dataclass
class RunConfig:
    seed: int = 2016
    threads: int = 1
    source: str = "sample"
    kind: str = "correlation"
    group1: List[str] = field(default_factory=list)
    group2: List[str] = field(default_factory=list)
    group1_name: str = "group1"
    group2_name: str = "group2"
    n_points: int = 150
    n_per_group: int = 10
    disk_radius: float = 1.0
    annulus_inner: float = 0.5
    annulus_outer: float = 1.0
    max_dim: int = 2
    threshold: float = 1.0
    capacity: int = 50_000_000
    infinite_cap: Optional[float] = None
    t_min: float = 0.0
    t_max: Optional[float] = None
    n_grid: int = 50
    degrees: List[int] = field(default_factory=lambda: [0, 1])
    exhaustive_limit: int = 1_000_000
    n_resamples: int = 100_000
    embed: bool = True
    k: Optional[int] = 7
    epsilon: Optional[float] = None
    target_dim: int = 3
    p: float = 2.0
    cycles: bool = True
    cycle_degree: int = 1
    max_rounds: int = 100_000
    marked: List[int] = field(default_factory=list)
    plots: bool = True

    @property
    def cap(self) -> float:
        return self.threshold if self.infinite_cap is None else self.infinite_cap

    @property
    def grid_max(self) -> float:
        return self.cap if self.t_max is None else self.t_max

    @property
    def group_names(self):
        if self.source == "sample":
            return ("disk", "annulus")
        return (self.group1_name, self.group2_name)

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()

    def validate(self) -> "RunConfig":
        if self.source not in ("sample", "matrices", "points"):
            raise ConfigError(f"[input] source must be sample, matrices or points, not {self.source!r}")
        if self.source == "matrices" and self.kind not in ("correlation", "distance"):
            raise ConfigError(f"[input] kind must be correlation or distance, not {self.kind!r}")
        if self.source != "sample":
            for name, paths in (("group1", self.group1), ("group2", self.group2)):
                if not paths:
                    raise ConfigError(f"[input] {name} matches no files")
                for path in paths:
                    if not os.path.isfile(path):
                        raise ConfigError(f"[input] {name}: {path} does not exist")
        checks = [
            (self.threads >= 1, "[run] threads must be >= 1"),
            (self.n_points >= 1, "[sample] n_points must be >= 1"),
            (self.n_per_group >= 2, "[sample] n_per_group must be >= 2"),
            (0 <= self.annulus_inner < self.annulus_outer, "[sample] need 0 <= annulus_inner < annulus_outer"),
            (self.disk_radius > 0, "[sample] disk_radius must be positive"),
            (self.max_dim >= 1, "[rips] max_dim must be >= 1"),
            (self.threshold >= 0 and math.isfinite(self.threshold), "[rips] threshold must be finite and >= 0"),
            (self.capacity >= 1, "[rips] capacity must be >= 1"),
            (self.cap >= 0, "[landscape] infinite_cap must be >= 0"),
            (self.t_min < self.grid_max, "[landscape] need t_min < t_max"),
            (self.n_grid >= 2, "[landscape] n_grid must be >= 2"),
            (all(0 <= d < self.max_dim for d in self.degrees),
             "[test] degrees must lie in 0..max_dim-1 (degree 2 needs max_dim = 3)"),
            (self.exhaustive_limit >= 1, "[test] exhaustive_limit must be >= 1"),
            (self.n_resamples >= 2, "[test] n_resamples must be >= 2"),
            (self.target_dim >= 1, "[embed] target_dim must be >= 1"),
            ((self.k is None) != (self.epsilon is None), "[embed] set exactly one of k and epsilon"),
            (self.p >= 1, "[embed] p must be >= 1"),
            (self.max_rounds >= 0, "[cycle] max_rounds must be >= 0"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        return self


def _split(value: str) -> List[str]:
    return [v.strip() for v in value.replace("\n", ",").split(",") if v.strip()]


def _expand(patterns: List[str], base: str) -> List[str]:
    out = []
    for pat in patterns:
        path = pat if os.path.isabs(pat) else os.path.join(base, pat)
        hits = sorted(glob.glob(path))
        out.extend(hits if hits else [path])
    return out


def load_config(path: Optional[str] = None, text: Optional[str] = None) -> RunConfig:
    """Read an INI config; unknown sections or keys are errors."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.read_dict(DEFAULTS)
    base = os.getcwd()
    try:
        if path is not None:
            with open(path) as fh:
                parser.read_file(fh, source=path)
            base = os.path.dirname(os.path.abspath(path))
        elif text is not None:
            parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    for sec in parser.sections():
        if sec not in DEFAULTS:
            raise ConfigError(f"unknown section [{sec}]")
        for key in parser[sec]:
            if key not in DEFAULTS[sec]:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")

    def get(sec, key):
        return parser.get(sec, key).strip()

    def opt_float(sec, key):
        v = get(sec, key)
        return float(v) if v else None

    try:
        k = get("embed", "k")
        eps = opt_float("embed", "epsilon")
        cfg = RunConfig(
            seed=int(get("run", "seed")),
            threads=int(get("run", "threads")),
            source=get("input", "source").lower(),
            kind=get("input", "kind").lower(),
            group1=_expand(_split(get("input", "group1")), base),
            group2=_expand(_split(get("input", "group2")), base),
            group1_name=get("input", "group1_name"),
            group2_name=get("input", "group2_name"),
            n_points=int(get("sample", "n_points")),
            n_per_group=int(get("sample", "n_per_group")),
            disk_radius=float(get("sample", "disk_radius")),
            annulus_inner=float(get("sample", "annulus_inner")),
            annulus_outer=float(get("sample", "annulus_outer")),
            max_dim=int(get("rips", "max_dim")),
            threshold=float(get("rips", "threshold")),
            capacity=int(get("rips", "capacity")),
            infinite_cap=opt_float("landscape", "infinite_cap"),
            t_min=float(get("landscape", "t_min")),
            t_max=opt_float("landscape", "t_max"),
            n_grid=int(get("landscape", "n_grid")),
            degrees=[int(d) for d in _split(get("test", "degrees"))],
            exhaustive_limit=int(get("test", "exhaustive_limit")),
            n_resamples=int(get("test", "n_resamples")),
            embed=parser.getboolean("embed", "enabled"),
            k=None if (eps is not None and not k) or not k else int(k),
            epsilon=eps,
            target_dim=int(get("embed", "target_dim")),
            p=float(get("embed", "p")),
            cycles=parser.getboolean("cycle", "enabled"),
            cycle_degree=int(get("cycle", "degree")),
            max_rounds=int(get("cycle", "max_rounds")),
            marked=[int(v) for v in _split(get("cycle", "marked"))],
            plots=parser.getboolean("plot", "enabled"),
        )
    except ValueError as exc:
        raise ConfigError(f"bad config value: {exc}") from None
    return cfg
