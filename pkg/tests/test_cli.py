import json
import math
import os

import numpy as np
import pytest

from topostat import cli
from topostat.config import load_config
from topostat.errors import ConfigError

SMALL = """
[run]
seed = 5
[sample]
n_points = 40
n_per_group = 3
[embed]
k = 5
"""


def _run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture
def square_csv(tmp_path):
    p = tmp_path / "square.csv"
    p.write_text("x,y\n0,0\n1,0\n0,1\n1,1\n")
    return str(p)


def test_persist_square(tmp_path, square_csv, capsys):
    out = tmp_path / "out"
    assert _run("persist", "--out", out, "--threshold", 2, square_csv) == 0
    rows = (out / "barcodes" / "square.csv").read_text().strip().split("\n")
    assert rows[0] == "degree,birth,death"
    deg1 = [r.split(",") for r in rows[1:] if r.startswith("1,")]
    assert len(deg1) == 1
    assert float(deg1[0][1]) == 1.0 and float(deg1[0][2]) == math.sqrt(2)
    manifest = json.loads((out / "manifest.json").read_text())
    assert "persist" in manifest["stages"] and manifest["seed"] == 2016


def test_identical_groups_give_p_one(tmp_path, capsys):
    vals = tmp_path / "v.csv"
    vals.write_text("0.5\n0.25\n0.75\n")
    assert _run("test", "--out", tmp_path / "o", "--group1", vals, "--group2", vals) == 0
    text = capsys.readouterr().out
    assert "p_value = 1" in text


def test_usage_errors(tmp_path, capsys):
    assert _run("persist", "--out", tmp_path, tmp_path / "missing.csv") == 1
    err = capsys.readouterr().err.strip()
    assert err.startswith("topostat: error stage=persist type=UsageError message=")
    assert _run("nonsense") == 1
    bad = tmp_path / "bad.ini"
    bad.write_text("[rips]\nthreshhold = 1\n")
    assert _run("sample", "--out", tmp_path, "--config", bad) == 1
    assert "ConfigError" in capsys.readouterr().err


def test_bad_matrix_reports_stage(tmp_path, capsys):
    m = tmp_path / "m.csv"
    m.write_text("1,2\n2,1\n")
    assert _run("persist", "--out", tmp_path / "o", "--kind", "correlation", m) == 1
    err = capsys.readouterr().err
    assert "type=OutOfRangeEntry" in err


def test_plot_empty_barcode(tmp_path):
    b = tmp_path / "empty.csv"
    b.write_text("degree,birth,death\n")
    assert _run("plot", "barcode", b, "--out", tmp_path) == 0
    svg = (tmp_path / "barcode.svg").read_text()
    assert "no intervals" in svg


def test_config_validation():
    with pytest.raises(ConfigError):
        load_config(text="[nosuch]\n")
    with pytest.raises(ConfigError):
        load_config(text="[test]\ndegrees = 2\n").validate()
    cfg = load_config(text="[rips]\nmax_dim = 3\n[test]\ndegrees = 0, 1, 2\n").validate()
    assert cfg.degrees == [0, 1, 2] and cfg.cap == 1.0
    assert load_config(cli.bundled_config()).validate().n_points == 150


def test_small_pipeline_is_deterministic(tmp_path):
    cfg = tmp_path / "small.ini"
    cfg.write_text(SMALL)
    trees = []
    for name, threads in (("a", 1), ("b", 2)):
        out = tmp_path / name
        assert _run("pipeline", "--config", cfg, "--out", out, "--threads", threads) == 0
        files = {}
        for root, _, names in os.walk(out):
            for n in names:
                p = os.path.join(root, n)
                files[os.path.relpath(p, out)] = open(p, "rb").read()
        trees.append(files)
    a, b = trees
    assert set(a) == set(b)
    for rel in a:
        if rel == "manifest.json":
            continue
        assert a[rel] == b[rel], rel
    for key in ("tests/deg1.txt", "plots/null_deg1.svg", "pca/separability.txt",
                "landscapes/deg1/mean_disk.json", "cycles/summary.csv"):
        assert key in a
    report = a["tests/deg1.txt"].decode()
    assert "m = 10" in report


def test_plot_malformed_input(tmp_path, capsys):
    b = tmp_path / "junk.csv"
    b.write_text("degree,birth,death\n1,oops\n")
    assert _run("plot", "barcode", b, "--out", tmp_path) == 1
    assert "type=MalformedInput" in capsys.readouterr().err
