"""Command line interface.

Exit status is 0 on success, 1 for user errors (bad input, bad config) and 2
for internal errors.  Failures print one line to stderr of the form

    topostat: error stage=<stage> type=<ExceptionName> message=<text>
"""

from __future__ import annotations

import argparse
import configparser
import logging
import os
import sys
import time
from importlib import resources

from . import __version__, stages
from .config import HELP, load_config
from .errors import TopostatError

EXIT_OK, EXIT_USER, EXIT_INTERNAL = 0, 1, 2


class UsageError(TopostatError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def bundled_config() -> str:
    return str(resources.files("topostat").joinpath("configs", "disk_annulus.ini"))


def _common(p, out_required=True):
    p.add_argument("--config", help="INI run configuration (see `topostat --help`)")
    p.add_argument("--out", required=out_required, help="output directory")
    p.add_argument("--seed", type=int, help="override [run] seed")
    p.add_argument("--threads", type=int, help="override [run] threads; results do not depend on it")


def _rips_args(p):
    p.add_argument("--kind", choices=stages.INPUT_KINDS, default="points",
                   help="what the input CSV files hold (default: points)")
    p.add_argument("--max-dim", type=int, help="override [rips] max_dim (default 2)")
    p.add_argument("--threshold", type=float, help="override [rips] threshold (default 1.0)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="topostat", description=__doc__.split("\n")[0],
                     epilog=HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"topostat {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", help="draw the disk and annulus point clouds")
    _common(p)

    p = sub.add_parser("rips", help="dump Rips filtrations and simplex counts")
    _common(p)
    _rips_args(p)
    p.add_argument("inputs", nargs="+")

    p = sub.add_parser("persist", help="barcodes of Rips filtrations")
    _common(p)
    _rips_args(p)
    p.add_argument("inputs", nargs="+")

    p = sub.add_parser("landscape", help="persistence landscapes from barcode CSVs")
    _common(p)
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--infinite-cap", type=float, help="death assigned to essential classes")
    p.add_argument("--n-grid", type=int)
    p.add_argument("--mean", metavar="NAME", help="also write the mean landscape as mean_NAME")
    p.add_argument("inputs", nargs="+")

    p = sub.add_parser("test", help="exact permutation test on landscape integrals")
    _common(p)
    p.add_argument("--group1", nargs="+", required=True,
                   help="landscape JSON files, or CSV files of numbers")
    p.add_argument("--group2", nargs="+", required=True)
    p.add_argument("--name", default="test")
    p.add_argument("--names", nargs=2, default=("group1", "group2"), metavar=("G1", "G2"))

    p = sub.add_parser("embed", help="Isomap of a distance CSV or of landscape JSONs")
    _common(p)
    p.add_argument("--name", default="embedding")
    p.add_argument("--k", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--target-dim", type=int)
    p.add_argument("inputs", nargs="+")

    p = sub.add_parser("cycle", help="tighten the most persistent loop of each input")
    _common(p)
    _rips_args(p)
    p.add_argument("--marked", type=int, nargs="*", help="vertices for the proximity report")
    p.add_argument("inputs", nargs="+")

    p = sub.add_parser("plot", help="SVG figure from a stage file")
    _common(p)
    p.add_argument("kind", choices=("barcode", "landscape", "scree", "null"))
    p.add_argument("inputs", nargs="+")
    p.add_argument("--name", help="file name without extension (default: kind)")
    p.add_argument("--title", default="")
    p.add_argument("--labels", nargs="*")

    p = sub.add_parser("pipeline", help="run every stage from one config")
    _common(p)
    return parser


def _config(args):
    cfg = load_config(args.config) if args.config else load_config()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "threads", None) is not None:
        cfg.threads = args.threads
    if getattr(args, "max_dim", None) is not None:
        cfg.max_dim = args.max_dim
    if getattr(args, "threshold", None) is not None:
        cfg.threshold = args.threshold
    if getattr(args, "infinite_cap", None) is not None:
        cfg.infinite_cap = args.infinite_cap
    if getattr(args, "n_grid", None) is not None:
        cfg.n_grid = args.n_grid
    if getattr(args, "k", None) is not None:
        cfg.k, cfg.epsilon = args.k, None
    if getattr(args, "epsilon", None) is not None:
        cfg.k, cfg.epsilon = None, args.epsilon
    if getattr(args, "target_dim", None) is not None:
        cfg.target_dim = args.target_dim
    if getattr(args, "marked", None):
        cfg.marked = list(args.marked)
    if args.command != "pipeline":
        # group files only matter to the pipeline
        cfg.source = "sample"
    return cfg.validate()


def _named(paths):
    names = [stages.stem(p) for p in paths]
    if len(set(names)) != len(names):
        raise UsageError("input file names must be distinct")
    for p in paths:
        if not os.path.isfile(p):
            raise UsageError(f"no such file: {p}")
    return list(zip(names, paths))


def run(args) -> list:
    cfg = _config(args)
    out = args.out
    cmd = args.command
    if cmd == "sample":
        return [p for _, p in stages.sample_stage(cfg, out)]
    if cmd == "rips":
        return stages.rips_stage(_named(args.inputs), args.kind, cfg, out)
    if cmd == "persist":
        written = stages.persist_stage(_named(args.inputs), args.kind, cfg, out)
        for path in written:
            print(path)
        return written
    if cmd == "landscape":
        named = _named(args.inputs)
        groups = {args.mean: [n for n, _ in named]} if args.mean else None
        return list(stages.landscape_stage(named, args.degree, cfg, out, groups).values())
    if cmd == "test":
        for path in args.group1 + args.group2:
            if not os.path.isfile(path):
                raise UsageError(f"no such file: {path}")
        report = stages.permutation_stage(args.group1, args.group2, args.name, cfg, out, tuple(args.names))
        with open(report) as fh:
            sys.stdout.write(fh.read().split("\n[")[0])
        return [report]
    if cmd == "embed":
        return [stages.embed_stage(args.inputs, args.name, cfg, out)]
    if cmd == "cycle":
        return [stages.cycle_stage(_named(args.inputs), args.kind, cfg, out)]
    if cmd == "plot":
        name = args.name or args.kind
        dest = os.path.join(out, f"{name}.svg")
        return [stages.plot_file(args.kind, args.inputs, dest, args.title, args.labels)]
    if cmd == "pipeline":
        if not args.config:
            args.config = bundled_config()
            cfg = _config(args)
        summary = stages.run_pipeline(cfg, out)
        for degree, rep in summary["tests"].items():
            print(f"degree {degree}: t_obs = {rep.get('t_obs')}  m = {rep.get('m')}  p = {rep.get('p_value')}")
        return []
    raise UsageError(f"unknown command {cmd}")


def main(argv=None) -> int:
    parser = build_parser()
    stage = "cli"
    try:
        args = parser.parse_args(argv)
        stage = args.command
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        t0 = time.perf_counter()
        cfg_out = run(args)
        if args.command != "pipeline":
            stages.write_manifest(args.out, _config(args), args.command, cfg_out, time.perf_counter() - t0)
        return EXIT_OK
    except stages.StageError as exc:
        _report(exc.stage, exc.cause)
        return EXIT_USER
    except (TopostatError, OSError, configparser.Error) as exc:
        _report(stage, exc)
        return EXIT_USER
    except Exception as exc:  # noqa: BLE001 - last-resort exit code
        _report(stage, exc)
        return EXIT_INTERNAL


def _report(stage, exc):
    message = str(exc).replace("\n", " ")
    print(f"topostat: error stage={stage} type={type(exc).__name__} message={message}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
