"""Command-line entry point: ``surfmink <subcommand> [flags]``.

Every subcommand writes ``<name>.csv`` (plus a ``.meta.json`` sidecar) and
its SVG plots into the output directory. ``SURFMINK_OUT`` overrides
``--out``.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path

from . import experiments as ex
from .errors import SurfMinkError, UsageError
from .fileio import ExperimentConfig, _int_list, emit_table, load_contour
from .plotting import emit_svg_plot

log = logging.getLogger("surfmink")

COMMANDS = ("regular-polygons", "torus-sweep", "convergence", "levelset-study",
            "flower-sweep", "contour", "transport-demo")


def _float_list(text):
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if part:
            out.append(float(part[:-2]) * math.pi if part.endswith("pi") else float(part))
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="surfmink",
                                 description="Shape measures of closed curves on surfaces.")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat 'key = value' config file")
    common.add_argument("--out", default=None, help="output directory (default: .)")
    common.add_argument("--p", default=None, help="ranks, e.g. '2..6' or '2,4,6'")
    common.add_argument("--levels", default=None, help="refinement levels or q values")
    common.add_argument("--scheme", choices=("geodesic", "line"), default=None)
    common.add_argument("--passes", type=int, default=None, help="contour smoothing passes")
    common.add_argument("--workers", type=int, default=None, help="worker processes")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("-v", "--verbose", action="store_true")

    sub.add_parser("regular-polygons", parents=[common],
                   help="regular polygons on a geodesic circle").add_argument(
        "--surface", default=None, help="sphere[:r] or plane")
    t = sub.add_parser("torus-sweep", parents=[common], help="geodesic triangles on a torus")
    t.add_argument("--theta2", default=None,
                   help="comma list of theta2 values, 'pi' suffix allowed")
    c = sub.add_parser("convergence", parents=[common], help="polygon consistency study")
    c.add_argument("--surface", default=None)
    c.add_argument("--flower", default=None, help="r0,a,omega")
    ls = sub.add_parser("levelset-study", parents=[common],
                        help="zero-levelset chains on refined sphere meshes")
    ls.add_argument("--flower", default=None, help="r0,a,omega")
    fs = sub.add_parser("flower-sweep", parents=[common], help="flower parameter sweeps")
    fs.add_argument("which", choices=sorted(ex.SWEEPS))
    fs.add_argument("--values", default=None, help="comma list, 'pi' suffix allowed")
    ct = sub.add_parser("contour", parents=[common], help="shape measures of a contour CSV")
    ct.add_argument("path", nargs="?", type=Path, default=None)
    sub.add_parser("transport-demo", parents=[common],
                   help="parallel versus turned transport on the octant triangle")
    return ap


def _settings(args) -> ExperimentConfig:
    items = {}
    if args.config is not None:
        if not args.config.exists():
            raise UsageError(f"config file {args.config} does not exist")
        cfg = ExperimentConfig.load(args.config)
        items.update({k: v for k, v in vars(cfg).items() if k != "extra"})
        items.update(cfg.extra)
    for key in ("out", "p", "levels", "scheme", "passes", "workers", "seed"):
        value = getattr(args, key)
        if value is not None:
            items[key] = value
    for key in ("surface", "flower", "theta2", "values", "which"):
        value = getattr(args, key, None)
        if value is not None:
            items[key] = value
    if getattr(args, "path", None) is not None:
        items["contour"] = str(args.path)
    if os.environ.get("SURFMINK_OUT"):
        items["out"] = os.environ["SURFMINK_OUT"]
    items["experiment"] = args.command
    try:
        return ExperimentConfig.from_mapping(items)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _ints(cfg, key, default):
    value = getattr(cfg, key, None) if key in ("p", "levels") else cfg.extra.get(key)
    if value in (None, [], ""):
        return list(default)
    return value if isinstance(value, list) else _int_list(value)


def _triple(cfg, default):
    text = cfg.extra.get("flower")
    if text is None:
        return default
    vals = _float_list(text) if isinstance(text, str) else list(text)
    if len(vals) != 3:
        raise UsageError("--flower needs r0,a,omega")
    return tuple(vals)


def run(command: str, cfg: ExperimentConfig) -> ex.Report:
    if command == "regular-polygons":
        surface = cfg.surface or cfg.extra.get("surface") or "sphere"
        qs = cfg.levels or list(range(3, 7))
        return ex.cmd_regular_polygons(qs, _ints(cfg, "p", range(1, 7)), surface)
    if command == "torus-sweep":
        theta = cfg.extra.get("theta2")
        return ex.cmd_torus_sweep(_float_list(theta) if theta else None,
                                  ps=_ints(cfg, "p", range(2, 7)))
    if command == "convergence":
        ps = _ints(cfg, "p", [3])
        if len(ps) != 1:
            raise UsageError("convergence takes a single rank --p")
        return ex.cmd_convergence(cfg.scheme, cfg.surface or cfg.extra.get("surface")
                                  or "ellipsoid:1.6,1.3,1.0",
                                  _triple(cfg, (0.7, 0.2, 3)),
                                  cfg.levels or [4, 16, 64, 256, 1024], ps[0])
    if command == "levelset-study":
        return ex.cmd_levelset_study(cfg.levels or list(range(1, 7)),
                                     _triple(cfg, (0.5, 0.1, 4)),
                                     _ints(cfg, "p", (2, 4, 6)), workers=cfg.workers)
    if command == "flower-sweep":
        values = cfg.extra.get("values")
        return ex.cmd_flower_sweep(cfg.extra.get("which", "frequency"),
                                   _float_list(values) if values else None,
                                   _ints(cfg, "p", range(2, 11)), workers=cfg.workers)
    if command == "contour":
        path = cfg.extra.get("contour")
        if path is None:
            raise UsageError("contour needs a CSV path")
        pts, nrm = load_contour(path)
        return ex.cmd_contour(pts, nrm, cfg.passes, _ints(cfg, "p", range(2, 7)))
    if command == "transport-demo":
        return ex.cmd_transport_demo()
    raise UsageError(f"unknown command {command!r}")


def write_report(report: ex.Report, out: Path, cfg: ExperimentConfig) -> list:
    report.table.meta.setdefault("config_hash", cfg.config_hash())
    report.table.meta.setdefault("experiment", report.name)
    written = [emit_table(report.table, out / f"{report.name}.csv")]
    for plot in report.plots:
        plot = dict(plot)
        written.append(emit_svg_plot(path=out / plot.pop("filename"), **plot))
    return written


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _settings(args)
        report = run(args.command, cfg)
        for path in write_report(report, Path(cfg.out), cfg):
            log.info("wrote %s", path)
    except UsageError as exc:
        print(f"surfmink {args.command}: {exc}", file=sys.stderr)
        return 2
    except (SurfMinkError, ValueError) as exc:
        print(f"surfmink {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
