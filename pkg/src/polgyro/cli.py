"""``polgyro`` command line: run, sweep, metrology, analyze, presets.

Exit codes: 0 success, 1 configuration or usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import itertools
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import yaml

from polgyro import presets
from polgyro.analysis import NoSignalError, angular_profile, estimate_rotation, lobe_radius
from polgyro.config import ConfigError, RunConfig, _load_with_lines, apply_overrides, merge_dicts, set_path
from polgyro.experiment import analyze_field, run_experiment
from polgyro.field import read_snapshot
from polgyro.sagnac import GyroConfig, comparison_table, default_configs
from polgyro.solver import BlowUpError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2

log = logging.getLogger("polgyro")


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1 (2 is reserved for numerical failure)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _base_dict(args) -> tuple[dict, dict]:
    """Config dictionary (plus YAML line map) from --preset and/or --config."""
    data: dict = {}
    lines: dict = {}
    if args.preset:
        data = presets.preset_dict(args.preset)
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc}") from None
        loaded, lines = _load_with_lines(text)
        if loaded is not None and not isinstance(loaded, dict):
            raise ConfigError("top level of a config file must be a mapping")
        if data:  # preset first, file values on top
            data = merge_dicts(data, loaded or {})
        else:
            data = loaded or {}
    return data, lines


def load_config(args) -> RunConfig:
    data, lines = _base_dict(args)
    overrides = list(args.override or [])
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        overrides.append(f"landscape.potential.seed={args.seed}")
    if args.out:
        overrides.append(f"output.dir={args.out}")
    if overrides:
        data = apply_overrides(data, overrides)
        keys = [o.partition("=")[0].strip() for o in overrides]
        lines = {p: n for p, n in lines.items() if not any(p == k or p.startswith(k + ".") for k in keys)}
    return RunConfig.from_dict(data, lines)


def _print_summary(summary: dict) -> None:
    sys.stdout.write(yaml.safe_dump(summary, sort_keys=False))


def cmd_run(args) -> int:
    cfg = load_config(args)
    try:
        summary = run_experiment(cfg)
    except BlowUpError as exc:
        print(f"numerical failure: {exc}; last good field written to {Path(cfg.output.dir) / 'last_good.pgyr'}",
              file=sys.stderr)
        return EXIT_NUMERIC
    _print_summary(summary)
    return EXIT_OK


def _parse_axis(text: str) -> tuple[str, list]:
    if "=" not in text:
        raise ConfigError(f"sweep axis {text!r} must look like path=v1,v2,...")
    key, _, raw = text.partition("=")
    values = yaml.safe_load(f"[{raw}]")
    if not values:
        raise ConfigError(f"sweep axis {key!r} has no values")
    return key.strip(), values


def _flatten(prefix: str, value, out: dict) -> None:
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    else:
        out[prefix] = value


def _sweep_worker(job):
    index, data, out_dir = job
    cfg = RunConfig.from_dict(data)
    try:
        return index, run_experiment(cfg, out_dir)
    except BlowUpError as exc:
        return index, {"name": cfg.name, "status": "blow-up", "message": str(exc)}


def sweep(base: dict, axes: list[tuple[str, list]], out_root, workers: int = 1) -> list[dict]:
    """Run the Cartesian product of ``axes`` over ``base``; returns one row per run."""
    out_root = Path(out_root)
    names = [k for k, _ in axes]
    combos = list(itertools.product(*[v for _, v in axes])) if axes else [()]
    jobs = []
    for i, combo in enumerate(combos):
        data = copy.deepcopy(base)
        for k, v in zip(names, combo):
            set_path(data, k, v)
        RunConfig.from_dict(data)  # fail fast on a bad combination
        jobs.append((i, data, str(out_root / f"run_{i:03d}")))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = dict(pool.map(_sweep_worker, jobs))
    else:
        results = dict(map(_sweep_worker, jobs))
    rows = []
    for i, combo in enumerate(combos):
        row = {"run": i, **dict(zip(names, combo))}
        flat: dict = {}
        _flatten("", results[i], flat)
        row.update({k: v for k, v in flat.items() if k not in ("runtime_s",)})
        rows.append(row)
    out_root.mkdir(parents=True, exist_ok=True)
    columns: list[str] = []
    for row in rows:
        columns += [k for k in row if k not in columns]
    with open(out_root / "sweep.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns)
        w.writeheader()
        w.writerows(rows)
    return rows


def cmd_sweep(args) -> int:
    base = load_config(args).to_dict()
    axes = [_parse_axis(a) for a in args.axis or []]
    out_root = args.out or base["output"]["dir"]
    rows = sweep(base, axes, out_root, args.workers)
    for row in rows:
        print(", ".join(f"{k}={v}" for k, v in row.items() if k in ("run", "status") or k in dict(axes)
                        or k.startswith("lobes.count") or k == "steady_state"))
    print(f"wrote {Path(out_root) / 'sweep.csv'}")
    return EXIT_NUMERIC if any(r.get("status") != "ok" for r in rows) else EXIT_OK


def _load_gyros(path) -> list[GyroConfig]:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read gyroscope config {path}: {exc}") from None
    entries = data.get("gyroscopes") if isinstance(data, dict) else data
    if not isinstance(entries, list):
        raise ConfigError("gyroscope config must be a list or have a 'gyroscopes' list")
    out = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise ConfigError("entry must be a mapping", f"gyroscopes.{i}")
        try:
            out.append(GyroConfig.from_dict(entry))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), f"gyroscopes.{i}") from None
    return out


def cmd_metrology(args) -> int:
    configs = _load_gyros(args.config) if args.config else default_configs()
    table = comparison_table(configs)
    text = table.to_csv() if args.format == "csv" else table.to_text()
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_analyze(args) -> int:
    targets = {}
    for item in args.target or []:
        name, _, raw = item.partition("=")
        k = yaml.safe_load(f"[{raw}]") if raw else None
        if not name or not k or len(k) not in (1, 2):
            raise ConfigError(f"--target {item!r} must look like name=kx[,ky]")
        targets[name] = [float(k[0]), float(k[1]) if len(k) == 2 else 0.0]
    results = []
    for path in args.snapshots:
        try:
            f = read_snapshot(path)
        except (OSError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        res = {"snapshot": str(path), **analyze_field(f, args.nbins, args.radius, targets)}
        results.append(res)
    if args.reference:
        if args.l is None:
            raise ConfigError("--reference needs --l")
        ref = read_snapshot(args.reference)
        r = args.radius if args.radius is not None else lobe_radius(ref)
        before = angular_profile(ref, r, args.nbins)
        for res, path in zip(results, args.snapshots):
            after = angular_profile(read_snapshot(path), r, args.nbins)
            try:
                res["rotation"] = estimate_rotation(before, after, args.l)
            except NoSignalError as exc:
                res["rotation"] = None
                res["rotation_error"] = str(exc)
    sys.stdout.write(yaml.safe_dump(results, sort_keys=False))
    return EXIT_OK


def cmd_presets(args) -> int:
    if args.show:
        sys.stdout.write(presets.preset(args.show).to_yaml())
        return EXIT_OK
    width = max(len(n) for n in presets.PRESET_NAMES)
    for name in presets.PRESET_NAMES:
        print(f"{name.ljust(width)}  {presets.describe(name)}")
    return EXIT_OK


def _add_config_flags(p) -> None:
    p.add_argument("--config", metavar="PATH", help="YAML run configuration")
    p.add_argument("--preset", metavar="NAME", choices=presets.PRESET_NAMES, help="named experiment")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--override", metavar="KEY=VALUE", action="append",
                   help="set a config field, e.g. solver.t_end=5 (repeatable)")
    p.add_argument("--seed", type=int, metavar="U64", help="disorder seed")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="polgyro", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run one configuration")
    _add_config_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run the Cartesian product of parameter axes")
    _add_config_flags(p)
    p.add_argument("--axis", action="append", metavar="PATH=V1,V2,...", help="sweep axis (repeatable)")
    p.add_argument("--workers", type=int, default=1, metavar="N", help="parallel worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("metrology", help="print the gyroscope comparison table")
    p.add_argument("--config", metavar="PATH", help="YAML list of gyroscope configs")
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.add_argument("--out", metavar="FILE", help="also write the table to FILE")
    p.set_defaults(func=cmd_metrology)

    p = sub.add_parser("analyze", help="analyse existing PGYR snapshots")
    p.add_argument("snapshots", nargs="+", metavar="SNAPSHOT")
    p.add_argument("--nbins", type=int, default=360)
    p.add_argument("--radius", type=float, help="profile radius (default: densest ring)")
    p.add_argument("--target", action="append", metavar="NAME=KX[,KY]", help="momentum target (periodic grids)")
    p.add_argument("--reference", metavar="SNAPSHOT", help="estimate lobe rotation relative to this snapshot")
    p.add_argument("--l", type=int, help="winding number for rotation estimates")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("presets", help="list named experiments")
    p.add_argument("--show", metavar="NAME", choices=presets.PRESET_NAMES, help="print a preset's config")
    p.set_defaults(func=cmd_presets)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "workers", 1) < 1:
        parser.error("--workers must be >= 1")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
