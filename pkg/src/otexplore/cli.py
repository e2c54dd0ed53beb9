"""Command-line front end.

    otexplore --config scenario.yaml --seeds 0..9 --out runs/demo --svg
    otexplore --config preset:centralized --set N=400 --set t_e=200 --set M=1000
    otexplore --replay runs/demo/seed_0/snapshots.jsonl

Exit codes: 0 success, 1 runtime failure or failed replay check, 2 bad
arguments or config.
"""
import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import yaml

from . import config as config_mod
from .errors import ConfigError, OTExploreError
from .replay import CorruptStream, SnapshotWriter, replay
from .sim import Simulation

METRIC_FIELDS = ("seed", "mode", "termination_step", "detection_rate", "final_wub",
                 "initial_wub", "wall_ms")
AGENT_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
                "#e377c2", "#17becf")


@dataclass
class RunManifest:
    config_hash: str
    seeds: list
    output_dir: str
    files: list

    def write(self, path):
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2)
            fh.write("\n")


def parse_seeds(text):
    """``"7"`` -> [7]; ``"0..9"`` -> [0, ..., 9] (inclusive)."""
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split("..", 1))
        else:
            lo = hi = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed range {text!r}") from None
    if lo < 0 or hi < lo:
        raise argparse.ArgumentTypeError(f"bad seed range {text!r}")
    return list(range(lo, hi + 1))


def parse_override(text):
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    return key.strip(), yaml.safe_load(value)


def load_config(ref, overrides=()):
    """Load a config file (or ``preset:<name>``) and apply overrides."""
    if ref.startswith("preset:"):
        name = ref.split(":", 1)[1]
        if name not in config_mod.preset_names():
            raise ConfigError("config", f"unknown preset {name!r}; "
                                        f"choose from {config_mod.preset_names()}")
        raw = config_mod.to_dict(config_mod.preset(name))
    else:
        try:
            with open(ref) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError("config", f"cannot read {ref}: {exc.strerror}") from None
        try:
            raw = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError("<document>", f"not valid YAML: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("<root>", "config must be a mapping")
    raw = dict(raw)
    for key, value in overrides:
        raw[key] = value
    return config_mod.from_dict(raw)


def trajectories_svg(points, weights, trajectories, targets=None, domain=None, size=640):
    """Agent paths as polylines over the sample scatter (dot area ~ remaining weight)."""
    (x0, x1), (y0, y1) = domain
    span = max(x1 - x0, y1 - y0)
    scale = size / span
    w_px, h_px = (x1 - x0) * scale, (y1 - y0) * scale

    def px(p):
        return (p[0] - x0) * scale, (y1 - p[1]) * scale

    wmax = max(float(max(weights, default=0.0)), 1e-300)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w_px:.0f}" height="{h_px:.0f}" '
           f'viewBox="0 0 {w_px:.2f} {h_px:.2f}">',
           f'<rect width="{w_px:.2f}" height="{h_px:.2f}" fill="white" stroke="#999"/>',
           '<g fill="#888" fill-opacity="0.6">']
    for p, w in zip(points, weights):
        cx, cy = px(p)
        r = 0.6 + 1.8 * (w / wmax) ** 0.5
        out.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{r:.2f}"/>')
    out.append("</g>")
    if targets is not None and len(targets):
        out.append('<g stroke-width="1">')
        for p, hit in zip(targets.positions, targets.detected):
            cx, cy = px(p)
            color = "#000" if hit else "#e00"
            out.append(f'<path d="M{cx - 2:.2f} {cy - 2:.2f}L{cx + 2:.2f} {cy + 2:.2f}'
                       f'M{cx - 2:.2f} {cy + 2:.2f}L{cx + 2:.2f} {cy - 2:.2f}" stroke="{color}"/>')
        out.append("</g>")
    for k, path in enumerate(trajectories):
        color = AGENT_COLORS[k % len(AGENT_COLORS)]
        pts = " ".join("{:.2f},{:.2f}".format(*px(p)) for p in path)
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                   f'stroke-width="1" stroke-opacity="0.85"/>')
        sx, sy = px(path[0])
        out.append(f'<rect x="{sx - 3:.2f}" y="{sy - 3:.2f}" width="6" height="6" '
                   f'fill="{color}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def run_seed(cfg, seed, out_dir, svg=False):
    """Run one seed, write its directory, return (metrics row, relative file list)."""
    cfg = cfg.replace(seed=seed)
    seed_dir = os.path.join(out_dir, f"seed_{seed}")
    os.makedirs(seed_dir, exist_ok=True)
    sim = Simulation(cfg)
    snap_path = os.path.join(seed_dir, "snapshots.jsonl")
    with SnapshotWriter(snap_path, cfg, sim.points) as writer:
        _, metrics = sim.run(on_snapshot=writer, keep_snapshots=False)
    files = [os.path.relpath(snap_path, out_dir)]
    if svg:
        svg_path = os.path.join(seed_dir, "trajectories.svg")
        weights = sim.weight_views()
        with open(svg_path, "w") as fh:
            fh.write(trajectories_svg(sim.points, weights[0] if len(weights) == 1
                                      else [min(ws) for ws in zip(*weights)],
                                      [v.trajectory for v in sim.views], sim.targets,
                                      (cfg.domain_x, cfg.domain_y)))
        files.append(os.path.relpath(svg_path, out_dir))
    return asdict(metrics), files


def _fmt(value):
    if value is None:
        return "NA"
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def write_metrics(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(METRIC_FIELDS)
        for row in sorted(rows, key=lambda r: r["seed"]):
            w.writerow([_fmt(row[f]) for f in METRIC_FIELDS])


def run(config_ref, overrides=(), out_dir="otexplore-out", seeds=None,
        snapshot_every=None, svg=False, jobs=1, log=print):
    """Execute a config for every seed and write all artifacts; returns the manifest."""
    if snapshot_every is not None:
        overrides = [*overrides, ("snapshot_every", snapshot_every)]
    cfg = load_config(config_ref, overrides)
    seeds = [cfg.seed] if not seeds else list(seeds)
    os.makedirs(out_dir, exist_ok=True)
    cfg_path = os.path.join(out_dir, "config.yaml")
    with open(cfg_path, "w") as fh:
        fh.write(config_mod.dumps(cfg))

    if jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_seed, [cfg] * len(seeds), seeds,
                                    [out_dir] * len(seeds), [svg] * len(seeds)))
    else:
        results = []
        for s in seeds:
            results.append(run_seed(cfg, s, out_dir, svg))
            row = results[-1][0]
            log(f"seed {s}: T={row['termination_step']} "
                f"detection={_fmt(row['detection_rate'])} "
                f"W_UB {row['initial_wub']:.6g} -> {row['final_wub']:.6g} "
                f"({row['wall_ms']:.0f} ms)")

    metrics_path = os.path.join(out_dir, "metrics.csv")
    write_metrics(metrics_path, [r for r, _ in results])
    files = ["config.yaml", "metrics.csv"] + [f for _, fs in results for f in fs]
    manifest = RunManifest(config_mod.config_hash(cfg), seeds, os.path.abspath(out_dir),
                           files + ["manifest.json"])
    manifest.write(os.path.join(out_dir, "manifest.json"))
    return manifest


def build_parser():
    p = argparse.ArgumentParser(
        prog="otexplore",
        description="Optimal-transport multi-robot exploration simulator.")
    p.add_argument("--config", metavar="PATH",
                   help="scenario YAML file, or preset:<name> for a bundled scenario")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   type=parse_override, metavar="KEY=VALUE",
                   help="override one config field (repeatable)")
    seeds = p.add_mutually_exclusive_group()
    seeds.add_argument("--seed", type=int, metavar="N", help="run a single seed")
    seeds.add_argument("--seeds", type=parse_seeds, metavar="N..M",
                       help="run an inclusive seed range")
    p.add_argument("--out", default="otexplore-out", metavar="DIR", help="output directory")
    p.add_argument("--snapshot-every", type=int, metavar="K",
                   help="record a snapshot every K rounds (the final round is always kept)")
    p.add_argument("--svg", action="store_true", help="write trajectories.svg per seed")
    p.add_argument("--jobs", type=int, default=1, metavar="J",
                   help="run up to J seeds in parallel")
    p.add_argument("--replay", metavar="PATH", help="verify a snapshots.jsonl stream")
    p.add_argument("--list-presets", action="store_true", help="list bundled scenarios")
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.list_presets:
        for name in config_mod.preset_names():
            print(name)
        return 0

    if args.replay:
        if args.config:
            parser.error("--replay cannot be combined with --config")
        try:
            results = replay(args.replay)
        except CorruptStream as exc:
            print(f"error: corrupt snapshot stream: {exc}", file=sys.stderr)
            return 1
        for r in results:
            print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
        return 0 if all(r.passed for r in results) else 1

    if not args.config:
        parser.error("one of --config or --replay is required")
    if args.snapshot_every is not None and args.snapshot_every < 1:
        parser.error("--snapshot-every must be >= 1")
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    seeds = [args.seed] if args.seed is not None else args.seeds
    try:
        manifest = run(args.config, args.overrides, args.out, seeds, args.snapshot_every,
                       args.svg, args.jobs)
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return 2
    except (OTExploreError, OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(manifest.files)} files to {manifest.output_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
