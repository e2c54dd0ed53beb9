"""Snapshot streams: writing, reading and offline verification.

A stream is JSON lines. The first line is a header carrying the scenario
config and the initial sample positions; every further line is one
SnapshotRecord.
"""
import json
from typing import NamedTuple

import numpy as np

from . import config as config_mod
from .coordination import centralized_bound, decentralized_bounds
from .errors import OTExploreError
from .ot_core import BoundLedger, WeightedPointSet, upper_bound_single
from .planner import AgentView
from .sim import SnapshotRecord

FORMAT_VERSION = 1
WUB_TOL = 1e-9
MASS_TOL = 1e-9


class CorruptStream(OTExploreError):
    """The snapshot stream cannot be parsed."""


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def header_line(cfg, points):
    return json.dumps({"record": "header", "format": FORMAT_VERSION,
                       "config": config_mod.to_dict(cfg),
                       "samples": np.asarray(points).tolist()})


class SnapshotWriter:
    """Write a header then one record per line; usable as ``on_snapshot``."""

    def __init__(self, path, cfg, points):
        self._fh = open(path, "w")
        self._fh.write(header_line(cfg, points) + "\n")

    def __call__(self, rec):
        self._fh.write(rec.to_json() + "\n")

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_stream(path):
    """Return (cfg, samples, records); raises CorruptStream on any defect."""
    try:
        with open(path) as fh:
            lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    except (OSError, UnicodeDecodeError) as exc:
        raise CorruptStream(f"cannot read {path}: {exc}") from None
    if not lines:
        raise CorruptStream("empty stream")
    try:
        rows = [json.loads(ln) for ln in lines]
    except json.JSONDecodeError as exc:
        raise CorruptStream(f"invalid JSON: {exc}") from None
    head = rows[0]
    if not isinstance(head, dict) or head.get("record") != "header":
        raise CorruptStream("first line is not a header record")
    if head.get("format") != FORMAT_VERSION:
        raise CorruptStream(f"unsupported format {head.get('format')!r}")
    try:
        cfg = config_mod.from_dict(head["config"])
        samples = np.array(head["samples"], dtype=float).reshape(-1, 2)
        records = []
        for i, row in enumerate(rows[1:], start=2):
            if not isinstance(row, dict) or row.get("record") != "snapshot":
                raise CorruptStream(f"line {i}: not a snapshot record")
            records.append(SnapshotRecord.from_dict(row))
    except (KeyError, TypeError, ValueError, OTExploreError) as exc:
        if isinstance(exc, CorruptStream):
            raise
        raise CorruptStream(f"malformed content: {exc}") from None
    if not records:
        raise CorruptStream("no snapshot records")
    n_views = 1 if cfg.mode != "decentralized" else cfg.n_a
    for rec in records:
        if (len(rec.positions) != cfg.n_a or len(rec.weights) != n_views
                or any(len(w) != samples.shape[0] for w in rec.weights)):
            raise CorruptStream(f"step {rec.step}: record shape does not match config")
    return cfg, samples, records


def recompute_wub(cfg, samples, rec):
    """Bound(s) recomputed from one record's logged state."""
    points = np.array(rec.samples, dtype=float) if rec.samples is not None else samples
    views = [AgentView(k, pos, np.array(rec.weights[0 if len(rec.weights) == 1 else k]),
                       ledger=BoundLedger(led, steps))
             for k, (pos, led, steps) in enumerate(zip(rec.positions, rec.ledgers,
                                                       rec.ledger_steps))]
    if cfg.mode == "single":
        v = views[0]
        return [upper_bound_single(v.ledger, v.position, WeightedPointSet(points, v.weights))]
    if cfg.mode == "centralized":
        return [centralized_bound(views, views[0].weights, points, tight=cfg.tight_bound)]
    return decentralized_bounds(views, points, cfg.r_comm)


def _first_failure(items):
    for item in items:
        if item:
            return item
    return None


def check_stream(cfg, samples, records):
    """Run every replay check; returns a list of CheckResult."""
    out = []

    def add(name, failure, ok_detail):
        out.append(CheckResult(name, failure is None, failure or ok_detail))

    steps = [r.step for r in records]
    add("steps_increasing",
        _first_failure(f"step {b} follows {a}" for a, b in zip(steps, steps[1:]) if b <= a),
        f"{len(records)} records, steps {steps[0]}..{steps[-1]}")

    worst = 0.0
    fail = None
    for rec in records:
        fresh = recompute_wub(cfg, samples, rec)
        if len(fresh) != len(rec.wub):
            fail = f"step {rec.step}: {len(rec.wub)} logged values, expected {len(fresh)}"
            break
        errs = [abs(a - b) for a, b in zip(rec.wub, fresh)]
        worst = max(worst, *errs)
        bad = [k for k, e in enumerate(errs) if not e <= WUB_TOL]
        if bad:
            k = bad[0]
            fail = f"step {rec.step} agent {k}: logged {rec.wub[k]!r}, recomputed {fresh[k]!r}"
            break
    add("wub_consistency", fail, f"max |logged - recomputed| = {worst:.3g}")

    def weight_failures():
        for rec in records:
            for w in rec.weights:
                if min(w) < 0:
                    yield f"step {rec.step}: negative weight"
        for a, b in zip(records, records[1:]):
            for k, (wa, wb) in enumerate(zip(a.weights, b.weights)):
                if np.any(np.array(wb) > np.array(wa)):
                    j = int(np.argmax(np.array(wb) - np.array(wa)))
                    yield f"view {k} weight {j} rose between steps {a.step} and {b.step}"

    add("weight_monotonicity", _first_failure(weight_failures()),
        "weights non-increasing and nonnegative")

    def ledger_failures():
        for a, b in zip(records, records[1:]):
            for k in range(len(a.ledgers)):
                if b.ledgers[k] < a.ledgers[k] or b.ledger_steps[k] < a.ledger_steps[k]:
                    yield f"agent {k} ledger fell between steps {a.step} and {b.step}"

    add("ledger_monotonicity", _first_failure(ledger_failures()), "ledgers non-decreasing")

    def detection_failures():
        for a, b in zip(records, records[1:]):
            if b.detections < a.detections:
                yield f"detections fell between steps {a.step} and {b.step}"

    add("detection_monotonicity", _first_failure(detection_failures()),
        "detections non-decreasing")

    def mass_failures():
        M = cfg.M
        for rec in records:
            if rec.shortfall:
                continue
            total_steps = sum(rec.ledger_steps)
            sums = [float(np.sum(w)) for w in rec.weights]
            if cfg.mode != "decentralized":
                want = 1.0 - total_steps / M
                if abs(sums[0] - want) > MASS_TOL:
                    yield f"step {rec.step}: remaining mass {sums[0]!r}, expected {want!r}"
                continue
            for k, s in enumerate(sums):
                hi = 1.0 - rec.ledger_steps[k] / M + MASS_TOL
                lo = 1.0 - total_steps / M - MASS_TOL
                if not lo <= s <= hi:
                    yield f"step {rec.step} view {k}: mass {s!r} outside [{lo!r}, {hi!r}]"

    add("mass_conservation", _first_failure(mass_failures()),
        "remaining mass matches the deposits logged")
    return out


def replay(path):
    """Read and verify a stream; returns the list of CheckResult."""
    cfg, samples, records = read_stream(path)
    return check_stream(cfg, samples, records)
