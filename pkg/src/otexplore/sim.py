"""Scenario execution: targets, sensing, snapshots and the run drivers."""
import json
import time
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import kernels
from .coordination import (centralized_bound, centralized_round, decentralized_bounds,
                           decentralized_round, fuse_common_weights)
from .density import (make_rng, random_walk_step_samples, random_walk_step_targets,
                      sample_mixture)
from .errors import Exhausted, Undefined
from .motion import FirstOrderController, FirstOrderParams
from .ot_core import WeightedPointSet, upper_bound_single
from .planner import AgentView, PlannerParams, plan_step


@dataclass
class Target:
    position: np.ndarray
    detected: bool = False
    detection_step: Optional[int] = None


@dataclass
class TargetSet:
    """Array form of a target population."""

    positions: np.ndarray
    detected: np.ndarray = None
    detection_step: np.ndarray = None

    def __post_init__(self):
        self.positions = kernels.as_points(self.positions)
        n = self.positions.shape[0]
        if self.detected is None:
            self.detected = np.zeros(n, dtype=bool)
        if self.detection_step is None:
            self.detection_step = np.full(n, -1, dtype=np.int64)

    def __len__(self):
        return self.positions.shape[0]

    @property
    def n_detected(self):
        return int(self.detected.sum())

    def copy(self):
        return TargetSet(self.positions.copy(), self.detected.copy(),
                         self.detection_step.copy())

    def as_targets(self):
        return [Target(p.copy(), bool(d), int(s) if d else None)
                for p, d, s in zip(self.positions, self.detected, self.detection_step)]


def _segment_distances(points, a, b):
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return kernels.distances(points, a[0], a[1])
    s = np.clip(((points - a) @ ab) / denom, 0.0, 1.0)
    proj = a + s[:, None] * ab
    d = points - proj
    return np.sqrt((d * d).sum(axis=1))


def detect_targets(agent_positions, targets, r_sensing, step=0, segments=None):
    """Mark undetected targets within ``r_sensing`` (inclusive) of any agent.

    With ``segments`` (a list of (start, end) per agent) the whole motion
    segment is swept instead of its end point. Returns a new TargetSet.
    """
    if not r_sensing > 0:
        raise ValueError("r_sensing must be positive")
    out = targets.copy()
    todo = np.flatnonzero(~out.detected)
    if todo.size == 0:
        return out
    pts = np.ascontiguousarray(out.positions[todo])
    if segments is None:
        hit = kernels.within_range(pts, agent_positions, r_sensing)
    else:
        hit = np.zeros(todo.size, dtype=bool)
        for a, b in segments:
            hit |= _segment_distances(pts, np.asarray(a, float), np.asarray(b, float)) <= r_sensing
    newly = todo[hit]
    out.detected[newly] = True
    out.detection_step[newly] = step
    return out


def detection_rate(targets):
    if len(targets) == 0:
        raise Undefined("detection rate is undefined without targets")
    return targets.n_detected / len(targets)


@dataclass
class SnapshotRecord:
    step: int
    positions: list
    weights: list  # one vector (shared) or one per agent (decentralized)
    wub: list  # one value, or one per agent (decentralized)
    team_wub: float
    ledgers: list
    ledger_steps: list
    detections: int
    shortfall: bool = False
    samples: Optional[list] = None

    def to_json(self):
        d = {"record": "snapshot", **asdict(self)}
        if d["samples"] is None:
            del d["samples"]
        return json.dumps(d)

    @classmethod
    def from_dict(cls, d):
        d = {k: v for k, v in d.items() if k != "record"}
        return cls(**d)


@dataclass
class Metrics:
    seed: int
    mode: str
    termination_step: int
    detection_rate: Optional[float]
    final_wub: float
    initial_wub: float
    wall_ms: float
    detected: int = 0
    n_targets: int = 0
    shortfall: bool = False


def initial_positions(cfg):
    if cfg.initial_positions == "random":
        return cfg.domain.uniform(make_rng(cfg.seed, "initial_positions"), cfg.n_a)
    return np.array(cfg.initial_positions, dtype=float).reshape(-1, 2)


class Simulation:
    """Round-by-round engine behind :func:`run_scenario`.

    Round order: (decentralized: exchange) plan, move, deposit, sense,
    (centralized: fuse and broadcast), then the random walks.
    """

    def __init__(self, cfg):
        self.cfg = cfg
        mix = cfg.mixture
        self.ens = sample_mixture(mix, cfg.N, make_rng(cfg.seed, "sampling"))
        if cfg.N_h > 0:
            tpos, _ = mix.sample(make_rng(cfg.seed, "targets"), cfg.N_h)
        else:
            tpos = np.empty((0, 2))
        self.targets = TargetSet(tpos)
        self.target_rng = make_rng(cfg.seed, "target_walk")
        self.sample_rng = make_rng(cfg.seed, "sample_walk")
        self.params = PlannerParams.for_domain(cfg.domain, cfg.M, h=cfg.h, r0=cfg.r0,
                                               delta=cfg.delta)
        self.motion = FirstOrderController(FirstOrderParams(cfg.u_max, cfg.dt))
        starts = initial_positions(cfg)
        if cfg.mode == "single":
            self.views = [AgentView(0, starts[0], self.ens.weights)]
        else:
            self.views = [AgentView(k, starts[k], self.ens.weights.copy())
                          for k in range(cfg.n_a)]
        self.t = 0
        self.done = False
        self.shortfall = False
        self._sense(self.positions)

    @property
    def positions(self):
        return np.array([v.position for v in self.views])

    @property
    def points(self):
        return self.ens.points

    def _sense(self, positions, segments=None):
        if len(self.targets):
            self.targets = detect_targets(positions, self.targets, self.cfg.r_sensing,
                                          self.t, segments)

    def wub(self):
        """Current bound(s): a one-element list, or one per agent when decentralized."""
        cfg = self.cfg
        if cfg.mode == "single":
            v = self.views[0]
            return [upper_bound_single(v.ledger, v.position,
                                       WeightedPointSet(self.points, self.ens.weights))]
        if cfg.mode == "centralized":
            return [centralized_bound(self.views, self.ens.weights, self.points,
                                      tight=cfg.tight_bound)]
        return decentralized_bounds(self.views, self.points, cfg.r_comm)

    def team_wub(self):
        """Run-level bound: the per-agent figure for single/centralized runs; for
        decentralized runs every ledger plus every agent's residual against the
        fused (componentwise min) knowledge of the whole team."""
        if self.cfg.mode != "decentralized":
            return self.wub()[0]
        fused = fuse_common_weights(self.views)
        return centralized_bound(self.views, fused, self.points)

    @property
    def termination_step(self):
        if self.cfg.mode == "decentralized":
            return max(v.steps_taken for v in self.views)
        return self.t

    def weight_views(self):
        if self.cfg.mode == "decentralized":
            return [v.weights for v in self.views]
        return [self.ens.weights]

    def snapshot(self):
        include_samples = self.cfg.time_varying
        return SnapshotRecord(
            step=self.t,
            positions=[[float(x), float(y)] for x, y in self.positions],
            weights=[w.tolist() for w in self.weight_views()],
            wub=list(self.wub()),
            team_wub=float(self.team_wub()),
            ledgers=[v.ledger.accumulated_deposit_cost for v in self.views],
            ledger_steps=[v.ledger.step_count for v in self.views],
            detections=self.targets.n_detected,
            shortfall=self.shortfall,
            samples=self.points.tolist() if include_samples else None,
        )

    def _finished(self):
        cfg = self.cfg
        if cfg.mode == "single":
            return self.t >= cfg.M or not np.any(self.ens.weights > 0)
        if cfg.mode == "centralized":
            return self.t >= cfg.effective_steps or not np.any(self.ens.weights > 0)
        return all(v.halted or v.steps_taken >= cfg.M or not np.any(v.weights > 0)
                   for v in self.views)

    def step(self):
        """Advance one round; returns False once the run has finished."""
        if self.done or self._finished():
            self.done = True
            return False
        cfg = self.cfg
        before = self.positions
        taken = [v.steps_taken for v in self.views]
        try:
            if cfg.mode == "single":
                plan_step(self.views[0], self.ens, self.params, self.motion)
            elif cfg.mode == "centralized":
                centralized_round(self.views, self.ens, self.params, self.motion,
                                  simultaneous=cfg.simultaneous_rounds)
            else:
                decentralized_round(self.views, self.points, self.params, self.motion,
                                    cfg.r_comm)
        except Exhausted:
            self.done = True
            return False
        if [v.steps_taken for v in self.views] == taken:
            # every agent halted on exchange alone; no motion, so no round
            self.done = True
            return False
        self.t += 1
        self.shortfall = self.shortfall or any(v.shortfall for v in self.views)
        after = self.positions
        segments = list(zip(before, after)) if cfg.segment_sensing else None
        self._sense(after, segments)
        self.done = self._finished()
        return True

    def run(self, on_snapshot=None, on_round=None, keep_snapshots=True):
        """Run to completion; see :func:`run_scenario`."""
        cfg = self.cfg
        start = time.perf_counter()
        snapshots = []

        def emit(rec):
            if on_snapshot is not None:
                on_snapshot(rec)
            if keep_snapshots:
                snapshots.append(rec)

        rec = self.snapshot()
        initial_wub = rec.team_wub
        emit(rec)
        while self.step():
            if on_round is not None:
                on_round(self)
            if self.done or self.t % cfg.snapshot_every == 0:
                rec = self.snapshot()
                emit(rec)
            self.walk()
        if rec.step != self.t:
            rec = self.snapshot()
            emit(rec)
        wall_ms = (time.perf_counter() - start) * 1000.0
        n_t = len(self.targets)
        metrics = Metrics(
            seed=cfg.seed, mode=cfg.mode, termination_step=self.termination_step,
            detection_rate=detection_rate(self.targets) if n_t else None,
            final_wub=float(rec.team_wub), initial_wub=float(initial_wub), wall_ms=wall_ms,
            detected=self.targets.n_detected, n_targets=n_t, shortfall=self.shortfall,
        )
        return snapshots, metrics

    def walk(self):
        """Random-walk the targets (undetected only) and, if time-varying, the samples."""
        cfg = self.cfg
        if cfg.v > 0 and len(self.targets):
            self.targets.positions = random_walk_step_targets(
                self.targets.positions, cfg.v, self.target_rng, frozen=self.targets.detected)
        if cfg.time_varying and cfg.v > 0:
            self.ens = random_walk_step_samples(self.ens, cfg.v, self.sample_rng)
            if cfg.mode == "single":
                self.views[0].weights = self.ens.weights


def run_scenario(cfg, on_snapshot=None, on_round=None, keep_snapshots=True):
    """Run ``cfg`` to completion and return (snapshots, metrics).

    Snapshots are taken at t = 0, every ``cfg.snapshot_every`` rounds and at
    the end; each goes to ``on_snapshot`` and, with ``keep_snapshots``, into
    the returned list. ``on_round(sim)`` is called after every round, before
    the random walks.
    """
    return Simulation(cfg).run(on_snapshot, on_round, keep_snapshots)
