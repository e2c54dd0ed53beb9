"""Single-agent receding-horizon planner.

Each step: grow a circle until it holds ``h`` positive-weight samples, score
every visiting order of those samples, head for the first sample of the
cheapest order, then deposit 1/M of robot mass from wherever the robot
actually ended up.
"""
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels
from .density import SampleEnsemble
from .errors import Exhausted, InvalidNeighborhood
from .ot_core import BoundLedger, TransportPlan

MAX_HORIZON = 6


@dataclass(frozen=True)
class PlannerParams:
    h: int = 3
    r0: float = 1.0
    delta: float = 1.0
    M: int = 1

    def __post_init__(self):
        if not 1 <= self.h <= MAX_HORIZON:
            raise ValueError(f"h must be in [1, {MAX_HORIZON}], got {self.h}")
        if not (self.r0 > 0 and self.delta > 0):
            raise ValueError("r0 and delta must be positive")
        if self.M < 1:
            raise ValueError("M must be >= 1")

    @classmethod
    def for_domain(cls, domain, M, h=3, r0=None, delta=None):
        """Defaults r0 = delta = diagonal / 100 when not given."""
        step = domain.diagonal / 100.0
        return cls(h=h, r0=step if r0 is None else r0,
                   delta=step if delta is None else delta, M=M)


@dataclass(frozen=True)
class Neighborhood:
    indices: tuple
    radius: float


class CandidatePath(NamedTuple):
    order: tuple
    cost: float


class DepositResult(NamedTuple):
    ensemble: SampleEnsemble
    cost: float
    plan: TransportPlan
    shortfall: bool


class StepInfo(NamedTuple):
    goal_index: int
    goal: np.ndarray
    arrived: np.ndarray
    radius: float
    deposit_cost: float
    shortfall: bool


@dataclass
class AgentView:
    """One agent's state: position, private weights, bound ledger and path."""

    id: int
    position: np.ndarray
    weights: np.ndarray
    ledger: BoundLedger = field(default_factory=BoundLedger)
    trajectory: list = field(default_factory=list)
    steps_taken: int = 0
    shortfall: bool = False
    halted: bool = False
    last_step: StepInfo = None
    # latest ledger heard from every other agent (decentralized bookkeeping)
    known_ledgers: dict = field(default_factory=dict)

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float).copy()
        if not self.trajectory:
            self.trajectory = [self.position.copy()]

    @classmethod
    def start(cls, agent_id, position, weights):
        return cls(agent_id, position, np.array(weights, dtype=float))


def growth_radius(dist, r0, delta):
    """Smallest r0 + n * delta (n >= 0 integer) that is >= ``dist``."""
    if dist <= r0:
        return r0
    n = max(0, math.ceil((dist - r0) / delta))
    while r0 + n * delta < dist:
        n += 1
    while n > 0 and r0 + (n - 1) * delta >= dist:
        n -= 1
    return r0 + n * delta


def find_neighborhood(pos, ens, params):
    """The h nearest positive-weight samples and the circle radius that holds them.

    Ties at the boundary go to the lower sample index. Fewer than h points
    are returned only when fewer remain.
    """
    x, y = float(pos[0]), float(pos[1])
    idx, dist = kernels.nearest_positive(ens.points, ens.weights, x, y, params.h)
    if len(idx) == 0:
        raise Exhausted("no positive-weight sample points remain")
    radius = growth_radius(float(dist[-1]), params.r0, params.delta)
    return Neighborhood(tuple(sorted(int(i) for i in idx)), radius)


def path_cost(pos, order, ens):
    """Leg length into each point divided by that point's weight, summed."""
    pts = ens.points
    w = ens.weights
    prev = np.asarray(pos, dtype=float)
    total = 0.0
    for j in order:
        total += float(np.hypot(*(pts[j] - prev))) / w[j]
        prev = pts[j]
    return total


def enumerate_candidates(pos, nbhd, ens):
    """Every visiting order of the neighbourhood, lexicographic in sample index."""
    idx = np.array(sorted(nbhd.indices), dtype=np.int64)
    if idx.size == 0:
        raise InvalidNeighborhood("empty neighbourhood")
    w = ens.weights[idx]
    if np.any(w <= 0):
        raise InvalidNeighborhood("neighbourhood contains a zero-weight point")
    perms, costs = kernels.get_backend("python").all_order_costs(
        float(pos[0]), float(pos[1]), np.ascontiguousarray(ens.points[idx]), w)
    return [CandidatePath(tuple(int(i) for i in idx[p]), float(c))
            for p, c in zip(perms, costs)]


def select_goal_index(candidates):
    best = min(candidates, key=lambda c: (c.cost, c.order))
    return best.order[0]


def select_goal(candidates, ens):
    return ens.points[select_goal_index(candidates)].copy()


def _best_first_index(pos, nbhd, ens):
    idx = np.array(nbhd.indices, dtype=np.int64)
    w = ens.weights[idx]
    if np.any(w <= 0):
        raise InvalidNeighborhood("neighbourhood contains a zero-weight point")
    order, _ = kernels.best_order(pos[0], pos[1], ens.points[idx], w)
    return int(idx[order[0]])


def deposit_weight(arrived_pos, ens, deposit_mass):
    """Deposit ``deposit_mass`` from ``arrived_pos`` into ``ens`` (weights updated in place)."""
    if not deposit_mass > 0:
        raise ValueError("deposit mass must be positive")
    x, y = float(arrived_pos[0]), float(arrived_pos[1])
    sinks, amounts, cost, shipped = kernels.greedy_deposit(ens.points, ens.weights, x, y,
                                                           deposit_mass)
    plan = TransportPlan(tuple((0, int(j), float(a)) for j, a in zip(sinks, amounts)),
                         "robot", "samples")
    return DepositResult(ens, float(cost), plan, deposit_mass - shipped > kernels.ZERO_TOL)


def plan_step(agent, ens, params, motion):
    """One planning step for ``agent`` against ``ens`` (whose weights it owns).

    Raises Exhausted when nothing is left to visit.
    """
    if agent.steps_taken >= params.M:
        raise ValueError(f"agent {agent.id} has spent its budget of {params.M} steps")
    pos = agent.position
    nbhd = find_neighborhood(pos, ens, params)
    goal_idx = _best_first_index(pos, nbhd, ens)
    goal = ens.points[goal_idx].copy()
    arrived = np.asarray(motion(pos, goal), dtype=float)
    if not np.all(np.isfinite(arrived)):
        raise ValueError("motion controller returned a non-finite position")
    dep = deposit_weight(arrived, ens, 1.0 / params.M)
    agent.position = arrived
    agent.weights = ens.weights
    agent.trajectory.append(arrived.copy())
    agent.steps_taken += 1
    agent.ledger = agent.ledger.append(dep.cost)
    agent.shortfall = agent.shortfall or dep.shortfall
    agent.last_step = StepInfo(goal_idx, goal, arrived.copy(), nbhd.radius, dep.cost,
                               dep.shortfall)
    return agent, ens
