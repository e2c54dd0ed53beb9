"""Multi-agent coordination: supervisory fusion and range-limited exchange."""
from dataclasses import dataclass

import numpy as np

from .density import SampleEnsemble
from .errors import Exhausted, InvalidViews
from .ot_core import WeightedPointSet, upper_bound_centralized, upper_bound_decentralized
from .planner import AgentView, plan_step

__all__ = [
    "AgentView", "CommConfig", "fuse_common_weights", "broadcast_common", "comm_pairs",
    "neighbors", "pairwise_exchange", "exchange_in_range", "centralized_round",
    "decentralized_round", "exchanged_views", "centralized_bound", "decentralized_bounds",
]


@dataclass(frozen=True)
class CommConfig:
    r_comm: float
    n_a: int
    t_e: int

    def __post_init__(self):
        if not self.r_comm > 0:
            raise ValueError("r_comm must be positive")
        if self.n_a < 1 or self.t_e < 1:
            raise ValueError("n_a and t_e must be >= 1")

    @property
    def M(self):
        return self.n_a * self.t_e


def fuse_common_weights(views):
    if not views:
        raise InvalidViews("no views to fuse")
    sizes = {v.weights.shape for v in views}
    if len(sizes) != 1:
        raise InvalidViews(f"views disagree on ensemble size: {sorted(sizes)}")
    return np.min(np.stack([v.weights for v in views]), axis=0)


def broadcast_common(views, common):
    for v in views:
        v.weights = np.array(common, dtype=float)
    return views


def comm_pairs(views, r_comm):
    """Unordered index pairs (k, q), k < q, with |x_k - x_q| <= r_comm."""
    pos = np.array([v.position for v in views]).reshape(-1, 2)
    out = []
    for k in range(len(pos)):
        d = np.sqrt(((pos[k + 1:] - pos[k]) ** 2).sum(axis=1))
        out.extend((k, k + 1 + int(q)) for q in np.flatnonzero(d <= r_comm))
    return out


def neighbors(views, r_comm):
    """For each view index, the indices of the *other* views in range."""
    nbrs = [[] for _ in views]
    for k, q in comm_pairs(views, r_comm):
        nbrs[k].append(q)
        nbrs[q].append(k)
    return nbrs


def _merge_ledgers(into, ledgers):
    for aid, led in ledgers.items():
        cur = into.get(aid)
        if cur is None or led.step_count > cur.step_count:
            into[aid] = led


def _heard(view):
    out = dict(view.known_ledgers)
    out[view.id] = view.ledger
    return out


def pairwise_exchange(view_k, view_q):
    """Both agents adopt the componentwise minimum and swap ledger histories."""
    if view_k.weights.shape != view_q.weights.shape:
        raise InvalidViews("views disagree on ensemble size")
    merged = np.minimum(view_k.weights, view_q.weights)
    hk, hq = _heard(view_k), _heard(view_q)
    view_k.weights = merged
    view_q.weights = merged.copy()
    _merge_ledgers(view_k.known_ledgers, hq)
    _merge_ledgers(view_q.known_ledgers, hk)
    view_k.known_ledgers.pop(view_k.id, None)
    view_q.known_ledgers.pop(view_q.id, None)
    return view_k, view_q


def exchange_in_range(views, r_comm):
    """Simultaneous one-hop exchange over every in-range pair.

    Each agent takes the minimum over its own and its neighbours' views as
    they stood before any exchange this round, so the result does not
    depend on agent order.
    """
    nbrs = neighbors(views, r_comm)
    before = [v.weights for v in views]
    heard = [_heard(v) for v in views]
    for k, v in enumerate(views):
        if not nbrs[k]:
            continue
        w = before[k]
        for q in nbrs[k]:
            w = np.minimum(w, before[q])
            _merge_ledgers(v.known_ledgers, heard[q])
        v.known_ledgers.pop(v.id, None)
        v.weights = np.array(w)
    return nbrs


def centralized_round(views, ens_common, params, motion, simultaneous=False):
    """One supervisory round.

    Agents take their turn in id order; each starts from the common weights
    as left by the agents before it this round, deposits into its own copy,
    and the supervisor then fuses (componentwise min) and broadcasts.
    With ``simultaneous`` every agent instead plans against the round-start
    weights, so co-located agents can pick the same goal and the min rule
    keeps only the larger of their deposits.
    Raises Exhausted when the common weights are already all zero.
    """
    start = ens_common.weights
    if not np.any(start > 0):
        raise Exhausted("common weights depleted")
    current = start
    for v in views:
        v.weights = (start if simultaneous else current).copy()
        try:
            plan_step(v, SampleEnsemble(ens_common.points, v.weights, ens_common.epoch),
                      params, motion)
        except Exhausted:
            pass
        current = v.weights
    common = fuse_common_weights(views)
    broadcast_common(views, common)
    ens_common.weights = common
    return views, ens_common


def decentralized_round(views, points, params, motion, r_comm):
    """One round of range-limited exploration.

    On its turn (id order) an agent first exchanges with every agent in
    range (both sides adopt the componentwise min), then plans on its
    private view. Agents whose view is depleted or whose M-step budget is
    spent halt in place but still answer exchanges.
    """
    for k, v in enumerate(views):
        for q, other in enumerate(views):
            if q != k and _dist(v.position, other.position) <= r_comm:
                pairwise_exchange(v, other)
        if v.halted:
            continue
        if v.steps_taken >= params.M or not np.any(v.weights > 0):
            v.halted = True
            continue
        plan_step(v, SampleEnsemble(points, v.weights), params, motion)
    return views


def _dist(a, b):
    return float(np.hypot(a[0] - b[0], a[1] - b[1]))


def centralized_bound(views, common, points, tight=False):
    sinks = WeightedPointSet(points, common)
    return upper_bound_centralized([v.ledger for v in views], [v.position for v in views],
                                   sinks, tight=tight)


def exchanged_views(views, r_comm, nbrs=None):
    """The weights each agent would hold after exchanging with everyone now in range."""
    if nbrs is None:
        nbrs = neighbors(views, r_comm)
    out = []
    for k, v in enumerate(views):
        w = v.weights
        for q in nbrs[k]:
            w = np.minimum(w, views[q].weights)
        out.append(np.array(w))
    return out


def decentralized_bounds(views, points, r_comm, nbrs=None):
    """Per-agent bound over the agent and the others currently in range.

    The residual uses the agent's post-exchange view (see exchanged_views).
    """
    if nbrs is None:
        nbrs = neighbors(views, r_comm)
    out = []
    for k, (v, w) in enumerate(zip(views, exchanged_views(views, r_comm, nbrs))):
        others = [views[q] for q in nbrs[k]]
        out.append(upper_bound_decentralized(
            v, [o.ledger for o in others], [o.position for o in others],
            WeightedPointSet(points, w)))
    return out
