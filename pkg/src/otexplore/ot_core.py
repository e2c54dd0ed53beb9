"""Discrete optimal transport: exact transportation solver, greedy
single-source plans and the running Wasserstein upper bounds."""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import EmptyInput, InvalidMass, InvalidPlan, MassMismatch

MASS_TOL = 1e-9
ZERO_TOL = kernels.ZERO_TOL


@dataclass(frozen=True)
class WeightedPointSet:
    points: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        pts = kernels.as_points(self.points)
        m = kernels.as_vector(self.masses)
        if pts.shape[0] != m.shape[0]:
            raise InvalidMass(f"{pts.shape[0]} points but {m.shape[0]} masses")
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise InvalidMass("masses must be finite and nonnegative")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "masses", m)

    def __len__(self):
        return self.masses.shape[0]

    @property
    def total(self):
        return float(self.masses.sum())

    def assert_probability(self):
        if abs(self.total - 1.0) > MASS_TOL:
            raise MassMismatch(f"total mass {self.total!r} is not 1")


@dataclass(frozen=True)
class TransportPlan:
    """Sparse plan; ``entries`` holds (source index, sink index, mass) with mass > 0."""

    entries: tuple
    source_ref: str = "mu"
    sink_ref: str = "nu"

    @classmethod
    def from_dense(cls, flow, source_ref="mu", sink_ref="nu"):
        rows, cols = np.nonzero(flow > 0.0)
        entries = tuple((int(i), int(j), float(flow[i, j])) for i, j in zip(rows, cols))
        return cls(entries, source_ref, sink_ref)

    def __len__(self):
        return len(self.entries)

    def to_dense(self, n_sources, n_sinks):
        out = np.zeros((n_sources, n_sinks))
        for i, j, m in self.entries:
            if not (0 <= i < n_sources and 0 <= j < n_sinks):
                raise InvalidPlan(f"entry ({i}, {j}) outside {n_sources}x{n_sinks}")
            out[i, j] += m
        return out

    def row_sums(self, n_sources):
        out = np.zeros(n_sources)
        for i, _, m in self.entries:
            out[i] += m
        return out

    def col_sums(self, n_sinks):
        out = np.zeros(n_sinks)
        for _, j, m in self.entries:
            out[j] += m
        return out

    def is_feasible(self, mu, nu, tol=1e-12):
        """Row/column sums do not exceed the marginals."""
        if any(m <= 0 for _, _, m in self.entries):
            return False
        return bool(np.all(self.row_sums(len(mu)) <= mu.masses + tol)
                    and np.all(self.col_sums(len(nu)) <= nu.masses + tol))


@dataclass(frozen=True)
class BoundLedger:
    """Running sum of per-step optimal deposit costs."""

    accumulated_deposit_cost: float = 0.0
    step_count: int = 0

    def append(self, deposit_cost):
        if deposit_cost < 0:
            raise InvalidMass(f"negative deposit cost {deposit_cost!r}")
        return BoundLedger(self.accumulated_deposit_cost + float(deposit_cost),
                           self.step_count + 1)


class GreedyResult(NamedTuple):
    plan: TransportPlan
    deposit_cost: float
    sink_masses: np.ndarray
    shortfall: bool


class ExactSolution(NamedTuple):
    plan: TransportPlan
    cost: float
    flow: np.ndarray
    row_potentials: np.ndarray
    col_potentials: np.ndarray


def cost_matrix(src, dst, p=1):
    d = np.sqrt(((src[:, None, :] - dst[None, :, :]) ** 2).sum(axis=-1))
    return d if p == 1 else d ** p


def _northwest_corner(a, b):
    m, n = len(a), len(b)
    flow = np.zeros((m, n))
    basis = np.zeros((m, n), dtype=bool)
    ra, rb = a.copy(), b.copy()
    i = j = 0
    while i < m and j < n:
        x = min(ra[i], rb[j])
        flow[i, j] = x
        basis[i, j] = True
        ra[i] -= x
        rb[j] -= x
        if i == m - 1 and j == n - 1:
            break
        if j == n - 1 or (i < m - 1 and ra[i] <= rb[j]):
            i += 1
        else:
            j += 1
    return flow, basis


def _potentials(C, basis):
    m, n = C.shape
    u = np.full(m, np.nan)
    v = np.full(n, np.nan)
    u[0] = 0.0
    stack = [(0, True)]
    while stack:
        k, is_row = stack.pop()
        if is_row:
            for j in np.flatnonzero(basis[k]):
                if np.isnan(v[j]):
                    v[j] = C[k, j] - u[k]
                    stack.append((j, False))
        else:
            for i in np.flatnonzero(basis[:, k]):
                if np.isnan(u[i]):
                    u[i] = C[i, k] - v[k]
                    stack.append((i, True))
    return u, v


def _tree_path(basis, i0, j0):
    """Cells on the basis-tree path from row ``i0`` to column ``j0``."""
    m, n = basis.shape
    parent = {("r", i0): None}
    queue = [("r", i0)]
    target = ("c", j0)
    while queue:
        node = queue.pop(0)
        if node == target:
            break
        kind, k = node
        nbrs = ([("c", j) for j in np.flatnonzero(basis[k])] if kind == "r"
                else [("r", i) for i in np.flatnonzero(basis[:, k])])
        for nb in nbrs:
            if nb not in parent:
                parent[nb] = node
                queue.append(nb)
    cells = []
    node = target
    while parent[node] is not None:
        prev = parent[node]
        cells.append((prev[1], node[1]) if prev[0] == "r" else (node[1], prev[1]))
        node = prev
    cells.reverse()
    return cells


def transportation_simplex(a, b, C, max_iter=None):
    """Solve min <C, F> s.t. F 1 = a, F^T 1 = b, F >= 0 (with sum a == sum b).

    Returns (flow, u, v) where u_i + v_j = C_ij on basic cells and
    C_ij - u_i - v_j >= 0 everywhere at optimality.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    C = np.asarray(C, dtype=float)
    m, n = C.shape
    flow, basis = _northwest_corner(a, b)
    tol = 1e-12 * max(1.0, float(np.abs(C).max(initial=0.0)))
    if max_iter is None:
        max_iter = 50 * (m + n) * max(m, n) + 100
    bland_after = max_iter // 2
    for it in range(max_iter):
        u, v = _potentials(C, basis)
        red = C - u[:, None] - v[None, :]
        red[basis] = 0.0
        if it < bland_after:
            flat = int(np.argmin(red))
            if red.flat[flat] >= -tol:
                return flow, u, v
        else:
            neg = np.flatnonzero(red.ravel() < -tol)
            if neg.size == 0:
                return flow, u, v
            flat = int(neg[0])
        ei, ej = divmod(flat, n)
        cells = _tree_path(basis, ei, ej)
        minus = cells[0::2]
        plus = cells[1::2]
        theta = max(0.0, min(flow[c] for c in minus))
        for c in minus:
            if flow[c] < 0.0:
                flow[c] = 0.0
        leaving = min((c for c in minus if flow[c] == theta))
        flow[ei, ej] += theta
        for c in minus:
            flow[c] -= theta
        for c in plus:
            flow[c] += theta
        flow[leaving] = 0.0
        basis[leaving] = False
        basis[ei, ej] = True
    raise RuntimeError("transportation simplex did not converge")


def solve_exact(mu, nu, p=1):
    """Exact OT between two balanced weighted point sets, with dual potentials."""
    if len(mu) == 0 or len(nu) == 0:
        raise EmptyInput("both point sets must be non-empty")
    gap = mu.total - nu.total
    if abs(gap) > MASS_TOL:
        raise MassMismatch(f"source mass {mu.total!r} != sink mass {nu.total!r}")
    a = mu.masses.copy()
    b = nu.masses.copy()
    # absorb the sub-tolerance imbalance so the tree stays feasible
    if gap > 0:
        b[int(np.argmax(b))] += gap
    elif gap < 0:
        a[int(np.argmax(a))] -= gap
    C = cost_matrix(mu.points, nu.points, p)
    flow, u, v = transportation_simplex(a, b, C)
    flow[flow < 0.0] = 0.0
    plan = TransportPlan.from_dense(flow)
    return ExactSolution(plan, float((flow * C).sum()), flow, u, v)


def solve_transportation_exact(mu, nu, p=1):
    """Optimal plan and cost sum(pi_ij * |x_i - y_j|^p) for balanced ``mu``, ``nu``."""
    sol = solve_exact(mu, nu, p)
    return sol.plan, sol.cost


def single_source_greedy_plan(source_pos, source_mass, sinks):
    """Ship ``source_mass`` from one point to the nearest non-empty sinks first.

    This is optimal for a single source. Sinks are not modified; the
    decremented masses are returned. ``shortfall`` is set when the sinks
    held less than ``source_mass``.
    """
    if source_mass < 0 or not np.isfinite(source_mass):
        raise InvalidMass(f"source mass {source_mass!r}")
    masses = sinks.masses.copy()
    x, y = np.asarray(source_pos, dtype=float)
    idx, amt, cost, shipped = kernels.greedy_deposit(sinks.points, masses, x, y,
                                                     source_mass)
    plan = TransportPlan(tuple((0, int(j), float(m)) for j, m in zip(idx, amt)),
                         "source", "sinks")
    return GreedyResult(plan, float(cost), masses, source_mass - shipped > ZERO_TOL)


def plan_cost(plan, mu, nu, p=1):
    total = 0.0
    for i, j, m in plan.entries:
        if not (0 <= i < len(mu) and 0 <= j < len(nu)):
            raise InvalidPlan(f"entry ({i}, {j}) out of range")
        d = float(np.hypot(*(mu.points[i] - nu.points[j])))
        total += m * (d if p == 1 else d ** p)
    return total


def residual_cost(position, sinks):
    """sum_j n(y_j) * |x - y_j| for the mass still held at ``position``."""
    x, y = np.asarray(position, dtype=float)
    return float(kernels.weighted_distance_sum(sinks.points, sinks.masses, x, y))


def upper_bound_single(ledger, current_pos, remaining_sinks):
    return ledger.accumulated_deposit_cost + residual_cost(current_pos, remaining_sinks)


def upper_bound_centralized(ledgers, positions, common_weights, tight=False):
    """Team bound: every agent's ledger plus every agent's residual term.

    The residual multiplies the full common weight by each agent's distance,
    so it counts the remaining mass once per agent. ``tight=True`` divides
    the residual by the number of agents instead.
    """
    if len(ledgers) == 0:
        raise EmptyInput("no agents")
    if len(ledgers) != len(positions):
        raise InvalidMass("one position per ledger required")
    total = sum(led.accumulated_deposit_cost for led in ledgers)
    resid = sum(residual_cost(pos, common_weights) for pos in positions)
    if tight:
        resid /= len(ledgers)
    return total + resid


def upper_bound_decentralized(agent, neighbor_ledgers, neighbor_positions, agent_weights):
    """Bound seen by one agent over itself and its in-range neighbours.

    ``neighbor_*`` list the *other* agents currently in range; the agent's
    own ledger and position are always included. Residual terms use the
    querying agent's weight view.
    """
    ledgers = [agent.ledger, *neighbor_ledgers]
    positions = [agent.position, *neighbor_positions]
    total = sum(led.accumulated_deposit_cost for led in ledgers)
    return total + sum(residual_cost(pos, agent_weights) for pos in positions)


def assumption_one_sources(past_positions, current_pos, M, steps=None):
    """Robot-point measure with past points at 1/M and the rest stacked at x_t.

    ``past_positions`` are x_1..x_t; the unspent (M - t)/M sits at
    ``current_pos``.
    """
    past = kernels.as_points(past_positions) if len(past_positions) else np.empty((0, 2))
    t = past.shape[0] if steps is None else steps
    pts = np.vstack([past, np.asarray(current_pos, dtype=float).reshape(1, 2)])
    masses = np.append(np.full(past.shape[0], 1.0 / M), (M - t) / M)
    return WeightedPointSet(pts, np.clip(masses, 0.0, None))
