"""Pure numpy implementations of the per-step kernels.

Every function here has a twin in ``_ckernels.pyx`` with the same signature
and the same floating-point evaluation order, so both backends produce the
same trajectories for a given seed.
"""
from itertools import permutations

import numpy as np

_PERM_CACHE = {}


def distances(points, x, y):
    dx = points[:, 0] - x
    dy = points[:, 1] - y
    return np.sqrt(dx * dx + dy * dy)


def nearest_positive(points, weights, x, y, k):
    """Indices and distances of the ``k`` nearest positive-weight points.

    Ordered by (distance, index); fewer than ``k`` are returned when fewer
    positive points exist.
    """
    idx = np.flatnonzero(weights > 0.0)
    if idx.size == 0 or k <= 0:
        return np.empty(0, dtype=np.int64), np.empty(0)
    d = distances(points[idx], x, y)
    if idx.size > k:
        kth = np.partition(d, k - 1)[k - 1]
        keep = d <= kth
        idx, d = idx[keep], d[keep]
    order = np.lexsort((idx, d))[:k]
    return idx[order].astype(np.int64), d[order]


def _perms(k):
    p = _PERM_CACHE.get(k)
    if p is None:
        p = np.array(list(permutations(range(k))), dtype=np.int64).reshape(-1, k)
        _PERM_CACHE[k] = p
    return p


def best_order(x, y, pts, w):
    """Minimum-cost visiting order of ``pts`` starting from (x, y).

    The cost of an order is the leg length into each point divided by that
    point's weight, summed left to right. Orders are scanned in
    lexicographic order and the first minimum wins.
    """
    k = pts.shape[0]
    perms = _perms(k)
    first = distances(pts, x, y) / w
    cost = first[perms[:, 0]]
    if k > 1:
        dx = pts[:, 0][:, None] - pts[:, 0][None, :]
        dy = pts[:, 1][:, None] - pts[:, 1][None, :]
        leg = np.sqrt(dx * dx + dy * dy) / w[None, :]
        for j in range(k - 1):
            cost = cost + leg[perms[:, j], perms[:, j + 1]]
    best = int(np.argmin(cost))
    return perms[best].copy(), float(cost[best])


def all_order_costs(x, y, pts, w):
    """Costs of every order, in lexicographic order (used for auditing)."""
    k = pts.shape[0]
    perms = _perms(k)
    first = distances(pts, x, y) / w
    cost = first[perms[:, 0]]
    if k > 1:
        dx = pts[:, 0][:, None] - pts[:, 0][None, :]
        dy = pts[:, 1][:, None] - pts[:, 1][None, :]
        leg = np.sqrt(dx * dx + dy * dy) / w[None, :]
        for j in range(k - 1):
            cost = cost + leg[perms[:, j], perms[:, j + 1]]
    return perms.copy(), cost


def greedy_deposit(points, weights, x, y, mass, zero_tol):
    """Ship ``mass`` from (x, y) to the nearest positive-weight points in turn.

    ``weights`` is decremented in place; sink masses falling to ``zero_tol``
    or below are clamped to zero. Returns (sink indices, shipped amounts,
    cost, total shipped).
    """
    d = distances(points, x, y)
    remaining = mass
    cost = 0.0
    shipped = 0.0
    sinks = []
    amounts = []
    while remaining > zero_tol:
        masked = np.where(weights > 0.0, d, np.inf)
        j = int(np.argmin(masked))
        if not np.isfinite(masked[j]):
            break
        wj = weights[j]
        if wj <= remaining:
            amt = wj
            weights[j] = 0.0
            remaining = remaining - wj
        else:
            amt = remaining
            left = wj - remaining
            weights[j] = left if left > zero_tol else 0.0
            remaining = 0.0
        cost = cost + amt * d[j]
        shipped = shipped + amt
        sinks.append(j)
        amounts.append(amt)
    return (np.array(sinks, dtype=np.int64), np.array(amounts, dtype=float),
            cost, shipped)


def weighted_distance_sum(points, weights, x, y):
    if weights.shape[0] == 0:
        return 0.0
    # cumsum adds left to right, matching the compiled loop bit for bit
    return float(np.cumsum(weights * distances(points, x, y))[-1])


def within_range(targets, agents, r):
    """Boolean mask of targets within ``r`` (inclusive) of any agent."""
    hit = np.zeros(targets.shape[0], dtype=bool)
    for a in agents:
        hit |= distances(targets, a[0], a[1]) <= r
    return hit
