"""Low-level motion controllers.

A controller is any callable ``step(position, goal) -> next_position``
returning a finite 2-vector; the planner never looks inside it.
"""
from dataclasses import dataclass
from typing import Callable

import numpy as np

MotionContract = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class FirstOrderParams:
    u_max: float = 100.0
    dt: float = 1.0

    def __post_init__(self):
        if not (self.u_max > 0 and self.dt > 0):
            raise ValueError("u_max and dt must be positive")


def first_order_step(x_t, goal, params):
    """Move toward ``goal`` at full speed, stopping exactly on it when in reach."""
    x_t = np.asarray(x_t, dtype=float)
    goal = np.asarray(goal, dtype=float)
    delta = goal - x_t
    dist = float(np.hypot(delta[0], delta[1]))
    reach = params.u_max * params.dt
    if dist <= reach:
        return goal.copy()
    return x_t + reach * delta / dist


class FirstOrderController:
    def __init__(self, params=None):
        self.params = params or FirstOrderParams()

    def __call__(self, position, goal):
        return first_order_step(position, goal, self.params)
