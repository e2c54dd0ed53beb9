import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from otexplore.motion import FirstOrderController, FirstOrderParams, first_order_step

P = FirstOrderParams(u_max=100.0, dt=1.0)
coord = st.floats(-1e4, 1e4, allow_nan=False)


def test_boundary_arrives_exactly():
    out = first_order_step([0.0, 0.0], [60.0, 80.0], P)
    assert np.array_equal(out, [60.0, 80.0])


def test_goal_equals_position():
    assert np.array_equal(first_order_step([3.0, 4.0], [3.0, 4.0], P), [3.0, 4.0])


def test_unit_vector_step():
    out = first_order_step([0.0, 0.0], [300.0, 400.0], P)
    assert out == pytest.approx([60.0, 80.0], abs=1e-12)


def test_dt_scales_reach():
    out = first_order_step([0.0, 0.0], [300.0, 400.0], FirstOrderParams(100.0, 2.0))
    assert out == pytest.approx([120.0, 160.0])


def test_params_validated():
    with pytest.raises(ValueError):
        FirstOrderParams(0.0, 1.0)
    with pytest.raises(ValueError):
        FirstOrderParams(1.0, -1.0)


def test_controller_callable():
    ctl = FirstOrderController()
    assert np.array_equal(ctl(np.zeros(2), np.array([1.0, 1.0])), [1.0, 1.0])


@given(coord, coord, coord, coord)
def test_progress_and_finiteness(x, y, gx, gy):
    x_t = np.array([x, y])
    goal = np.array([gx, gy])
    nxt = first_order_step(x_t, goal, P)
    assert np.all(np.isfinite(nxt))
    assert np.hypot(*(nxt - goal)) <= np.hypot(*(x_t - goal)) + 1e-9
