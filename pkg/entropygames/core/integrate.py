from typing import Callable, TypeVar

import numpy as np

from .validation import InputException

Y = TypeVar("Y", bound=np.ndarray)


def rk4_step(rhs: Callable[[float, Y], Y], t: float, y: Y, h: float) -> Y:
    """
    Advances y' = rhs(t, y) by one classical fourth-order Runge-Kutta step.
    Time-dependent right-hand sides are evaluated at t, t + h/2 and t + h.
    """
    k1 = rhs(t, y)
    k2 = rhs(t + h / 2, y + (h / 2) * k1)
    k3 = rhs(t + h / 2, y + (h / 2) * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def sample_times(dt: float, t_end: float) -> np.ndarray:
    """
    Times at which a fixed-step integration from 0 to t_end is sampled. All
    steps have length dt except possibly the last, which is shortened to land
    on t_end.

    Raises:
        InputException: If dt is not positive or t_end is negative.
    """
    if not dt > 0:
        raise InputException(f"Step size must be positive, got {dt}")
    if not t_end >= 0:
        raise InputException(f"End time must be non-negative, got {t_end}")
    steps = int(np.ceil(t_end / dt - 1e-9))
    times = np.arange(steps + 1, dtype=float) * dt
    if steps > 0:
        times[-1] = t_end
    return times
