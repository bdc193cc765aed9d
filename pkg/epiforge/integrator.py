"""
integrator
==========

Classical fourth-order Runge-Kutta with a fixed step, and the trajectories
it produces.
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import pandas as pd

from .models import (
    COMPARTMENTS,
    AgeGrid,
)

TIME_TOLERANCE = 1e-9

Rhs = Callable[[np.ndarray, float], np.ndarray]


class IntegrationError(RuntimeError):
    def __init__(self, time: float):
        super().__init__(f"Non-finite state reached at t={time:g}")
        self.time = time


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    step: float

    @property
    def terminal(self) -> np.ndarray:
        return self.states[-1]

    def _check_range(self, times: np.ndarray):
        lo, hi = self.times[0], self.times[-1]
        if np.any(times < lo - TIME_TOLERANCE) or np.any(times > hi + TIME_TOLERANCE):
            raise ValueError(
                f"Requested times outside the trajectory span [{lo:g}, {hi:g}]"
            )

    def state_at(self, t: float) -> np.ndarray:
        """State at t: the stored state when t is a step time, else linearly
        interpolated."""
        index = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[index] - t) <= TIME_TOLERANCE:
            return self.states[index]
        return self.sample([t])[0]

    def sample(self, times) -> np.ndarray:
        """Linear interpolation of the states at the given times."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        self._check_range(times)
        if len(self.times) == 1:
            return np.repeat(self.states[:1], len(times), axis=0)

        index = np.searchsorted(self.times, times, side="right") - 1
        index = np.clip(index, 0, len(self.times) - 2)
        t_lo = self.times[index]
        t_hi = self.times[index + 1]
        frac = np.clip((times - t_lo) / (t_hi - t_lo), 0.0, 1.0)
        frac = frac.reshape((-1,) + (1,) * (self.states.ndim - 1))

        lo = self.states[index]
        return lo + frac * (self.states[index + 1] - lo)

    def to_frame(self, ages: AgeGrid) -> pd.DataFrame:
        """Long format table with one row per time, age class and node."""
        n_times, _, n_ages, n_nodes = self.states.shape
        if n_ages != len(ages):
            raise ValueError(
                f"Trajectory has {n_ages} age classes, grid has {len(ages)}"
            )
        t, a, m = np.meshgrid(
            np.arange(n_times), np.arange(n_ages), np.arange(n_nodes), indexing="ij"
        )
        frame = pd.DataFrame(
            {
                "t": self.times[t.reshape(-1)],
                "age_class": np.array(ages.labels)[a.reshape(-1)],
                "node_index": m.reshape(-1),
            }
        )
        for c, name in enumerate(COMPARTMENTS):
            frame[name] = self.states[:, c].reshape(-1)
        return frame

    def to_csv(self, path: str, ages: AgeGrid):
        self.to_frame(ages).to_csv(path, index=False, float_format="%.17g")


def _time_grid(t0: float, t_end: float, h: float) -> np.ndarray:
    n_full = int(math.floor((t_end - t0) / h + TIME_TOLERANCE))
    times = [t0 + i * h for i in range(n_full + 1)]
    if abs(times[-1] - t_end) <= TIME_TOLERANCE * max(1.0, abs(t_end)):
        times[-1] = t_end
    elif times[-1] < t_end:
        times.append(t_end)
    return np.array(times)


def integrate(
    rhs: Rhs,
    initial,
    t0: float,
    t_end: float,
    h: float,
) -> Trajectory:
    """
    Integrates dy/dt = rhs(y, t) with classical RK4

    Times are t0 + i h, the last step being shortened to land on t_end.

    Args:
        rhs (callable): derivative, rhs(y, t) -> array shaped like y
        initial (array-like): state at t0
        t0, t_end (float): integration span, t_end > t0
        h (float): step size

    Returns:
        Trajectory: every step time and the state there
    """
    if not h > 0:
        raise ValueError(f"Step size must be positive, got {h}")
    if not t_end > t0:
        raise ValueError(f"Integration span must satisfy t_end > t0, got [{t0}, {t_end}]")

    y = np.array(initial, dtype=float)
    if not np.all(np.isfinite(y)):
        raise IntegrationError(t0)

    times = _time_grid(t0, t_end, h)
    states = np.empty((len(times),) + y.shape)
    states[0] = y

    for i in range(len(times) - 1):
        t = times[i]
        dt = h if i < len(times) - 2 else times[-1] - t
        k1 = rhs(y, t)
        k2 = rhs(y + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = rhs(y + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = rhs(y + dt * k3, t + dt)
        y = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise IntegrationError(times[i + 1])
        states[i + 1] = y

    return Trajectory(times, states, h)
