"""
nar
===

Nonlinear autoregressive forecaster: a feed-forward network mapping the last
d infected values of every (age class, node) channel to the next value,
rolled out in closed loop for multi-step forecasts.

Lag inputs are flattened in C order over (lag, age class, node), oldest lag
first; targets in C order over (age class, node).
"""

from dataclasses import (
    dataclass,
    field,
)
from typing import (
    List,
    Optional,
    Sequence,
    Tuple,
)

import numpy as np
from dataclasses_json import (
    LetterCase,
    dataclass_json,
)

from .dataset import (
    TIME_TOLERANCE,
    DatasetError,
    EpiDataset,
)
from .network import (
    NetworkParams,
    TrainingHistory,
    forward,
    loss_gradient,
    train_loop,
)
from .utils import log


@dataclass_json(letter_case=LetterCase.CAMEL)
@dataclass
class NarConfig:
    delay: int = 5
    epochs: int = 20000
    learning_rate: float = 1e-2
    hidden_layers: int = 2
    hidden_units: int = 16
    activation: str = "relu"
    record_every: int = 100

    def __post_init__(self):
        if self.delay < 1:
            raise ValueError(f"The delay must be >= 1, got {self.delay}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.hidden_layers < 0 or self.hidden_units < 1:
            raise ValueError("Invalid hidden layer layout")


@dataclass
class LagWindow:
    inputs: np.ndarray
    target: np.ndarray


def _channels(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        return values[:, None, None]
    if values.ndim == 2:
        return values[:, :, None]
    return values


def infected_series(series) -> Tuple[Optional[np.ndarray], np.ndarray]:
    """Sample times (None for bare arrays) and infected values of shape
    (n_times, n_ages, n_nodes)."""
    if isinstance(series, EpiDataset):
        return series.times, series.get("I")
    return None, _channels(series)


def make_windows(series, delay: int, times=None) -> List[LagWindow]:
    """
    Sliding lag windows over a uniformly sampled series

    Args:
        series (EpiDataset or np.ndarray): dataset whose I series is used, or
            values of shape (n_times,), (n_times, n_ages) or
            (n_times, n_ages, n_nodes)
        delay (int): number of lags d
        times (np.ndarray): sample times of a bare array, checked for
            uniform spacing

    Returns:
        List[LagWindow]: n_times - d windows, window k covering k .. k + d - 1
        with target k + d
    """
    if delay < 1:
        raise ValueError(f"The delay must be >= 1, got {delay}")
    dataset_times, values = infected_series(series)
    if times is None:
        times = dataset_times
    if len(values) < delay + 1:
        raise DatasetError(
            f"A series of length {len(values)} is too short for delay {delay}"
        )
    if times is not None and len(times) > 2:
        steps = np.diff(np.asarray(times, dtype=float))
        if np.max(np.abs(steps - steps[0])) > TIME_TOLERANCE * max(1.0, steps[0]):
            raise DatasetError("The series is not uniformly sampled")

    return [
        LagWindow(values[k : k + delay].reshape(-1), values[k + delay].reshape(-1))
        for k in range(len(values) - delay)
    ]


def _stack(windows: Sequence[LagWindow]) -> Tuple[np.ndarray, np.ndarray]:
    if not windows:
        raise ValueError("At least one lag window is required")
    inputs = np.stack([window.inputs for window in windows])
    targets = np.stack([window.target for window in windows])
    return inputs, targets


def window_loss(outputs: np.ndarray, targets: np.ndarray):
    """Mean over windows of the squared errors summed over channels."""
    residual = outputs - targets
    count = len(targets)
    value = float(np.sum(residual * residual)) / count
    return value, 2.0 * residual / count, None


def train(
    config: NarConfig, windows: Sequence[LagWindow], seed: int = 0
) -> Tuple[NetworkParams, TrainingHistory]:
    """
    Trains a NAR network on lag windows with full-batch Adam

    Returns:
        (NetworkParams, TrainingHistory)
    """
    inputs, targets = _stack(windows)
    sizes = (
        [inputs.shape[1]]
        + [config.hidden_units] * config.hidden_layers
        + [targets.shape[1]]
    )
    net = NetworkParams.initialize(sizes, config.activation, seed)

    def objective(current: NetworkParams):
        value, grad = loss_gradient(
            current, lambda out, _: window_loss(out, targets), inputs
        )
        return value, grad, {"data": value}

    return train_loop(
        net,
        objective,
        config.epochs,
        config.learning_rate,
        config.record_every,
        label="nar",
    )


def open_loop(net: NetworkParams, windows: Sequence[LagWindow]) -> np.ndarray:
    """One-step predictions from true lag inputs, shape (n_windows, channels)."""
    inputs, _ = _stack(windows)
    return forward(net, inputs)


@dataclass
class Forecast:
    values: np.ndarray
    truncated: bool = False
    times: Optional[np.ndarray] = None
    flags: List[str] = field(default_factory=list)


def forecast_closed_loop(net: NetworkParams, seed_history, steps: int) -> Forecast:
    """
    Recursive forecast feeding every prediction back as the newest lag

    Args:
        net (NetworkParams): trained network
        seed_history (np.ndarray): the last d values, shape (d,) or
            (d, n_ages[, n_nodes])
        steps (int): number of predicted values

    Returns:
        Forecast: values of shape (steps,) + seed_history.shape[1:], shorter
        when a non-finite prediction stops the rollout
    """
    history = np.asarray(seed_history, dtype=float)
    delay = history.shape[0]
    channel_shape = history.shape[1:]
    buffer = history.reshape(delay, -1)
    if buffer.size != net.layer_sizes[0]:
        raise ValueError(
            f"The network expects {net.layer_sizes[0]} lag inputs, "
            f"got {buffer.size}"
        )
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")

    predictions = []
    flags = []
    for step in range(steps):
        prediction = forward(net, buffer.reshape(-1))
        if not np.all(np.isfinite(prediction)):
            flags.append(f"non-finite prediction at step {step}, forecast truncated")
            log(f"nar: {flags[-1]}", 1)
            break
        predictions.append(prediction)
        buffer = np.vstack([buffer[1:], prediction[None, :]])

    values = np.array(predictions).reshape((len(predictions),) + channel_shape)
    return Forecast(values, bool(flags), flags=flags)


def forecast_until(
    net: NetworkParams, series, delay: int, t_end: float, times=None
) -> Forecast:
    """
    Closed-loop forecast from the end of a training series up to t_end on the
    series' own sampling step

    Returns:
        Forecast: with times t_last + step, t_last + 2 step, ... and values of
        shape (n_steps, n_ages, n_nodes)
    """
    dataset_times, values = infected_series(series)
    times = np.asarray(dataset_times if times is None else times, dtype=float)
    if len(times) < max(delay, 2):
        raise DatasetError("Not enough history to seed the forecast")
    step = times[1] - times[0]
    steps = int(np.floor((t_end - times[-1]) / step + TIME_TOLERANCE))
    forecast = forecast_closed_loop(net, values[-delay:], max(steps, 0))
    forecast.times = times[-1] + step * np.arange(1, len(forecast.values) + 1)
    return forecast
