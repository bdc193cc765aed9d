"""
network
=======

Feed-forward networks on numpy: forward evaluation, tangent propagation of
one input direction, reverse accumulation through both, and Adam.

Layer l maps h^(l-1) to W^l h^(l-1) + b^l, W^l having shape
(layer_sizes[l + 1], layer_sizes[l]). The last layer is always affine; the
first one is affine too unless activate_first is set.
"""

import time
from dataclasses import (
    dataclass,
    field,
    replace,
)
from typing import (
    Any,
    Callable,
    Dict,
    List,
    Optional,
    Tuple,
)

import numpy as np
from dataclasses_json import (
    LetterCase,
    dataclass_json,
)

from .utils import log

ACTIVATIONS = ("tanh", "relu")

# loss(outputs, tangents) -> (value, d value / d outputs, d value / d tangents)
LossFunction = Callable[
    [np.ndarray, Optional[np.ndarray]],
    Tuple[float, np.ndarray, Optional[np.ndarray]],
]


class TrainingDivergence(RuntimeError):
    def __init__(self, message: str, history: "TrainingHistory"):
        super().__init__(message)
        self.history = history


@dataclass
class NetworkParams:
    layer_sizes: List[int]
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    activation: str = "tanh"
    activate_first: bool = False
    seed: Optional[int] = None

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(
                f"Unknown activation '{self.activation}', expected one of {ACTIVATIONS}"
            )
        if len(self.layer_sizes) < 2:
            raise ValueError("A network needs at least an input and an output layer")
        if len(self.weights) != self.num_layers or len(self.biases) != self.num_layers:
            raise ValueError("One weight matrix and one bias per layer are required")
        for l, (W, b) in enumerate(zip(self.weights, self.biases)):
            shape = (self.layer_sizes[l + 1], self.layer_sizes[l])
            if W.shape != shape or b.shape != (shape[0],):
                raise ValueError(
                    f"Layer {l} expects weights {shape} and biases ({shape[0]},), "
                    f"got {W.shape} and {b.shape}"
                )

    @classmethod
    def initialize(
        cls,
        layer_sizes: List[int],
        activation: str = "tanh",
        seed: int = 0,
        activate_first: bool = False,
    ) -> "NetworkParams":
        """Xavier-uniform weights and zero biases from a seeded generator."""
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
            biases.append(np.zeros(fan_out))
        return cls(list(layer_sizes), weights, biases, activation, activate_first, seed)

    @property
    def num_layers(self) -> int:
        return len(self.layer_sizes) - 1

    def is_activated(self, l: int) -> bool:
        if l == self.num_layers - 1:
            return False
        if l == 0:
            return self.activate_first
        return True

    def zeros_like(self) -> "NetworkParams":
        return replace(
            self,
            weights=[np.zeros_like(W) for W in self.weights],
            biases=[np.zeros_like(b) for b in self.biases],
        )

    def flatten(self) -> np.ndarray:
        parts = []
        for W, b in zip(self.weights, self.biases):
            parts.extend([W.reshape(-1), b])
        return np.concatenate(parts)

    def unflatten(self, vector: np.ndarray) -> "NetworkParams":
        weights, biases, offset = [], [], 0
        for W, b in zip(self.weights, self.biases):
            weights.append(vector[offset : offset + W.size].reshape(W.shape))
            offset += W.size
            biases.append(vector[offset : offset + b.size].copy())
            offset += b.size
        return replace(self, weights=weights, biases=biases)


def _activate(name: str, a: np.ndarray):
    """Activation value, first and second derivatives."""
    if name == "tanh":
        h = np.tanh(a)
        d1 = 1.0 - h * h
        return h, d1, -2.0 * h * d1
    h = np.maximum(a, 0.0)
    return h, (a > 0).astype(float), np.zeros_like(a)


@dataclass
class ForwardPass:
    """Intermediate values of a batched forward and tangent evaluation."""

    outputs: np.ndarray
    tangents: Optional[np.ndarray]
    inputs: List[np.ndarray] = field(default_factory=list)
    input_tangents: List[Optional[np.ndarray]] = field(default_factory=list)
    pre_tangents: List[Optional[np.ndarray]] = field(default_factory=list)
    first: List[Optional[np.ndarray]] = field(default_factory=list)
    second: List[Optional[np.ndarray]] = field(default_factory=list)


def _as_batch(net: NetworkParams, inputs) -> Tuple[np.ndarray, bool]:
    x = np.asarray(inputs, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != net.layer_sizes[0]:
        raise ValueError(
            f"Expected inputs of length {net.layer_sizes[0]}, got shape {x.shape}"
        )
    return x, single


def forward_pass(net: NetworkParams, inputs, which: Optional[int] = None) -> ForwardPass:
    """
    Evaluates a batch, propagating the tangent along input `which` if given

    Args:
        net (NetworkParams): the network
        inputs (np.ndarray): batch of shape (n, layer_sizes[0])
        which (int): input index to differentiate along, or None

    Returns:
        ForwardPass: outputs, tangents and the values needed by the reverse pass
    """
    h, _ = _as_batch(net, inputs)
    dh = None
    if which is not None:
        if not 0 <= which < net.layer_sizes[0]:
            raise IndexError(
                f"Input index {which} out of range for {net.layer_sizes[0]} inputs"
            )
        dh = np.zeros_like(h)
        dh[:, which] = 1.0

    cache = ForwardPass(None, None)
    for l, (W, b) in enumerate(zip(net.weights, net.biases)):
        cache.inputs.append(h)
        cache.input_tangents.append(dh)
        a = h @ W.T + b
        da = None if dh is None else dh @ W.T
        cache.pre_tangents.append(da)
        if net.is_activated(l):
            h, d1, d2 = _activate(net.activation, a)
            dh = None if da is None else d1 * da
            cache.first.append(d1)
            cache.second.append(d2)
        else:
            h, dh = a, da
            cache.first.append(None)
            cache.second.append(None)

    cache.outputs = h
    cache.tangents = dh
    return cache


def forward(net: NetworkParams, inputs) -> np.ndarray:
    """Network outputs for one input vector or a batch of them."""
    _, single = _as_batch(net, inputs)
    outputs = forward_pass(net, inputs).outputs
    return outputs[0] if single else outputs


def input_derivative(net: NetworkParams, inputs, which: int) -> np.ndarray:
    """Exact derivative of the outputs with respect to input `which`."""
    _, single = _as_batch(net, inputs)
    tangents = forward_pass(net, inputs, which).tangents
    return tangents[0] if single else tangents


def _backward(
    net: NetworkParams,
    cache: ForwardPass,
    grad_outputs: np.ndarray,
    grad_tangents: Optional[np.ndarray],
) -> NetworkParams:
    grad_W: List[np.ndarray] = [None] * net.num_layers
    grad_b: List[np.ndarray] = [None] * net.num_layers
    gh, gdh = grad_outputs, grad_tangents

    for l in reversed(range(net.num_layers)):
        if net.is_activated(l):
            d1, d2 = cache.first[l], cache.second[l]
            ga = gh * d1
            gda = None
            if gdh is not None:
                ga = ga + gdh * d2 * cache.pre_tangents[l]
                gda = gdh * d1
        else:
            ga, gda = gh, gdh

        grad_W[l] = ga.T @ cache.inputs[l]
        grad_b[l] = ga.sum(axis=0)
        if gda is not None:
            grad_W[l] = grad_W[l] + gda.T @ cache.input_tangents[l]

        W = net.weights[l]
        gh = ga @ W
        gdh = None if gda is None else gda @ W

    return replace(net, weights=grad_W, biases=grad_b)


def loss_gradient(
    net: NetworkParams, loss: LossFunction, inputs, which: Optional[int] = None
) -> Tuple[float, NetworkParams]:
    """
    Value and parameter gradient of a batch loss

    The loss sees the outputs and, when `which` is given, the tangents along
    that input; the gradient flows through both.

    Returns:
        (float, NetworkParams): loss value and its gradient
    """
    cache = forward_pass(net, inputs, which)
    value, grad_outputs, grad_tangents = loss(cache.outputs, cache.tangents)
    if not np.isfinite(value):
        raise FloatingPointError(f"Non-finite loss {value}")
    if which is None:
        grad_tangents = None
    return float(value), _backward(net, cache, grad_outputs, grad_tangents)


@dataclass
class AdamState:
    learning_rate: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: Optional[List[np.ndarray]] = None
    v: Optional[List[np.ndarray]] = None

    @classmethod
    def for_network(cls, net: NetworkParams, learning_rate: float = 1e-2):
        zeros = net.zeros_like()
        moments = zeros.weights + zeros.biases
        return cls(
            learning_rate,
            m=[np.zeros_like(x) for x in moments],
            v=[np.zeros_like(x) for x in moments],
        )


def adam_step(
    net: NetworkParams, grad: NetworkParams, state: AdamState
) -> Tuple[NetworkParams, AdamState]:
    """One bias-corrected Adam update; returns new parameters and state."""
    params = net.weights + net.biases
    grads = grad.weights + grad.biases
    if state.m is None:
        state = AdamState.for_network(net, state.learning_rate)
    step = state.step + 1
    correction1 = 1.0 - state.beta1 ** step
    correction2 = 1.0 - state.beta2 ** step

    new_params, new_m, new_v = [], [], []
    for theta, g, m, v in zip(params, grads, state.m, state.v):
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        update = state.learning_rate * (m / correction1) / (
            np.sqrt(v / correction2) + state.eps
        )
        new_params.append(theta - update)
        new_m.append(m)
        new_v.append(v)

    n = net.num_layers
    updated = replace(net, weights=new_params[:n], biases=new_params[n:])
    return updated, replace(state, step=step, m=new_m, v=new_v)


@dataclass_json(letter_case=LetterCase.CAMEL)
@dataclass
class TrainingHistory:
    epochs: List[int] = field(default_factory=list)
    losses: List[float] = field(default_factory=list)
    components: Dict[str, List[float]] = field(default_factory=dict)
    seconds: float = 0.0
    total_epochs: int = 0
    final_loss: Optional[float] = None

    def record(self, epoch: int, value: float, parts: Optional[Dict[str, float]] = None):
        self.epochs.append(epoch)
        self.losses.append(value)
        for name, part in (parts or {}).items():
            self.components.setdefault(name, []).append(part)

    def rows(self) -> List[Dict[str, float]]:
        """One record per recorded epoch: epoch, loss and every component."""
        rows = []
        for i, epoch in enumerate(self.epochs):
            row = {"epoch": epoch, "loss": self.losses[i]}
            for name, values in self.components.items():
                row[name] = values[i]
            rows.append(row)
        return rows


# objective(net) -> (value, gradient, named parts of the value)
Objective = Callable[[NetworkParams], Tuple[float, NetworkParams, Dict[str, float]]]


def train_loop(
    net: NetworkParams,
    objective: Objective,
    epochs: int,
    learning_rate: float,
    record_every: int = 100,
    label: str = "network",
) -> Tuple[NetworkParams, TrainingHistory]:
    """
    Full-batch Adam on an objective

    Returns the iterate with the lowest loss seen, which is never worse than
    the initialization. Only the optimizer loop is timed.
    """
    history = TrainingHistory(total_epochs=epochs)
    state = AdamState.for_network(net, learning_rate)
    best_net, best_value = net, None

    start = time.perf_counter()
    for epoch in range(epochs + 1):
        try:
            value, grad, parts = objective(net)
        except FloatingPointError:
            value = np.nan
        if not np.isfinite(value):
            history.seconds = time.perf_counter() - start
            raise TrainingDivergence(
                f"{label}: non-finite loss at epoch {epoch}", history
            )
        if epoch % record_every == 0 or epoch == epochs:
            history.record(epoch, value, parts)
            log(f"{label}: epoch {epoch}, loss {value:.6e}")
        if best_value is None or value < best_value:
            best_net, best_value = net, value
        if epoch == epochs:
            break
        net, state = adam_step(net, grad, state)
    history.seconds = time.perf_counter() - start
    history.final_loss = best_value
    return best_net, history


@dataclass_json(letter_case=LetterCase.CAMEL)
@dataclass
class Checkpoint:
    layer_sizes: List[int]
    activation: str
    activate_first: bool
    weights: List[List[float]]
    biases: List[List[float]]
    seed: Optional[int] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_network(cls, net: NetworkParams, metadata: Optional[Dict[str, Any]] = None):
        return cls(
            list(net.layer_sizes),
            net.activation,
            net.activate_first,
            [W.reshape(-1).tolist() for W in net.weights],
            [b.tolist() for b in net.biases],
            net.seed,
            metadata or {},
        )

    def to_network(self) -> NetworkParams:
        shapes = list(zip(self.layer_sizes[1:], self.layer_sizes[:-1]))
        return NetworkParams(
            list(self.layer_sizes),
            [np.array(w, dtype=float).reshape(s) for w, s in zip(self.weights, shapes)],
            [np.array(b, dtype=float) for b in self.biases],
            self.activation,
            self.activate_first,
            self.seed,
        )
