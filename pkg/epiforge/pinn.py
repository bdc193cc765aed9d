"""
pinn
====

Physics-informed network mapping (age, time, uncertainty node) to the four
compartment fractions.

The loss is omega_d L_d + omega_p L_p. L_d compares the collocation means
of network outputs and data; L_p is the squared collocation mean of the
social SIAR residuals, whose time derivatives come from tangent propagation
through the network.
"""

from dataclasses import (
    dataclass,
    field,
)
from typing import (
    Dict,
    Optional,
    Tuple,
)

import numpy as np
from dataclasses_json import (
    LetterCase,
    dataclass_json,
)

from .dataset import EpiDataset
from .models import (
    COMPARTMENTS,
    AgeGrid,
    EpiParams,
)
from .network import (
    Checkpoint,
    NetworkParams,
    TrainingHistory,
    forward_pass,
    loss_gradient,
    train_loop,
)
from .quadrature import NodeSet
from .utils import log

INPUT_MODES = ("auto", "t_only", "x_t", "t_z", "x_t_z")


@dataclass_json(letter_case=LetterCase.CAMEL)
@dataclass
class PinnConfig:
    omega_d: float = 1.0
    omega_p: float = 1.0
    epochs: int = 50000
    learning_rate: float = 1e-2
    hidden_layers: int = 4
    hidden_units: int = 32
    activation: str = "tanh"
    input_mode: str = "auto"
    # Number of collocation times, 0 for every sample time
    collocation_times: int = 0
    record_every: int = 100

    def __post_init__(self):
        if self.omega_d < 0 or self.omega_p < 0:
            raise ValueError("Loss weights must be non-negative")
        if self.omega_d == 0 and self.omega_p == 0:
            raise ValueError("At least one loss weight must be positive")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.input_mode not in INPUT_MODES:
            raise ValueError(
                f"Unknown input mode '{self.input_mode}', expected one of {INPUT_MODES}"
            )
        if self.hidden_layers < 0 or self.hidden_units < 1:
            raise ValueError("Invalid hidden layer layout")


@dataclass
class Collocation:
    """Points where both losses are evaluated: times x age classes x nodes."""

    times: np.ndarray
    ages: AgeGrid
    nodes: Optional[NodeSet] = None

    @property
    def n_nodes(self) -> int:
        return 1 if self.nodes is None else len(self.nodes)

    @property
    def weights(self) -> np.ndarray:
        return np.ones(1) if self.nodes is None else self.nodes.weights

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (len(self.times), len(self.ages), self.n_nodes)


def resolve_mode(mode: str, n_ages: int, synthetic: bool) -> str:
    if mode != "auto":
        return mode
    if synthetic:
        return "t_z" if n_ages == 1 else "x_t_z"
    return "t_only" if n_ages == 1 else "x_t"


@dataclass
class PinnModel:
    net: NetworkParams
    input_mode: str
    lower: np.ndarray
    upper: np.ndarray
    ages: AgeGrid
    nodes: Optional[NodeSet] = None

    @property
    def time_column(self) -> int:
        return 1 if self.input_mode.startswith("x_") else 0

    @property
    def time_scale(self) -> float:
        """d(standardized t) / dt."""
        c = self.time_column
        return 2.0 / (self.upper[c] - self.lower[c])

    @staticmethod
    def raw_inputs(mode: str, collocation: Collocation) -> np.ndarray:
        """Unscaled inputs in (time, age class, node) order."""
        n_times, n_ages, n_nodes = collocation.shape
        n, a, m = np.meshgrid(
            np.arange(n_times), np.arange(n_ages), np.arange(n_nodes), indexing="ij"
        )
        n, a, m = n.reshape(-1), a.reshape(-1), m.reshape(-1)
        columns = []
        if mode.startswith("x_"):
            columns.append(collocation.ages.midpoints[a])
        columns.append(collocation.times[n])
        if mode.endswith("_z"):
            if collocation.nodes is None:
                raise ValueError(f"Input mode {mode} needs collocation nodes")
            coordinates = collocation.nodes.coordinates[m]
            columns.extend(coordinates.T)
        return np.stack(columns, axis=1)

    def inputs(self, collocation: Collocation) -> np.ndarray:
        raw = self.raw_inputs(self.input_mode, collocation)
        span = self.upper - self.lower
        scaled = np.zeros_like(raw)
        varying = span > 0
        scaled[:, varying] = (
            2.0 * (raw[:, varying] - self.lower[varying]) / span[varying] - 1.0
        )
        return scaled

    def evaluate(self, collocation: Collocation, with_time_derivative: bool = False):
        """Outputs and optional d/dt, both of shape (n_times, n_ages, n_nodes, 4)."""
        cache = forward_pass(
            self.net,
            self.inputs(collocation),
            self.time_column if with_time_derivative else None,
        )
        shape = collocation.shape + (len(COMPARTMENTS),)
        outputs = cache.outputs.reshape(shape)
        if not with_time_derivative:
            return outputs, None
        return outputs, cache.tangents.reshape(shape) * self.time_scale

    def to_checkpoint(self, metadata: Optional[dict] = None) -> Checkpoint:
        meta = {
            "inputMode": self.input_mode,
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
            "ages": self.ages.labels,
            "nodes": None if self.nodes is None else self.nodes.to_dict(),
        }
        meta.update(metadata or {})
        return Checkpoint.from_network(self.net, meta)

    @classmethod
    def from_checkpoint(cls, checkpoint: Checkpoint) -> "PinnModel":
        meta = checkpoint.metadata
        nodes = meta.get("nodes")
        return cls(
            checkpoint.to_network(),
            meta["inputMode"],
            np.array(meta["lower"], dtype=float),
            np.array(meta["upper"], dtype=float),
            AgeGrid.from_labels(meta["ages"]),
            None if nodes is None else NodeSet.from_dict(nodes),
        )


def build_model(
    config: PinnConfig, collocation: Collocation, mode: str, seed: int
) -> PinnModel:
    n_ages, n_nodes = len(collocation.ages), collocation.n_nodes
    if n_ages > 1 and not mode.startswith("x_"):
        raise ValueError(f"Input mode {mode} cannot tell {n_ages} age classes apart")
    if n_nodes > 1 and not mode.endswith("_z"):
        raise ValueError(f"Input mode {mode} cannot tell {n_nodes} nodes apart")
    if len(collocation.times) < 2:
        raise ValueError("At least two collocation times are required")

    raw = PinnModel.raw_inputs(mode, collocation)
    sizes = [raw.shape[1]] + [config.hidden_units] * config.hidden_layers + [4]
    net = NetworkParams.initialize(sizes, config.activation, seed)
    return PinnModel(
        net, mode, raw.min(axis=0), raw.max(axis=0), collocation.ages, collocation.nodes
    )


def _node_mean(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    return np.tensordot(values, weights, axes=([2], [0]))


def data_terms(
    outputs: np.ndarray, targets: np.ndarray, weights: np.ndarray, target_weights
) -> Tuple[float, np.ndarray]:
    """Data loss and its gradient with respect to the outputs."""
    residual = _node_mean(outputs, weights) - _node_mean(targets, target_weights)
    grad = 2.0 * residual[:, :, None, :] * weights[None, None, :, None]
    return float(np.sum(residual * residual)), grad


@dataclass
class PhysicsTables:
    """Model coefficients at every collocation point, shape (N, A, M)."""

    beta: np.ndarray
    gamma_I: np.ndarray
    gamma_A: np.ndarray
    xi: np.ndarray
    H: np.ndarray
    k: float

    @classmethod
    def build(cls, params: EpiParams, times: np.ndarray) -> "PhysicsTables":
        if params.incidence_mode != "calibrated":
            raise ValueError("Physics residuals use the calibrated incidence table")
        windows = params.window_indices(times)
        return cls(
            params.beta[None],
            params.gamma_I[None],
            params.gamma_A[None],
            np.transpose(params.xi[:, windows, :], (1, 0, 2)),
            np.transpose(params.H[:, windows, :], (1, 0, 2)),
            params.k,
        )


def _force(outputs: np.ndarray, tables: PhysicsTables):
    S, I, A = outputs[..., 0], outputs[..., 1], outputs[..., 2]
    pool = np.sum(tables.H * (tables.k * I + A), axis=1, keepdims=True)
    return tables.beta * S * tables.H * pool, pool


def residuals(
    outputs: np.ndarray, rates: np.ndarray, tables: PhysicsTables
) -> np.ndarray:
    """Model residuals of S, I, A, R at every collocation point."""
    I, A = outputs[..., 1], outputs[..., 2]
    xi, gI, gA = tables.xi, tables.gamma_I, tables.gamma_A
    lam, _ = _force(outputs, tables)
    return np.stack(
        [
            rates[..., 0] + lam,
            rates[..., 1] - xi * lam + gI * I,
            rates[..., 2] - (1.0 - xi) * lam + gA * A,
            rates[..., 3] - gI * I - gA * A,
        ],
        axis=-1,
    )


def physics_terms(
    outputs: np.ndarray, rates: np.ndarray, tables: PhysicsTables, weights: np.ndarray
) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    Physics loss with its gradients with respect to the outputs and their
    time derivatives

    Args:
        outputs, rates (np.ndarray): network S, I, A, R and d/dt, shape
            (N, A, M, 4)
        tables (PhysicsTables): coefficients at the collocation points
        weights (np.ndarray): collocation weights of the nodes
    """
    R = residuals(outputs, rates, tables)
    if not np.all(np.isfinite(R)):
        raise FloatingPointError("Non-finite physics residual")

    S = outputs[..., 0]
    beta, gI, gA, xi, H, k = (
        tables.beta,
        tables.gamma_I,
        tables.gamma_A,
        tables.xi,
        tables.H,
        tables.k,
    )
    _, pool = _force(outputs, tables)

    mean = _node_mean(R, weights)
    value = float(np.sum(mean * mean))
    G = 2.0 * mean[:, :, None, :] * weights[None, None, :, None]
    GS, GI, GA, GR = G[..., 0], G[..., 1], G[..., 2], G[..., 3]

    g_lam = GS - xi * GI - (1.0 - xi) * GA
    g_pool = np.sum(g_lam * beta * S * H, axis=1, keepdims=True)
    g_outputs = np.stack(
        [
            g_lam * beta * H * pool,
            gI * GI - gI * GR + g_pool * H * k,
            gA * GA - gA * GR + g_pool * H,
            np.zeros_like(GR),
        ],
        axis=-1,
    )
    return value, g_outputs, G


def _targets(dataset: EpiDataset) -> np.ndarray:
    return np.stack([dataset.get(name) for name in COMPARTMENTS], axis=-1)


def data_loss(model: PinnModel, dataset: EpiDataset) -> float:
    """Squared misfit of collocation means of outputs and data over every
    compartment, time and age class."""
    collocation = Collocation(dataset.times, dataset.ages, model.nodes)
    outputs, _ = model.evaluate(collocation)
    value, _ = data_terms(
        outputs, _targets(dataset), collocation.weights, dataset.weights
    )
    return value


def physics_loss(model: PinnModel, params: EpiParams, collocation: Collocation) -> float:
    """Squared collocation mean of the model residuals."""
    outputs, rates = model.evaluate(collocation, with_time_derivative=True)
    tables = PhysicsTables.build(params, collocation.times)
    value, _, _ = physics_terms(outputs, rates, tables, collocation.weights)
    return value


def composite_objective(
    model: PinnModel,
    config: PinnConfig,
    collocation: Collocation,
    targets: np.ndarray,
    target_weights: np.ndarray,
    tables: PhysicsTables,
):
    """objective(net) -> (loss, gradient, parts) for the training loop."""
    inputs = model.inputs(collocation)
    shape = collocation.shape + (len(COMPARTMENTS),)
    weights = collocation.weights
    scale = model.time_scale

    def objective(net: NetworkParams):
        parts: Dict[str, float] = {}

        def loss(outputs, tangents):
            F = outputs.reshape(shape)
            Ft = tangents.reshape(shape) * scale
            d_value, d_grad = data_terms(F, targets, weights, target_weights)
            p_value, p_grad, p_rate_grad = physics_terms(F, Ft, tables, weights)
            parts["data"] = d_value
            parts["physics"] = p_value
            value = config.omega_d * d_value + config.omega_p * p_value
            grad_outputs = config.omega_d * d_grad + config.omega_p * p_grad
            grad_tangents = config.omega_p * p_rate_grad * scale
            return value, grad_outputs.reshape(-1, 4), grad_tangents.reshape(-1, 4)

        value, grad = loss_gradient(net, loss, inputs, model.time_column)
        return value, grad, dict(parts)

    return objective


def _select_times(times: np.ndarray, count: int) -> np.ndarray:
    if count <= 0 or count >= len(times):
        return np.arange(len(times))
    return np.unique(np.rint(np.linspace(0, len(times) - 1, count)).astype(int))


def train(
    config: PinnConfig, dataset: EpiDataset, params: EpiParams, seed: int = 0
) -> Tuple[PinnModel, TrainingHistory]:
    """
    Trains a PINN on a dataset with every compartment

    Args:
        config (PinnConfig): loss weights, architecture and optimizer settings
        dataset (EpiDataset): synthetic per-node data, or observed data with
            reconstructed S and A
        params (EpiParams): calibrated coefficients with as many nodes as the
            dataset
        seed (int): initialization seed

    Returns:
        (PinnModel, TrainingHistory)
    """
    synthetic = dataset.kind == "synthetic"
    if params.n_nodes != dataset.n_nodes or params.n_ages != dataset.n_ages:
        raise ValueError(
            f"Parameters with {params.n_ages} classes x {params.n_nodes} nodes do not "
            f"match data with {dataset.n_ages} x {dataset.n_nodes}"
        )
    index = _select_times(dataset.times, config.collocation_times)
    collocation = Collocation(dataset.times[index], dataset.ages, dataset.nodes)
    targets = _targets(dataset)[index]
    mode = resolve_mode(config.input_mode, dataset.n_ages, synthetic)
    model = build_model(config, collocation, mode, seed)
    tables = PhysicsTables.build(params, collocation.times)

    objective = composite_objective(
        model, config, collocation, targets, dataset.weights, tables
    )
    net, history = train_loop(
        model.net,
        objective,
        config.epochs,
        config.learning_rate,
        config.record_every,
        label="pinn",
    )
    model.net = net
    log(
        f"pinn: data loss {data_loss(model, dataset):.6e} on every sample time, "
        f"physics loss {physics_loss(model, params, collocation):.6e}"
    )
    return model, history


@dataclass
class TrajectoryEnsemble:
    times: np.ndarray
    ages: AgeGrid
    values: np.ndarray
    weights: np.ndarray = field(default_factory=lambda: np.ones(1))

    def mean(self) -> np.ndarray:
        """Collocation mean, shape (n_times, n_ages, 4)."""
        return _node_mean(self.values, self.weights)

    def compartment(self, name: str) -> np.ndarray:
        return self.values[..., COMPARTMENTS.index(name)]


def predict(model: PinnModel, times) -> TrajectoryEnsemble:
    """Evaluates the network at every (age class, time, node)."""
    collocation = Collocation(np.asarray(times, dtype=float), model.ages, model.nodes)
    outputs, _ = model.evaluate(collocation)
    return TrajectoryEnsemble(collocation.times, model.ages, outputs, collocation.weights)

