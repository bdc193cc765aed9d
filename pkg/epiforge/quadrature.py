"""
quadrature
==========

Gauss-Jacobi collocation grids for Beta-distributed uncertain parameters.

A Beta(alpha, beta) variable on [0, 1] is mapped to u = 2z - 1 on [-1, 1],
where its density is proportional to the Jacobi weight (1 - u)^a (1 + u)^b
with a = beta - 1 and b = alpha - 1. Nodes and weights come from the
eigen-decomposition of the Jacobi matrix built on the monic three-term
recurrence of that weight.
"""

from dataclasses import (
    dataclass,
    field,
)
from typing import (
    List,
    Optional,
    Tuple,
)

import numpy as np
from dataclasses_json import (
    LetterCase,
    dataclass_json,
)
from scipy.linalg import eigh_tridiagonal

PAIRINGS = ("paired", "tensor")


@dataclass_json(letter_case=LetterCase.CAMEL)
@dataclass(frozen=True)
class BetaSpec:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError(
                f"Beta shape parameters must be positive, got "
                f"alpha={self.alpha}, beta={self.beta}"
            )

    def raw_moment(self, k: int) -> float:
        """E[z^k] for z ~ Beta(alpha, beta)."""
        moment = 1.0
        for j in range(k):
            moment *= (self.alpha + j) / (self.alpha + self.beta + j)
        return moment

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)


@dataclass(frozen=True)
class UncertaintyGrid:
    spec: BetaSpec
    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.nodes)

    def to_dict(self) -> dict:
        return {
            "alpha": float(self.spec.alpha),
            "beta": float(self.spec.beta),
            "nodes": [float(z) for z in self.nodes],
            "weights": [float(w) for w in self.weights],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "UncertaintyGrid":
        return cls(
            BetaSpec(float(data["alpha"]), float(data["beta"])),
            np.array(data["nodes"], dtype=float),
            np.array(data["weights"], dtype=float),
        )


def _jacobi_recurrence(a: float, b: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Diagonal and off-diagonal of the n x n Jacobi matrix for weight
    (1 - u)^a (1 + u)^b on [-1, 1]."""
    diag = np.zeros(n)
    offdiag = np.zeros(max(n - 1, 0))

    ab = a + b
    diag[0] = (b - a) / (ab + 2.0)
    for i in range(1, n):
        s = 2.0 * i + ab
        diag[i] = (b * b - a * a) / (s * (s + 2.0))

    for i in range(1, n):
        s = 2.0 * i + ab
        if i == 1:
            # (n + a + b) cancels against (2n + a + b - 1) for n = 1
            coeff = 4.0 * (1.0 + a) * (1.0 + b) / ((s * s) * (s + 1.0))
        else:
            coeff = (
                4.0 * i * (i + a) * (i + b) * (i + ab) / ((s * s) * (s + 1.0) * (s - 1.0))
            )
        offdiag[i - 1] = np.sqrt(coeff)

    return diag, offdiag


def build_grid(spec: BetaSpec, n_nodes: int) -> UncertaintyGrid:
    """
    Builds the n-node Gauss-Jacobi collocation grid of a Beta distribution

    Args:
        spec (BetaSpec): distribution of the uncertain parameter
        n_nodes (int): number of collocation nodes

    Returns:
        UncertaintyGrid: strictly increasing nodes in (0, 1) and positive
        weights summing to 1
    """
    if n_nodes < 1:
        raise ValueError(f"Number of collocation nodes must be >= 1, got {n_nodes}")

    a = spec.beta - 1.0
    b = spec.alpha - 1.0
    diag, offdiag = _jacobi_recurrence(a, b, n_nodes)

    if n_nodes == 1:
        u = diag.copy()
        weights = np.ones(1)
    else:
        u, vectors = eigh_tridiagonal(diag, offdiag)
        weights = vectors[0, :] ** 2

    weights = weights / np.sum(weights)
    nodes = (u + 1.0) / 2.0

    return UncertaintyGrid(spec, nodes, weights)


def expect(grid, values, axis: int = 0):
    """Collocation approximation of E[f(z)]: sum_j w_j f(z_j) along axis."""
    values = np.asarray(values, dtype=float)
    weights = np.asarray(grid.weights, dtype=float)
    if values.shape[axis] != len(weights):
        raise ValueError(
            f"Expected {len(weights)} values along axis {axis}, "
            f"got {values.shape[axis]}"
        )
    result = np.tensordot(np.moveaxis(values, axis, -1), weights, axes=([-1], [0]))
    if np.ndim(result) == 0:
        return float(result)
    return result


@dataclass(frozen=True)
class NodeSet:
    """Joint collocation nodes for the two uncertain parameters."""

    z1: np.ndarray
    z2: np.ndarray
    weights: np.ndarray
    pairing: str = "paired"
    grids: Tuple[Optional[UncertaintyGrid], Optional[UncertaintyGrid]] = field(
        default=(None, None), compare=False
    )

    def __len__(self):
        return len(self.weights)

    @property
    def coordinates(self) -> np.ndarray:
        """Node coordinates fed to the networks, one row per node."""
        if self.pairing == "tensor":
            return np.stack([self.z1, self.z2], axis=1)
        return self.z1[:, None]

    def to_dict(self) -> dict:
        return {
            "pairing": self.pairing,
            "z1": [float(z) for z in self.z1],
            "z2": [float(z) for z in self.z2],
            "weights": [float(w) for w in self.weights],
            "grids": [g.to_dict() if g is not None else None for g in self.grids],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NodeSet":
        grids = tuple(
            UncertaintyGrid.from_dict(g) if g is not None else None
            for g in data.get("grids", [None, None])
        )
        return cls(
            np.array(data["z1"], dtype=float),
            np.array(data["z2"], dtype=float),
            np.array(data["weights"], dtype=float),
            data.get("pairing", "paired"),
            grids,
        )


def pair_grids(grid1: UncertaintyGrid, grid2: UncertaintyGrid) -> NodeSet:
    """Comonotone pairing: node j of both grids, with the first grid's weights."""
    if len(grid1) != len(grid2):
        raise ValueError(
            f"Cannot pair grids of different sizes ({len(grid1)} and {len(grid2)})"
        )
    weights = grid1.weights / np.sum(grid1.weights)
    return NodeSet(
        grid1.nodes.copy(), grid2.nodes.copy(), weights, "paired", (grid1, grid2)
    )


def tensor_grids(grid1: UncertaintyGrid, grid2: UncertaintyGrid) -> NodeSet:
    """Full tensor product grid with product weights, grid1 varying slowest."""
    z1 = np.repeat(grid1.nodes, len(grid2))
    z2 = np.tile(grid2.nodes, len(grid1))
    weights = np.outer(grid1.weights, grid2.weights).reshape(-1)
    return NodeSet(z1, z2, weights / np.sum(weights), "tensor", (grid1, grid2))


def combine_grids(
    grid1: UncertaintyGrid, grid2: UncertaintyGrid, pairing: str = "paired"
) -> NodeSet:
    if pairing == "paired":
        return pair_grids(grid1, grid2)
    if pairing == "tensor":
        return tensor_grids(grid1, grid2)
    raise ValueError(f"Unknown pairing '{pairing}', expected one of {PAIRINGS}")


def single_node() -> NodeSet:
    """Degenerate one-node set, used for deterministic runs."""
    one = np.array([0.5])
    return NodeSet(one, one.copy(), np.ones(1), "paired")


def weighted_quantile(values, weights, q: List[float], axis: int = 0) -> np.ndarray:
    """
    Quantiles of a discrete weighted distribution along an axis

    Uses midpoint cumulative weights and linear interpolation between
    sorted support points.

    Args:
        values (np.ndarray): support values, the node axis given by axis
        weights (np.ndarray): non-negative weights, one per node
        q (list of float): quantile levels in [0, 1]

    Returns:
        np.ndarray: shape (len(q),) + values shape without the node axis
    """
    values = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    weights = np.asarray(weights, dtype=float)
    if values.shape[0] != len(weights):
        raise ValueError(
            f"Expected {len(weights)} values along axis {axis}, got {values.shape[0]}"
        )
    q = np.atleast_1d(np.asarray(q, dtype=float))
    if np.any((q < 0) | (q > 1)):
        raise ValueError(f"Quantile levels must lie in [0, 1], got {q}")

    flat = values.reshape(values.shape[0], -1)
    result = np.empty((len(q), flat.shape[1]))
    for column in range(flat.shape[1]):
        order = np.argsort(flat[:, column], kind="stable")
        support = flat[order, column]
        w = weights[order]
        cumulative = (np.cumsum(w) - 0.5 * w) / np.sum(w)
        result[:, column] = np.interp(q, cumulative, support)

    return result.reshape((len(q),) + values.shape[1:])
