"""
models
======

Compartmental epidemic models: the age-structured social SIAR model, its
incidence function and the classical SIR baselines it generalizes.

States are arrays of shape (4, n_ages, n_nodes) holding S, I, A, R as
fractions of the total population; the node axis carries the collocation
nodes of the uncertain recovery rates.
"""

from dataclasses import (
    dataclass,
    replace,
)
from typing import (
    List,
    Optional,
    Sequence,
    Tuple,
)

import numpy as np

from .quadrature import (
    NodeSet,
    UncertaintyGrid,
    combine_grids,
)

COMPARTMENTS = ("S", "I", "A", "R")
INCIDENCE_MODES = ("calibrated", "closed_form")

# Recovery-time affine laws 1/gamma_I = h_1 + h_2 z for the two age groups
YOUNG_RECOVERY = (5.0, 32.0)
OLD_RECOVERY = (5.0, 40.0)
YOUNG_AGE_LIMIT = 50.0

WINDOW_TOLERANCE = 1e-9


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class AgeClass:
    lo: float
    hi: float
    label: str

    @property
    def first_age(self) -> float:
        """First whole age belonging to the half-open class (lo, hi]."""
        return self.lo if self.lo == 0 else self.lo + 1

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)


@dataclass(frozen=True)
class AgeGrid:
    classes: Tuple[AgeClass, ...]

    def __post_init__(self):
        if len(self.classes) == 0:
            raise ModelError("An age grid needs at least one class")
        if self.classes[0].lo != 0 or self.classes[-1].hi != 100:
            raise ModelError("Age classes must cover (0, 100]")
        for previous, current in zip(self.classes, self.classes[1:]):
            if previous.hi != current.lo:
                raise ModelError(
                    f"Age classes '{previous.label}' and '{current.label}' "
                    f"are not contiguous"
                )
        for age_class in self.classes:
            if not age_class.lo < age_class.hi:
                raise ModelError(f"Empty age class '{age_class.label}'")
        if len(set(self.labels)) != len(self.labels):
            raise ModelError("Age class labels must be unique")

    @classmethod
    def default(cls) -> "AgeGrid":
        bounds = [0, 18, 24, 49, 64, 74, 100]
        labels = ["0-18", "19-24", "25-49", "50-64", "65-74", "75+"]
        return cls(
            tuple(
                AgeClass(float(lo), float(hi), label)
                for lo, hi, label in zip(bounds[:-1], bounds[1:], labels)
            )
        )

    @classmethod
    def single(cls) -> "AgeGrid":
        return cls((AgeClass(0.0, 100.0, "all"),))

    @classmethod
    def from_labels(cls, labels: Sequence[str]) -> "AgeGrid":
        for grid in (cls.default(), cls.single()):
            if list(labels) == grid.labels:
                return grid
        raise ModelError(f"Unknown age classes {list(labels)}")

    def __len__(self):
        return len(self.classes)

    @property
    def labels(self) -> List[str]:
        return [c.label for c in self.classes]

    @property
    def midpoints(self) -> np.ndarray:
        return np.array([c.midpoint for c in self.classes])

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ModelError(f"Unknown age class label '{label}'")


@dataclass(frozen=True)
class CompartmentState:
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 3 or values.shape[0] != 4:
            raise ModelError(
                f"A compartment state has shape (4, n_ages, n_nodes), "
                f"got {values.shape}"
            )
        object.__setattr__(self, "values", values)

    def __array__(self, dtype=None):
        return self.values if dtype is None else self.values.astype(dtype)

    @classmethod
    def from_components(cls, S, I, A, R) -> "CompartmentState":
        return cls(np.stack([np.asarray(c, dtype=float) for c in (S, I, A, R)]))

    S = property(lambda self: self.values[0])
    I = property(lambda self: self.values[1])
    A = property(lambda self: self.values[2])
    R = property(lambda self: self.values[3])

    def class_totals(self) -> np.ndarray:
        """S + I + A + R per age class and node."""
        return self.values.sum(axis=0)


def window_edges(t0: float, tL: float, T: float, stride: float) -> np.ndarray:
    """Edges [t0, tL, tL + stride, ..., T] of the piecewise-constant tables."""
    if not t0 < tL < T:
        raise ModelError(f"Expected t0 < tL < T, got {t0}, {tL}, {T}")
    starts = []
    start = tL
    while start < T - WINDOW_TOLERANCE:
        starts.append(start)
        start += stride
    return np.array([t0] + starts + [T], dtype=float)


@dataclass
class EpiParams:
    """
    Parameters of the social SIAR model

    Per-class, per-node arrays have shape (n_ages, n_nodes); the windowed
    tables xi and H have shape (n_ages, n_windows, n_nodes) and are constant
    on [edges[w], edges[w + 1]).
    """

    beta: np.ndarray
    gamma_I: np.ndarray
    gamma_A: np.ndarray
    xi: np.ndarray
    H: np.ndarray
    edges: np.ndarray
    k: float = 0.1
    mu: Optional[np.ndarray] = None
    nu: Optional[np.ndarray] = None
    incidence_mode: str = "calibrated"

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=float)
        self.gamma_I = np.asarray(self.gamma_I, dtype=float)
        self.gamma_A = np.asarray(self.gamma_A, dtype=float)
        self.xi = np.asarray(self.xi, dtype=float)
        self.H = np.asarray(self.H, dtype=float)
        self.edges = np.asarray(self.edges, dtype=float)

        shape = self.beta.shape
        if len(shape) != 2:
            raise ModelError(f"beta must have shape (n_ages, n_nodes), got {shape}")
        for name in ("gamma_I", "gamma_A"):
            if getattr(self, name).shape != shape:
                raise ModelError(f"{name} must have shape {shape}")
        table_shape = (shape[0], len(self.edges) - 1, shape[1])
        for name in ("xi", "H"):
            if getattr(self, name).shape != table_shape:
                raise ModelError(
                    f"{name} must have shape {table_shape}, "
                    f"got {getattr(self, name).shape}"
                )
        if np.any(np.diff(self.edges) <= 0):
            raise ModelError("Window edges must be strictly increasing")
        if self.incidence_mode not in INCIDENCE_MODES:
            raise ModelError(
                f"Unknown incidence mode '{self.incidence_mode}', "
                f"expected one of {INCIDENCE_MODES}"
            )
        if self.incidence_mode == "closed_form":
            if self.mu is None or self.nu is None:
                raise ModelError("The closed-form incidence needs mu and nu")
            self.mu = np.asarray(self.mu, dtype=float)
            self.nu = np.asarray(self.nu, dtype=float)

        if np.any(self.beta < 0):
            raise ModelError("beta must be non-negative")
        if np.any(self.gamma_I < 0) or np.any(self.gamma_A < 0):
            raise ModelError("Recovery rates must be non-negative")
        if np.any((self.xi < 0) | (self.xi > 1)):
            raise ModelError("xi must lie in [0, 1]")
        if np.any(self.H <= 0):
            raise ModelError("Incidence values must be positive")
        if not 0 <= self.k <= 1:
            raise ModelError(f"k must lie in [0, 1], got {self.k}")

    @classmethod
    def constant(
        cls,
        n_ages: int,
        n_nodes: int,
        beta: float,
        gamma_I: float,
        gamma_A: float,
        xi: float,
        H: float = 1.0,
        edges: Sequence[float] = (0.0, 1e9),
        k: float = 0.1,
    ) -> "EpiParams":
        n_windows = len(edges) - 1
        return cls(
            np.full((n_ages, n_nodes), beta),
            np.full((n_ages, n_nodes), gamma_I),
            np.full((n_ages, n_nodes), gamma_A),
            np.full((n_ages, n_windows, n_nodes), xi),
            np.full((n_ages, n_windows, n_nodes), H),
            np.array(edges, dtype=float),
            k,
        )

    @property
    def n_ages(self) -> int:
        return self.beta.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.beta.shape[1]

    @property
    def n_windows(self) -> int:
        return len(self.edges) - 1

    def window_index(self, t: float) -> int:
        """Index of the window containing t; t equal to the last edge maps
        to the last window."""
        if t < self.edges[0] - WINDOW_TOLERANCE or t > self.edges[-1] + WINDOW_TOLERANCE:
            raise ModelError(
                f"Time {t} outside the parameter windows "
                f"[{self.edges[0]}, {self.edges[-1]}]"
            )
        index = int(np.searchsorted(self.edges, t + WINDOW_TOLERANCE, side="right")) - 1
        return min(max(index, 0), self.n_windows - 1)

    def window_indices(self, times) -> np.ndarray:
        return np.array([self.window_index(float(t)) for t in np.atleast_1d(times)])

    def xi_at(self, t: float) -> np.ndarray:
        return self.xi[:, self.window_index(t), :]

    def H_at(self, t: float, I: Optional[np.ndarray] = None) -> np.ndarray:
        if self.incidence_mode == "closed_form":
            if I is None:
                raise ModelError("The closed-form incidence needs the I compartment")
            return incidence_H(np.clip(I, 0.0, None), self.mu, self.nu)
        return self.H[:, self.window_index(t), :]

    def node(self, m: int) -> "EpiParams":
        """Parameters restricted to node m, keeping a node axis of length 1."""
        cut = slice(m, m + 1)
        return replace(
            self,
            beta=self.beta[:, cut],
            gamma_I=self.gamma_I[:, cut],
            gamma_A=self.gamma_A[:, cut],
            xi=self.xi[:, :, cut],
            H=self.H[:, :, cut],
            mu=None if self.mu is None else self.mu[:, cut],
            nu=None if self.nu is None else self.nu[:, cut],
        )

    def node_average(self, weights) -> "EpiParams":
        """Collocation-weighted mean of every parameter over the nodes."""
        weights = np.asarray(weights, dtype=float)
        if len(weights) != self.n_nodes:
            raise ModelError(
                f"Expected {self.n_nodes} node weights, got {len(weights)}"
            )
        weights = weights / np.sum(weights)

        def average(values):
            if values is None:
                return None
            return np.tensordot(values, weights, axes=([-1], [0]))[..., None]

        return replace(
            self,
            beta=average(self.beta),
            gamma_I=average(self.gamma_I),
            gamma_A=average(self.gamma_A),
            xi=average(self.xi),
            H=average(self.H),
            mu=average(self.mu),
            nu=average(self.nu),
        )


def incidence_H(r, mu, nu):
    """Closed-form incidence H(r) = mu / sqrt(1 + nu r)."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ModelError("The incidence function is defined for r >= 0 only")
    if np.any(np.asarray(mu) <= 0) or np.any(np.asarray(nu) < 0):
        raise ModelError("The incidence function needs mu > 0 and nu >= 0")
    return mu / np.sqrt(1.0 + nu * r)


def _group_of(age_class: AgeClass, single: bool) -> int:
    if single:
        return 1
    if age_class.hi <= YOUNG_AGE_LIMIT:
        return 1
    if age_class.first_age >= YOUNG_AGE_LIMIT:
        return 2
    raise ModelError(
        f"Age class '{age_class.label}' straddles the {YOUNG_AGE_LIMIT:g}-year "
        f"group boundary"
    )


def sample_gammas(
    grid1: UncertaintyGrid,
    grid2: UncertaintyGrid,
    ages: AgeGrid,
    pairing: str = "paired",
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Recovery rates of every age class at every collocation node

    Classes up to 50 years use 1/gamma_I = 5 + 32 z1, older classes use
    1/gamma_I = 5 + 40 z2; asymptomatics recover twice as fast.

    Returns:
        (gamma_I, gamma_A), both of shape (n_ages, n_nodes)
    """
    return sample_gammas_for(combine_grids(grid1, grid2, pairing), ages)


def sample_gammas_for(nodes: NodeSet, ages: AgeGrid) -> Tuple[np.ndarray, np.ndarray]:
    single = len(ages) == 1
    gamma_I = np.empty((len(ages), len(nodes)))
    for a, age_class in enumerate(ages.classes):
        if _group_of(age_class, single) == 1:
            recovery_time = YOUNG_RECOVERY[0] + YOUNG_RECOVERY[1] * nodes.z1
        else:
            recovery_time = OLD_RECOVERY[0] + OLD_RECOVERY[1] * nodes.z2
        gamma_I[a] = 1.0 / recovery_time
    return gamma_I, 2.0 * gamma_I


def lambda_force(state, params: EpiParams, t: float) -> np.ndarray:
    """Force of infection Lambda per age class and node."""
    y = np.asarray(state, dtype=float)
    S, I, A = y[0], y[1], y[2]
    H = params.H_at(t, I)
    pool = np.sum(H * (params.k * I + A), axis=0)
    return params.beta * S * H * pool[None, :]


def rhs_siar(state, params: EpiParams, t: float) -> np.ndarray:
    """Time derivative of the social SIAR state."""
    y = np.asarray(state, dtype=float)
    I, A = y[1], y[2]
    lam = lambda_force(y, params, t)
    xi = params.xi_at(t)

    to_I = xi * lam
    to_A = lam - to_I
    from_I = params.gamma_I * I
    from_A = params.gamma_A * A

    return np.stack(
        [
            -(to_I + to_A),
            to_I - from_I,
            to_A - from_A,
            from_I + from_A,
        ]
    )


@dataclass
class SirParams:
    beta: float
    gamma: float
    mu: float = 1.0
    nu: float = 0.0

    def __post_init__(self):
        if self.beta < 0 or self.gamma < 0:
            raise ModelError("SIR rates must be non-negative")


def rhs_sir(state, params: SirParams, t: float = 0.0) -> np.ndarray:
    """SIR derivative with the closed-form incidence; nu = 0 is the classic
    bilinear model."""
    y = np.asarray(state, dtype=float)
    S, I = y[0], y[1]
    H = incidence_H(np.clip(I, 0.0, None), params.mu, params.nu)
    infections = params.beta * S * I * H
    recoveries = params.gamma * I
    return np.stack([-infections, infections - recoveries, recoveries])


def initial_state(I0, R0, xi, shares) -> np.ndarray:
    """
    State at t0 from observed I and R, with A derived from the symptomatic
    fraction

    Args:
        I0, R0 (np.ndarray): observed fractions, shape (n_ages, n_nodes)
        xi (np.ndarray): symptomatic fraction, same shape
        shares (np.ndarray): population share of every class, shape (n_ages,)

    Returns:
        np.ndarray: state of shape (4, n_ages, n_nodes)
    """
    I0 = np.asarray(I0, dtype=float)
    R0 = np.asarray(R0, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if np.any(xi <= 0):
        raise ModelError("The symptomatic fraction at t0 must be positive")
    A0 = (1.0 - xi) / xi * I0
    S0 = np.asarray(shares, dtype=float)[:, None] - I0 - A0 - R0
    if np.any(S0 < 0):
        raise ModelError(
            "The symptomatic fraction leaves a negative susceptible share at t0"
        )
    return np.stack([S0, I0, A0, R0])
