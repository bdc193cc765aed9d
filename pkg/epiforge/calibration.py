"""
calibration
===========

Two-phase fit of the social SIAR model to reported data, independently at
every collocation node.

Phase 1 fits the transmission rate and symptomatic fraction per age class
on [t0, tL] with no contact reduction (H = 1). Phase 2 walks weekly windows
over [tL, T], fitting H and the symptomatic fraction per age class and
chaining each window from the terminal state of the previous one.
"""

import json
from dataclasses import (
    dataclass,
    field,
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
import pandas as pd
from dataclasses_json import (
    LetterCase,
    dataclass_json,
)
from scipy.optimize import minimize
from scipy.special import (
    expit,
    logit,
)

from .cache import (
    ResultCache,
    digest,
)
from .dataset import (
    DatasetError,
    EpiDataset,
)
from .integrator import (
    IntegrationError,
    Trajectory,
    integrate,
)
from .models import (
    COMPARTMENTS,
    AgeGrid,
    EpiParams,
    ModelError,
    initial_state,
    rhs_siar,
    sample_gammas_for,
    window_edges,
)
from .quadrature import (
    NodeSet,
    expect,
    weighted_quantile,
)
from .utils import (
    log,
    parallel_map,
)

# Objective value of a trial that blows up or starts from an invalid state
PENALTY = 1e6
BOUND_SLACK = 1e-4
TIME_TOLERANCE = 1e-9


@dataclass_json(letter_case=LetterCase.CAMEL)
@dataclass
class FitConfig:
    p: float = 0.5
    t0: float = 2.0
    t_lockdown: float = 15.0
    t_end: float = 105.0
    k_l: int = 3
    k_r: int = 4
    stride: int = 7
    max_iters: int = 2000
    tol: float = 1e-10
    restarts: int = 2
    step: float = 0.2
    k: float = 0.1
    beta_init: float = 0.3
    xi_init: float = 0.5
    xi_min: float = 1e-3

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if not self.t0 < self.t_lockdown < self.t_end:
            raise ValueError(
                f"Expected t0 < tL < T, got {self.t0}, {self.t_lockdown}, {self.t_end}"
            )
        if self.k_l < 0 or self.k_r < 0:
            raise ValueError("Window extents k_l and k_r must be non-negative")
        if self.stride < 1 or self.k_l + self.k_r < self.stride:
            raise ValueError(
                "Phase-2 fit spans (k_l + k_r days) must reach the next window"
            )
        if self.max_iters < 1 or not self.tol > 0 or self.restarts < 0:
            raise ValueError("Invalid optimizer settings")
        if not self.step > 0:
            raise ValueError(f"Integration step must be positive, got {self.step}")
        if not 0 < self.xi_min < self.xi_init < 1:
            raise ValueError("Expected 0 < xi_min < xi_init < 1")
        if not self.beta_init > 0:
            raise ValueError("beta_init must be positive")

    def windows(self) -> List[Tuple[float, float, float]]:
        """Phase-2 windows as (start, end of fit span, start of next window)."""
        edges = window_edges(self.t0, self.t_lockdown, self.t_end, self.stride)
        starts = edges[1:-1]
        span = self.k_l + self.k_r
        return [
            (float(start), float(min(start + span, self.t_end)), float(edges[j + 2]))
            for j, start in enumerate(starts)
        ]


@dataclass_json(letter_case=LetterCase.CAMEL)
@dataclass
class NodeDiagnostics:
    iterations: int = 0
    converged: bool = True
    flags: List[str] = field(default_factory=list)
    history: List[float] = field(default_factory=list)
    window_histories: List[List[float]] = field(default_factory=list)


def _softplus(u):
    return np.logaddexp(0.0, u)


def _softplus_inverse(value):
    return np.log(np.expm1(value))


def _xi_of(v, xi_min):
    return xi_min + (1.0 - xi_min) * expit(v)


def _xi_inverse(xi, xi_min):
    scaled = np.clip((np.asarray(xi) - xi_min) / (1.0 - xi_min), 1e-6, 1.0 - 1e-6)
    return logit(scaled)


def misfit(states: np.ndarray, infected: np.ndarray, recovered: np.ndarray, p: float):
    """Weighted l2 misfit of simulated (n, 4, A) states against (n, A) data."""
    i_norm = np.linalg.norm(states[:, 1, :] - infected, axis=0)
    r_norm = np.linalg.norm(states[:, 3, :] - recovered, axis=0)
    return float(np.sum(p * i_norm + (1.0 - p) * r_norm))


def _window_mask(data: EpiDataset, ta: float, tb: float) -> np.ndarray:
    if tb < ta:
        raise ValueError(f"empty window [{ta:g}, {tb:g}]")
    mask = (data.times >= ta - TIME_TOLERANCE) & (data.times <= tb + TIME_TOLERANCE)
    if not np.any(mask):
        raise DatasetError(f"No data in window [{ta:g}, {tb:g}]")
    days = data.times[mask]
    gaps = np.diff(np.concatenate([[ta], days]))
    if np.any(gaps > data.resolution + TIME_TOLERANCE):
        raise DatasetError(f"missing data days in window [{ta:g}, {tb:g}]")
    return mask


def objective(
    sim: Trajectory, data: EpiDataset, window: Tuple[float, float], p: float, node=0
) -> float:
    """
    Calibration misfit of one node over a window

    Sum over age classes of p ||I_sim - I_data|| + (1 - p) ||R_sim - R_data||,
    the norms running over the data samples in the window. Samples past the
    last data day are not required.
    """
    mask = _window_mask(data, *window)
    states = sim.sample(data.times[mask])[..., node]
    data_node = node if data.n_nodes > 1 else 0
    return misfit(
        states,
        data.get("I")[mask, :, data_node],
        data.get("R")[mask, :, data_node],
        p,
    )


def _nelder_mead(fun: Callable, x0: np.ndarray, cfg: FitConfig, label: str):
    best = {"value": np.inf, "x": np.array(x0, dtype=float)}
    history: List[float] = []

    def guarded(x):
        try:
            value = fun(x)
        except (IntegrationError, ModelError, FloatingPointError):
            value = PENALTY
        if not np.isfinite(value):
            value = PENALTY
        if value < best["value"]:
            best["value"] = value
            best["x"] = np.array(x, dtype=float)
        return value

    def callback(xk):
        history.append(best["value"])

    x = best["x"]
    iterations = 0
    converged = False
    for attempt in range(cfg.restarts + 1):
        simplex = np.vstack([x, x + 0.5 * np.eye(len(x))])
        result = minimize(
            guarded,
            x,
            method="Nelder-Mead",
            callback=callback,
            options={
                "maxiter": cfg.max_iters,
                "xatol": 1e-8,
                "fatol": cfg.tol,
                "initial_simplex": simplex,
            },
        )
        iterations += int(result.nit)
        converged = bool(result.success)
        log(f"{label}: attempt {attempt}, objective {best['value']:.6g}")
        x = best["x"]

    return best["x"], best["value"], history, iterations, converged


@dataclass
class NodeProblem:
    """Inputs of a single-node fit, picklable for worker processes."""

    node: int
    days: np.ndarray
    infected: np.ndarray
    recovered: np.ndarray
    shares: np.ndarray
    gamma_I: np.ndarray
    gamma_A: np.ndarray
    config: FitConfig
    beta: Optional[np.ndarray] = None
    xi: Optional[np.ndarray] = None
    start: Optional[np.ndarray] = None

    def key(self, method: str) -> str:
        parts = [method, self.config.to_json()]
        for name in ("days", "infected", "recovered", "shares", "gamma_I", "gamma_A"):
            parts.append(np.ascontiguousarray(getattr(self, name)).tobytes())
        for name in ("beta", "xi", "start"):
            value = getattr(self, name)
            parts.append(b"" if value is None else np.ascontiguousarray(value).tobytes())
        return digest(*parts)


def _single_node_params(problem, beta, xi, H, edges) -> EpiParams:
    n_ages = len(problem.shares)
    return EpiParams(
        np.asarray(beta, dtype=float).reshape(n_ages, 1),
        problem.gamma_I.reshape(n_ages, 1),
        problem.gamma_A.reshape(n_ages, 1),
        np.asarray(xi, dtype=float).reshape(n_ages, 1, 1),
        np.asarray(H, dtype=float).reshape(n_ages, 1, 1),
        edges,
        problem.config.k,
    )


def _run(params: EpiParams, start: np.ndarray, ta: float, tb: float, h: float):
    return integrate(lambda y, t: rhs_siar(y, params, t), start, ta, tb, h)


def _bound_flags(
    xi: np.ndarray, cfg: FitConfig, where: str
) -> Tuple[np.ndarray, List[str]]:
    flags = []
    xi = np.array(xi, dtype=float)
    upper = xi > 1.0 - BOUND_SLACK
    if np.any(upper):
        xi[upper] = 1.0
        flags.append(f"{where}: xi clamped at 1")
    if np.any(xi < cfg.xi_min + BOUND_SLACK):
        flags.append(f"{where}: xi at lower bound")
    return xi, flags


def _fit_node_phase1(problem: NodeProblem) -> Dict[str, Any]:
    cfg = problem.config
    n_ages = len(problem.shares)
    edges = np.array([cfg.t0, cfg.t_lockdown])
    I0, R0 = problem.infected[0], problem.recovered[0]

    def simulate(beta, xi):
        params = _single_node_params(problem, beta, xi, np.ones(n_ages), edges)
        start = initial_state(I0[:, None], R0[:, None], xi[:, None], problem.shares)
        return _run(params, start, cfg.t0, cfg.t_lockdown, cfg.step)

    def evaluate(beta, xi):
        trajectory = simulate(beta, xi)
        states = trajectory.sample(problem.days)[..., 0]
        return misfit(states, problem.infected, problem.recovered, cfg.p), trajectory

    diagnostics = NodeDiagnostics()
    if not (np.any(problem.infected > 0) or np.any(problem.recovered > 0)):
        beta = np.zeros(n_ages)
        xi = np.full(n_ages, cfg.xi_init)
        diagnostics.flags.append("phase 1: degenerate data, beta at lower bound")
    else:
        x0 = np.concatenate(
            [
                np.full(n_ages, _softplus_inverse(cfg.beta_init)),
                np.full(n_ages, _xi_inverse(cfg.xi_init, cfg.xi_min)),
            ]
        )

        def fun(x):
            return evaluate(_softplus(x[:n_ages]), _xi_of(x[n_ages:], cfg.xi_min))[0]

        x, _, history, iterations, converged = _nelder_mead(
            fun, x0, cfg, f"node {problem.node} phase 1"
        )
        beta = _softplus(x[:n_ages])
        xi = _xi_of(x[n_ages:], cfg.xi_min)
        diagnostics.history = history
        diagnostics.iterations = iterations
        diagnostics.converged = converged
        if not converged:
            diagnostics.flags.append("phase 1: not converged")

    xi, flags = _bound_flags(xi, cfg, "phase 1")
    diagnostics.flags.extend(flags)
    value, trajectory = evaluate(beta, xi)

    return {
        "beta": beta.tolist(),
        "xi": xi.tolist(),
        "objective": value,
        "boundary": [
            trajectory.states[0][..., 0].tolist(),
            trajectory.terminal[..., 0].tolist(),
        ],
        "diagnostics": diagnostics.to_dict(),
    }


def _fit_node_phase2(problem: NodeProblem) -> Dict[str, Any]:
    cfg = problem.config
    n_ages = len(problem.shares)
    state = problem.start[..., None]
    H_previous = np.ones(n_ages)
    xi_previous = np.asarray(problem.xi, dtype=float)

    diagnostics = NodeDiagnostics()
    H_windows, xi_windows, boundary = [], [], [problem.start.tolist()]
    total = 0.0

    for j, (start, fit_end, next_start) in enumerate(cfg.windows()):
        mask = (problem.days >= start - TIME_TOLERANCE) & (
            problem.days <= fit_end + TIME_TOLERANCE
        )
        days = problem.days[mask]
        infected, recovered = problem.infected[mask], problem.recovered[mask]
        edges = np.array([start, fit_end])

        def evaluate(H, xi):
            params = _single_node_params(problem, problem.beta, xi, H, edges)
            trajectory = _run(params, state, start, fit_end, cfg.step)
            states = trajectory.sample(days)[..., 0]
            return misfit(states, infected, recovered, cfg.p), trajectory

        if not np.any(infected > 0):
            H, xi = H_previous, xi_previous
            diagnostics.flags.append(f"window {j + 1}: degenerate, previous H carried")
            diagnostics.window_histories.append([])
        else:
            x0 = np.concatenate(
                [_softplus_inverse(H_previous), _xi_inverse(xi_previous, cfg.xi_min)]
            )

            def fun(x):
                return evaluate(_softplus(x[:n_ages]), _xi_of(x[n_ages:], cfg.xi_min))[0]

            x, _, history, iterations, converged = _nelder_mead(
                fun, x0, cfg, f"node {problem.node} window {j + 1}"
            )
            H = _softplus(x[:n_ages])
            xi = _xi_of(x[n_ages:], cfg.xi_min)
            diagnostics.iterations += iterations
            diagnostics.converged = diagnostics.converged and converged
            diagnostics.window_histories.append(history)
            if not converged:
                diagnostics.flags.append(f"window {j + 1}: not converged")

        xi, flags = _bound_flags(xi, cfg, f"window {j + 1}")
        diagnostics.flags.extend(flags)
        value, trajectory = evaluate(H, xi)
        total += value

        H_windows.append(np.asarray(H, dtype=float).tolist())
        xi_windows.append(np.asarray(xi, dtype=float).tolist())
        state = trajectory.state_at(next_start)
        boundary.append(state[..., 0].tolist())
        H_previous, xi_previous = np.asarray(H, dtype=float), np.asarray(xi, dtype=float)

    return {
        "H": H_windows,
        "xi": xi_windows,
        "objective": total,
        "boundary": boundary,
        "diagnostics": diagnostics.to_dict(),
    }


def _solve(
    method: str,
    worker: Callable[[NodeProblem], Dict[str, Any]],
    problems: List[NodeProblem],
    cache: Optional[ResultCache],
    workers: Optional[int],
) -> List[Dict[str, Any]]:
    """Runs the node fits, through the cache when one is given."""
    if cache is None:
        return parallel_map(worker, problems, workers)

    keys = [problem.key(method) for problem in problems]
    texts = [cache.get(method, key) for key in keys]
    pending = [index for index, text in enumerate(texts) if text is None]
    solved = parallel_map(worker, [problems[i] for i in pending], workers)
    for index, result in zip(pending, solved):
        texts[index] = json.dumps(result)
        cache.put(method, keys[index], texts[index])
    return [json.loads(text) for text in texts]


@dataclass
class CalibrationResult:
    """
    Fitted parameters at every collocation node

    boundary_states holds, per node, the state at each phase boundary: t0 and
    tL after phase 1, the start of every window and T after phase 2; shape
    (n_nodes, n_boundaries, 4, n_ages).
    """

    params: EpiParams
    ages: AgeGrid
    nodes: NodeSet
    shares: np.ndarray
    initial_state: np.ndarray
    boundary_states: np.ndarray
    objectives: np.ndarray
    diagnostics: List[NodeDiagnostics]
    config: FitConfig
    phase: int = 1

    @property
    def t0(self) -> float:
        return float(self.params.edges[0])

    def rhs(self):
        params = self.params
        return lambda y, t: rhs_siar(y, params, t)

    def simulate(self, t_end: float, h: Optional[float] = None) -> Trajectory:
        """Runs the calibrated piecewise model from t0 in a single pass."""
        return integrate(
            self.rhs(), self.initial_state, self.t0, t_end, h or self.config.step
        )

    def to_dict(self) -> Dict[str, Any]:
        parameters = {}
        for m in range(len(self.nodes)):
            per_class = {}
            for a, label in enumerate(self.ages.labels):
                per_class[label] = {
                    "beta": float(self.params.beta[a, m]),
                    "xi_windows": self.params.xi[a, :, m].tolist(),
                    "H_windows": self.params.H[a, :, m].tolist(),
                    "gamma_I": float(self.params.gamma_I[a, m]),
                    "gamma_A": float(self.params.gamma_A[a, m]),
                }
            parameters[str(m)] = per_class

        return {
            "phase": self.phase,
            "config": self.config.to_dict(),
            "k": self.params.k,
            "edges": self.params.edges.tolist(),
            "ages": self.ages.labels,
            "shares": self.shares.tolist(),
            "nodes": self.nodes.to_dict(),
            "initialState": self.initial_state.tolist(),
            "boundaryStates": self.boundary_states.tolist(),
            "objectives": self.objectives.tolist(),
            "diagnostics": [d.to_dict() for d in self.diagnostics],
            "parameters": parameters,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CalibrationResult":
        ages = AgeGrid.from_labels(data["ages"])
        nodes = NodeSet.from_dict(data["nodes"])
        n_nodes = len(nodes)

        def table(name):
            return np.array(
                [
                    [data["parameters"][str(m)][label][name] for m in range(n_nodes)]
                    for label in ages.labels
                ],
                dtype=float,
            )

        params = EpiParams(
            table("beta"),
            table("gamma_I"),
            table("gamma_A"),
            np.transpose(table("xi_windows"), (0, 2, 1)),
            np.transpose(table("H_windows"), (0, 2, 1)),
            np.array(data["edges"], dtype=float),
            float(data["k"]),
        )
        return cls(
            params,
            ages,
            nodes,
            np.array(data["shares"], dtype=float),
            np.array(data["initialState"], dtype=float),
            np.array(data["boundaryStates"], dtype=float),
            np.array(data["objectives"], dtype=float),
            [NodeDiagnostics.from_dict(d) for d in data["diagnostics"]],
            FitConfig.from_dict(data["config"]),
            int(data["phase"]),
        )

    def save(self, path: str):
        with open(path, "w", encoding="utf8") as stream:
            json.dump(self.to_dict(), stream, indent=2)

    @classmethod
    def load(cls, path: str) -> "CalibrationResult":
        with open(path, "r", encoding="utf8") as stream:
            return cls.from_dict(json.load(stream))


def _node_series(data: EpiDataset, name: str, mask: np.ndarray, m: int) -> np.ndarray:
    return data.get(name)[mask, :, m if data.n_nodes > 1 else 0]


def fit_phase1(
    data: EpiDataset,
    nodes: NodeSet,
    cfg: FitConfig,
    gammas: Optional[Tuple[np.ndarray, np.ndarray]] = None,
    cache: Optional[ResultCache] = None,
    workers: Optional[int] = None,
) -> CalibrationResult:
    """
    Fits beta and xi per age class at every node over [t0, tL], with H = 1

    Args:
        data (EpiDataset): daily I and R covering [t0, tL]
        nodes (NodeSet): collocation nodes
        cfg (FitConfig): calibration settings
        gammas (tuple): (gamma_I, gamma_A) of shape (n_ages, n_nodes), sampled
            from the nodes when omitted
        cache (ResultCache): optional store of node fits
        workers (int): worker processes, capped by EPIFORGE_THREADS

    Returns:
        CalibrationResult: phase-1 parameters on the single window [t0, tL]
    """
    gamma_I, gamma_A = gammas if gammas is not None else sample_gammas_for(
        nodes, data.ages
    )
    mask = _window_mask(data, cfg.t0, cfg.t_lockdown)
    days = data.times[mask]
    if abs(days[0] - cfg.t0) > TIME_TOLERANCE:
        raise DatasetError(f"Data do not start at t0={cfg.t0:g}")

    problems = [
        NodeProblem(
            m,
            days,
            _node_series(data, "I", mask, m),
            _node_series(data, "R", mask, m),
            data.shares,
            gamma_I[:, m],
            gamma_A[:, m],
            cfg,
        )
        for m in range(len(nodes))
    ]
    fits = _solve("phase1", _fit_node_phase1, problems, cache, workers)

    n_ages = len(data.ages)
    beta = np.array([fit["beta"] for fit in fits]).T
    xi = np.array([fit["xi"] for fit in fits]).T[:, None, :]
    boundary = np.array([fit["boundary"] for fit in fits])
    params = EpiParams(
        beta,
        gamma_I,
        gamma_A,
        xi,
        np.ones((n_ages, 1, len(nodes))),
        np.array([cfg.t0, cfg.t_lockdown]),
        cfg.k,
    )
    return CalibrationResult(
        params,
        data.ages,
        nodes,
        data.shares,
        np.transpose(boundary[:, 0], (1, 2, 0)),
        boundary,
        np.array([fit["objective"] for fit in fits]),
        [NodeDiagnostics.from_dict(fit["diagnostics"]) for fit in fits],
        cfg,
        phase=1,
    )


def fit_phase2(
    data: EpiDataset,
    phase1: CalibrationResult,
    cfg: Optional[FitConfig] = None,
    cache: Optional[ResultCache] = None,
    workers: Optional[int] = None,
) -> CalibrationResult:
    """
    Fits weekly H and xi per age class at every node over [tL, T]

    Each window starts from the terminal state of the previous one, the
    first from the phase-1 state at tL.
    """
    cfg = cfg or phase1.config
    if data.times[0] > cfg.t_lockdown + TIME_TOLERANCE or data.times[-1] < (
        cfg.t_lockdown + cfg.stride
    ):
        raise DatasetError(
            f"Data [{data.times[0]:g}, {data.times[-1]:g}] do not cover the "
            f"restricted window from tL={cfg.t_lockdown:g}"
        )
    mask = (data.times >= cfg.t_lockdown - TIME_TOLERANCE) & (
        data.times <= cfg.t_end + TIME_TOLERANCE
    )
    # Raises on missing days
    _window_mask(data, cfg.t_lockdown, min(cfg.t_end, data.times[-1]))
    days = data.times[mask]
    nodes = phase1.nodes

    problems = [
        NodeProblem(
            m,
            days,
            _node_series(data, "I", mask, m),
            _node_series(data, "R", mask, m),
            data.shares,
            phase1.params.gamma_I[:, m],
            phase1.params.gamma_A[:, m],
            cfg,
            beta=phase1.params.beta[:, m],
            xi=phase1.params.xi[:, 0, m],
            start=phase1.boundary_states[m, -1],
        )
        for m in range(len(nodes))
    ]
    fits = _solve("phase2", _fit_node_phase2, problems, cache, workers)

    n_ages = len(phase1.ages)
    n_nodes = len(nodes)
    edges = window_edges(cfg.t0, cfg.t_lockdown, cfg.t_end, cfg.stride)
    xi = np.empty((n_ages, len(edges) - 1, n_nodes))
    H = np.ones_like(xi)
    xi[:, 0, :] = phase1.params.xi[:, 0, :]
    for m, fit in enumerate(fits):
        xi[:, 1:, m] = np.array(fit["xi"]).T
        H[:, 1:, m] = np.array(fit["H"]).T

    params = EpiParams(
        phase1.params.beta,
        phase1.params.gamma_I,
        phase1.params.gamma_A,
        xi,
        H,
        edges,
        cfg.k,
    )

    diagnostics = []
    for first, fit in zip(phase1.diagnostics, fits):
        second = NodeDiagnostics.from_dict(fit["diagnostics"])
        diagnostics.append(
            NodeDiagnostics(
                first.iterations + second.iterations,
                first.converged and second.converged,
                first.flags + second.flags,
                first.history,
                second.window_histories,
            )
        )

    return CalibrationResult(
        params,
        phase1.ages,
        nodes,
        phase1.shares,
        phase1.initial_state,
        np.array([fit["boundary"] for fit in fits]),
        np.array([fit["objective"] for fit in fits]),
        diagnostics,
        cfg,
        phase=2,
    )


def simulate(calib: CalibrationResult, t_end: float, h: Optional[float] = None):
    return calib.simulate(t_end, h)


def fit_frame(calib: CalibrationResult, data: EpiDataset) -> pd.DataFrame:
    """
    Calibrated fit against data: node mean and 95% band of I and R per day
    and age class
    """
    t_last = min(float(data.times[-1]), float(calib.params.edges[-1]))
    mask = (data.times >= calib.t0 - TIME_TOLERANCE) & (
        data.times <= t_last + TIME_TOLERANCE
    )
    days = data.times[mask]
    states = calib.simulate(t_last).sample(days)
    weights = calib.nodes.weights

    rows = {
        "t": np.repeat(days, len(calib.ages)),
        "age_class": np.tile(calib.ages.labels, len(days)),
    }
    for name in ("I", "R"):
        c = COMPARTMENTS.index(name)
        values = states[:, c]
        band = weighted_quantile(values, weights, [0.025, 0.975], axis=2)
        rows[f"{name}_data"] = data.get(name)[mask, :, 0].reshape(-1)
        rows[f"{name}_mean"] = expect(calib.nodes, values, axis=2).reshape(-1)
        rows[f"{name}_lo"] = band[0].reshape(-1)
        rows[f"{name}_hi"] = band[1].reshape(-1)
    return pd.DataFrame(rows)
