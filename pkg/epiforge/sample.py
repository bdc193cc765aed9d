"""
sample
======

Generator of the bundled sample dataset: the age-structured social SIAR
model run with a fixed ground truth and written as reported counts.
"""

import datetime
from typing import Tuple

import numpy as np
import pandas as pd

from .dataset import CALENDAR_ORIGIN
from .integrator import integrate
from .models import (
    AgeGrid,
    EpiParams,
    initial_state,
    rhs_siar,
    sample_gammas_for,
    window_edges,
)
from .quadrature import (
    BetaSpec,
    NodeSet,
)

SAMPLE_POPULATION = 10027602
SAMPLE_START = datetime.date(2020, 10, 8)
SAMPLE_END = datetime.date(2021, 1, 18)

SAMPLE_SHARES = np.array([0.16, 0.06, 0.33, 0.22, 0.11, 0.12])
SAMPLE_BETA = np.array([0.28, 0.34, 0.32, 0.30, 0.27, 0.26])
SAMPLE_XI = 0.3
# Weekly contact reduction from 2020-10-21 onwards
SAMPLE_H = np.array(
    [0.95, 0.9, 0.85, 0.8, 0.76, 0.72, 0.68, 0.66, 0.65, 0.65, 0.66, 0.67, 0.68]
)
SAMPLE_INFECTED = 1.2e-3
SAMPLE_RECOVERED = 1.1e-2
SAMPLE_K = 0.1


def ground_truth(
    z1: BetaSpec = BetaSpec(2.1, 5.1), z2: BetaSpec = BetaSpec(1.8, 3.9)
) -> Tuple[EpiParams, np.ndarray]:
    """Parameters and initial state of the sample epidemic, at the mean
    recovery rates."""
    ages = AgeGrid.default()
    nodes = NodeSet(np.array([z1.mean]), np.array([z2.mean]), np.ones(1))
    gamma_I, gamma_A = sample_gammas_for(nodes, ages)

    t0 = float(SAMPLE_START.toordinal() - CALENDAR_ORIGIN.toordinal())
    edges = window_edges(t0, 15.0, 105.0, 7)
    n_ages, n_windows = len(ages), len(edges) - 1

    H = np.ones((n_ages, n_windows, 1))
    H[:, 1:, 0] = SAMPLE_H[None, :]
    params = EpiParams(
        SAMPLE_BETA[:, None],
        gamma_I,
        gamma_A,
        np.full((n_ages, n_windows, 1), SAMPLE_XI),
        H,
        edges,
        SAMPLE_K,
    )
    start = initial_state(
        (SAMPLE_INFECTED * SAMPLE_SHARES)[:, None],
        (SAMPLE_RECOVERED * SAMPLE_SHARES)[:, None],
        np.full((n_ages, 1), SAMPLE_XI),
        SAMPLE_SHARES,
    )
    return params, start


def generate(path: str, h: float = 0.1) -> pd.DataFrame:
    """
    Writes the sample dataset as an observed-data CSV

    Args:
        path (str): output CSV path
        h (float): integration step of the ground-truth run

    Returns:
        pd.DataFrame: the rows written
    """
    params, start = ground_truth()
    ages = AgeGrid.default()
    t0 = params.edges[0]
    t_last = float(SAMPLE_END.toordinal() - CALENDAR_ORIGIN.toordinal())

    trajectory = integrate(lambda y, t: rhs_siar(y, params, t), start, t0, t_last, h)
    days = np.arange(t0, t_last + 1.0)
    states = trajectory.sample(days)[..., 0]

    infected = np.rint(states[:, 1] * SAMPLE_POPULATION).astype(np.int64)
    recovered = np.rint(states[:, 3] * SAMPLE_POPULATION).astype(np.int64)
    class_population = np.rint(SAMPLE_SHARES * SAMPLE_POPULATION).astype(np.int64)

    rows = []
    for n, day in enumerate(days):
        date = CALENDAR_ORIGIN + datetime.timedelta(days=int(day))
        for a, label in enumerate(ages.labels):
            rows.append(
                {
                    "date": date.isoformat(),
                    "age_class": label,
                    "infected": int(infected[n, a]),
                    "recovered": int(recovered[n, a]),
                    "population": SAMPLE_POPULATION,
                    "class_population": int(class_population[a]),
                }
            )
    frame = pd.DataFrame(rows)
    frame.to_csv(path, index=False)
    return frame
