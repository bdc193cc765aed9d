"""
dataset
=======

Reported and synthetic epidemic series as population fractions.

Series are dense arrays of shape (n_times, n_ages, n_nodes). Observed data
carry a single node and daily resolution; synthetic data produced by
augmentation carry one node per collocation node of the calibration.
"""

import datetime
import math
import os
from dataclasses import (
    dataclass,
    field,
    replace,
)
from typing import (
    Dict,
    Optional,
    Tuple,
)

import numpy as np
import pandas as pd
from colorama import (
    Fore,
    Style,
)

from .integrator import integrate
from .models import (
    COMPARTMENTS,
    AgeGrid,
    ModelError,
    rhs_siar,
)
from .quadrature import (
    NodeSet,
    expect,
)

CALENDAR_ORIGIN = datetime.date(2020, 10, 6)
OBSERVED_COLUMNS = ["date", "age_class", "infected", "recovered", "population"]
KINDS = ("observed", "synthetic")

# Inclusive day ranges (train, test) of the two experiments
SPLITS = {
    "short": ((15.0, 94.0), (95.0, 104.0)),
    "long": ((15.0, 44.0), (45.0, 89.0)),
}

TIME_TOLERANCE = 1e-9
FRACTION_SLACK = 1e-9


class DatasetError(ValueError):
    pass


def day_index(date) -> int:
    """Days elapsed since the calendar origin (2020-10-06)."""
    if isinstance(date, str):
        date = datetime.date.fromisoformat(date)
    return (date - CALENDAR_ORIGIN).days


def split_mode(mode: str) -> str:
    """Normalize short/long split names, accepting the *_term spelling."""
    name = mode[: -len("_term")] if mode.endswith("_term") else mode
    if name not in SPLITS:
        raise DatasetError(f"Unknown split mode '{mode}', expected short or long")
    return name


@dataclass
class EpiDataset:
    times: np.ndarray
    ages: AgeGrid
    series: Dict[str, np.ndarray]
    shares: np.ndarray
    kind: str = "observed"
    split: str = "unsplit"
    resolution: float = 1.0
    nodes: Optional[NodeSet] = field(default=None, compare=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.shares = np.asarray(self.shares, dtype=float)
        if self.kind not in KINDS:
            raise DatasetError(f"Unknown dataset kind '{self.kind}'")
        if len(self.times) == 0:
            raise DatasetError("no records")
        if np.any(np.diff(self.times) <= 0):
            raise DatasetError("Times must be strictly increasing")
        if not self.series:
            raise DatasetError("A dataset needs at least one compartment series")

        shape = None
        for name, values in self.series.items():
            if name not in COMPARTMENTS:
                raise DatasetError(f"Unknown compartment '{name}'")
            values = np.asarray(values, dtype=float)
            if values.ndim != 3:
                raise DatasetError(
                    f"Series {name} must have shape (n_times, n_ages, n_nodes)"
                )
            if shape is None:
                shape = values.shape
            elif values.shape != shape:
                raise DatasetError("All compartment series must share one shape")
            if np.any(values < -FRACTION_SLACK) or np.any(values > 1 + FRACTION_SLACK):
                raise DatasetError(f"Series {name} holds values outside [0, 1]")
            self.series[name] = values

        if shape[0] != len(self.times) or shape[1] != len(self.ages):
            raise DatasetError(
                f"Series shape {shape} does not match {len(self.times)} times "
                f"and {len(self.ages)} age classes"
            )
        if self.shares.shape != (len(self.ages),):
            raise DatasetError("One population share per age class is required")
        if self.kind == "observed" and shape[2] != 1:
            raise DatasetError("Observed data carry a single node")
        if self.kind == "synthetic":
            if self.nodes is None or len(self.nodes) != shape[2]:
                raise DatasetError("Synthetic data need one collocation node per series")

    @property
    def n_times(self) -> int:
        return len(self.times)

    @property
    def n_ages(self) -> int:
        return len(self.ages)

    @property
    def n_nodes(self) -> int:
        return next(iter(self.series.values())).shape[2]

    @property
    def weights(self) -> np.ndarray:
        return self.nodes.weights if self.nodes is not None else np.ones(1)

    def has(self, name: str) -> bool:
        return name in self.series

    def get(self, name: str) -> np.ndarray:
        if name not in self.series:
            raise DatasetError(f"missing compartment series '{name}'")
        return self.series[name]

    def node_mean(self, name: str) -> np.ndarray:
        """Collocation mean of a series, shape (n_times, n_ages)."""
        values = self.get(name)
        if self.nodes is None:
            return values[:, :, 0]
        return expect(self.nodes, values, axis=2)

    def window(self, lo: float, hi: float, split: Optional[str] = None) -> "EpiDataset":
        """Samples with lo <= t <= hi."""
        mask = (self.times >= lo - TIME_TOLERANCE) & (self.times <= hi + TIME_TOLERANCE)
        if not np.any(mask):
            raise DatasetError(f"No samples in [{lo:g}, {hi:g}]")
        return replace(
            self,
            times=self.times[mask],
            series={name: values[mask] for name, values in self.series.items()},
            split=split or self.split,
        )

    def to_frame(self) -> pd.DataFrame:
        """Long format table: t, age_class, node, share, then the series."""
        n_times, n_ages, n_nodes = self.n_times, self.n_ages, self.n_nodes
        t, a, m = np.meshgrid(
            np.arange(n_times), np.arange(n_ages), np.arange(n_nodes), indexing="ij"
        )
        a = a.reshape(-1)
        frame = pd.DataFrame(
            {
                "t": self.times[t.reshape(-1)],
                "age_class": np.array(self.ages.labels)[a],
            }
        )
        if self.kind == "synthetic":
            frame["node"] = m.reshape(-1)
        else:
            frame["node"] = pd.array([pd.NA] * len(frame), dtype="Int64")
        frame["share"] = self.shares[a]
        for name in COMPARTMENTS:
            if name in self.series:
                frame[name] = self.series[name].reshape(-1)
            else:
                frame[name] = np.nan
        return frame


def ingest(
    csv_path: str, ages: Optional[AgeGrid] = None, aggregate: bool = False
) -> EpiDataset:
    """
    Reads reported counts and converts them to population fractions

    Args:
        csv_path (str): CSV with header date,age_class,infected,recovered,
            population and an optional class_population column
        ages (AgeGrid): age classes of the file, the six default classes
            unless given
        aggregate (bool): sum all classes into the single class 'all'

    Returns:
        EpiDataset: observed daily series of I and R, sorted by (t, age class)
    """
    if not os.path.exists(csv_path):
        raise FileNotFoundError(f"Data file {csv_path} not found")
    ages = ages or AgeGrid.default()

    try:
        frame = pd.read_csv(csv_path, dtype={"age_class": str})
    except pd.errors.EmptyDataError:
        raise DatasetError(f"{csv_path}: no records")
    missing = [c for c in OBSERVED_COLUMNS if c not in frame.columns]
    if missing:
        raise DatasetError(f"{csv_path}: missing columns {', '.join(missing)}")
    if len(frame) == 0:
        raise DatasetError(f"{csv_path}: no records")

    def row_of(index) -> int:
        # Header is line 1
        return int(index) + 2

    for index, label in frame["age_class"].items():
        if label not in ages.labels:
            raise DatasetError(
                f"{csv_path}: unknown age class '{label}' at row {row_of(index)}"
            )

    duplicated = frame.duplicated(["date", "age_class"], keep="first")
    if duplicated.any():
        index = duplicated.idxmax()
        raise DatasetError(
            f"{csv_path}: duplicate record for date {frame.at[index, 'date']} and "
            f"age class {frame.at[index, 'age_class']} at row {row_of(index)}"
        )

    count_columns = ["infected", "recovered", "population"]
    if "class_population" in frame.columns:
        count_columns.append("class_population")
    for column in count_columns:
        negative = frame[column] < 0
        if negative.any():
            raise DatasetError(
                f"{csv_path}: negative {column} count at row "
                f"{row_of(negative.idxmax())}"
            )

    try:
        dates = pd.to_datetime(frame["date"], format="%Y-%m-%d")
    except ValueError as e:
        raise DatasetError(f"{csv_path}: invalid date ({e})")
    frame["t"] = (dates - pd.Timestamp(CALENDAR_ORIGIN)).dt.days.astype(float)
    frame["age_index"] = frame["age_class"].map(ages.index)
    frame = frame.sort_values(["t", "age_index"], kind="stable").reset_index(drop=True)

    per_date = frame.groupby("t", sort=True)
    if (per_date["population"].nunique() > 1).any():
        raise DatasetError(f"{csv_path}: population differs across classes on a date")
    if (per_date.size() != len(ages)).any():
        raise DatasetError(f"{csv_path}: some dates lack age classes")

    times = np.array(sorted(per_date.groups.keys()), dtype=float)
    if np.any(np.diff(times) != 1.0):
        raise DatasetError(f"{csv_path}: missing observed days")

    population = per_date["population"].first().to_numpy(dtype=float)
    steps = np.diff(population)
    if np.any(steps > 0) and np.any(steps < 0):
        raise DatasetError(f"{csv_path}: non-monotone population")
    total = population[0]
    if total <= 0:
        raise DatasetError(f"{csv_path}: population must be positive")

    shape = (len(times), len(ages), 1)
    infected = frame["infected"].to_numpy(dtype=float).reshape(shape) / total
    recovered = frame["recovered"].to_numpy(dtype=float).reshape(shape) / total

    if "class_population" in frame.columns:
        first = frame[frame["t"] == times[0]]
        shares = first["class_population"].to_numpy(dtype=float) / total
    else:
        print(
            Fore.YELLOW
            + f"WARNING: {csv_path} has no class_population column, "
            + "assuming equal age-class shares"
            + Style.RESET_ALL
        )
        shares = np.full(len(ages), 1.0 / len(ages))

    data = EpiDataset(
        times, ages, {"I": infected, "R": recovered}, shares, kind="observed"
    )
    return aggregate_classes(data) if aggregate else data


def aggregate_classes(data: EpiDataset) -> EpiDataset:
    """Sums every age class into the single class of the non-aged model."""
    return replace(
        data,
        ages=AgeGrid.single(),
        series={
            name: values.sum(axis=1, keepdims=True)
            for name, values in data.series.items()
        },
        shares=np.array([data.shares.sum()]),
    )


def write_csv(data: EpiDataset, path: str):
    """Writes a dataset as fractions at full precision."""
    data.to_frame().to_csv(path, index=False, float_format="%.17g")


def read_csv(
    path: str,
    nodes: Optional[NodeSet] = None,
    split: str = "unsplit",
    resolution: Optional[float] = None,
) -> EpiDataset:
    """Reads a dataset written by write_csv."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"Data file {path} not found")
    frame = pd.read_csv(
        path,
        float_precision="round_trip",
        dtype={"age_class": str, "node": "Int64"},
    )
    if len(frame) == 0:
        raise DatasetError(f"{path}: no records")

    labels = list(dict.fromkeys(frame["age_class"]))
    try:
        ages = AgeGrid.from_labels(labels)
    except ModelError as e:
        raise DatasetError(f"{path}: {e}")

    synthetic = frame["node"].notna().any()
    frame["age_index"] = frame["age_class"].map(ages.index)
    frame["node_index"] = frame["node"].fillna(0).astype(int)
    frame = frame.sort_values(["t", "age_index", "node_index"], kind="stable")

    times = np.array(sorted(frame["t"].unique()), dtype=float)
    n_nodes = int(frame["node_index"].max()) + 1
    shape = (len(times), len(ages), n_nodes)
    if len(frame) != np.prod(shape):
        raise DatasetError(f"{path}: incomplete (t, age_class, node) grid")

    series = {
        name: frame[name].to_numpy(dtype=float).reshape(shape)
        for name in COMPARTMENTS
        if name in frame.columns and frame[name].notna().all()
    }
    first = frame[frame["t"] == times[0]]
    shares = first.groupby("age_index", sort=True)["share"].first().to_numpy(float)

    if resolution is None:
        resolution = float(round(times[1] - times[0], 9)) if len(times) > 1 else 1.0

    return EpiDataset(
        times,
        ages,
        series,
        shares,
        kind="synthetic" if synthetic else "observed",
        split=split,
        resolution=resolution,
        nodes=nodes if synthetic else None,
    )


def split(data: EpiDataset, mode: str) -> Tuple[EpiDataset, EpiDataset]:
    """
    Train/test partition of one of the two experiments

    short: train on days 15-94, test on days 95-104.
    long: train on days 15-44, test on days 45-89.
    """
    (train_lo, train_hi), (test_lo, test_hi) = SPLITS[split_mode(mode)]
    first, last = data.times[0], data.times[-1]
    if first > train_lo + TIME_TOLERANCE or last < test_hi - TIME_TOLERANCE:
        raise DatasetError(
            f"Requested window [{train_lo:g}, {test_hi:g}] not covered by data "
            f"[{first:g}, {last:g}]"
        )
    train = data.window(train_lo, train_hi, split="train")
    test = data.window(test_lo, test_hi, split="test")
    return train, test


def split_manifest(mode: str) -> dict:
    name = split_mode(mode)
    (train_lo, train_hi), (test_lo, test_hi) = SPLITS[name]
    return {
        "mode": name,
        "train": [train_lo, train_hi],
        "test": [test_lo, test_hi],
    }


def augment(calib, window: Tuple[float, float], h: float) -> EpiDataset:
    """
    Synthetic per-node series of every compartment from the calibrated model

    Samples are taken at ta + k h for k = 0 .. floor((tb - ta) / h).

    Args:
        calib (CalibrationResult): calibrated model
        window (tuple): span [ta, tb] in days
        h (float): sampling and integration step

    Returns:
        EpiDataset: synthetic dataset with S, I, A and R
    """
    ta, tb = float(window[0]), float(window[1])
    if not h > 0:
        raise ValueError(f"Augmentation step must be positive, got {h}")
    if tb < ta:
        raise DatasetError(f"Empty augmentation window [{ta:g}, {tb:g}]")
    t0, t_end = calib.params.edges[0], calib.params.edges[-1]
    if ta < t0 - TIME_TOLERANCE or tb > t_end + TIME_TOLERANCE:
        raise DatasetError(
            f"Calibration covers [{t0:g}, {t_end:g}], not [{ta:g}, {tb:g}]"
        )

    start = calib.simulate(ta, h).terminal if ta > t0 + TIME_TOLERANCE else (
        calib.initial_state
    )
    n_samples = int(math.floor((tb - ta) / h + TIME_TOLERANCE)) + 1
    if n_samples == 1:
        times = np.array([ta])
        states = start[None]
    else:
        params = calib.params
        trajectory = integrate(
            lambda y, t: rhs_siar(y, params, t), start, ta, ta + (n_samples - 1) * h, h
        )
        times, states = trajectory.times, trajectory.states

    return EpiDataset(
        times,
        calib.ages,
        {name: states[:, c] for c, name in enumerate(COMPARTMENTS)},
        calib.shares,
        kind="synthetic",
        resolution=h,
        nodes=calib.nodes,
    )


def reconstruct_compartments(data: EpiDataset, calib) -> EpiDataset:
    """
    Adds S and A to observed I, R series

    A follows the node-averaged symptomatic fraction, A = (1 - xi) / xi I,
    and S closes each class total.
    """
    params = calib.params.node_average(calib.nodes.weights)
    xi = np.stack([params.xi_at(t)[:, 0] for t in data.times])[:, :, None]
    infected = data.get("I")
    recovered = data.get("R")
    asymptomatic = (1.0 - xi) / xi * infected
    susceptible = data.shares[None, :, None] - infected - asymptomatic - recovered
    return replace(
        data,
        series={"S": susceptible, "I": infected, "A": asymptomatic, "R": recovered},
    )
