"""
evaluation
==========

Forecast errors against data, the accuracy and cost tables, epidemic-peak
metrics and the JSON summary of a run.
"""

from dataclasses import (
    dataclass,
    field,
)
from typing import (
    Any,
    Dict,
    List,
    Optional,
    Sequence,
    Tuple,
)

import numpy as np
import pandas as pd
from colorama import (
    Fore,
    Style,
)
from dataclasses_json import (
    LetterCase,
    dataclass_json,
)

NETWORKS = ("nar", "pinn")
DATA_KINDS = ("synthetic", "real")
VARIANTS = ("siar", "siar_aged")
TABLE_COLUMNS = [
    "NAR (synthetic)",
    "NAR (real)",
    "PINN (synthetic)",
    "PINN (real)",
]
NON_AGED_ROW = "Non-aged model"
ALIGN_TOLERANCE = 1e-6


def column_name(network: str, data_kind: str) -> str:
    label = "NAR" if network == "nar" else "PINN"
    return f"{label} ({data_kind})"


def row_name(variant: str, age_label: str) -> str:
    return NON_AGED_ROW if variant == "siar" else f"Age {age_label}"


def align(pred_times, pred, data_times) -> np.ndarray:
    """Prediction rows at the data times, which must all be prediction times."""
    pred_times = np.asarray(pred_times, dtype=float)
    index = []
    for t in np.asarray(data_times, dtype=float):
        hits = np.flatnonzero(np.abs(pred_times - t) <= ALIGN_TOLERANCE)
        if len(hits) == 0:
            raise ValueError(f"misaligned times: no prediction at t={t:g}")
        index.append(hits[0])
    return np.asarray(pred)[np.array(index, dtype=int)]


def pointwise_error(pred, data) -> np.ndarray:
    """Absolute error per (time, age class)."""
    pred = np.asarray(pred, dtype=float)
    data = np.asarray(data, dtype=float)
    if pred.shape != data.shape:
        raise ValueError(
            f"misaligned times: prediction {pred.shape} vs data {data.shape}"
        )
    return np.abs(data - pred)


@dataclass
class ErrorReport:
    variant: str
    network: str
    data_kind: str
    seed: int
    times: np.ndarray
    ages: List[str]
    curves: np.ndarray
    seconds: float = float("nan")
    epochs: int = 0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.curves = np.asarray(self.curves, dtype=float)
        if self.curves.shape != (len(self.times), len(self.ages)):
            raise ValueError(
                f"Error curves must have shape ({len(self.times)}, {len(self.ages)})"
            )
        if self.network not in NETWORKS or self.data_kind not in DATA_KINDS:
            raise ValueError(f"Unknown experiment {self.network}/{self.data_kind}")
        if self.variant not in VARIANTS:
            raise ValueError(f"Unknown model variant '{self.variant}'")

    @property
    def max_errors(self) -> np.ndarray:
        return self.curves.max(axis=0)

    @property
    def column(self) -> str:
        return column_name(self.network, self.data_kind)

    @property
    def rows(self) -> List[str]:
        return [row_name(self.variant, label) for label in self.ages]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "t": np.repeat(self.times, len(self.ages)),
                "age_class": np.tile(self.ages, len(self.times)),
                "error": self.curves.reshape(-1),
            }
        )


def _row_order(row: str) -> Tuple[int, str]:
    return (0, "") if row == NON_AGED_ROW else (1, row)


def _cells(reports: Sequence[ErrorReport]) -> Dict[Tuple[str, str], List[float]]:
    cells: Dict[Tuple[str, str], List[float]] = {}
    for report in sorted(reports, key=lambda r: (r.variant, r.column, r.seed)):
        for row, value in zip(report.rows, report.max_errors):
            cells.setdefault((row, report.column), []).append(float(value))
    return cells


def table2(reports: Sequence[ErrorReport]) -> pd.DataFrame:
    """
    Maximum test error per row (model or age class) and network/data column

    Cells are medians over seeds; missing cells are NaN and reported with a
    warning.
    """
    cells = _cells(reports)
    rows: List[str] = []
    for report in reports:
        for row in report.rows:
            if row not in rows:
                rows.append(row)
    rows.sort(key=_row_order)

    table = pd.DataFrame(index=pd.Index(rows, name="model"), columns=TABLE_COLUMNS)
    table = table.astype(float)
    for row in rows:
        for column in TABLE_COLUMNS:
            values = cells.get((row, column))
            if values is None:
                print(
                    Fore.YELLOW
                    + f"WARNING: no result for {row} / {column}"
                    + Style.RESET_ALL
                )
                continue
            table.loc[row, column] = float(np.median(values))
    return table


def write_table(table: pd.DataFrame, path: str):
    table.to_csv(path, na_rep="", float_format="%.17g")


@dataclass_json(letter_case=LetterCase.CAMEL)
@dataclass
class Timing:
    variant: str
    network: str
    data_kind: str
    seed: int
    seconds: float
    epochs: int

    @property
    def per_epoch(self) -> float:
        if self.epochs <= 0:
            raise ValueError("no timing: zero epochs")
        return self.seconds / self.epochs


def cost_report(timings: Sequence[Timing]) -> pd.DataFrame:
    """
    Training seconds per configuration and the PINN / NAR per-epoch ratio

    Rows are (variant, data kind); seconds and epochs are medians over seeds.
    """
    if not timings:
        raise ValueError("no timing")
    groups: Dict[Tuple[str, str], Dict[str, List[Timing]]] = {}
    for timing in timings:
        if timing.epochs <= 0:
            raise ValueError(f"no timing for {timing.network}/{timing.data_kind}")
        group = groups.setdefault((timing.variant, timing.data_kind), {})
        group.setdefault(timing.network, []).append(timing)

    records = []
    for (variant, data_kind), group in sorted(groups.items()):
        record: Dict[str, Any] = {"variant": variant, "data": data_kind}
        per_epoch = {}
        for network in NETWORKS:
            entries = group.get(network, [])
            label = network.upper()
            if entries:
                record[f"{label} seconds"] = float(
                    np.median([entry.seconds for entry in entries])
                )
                record[f"{label} epochs"] = int(
                    np.median([entry.epochs for entry in entries])
                )
                per_epoch[network] = float(
                    np.median([entry.per_epoch for entry in entries])
                )
            else:
                record[f"{label} seconds"] = np.nan
                record[f"{label} epochs"] = np.nan
        if len(per_epoch) == 2 and per_epoch["nar"] > 0:
            record["per-epoch ratio"] = per_epoch["pinn"] / per_epoch["nar"]
        else:
            record["per-epoch ratio"] = np.nan
        records.append(record)
    return pd.DataFrame.from_records(records)


@dataclass_json(letter_case=LetterCase.CAMEL)
@dataclass
class PeakMetrics:
    peak_time_pred: float
    peak_time_data: float
    delta_days: float
    height_delta: float
    flags: List[str] = field(default_factory=list)


def _peak(times: np.ndarray, values: np.ndarray, name: str) -> Tuple[float, float, list]:
    flags = []
    top = np.max(values)
    maximizers = np.flatnonzero(values == top)
    index = int(maximizers[0])
    if len(maximizers) > 1:
        flags.append(f"{name}: no unique peak, earliest maximizer reported")
    if index == 0 or index == len(values) - 1:
        flags.append(f"{name}: peak at the window boundary")
    return float(times[index]), float(top), flags


def peak_metrics(pred_times, pred, data_times, data) -> PeakMetrics:
    """Infected-peak times and height of a prediction and of the data."""
    pred = np.asarray(pred, dtype=float)
    data = np.asarray(data, dtype=float)
    if pred.ndim != 1 or data.ndim != 1 or len(pred) == 0 or len(data) == 0:
        raise ValueError("Peak metrics need non-empty one-dimensional series")
    t_pred, h_pred, pred_flags = _peak(np.asarray(pred_times), pred, "prediction")
    t_data, h_data, data_flags = _peak(np.asarray(data_times), data, "data")
    return PeakMetrics(
        t_pred, t_data, t_pred - t_data, h_pred - h_data, pred_flags + data_flags
    )


def _spread(values: Sequence[float]) -> Dict[str, float]:
    return {
        "min": float(np.min(values)),
        "median": float(np.median(values)),
        "max": float(np.max(values)),
    }


def summary(
    reports: Sequence[ErrorReport],
    peaks: Optional[Dict[str, PeakMetrics]] = None,
    mode: str = "short",
) -> Dict[str, Any]:
    """Every metric of a run with min / median / max across seeds."""
    cells = _cells(reports)
    errors: Dict[str, Dict[str, Any]] = {}
    ordered = sorted(cells.items(), key=lambda kv: (_row_order(kv[0][0]), kv[0][1]))
    for (row, column), values in ordered:
        errors.setdefault(row, {})[column] = _spread(values)
    return {
        "mode": mode,
        "seeds": sorted({report.seed for report in reports}),
        "maxErrors": errors,
        "peaks": {name: peak.to_dict() for name, peak in sorted((peaks or {}).items())},
    }
