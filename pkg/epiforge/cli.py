"""Command-line entry point running the pipeline stage by stage."""
import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
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
from colorama import (
    Fore,
    Style,
)

from . import (
    clear_cache,
    nar,
    pinn,
    sample,
)
from .cache import ResultCache
from .calibration import (
    CalibrationResult,
    fit_frame,
    fit_phase1,
    fit_phase2,
)
from .config import (
    ConfigError,
    load_config,
)
from .dataset import (
    DatasetError,
    EpiDataset,
    augment,
    ingest,
    read_csv,
    reconstruct_compartments,
    split,
    split_manifest,
    write_csv,
)
from .evaluation import (
    TABLE_COLUMNS,
    ErrorReport,
    Timing,
    align,
    cost_report,
    peak_metrics,
    pointwise_error,
    summary,
    table2,
    write_table,
)
from .network import (
    Checkpoint,
    TrainingDivergence,
    TrainingHistory,
)
from .quadrature import (
    NodeSet,
    build_grid,
    combine_grids,
)
from .report import (
    generate_report,
    table_rows,
)
from .utils import set_verbose

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT = 2
EXIT_USAGE = 64

DATA_KINDS = ("synthetic", "real")
NETWORKS = ("nar", "pinn")


class MissingInput(FileNotFoundError):
    pass


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(Fore.RED + f"ERROR: {message}" + Style.RESET_ALL, file=sys.stderr)
        sys.exit(EXIT_USAGE)


@dataclass
class Layout:
    """Artifact paths below the output directory."""

    root: Path
    mode: str

    @property
    def calibration(self) -> Path:
        return self.root / "calibration.json"

    @property
    def phase1(self) -> Path:
        return self.root / "calibration_phase1.json"

    @property
    def fit(self) -> Path:
        return self.root / "calibration_fit.csv"

    @property
    def observed(self) -> Path:
        return self.root / "observed.csv"

    @property
    def synthetic(self) -> Path:
        return self.root / "synthetic.csv"

    @property
    def experiment(self) -> Path:
        return self.root / self.mode

    @property
    def split(self) -> Path:
        return self.experiment / "split.json"

    @property
    def timing_dir(self) -> Path:
        return self.experiment / "timing"

    def seed_dir(self, seed: int) -> Path:
        return self.experiment / f"seed_{seed}"

    def checkpoint(self, seed: int, network: str, kind: str) -> Path:
        return self.seed_dir(seed) / f"{network}_{kind}.json"

    def history(self, seed: int, network: str, kind: str) -> Path:
        return self.seed_dir(seed) / f"{network}_{kind}_history.csv"

    def forecast(self, seed: int, network: str, kind: str) -> Path:
        return self.seed_dir(seed) / f"forecast_{network}_{kind}.csv"

    def timing(self, seed: int, network: str, kind: str) -> Path:
        return self.timing_dir / f"{network}_{kind}_seed_{seed}.json"


def _produced(path: Path):
    print(Fore.GREEN + f"+ {path}" + Style.RESET_ALL)


def _header(message: str):
    print(Style.BRIGHT + f"* {message}" + Style.RESET_ALL)


def _warn(message: str):
    print(Fore.YELLOW + f"WARNING: {message}" + Style.RESET_ALL)


def _require(path: Path, stage: str) -> Path:
    if not path.exists():
        raise MissingInput(f"{path} not found, run `epiforge {stage}` first")
    return path


def _write_json(path: Path, data: Any):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf8") as stream:
        json.dump(data, stream, indent=2)
        stream.write("\n")
    _produced(path)


def _read_json(path: Path) -> Any:
    with open(path, "r", encoding="utf8") as stream:
        return json.load(stream)


def _write_frame(frame: pd.DataFrame, path: Path, **kwargs):
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, float_format="%.17g", **kwargs)
    _produced(path)


def _nodes(config) -> NodeSet:
    grid1 = build_grid(config.betaI, int(config.quadratureNodes))
    grid2 = build_grid(config.betaA, int(config.quadratureNodes))
    return combine_grids(grid1, grid2, config.uncertaintyPairing)


def _observed(config) -> EpiDataset:
    if config.dataPath is None:
        raise ConfigError("dataPath is not set")
    return ingest(config.dataPath, aggregate=config.modelVariant == "siar")


def _calibration(layout: Layout) -> CalibrationResult:
    return CalibrationResult.load(str(_require(layout.calibration, "calibrate")))


def _datasets(layout: Layout, calib: CalibrationResult) -> Dict[str, EpiDataset]:
    return {
        "synthetic": read_csv(
            str(_require(layout.synthetic, "augment")), nodes=calib.nodes
        ),
        "real": read_csv(str(_require(layout.observed, "augment"))),
    }


def _record_training(
    layout: Layout,
    config,
    seed: int,
    network: str,
    kind: str,
    history: TrainingHistory,
):
    _write_frame(
        pd.DataFrame(history.rows()),
        layout.history(seed, network, kind),
        index=False,
    )
    timing = Timing(
        config.modelVariant,
        network,
        kind,
        seed,
        history.seconds,
        history.total_epochs,
    )
    _write_json(layout.timing(seed, network, kind), timing.to_dict())


def cmd_calibrate(config, layout: Layout, phase: str = "all"):
    """Phase-1 and/or phase-2 calibration on the observed data."""
    data = _observed(config)
    cfg = config.calibration
    cache = ResultCache() if config.useCache else None
    try:
        if phase in ("1", "all"):
            _header("Calibrating phase 1")
            phase1 = fit_phase1(
                data, _nodes(config), cfg, cache=cache, workers=config.workers
            )
            layout.root.mkdir(parents=True, exist_ok=True)
            phase1.save(str(layout.phase1))
            _produced(layout.phase1)
        if phase not in ("2", "all"):
            return
        if phase == "2":
            phase1 = CalibrationResult.load(str(_require(layout.phase1, "calibrate")))

        _header("Calibrating phase 2")
        calib = fit_phase2(data, phase1, cfg, cache=cache, workers=config.workers)
    finally:
        if cache is not None:
            cache.close()

    layout.root.mkdir(parents=True, exist_ok=True)
    calib.save(str(layout.calibration))
    _produced(layout.calibration)
    _write_frame(fit_frame(calib, data), layout.fit, index=False)

    flags = [
        f"node {m}: {flag}"
        for m, diagnostics in enumerate(calib.diagnostics)
        for flag in diagnostics.flags
    ]
    for flag in flags:
        _warn(flag)
    nodes = [
        {
            "index": m,
            "weight": float(calib.nodes.weights[m]),
            "phase1": float(phase1.objectives[m]),
            "phase2": float(calib.objectives[m]),
        }
        for m in range(len(calib.nodes))
    ]
    for path in generate_report(
        "calibration",
        layout.root,
        mode=layout.mode,
        variant=config.modelVariant,
        ages=calib.ages.labels,
        n_nodes=len(calib.nodes),
        pairing=calib.nodes.pairing,
        t0=cfg.t0,
        t_lockdown=cfg.t_lockdown,
        t_end=cfg.t_end,
        nodes=nodes,
        flags=flags,
    ):
        _produced(path)


def cmd_augment(config, layout: Layout):
    """Synthetic trajectories and the observed data with every compartment."""
    calib = _calibration(layout)
    _header("Augmenting data")
    synthetic = augment(
        calib, tuple(config.augmentationWindow), float(config.augmentationStep)
    )
    write_csv(synthetic, str(layout.synthetic))
    _produced(layout.synthetic)

    observed = reconstruct_compartments(_observed(config), calib)
    write_csv(observed, str(layout.observed))
    _produced(layout.observed)


def _training_sets(config, layout: Layout, calib) -> Dict[str, EpiDataset]:
    datasets = _datasets(layout, calib)
    _write_json(layout.split, split_manifest(layout.mode))
    return {kind: split(data, layout.mode)[0] for kind, data in datasets.items()}


def cmd_train_pinn(config, layout: Layout):
    calib = _calibration(layout)
    training = _training_sets(config, layout, calib)
    params = {
        "synthetic": calib.params,
        "real": calib.params.node_average(calib.nodes.weights),
    }
    for seed in config.seeds:
        for kind in DATA_KINDS:
            _header(f"Training PINN on {kind} data, seed {seed}")
            try:
                model, history = pinn.train(
                    config.pinn, training[kind], params[kind], seed
                )
            except TrainingDivergence as error:
                _record_training(layout, config, seed, "pinn", kind, error.history)
                raise
            checkpoint = model.to_checkpoint(
                {"dataKind": kind, "config": config.pinn.to_dict()}
            )
            _write_json(layout.checkpoint(seed, "pinn", kind), checkpoint.to_dict())
            _record_training(layout, config, seed, "pinn", kind, history)


def cmd_train_nar(config, layout: Layout):
    calib = _calibration(layout)
    training = _training_sets(config, layout, calib)
    delay = config.nar.delay
    for seed in config.seeds:
        for kind in DATA_KINDS:
            _header(f"Training NAR on {kind} data, seed {seed}")
            windows = nar.make_windows(training[kind], delay)
            try:
                net, history = nar.train(config.nar, windows, seed)
            except TrainingDivergence as error:
                _record_training(layout, config, seed, "nar", kind, error.history)
                raise
            data = training[kind]
            checkpoint = Checkpoint.from_network(
                net,
                {
                    "dataKind": kind,
                    "delay": delay,
                    "ages": data.ages.labels,
                    "nodes": None if data.nodes is None else data.nodes.to_dict(),
                    "config": config.nar.to_dict(),
                },
            )
            _write_json(layout.checkpoint(seed, "nar", kind), checkpoint.to_dict())
            _record_training(layout, config, seed, "nar", kind, history)


def _forecast_frame(times, ages: List[str], values, mean) -> pd.DataFrame:
    """Long format forecast: t, age_class, node, I_pred and the node mean."""
    n_times, n_ages, n_nodes = values.shape
    t, a, m = np.meshgrid(
        np.arange(n_times), np.arange(n_ages), np.arange(n_nodes), indexing="ij"
    )
    return pd.DataFrame(
        {
            "t": np.asarray(times)[t.reshape(-1)],
            "age_class": np.array(ages)[a.reshape(-1)],
            "node": m.reshape(-1),
            "I_pred": values.reshape(-1),
            "I_mean": mean[t.reshape(-1), a.reshape(-1)],
        }
    )


def cmd_forecast(config, layout: Layout):
    calib = _calibration(layout)
    datasets = _datasets(layout, calib)
    training = {kind: split(data, layout.mode)[0] for kind, data in datasets.items()}
    _, test = split(datasets["real"], layout.mode)
    t_end = float(test.times[-1])

    for seed in config.seeds:
        for kind in DATA_KINDS:
            _header(f"Forecasting with networks trained on {kind} data, seed {seed}")

            path = _require(layout.checkpoint(seed, "pinn", kind), "train-pinn")
            checkpoint = Checkpoint.from_dict(_read_json(path))
            model = pinn.PinnModel.from_checkpoint(checkpoint)
            ensemble = pinn.predict(model, test.times)
            _write_frame(
                _forecast_frame(
                    test.times,
                    model.ages.labels,
                    ensemble.compartment("I"),
                    ensemble.mean()[..., 1],
                ),
                layout.forecast(seed, "pinn", kind),
                index=False,
            )

            path = _require(layout.checkpoint(seed, "nar", kind), "train-nar")
            checkpoint = Checkpoint.from_dict(_read_json(path))
            data = training[kind]
            forecast = nar.forecast_until(
                checkpoint.to_network(), data, checkpoint.metadata["delay"], t_end
            )
            for flag in forecast.flags:
                _warn(f"nar {kind}, seed {seed}: {flag}")
            mean = np.tensordot(forecast.values, data.weights, axes=([2], [0]))
            _write_frame(
                _forecast_frame(
                    forecast.times, data.ages.labels, forecast.values, mean
                ),
                layout.forecast(seed, "nar", kind),
                index=False,
            )


def _read_forecast(path: Path, n_ages: int) -> Tuple[np.ndarray, np.ndarray]:
    frame = pd.read_csv(path, float_precision="round_trip", dtype={"age_class": str})
    first = frame[frame["node"] == 0]
    times = first["t"].unique()
    return times, first["I_mean"].to_numpy(dtype=float).reshape(len(times), n_ages)


def cmd_evaluate(config, layout: Layout):
    _header("Evaluating forecasts")
    calib = _calibration(layout)
    observed = read_csv(str(_require(layout.observed, "augment")))
    _, test = split(observed, layout.mode)
    data = test.get("I")[:, :, 0]
    labels = test.ages.labels

    reports, timings, peaks = [], [], {}
    for seed in config.seeds:
        for network in NETWORKS:
            for kind in DATA_KINDS:
                path = _require(layout.forecast(seed, network, kind), "forecast")
                times, mean = _read_forecast(path, len(labels))
                pred = align(times, mean, test.times)

                timing_path = layout.timing(seed, network, kind)
                timing = None
                if timing_path.exists():
                    timing = Timing.from_dict(_read_json(timing_path))
                    timings.append(timing)

                reports.append(
                    ErrorReport(
                        config.modelVariant,
                        network,
                        kind,
                        seed,
                        test.times,
                        labels,
                        pointwise_error(pred, data),
                        timing.seconds if timing else float("nan"),
                        timing.epochs if timing else 0,
                    )
                )
                peaks[f"{network}_{kind}_seed_{seed}"] = peak_metrics(
                    test.times, pred.sum(axis=1), test.times, data.sum(axis=1)
                )

    table = table2(reports)
    write_table(table, layout.experiment / "table2.csv")
    _produced(layout.experiment / "table2.csv")

    timed = [timing for timing in timings if timing.epochs > 0]
    if timed:
        _write_frame(cost_report(timed), layout.timing_dir / "table1.csv", index=False)
    else:
        _warn("no timing recorded, skipping the cost table")

    _write_json(
        layout.experiment / "peak_metrics.json",
        {name: peak.to_dict() for name, peak in sorted(peaks.items())},
    )
    results = summary(reports, peaks, layout.mode)
    results["variant"] = config.modelVariant
    results["nodes"] = len(calib.nodes)
    _write_json(layout.experiment / "summary.json", results)
    for path in generate_report(
        "summary",
        layout.root,
        mode=layout.mode,
        seeds=results["seeds"],
        columns=TABLE_COLUMNS,
        table=table_rows(table),
        peaks=results["peaks"],
    ):
        _produced(path)


def cmd_run_all(config, layout: Layout):
    cmd_calibrate(config, layout, "all")
    cmd_augment(config, layout)
    cmd_train_pinn(config, layout)
    cmd_train_nar(config, layout)
    cmd_forecast(config, layout)
    cmd_evaluate(config, layout)


def cmd_sample(config, layout: Layout, path: Optional[str] = None):
    target = Path(path or config.dataPath or layout.root / "sample.csv")
    target.parent.mkdir(parents=True, exist_ok=True)
    sample.generate(str(target))
    _produced(target)


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="epiforge")
    parser.add_argument(
        "--config", help="config.json or a directory holding one", default=None
    )
    parser.add_argument("--seed", type=int, help="run a single seed", default=None)
    parser.add_argument("--out", help="output directory", default=None)
    parser.add_argument(
        "--mode", choices=["short", "long", "short_term", "long_term"], default=None
    )
    parser.add_argument("-v", "--verbose", action="store_true")

    commands = parser.add_subparsers(dest="command", metavar="command")
    commands.required = True
    calibrate = commands.add_parser("calibrate", help="two-phase calibration")
    calibrate.add_argument("--phase", choices=["1", "2", "all"], default="all")
    commands.add_parser("augment", help="synthetic data from the calibration")
    commands.add_parser("train-pinn", help="train physics-informed networks")
    commands.add_parser("train-nar", help="train autoregressive networks")
    commands.add_parser("forecast", help="forecast the test window")
    commands.add_parser("evaluate", help="error, cost and peak reports")
    commands.add_parser("run-all", help="every stage in order")
    sample_parser = commands.add_parser("sample", help="write the sample dataset")
    sample_parser.add_argument("path", nargs="?", default=None)
    commands.add_parser("clear-cache", help="remove cached calibration fits")
    return parser


STAGES: Dict[str, Callable] = {
    "augment": cmd_augment,
    "train-pinn": cmd_train_pinn,
    "train-nar": cmd_train_nar,
    "forecast": cmd_forecast,
    "evaluate": cmd_evaluate,
    "run-all": cmd_run_all,
}


def _run(args, config, layout: Layout):
    if args.command == "calibrate":
        cmd_calibrate(config, layout, args.phase)
    elif args.command == "sample":
        cmd_sample(config, layout, args.path)
    else:
        STAGES[args.command](config, layout)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "clear-cache":
        clear_cache.main()
        return EXIT_OK

    try:
        config = load_config(args.config)
    except (ConfigError, FileNotFoundError) as error:
        print(Fore.RED + f"ERROR: [config] {error}" + Style.RESET_ALL, file=sys.stderr)
        return EXIT_INPUT
    if args.out is not None:
        config.outputDirectory = args.out
    if args.seed is not None:
        config.seeds = [args.seed]
    if args.mode is not None:
        config.splitMode = args.mode.replace("_term", "")
    set_verbose(bool(config.verbose or args.verbose))
    layout = Layout(Path(config.outputDirectory), config.splitMode)

    try:
        _run(args, config, layout)
    except (FileNotFoundError, ConfigError, DatasetError) as error:
        print(
            Fore.RED + f"ERROR: [{args.command}] {error}" + Style.RESET_ALL,
            file=sys.stderr,
        )
        return EXIT_INPUT
    except (ValueError, RuntimeError, ArithmeticError, KeyError) as error:
        print(
            Fore.RED + f"ERROR: [{args.command}] {error}" + Style.RESET_ALL,
            file=sys.stderr,
        )
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
