"""Test the command-line pipeline on a tiny configuration."""
import filecmp
import json
import os
from pathlib import Path
from tempfile import TemporaryDirectory
from unittest import (
    TestCase,
    skipUnless,
)

import numpy as np

from epiforge.cli import (
    EXIT_INPUT,
    EXIT_OK,
    EXIT_USAGE,
    Layout,
    _read_forecast,
    main,
)
from epiforge.dataset import (
    read_csv,
    split,
)
from epiforge.evaluation import (
    Timing,
    align,
)

SLOW = os.getenv("EPIFORGE_SLOW") == "1"

TINY = {
    "dataPath": "sample.csv",
    "outputDirectory": "out",
    "modelVariant": "siar",
    "quadratureNodes": 2,
    "calibration": {"maxIters": 40, "restarts": 0, "step": 0.5},
    "augmentationStep": 0.5,
    "pinn": {"epochs": 20, "hiddenLayers": 2, "hiddenUnits": 8, "recordEvery": 5},
    "nar": {"epochs": 20, "recordEvery": 5},
    "seeds": [0],
}

ARTIFACTS = [
    "calibration_phase1.json",
    "calibration.json",
    "calibration_fit.csv",
    "calibration.md",
    "synthetic.csv",
    "observed.csv",
    "short/split.json",
    "short/seed_0/pinn_synthetic.json",
    "short/seed_0/pinn_real_history.csv",
    "short/seed_0/nar_synthetic.json",
    "short/seed_0/forecast_pinn_real.csv",
    "short/seed_0/forecast_nar_synthetic.csv",
    "short/timing/pinn_real_seed_0.json",
    "short/timing/table1.csv",
    "short/table2.csv",
    "short/peak_metrics.json",
    "short/summary.json",
    "short/summary.md",
]


def write_config(directory: str, **overrides) -> str:
    path = os.path.join(directory, "config.json")
    with open(path, "w", encoding="utf8") as stream:
        json.dump({**TINY, **overrides}, stream)
    return path


def compare_trees(left: Path, right: Path, skip=("timing",)):
    """Relative paths of files that differ between two output trees."""
    different = []
    for path in sorted(left.rglob("*")):
        relative = path.relative_to(left)
        if path.is_dir() or set(relative.parts) & set(skip):
            continue
        other = right / relative
        if not other.exists() or not filecmp.cmp(path, other, shallow=False):
            different.append(str(relative))
    return different


class TestPipeline(TestCase):
    @classmethod
    def setUpClass(cls):
        cls.directory = TemporaryDirectory()
        cls.config = write_config(cls.directory.name)
        cls.sample_code = main(["--config", cls.config, "sample"])
        cls.code = main(["--config", cls.config, "run-all"])
        cls.out = Path(cls.directory.name) / "out"
        cls.rerun = Path(cls.directory.name) / "rerun"
        cls.rerun_code = main(
            ["--config", cls.config, "--out", str(cls.rerun), "run-all"]
        )

    @classmethod
    def tearDownClass(cls):
        cls.directory.cleanup()

    def test_run_all(self):
        self.assertEqual(self.sample_code, EXIT_OK)
        self.assertEqual(self.code, EXIT_OK)
        for artifact in ARTIFACTS:
            self.assertTrue((self.out / artifact).exists(), artifact)

    def test_summary(self):
        with open(self.out / "short" / "summary.json", encoding="utf8") as stream:
            results = json.load(stream)
        self.assertEqual(results["mode"], "short")
        self.assertEqual(results["seeds"], [0])
        self.assertEqual(results["variant"], "siar")
        self.assertEqual(results["nodes"], 2)
        self.assertEqual(
            sorted(results["maxErrors"]["Non-aged model"]),
            ["NAR (real)", "NAR (synthetic)", "PINN (real)", "PINN (synthetic)"],
        )
        with open(self.out / "short" / "split.json", encoding="utf8") as stream:
            self.assertEqual(
                json.load(stream), {"mode": "short", "train": [15, 94], "test": [95, 104]}
            )

    def test_rerun_is_identical(self):
        self.assertEqual(self.rerun_code, EXIT_OK)
        self.assertEqual(compare_trees(self.out, self.rerun), [])


class TestFailures(TestCase):
    def setUp(self):
        self.directory = TemporaryDirectory()

    def tearDown(self):
        self.directory.cleanup()

    def test_missing_data_file(self):
        config = write_config(self.directory.name, dataPath="absent.csv")
        self.assertEqual(main(["--config", config, "calibrate"]), EXIT_INPUT)

    def test_missing_upstream_artifacts(self):
        config = write_config(self.directory.name)
        self.assertEqual(main(["--config", config, "sample"]), EXIT_OK)
        self.assertEqual(main(["--config", config, "augment"]), EXIT_INPUT)
        self.assertEqual(
            main(["--config", config, "calibrate", "--phase", "2"]), EXIT_INPUT
        )
        self.assertEqual(main(["--config", config, "evaluate"]), EXIT_INPUT)

    def test_missing_config(self):
        absent = os.path.join(self.directory.name, "absent.json")
        self.assertEqual(main(["--config", absent, "augment"]), EXIT_INPUT)

    def test_unknown_command(self):
        with self.assertRaises(SystemExit) as context:
            main(["explode"])
        self.assertEqual(context.exception.code, EXIT_USAGE)


def max_error(layout: Layout, seed: int, network: str, kind: str) -> float:
    """Maximum absolute error of the class-summed infected forecast on the test days."""
    _, test = split(read_csv(str(layout.observed)), layout.mode)
    data = test.get("I")[:, :, 0]
    times, mean = _read_forecast(layout.forecast(seed, network, kind), len(test.ages))
    pred = align(times, mean, test.times)
    return float(np.max(np.abs(pred.sum(axis=1) - data.sum(axis=1))))


@skipUnless(SLOW, "set EPIFORGE_SLOW=1 to run the forecast comparisons")
class TestForecastComparisons(TestCase):
    SEEDS = [0, 1, 2, 3, 4]
    EPOCHS = 5000

    @classmethod
    def setUpClass(cls):
        cls.directory = TemporaryDirectory()
        cls.config = write_config(
            cls.directory.name,
            quadratureNodes=5,
            calibration={},
            augmentationStep=0.2,
            pinn={"epochs": cls.EPOCHS, "recordEvery": 500},
            nar={"epochs": cls.EPOCHS, "recordEvery": 500},
            seeds=cls.SEEDS,
        )
        main(["--config", cls.config, "sample"])
        cls.short_code = main(["--config", cls.config, "run-all"])
        args = ["--config", cls.config, "--mode", "long"]
        cls.long_codes = [
            main(args + [stage])
            for stage in ("train-pinn", "train-nar", "forecast", "evaluate")
        ]
        root = Path(cls.directory.name) / "out"
        cls.short = Layout(root, "short")
        cls.long = Layout(root, "long")

    @classmethod
    def tearDownClass(cls):
        cls.directory.cleanup()

    def errors(self, layout, network, kind):
        return [max_error(layout, seed, network, kind) for seed in self.SEEDS]

    def test_augmentation_helps_nar(self):
        self.assertEqual(self.short_code, EXIT_OK)
        synthetic = self.errors(self.short, "nar", "synthetic")
        real = self.errors(self.short, "nar", "real")
        wins = sum(s <= 0.5 * r for s, r in zip(synthetic, real))
        self.assertGreaterEqual(wins, 4, (synthetic, real))

    def test_short_term_ranking(self):
        nar = self.errors(self.short, "nar", "synthetic")
        pinn = self.errors(self.short, "pinn", "synthetic")
        self.assertGreaterEqual(sum(n <= p for n, p in zip(nar, pinn)), 4, (nar, pinn))
        for value in nar + pinn:
            self.assertTrue(1e-5 <= value <= 1e-2, value)

    def test_pinn_epochs_cost_more(self):
        for kind in ("synthetic", "real"):
            for seed in self.SEEDS:
                cost = {}
                for network in ("nar", "pinn"):
                    with open(self.short.timing(seed, network, kind)) as stream:
                        cost[network] = Timing.from_dict(json.load(stream)).per_epoch
                self.assertGreaterEqual(cost["pinn"], 3.0 * cost["nar"])

    def test_long_term_peak(self):
        self.assertEqual(self.long_codes, [EXIT_OK] * 4)
        with open(self.long.experiment / "peak_metrics.json") as stream:
            peaks = json.load(stream)
        for seed in self.SEEDS:
            self.assertLessEqual(abs(peaks[f"pinn_real_seed_{seed}"]["deltaDays"]), 7.0)
        nar = self.errors(self.long, "nar", "real")
        pinn = self.errors(self.long, "pinn", "real")
        self.assertGreaterEqual(sum(n > p for n, p in zip(nar, pinn)), 4, (nar, pinn))
