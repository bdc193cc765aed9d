"""Test data ingestion, splits and augmentation."""
import os
from tempfile import (
    NamedTemporaryFile,
    TemporaryDirectory,
)
from unittest import TestCase

import numpy as np
import pandas as pd

from epiforge import sample
from epiforge.calibration import (
    CalibrationResult,
    FitConfig,
    NodeDiagnostics,
)
from epiforge.dataset import (
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
from epiforge.models import AgeGrid
from epiforge.quadrature import NodeSet


def ground_truth_calibration() -> CalibrationResult:
    params, start = sample.ground_truth()
    nodes = NodeSet(np.array([0.3]), np.array([0.3]), np.ones(1))
    return CalibrationResult(
        params,
        AgeGrid.default(),
        nodes,
        sample.SAMPLE_SHARES,
        start,
        np.zeros((1, 2, 4, 6)),
        np.zeros(1),
        [NodeDiagnostics()],
        FitConfig(),
        phase=2,
    )


class TestIngest(TestCase):
    @classmethod
    def setUpClass(cls):
        cls.directory = TemporaryDirectory()
        cls.path = os.path.join(cls.directory.name, "sample.csv")
        cls.frame = sample.generate(cls.path)

    @classmethod
    def tearDownClass(cls):
        cls.directory.cleanup()

    def write(self, frame: pd.DataFrame) -> str:
        path = os.path.join(self.directory.name, "edited.csv")
        frame.to_csv(path, index=False)
        return path

    def test_sample(self):
        data = ingest(self.path)
        np.testing.assert_array_equal(data.times, np.arange(2.0, 105.0))
        self.assertEqual(data.n_ages, 6)
        self.assertEqual(data.n_nodes, 1)
        self.assertEqual(data.kind, "observed")
        self.assertAlmostEqual(data.shares.sum(), 1.0, delta=1e-6)
        first = self.frame.iloc[0]
        self.assertAlmostEqual(
            data.get("I")[0, 0, 0], first["infected"] / first["population"]
        )
        with self.assertRaises(DatasetError):
            data.get("S")

    def test_row_order_does_not_matter(self):
        shuffled = self.frame.sample(frac=1.0, random_state=3)
        data = ingest(self.write(shuffled))
        np.testing.assert_array_equal(data.get("R"), ingest(self.path).get("R"))

    def test_aggregate(self):
        data = ingest(self.path)
        total = ingest(self.path, aggregate=True)
        self.assertEqual(total.ages.labels, ["all"])
        np.testing.assert_allclose(total.get("I")[:, 0, 0], data.get("I").sum(axis=1)[:, 0])
        self.assertAlmostEqual(total.shares[0], data.shares.sum())

    def test_unknown_age_class(self):
        frame = self.frame.copy()
        frame.loc[3, "age_class"] = "90+"
        with self.assertRaisesRegex(DatasetError, "unknown age class '90\\+' at row 5"):
            ingest(self.write(frame))

    def test_duplicate_record(self):
        frame = pd.concat([self.frame, self.frame.iloc[[7]]], ignore_index=True)
        with self.assertRaisesRegex(DatasetError, "duplicate record"):
            ingest(self.write(frame))

    def test_negative_count(self):
        frame = self.frame.copy()
        frame.loc[10, "recovered"] = -1
        with self.assertRaisesRegex(DatasetError, "negative recovered count at row 12"):
            ingest(self.write(frame))

    def test_missing_day(self):
        frame = self.frame[self.frame["date"] != "2020-11-01"]
        with self.assertRaisesRegex(DatasetError, "missing observed days"):
            ingest(self.write(frame))

    def test_non_monotone_population(self):
        frame = self.frame.copy()
        frame.loc[frame["date"] == "2020-11-01", "population"] += 10
        with self.assertRaisesRegex(DatasetError, "non-monotone population"):
            ingest(self.write(frame))

    def test_missing_file(self):
        with self.assertRaises(FileNotFoundError):
            ingest(os.path.join(self.directory.name, "absent.csv"))

    def test_equal_shares_without_class_population(self):
        frame = self.frame.drop(columns=["class_population"])
        data = ingest(self.write(frame))
        np.testing.assert_allclose(data.shares, np.full(6, 1.0 / 6.0))


class TestSplits(TestCase):
    def setUp(self):
        times = np.arange(2.0, 105.0)
        values = np.linspace(0.0, 0.01, len(times))[:, None, None]
        self.data = EpiDataset(
            times, AgeGrid.single(), {"I": values, "R": values}, np.ones(1)
        )

    def test_short_and_long(self):
        train, test = split(self.data, "short")
        self.assertEqual(train.n_times, 80)
        self.assertEqual(test.n_times, 10)
        self.assertEqual((train.times[0], train.times[-1]), (15.0, 94.0))
        self.assertEqual((test.times[0], test.times[-1]), (95.0, 104.0))
        self.assertEqual(train.split, "train")

        train, test = split(self.data, "long_term")
        self.assertEqual(train.n_times, 30)
        self.assertEqual(test.n_times, 45)

    def test_uncovered_window(self):
        with self.assertRaises(DatasetError):
            split(self.data.window(20.0, 104.0), "short")
        with self.assertRaises(DatasetError):
            split(self.data, "medium")

    def test_manifest(self):
        self.assertEqual(
            split_manifest("short_term"),
            {"mode": "short", "train": [15.0, 94.0], "test": [95.0, 104.0]},
        )


class TestCsv(TestCase):
    def test_observed_round_trip(self):
        times = np.arange(2.0, 12.0)
        values = np.random.default_rng(0).uniform(0.0, 0.1, size=(10, 6, 1))
        data = EpiDataset(
            times, AgeGrid.default(), {"I": values, "R": values / 2}, sample.SAMPLE_SHARES
        )
        with NamedTemporaryFile(suffix=".csv", delete=False) as stream:
            path = stream.name
        try:
            write_csv(data, path)
            loaded = read_csv(path)
        finally:
            os.unlink(path)
        self.assertEqual(loaded.kind, "observed")
        self.assertEqual(loaded.ages.labels, data.ages.labels)
        np.testing.assert_array_equal(loaded.times, times)
        np.testing.assert_array_equal(loaded.get("I"), values)
        np.testing.assert_array_equal(loaded.shares, sample.SAMPLE_SHARES)
        self.assertFalse(loaded.has("S"))


class TestAugment(TestCase):
    @classmethod
    def setUpClass(cls):
        cls.calib = ground_truth_calibration()

    def test_samples_and_conservation(self):
        data = augment(self.calib, (15.0, 105.0), 0.2)
        self.assertEqual(data.n_times, 451)
        self.assertEqual(data.kind, "synthetic")
        self.assertEqual(data.resolution, 0.2)
        self.assertAlmostEqual(data.times[0], 15.0)
        self.assertAlmostEqual(data.times[-1], 105.0, delta=1e-9)
        totals = sum(data.get(name) for name in ("S", "I", "A", "R"))
        np.testing.assert_allclose(
            totals[:, :, 0], np.broadcast_to(sample.SAMPLE_SHARES, (451, 6)), atol=1e-12
        )

    def test_matches_the_full_run(self):
        data = augment(self.calib, (15.0, 30.0), 0.2)
        reference = self.calib.simulate(30.0, 0.2).sample([15.0, 30.0])
        np.testing.assert_allclose(data.get("I")[[0, -1]], reference[:, 1], rtol=1e-9)

    def test_synthetic_round_trip(self):
        data = augment(self.calib, (15.0, 20.0), 0.5)
        with NamedTemporaryFile(suffix=".csv", delete=False) as stream:
            path = stream.name
        try:
            write_csv(data, path)
            loaded = read_csv(path, nodes=self.calib.nodes)
        finally:
            os.unlink(path)
        self.assertEqual(loaded.kind, "synthetic")
        self.assertEqual(loaded.resolution, 0.5)
        np.testing.assert_array_equal(loaded.get("A"), data.get("A"))

    def test_out_of_range(self):
        with self.assertRaises(DatasetError):
            augment(self.calib, (1.0, 20.0), 0.2)
        with self.assertRaises(DatasetError):
            augment(self.calib, (15.0, 110.0), 0.2)
        with self.assertRaises(ValueError):
            augment(self.calib, (15.0, 20.0), 0.0)

    def test_reconstruct_compartments(self):
        times = np.arange(15.0, 25.0)
        infected = np.full((10, 6, 1), 0.003)
        recovered = np.full((10, 6, 1), 0.01)
        data = EpiDataset(
            times,
            AgeGrid.default(),
            {"I": infected, "R": recovered},
            sample.SAMPLE_SHARES,
        )
        full = reconstruct_compartments(data, self.calib)
        np.testing.assert_allclose(full.get("A"), 0.7 / 0.3 * infected)
        totals = sum(full.get(name) for name in ("S", "I", "A", "R"))
        np.testing.assert_allclose(
            totals[:, :, 0], np.broadcast_to(sample.SAMPLE_SHARES, (10, 6)), atol=1e-15
        )
