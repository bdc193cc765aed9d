"""Test the run configuration."""
import json
import os
from tempfile import TemporaryDirectory
from unittest import TestCase

from epiforge.calibration import FitConfig
from epiforge.config import (
    ConfigError,
    load_config,
)
from epiforge.nar import NarConfig
from epiforge.pinn import PinnConfig
from epiforge.quadrature import BetaSpec


class TestConfig(TestCase):
    def setUp(self):
        self.directory = TemporaryDirectory()
        self.path = os.path.join(self.directory.name, "config.json")

    def tearDown(self):
        self.directory.cleanup()

    def write(self, data):
        with open(self.path, "w", encoding="utf8") as stream:
            json.dump(data, stream)

    def test_defaults(self):
        config = load_config()
        self.assertEqual(config.modelVariant, "siar_aged")
        self.assertEqual(config.quadratureNodes, 5)
        self.assertEqual(config.splitMode, "short")
        self.assertEqual(config.calibration, FitConfig())
        self.assertEqual(config.pinn, PinnConfig())
        self.assertEqual(config.nar, NarConfig())
        self.assertEqual(config.betaI, BetaSpec(2.1, 5.1))
        self.assertEqual(config.betaA, BetaSpec(1.8, 3.9))
        self.assertIsNone(config.configPath)

    def test_partial_nested_override(self):
        self.write({"calibration": {"maxIters": 50}, "pinn": {"epochs": 10}})
        config = load_config(self.path)
        self.assertEqual(config.calibration.max_iters, 50)
        self.assertEqual(config.calibration.p, 0.5)
        self.assertEqual(config.pinn.epochs, 10)
        self.assertEqual(config.pinn.hidden_units, 32)
        self.assertEqual(config.configPath, self.path)

    def test_directory_and_relative_paths(self):
        self.write({"dataPath": "data/counts.csv", "splitMode": "long_term"})
        config = load_config(self.directory.name)
        self.assertEqual(
            config.dataPath, os.path.join(self.directory.name, "data", "counts.csv")
        )
        self.assertEqual(
            config.outputDirectory, os.path.join(self.directory.name, "output")
        )
        self.assertEqual(config.splitMode, "long")

    def test_comments(self):
        with open(self.path, "w", encoding="utf8") as stream:
            stream.write('{\n    // aggregate classes\n    "modelVariant": "siar"\n}\n')
        self.assertEqual(load_config(self.path).modelVariant, "siar")

    def test_invalid_values(self):
        for data in (
            {"modelVariant": "seir"},
            {"uncertaintyPairing": "diagonal"},
            {"quadratureNodes": 0},
            {"augmentationStep": 0},
            {"augmentationWindow": [105, 15]},
            {"seeds": []},
            {"pinn": {"omegaD": 0, "omegaP": 0}},
            {"betaI": {"alpha": -1.0, "beta": 2.0}},
        ):
            self.write(data)
            with self.assertRaises(ConfigError):
                load_config(self.path)

    def test_invalid_json(self):
        with open(self.path, "w", encoding="utf8") as stream:
            stream.write("{ not json")
        with self.assertRaises(ConfigError):
            load_config(self.path)

    def test_missing_file(self):
        with self.assertRaises(FileNotFoundError):
            load_config(os.path.join(self.directory.name, "absent.json"))
