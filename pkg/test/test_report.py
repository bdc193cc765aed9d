"""Test the Markdown reports."""
from pathlib import Path
from tempfile import TemporaryDirectory
from unittest import TestCase

import numpy as np
import pandas as pd

from epiforge.evaluation import (
    NON_AGED_ROW,
    TABLE_COLUMNS,
    PeakMetrics,
)
from epiforge.report import (
    generate_report,
    get_templates,
    render_template,
    table_rows,
)


class TestReport(TestCase):
    def setUp(self):
        self.table = pd.DataFrame(
            [[0.1, np.nan, 0.25, 0.5]],
            index=pd.Index([NON_AGED_ROW], name="model"),
            columns=TABLE_COLUMNS,
        )

    def test_table_rows(self):
        rows = table_rows(self.table)
        self.assertEqual(rows[0]["name"], NON_AGED_ROW)
        self.assertEqual(rows[0]["values"], [0.1, None, 0.25, 0.5])

    def test_summary(self):
        peak = PeakMetrics(99.0, 97.0, 2.0, -0.001, [])
        with TemporaryDirectory() as directory:
            paths = generate_report(
                "summary",
                directory,
                mode="short",
                seeds=[0, 1],
                columns=TABLE_COLUMNS,
                table=table_rows(self.table),
                peaks={"PINN (real)": peak.to_dict()},
            )
            self.assertEqual(paths, [Path(directory) / "short" / "summary.md"])
            text = paths[0].read_text(encoding="utf-8")

        self.assertTrue(text.startswith("# Forecast summary (short term)"))
        self.assertIn("Seeds: 0, 1", text)
        self.assertIn("| Model | NAR (synthetic) | NAR (real) |", text)
        self.assertIn(f"| {NON_AGED_ROW} | 1.000e-01 |  | 2.500e-01 |", text)
        self.assertIn("| PINN (real) | 99.0 | 97.0 | 2.0 | -1.000e-03 |", text)

    def test_calibration(self):
        text = render_template(
            "calibration.md.jinja",
            variant="siar_aged",
            ages=["0-18", "19-24"],
            n_nodes=2,
            pairing="paired",
            t0=2.0,
            t_lockdown=15.0,
            t_end=105.0,
            nodes=[
                {"index": 0, "weight": 0.5, "phase1": 1e-3, "phase2": 2e-3},
                {"index": 1, "weight": 0.5, "phase1": 3e-3, "phase2": 4e-3},
            ],
            flags=["node 1: window 3: xi at lower bound"],
        )
        self.assertIn("(2 age classes)", text)
        self.assertIn("| 1 | 0.5 | 3.000000e-03 | 4.000000e-03 |", text)
        self.assertIn("- node 1: window 3: xi at lower bound", text)

    def test_unknown_kind(self):
        with self.assertRaises(ValueError):
            get_templates("appendix", mode="short")
        with self.assertRaises(ValueError):
            generate_report("summary", "/nonexistent/output", mode="short")
