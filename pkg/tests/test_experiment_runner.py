"""Tests for experiment sweeps and the command-line entry point."""

import contextlib
import io
import math
import os
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

from analysis.exceptions import QuadratureBudgetError
from cli import EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL, EXIT_OK, main
from services.experiment_runner import CSV_COLUMNS, point_seed, run, sweep_points, validate
from utils.config import Config
from utils.experiment_config import resolve_config
from utils.file_utils import read_csv


def small_config(out_dir: str, experiment: str = "custom", *overrides: str, **flags):
    base = ["k_db=0, 5", "beta_delta=5", "theta_delta_deg=10", "n_samples=1000", "chunk_size=500"]
    flags.setdefault("output_dir", out_dir)
    flags.setdefault("plots", False)
    return resolve_config(experiment, overrides=base + list(overrides), flags=flags)


class TestSweep(unittest.TestCase):
    """Test cases for sweep ordering and seeding."""

    def setUp(self):
        """Set up test fixtures."""
        Config._instance = None
        Config._initialized = False

    def test_sweep_order(self):
        """theta_delta outer, beta_delta middle, K inner."""
        cfg = resolve_config("custom", overrides=["k_db=0,1", "beta_delta=5,25", "theta_delta_deg=5,10"])
        points = sweep_points(cfg)
        self.assertEqual(len(points), 8)
        self.assertEqual([p.index for p in points], list(range(8)))
        self.assertEqual([(p.theta_delta_deg, p.beta_delta, p.k_db) for p in points[:4]],
                         [(5.0, 5.0, 0.0), (5.0, 5.0, 1.0), (5.0, 25.0, 0.0), (5.0, 25.0, 1.0)])
        self.assertEqual(points[4].theta_delta_deg, 10.0)

    def test_point_seed(self):
        """Per-point seeds are deterministic and distinct."""
        self.assertEqual(point_seed(7, 3), point_seed(7, 3))
        self.assertNotEqual(point_seed(7, 3), point_seed(7, 4))
        self.assertNotEqual(point_seed(7, 3), point_seed(8, 3))
        self.assertGreaterEqual(point_seed(7, 3), 0)


class TestRun(unittest.TestCase):
    """Test cases for CSV output of a run."""

    def setUp(self):
        """Set up test fixtures."""
        Config._instance = None
        Config._initialized = False
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        """Clean up test fixtures."""
        self.tmp.cleanup()

    def test_csv_layout(self):
        """Header, one row per point, divergent series left blank with a warning."""
        result = run(small_config(self.tmp.name))
        self.assertEqual(result.csv_path, os.path.join(self.tmp.name, "custom.csv"))
        with open(result.csv_path, encoding="utf-8") as f:
            header = f.readline().strip()
        self.assertEqual(header, ",".join(CSV_COLUMNS))
        rows = read_csv(result.csv_path)
        self.assertEqual(len(rows), 2)
        for row in rows:
            self.assertEqual(row["experiment"], "custom")
            self.assertEqual(row["quantity"], "qd_probability")
            self.assertTrue(0.0 <= float(row["analytic_quadrature"]) <= 1.0)
            self.assertGreaterEqual(float(row["analytic_renormalized"]), float(row["analytic_quadrature"]))
            self.assertEqual(row["analytic_series"], "")
            self.assertTrue(0.0 <= float(row["mc_value"]) <= 1.0)
            self.assertEqual(row["runtime_ms"], "")
        self.assertEqual(len(result.warnings), 2)
        self.assertIn("series", result.warnings[0])
        self.assertIsNone(result.svg_path)

    def test_convergent_series_filled(self):
        """beta_delta < 1 fills the series column."""
        result = run(small_config(self.tmp.name, "custom", "beta_delta=0.5", "methods=quadrature, series"))
        for row in result.rows:
            self.assertIsNotNone(row.analytic_series)
            self.assertAlmostEqual(row.analytic_series, row.analytic_quadrature, delta=1e-3)
            self.assertIsNone(row.mc_value)
        self.assertEqual(result.warnings, [])

    def test_reproducible_bytes(self):
        """Repeat runs and different worker counts write identical files."""
        first = Path(run(small_config(os.path.join(self.tmp.name, "a"))).csv_path).read_bytes()
        second = Path(run(small_config(os.path.join(self.tmp.name, "b"))).csv_path).read_bytes()
        parallel = Path(run(small_config(os.path.join(self.tmp.name, "c"), workers=2)).csv_path).read_bytes()
        self.assertEqual(first, second)
        self.assertEqual(first, parallel)

    def test_timing_column(self):
        """--timing fills runtime_ms."""
        result = run(small_config(self.tmp.name, "custom", "methods=quadrature", timing=True))
        self.assertTrue(all(row.runtime_ms is not None and row.runtime_ms >= 0 for row in result.rows))

    def test_svg_written(self):
        """Plots are written next to the CSV."""
        result = run(small_config(self.tmp.name, "custom", "methods=quadrature, mc", plots=True))
        self.assertEqual(result.svg_path, os.path.join(self.tmp.name, "custom.svg"))
        self.assertIn("<svg", Path(result.svg_path).read_text(encoding="utf-8"))

    def test_trace_rows(self):
        """The trace experiment writes one outer-product and one projector row per point."""
        cfg = small_config(self.tmp.name, "fig5", "beta_delta=1")
        result = run(cfg)
        quantities = [row.quantity for row in result.rows]
        self.assertEqual(quantities, ["trace_outer", "trace_projector"] * 2)
        outer = result.rows[0]
        self.assertAlmostEqual(outer.analytic_quadrature, 4.0, places=10)
        self.assertIsNone(outer.analytic_renormalized)
        self.assertLess(abs(outer.mc_value - 4.0), 5.0 * outer.mc_std_error)
        projector = result.rows[1]
        self.assertAlmostEqual(projector.mc_value, 1.0, places=10)
        self.assertGreater(projector.analytic_quadrature, 1.0)
        self.assertIsNone(projector.analytic_series)

    def test_power_rows(self):
        """The power experiment compares surrogate mean and variance with samples."""
        result = run(small_config(self.tmp.name, "fig4"))
        self.assertEqual([row.quantity for row in result.rows], ["power_mean", "power_var"] * 2)
        mean_row = result.rows[0]
        self.assertAlmostEqual(mean_row.analytic_quadrature, 5.0 * 4, places=10)


class TestValidate(unittest.TestCase):
    """Test cases for configuration validation reports."""

    def setUp(self):
        """Set up test fixtures."""
        Config._instance = None
        Config._initialized = False

    def test_clean_preset(self):
        """fig2 raises no warnings."""
        report = validate(resolve_config("fig2"))
        self.assertEqual(report.warnings, [])
        self.assertEqual(report.conversions[0], {"k_db": 0.0, "k_linear": 1.0})
        self.assertEqual(report.config["experiment"], "fig2")

    def test_weak_user_i(self):
        """beta_delta < 1 is flagged."""
        report = validate(resolve_config("custom", overrides=["beta_delta=0.5"]))
        self.assertEqual(len(report.warnings), 1)
        self.assertIn("beta_delta=0.5", report.warnings[0])

    def test_small_shape(self):
        """N = 2 with a Rayleigh channel gives power shape 2."""
        report = validate(resolve_config("custom", overrides=["n=2", "k_db=-inf"]))
        self.assertTrue(any("shape" in w for w in report.warnings))
        self.assertEqual(report.conversions[0]["k_linear"], 0.0)

    def test_angle_conversions(self):
        """Azimuths are reported in degrees and radians."""
        report = validate(resolve_config("custom"))
        angles = [c for c in report.conversions if "angle_deg" in c]
        self.assertEqual(angles[0]["angle_deg"], 30.0)
        self.assertAlmostEqual(angles[0]["angle_rad"], math.pi / 6, places=14)
        self.assertEqual(angles[1]["angle_deg"], 40.0)


class TestCli(unittest.TestCase):
    """Test cases for command-line exit codes."""

    def setUp(self):
        """Set up test fixtures."""
        Config._instance = None
        Config._initialized = False
        self.tmp = tempfile.TemporaryDirectory()
        self.common = ["--set", "k_db=5", "--set", "beta_delta=5", "--set", "methods=quadrature",
                       "--no-plots", "--out", self.tmp.name]

    def tearDown(self):
        """Clean up test fixtures."""
        self.tmp.cleanup()

    def call(self, *argv: str):
        stdout, stderr = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
            code = main(list(argv))
        return code, stdout.getvalue(), stderr.getvalue()

    def test_run_success(self):
        """A run prints the CSV path and exits 0."""
        code, out, _ = self.call("run", "custom", *self.common)
        self.assertEqual(code, EXIT_OK)
        self.assertIn("custom.csv", out)
        self.assertTrue(os.path.exists(os.path.join(self.tmp.name, "custom.csv")))

    def test_validate_success(self):
        """validate prints the report."""
        code, out, _ = self.call("validate", "fig2")
        self.assertEqual(code, EXIT_OK)
        self.assertIn("experiment: fig2", out)
        self.assertIn("No warnings.", out)

    def test_config_error(self):
        """An empty K grid exits 2."""
        code, _, err = self.call("run", "custom", *self.common, "--set", "k_db=")
        self.assertEqual(code, EXIT_CONFIG)
        self.assertIn("k_db", err)

    def test_unknown_experiment(self):
        """An unknown experiment exits 2."""
        code, _, _ = self.call("validate", "fig9")
        self.assertEqual(code, EXIT_CONFIG)

    def test_io_error(self):
        """An output path that is a file exits 4."""
        blocker = os.path.join(self.tmp.name, "blocker")
        Path(blocker).write_text("x", encoding="utf-8")
        code, _, _ = self.call("run", "custom", *self.common, "--out", blocker)
        self.assertEqual(code, EXIT_IO)

    def test_numerical_error(self):
        """A quadrature budget failure exits 3."""
        failure = QuadratureBudgetError("budget exhausted", estimate=0.5, error_bound=0.1)
        with patch("services.experiment_runner.qd_prob_quadrature", side_effect=failure):
            code, _, err = self.call("run", "custom", *self.common)
        self.assertEqual(code, EXIT_NUMERICAL)
        self.assertIn("budget exhausted", err)


if __name__ == '__main__':
    unittest.main()
