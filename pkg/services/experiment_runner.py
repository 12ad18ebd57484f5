"""
Experiment runner: evaluates a sweep of scenarios and writes one CSV (and
optionally one SVG) per experiment.

Sweep points are ordered theta_delta (outer), beta_delta, K (inner). Each
point owns a seed derived from (master seed, point index), so its Monte-Carlo
value does not depend on which worker evaluates it or when.
"""

import functools
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, TypeVar

import numpy as np
from pydantic import BaseModel, ConfigDict

from analysis.channel import db_to_linear, power_surrogate
from analysis.exceptions import NumericalError, SeriesDivergenceError, ShapeTooSmallError
from analysis.qd import QdScenario, qd_prob_quadrature, qd_prob_series
from analysis.quadform import expected_outer, expected_projector, theta_numerator_surrogate
from services import monte_carlo
from services.plotting import plot_sweep
from utils.experiment_config import ExperimentConfig
from utils.file_utils import ensure_dir, write_csv
from utils.logging_config import get_logger, log_with_context

logger = get_logger(__name__)

T = TypeVar("T")

CSV_COLUMNS = (
    "experiment",
    "quantity",
    "k_db",
    "beta_delta",
    "theta_delta_deg",
    "analytic_quadrature",
    "analytic_series",
    "analytic_renormalized",
    "mc_value",
    "mc_std_error",
    "runtime_ms",
)


class SweepPoint(BaseModel):
    """One grid point of a sweep."""

    model_config = ConfigDict(frozen=True)

    index: int
    k_db: float
    beta_delta: float
    theta_delta_deg: float


class ResultRow(BaseModel):
    """One CSV row; None renders as a blank cell."""

    experiment: str
    quantity: str
    k_db: float
    beta_delta: float
    theta_delta_deg: float
    analytic_quadrature: Optional[float] = None
    analytic_series: Optional[float] = None
    analytic_renormalized: Optional[float] = None
    mc_value: Optional[float] = None
    mc_std_error: Optional[float] = None
    runtime_ms: Optional[float] = None

    def cells(self) -> Tuple:
        return tuple(getattr(self, column) for column in CSV_COLUMNS)


class PointResult(BaseModel):
    """Rows of one sweep point and the warnings raised while computing them."""

    rows: List[ResultRow]
    warnings: List[str] = []


class RunResult(BaseModel):
    """Artifacts and diagnostics of one run."""

    csv_path: str
    svg_path: Optional[str] = None
    rows: List[ResultRow]
    warnings: List[str]


class ValidationReport(BaseModel):
    """Resolved configuration with unit conversions and precondition warnings."""

    config: Dict
    conversions: List[Dict]
    warnings: List[str]


def sweep_points(cfg: ExperimentConfig) -> List[SweepPoint]:
    """Grid points in output order: theta_delta outer, beta_delta middle, K inner."""
    points = []
    for theta_delta in cfg.theta_delta_deg:
        for beta_delta in cfg.beta_delta:
            for k_db in cfg.k_db:
                points.append(SweepPoint(index=len(points), k_db=k_db, beta_delta=beta_delta,
                                         theta_delta_deg=theta_delta))
    return points


def point_seed(seed: int, index: int) -> int:
    """Independent per-point seed derived from the master seed."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def scenario_for(cfg: ExperimentConfig, point: SweepPoint) -> QdScenario:
    return QdScenario.from_table_defaults(
        k_db=point.k_db,
        beta_delta=point.beta_delta,
        theta_delta_deg=point.theta_delta_deg,
        theta_1_deg=cfg.theta_1_deg,
        num_antennas=cfg.num_antennas,
        r_i=cfg.r_i,
        r_j=cfg.r_j,
    )


def _try_analytic(fn: Callable[[], T], method: str, cfg: ExperimentConfig, point: SweepPoint,
                  warnings: List[str]) -> Optional[T]:
    """
    Run one analytic route; a divergent series or a too-small shape leaves a
    blank cell, any other numerical failure propagates.
    """
    try:
        return fn()
    except (SeriesDivergenceError, ShapeTooSmallError) as e:
        message = f"{method} left blank at K={point.k_db:g} dB, beta_delta={point.beta_delta:g}, " \
                  f"theta_delta={point.theta_delta_deg:g} deg: {e}"
        warnings.append(message)
        log_with_context(logger, logging.WARNING, message, experiment=cfg.experiment, method=method,
                         k_db=point.k_db, beta_delta=point.beta_delta,
                         theta_delta_deg=point.theta_delta_deg, error_type=type(e).__name__)
        return None


def _qd_rows(cfg: ExperimentConfig, point: SweepPoint, seed: int, warnings: List[str]) -> List[ResultRow]:
    scenario = scenario_for(cfg, point)
    spec = cfg.quadrature_spec()
    row = ResultRow(experiment=cfg.experiment, quantity="qd_probability", k_db=point.k_db,
                    beta_delta=point.beta_delta, theta_delta_deg=point.theta_delta_deg)
    if "quadrature" in cfg.methods:
        result = _try_analytic(lambda: qd_prob_quadrature(scenario, spec), "quadrature", cfg, point, warnings)
        if result is not None:
            row.analytic_quadrature = result.probability
            row.analytic_renormalized = result.renormalized_probability
    if "series" in cfg.methods:
        row.analytic_series = _try_analytic(
            lambda: qd_prob_series(scenario, max_terms=cfg.series_max_terms, tol=cfg.series_tol, spec=spec,
                                   printed_form=cfg.printed_form).probability,
            "series", cfg, point, warnings)
    if "mc" in cfg.methods:
        estimate = monte_carlo.estimate_qd_prob(scenario, cfg.n_samples, seed, chunk_size=cfg.chunk_size)
        row.mc_value, row.mc_std_error = estimate.value, estimate.std_error
    return [row]


def _moment_rows(cfg: ExperimentConfig, point: SweepPoint, seed: int,
                 warnings: List[str]) -> List[ResultRow]:
    """
    Rows for the moment experiments. analytic_quadrature holds the closed-form
    surrogate value; analytic_series stays blank.
    """
    scenario = scenario_for(cfg, point)
    analytic = "quadrature" in cfg.methods
    sampled = "mc" in cfg.methods
    n, chunk = cfg.n_samples, cfg.chunk_size
    entries: List[Tuple[str, Callable[[], float], Callable[[], Tuple[float, float]]]] = []

    if cfg.quantity == "power_moments":
        p = scenario.user_i
        power = monte_carlo.empirical_power_moments(p, n, seed, chunk_size=chunk) if sampled else None
        entries.append(("power_mean", lambda: power_surrogate(p).mean(),
                        lambda: (power.mean, power.mean_std_error)))
        entries.append(("power_var", lambda: power_surrogate(p).var(),
                        lambda: (power.var, power.var_std_error)))
    elif cfg.quantity == "traces":
        p = scenario.user_j

        def outer_mc():
            e = monte_carlo.empirical_outer_trace(p, n, seed, chunk_size=chunk)
            return e.value, e.std_error

        def projector_mc():
            e = monte_carlo.empirical_projector_trace(p, n, seed, chunk_size=chunk)
            return e.value, e.std_error

        entries.append(("trace_outer", lambda: float(np.trace(expected_outer(p)).real), outer_mc))
        entries.append(("trace_projector", lambda: float(np.trace(expected_projector(p)).real), projector_mc))
    else:
        moments = monte_carlo.empirical_quadform_moments(scenario, n, seed, chunk_size=chunk) if sampled else None

        def surrogate():
            return theta_numerator_surrogate(scenario.user_i, scenario.user_j)

        if cfg.quantity == "quadform_mean":
            entries.append(("quadform_mean", lambda: surrogate().mean(),
                            lambda: (moments.mean, moments.mean_std_error)))
        else:
            entries.append(("quadform_var", lambda: surrogate().var(),
                            lambda: (moments.var, moments.var_std_error)))

    rows = []
    for quantity, closed_form, empirical in entries:
        row = ResultRow(experiment=cfg.experiment, quantity=quantity, k_db=point.k_db,
                        beta_delta=point.beta_delta, theta_delta_deg=point.theta_delta_deg)
        if analytic:
            row.analytic_quadrature = _try_analytic(closed_form, "closed_form", cfg, point, warnings)
        if sampled:
            row.mc_value, row.mc_std_error = empirical()
        rows.append(row)
    return rows


def evaluate_point(cfg: ExperimentConfig, point: SweepPoint) -> PointResult:
    """
    Evaluate every requested route at one sweep point.

    Raises:
        NumericalError: If a quadrature budget or a convergent series budget is exhausted
    """
    started = time.perf_counter()
    warnings: List[str] = []
    seed = point_seed(cfg.seed, point.index)
    if cfg.quantity == "qd_probability":
        rows = _qd_rows(cfg, point, seed, warnings)
    else:
        rows = _moment_rows(cfg, point, seed, warnings)
    if cfg.timing:
        elapsed = (time.perf_counter() - started) * 1000.0
        for row in rows:
            row.runtime_ms = elapsed
    return PointResult(rows=rows, warnings=warnings)


def evaluate_sweep(cfg: ExperimentConfig) -> List[PointResult]:
    """Evaluate all sweep points, in sweep order regardless of completion order."""
    points = sweep_points(cfg)
    task = functools.partial(evaluate_point, cfg)
    if cfg.workers <= 1 or len(points) == 1:
        return [task(point) for point in points]
    with ProcessPoolExecutor(max_workers=min(cfg.workers, len(points))) as pool:
        return list(pool.map(task, points))


def run(cfg: ExperimentConfig) -> RunResult:
    """
    Run an experiment and write `<output_dir>/<experiment>.csv` (and `.svg`).

    Returns:
        RunResult with artifact paths, rows and warnings

    Raises:
        NumericalError: On a quadrature or series budget failure
        OSError: If the output directory or files cannot be written
    """
    log_with_context(logger, logging.INFO, f"Running {cfg.experiment} ({cfg.quantity})",
                     experiment=cfg.experiment, n_samples=cfg.n_samples, seed=cfg.seed,
                     count=len(cfg.k_db) * len(cfg.beta_delta) * len(cfg.theta_delta_deg))
    started = time.perf_counter()
    try:
        results = evaluate_sweep(cfg)
    except NumericalError as e:
        log_with_context(logger, logging.ERROR, f"Numerical failure: {e}", experiment=cfg.experiment,
                         error_type=type(e).__name__)
        raise

    rows = [row for result in results for row in result.rows]
    warnings = [w for result in results for w in result.warnings]

    out_dir = ensure_dir(cfg.output_dir)
    csv_path = write_csv(out_dir / cfg.csv_name, CSV_COLUMNS, (row.cells() for row in rows))
    svg_path = None
    if cfg.plots:
        svg_path = plot_sweep([row.model_dump() for row in rows], Path(out_dir) / cfg.svg_name,
                              title=cfg.experiment)

    log_with_context(logger, logging.INFO,
                     f"Finished {cfg.experiment} in {time.perf_counter() - started:.1f}s, wrote {csv_path}",
                     experiment=cfg.experiment, count=len(rows))
    return RunResult(csv_path=str(csv_path), svg_path=str(svg_path) if svg_path else None,
                     rows=rows, warnings=warnings)


def validate(cfg: ExperimentConfig) -> ValidationReport:
    """
    Resolved configuration, dB to linear conversions and precondition warnings.

    Warns when beta_delta < 1 (user i is expected to be the stronger user for
    decoding order (i, j)) and when a power surrogate has shape <= 2, where
    the inverse-gamma mean used by the analytic routes does not exist.
    """
    warnings: List[str] = []
    conversions = [{"k_db": k, "k_linear": db_to_linear(k)} for k in cfg.k_db]
    conversions += [{"angle_deg": a, "angle_rad": math.radians(a)}
                    for a in [cfg.theta_1_deg] + [cfg.theta_1_deg + d for d in cfg.theta_delta_deg]]

    for beta_delta in cfg.beta_delta:
        if beta_delta < 1.0:
            warnings.append(f"beta_delta={beta_delta:g} < 1: user i is weaker than user j, "
                            f"the decoding order (i, j) assumes the opposite")

    for point in sweep_points(cfg):
        scenario = scenario_for(cfg, point)
        for name, params in (("i", scenario.user_i), ("j", scenario.user_j)):
            shape = power_surrogate(params).shape
            if not shape > 2.0:
                warnings.append(f"power surrogate of user {name} has shape {shape:.6g} <= 2 at "
                                f"K={point.k_db:g} dB: the inverse-gamma mean is undefined")

    warnings = list(dict.fromkeys(warnings))
    for message in warnings:
        log_with_context(logger, logging.WARNING, message, experiment=cfg.experiment)
    return ValidationReport(config=cfg.model_dump(), conversions=conversions, warnings=warnings)
