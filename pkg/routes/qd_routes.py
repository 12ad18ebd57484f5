"""Routes for QD probability and experiment validation endpoints."""

from typing import Any, Dict, List

from flask import Blueprint, request

from analysis.channel import ChannelParams
from analysis.dist import describe
from analysis.exceptions import DomainError, SeriesDivergenceError
from analysis.qd import QdScenario, qd_prob_quadrature, qd_prob_series, qd_surrogates
from services import experiment_runner, monte_carlo
from utils.config import Config
from utils.experiment_config import resolve_config
from utils.logging_config import get_logger
from utils.response_formatter import error_response, success_response

logger = get_logger(__name__)

# Create blueprint
qd_bp = Blueprint('qd', __name__)

ANALYTIC_METHODS = ("quadrature", "series")
DEFAULT_HTTP_SAMPLES = 10000


def _channel_from_json(data: Dict[str, Any], name: str) -> ChannelParams:
    """
    Build ChannelParams from either linear/radian fields (k_factor, theta) or
    boundary units (k_db, theta_deg).
    """
    if not isinstance(data, dict):
        raise DomainError(f"{name} must be an object", parameter=name)
    if "k_db" in data or "theta_deg" in data:
        return ChannelParams.from_degrees(
            beta=data.get("beta", 1.0),
            k_db=data.get("k_db", 0.0),
            theta_deg=data.get("theta_deg", 0.0),
            num_antennas=data.get("num_antennas", 4),
        )
    return ChannelParams(**data)


def _override_strings(overrides: Dict[str, Any]) -> List[str]:
    """Render JSON overrides as --set strings; lists become comma-separated values."""
    items = []
    for key, value in overrides.items():
        if isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        items.append(f"{key}={value}")
    return items


@qd_bp.route('/api/qd/probability', methods=['POST'])
def qd_probability():
    """
    Evaluate the QD probability of one scenario.

    Accepts JSON body:
    {
        "user_i": {"beta": 10, "k_db": 5, "theta_deg": 30, "num_antennas": 4},
        "user_j": {"beta": 1, "k_factor": 3.16, "theta": 0.698},
        "rate_i": 1.0,
        "rate_j": 1.0,
        "methods": ["quadrature", "series", "mc"],
        "samples": 10000,
        "seed": 1
    }

    Returns:
        JSON response with one result per method and the gamma surrogates
    """
    if not request.is_json:
        return error_response("Request must be JSON", 400)

    data = request.get_json() or {}
    if "user_i" not in data or "user_j" not in data:
        return error_response("Both user_i and user_j are required", 400)

    config = Config()
    spec = config.quadrature_spec()
    scenario = QdScenario(
        user_i=_channel_from_json(data["user_i"], "user_i"),
        user_j=_channel_from_json(data["user_j"], "user_j"),
        r_i=data.get("rate_i", 1.0),
        r_j=data.get("rate_j", 1.0),
    )
    methods = data.get("methods", ["quadrature"])
    unknown = [m for m in methods if m not in ANALYTIC_METHODS + ("mc",)]
    if unknown:
        return error_response(f"Unknown methods: {', '.join(map(str, unknown))}", 400)

    results: Dict[str, Any] = {}
    if "quadrature" in methods:
        results["quadrature"] = qd_prob_quadrature(scenario, spec).model_dump()
    if "series" in methods:
        try:
            results["series"] = qd_prob_series(
                scenario, max_terms=config.series_max_terms, tol=config.series_tol, spec=spec,
                fallback_to_quadrature=bool(data.get("fallback_to_quadrature", False)),
            ).model_dump()
        except SeriesDivergenceError as e:
            logger.warning(f"Series route diverged for HTTP request: {e}")
            results["series"] = {"error": str(e), "error_type": type(e).__name__}
    if "mc" in methods:
        estimate = monte_carlo.estimate_qd_prob(
            scenario, int(data.get("samples", DEFAULT_HTTP_SAMPLES)), int(data.get("seed", config.seed)),
            chunk_size=config.mc_chunk_size,
        )
        results["mc"] = estimate.model_dump()

    surrogates = qd_surrogates(scenario)
    return success_response(data={
        "scenario": scenario.model_dump(),
        "results": results,
        "surrogates": dict(zip(("w", "s", "v"), describe([surrogates.w, surrogates.s, surrogates.v]))),
    })


@qd_bp.route('/api/experiments/validate', methods=['POST'])
def validate_experiment():
    """
    Resolve an experiment configuration and report conversions and warnings.

    Accepts JSON body:
    {
        "experiment": "fig2",
        "overrides": {"beta_delta": [0.5, 5], "num_antennas": 2}
    }

    Returns:
        JSON response with the validation report
    """
    if not request.is_json:
        return error_response("Request must be JSON", 400)

    data = request.get_json() or {}
    experiment = data.get("experiment")
    if not experiment:
        return error_response("experiment is required", 400)

    overrides = data.get("overrides") or {}
    if not isinstance(overrides, dict):
        return error_response("overrides must be an object", 400)

    cfg = resolve_config(str(experiment), overrides=_override_strings(overrides))
    report = experiment_runner.validate(cfg)
    return success_response(data=report.model_dump(), message=f"{len(report.warnings)} warning(s)")
