"""
Experiment configuration for the figure sweeps.

Values are resolved in the order preset -> config file -> --set overrides ->
dedicated command-line flags. Config files are flat text, one `key = value`
per line with `#` comments; list values are comma separated and may contain
inclusive `start:stop:step` ranges.
"""

import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from utils.config import Config
from utils.logging_config import get_logger

logger = get_logger(__name__)

ExperimentId = Literal["fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "custom"]
Quantity = Literal["qd_probability", "power_moments", "traces", "quadform_mean", "quadform_var"]
Method = Literal["quadrature", "series", "mc"]

EXPERIMENTS = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "custom")

FLOAT_LIST_KEYS = ("k_db", "beta_delta", "theta_delta_deg")
BOOL_KEYS = ("plots", "timing", "printed_form")
KEY_ALIASES = {"samples": "n_samples", "out": "output_dir", "theta_1": "theta_1_deg", "n": "num_antennas"}


class ConfigError(ValueError):
    """Raised when an experiment configuration cannot be parsed or validated."""

    def __init__(self, message: str, key: Optional[str] = None):
        """
        Initialize ConfigError.

        Args:
            message: Error message
            key: Offending configuration key
        """
        super().__init__(message)
        self.message = message
        self.key = key

    def __str__(self) -> str:
        """Return string representation."""
        if self.key:
            return f"{self.message} | Key: {self.key}"
        return self.message


class ExperimentConfig(BaseModel):
    """One resolved sweep: grids, user setup, sampling and output options."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    experiment: ExperimentId
    quantity: Quantity = "qd_probability"
    k_db: List[float] = Field(min_length=1)
    beta_delta: List[float] = Field(min_length=1)
    theta_delta_deg: List[float] = Field(min_length=1)
    theta_1_deg: float = 30.0
    num_antennas: int = Field(default=4, ge=2)
    r_i: float = Field(default=1.0, gt=0, allow_inf_nan=False)
    r_j: float = Field(default=1.0, gt=0, allow_inf_nan=False)
    n_samples: int = Field(default=100000, ge=1000)
    seed: int = Field(default=20240101, ge=0)
    output_dir: str = "output"
    methods: List[Method] = Field(default_factory=lambda: ["quadrature", "series", "mc"], min_length=1)
    plots: bool = True
    workers: int = Field(default=1, ge=1)
    chunk_size: int = Field(default=10000, ge=1)
    timing: bool = False
    printed_form: bool = False
    quad_rel_tol: float = Field(default=1e-8, gt=0)
    quad_abs_tol: float = Field(default=1e-12, ge=0)
    quad_max_subdivisions: int = Field(default=200, ge=1)
    series_max_terms: int = Field(default=400, ge=1)
    series_tol: float = Field(default=1e-10, gt=0)

    @field_validator("k_db")
    @classmethod
    def _k_grid(cls, values: List[float]) -> List[float]:
        # -inf dB is the Rayleigh channel K = 0; +inf (pure line of sight) has no power surrogate
        if not all(math.isfinite(v) or v == -math.inf for v in values):
            raise ValueError("K values must be finite or -inf dB")
        return values

    @field_validator("theta_delta_deg")
    @classmethod
    def _finite(cls, values: List[float]) -> List[float]:
        if not all(math.isfinite(v) for v in values):
            raise ValueError("angle differences must be finite")
        return values

    @field_validator("beta_delta")
    @classmethod
    def _positive(cls, values: List[float]) -> List[float]:
        if not all(math.isfinite(v) and v > 0 for v in values):
            raise ValueError("path-loss ratios must be positive and finite")
        return values

    @field_validator("methods")
    @classmethod
    def _unique_methods(cls, values: List[str]) -> List[str]:
        return list(dict.fromkeys(values))

    @model_validator(mode="after")
    def _angles_in_range(self) -> "ExperimentConfig":
        for angle in [self.theta_1_deg] + [self.theta_1_deg + d for d in self.theta_delta_deg]:
            if not -90.0 < angle <= 90.0:
                raise ValueError(f"azimuth {angle} deg leaves (-90, 90]; check theta_1_deg and theta_delta_deg")
        return self

    def quadrature_spec(self):
        """QuadratureSpec for the analytic routes of this run."""
        from analysis.specfn import QuadratureSpec
        return QuadratureSpec(
            rel_tol=self.quad_rel_tol,
            abs_tol=self.quad_abs_tol,
            max_subdivisions=self.quad_max_subdivisions,
        )

    @property
    def csv_name(self) -> str:
        return f"{self.experiment}.csv"

    @property
    def svg_name(self) -> str:
        return f"{self.experiment}.svg"


def _k_sweep() -> List[float]:
    return [float(k) for k in range(0, 11)]


# Grids of each figure; everything else comes from the defaults.
PRESETS: Dict[str, Dict[str, Any]] = {
    "fig2": {"quantity": "qd_probability", "k_db": _k_sweep(), "beta_delta": [5.0, 25.0],
             "theta_delta_deg": [10.0]},
    "fig3": {"quantity": "qd_probability", "k_db": _k_sweep(), "beta_delta": [100.0],
             "theta_delta_deg": [5.0, 10.0]},
    "fig4": {"quantity": "power_moments", "k_db": [10.0],
             "beta_delta": [1.0] + [float(b) for b in range(10, 101, 10)],
             "theta_delta_deg": [10.0], "methods": ["quadrature", "mc"]},
    "fig5": {"quantity": "traces", "k_db": _k_sweep(), "beta_delta": [1.0],
             "theta_delta_deg": [10.0], "methods": ["quadrature", "mc"]},
    "fig6": {"quantity": "quadform_mean", "k_db": _k_sweep(), "beta_delta": [10.0, 100.0],
             "theta_delta_deg": [5.0, 10.0], "methods": ["quadrature", "mc"]},
    "fig7": {"quantity": "quadform_var", "k_db": _k_sweep(), "beta_delta": [10.0, 100.0],
             "theta_delta_deg": [5.0, 10.0], "methods": ["quadrature", "mc"]},
    "custom": {"quantity": "qd_probability", "k_db": _k_sweep(), "beta_delta": [10.0],
               "theta_delta_deg": [10.0]},
}


def defaults_from(config: Config) -> Dict[str, Any]:
    """Run options that fall back to the process configuration."""
    return {
        "n_samples": config.mc_samples,
        "seed": config.seed,
        "output_dir": config.output_dir,
        "plots": config.plots_enabled,
        "workers": config.workers,
        "chunk_size": config.mc_chunk_size,
        "quad_rel_tol": config.quad_rel_tol,
        "quad_abs_tol": config.quad_abs_tol,
        "quad_max_subdivisions": config.quad_max_subdivisions,
        "series_max_terms": config.series_max_terms,
        "series_tol": config.series_tol,
    }


def parse_range(item: str, key: str) -> List[float]:
    """
    Expand an inclusive `start:stop:step` range.

    Raises:
        ConfigError: For a malformed range or a step of the wrong sign
    """
    parts = item.split(":")
    if len(parts) != 3:
        raise ConfigError(f"Range '{item}' must have the form start:stop:step", key=key)
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"Range '{item}' has a non-numeric bound", key=key)
    if step == 0 or (stop - start) * step < 0:
        raise ConfigError(f"Range '{item}' has a step that never reaches the stop value", key=key)
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    # Rounded so that 0:1:0.1 gives 0.3 rather than 0.30000000000000004.
    return [float(v) for v in np.round(start + step * np.arange(count), 12)]


def parse_float_list(text: str, key: str) -> List[float]:
    """Comma-separated numbers and inclusive ranges; an empty value gives []."""
    values: List[float] = []
    for item in (part.strip() for part in text.split(",")):
        if not item:
            continue
        if ":" in item:
            values.extend(parse_range(item, key))
            continue
        try:
            values.append(float(item))
        except ValueError:
            raise ConfigError(f"'{item}' is not a number", key=key)
    return values


def parse_bool(text: str, key: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"'{text}' is not a boolean", key=key)


def parse_value(key: str, text: str) -> Dict[str, Any]:
    """
    Convert one raw `key = value` pair into model fields.

    `rates = r_i, r_j` expands into both rate fields.

    Raises:
        ConfigError: For an unknown key or an unparseable value
    """
    key = KEY_ALIASES.get(key, key)
    text = text.strip()
    if key == "rates":
        rates = parse_float_list(text, key)
        if len(rates) != 2:
            raise ConfigError("rates needs exactly two values: r_i, r_j", key=key)
        return {"r_i": rates[0], "r_j": rates[1]}
    if key in FLOAT_LIST_KEYS:
        return {key: parse_float_list(text, key)}
    if key == "methods":
        return {key: [m.strip() for m in text.split(",") if m.strip()]}
    if key in BOOL_KEYS:
        return {key: parse_bool(text, key)}
    if key not in ExperimentConfig.model_fields:
        raise ConfigError(f"Unknown configuration key '{key}'", key=key)
    return {key: text}


def parse_flat(text: str) -> Dict[str, Any]:
    """
    Parse flat `key = value` text into model fields.

    Raises:
        ConfigError: For a line without '=' or a key given twice
    """
    fields: Dict[str, Any] = {}
    seen: set = set()
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"Line {number} is not of the form key = value: '{raw.strip()}'",
                              key=line.split()[0])
        key, value = (part.strip() for part in line.split("=", 1))
        if key in seen:
            raise ConfigError(f"Key given twice (line {number})", key=key)
        seen.add(key)
        fields.update(parse_value(key, value))
    return fields


def load_config_file(path: str) -> Dict[str, Any]:
    """
    Read and parse a flat config file.

    Raises:
        OSError: If the file cannot be read
        ConfigError: If its contents are invalid
    """
    text = Path(path).read_text(encoding="utf-8")
    logger.debug(f"Loaded experiment config file {path}")
    return parse_flat(text)


def parse_overrides(overrides: Iterable[str]) -> Dict[str, Any]:
    """Parse repeated `--set key=value` arguments; later ones win."""
    fields: Dict[str, Any] = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"Override '{item}' is not of the form key=value", key=item)
        key, value = item.split("=", 1)
        fields.update(parse_value(key.strip(), value))
    return fields


def _first_error_key(error: ValidationError) -> Optional[str]:
    for detail in error.errors():
        if detail.get("loc"):
            return str(detail["loc"][0])
    return None


def build_config(fields: Dict[str, Any]) -> ExperimentConfig:
    """
    Validate resolved fields.

    Raises:
        ConfigError: Naming the first offending key
    """
    try:
        return ExperimentConfig(**fields)
    except ValidationError as e:
        key = _first_error_key(e)
        reasons = "; ".join(f"{'.'.join(str(p) for p in d['loc']) or 'config'}: {d['msg']}" for d in e.errors())
        raise ConfigError(f"Invalid experiment configuration: {reasons}", key=key) from e


def resolve_config(experiment: str, config_file: Optional[str] = None,
                   overrides: Iterable[str] = (), flags: Optional[Dict[str, Any]] = None,
                   config: Optional[Config] = None) -> ExperimentConfig:
    """
    Resolve an experiment configuration.

    Args:
        experiment: Experiment id (fig2..fig7 or custom)
        config_file: Optional flat config file
        overrides: `key=value` strings from --set
        flags: Values from dedicated flags; None entries are ignored
        config: Process configuration supplying run defaults

    Returns:
        Validated ExperimentConfig

    Raises:
        ConfigError: For an unknown experiment, key or invalid value
        OSError: If config_file cannot be read
    """
    if experiment not in PRESETS:
        raise ConfigError(f"Unknown experiment '{experiment}', expected one of {', '.join(EXPERIMENTS)}",
                          key="experiment")
    fields: Dict[str, Any] = defaults_from(config or Config())
    fields.update(PRESETS[experiment])

    if config_file:
        fields.update(load_config_file(config_file))
    fields.update(parse_overrides(overrides))
    fields.update({k: v for k, v in (flags or {}).items() if v is not None})

    if fields.get("experiment", experiment) != experiment:
        raise ConfigError(f"Config names experiment '{fields['experiment']}' but '{experiment}' was requested",
                          key="experiment")
    fields["experiment"] = experiment
    return build_config(fields)
