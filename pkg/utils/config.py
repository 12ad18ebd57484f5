"""Centralized configuration management with validation and type safety."""

import os
import json
from typing import Any, Dict, List, Optional
from pathlib import Path
from dotenv import load_dotenv

try:
    import yaml
    YAML_AVAILABLE = True
except ImportError:
    YAML_AVAILABLE = False


def _env_bool(name: str, default: str) -> bool:
    return os.getenv(name, default).lower() == "true"


class Config:
    """Centralized configuration with validation and type safety."""

    _instance: Optional['Config'] = None

    def __new__(cls):
        """Singleton pattern to ensure single config instance."""
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance._initialized = False
        return cls._instance

    def __init__(self):
        """Initialize configuration from environment variables and config files."""
        if self._initialized:
            return

        # Load .env file if it exists
        env_file = Path(__file__).parent.parent / '.env'
        if env_file.exists():
            load_dotenv(dotenv_path=env_file)
        else:
            load_dotenv()

        self._load_from_env()
        self._load_from_file()  # Fallback to YAML/JSON
        self._validate()
        self._initialized = True

    def _load_from_env(self) -> None:
        """Load configuration from environment variables."""
        # Numerics Configuration
        self._quad_rel_tol = float(os.getenv("QD_QUAD_REL_TOL", "1e-8"))
        self._quad_abs_tol = float(os.getenv("QD_QUAD_ABS_TOL", "1e-12"))
        self._quad_max_subdivisions = int(os.getenv("QD_QUAD_MAX_SUBDIVISIONS", "200"))
        self._series_max_terms = int(os.getenv("QD_SERIES_MAX_TERMS", "400"))
        self._series_tol = float(os.getenv("QD_SERIES_TOL", "1e-10"))
        self._hyp2f1_max_terms = int(os.getenv("QD_HYP2F1_MAX_TERMS", "200000"))
        self._hyp2f1_tol = float(os.getenv("QD_HYP2F1_TOL", "1e-15"))

        # Monte-Carlo Configuration
        self._mc_samples = int(os.getenv("QD_MC_SAMPLES", "100000"))
        self._mc_chunk_size = int(os.getenv("QD_MC_CHUNK_SIZE", "10000"))
        self._seed = int(os.getenv("QD_SEED", "20240101"))
        self._workers = int(os.getenv("QD_WORKERS", "1"))

        # Output Configuration
        self._output_dir = os.getenv("QD_OUTPUT_DIR", "output")
        self._plots_enabled = _env_bool("QD_PLOTS_ENABLED", "true")

        # Logging Configuration
        self._log_level = os.getenv("LOG_LEVEL", "INFO").upper()
        self._log_format = os.getenv("LOG_FORMAT", "standard")  # "standard" or "json"
        self._log_structured = _env_bool("LOG_STRUCTURED", "false")

        # Flask Configuration
        self._host = os.getenv("HOST", "0.0.0.0")
        self._port = int(os.getenv("PORT", "5001"))
        self._debug = _env_bool("DEBUG", "false")

    def _load_from_file(self) -> None:
        """Load configuration from config.yaml or config.json as fallback."""
        current_dir = Path(__file__).parent.parent
        config_files = [
            current_dir / "config.yaml",
            current_dir / "config.json",
            current_dir / ".config.yaml",
            current_dir / ".config.json"
        ]

        config_data: Optional[Dict[str, Any]] = None

        for config_file in config_files:
            if config_file.exists():
                try:
                    if config_file.suffix == ".yaml":
                        if YAML_AVAILABLE:
                            with open(config_file, 'r', encoding='utf-8') as f:
                                config_data = yaml.safe_load(f)
                        else:
                            continue  # Skip YAML files if yaml not available
                    elif config_file.suffix == ".json":
                        with open(config_file, 'r', encoding='utf-8') as f:
                            config_data = json.load(f)

                    if config_data:
                        self._apply_config_data(config_data)
                        break
                except Exception:
                    # Silently fail if config file can't be read
                    continue

    def _apply_section(self, section: Dict[str, Any], mapping: Dict[str, tuple]) -> None:
        """Copy file values into attributes whose environment variable is unset."""
        for key, (env_name, attr) in mapping.items():
            if key in section and not os.getenv(env_name):
                setattr(self, attr, section[key])

    def _apply_config_data(self, config_data: Dict[str, Any]) -> None:
        """Apply configuration data from file, only if env var not set."""
        if "numerics" in config_data:
            self._apply_section(config_data["numerics"], {
                "quad_rel_tol": ("QD_QUAD_REL_TOL", "_quad_rel_tol"),
                "quad_abs_tol": ("QD_QUAD_ABS_TOL", "_quad_abs_tol"),
                "quad_max_subdivisions": ("QD_QUAD_MAX_SUBDIVISIONS", "_quad_max_subdivisions"),
                "series_max_terms": ("QD_SERIES_MAX_TERMS", "_series_max_terms"),
                "series_tol": ("QD_SERIES_TOL", "_series_tol"),
                "hyp2f1_max_terms": ("QD_HYP2F1_MAX_TERMS", "_hyp2f1_max_terms"),
                "hyp2f1_tol": ("QD_HYP2F1_TOL", "_hyp2f1_tol"),
            })

        if "monte_carlo" in config_data:
            self._apply_section(config_data["monte_carlo"], {
                "samples": ("QD_MC_SAMPLES", "_mc_samples"),
                "chunk_size": ("QD_MC_CHUNK_SIZE", "_mc_chunk_size"),
                "seed": ("QD_SEED", "_seed"),
                "workers": ("QD_WORKERS", "_workers"),
            })

        if "output" in config_data:
            self._apply_section(config_data["output"], {
                "dir": ("QD_OUTPUT_DIR", "_output_dir"),
                "plots_enabled": ("QD_PLOTS_ENABLED", "_plots_enabled"),
            })

        if "logging" in config_data:
            self._apply_section(config_data["logging"], {
                "level": ("LOG_LEVEL", "_log_level"),
                "format": ("LOG_FORMAT", "_log_format"),
                "structured": ("LOG_STRUCTURED", "_log_structured"),
            })

        if "server" in config_data:
            self._apply_section(config_data["server"], {
                "host": ("HOST", "_host"),
                "port": ("PORT", "_port"),
                "debug": ("DEBUG", "_debug"),
            })

    def _validate(self) -> None:
        """Validate configuration values."""
        errors: List[str] = []

        if not self._quad_rel_tol > 0:
            errors.append("QD_QUAD_REL_TOL must be positive")
        if self._quad_abs_tol < 0:
            errors.append("QD_QUAD_ABS_TOL must be non-negative")
        if self._quad_max_subdivisions < 1:
            errors.append("QD_QUAD_MAX_SUBDIVISIONS must be at least 1")
        if self._series_max_terms < 1:
            errors.append("QD_SERIES_MAX_TERMS must be at least 1")
        if not self._series_tol > 0:
            errors.append("QD_SERIES_TOL must be positive")
        if self._hyp2f1_max_terms < 1:
            errors.append("QD_HYP2F1_MAX_TERMS must be at least 1")
        if not self._hyp2f1_tol > 0:
            errors.append("QD_HYP2F1_TOL must be positive")

        if self._mc_samples < 1000:
            errors.append("QD_MC_SAMPLES must be at least 1000")
        if self._mc_chunk_size < 1:
            errors.append("QD_MC_CHUNK_SIZE must be positive")
        if self._seed < 0:
            errors.append("QD_SEED must be non-negative")
        if self._workers < 1:
            errors.append("QD_WORKERS must be at least 1")

        if self._port <= 0 or self._port > 65535:
            errors.append("PORT must be between 1 and 65535")

        valid_log_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if str(self._log_level).upper() not in valid_log_levels:
            errors.append(f"LOG_LEVEL must be one of {valid_log_levels}")

        if errors:
            raise ValueError(f"Configuration validation failed: {'; '.join(errors)}")

    def quadrature_spec(self):
        """QuadratureSpec built from the numerics keys."""
        from analysis.specfn import QuadratureSpec
        return QuadratureSpec(
            rel_tol=self._quad_rel_tol,
            abs_tol=self._quad_abs_tol,
            max_subdivisions=self._quad_max_subdivisions,
        )

    # Numerics Properties
    @property
    def quad_rel_tol(self) -> float:
        """Relative tolerance of adaptive quadrature."""
        return self._quad_rel_tol

    @property
    def quad_abs_tol(self) -> float:
        """Absolute tolerance of adaptive quadrature."""
        return self._quad_abs_tol

    @property
    def quad_max_subdivisions(self) -> int:
        """Subdivision budget of adaptive quadrature."""
        return self._quad_max_subdivisions

    @property
    def series_max_terms(self) -> int:
        """Term budget of the QD series route."""
        return self._series_max_terms

    @property
    def series_tol(self) -> float:
        """Relative stopping tolerance of the QD series route."""
        return self._series_tol

    @property
    def hyp2f1_max_terms(self) -> int:
        """Term budget of the Gauss hypergeometric series."""
        return self._hyp2f1_max_terms

    @property
    def hyp2f1_tol(self) -> float:
        """Relative stopping tolerance of the Gauss hypergeometric series."""
        return self._hyp2f1_tol

    # Monte-Carlo Properties
    @property
    def mc_samples(self) -> int:
        """Default Monte-Carlo trials per sweep point."""
        return self._mc_samples

    @property
    def mc_chunk_size(self) -> int:
        """Trials per random-stream chunk."""
        return self._mc_chunk_size

    @property
    def seed(self) -> int:
        """Default master seed."""
        return self._seed

    @property
    def workers(self) -> int:
        """Default worker-process count."""
        return self._workers

    # Output Properties
    @property
    def output_dir(self) -> str:
        """Default directory for CSV and SVG artifacts."""
        return self._output_dir

    @property
    def plots_enabled(self) -> bool:
        """Whether SVG plots are written by default."""
        return self._plots_enabled

    # Logging Properties
    @property
    def log_level(self) -> str:
        """Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)."""
        return str(self._log_level).upper()

    @property
    def log_format(self) -> str:
        """Logging format (standard or json)."""
        return self._log_format

    @property
    def log_structured(self) -> bool:
        """Whether to use structured JSON logging."""
        return self._log_structured or self._log_format == "json"

    # Flask Properties
    @property
    def host(self) -> str:
        """Flask host address."""
        return self._host

    @property
    def port(self) -> int:
        """Flask port number."""
        return self._port

    @property
    def debug(self) -> bool:
        """Flask debug mode."""
        return self._debug
