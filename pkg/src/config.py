"""Configuration module for the ODIA downlink simulator."""

import os
from pathlib import Path
from typing import Dict, Tuple

from dotenv import dotenv_values, load_dotenv

# Load environment variables from .env file
load_dotenv()


class ConfigFileError(Exception):
    """Exception raised when a config document cannot be parsed."""

    pass


class Config:
    """Application configuration."""

    @staticmethod
    def get_default_seed() -> int:
        """Get the master seed from environment (defaults to 0)."""
        return int(os.getenv("ODIA_SEED") or 0)

    @staticmethod
    def get_threads() -> int:
        """Get the worker-thread count from environment (defaults to 1)."""
        return max(1, int(os.getenv("ODIA_THREADS") or 1))

    @staticmethod
    def get_output_dir() -> str:
        """Get output directory from environment or fall back to the cwd."""
        return os.getenv("ODIA_OUTPUT_DIR") or str(Path.cwd())

    # Numerical tolerances
    ORTHONORMAL_TOL = 1e-12
    UNIT_NORM_TOL = 1e-12
    SINGULAR_COND_LIMIT = 1e12

    # Monte-Carlo orchestration
    DEFAULT_DROPS = 1000
    MAX_RESAMPLES = 100  # per drop, for singular effective channels

    # Codebook construction
    GRASSMANNIAN_TRAINING_SIZE = 1_000_000
    GRASSMANNIAN_ITERATIONS = 50
    QUANTIZATION_CHUNK = 4096
    OVERLAP_BLOCK_ENTRIES = 1 << 20  # max entries of one |c_i^H c_j|^2 block

    # CDF window for the small-value tail slope
    CDF_SLOPE_WINDOW: Tuple[float, float] = (1e-4, 1e-2)


SCHEMES = ("odia", "odia_lf", "se_odia", "max_snr", "min_inr", "interference_free")
SWEEP_AXES = ("snr_db", "n_users", "n_f", "eta_d", "eta_i")

# Keys accepted in plain-text config documents
CONFIG_KEYS = (
    "k",
    "n",
    "m",
    "l",
    "s",
    "snr_db",
    "seed",
    "fixed_reference_bases",
    "scheme",
    "axis",
    "axis_values",
    "drops",
    "n_f",
    "codebook",
    "grassmannian_iterations",
    "eta_i",
    "eta_d",
    "alpha",
    "eps_i",
    "eps_d",
    "eta_d_scaling",
    "outage_policy",
    "reconstruction_exponent",
    "user_exponent",
    "couple_feedback_bits",
    "threads",
    "output",
)

# Optimized SE-ODIA parameters (eta_I, eta_D, alpha) per (SNR dB, N)
SE_ODIA_PRESETS: Dict[str, Dict[str, float]] = {
    "tab1_snr3_n20": {"snr_db": 3.0, "n": 20, "eta_i": 2.5, "eta_d": 2.5, "alpha": 0.8},
    "tab1_snr3_n50": {"snr_db": 3.0, "n": 50, "eta_i": 2.0, "eta_d": 2.5, "alpha": 0.8},
    "tab1_snr21_n20": {"snr_db": 21.0, "n": 20, "eta_i": 1.5, "eta_d": 2.0, "alpha": 0.8},
    "tab1_snr21_n50": {"snr_db": 21.0, "n": 50, "eta_i": 1.0, "eta_d": 2.0, "alpha": 0.8},
}


def nearest_se_odia_preset(snr_db: float, n: int) -> Dict[str, float]:
    """Pick the SE-ODIA preset closest to an operating point.

    Distance is measured in SNR (dB) first, then in N, so a 20 dB point
    uses the 21 dB row regardless of N.

    Args:
        snr_db: Operating SNR in dB
        n: Users per cell

    Returns:
        Preset dict with keys snr_db, n, eta_i, eta_d, alpha
    """
    return min(
        SE_ODIA_PRESETS.values(),
        key=lambda p: (abs(p["snr_db"] - snr_db), abs(p["n"] - n)),
    )


def load_config_file(path: str) -> Dict[str, str]:
    """Parse a flat ``key = value`` config document with python-dotenv.

    Args:
        path: Path to the config file

    Returns:
        Dict of lower-cased keys to raw string values

    Raises:
        ConfigFileError: If the file is missing, has a bare key or unknown keys
    """
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigFileError(f"Config file not found: {config_path}")

    values: Dict[str, str] = {}
    raw = dotenv_values(config_path, interpolate=False, encoding="utf-8")
    for name, value in raw.items():
        key = name.lower()
        if key not in CONFIG_KEYS:
            raise ConfigFileError(f"{config_path}: unknown key {key!r}")
        if value is None:
            raise ConfigFileError(f"{config_path}: expected 'key = value' for {key!r}")
        values[key] = value.strip()

    return values


def parse_bool(value: str) -> bool:
    """Interpret a config-file boolean."""
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigFileError(f"Not a boolean: {value!r}")
