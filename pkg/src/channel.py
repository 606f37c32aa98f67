"""Network configurations and i.i.d. Rayleigh channel drops."""

import logging
from dataclasses import dataclass
from typing import Dict, List

import numpy as np

from src.config import ConfigFileError, parse_bool
from src.matlin import complex_gaussian, random_orthonormal_basis
from src.models import ChannelDrop, NetworkConfig

logger = logging.getLogger(__name__)

# Fixed-length spawn keys: (stream, a, b)
DROP_STREAM = 0
REFERENCE_STREAM = 1
SCHEDULER_STREAM = 2


class ConfigurationError(Exception):
    """Exception raised for invalid network or sweep configurations."""

    pass


@dataclass(frozen=True)
class ConfigIssue:
    """One violation (``error``) or advisory (``warning``) found in a config."""

    severity: str
    message: str


def validate_config(cfg: NetworkConfig) -> List[ConfigIssue]:
    """Check a network configuration against its invariants.

    Args:
        cfg: Network configuration

    Returns:
        List of issues; empty iff every invariant holds
    """
    issues: List[ConfigIssue] = []

    if cfg.K < 2:
        issues.append(ConfigIssue("error", f"K ≥ 2 violated (K={cfg.K})"))
    for name in ("N", "M", "L", "S"):
        if getattr(cfg, name) < 1:
            issues.append(ConfigIssue("error", f"{name} ≥ 1 violated ({name}={getattr(cfg, name)})"))
    if cfg.S > cfg.M:
        issues.append(ConfigIssue("error", f"S ≤ M violated (S={cfg.S}, M={cfg.M})"))
    if cfg.seed < 0:
        issues.append(ConfigIssue("error", f"seed must be nonnegative (seed={cfg.seed})"))
    if cfg.L >= (cfg.K - 1) * cfg.S + 1:
        issues.append(
            ConfigIssue(
                "warning",
                "L ≥ (K−1)S+1: all interference cancellable at receivers "
                f"(L={cfg.L}, (K−1)S+1={(cfg.K - 1) * cfg.S + 1})",
            )
        )

    return issues


def ensure_valid(cfg: NetworkConfig) -> None:
    """Raise on error-class issues and log warnings.

    Raises:
        ConfigurationError: If any error-class issue is found
    """
    issues = validate_config(cfg)
    errors = [issue.message for issue in issues if issue.severity == "error"]
    if errors:
        raise ConfigurationError("; ".join(errors))
    for issue in issues:
        logger.warning(f"Config warning: {issue.message}")


def derive_rng(seed: int, stream: int, a: int = 0, b: int = 0) -> np.random.Generator:
    """Independent generator for (seed, stream, a, b)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, a, b)))


def generate_drop(cfg: NetworkConfig, drop_index: int, attempt: int = 0) -> ChannelDrop:
    """Draw one coherence block of channels and reference bases.

    Args:
        cfg: Valid network configuration
        drop_index: Index of the drop within a run
        attempt: Resample counter; nonzero after a degenerate drop

    Returns:
        ChannelDrop with H of shape (K, K, N, L, M) and K reference bases

    Raises:
        ConfigurationError: If the config has error-class issues
    """
    if any(issue.severity == "error" for issue in validate_config(cfg)):
        ensure_valid(cfg)

    rng = derive_rng(cfg.seed, DROP_STREAM, drop_index, attempt)
    H = complex_gaussian(rng, (cfg.K, cfg.K, cfg.N, cfg.L, cfg.M))
    H.setflags(write=False)

    if cfg.fixed_reference_bases:
        basis_rng = derive_rng(cfg.seed, REFERENCE_STREAM)
    else:
        basis_rng = rng
    P = tuple(
        random_orthonormal_basis(cfg.M, cfg.S, basis_rng, source_seed=cfg.seed)
        for _ in range(cfg.K)
    )

    return ChannelDrop(H=H, P=P, drop_id=drop_index, attempt=attempt)


def config_from_mapping(values: Dict[str, str], defaults: NetworkConfig = None) -> NetworkConfig:
    """Build a NetworkConfig from config-file keys (k, n, m, l, s, snr_db, seed, ...).

    Raises:
        ConfigurationError: If a required key is missing or malformed
    """
    fields = {}
    for key, name, cast in (
        ("k", "K", int),
        ("n", "N", int),
        ("m", "M", int),
        ("l", "L", int),
        ("s", "S", int),
        ("snr_db", "snr_db", float),
        ("seed", "seed", int),
        ("fixed_reference_bases", "fixed_reference_bases", parse_bool),
    ):
        if key in values:
            try:
                fields[name] = cast(values[key])
            except (ValueError, ConfigFileError) as e:
                raise ConfigurationError(f"Bad value for {key}: {values[key]!r}") from e
        elif defaults is not None:
            fields[name] = getattr(defaults, name)
        elif name not in ("seed", "fixed_reference_bases"):
            raise ConfigurationError(f"Missing required config key: {key}")

    return NetworkConfig(**fields)
