"""Spectrally efficient ODIA: threshold-gated semiorthogonal user selection."""

import logging
import math
from typing import Sequence

import numpy as np

from src.models import SeOdiaOutcome, SeOdiaParams

logger = logging.getLogger(__name__)

ETA_D_SCALINGS = ("log_snr", "log_n")


class SeOdiaError(Exception):
    """Exception raised for invalid SE-ODIA inputs."""

    pass


def orthogonal_projection_residual(f: np.ndarray, basis: Sequence[np.ndarray]) -> np.ndarray:
    """Component of f orthogonal to the span of the (mutually orthogonal) basis vectors.

    Raises:
        SeOdiaError: If a basis vector is zero
    """
    residual = np.array(f, dtype=np.complex128)
    for b in basis:
        norm_sq = np.vdot(b, b).real
        if norm_sq == 0.0:
            raise SeOdiaError("Zero vector in projection basis")
        residual = residual - (np.vdot(b, f) / norm_sq) * b
    return residual


def _residuals(F: np.ndarray, basis: Sequence[np.ndarray]) -> np.ndarray:
    residual = F.copy()
    for b in basis:
        residual -= np.outer(F @ b.conj(), b) / np.vdot(b, b).real
    return residual


def se_odia_select(
    f: np.ndarray,
    eta: np.ndarray,
    params: SeOdiaParams,
    rng: np.random.Generator,
    S: int = None,
) -> SeOdiaOutcome:
    """Semiorthogonal selection of up to S users in one cell.

    At step s the candidates are pool members with eta <= eta_I and
    ||b~||^2 >= eta_D, where b~ is the user's f with the earlier b's
    projected out; one candidate is drawn uniformly. The next pool keeps
    the users whose normalized correlation with the new b is below alpha.
    An empty candidate set ends selection with ``outage=True``.

    Args:
        f: (N, S) effective desired channels
        eta: (N,) leakage metrics
        params: Thresholds (eta_I, eta_D, alpha)
        rng: Seeded generator for the uniform draws
        S: Streams to fill (defaults to f.shape[1])

    Returns:
        SeOdiaOutcome with the selection order, b vectors and pool sizes

    Raises:
        SeOdiaError: If fewer than S users are given
    """
    f = np.asarray(f, dtype=np.complex128)
    eta = np.asarray(eta, dtype=float)
    S = S or f.shape[1]
    if f.shape[0] < S:
        raise SeOdiaError(f"Need N ≥ S users, got N={f.shape[0]}, S={S}")

    pool = np.arange(f.shape[0])
    f_norms = np.linalg.norm(f, axis=1)
    selected, projections, pool_sizes = [], [], []

    for step in range(S):
        pool_sizes.append(int(pool.size))
        residual = _residuals(f[pool], projections)
        gains = np.sum(np.abs(residual) ** 2, axis=1)
        eligible = (eta[pool] <= params.eta_i) & (gains >= params.eta_d)
        candidates = np.flatnonzero(eligible)
        if candidates.size == 0:
            return SeOdiaOutcome(tuple(selected), tuple(projections), tuple(pool_sizes), True)

        pick = candidates[rng.integers(candidates.size)]
        chosen, b = int(pool[pick]), residual[pick]
        selected.append(chosen)
        projections.append(b)

        if step + 1 < S:
            b_norm = np.linalg.norm(b)
            correlation = np.abs(f[pool] @ b.conj()) / (f_norms[pool] * b_norm)
            keep = (pool != chosen) & (correlation < params.alpha)
            next_pool = pool[keep]
            assert next_pool.size <= pool.size - 1
            pool = next_pool

    return SeOdiaOutcome(tuple(selected), tuple(projections), tuple(pool_sizes), False)


def effective_gain_lower_bound(b_norm_sq: float, S: int, alpha: float) -> float:
    """Lower bound on a selected user's ZF gain given ||b||^2 and alpha.

    Raises:
        SeOdiaError: If (S-1) alpha^2 >= 1, where the bound is vacuous
    """
    spread = (S - 1) * alpha**2
    if spread >= 1.0:
        raise SeOdiaError(f"Bound is vacuous for (S-1)α² = {spread:.3f} ≥ 1")
    return b_norm_sq / (1.0 + (S - 1) ** 4 * alpha**2 / (1.0 - spread))


def scaled_params(
    eps_i: float,
    eps_d: float,
    alpha: float,
    snr_db: float,
    n: int,
    eta_d_scaling: str = "log_snr",
) -> SeOdiaParams:
    """Thresholds that scale with the operating point.

    eta_I = eps_I / SNR, and eta_D = eps_D * ln SNR (``log_snr``) or
    eps_D * ln N (``log_n``).
    """
    snr = 10.0 ** (snr_db / 10.0)
    if eta_d_scaling == "log_snr":
        eta_d = eps_d * math.log(snr)
    elif eta_d_scaling == "log_n":
        eta_d = eps_d * math.log(n)
    else:
        raise SeOdiaError(f"Unknown eta_d scaling {eta_d_scaling!r}; use one of {ETA_D_SCALINGS}")
    return SeOdiaParams(eta_i=eps_i / snr, eta_d=max(0.0, eta_d), alpha=alpha)
