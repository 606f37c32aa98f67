"""Reference schedulers under multi-cell random beamforming: max-SNR and min-INR.

Both transmit with V = I, i.e. the columns of each cell's reference basis
carry the streams directly, so intra-cell interference is not cancelled.
"""

import logging
from typing import List, Tuple

import numpy as np

from src.channel import ConfigurationError
from src.matlin import smallest_singular_pair, smallest_singular_pairs
from src.models import CellPrecoder, ChannelDrop, StreamMetricTable

logger = logging.getLogger(__name__)

SELECTION_MODES = ("min", "max")


def max_snr_decision(drop: ChannelDrop, i: int, j: int) -> Tuple[np.ndarray, np.ndarray]:
    """Matched-filter beamformers and desired powers per stream for user j of cell i.

    Returns:
        (u of shape (S, L), power of shape (S,)) with power_m = ||H p_m||^2
    """
    h = np.swapaxes(drop.effective[i, i, j], 0, 1)  # (S, L), row m = H p_m
    power = np.sum(np.abs(h) ** 2, axis=1)
    u = h / np.sqrt(power)[:, None]
    return u, power


def max_snr_table(drop: ChannelDrop, i: int) -> StreamMetricTable:
    """Max-SNR metrics of every user and stream in cell i."""
    h = np.swapaxes(drop.effective[i, i], 1, 2)  # (N, S, L)
    power = np.sum(np.abs(h) ** 2, axis=2)
    return StreamMetricTable(cell=i, metrics=power, beamformers=h / np.sqrt(power)[..., None])


def _min_inr_stack(drop: ChannelDrop, i: int, m: int) -> np.ndarray:
    """Stacked interference ((S-1) + (K-1)S, L) per user of cell i for stream m."""
    S = drop.effective.shape[-1]
    others = [s for s in range(S) if s != m]
    blocks = []
    if others:
        blocks.append(np.conj(np.swapaxes(drop.effective[i, i][..., others], -1, -2)))
    blocks.extend(
        np.conj(np.swapaxes(drop.effective[k, i], -1, -2)) for k in range(drop.K) if k != i
    )
    return np.concatenate(blocks, axis=1)


def min_inr_decision(drop: ChannelDrop, i: int, j: int, m: int) -> Tuple[np.ndarray, float]:
    """Receive beamformer minimising intra- plus inter-cell leakage for stream m.

    Returns:
        (u, metric) where metric is the smallest squared singular value
    """
    sigma, u = smallest_singular_pair(_min_inr_stack(drop, i, m)[j])
    return u, sigma**2


def min_inr_table(drop: ChannelDrop, i: int) -> StreamMetricTable:
    """Min-INR metrics of every user and stream in cell i."""
    S = drop.effective.shape[-1]
    metrics = np.empty((drop.N, S))
    beamformers = np.empty((drop.N, S, drop.H.shape[3]), dtype=np.complex128)
    for m in range(S):
        sigma, u = smallest_singular_pairs(_min_inr_stack(drop, i, m))
        metrics[:, m] = sigma**2
        beamformers[:, m] = u
    return StreamMetricTable(cell=i, metrics=metrics, beamformers=beamformers)


def select_users_per_stream(table: StreamMetricTable, mode: str) -> List[int]:
    """Greedy per-stream assignment without replacement.

    Streams are served in order; each takes the best (``min`` or ``max``)
    metric among users not yet assigned. Ties go to the lower user index.

    Returns:
        User index per stream

    Raises:
        ConfigurationError: If fewer users than streams
    """
    if mode not in SELECTION_MODES:
        raise ValueError(f"mode must be one of {SELECTION_MODES}, got {mode!r}")
    N, S = table.metrics.shape
    if N < S:
        raise ConfigurationError(f"Need N ≥ S users, got N={N}, S={S}")

    available = np.ones(N, dtype=bool)
    assignment = []
    for m in range(S):
        column = table.metrics[:, m]
        if mode == "min":
            score = np.where(available, column, np.inf)
            user = int(np.argmin(score))
        else:
            score = np.where(available, column, -np.inf)
            user = int(np.argmax(score))
        assignment.append(user)
        available[user] = False
    return assignment


def random_beamforming_precoder(drop: ChannelDrop, i: int) -> CellPrecoder:
    """V = I: every reference-basis column is one stream."""
    P = drop.P[i].matrix
    S = P.shape[1]
    return CellPrecoder(cell=i, V=np.eye(S, dtype=np.complex128), gamma=np.ones(S), W=P)
