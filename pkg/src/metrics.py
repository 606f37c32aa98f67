"""Rate and interference accounting, slope estimators and statistical tests."""

import logging
from typing import Callable, Iterable, List, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from src.config import Config
from src.models import (
    CellPrecoder,
    ChannelDrop,
    RateReport,
    ServedStream,
    SlopeEstimate,
    UserDecision,
)

logger = logging.getLogger(__name__)


class MetricsError(Exception):
    """Exception raised for invalid metric inputs."""

    pass


def compute_rates(
    drop: ChannelDrop,
    precoders: Sequence[Union[CellPrecoder, np.ndarray]],
    streams: Sequence[ServedStream],
    snr: float,
    S: int,
    interference_free: bool = False,
) -> RateReport:
    """Per-stream SINR and rate with every stream transmitted at power 1/S.

    For the stream s of cell i received by user j with beamformer u:
    SINR = (1/S)|u^H H_i W_i[:, s]|^2 / (N0 + (1/S) sum over all other
    (k, s') of |u^H H_k W_k[:, s']|^2), N0 = 1/SNR. With
    ``interference_free`` the interference term is dropped (genie bound).

    Args:
        drop: Channel drop
        precoders: Composite transmit matrix W = P V per cell (or CellPrecoder)
        streams: Served (cell, stream, user, u) slots
        snr: Linear SNR
        S: Streams per cell (sets the per-stream power)
        interference_free: Remove all interference from the SINR

    Returns:
        RateReport

    Raises:
        MetricsError: On dimension mismatches
    """
    W = [p.W if isinstance(p, CellPrecoder) else np.asarray(p) for p in precoders]
    K, _, _, L, M = drop.H.shape
    if len(W) != K:
        raise MetricsError(f"Need one transmit matrix per cell, got {len(W)} for K={K}")
    for k, w in enumerate(W):
        if w.ndim != 2 or w.shape[0] != M:
            raise MetricsError(f"Cell {k}: transmit matrix must be {M} x streams, got {w.shape}")

    noise = 1.0 / snr
    sinr, cells, residual_intra, leakage = [], [], [], []
    for slot in streams:
        u = np.asarray(slot.u, dtype=np.complex128)
        if u.shape != (L,):
            raise MetricsError(f"Beamformer must have length {L}, got {u.shape}")

        received = [np.abs(u.conj() @ drop.H[k, slot.cell, slot.user] @ W[k]) ** 2 / S for k in range(K)]
        signal = received[slot.cell][slot.stream]
        total = sum(float(np.sum(r)) for r in received)
        intra = float(np.sum(received[slot.cell])) - signal
        interference = total - signal

        inter_reference = sum(
            float(np.sum(np.abs(u.conj() @ drop.effective[k, slot.cell, slot.user]) ** 2))
            for k in range(K)
            if k != slot.cell
        )

        denominator = noise if interference_free else noise + interference
        sinr.append(signal / denominator)
        cells.append(slot.cell)
        residual_intra.append(intra)
        leakage.append(inter_reference + S * intra)

    sinr = np.array(sinr)
    rates = np.log2(1.0 + sinr)
    cell_sum_rates = np.bincount(np.array(cells, dtype=int), weights=rates, minlength=K)
    return RateReport(
        streams=tuple(streams),
        sinr=sinr,
        rates=rates,
        cell_sum_rates=cell_sum_rates,
        sum_rate=float(np.sum(rates)),
        sum_interference=float(S * snr * np.sum(leakage)),
        residual_intra=np.array(residual_intra),
    )


def sum_interference(decisions: Iterable[UserDecision], S: int, snr: float) -> float:
    """Network sum-interference S * SNR * (sum of the selected users' eta)."""
    return float(S * snr * sum(d.eta for d in decisions))


def fit_loglog_slope(points: Sequence[Tuple[float, float]]) -> SlopeEstimate:
    """Least squares of log y on log x.

    Raises:
        MetricsError: With fewer than 3 points or nonpositive values
    """
    data = np.asarray(points, dtype=float)
    if data.ndim != 2 or data.shape[0] < 3:
        raise MetricsError("Need at least 3 (x, y) points")
    if np.any(data <= 0):
        raise MetricsError("Log-log fit needs strictly positive x and y")
    return fit_linear_slope(np.log(data[:, 0]), np.log(data[:, 1]))


def fit_linear_slope(x: Sequence[float], y: Sequence[float]) -> SlopeEstimate:
    """Ordinary least-squares line y = slope * x + intercept."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r_squared = 1.0 - np.sum(residual**2) / ss_tot if ss_tot > 0 else 1.0
    return SlopeEstimate(
        slope=float(slope), intercept=float(intercept), r_squared=float(r_squared), x=x, y=y
    )


def finite_difference_dof(snr_db: Sequence[float], sum_rates: Sequence[float]) -> float:
    """Slope of sum-rate against log2 SNR between the two highest SNR points."""
    order = np.argsort(snr_db)
    snr_db = np.asarray(snr_db, dtype=float)[order]
    sum_rates = np.asarray(sum_rates, dtype=float)[order]
    if snr_db.size < 2:
        raise MetricsError("Need at least two SNR points")
    log2_snr = snr_db[-2:] / (10.0 * np.log10(2.0))
    return float((sum_rates[-1] - sum_rates[-2]) / (log2_snr[-1] - log2_snr[-2]))


def empirical_cdf_slope(
    samples: Sequence[float],
    window: Tuple[float, float] = Config.CDF_SLOPE_WINDOW,
    n_points: int = 20,
) -> SlopeEstimate:
    """Log-log slope of the empirical CDF over a window of CDF values."""
    samples = np.asarray(samples, dtype=float)
    lo, hi = window
    if samples.size * lo < 10:
        raise MetricsError(f"{samples.size} samples are too few to resolve CDF = {lo:g}")
    levels = np.logspace(np.log10(lo), np.log10(hi), n_points)
    quantiles = np.quantile(samples, levels)
    return fit_loglog_slope(np.column_stack([quantiles, levels]))


def mean_and_sem(values: Sequence[float]) -> Tuple[float, float]:
    """Sample mean and its standard error."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return float("nan"), float("nan")
    if values.size == 1:
        return float(values[0]), 0.0
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(values.size))


def ks_test_chi_square(samples: Sequence[float], dof: int) -> float:
    """Asymptotic KS p-value of samples against chi-squared(dof).

    Raises:
        MetricsError: With fewer than 100 samples or odd dof
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size < 100:
        raise MetricsError(f"Need at least 100 samples, got {samples.size}")
    if dof < 2 or dof % 2:
        raise MetricsError(f"dof must be a positive even integer, got {dof}")
    return float(stats.kstest(samples, "chi2", args=(dof,), method="asymp").pvalue)


def ks_distance(samples: Sequence[float], cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """KS statistic of samples against an arbitrary CDF."""
    return float(stats.kstest(np.asarray(samples, dtype=float), cdf).statistic)


def served_streams(selected: Sequence[Sequence[int]], beamformers: List[List[np.ndarray]]) -> List[ServedStream]:
    """Flatten per-cell selections into ServedStream slots (stream = position)."""
    return [
        ServedStream(cell=i, stream=s, user=user, u=beamformers[i][s])
        for i, users in enumerate(selected)
        for s, user in enumerate(users)
    ]
