"""Data models for the ODIA downlink simulator."""

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Dict, Optional, Tuple

import numpy as np

from src.config import Config


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class NetworkConfig:
    """One simulated K-cell network: (K, N, M, L, S, SNR, seed)."""

    K: int
    N: int
    M: int
    L: int
    S: int
    snr_db: float
    seed: int = 0
    fixed_reference_bases: bool = False

    @property
    def snr(self) -> float:
        """Linear SNR."""
        return 10.0 ** (self.snr_db / 10.0)

    @property
    def noise_power(self) -> float:
        """Noise variance N0 = 1/SNR."""
        return 1.0 / self.snr

    @property
    def tail_exponent(self) -> int:
        """(K-1)S - L + 1: CDF exponent of the leakage metric near zero."""
        return (self.K - 1) * self.S - self.L + 1

    def with_changes(self, **changes) -> "NetworkConfig":
        """Return a copy with some fields replaced."""
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class OrthonormalBasis:
    """M x S matrix with orthonormal columns (a cell's reference beamformer)."""

    matrix: np.ndarray
    source_seed: int = 0

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[1] > mat.shape[0] or mat.size == 0:
            raise ValueError(f"Basis must be M x S with 1 <= S <= M, got shape {mat.shape}")
        if not np.all(np.isfinite(mat)):
            raise ValueError("Basis has non-finite entries")
        gram_error = np.max(np.abs(mat.conj().T @ mat - np.eye(mat.shape[1])))
        if gram_error >= Config.ORTHONORMAL_TOL:
            raise ValueError(f"Columns are not orthonormal (max |P^H P - I| = {gram_error:.2e})")
        object.__setattr__(self, "matrix", _readonly(mat))

    @property
    def M(self) -> int:
        return self.matrix.shape[0]

    @property
    def S(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True, eq=False)
class ChannelDrop:
    """All channel matrices and reference bases of one coherence block.

    ``H[k, i, j]`` is the L x M channel from BS k to user j of cell i.
    """

    H: np.ndarray
    P: Tuple[OrthonormalBasis, ...]
    drop_id: int
    attempt: int = 0

    def __post_init__(self):
        if self.H.ndim != 5:
            raise ValueError(f"H must have shape (K, K, N, L, M), got {self.H.shape}")
        if not np.all(np.isfinite(self.H)):
            raise ValueError("Channel drop has non-finite entries")
        if len(self.P) != self.H.shape[0]:
            raise ValueError("Need one reference basis per cell")

    @property
    def K(self) -> int:
        return self.H.shape[0]

    @property
    def N(self) -> int:
        return self.H.shape[2]

    def channel(self, k: int, i: int, j: int) -> np.ndarray:
        """Channel from BS k to user j in cell i."""
        return self.H[k, i, j]

    @cached_property
    def P_stack(self) -> np.ndarray:
        """Reference bases stacked as a (K, M, S) array."""
        return _readonly(np.stack([basis.matrix for basis in self.P]))

    @cached_property
    def effective(self) -> np.ndarray:
        """H[k, i, j] @ P[k] for every (k, i, j), shape (K, K, N, L, S)."""
        return _readonly(np.einsum("kijlm,kms->kijls", self.H, self.P_stack))


@dataclass(frozen=True, eq=False)
class UserDecision:
    """A user's receive beamformer, leakage metric and effective desired channel."""

    cell: int
    user: int
    u: np.ndarray
    eta: float
    eta_per_cell: np.ndarray
    f: np.ndarray

    @property
    def f_gain(self) -> float:
        return float(np.vdot(self.f, self.f).real)


@dataclass(frozen=True, eq=False)
class CellPrecoder:
    """User-specific precoder V, stream gains and composite transmit matrix W = P V."""

    cell: int
    V: np.ndarray
    gamma: np.ndarray
    W: np.ndarray


@dataclass(frozen=True, eq=False)
class ScheduleOutcome:
    """Per-cell selected users (original indices) and their decisions."""

    selected: Tuple[Tuple[int, ...], ...]
    decisions: Tuple[Tuple[UserDecision, ...], ...]
    outage: bool = False


@dataclass(frozen=True, eq=False)
class Codebook:
    """Unit-vector codebook of 2**n_f codewords in dimension S."""

    S: int
    n_f: int
    codewords: np.ndarray
    kind: str
    min_chordal_sq: Optional[float] = None

    def __post_init__(self):
        words = np.array(self.codewords, dtype=np.complex128)
        if words.shape != (2 ** self.n_f, self.S):
            raise ValueError(
                f"Expected {2 ** self.n_f} codewords of length {self.S}, got {words.shape}"
            )
        norms = np.linalg.norm(words, axis=1)
        if np.max(np.abs(norms - 1.0)) > Config.UNIT_NORM_TOL:
            raise ValueError("Codewords must have unit norm")
        distance = min_chordal_sq(words)
        if self.min_chordal_sq is not None and abs(distance - self.min_chordal_sq) > 1e-12:
            raise ValueError("Cached min chordal distance does not match codewords")
        object.__setattr__(self, "min_chordal_sq", distance)
        object.__setattr__(self, "codewords", _readonly(words))

    @property
    def N_f(self) -> int:
        return 2 ** self.n_f

    @classmethod
    def from_codewords(cls, codewords: np.ndarray, kind: str) -> "Codebook":
        """Build a codebook from raw codewords, computing n_f and the min distance."""
        words = np.asarray(codewords, dtype=np.complex128)
        n_f = int(np.log2(words.shape[0]))
        return cls(
            S=words.shape[1],
            n_f=n_f,
            codewords=words,
            kind=kind,
        )


def min_chordal_sq(codewords: np.ndarray) -> float:
    """Minimum over codeword pairs of 1 - |c_i^H c_j|^2.

    The overlap matrix is formed in row blocks of at most
    ``Config.OVERLAP_BLOCK_ENTRIES`` entries, so memory stays flat in N_f.
    """
    count = codewords.shape[0]
    if count < 2:
        return 1.0
    rows = overlap_block_rows(count)
    worst = 0.0
    for start in range(0, count, rows):
        overlap = np.abs(codewords[start : start + rows].conj() @ codewords.T) ** 2
        local = np.arange(overlap.shape[0])
        overlap[local, start + local] = 0.0
        worst = max(worst, float(overlap.max()))
    return float(max(0.0, 1.0 - worst))


def overlap_block_rows(width: int) -> int:
    """Rows per block when a (rows x width) overlap matrix is built in pieces."""
    return max(1, Config.OVERLAP_BLOCK_ENTRIES // max(1, width))


@dataclass(frozen=True)
class QuantizedFeedback:
    """What a user reports under limited feedback: index, gain and metric."""

    index: int
    gain: float
    d_sq: float
    eta: float = 0.0


@dataclass(frozen=True)
class SeOdiaParams:
    """Thresholds of the semiorthogonal selection (eta_I, eta_D, alpha)."""

    eta_i: float
    eta_d: float
    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.eta_i < 0 or self.eta_d < 0:
            raise ValueError("Thresholds must be nonnegative")


@dataclass(frozen=True, eq=False)
class SeOdiaOutcome:
    """Result of one cell's SE-ODIA selection."""

    selected: Tuple[int, ...]
    projections: Tuple[np.ndarray, ...]
    pool_sizes: Tuple[int, ...]
    outage: bool


@dataclass(frozen=True, eq=False)
class StreamMetricTable:
    """Per-(user, stream) metrics and receive beamformers of one cell."""

    cell: int
    metrics: np.ndarray  # (N, S)
    beamformers: np.ndarray  # (N, S, L)

    def __post_init__(self):
        if not np.all(np.isfinite(self.metrics)) or np.any(self.metrics < 0):
            raise ValueError("Stream metrics must be finite and nonnegative")


@dataclass(frozen=True, eq=False)
class ServedStream:
    """A (cell, stream) slot, the user it serves and that user's beamformer."""

    cell: int
    stream: int
    user: int
    u: np.ndarray


@dataclass(frozen=True, eq=False)
class RateReport:
    """Per-stream SINR and rate plus network aggregates."""

    streams: Tuple[ServedStream, ...]
    sinr: np.ndarray
    rates: np.ndarray
    cell_sum_rates: np.ndarray
    sum_rate: float
    sum_interference: float
    residual_intra: np.ndarray


@dataclass(frozen=True, eq=False)
class SlopeEstimate:
    """Least-squares line through (x, y) sample arrays."""

    slope: float
    intercept: float
    r_squared: float
    x: np.ndarray
    y: np.ndarray


@dataclass(frozen=True)
class SweepSpec:
    """One scheme swept over one axis, with its fixed parameters."""

    base: NetworkConfig
    scheme: str
    axis: str
    axis_values: Tuple[float, ...]
    drops: int = Config.DEFAULT_DROPS
    n_f: int = 6
    codebook: str = "random"
    grassmannian_iterations: int = Config.GRASSMANNIAN_ITERATIONS
    se_params: Optional[SeOdiaParams] = None
    eps_i: Optional[float] = None  # eta_I = eps_i / SNR
    eps_d: Optional[float] = None  # eta_D = eps_d * ln SNR or ln N
    eta_d_scaling: str = "log_snr"
    outage_policy: str = "partial"
    reconstruction_exponent: int = 1
    user_exponent: Optional[float] = None  # couples N = SNR**tau
    couple_feedback_bits: bool = False  # couples n_f = ceil(log2 SNR)
    output: Optional[str] = None
    label: Optional[str] = None

    def __post_init__(self):
        if not self.axis_values:
            raise ValueError("axis_values must be nonempty")
        if list(self.axis_values) != sorted(self.axis_values):
            raise ValueError("axis_values must be sorted")
        if self.drops < 1:
            raise ValueError("drops must be >= 1")


@dataclass(frozen=True)
class SweepPoint:
    """Aggregates of one axis value."""

    scheme: str
    config: NetworkConfig
    n_f: Optional[int]
    se_params: Optional[SeOdiaParams]
    drops: int
    sum_rate_mean: float
    sum_rate_sem: float
    sum_interference_mean: float
    residual_intra_mean: float
    outage_rate: float
    resampled: int
    label: Optional[str] = None


@dataclass(frozen=True)
class SweepResult:
    """All points of one or more sweeps plus provenance."""

    points: Tuple[SweepPoint, ...]
    provenance: Dict[str, str] = field(default_factory=dict)
