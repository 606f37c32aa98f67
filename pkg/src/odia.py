"""Opportunistic downlink interference alignment (ODIA).

Each user picks the receive beamformer that minimises the inter-cell
interference leaking through the other cells' reference bases, reports
that leakage as its scheduling metric, and each BS zero-forces among the
S users with the smallest metrics.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.channel import ConfigurationError
from src.matlin import (
    SingularMatrixError,
    invert_square,
    smallest_singular_pair,
    smallest_singular_pairs,
)
from src.models import (
    CellPrecoder,
    ChannelDrop,
    NetworkConfig,
    OrthonormalBasis,
    ScheduleOutcome,
    UserDecision,
)

logger = logging.getLogger(__name__)


class DegenerateDropError(Exception):
    """Raised when a drop yields a singular effective channel; the drop is resampled."""

    pass


@dataclass(frozen=True, eq=False)
class CellDecisions:
    """Receive-side quantities of every user in one cell, as arrays.

    Attributes:
        cell: Cell index
        u: (N, L) receive beamformers
        eta: (N,) leakage metrics
        eta_per_cell: (N, K-1) per-interfering-cell leakage, ascending cell order
        f: (N, S) effective desired channels
    """

    cell: int
    u: np.ndarray
    eta: np.ndarray
    eta_per_cell: np.ndarray
    f: np.ndarray

    def decision(self, user: int) -> UserDecision:
        return UserDecision(
            cell=self.cell,
            user=user,
            u=self.u[user],
            eta=float(self.eta[user]),
            eta_per_cell=self.eta_per_cell[user],
            f=self.f[user],
        )


def interference_stack(drop: ChannelDrop, i: int) -> np.ndarray:
    """Augmented interference matrices G of every user in cell i, shape (N, (K-1)S, L)."""
    blocks = [
        np.conj(np.swapaxes(drop.effective[k, i], -1, -2))
        for k in range(drop.K)
        if k != i
    ]
    return np.concatenate(blocks, axis=1)


def receive_beamformer(drop: ChannelDrop, i: int, j: int) -> UserDecision:
    """Leakage-minimising receive beamformer of user j in cell i.

    Args:
        drop: Channel drop
        i: Cell index
        j: User index within the cell

    Returns:
        UserDecision with u, eta (smallest squared singular value of G),
        per-cell leakage terms and the effective desired channel f
    """
    if not (0 <= i < drop.K and 0 <= j < drop.N):
        raise IndexError(f"No user {j} in cell {i}")

    G = interference_stack(drop, i)[j]
    sigma, u = smallest_singular_pair(G)

    S = drop.effective.shape[-1]
    leakage = G @ u
    eta_per_cell = np.array(
        [np.vdot(block, block).real for block in leakage.reshape(drop.K - 1, S)]
    )
    f = drop.effective[i, i, j].conj().T @ u

    return UserDecision(cell=i, user=j, u=u, eta=sigma**2, eta_per_cell=eta_per_cell, f=f)


def receive_beamformers(drop: ChannelDrop, i: int) -> CellDecisions:
    """Batched :func:`receive_beamformer` for all users of cell i."""
    G = interference_stack(drop, i)
    sigma, u = smallest_singular_pairs(G)

    S = drop.effective.shape[-1]
    leakage = np.einsum("nrl,nl->nr", G, u).reshape(drop.N, drop.K - 1, S)
    eta_per_cell = np.sum(np.abs(leakage) ** 2, axis=-1)
    f = np.einsum("nls,nl->ns", np.conj(drop.effective[i, i]), u)

    return CellDecisions(cell=i, u=u, eta=sigma**2, eta_per_cell=eta_per_cell, f=f)


def compute_cell_decisions(drop: ChannelDrop) -> List[CellDecisions]:
    """Receive beamformers and metrics for every user of every cell."""
    return [receive_beamformers(drop, i) for i in range(drop.K)]


def select_users_odia(metrics: Sequence[float], S: int) -> List[int]:
    """Indices of the S smallest metrics, ascending; ties go to the lower index.

    Raises:
        ConfigurationError: If fewer than S users are available
    """
    metrics = np.asarray(metrics, dtype=float)
    if metrics.size < S:
        raise ConfigurationError(f"Need N ≥ S users, got N={metrics.size}, S={S}")
    return [int(j) for j in np.argsort(metrics, kind="stable")[:S]]


def zf_precoder(F: np.ndarray, P: OrthonormalBasis, cell: int = 0) -> CellPrecoder:
    """Zero-forcing user-specific precoder with unit power per stream.

    F holds one row f^H per selected user. With W0 the (right) inverse of F
    and w_j its columns, gamma_j = 1 / ||P w_j||^2 and v_j = sqrt(gamma_j) w_j,
    so F V = diag(sqrt(gamma)) and every column of P V has unit norm. When
    fewer than S users are served the right inverse F^H (F F^H)^-1 is used.

    Raises:
        DegenerateDropError: If F (or F F^H) is singular
    """
    F = np.atleast_2d(np.asarray(F, dtype=np.complex128))
    S = P.S
    if F.shape[0] == 0 or F.size == 0:
        return CellPrecoder(
            cell=cell,
            V=np.zeros((S, 0), dtype=np.complex128),
            gamma=np.zeros(0),
            W=np.zeros((P.M, 0), dtype=np.complex128),
        )
    if F.shape[1] != S or F.shape[0] > S:
        raise ValueError(f"Effective channel must be s x {S} with s <= {S}, got {F.shape}")

    try:
        if F.shape[0] == S:
            W0 = invert_square(F)
        else:
            W0 = F.conj().T @ invert_square(F @ F.conj().T)
    except SingularMatrixError as e:
        raise DegenerateDropError(f"Cell {cell}: singular effective channel ({e})") from e

    column_power = np.sum(np.abs(P.matrix @ W0) ** 2, axis=0)
    gamma = 1.0 / column_power
    V = W0 * np.sqrt(gamma)
    return CellPrecoder(cell=cell, V=V, gamma=gamma, W=P.matrix @ V)


def run_odia_cell_selection(
    drop: ChannelDrop,
    cfg: NetworkConfig,
    decisions: Optional[List[CellDecisions]] = None,
) -> Tuple[ScheduleOutcome, List[CellPrecoder]]:
    """Full ODIA scheduling for one drop: metrics, selection, ZF precoding.

    Args:
        drop: Channel drop
        cfg: Network configuration (supplies S)
        decisions: Precomputed per-cell decisions, computed if omitted

    Returns:
        (ScheduleOutcome, one CellPrecoder per cell)

    Raises:
        DegenerateDropError: If any cell's effective channel is singular
    """
    decisions = decisions or compute_cell_decisions(drop)

    selected = []
    chosen = []
    precoders = []
    for cell in decisions:
        users = select_users_odia(cell.eta, cfg.S)
        user_decisions = tuple(cell.decision(j) for j in users)
        F = np.stack([d.f.conj() for d in user_decisions])
        precoders.append(zf_precoder(F, drop.P[cell.cell], cell=cell.cell))
        selected.append(tuple(users))
        chosen.append(user_decisions)

    outcome = ScheduleOutcome(selected=tuple(selected), decisions=tuple(chosen), outage=False)
    return outcome, precoders
