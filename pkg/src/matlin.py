"""Small dense complex linear-algebra kernels.

Every numerically delicate step of the simulator (Haar bases, smallest
singular pairs, square inverses) goes through this module.
"""

import logging
from typing import Tuple

import numpy as np

from src.config import Config
from src.models import OrthonormalBasis

logger = logging.getLogger(__name__)


class MatlinError(Exception):
    """Base exception for linear-algebra kernel errors."""

    pass


class DimensionError(MatlinError):
    """Raised when matrix shapes violate an operation's contract."""

    pass


class SingularMatrixError(MatlinError):
    """Raised when a matrix is too ill-conditioned to invert."""

    pass


def as_cmatrix(data) -> np.ndarray:
    """Copy ``data`` into a read-only, finite, 2-D complex128 array.

    Raises:
        DimensionError: If the input is not a nonempty 2-D array
        ValueError: If any entry is NaN or infinite
    """
    matrix = np.array(data, dtype=np.complex128)
    if matrix.ndim != 2 or matrix.size == 0:
        raise DimensionError(f"Expected a nonempty 2-D matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("Matrix has non-finite entries")
    matrix.setflags(write=False)
    return matrix


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """I.i.d. CN(0, 1) samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def fix_phase(vectors: np.ndarray) -> np.ndarray:
    """Rotate vectors (along the last axis) so the first nonzero entry is real >= 0."""
    vectors = np.array(vectors, dtype=np.complex128)
    magnitudes = np.abs(vectors)
    scale = magnitudes.max(axis=-1, keepdims=True)
    nonzero = magnitudes > 1e-12 * np.where(scale > 0, scale, 1.0)
    first = np.argmax(nonzero, axis=-1)
    pivot = np.take_along_axis(vectors, first[..., None], axis=-1)
    pivot_abs = np.abs(pivot)
    phase = np.where(pivot_abs > 0, pivot.conj() / np.where(pivot_abs > 0, pivot_abs, 1.0), 1.0)
    return vectors * phase


def random_orthonormal_basis(
    M: int, S: int, rng: np.random.Generator, source_seed: int = 0
) -> OrthonormalBasis:
    """Haar-distributed M x S matrix with orthonormal columns.

    Takes the first S columns of the Q factor of an M x M complex Gaussian
    matrix, with the phases of R's diagonal folded into Q so the result is
    invariant under left multiplication by any unitary matrix.

    Args:
        M: Ambient dimension (BS antennas)
        S: Number of columns (streams)
        rng: Seeded generator supplying all randomness
        source_seed: Seed recorded on the basis for provenance

    Returns:
        OrthonormalBasis with an M x S matrix

    Raises:
        DimensionError: If S < 1 or S > M
    """
    if not 1 <= S <= M:
        raise DimensionError(f"Need 1 <= S <= M, got S={S}, M={M}")

    Q, R = np.linalg.qr(complex_gaussian(rng, (M, M)))
    diag = np.diag(R)
    Q = Q * (diag / np.abs(diag))
    return OrthonormalBasis(matrix=Q[:, :S], source_seed=source_seed)


def smallest_singular_pair(G: np.ndarray) -> Tuple[float, np.ndarray]:
    """Smallest singular value and right singular vector of an R x L matrix.

    Singular values are counted with multiplicity L, so an R < L matrix
    always returns sigma_min ~ 0 and a null vector. Works from the
    eigen-decomposition of the L x L Gram matrix G^H G.

    Returns:
        (sigma_min, q) with ||q|| = 1 and the first nonzero entry of q real

    Raises:
        DimensionError: If G is empty or not 2-D
        ValueError: If G has non-finite entries
    """
    G = as_cmatrix(G)
    sigmas, vectors = smallest_singular_pairs(G[None, ...])
    return float(sigmas[0]), vectors[0]


def smallest_singular_pairs(G: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Batched :func:`smallest_singular_pair` over a (B, R, L) stack."""
    G = np.asarray(G, dtype=np.complex128)
    if G.ndim != 3 or G.shape[1] == 0 or G.shape[2] == 0:
        raise DimensionError(f"Expected a (B, R, L) stack, got shape {G.shape}")
    if not np.all(np.isfinite(G)):
        raise ValueError("Matrix stack has non-finite entries")

    gram = np.conj(np.swapaxes(G, -1, -2)) @ G
    _, eigvecs = np.linalg.eigh(gram)
    q = fix_phase(eigvecs[..., :, 0])
    q /= np.linalg.norm(q, axis=-1, keepdims=True)
    # sigma from ||G q|| is accurate to eps*||G||, sqrt(lambda_min) is not
    sigma = np.linalg.norm(np.einsum("brl,bl->br", G, q), axis=-1)
    return sigma, q


def invert_square(F: np.ndarray) -> np.ndarray:
    """Inverse of a square matrix, refusing near-singular inputs.

    Raises:
        DimensionError: If F is not square
        SingularMatrixError: If the condition number exceeds the configured limit
        ValueError: If F has non-finite entries
    """
    F = as_cmatrix(F)
    if F.shape[0] != F.shape[1]:
        raise DimensionError(f"Expected a square matrix, got shape {F.shape}")

    cond = np.linalg.cond(F)
    if not np.isfinite(cond) or cond > Config.SINGULAR_COND_LIMIT:
        raise SingularMatrixError(f"Matrix is singular to working precision (cond={cond:.3e})")
    return np.linalg.inv(F)
