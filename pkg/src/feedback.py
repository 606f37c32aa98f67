"""Limited feedback: codebooks, direction quantization and precoder reconstruction."""

import logging
from pathlib import Path
from typing import Dict, Sequence

import numpy as np

from src.config import Config
from src.matlin import complex_gaussian
from src.models import (
    CellPrecoder,
    Codebook,
    OrthonormalBasis,
    QuantizedFeedback,
    min_chordal_sq,
    overlap_block_rows,
)
from src.odia import zf_precoder

logger = logging.getLogger(__name__)

CODEBOOK_KINDS = ("random", "grassmannian")


class FeedbackError(Exception):
    """Base exception for limited-feedback errors."""

    pass


class DegenerateInputError(FeedbackError):
    """Raised when a zero vector is handed to the quantizer."""

    pass


def _unit_rows(vectors: np.ndarray) -> np.ndarray:
    return vectors / np.linalg.norm(vectors, axis=-1, keepdims=True)


def _uniform_phases(count: int, rng: np.random.Generator = None) -> np.ndarray:
    if rng is None:
        angles = 2.0 * np.pi * np.arange(count) / count
    else:
        angles = rng.uniform(0.0, 2.0 * np.pi, size=count)
    return np.exp(1j * angles)[:, None]


def build_random_codebook(S: int, n_f: int, seed: int = 0) -> Codebook:
    """2**n_f i.i.d. isotropic unit vectors in C^S.

    Args:
        S: Codeword dimension
        n_f: Feedback bits
        seed: Seed of the codebook generator

    Returns:
        Codebook of kind ``random``
    """
    if S < 1 or n_f < 1:
        raise FeedbackError(f"Need S ≥ 1 and n_f ≥ 1, got S={S}, n_f={n_f}")

    rng = np.random.default_rng(seed)
    if S == 1:
        words = _uniform_phases(2**n_f, rng)
    else:
        words = _unit_rows(complex_gaussian(rng, (2**n_f, S)))
    return Codebook.from_codewords(words, kind="random")


def chordal_distance_bound(S: int, N_f: int) -> float:
    """Upper bound on the min squared chordal distance of N_f lines in C^S.

    Composite of the simplex (Rankin) bound (S-1)N_f / (S(N_f-1)) and the
    cap-packing (Hamming) bound: caps of half the minimum angle around each
    line are disjoint, and a cap of angular radius phi has measure
    sin(phi)**(2(S-1)).
    """
    if S == 1:
        return 0.0
    rankin = (S - 1) * N_f / (S * (N_f - 1))
    t = N_f ** (-1.0 / (S - 1))  # upper bound on sin^2 of the half angle
    hamming = 4.0 * t * (1.0 - t) if t < 0.5 else 1.0
    return float(min(1.0, rankin, hamming))


def literal_chordal_bound(S: int, N_f: int) -> float:
    """min{1/2, (S-1)N_f / (2S(N_f-1)), (1/N_f)**(1/(S-1))} as commonly printed.

    Reported for comparison only; with d^2 = 1 - |c_i^H c_j|^2 it is not a
    valid upper bound (two orthogonal lines in C^2 reach d^2 = 1).
    """
    if S == 1:
        return 0.0
    return float(
        min(0.5, (S - 1) * N_f / (2 * S * (N_f - 1)), (1.0 / N_f) ** (1.0 / (S - 1)))
    )


def _assign(training: np.ndarray, codewords: np.ndarray) -> np.ndarray:
    labels = np.empty(training.shape[0], dtype=np.int64)
    rows = min(Config.QUANTIZATION_CHUNK, overlap_block_rows(codewords.shape[0]))
    for start in range(0, training.shape[0], rows):
        chunk = training[start : start + rows]
        labels[start : start + len(chunk)] = np.argmax(
            np.abs(chunk @ codewords.conj().T) ** 2, axis=1
        )
    return labels


def build_grassmannian_codebook(
    S: int,
    n_f: int,
    iterations: int = Config.GRASSMANNIAN_ITERATIONS,
    seed: int = 0,
    training_size: int = Config.GRASSMANNIAN_TRAINING_SIZE,
) -> Codebook:
    """Codebook with a large minimum chordal distance via Lloyd iterations.

    Starts from the random codebook of the same (S, n_f, seed). Each
    iteration assigns the training directions to their nearest codeword and
    moves each codeword to the principal eigenvector of its cluster's
    outer-product sum. The iterate with the largest minimum distance wins.

    Raises:
        FeedbackError: If the result breaks :func:`chordal_distance_bound`
    """
    if S == 1:
        return Codebook.from_codewords(_uniform_phases(2**n_f), kind="grassmannian")

    codewords = build_random_codebook(S, n_f, seed).codewords.copy()
    best_words, best_distance = codewords.copy(), min_chordal_sq(codewords)

    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))
    training = _unit_rows(complex_gaussian(rng, (training_size, S)))

    for iteration in range(iterations):
        labels = _assign(training, codewords)
        scatter = np.zeros((codewords.shape[0], S, S), dtype=np.complex128)
        np.add.at(scatter, labels, training[:, :, None] * training.conj()[:, None, :])
        occupied = np.bincount(labels, minlength=codewords.shape[0]) > 0
        _, eigvecs = np.linalg.eigh(scatter[occupied])
        codewords[occupied] = eigvecs[:, :, -1]

        distance = min_chordal_sq(codewords)
        if distance > best_distance:
            best_words, best_distance = codewords.copy(), distance
        logger.debug(f"Lloyd iteration {iteration + 1}: min d^2 = {distance:.4f}")

    bound = chordal_distance_bound(S, 2**n_f)
    if best_distance > bound + 1e-12:
        raise FeedbackError(f"Min chordal distance {best_distance:.6f} exceeds bound {bound:.6f}")

    logger.info(f"✓ Grassmannian codebook S={S}, n_f={n_f}: min d^2 = {best_distance:.4f}")
    return Codebook(S=S, n_f=n_f, codewords=best_words, kind="grassmannian",
                    min_chordal_sq=best_distance)


def build_codebook(kind: str, S: int, n_f: int, seed: int = 0, **kwargs) -> Codebook:
    """Dispatch on codebook kind."""
    if kind == "random":
        return build_random_codebook(S, n_f, seed)
    if kind == "grassmannian":
        return build_grassmannian_codebook(S, n_f, seed=seed, **kwargs)
    raise FeedbackError(f"Unknown codebook kind: {kind!r} (expected one of {CODEBOOK_KINDS})")


def quantize_direction(f: np.ndarray, cb: Codebook, eta: float = 0.0) -> QuantizedFeedback:
    """Pick the codeword closest in chordal distance to f / ||f||.

    Raises:
        DegenerateInputError: If f is the zero vector
    """
    f = np.asarray(f, dtype=np.complex128).ravel()
    gain = float(np.vdot(f, f).real)
    if gain == 0.0:
        raise DegenerateInputError("Cannot quantize a zero vector")

    correlation = np.abs(cb.codewords.conj() @ f) ** 2 / gain
    index = int(np.argmax(correlation))
    d_sq = float(np.clip(1.0 - correlation[index], 0.0, 1.0))
    return QuantizedFeedback(index=index, gain=gain, d_sq=d_sq, eta=eta)


def reconstruct_precoder(
    quantized: Sequence[QuantizedFeedback],
    cb: Codebook,
    P: OrthonormalBasis,
    reconstruction_exponent: int = 1,
    cell: int = 0,
) -> CellPrecoder:
    """ZF precoder built from quantized directions and fed-back gains.

    Each direction is rebuilt as f_hat = gain**(exponent/2) * c_index, so
    exponent 1 scales by ||f|| and exponent 2 by ||f||^2.

    Raises:
        DegenerateDropError: If the reconstructed channel is singular
    """
    if reconstruction_exponent not in (1, 2):
        raise FeedbackError(f"reconstruction_exponent must be 1 or 2, got {reconstruction_exponent}")

    f_hat = np.stack(
        [q.gain ** (reconstruction_exponent / 2.0) * cb.codewords[q.index] for q in quantized]
    )
    return zf_precoder(f_hat.conj(), P, cell=cell)


def random_codebook_cdf(z: np.ndarray, S: int, N_f: int) -> np.ndarray:
    """CDF of the quantization error d^2 under a random codebook."""
    return 1.0 - (1.0 - np.asarray(z, dtype=float) ** (S - 1)) ** N_f


def quantization_error_samples(S: int, n_f: int, n_samples: int, seed: int = 0) -> np.ndarray:
    """d^2 for isotropic directions, each against a freshly drawn random codebook."""
    rng = np.random.default_rng(seed)
    N_f = 2**n_f
    samples = np.empty(n_samples)
    chunk = max(1, Config.QUANTIZATION_CHUNK * 16 // N_f)
    for start in range(0, n_samples, chunk):
        count = min(chunk, n_samples - start)
        words = _unit_rows(complex_gaussian(rng, (count, N_f, S)))
        directions = _unit_rows(complex_gaussian(rng, (count, S)))
        correlation = np.abs(np.einsum("cns,cs->cn", words.conj(), directions)) ** 2
        samples[start : start + count] = 1.0 - correlation.max(axis=1)
    return np.clip(samples, 0.0, 1.0)


def check_codebook(cb: Codebook) -> Dict[str, float]:
    """Min distance of a codebook against the enforced and printed bounds."""
    bound = chordal_distance_bound(cb.S, cb.N_f)
    return {
        "min_chordal_sq": cb.min_chordal_sq,
        "bound": bound,
        "literal_bound": literal_chordal_bound(cb.S, cb.N_f),
        "compliant": float(cb.min_chordal_sq <= bound + 1e-12),
    }


def save_codebook(cb: Codebook, path: str) -> Path:
    """Write a codebook: header ``S n_f kind min_chordal_sq`` then one codeword per line."""
    lines = [f"{cb.S} {cb.n_f} {cb.kind} {cb.min_chordal_sq!r}"]
    for word in cb.codewords:
        interleaved = np.column_stack([word.real, word.imag]).ravel()
        lines.append(" ".join(repr(float(x)) for x in interleaved))
    out_path = Path(path)
    try:
        out_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as e:
        raise FeedbackError(f"Failed to save codebook {out_path}: {e}") from e
    logger.info(f"✓ Codebook saved to: {out_path}")
    return out_path


def load_codebook(path: str) -> Codebook:
    """Read a codebook written by :func:`save_codebook`.

    Raises:
        FeedbackError: If the file is missing or malformed
    """
    in_path = Path(path)
    if not in_path.is_file():
        raise FeedbackError(f"Codebook file not found: {in_path}")

    lines = [line for line in in_path.read_text(encoding="utf-8").splitlines() if line.strip()]
    try:
        S_str, n_f_str, kind, _ = lines[0].split()
        S, n_f = int(S_str), int(n_f_str)
        values = np.array([[float(x) for x in line.split()] for line in lines[1:]])
        if values.shape != (2**n_f, 2 * S):
            raise ValueError(f"expected {2**n_f} rows of {2 * S} reals, got {values.shape}")
        words = values[:, 0::2] + 1j * values[:, 1::2]
        return Codebook(S=S, n_f=n_f, codewords=words, kind=kind)
    except (ValueError, IndexError) as e:
        raise FeedbackError(f"Malformed codebook file {in_path}: {e}") from e
