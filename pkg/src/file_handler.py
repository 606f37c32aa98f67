"""File handling for sweep CSVs and plot-ready curve files."""

import csv
import io
import logging
from collections import OrderedDict
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from src.config import Config
from src.models import SweepPoint, SweepResult

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    "scheme", "K", "M", "L", "S", "N", "snr_db", "n_f", "eta_i", "eta_d", "alpha", "drops",
    "sum_rate_mean", "sum_rate_sem", "sum_interference_mean", "residual_intra_mean",
    "outage_rate", "resampled", "label",
)
CURVE_AXES = ("snr_db", "N", "n_f", "eta_i", "eta_d")


class FileHandlerError(Exception):
    """Exception raised when file operations fail."""

    pass


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def sweep_row(point: SweepPoint) -> List[str]:
    """One CSV row in :data:`CSV_COLUMNS` order."""
    cfg, params = point.config, point.se_params
    values = (
        point.scheme, cfg.K, cfg.M, cfg.L, cfg.S, cfg.N, float(cfg.snr_db), point.n_f,
        params.eta_i if params else None,
        params.eta_d if params else None,
        params.alpha if params else None,
        point.drops, point.sum_rate_mean, point.sum_rate_sem, point.sum_interference_mean,
        point.residual_intra_mean, point.outage_rate, point.resampled, point.label,
    )
    return [_format(v) for v in values]


def render_sweep_csv(result: SweepResult) -> str:
    """CSV text: ``# key=value`` provenance lines, header, one row per point."""
    buffer = io.StringIO()
    for key in sorted(result.provenance):
        buffer.write(f"# {key}={result.provenance[key]}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for point in result.points:
        writer.writerow(sweep_row(point))
    return buffer.getvalue()


def save_sweep_csv(result: SweepResult, path: Optional[str] = None) -> str:
    """Write a sweep CSV.

    Args:
        result: Sweep to write
        path: Target file; defaults to a generated name in the output directory

    Returns:
        Full path to the saved file

    Raises:
        FileHandlerError: If the file cannot be written
    """
    if path is None:
        filepath = handle_collision(get_output_dir() / generate_filename(result.provenance))
    else:
        filepath = Path(path)

    try:
        filepath.parent.mkdir(parents=True, exist_ok=True)
        filepath.write_text(render_sweep_csv(result), encoding="utf-8")
    except OSError as e:
        raise FileHandlerError(f"Failed to save sweep CSV {filepath}: {e}") from e

    logger.info(f"✓ Sweep saved to: {filepath}")
    return str(filepath)


def read_sweep_csv(path: str) -> Tuple[Dict[str, str], List[Dict[str, str]]]:
    """Read a CSV written by :func:`save_sweep_csv`.

    Returns:
        (provenance, rows) with every row keyed by column name

    Raises:
        FileHandlerError: If the file is missing or has the wrong header
    """
    filepath = Path(path)
    if not filepath.is_file():
        raise FileHandlerError(f"Sweep CSV not found: {filepath}")

    provenance, body = {}, []
    for line in filepath.read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            provenance[key.strip()] = value.strip()
        elif line.strip():
            body.append(line)

    if not body or tuple(next(csv.reader(body[:1]))) != CSV_COLUMNS:
        raise FileHandlerError(f"Unexpected CSV header in {filepath}")
    return provenance, list(csv.DictReader(body))


def _curve_key(row: Dict[str, str]) -> Tuple[str, ...]:
    return (row["label"] or row["scheme"], row["K"], row["M"], row["L"], row["S"])


def write_curve_files(
    csv_path: str, out_dir: str, y_column: str = "sum_rate_mean"
) -> List[Path]:
    """Split a sweep CSV into two-column ``x y`` text files, one per curve.

    A curve is the rows sharing label (or scheme) and (K, M, L, S); its x
    column is the first of :data:`CURVE_AXES` that varies along it.

    Raises:
        FileHandlerError: On an unknown y column, an unreadable CSV or a failed write
    """
    if y_column not in CSV_COLUMNS:
        raise FileHandlerError(f"Unknown column {y_column!r}")

    _, rows = read_sweep_csv(csv_path)
    curves: "OrderedDict[Tuple[str, ...], List[Dict[str, str]]]" = OrderedDict()
    for row in rows:
        curves.setdefault(_curve_key(row), []).append(row)

    target = Path(out_dir)
    written = []
    for (name, K, M, L, S), members in curves.items():
        x_column = next(
            (axis for axis in CURVE_AXES if len({r[axis] for r in members}) > 1), "N"
        )
        filepath = target / f"{_slug(name)}_K{K}_M{M}_L{L}_S{S}_{x_column}.dat"
        lines = [f"# {x_column} {y_column}"]
        lines += [f"{r[x_column]} {r[y_column]}" for r in members]
        try:
            target.mkdir(parents=True, exist_ok=True)
            filepath.write_text("\n".join(lines) + "\n", encoding="utf-8")
        except OSError as e:
            raise FileHandlerError(f"Failed to write curve file {filepath}: {e}") from e
        written.append(filepath)

    logger.info(f"✓ Wrote {len(written)} curve files to: {target}")
    return written


def get_output_dir() -> Path:
    """Directory for outputs written without an explicit path.

    Raises:
        FileHandlerError: If the directory is missing or not a directory
    """
    output_dir = Path(Config.get_output_dir())

    if not output_dir.exists():
        raise FileHandlerError(f"Output directory does not exist: {output_dir}")

    if not output_dir.is_dir():
        raise FileHandlerError(f"Output path is not a directory: {output_dir}")

    return output_dir


def _slug(text: str) -> str:
    clean = "".join(c if c.isalnum() or c == "." else "_" for c in text.lower())
    while "__" in clean:
        clean = clean.replace("__", "_")
    return clean.strip("_")[:40]


def generate_filename(provenance: Dict[str, str]) -> str:
    """Descriptive default CSV name, e.g. ``odia_sweep_20260104_1430_ab12cd34.csv``."""
    timestamp = datetime.now().strftime("%Y%m%d_%H%M")
    config_hash = _slug(provenance.get("config_hash", "run"))[:8] or "run"
    return f"odia_sweep_{timestamp}_{config_hash}.csv"


def handle_collision(filepath: Path) -> Path:
    """Append ``_2``, ``_3``, ... to the stem until the path is free.

    Raises:
        FileHandlerError: After 1000 collisions
    """
    if not filepath.exists():
        return filepath

    counter = 2
    while counter <= 1000:
        candidate = filepath.parent / f"{filepath.stem}_{counter}{filepath.suffix}"
        if not candidate.exists():
            logger.info(f"Filename collision detected. Using: {candidate.name}")
            return candidate
        counter += 1

    raise FileHandlerError("Too many filename collisions")
