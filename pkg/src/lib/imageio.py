"""
Dataset and output file IO: grayscale images (binary PGM) and CSV arrays.
"""

import csv
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from src.lib.errors import DatasetIOError


def read_image_gray(path: Path) -> np.ndarray:
    """
    Read any image Pillow understands as float grayscale.
    Color images are converted with Pillow's ITU-R 601 luma weights.
    """
    path = Path(path)
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("L"), dtype=float)
    except (OSError, UnidentifiedImageError) as exc:
        raise DatasetIOError(f"cannot read image {path}: {exc}") from exc


def write_pgm(path: Path, img: np.ndarray) -> Path:
    """Write a binary (P5) PGM, rounding and clamping to [0, 255]."""
    path = Path(path)
    pixels = np.clip(np.rint(np.asarray(img, dtype=float)), 0, 255).astype(np.uint8)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(pixels).save(path, format="PPM")
    except OSError as exc:
        raise DatasetIOError(f"cannot write image {path}: {exc}") from exc
    return path


def read_csv_matrix(path: Path) -> np.ndarray:
    """Numeric CSV (comma separated, optional header row) as a 2-D float array."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            rows = [row for row in csv.reader(f) if row and any(cell.strip() for cell in row)]
    except OSError as exc:
        raise DatasetIOError(f"cannot read {path}: {exc}") from exc
    if rows and not _is_numeric(rows[0]):
        rows = rows[1:]
    try:
        data = np.array([[float(cell) for cell in row] for row in rows], dtype=float)
    except ValueError as exc:
        raise DatasetIOError(f"{path} contains non-numeric cells: {exc}") from exc
    if data.ndim != 2 or data.size == 0:
        raise DatasetIOError(f"{path} is empty or ragged")
    return data


def _is_numeric(row) -> bool:
    try:
        [float(cell) for cell in row]
    except ValueError:
        return False
    return True


def write_csv_vector(path: Path, x: np.ndarray, header: str = "value") -> Path:
    """One value per row; complex vectors get separate real/imag columns."""
    path = Path(path)
    x = np.asarray(x).ravel()
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            if np.iscomplexobj(x):
                writer.writerow([f"{header}_real", f"{header}_imag"])
                writer.writerows([repr(float(z.real)), repr(float(z.imag))] for z in x)
            else:
                writer.writerow([header])
                writer.writerows([repr(float(z))] for z in x)
    except OSError as exc:
        raise DatasetIOError(f"cannot write {path}: {exc}") from exc
    return path
