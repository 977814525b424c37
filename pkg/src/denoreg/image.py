"""Grayscale image I/O and quality metrics.

Images are plain 2D float64 arrays on the 0..255 intensity scale (the
scale every default parameter in this package assumes). Solver iterates
may leave [0, 255]; file export clamps.
"""

import os
from dataclasses import dataclass

import numpy as np
from PIL import Image as PilImage

# BT.601 luminance weights used to collapse RGB inputs to a single channel.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

# PSNR reported for a zero-MSE pair; keeps CSV traces free of infinities.
PSNR_CAP_DB = 99.0


class ImageFormatError(ValueError):
    """Raised for unsupported image formats or bit depths."""


def as_image(data) -> np.ndarray:
    """Validate and return an image as a C-contiguous 2D float64 array.

    Raises ValueError if the array is not 2D or contains NaN/Inf.
    """
    arr = np.ascontiguousarray(data, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"expected a non-empty 2D image, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains NaN or Inf values")
    return arr


def bt601_luminance(rgb: np.ndarray) -> np.ndarray:
    """Collapse an (H, W, 3) RGB array to luminance with BT.601 weights."""
    r, g, b = (rgb[..., i].astype(np.float64) for i in range(3))
    return LUMA_WEIGHTS[0] * r + LUMA_WEIGHTS[1] * g + LUMA_WEIGHTS[2] * b


def load_image(path) -> np.ndarray:
    """Load an 8-bit grayscale PGM/PNG (or RGB PNG) as a float64 image.

    RGB inputs are reduced to luminance via BT.601 weights. Values are
    returned on the 0..255 scale without rounding.
    """
    try:
        with PilImage.open(path) as im:
            im.load()
            mode = im.mode
            if mode == "L":
                return np.asarray(im, dtype=np.float64)
            if mode == "RGB":
                return bt601_luminance(np.asarray(im, dtype=np.float64))
            raise ImageFormatError(
                f"unsupported image mode {mode!r} in {path}; "
                "expected 8-bit grayscale or RGB"
            )
    except ImageFormatError:
        raise
    except (OSError, PilImage.UnidentifiedImageError) as exc:
        raise OSError(f"cannot read image file {path}: {exc}") from exc


def quantize(img: np.ndarray) -> np.ndarray:
    """Clamp to [0, 255] and round half away from zero to uint8."""
    clamped = np.clip(np.asarray(img, dtype=np.float64), 0.0, 255.0)
    # All values are nonnegative after clamping, so half away from zero
    # reduces to floor(x + 0.5).
    return np.floor(clamped + 0.5).astype(np.uint8)


def save_image(img: np.ndarray, path) -> None:
    """Write an image as 8-bit grayscale PGM (P5) or PNG, by extension."""
    arr = quantize(as_image(img))
    ext = os.path.splitext(str(path))[1].lower()
    if ext not in (".pgm", ".png"):
        raise ImageFormatError(f"unsupported output extension {ext!r}; use .pgm or .png")
    try:
        PilImage.fromarray(arr, mode="L").save(path)
    except OSError as exc:
        raise OSError(f"cannot write image file {path}: {exc}") from exc


@dataclass(frozen=True)
class QualityReport:
    """PSNR (dB, on the 0..255 scale) and the underlying MSE."""

    psnr_db: float
    mse: float


def psnr(reference: np.ndarray, candidate: np.ndarray) -> QualityReport:
    """Peak signal-to-noise ratio between two equally sized images."""
    ref = as_image(reference)
    cand = as_image(candidate)
    if ref.shape != cand.shape:
        raise ValueError(f"dimension mismatch: {ref.shape} vs {cand.shape}")
    mse = float(np.mean((ref - cand) ** 2))
    if mse == 0.0:
        return QualityReport(psnr_db=PSNR_CAP_DB, mse=0.0)
    return QualityReport(psnr_db=10.0 * np.log10(255.0**2 / mse), mse=mse)
