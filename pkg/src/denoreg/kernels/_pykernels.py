"""Pure-numpy implementations of the hot per-pixel kernels.

These mirror the compiled versions in _cykernels.pyx: same padding rules,
same window clipping, same weight formula. The vectorized NLM differs
from the compiled one only in floating-point summation order.
"""

import numpy as np


def median_filter(x: np.ndarray, window: int) -> np.ndarray:
    """Per-pixel median over a window x window neighborhood, replicate-padded."""
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 1, got {window}")
    x = np.ascontiguousarray(x, dtype=np.float64)
    r = window // 2
    padded = np.pad(x, r, mode="edge")
    h, w = x.shape
    stack = np.empty((window * window, h, w))
    idx = 0
    for dy in range(window):
        for dx in range(window):
            stack[idx] = padded[dy : dy + h, dx : dx + w]
            idx += 1
    return np.median(stack, axis=0)


def _box_sum(a: np.ndarray, radius: int) -> np.ndarray:
    """Sum over (2*radius+1)^2 windows; output trims radius rows/cols per side."""
    c = np.cumsum(np.cumsum(a, axis=0), axis=1)
    c = np.pad(c, ((1, 0), (1, 0)))
    size = 2 * radius + 1
    return (
        c[size:, size:]
        - c[:-size, size:]
        - c[size:, :-size]
        + c[:-size, :-size]
    )


def nlm_filter(x: np.ndarray, h: float, patch_radius: int, search_radius: int) -> np.ndarray:
    """Non-local means: weighted average of search-window center pixels.

    Weights are exp(-||patch_i - patch_j||^2 / (2 h^2)) over the raw patch
    SSD, row-normalized so each output pixel is a convex combination.
    Patches use replicate padding; the search window is clipped at the
    image border.
    """
    if patch_radius < 1 or search_radius < 1:
        raise ValueError("patch_radius and search_radius must be >= 1")
    if h <= 0:
        raise ValueError(f"bandwidth h must be positive, got {h}")
    x = np.ascontiguousarray(x, dtype=np.float64)
    rows, cols = x.shape
    pr, sr = patch_radius, search_radius
    pad = pr + sr
    padded = np.pad(x, pad, mode="edge")
    inv = 1.0 / (2.0 * h * h)

    num = np.zeros_like(x)
    den = np.zeros_like(x)
    base = padded[pad - pr : pad + pr + rows, pad - pr : pad + pr + cols]
    for dy in range(-sr, sr + 1):
        for dx in range(-sr, sr + 1):
            shifted = padded[pad + dy - pr : pad + dy + pr + rows, pad + dx - pr : pad + dx + pr + cols]
            ssd = _box_sum((base - shifted) ** 2, pr)
            w = np.exp(-ssd * inv)
            # Zero out weights whose center pixel j = i + (dy, dx) falls
            # outside the image: the search window is clipped, not padded.
            y0, y1 = max(0, -dy), rows - max(0, dy)
            x0, x1 = max(0, -dx), cols - max(0, dx)
            mask = np.zeros_like(w)
            mask[y0:y1, x0:x1] = 1.0
            w *= mask
            centers = padded[pad + dy : pad + dy + rows, pad + dx : pad + dx + cols]
            num += w * centers
            den += w
    return num / den
