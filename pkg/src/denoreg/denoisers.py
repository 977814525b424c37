"""Pluggable denoising engines.

An engine is any callable mapping a 2D float64 image to one of the same
shape, carrying a ``sigma_f`` attribute (its operating noise level on the
0..255 scale) and a ``name``. The three engines here are deliberately
simple and deterministic; they fix constant images exactly and keep the
scaling behavior and non-expansiveness that the solver analysis relies on
(see denoreg.analysis for the empirical certification tools).
"""

from dataclasses import dataclass, field

import numpy as np

from denoreg import kernels


def median_filter(x: np.ndarray, window: int = 3) -> np.ndarray:
    """Per-pixel median over an odd window, replicate-padded edges."""
    return kernels.median_filter(x, window)


def nlm(
    x: np.ndarray,
    sigma_f: float,
    patch_radius: int = 1,
    search_radius: int = 5,
    bandwidth_scale: float = 1.0,
) -> np.ndarray:
    """Non-local means with Gaussian patch-distance weights.

    Each output pixel is the weight-normalized average of the center
    pixels in its (clipped) search window, with weights
    exp(-||patch_i - patch_j||^2 / (2 h^2)) and bandwidth
    h = bandwidth_scale * sigma_f.
    """
    return kernels.nlm_filter(x, bandwidth_scale * sigma_f, patch_radius, search_radius)


def tikhonov_wiener(x: np.ndarray, sigma_f: float, reg_weight: float) -> np.ndarray:
    """Exact solve of (I + reg_weight * sigma_f^2 * B^T B) z = x via FFT.

    B stacks the horizontal and vertical periodic first differences, so
    the filter is diagonal in Fourier with DC gain exactly 1 and all
    other gains in (0, 1).
    """
    if reg_weight <= 0 or sigma_f <= 0:
        raise ValueError("reg_weight and sigma_f must be positive")
    x = np.asarray(x, dtype=np.float64)
    symbol = difference_symbol(x.shape)
    return np.fft.irfft2(np.fft.rfft2(x) / (1.0 + reg_weight * sigma_f**2 * symbol), s=x.shape)


def difference_symbol(shape: tuple) -> np.ndarray:
    """Fourier symbol of B^T B for periodic first differences (rfft2 layout)."""
    fy = np.fft.fftfreq(shape[0])[:, None]
    fx = np.fft.rfftfreq(shape[1])[None, :]
    return 4.0 * np.sin(np.pi * fy) ** 2 + 4.0 * np.sin(np.pi * fx) ** 2


@dataclass(frozen=True)
class MedianDenoiser:
    """Order-statistic engine; exactly 1-homogeneous, ignores sigma_f."""

    window: int = 3
    sigma_f: float = 3.0
    name: str = field(default="median", init=False)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return median_filter(x, self.window)


@dataclass(frozen=True)
class NlmDenoiser:
    """Patch-similarity averaging engine.

    The defaults put the bandwidth h = bandwidth_scale * sigma_f in the
    gentle regime (h = 400 on the 0..255 scale) where the engine's
    Jacobian is verifiably non-expansive on natural images. Sharper
    bandwidths (h around sigma_f) denoise more aggressively per call but
    have Jacobian spectral-radius estimates up to about 2, outside the
    certified regime; see denoreg.analysis.
    """

    sigma_f: float = 5.0
    patch_radius: int = 1
    search_radius: int = 5
    bandwidth_scale: float = 80.0
    name: str = field(default="nlm", init=False)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return nlm(x, self.sigma_f, self.patch_radius, self.search_radius, self.bandwidth_scale)


@dataclass(frozen=True)
class TikhonovDenoiser:
    """Linear smoothing engine; the one engine with a known exact spectrum."""

    reg_weight: float = 0.01
    sigma_f: float = 3.0
    name: str = field(default="tikhonov", init=False)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return tikhonov_wiener(x, self.sigma_f, self.reg_weight)

    def fourier_gains(self, shape: tuple) -> np.ndarray:
        return 1.0 / (1.0 + self.reg_weight * self.sigma_f**2 * difference_symbol(shape))


def rescale_noise_level(engine, target_sigma: float, x: np.ndarray) -> np.ndarray:
    """Run an engine with native level sigma_f at a different target level.

    Uses the scaling relation f_target(x) = (1/c) f_native(c x) with
    c = sigma_native / target, which is exact for 1-homogeneous engines.
    """
    if target_sigma <= 0:
        raise ValueError(f"target_sigma must be positive, got {target_sigma}")
    c = engine.sigma_f / target_sigma
    if c == 1.0:
        return engine(x)
    return engine(c * np.asarray(x, dtype=np.float64)) / c
