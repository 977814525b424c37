"""Linear degradation operators: blur, blur-then-decimate, and their adjoints.

The forward model is y = H x + e with H a periodic (circulant) convolution,
optionally followed by decimation that keeps every s-th pixel per axis
starting at index 0. The periodic boundary makes pure-blur H exactly
diagonal in the Fourier domain, which the closed-form normal-equation
solver exploits.
"""

from dataclasses import dataclass

import numpy as np

# Noise synthesis uses numpy's PCG64 generator; the named generator keeps
# degraded inputs reproducible across releases for a fixed seed.
NOISE_GENERATOR = "PCG64"


@dataclass(frozen=True)
class Psf:
    """Normalized point-spread function with odd side lengths."""

    kernel: np.ndarray

    def __post_init__(self):
        k = np.ascontiguousarray(self.kernel, dtype=np.float64)
        if k.ndim != 2 or k.shape[0] % 2 == 0 or k.shape[1] % 2 == 0:
            raise ValueError(f"PSF must be 2D with odd side lengths, got {k.shape}")
        if np.any(k < 0):
            raise ValueError("PSF entries must be nonnegative")
        if abs(k.sum() - 1.0) > 1e-12:
            raise ValueError(f"PSF entries must sum to 1, got {k.sum()!r}")
        object.__setattr__(self, "kernel", k)


def uniform_psf(side: int) -> Psf:
    """Uniform (box) blur kernel of odd size side x side."""
    if side < 1 or side % 2 == 0:
        raise ValueError(f"side must be odd and >= 1, got {side}")
    return Psf(np.full((side, side), 1.0 / side**2))


def gaussian_psf(side: int, std: float) -> Psf:
    """Isotropic Gaussian sampled on integer offsets, renormalized to sum 1."""
    if side < 1 or side % 2 == 0:
        raise ValueError(f"side must be odd and >= 1, got {side}")
    if std <= 0:
        raise ValueError(f"std must be positive, got {std}")
    ax = np.arange(side, dtype=np.float64) - side // 2
    xx, yy = np.meshgrid(ax, ax)
    k = np.exp(-(xx**2 + yy**2) / (2.0 * std**2))
    return Psf(k / k.sum())


def identity_psf() -> Psf:
    return Psf(np.ones((1, 1)))


@dataclass(frozen=True)
class DegradationModel:
    """Blur (+ optional decimation) with measurement noise level sigma.

    Boundary handling is periodic everywhere; scale_factor 1 means pure
    deblurring, larger integers mean blur-then-decimate super-resolution.
    """

    psf: Psf
    scale_factor: int = 1
    noise_sigma: float = 0.0

    def __post_init__(self):
        if int(self.scale_factor) != self.scale_factor or self.scale_factor < 1:
            raise ValueError(f"scale_factor must be a positive integer, got {self.scale_factor}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be nonnegative, got {self.noise_sigma}")


def psf_transfer(psf: Psf, shape: tuple) -> np.ndarray:
    """rfft2 of the PSF embedded in a shape-sized grid, center at the origin."""
    kh, kw = psf.kernel.shape
    if kh > shape[0] or kw > shape[1]:
        raise ValueError(f"PSF {psf.kernel.shape} larger than image {shape}")
    embedded = np.zeros(shape)
    embedded[:kh, :kw] = psf.kernel
    embedded = np.roll(embedded, (-(kh // 2), -(kw // 2)), axis=(0, 1))
    return np.fft.rfft2(embedded)


def _convolve(x: np.ndarray, transfer: np.ndarray) -> np.ndarray:
    return np.fft.irfft2(np.fft.rfft2(x) * transfer, s=x.shape)


def apply(model: DegradationModel, x: np.ndarray) -> np.ndarray:
    """Forward operator H: periodic convolution, then decimation."""
    x = np.asarray(x, dtype=np.float64)
    s = model.scale_factor
    if x.shape[0] % s or x.shape[1] % s:
        raise ValueError(f"image shape {x.shape} not divisible by scale factor {s}")
    blurred = _convolve(x, psf_transfer(model.psf, x.shape))
    return blurred[::s, ::s].copy() if s > 1 else blurred


def adjoint(model: DegradationModel, r: np.ndarray) -> np.ndarray:
    """Adjoint H^T: zero-fill upsample, then correlate with the PSF."""
    r = np.asarray(r, dtype=np.float64)
    s = model.scale_factor
    if s > 1:
        up = np.zeros((r.shape[0] * s, r.shape[1] * s))
        up[::s, ::s] = r
    else:
        up = r
    # Correlation = convolution with the flipped kernel = conjugate transfer.
    return np.fft.irfft2(np.fft.rfft2(up) * np.conj(psf_transfer(model.psf, up.shape)), s=up.shape)


def restored_shape(model: DegradationModel, observed_shape: tuple) -> tuple:
    s = model.scale_factor
    return (observed_shape[0] * s, observed_shape[1] * s)


def add_gaussian_noise(x: np.ndarray, sigma: float, seed: int) -> np.ndarray:
    """Add i.i.d. N(0, sigma^2) noise from a seeded PCG64 generator."""
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    x = np.asarray(x, dtype=np.float64)
    if sigma == 0:
        return x.copy()
    rng = np.random.Generator(np.random.PCG64(seed))
    return x + rng.normal(0.0, sigma, size=x.shape)


def solve_normal_fft(
    model: DegradationModel, rhs: np.ndarray, lam: float, sigma: float
) -> np.ndarray:
    """Exact solve of (H^T H / sigma^2 + lam I) z = rhs for circulant H.

    Only valid for pure blur (scale_factor 1), where H^T H is diagonalized
    by the Fourier basis with eigenvalues |PSF transfer|^2.
    """
    if model.scale_factor != 1:
        raise ValueError("closed-form FFT solve requires scale_factor 1 (pure blur)")
    if lam <= 0 or sigma <= 0:
        raise ValueError("lam and sigma must be positive")
    rhs = np.asarray(rhs, dtype=np.float64)
    transfer = psf_transfer(model.psf, rhs.shape)
    denom = np.abs(transfer) ** 2 / sigma**2 + lam
    return np.fft.irfft2(np.fft.rfft2(rhs) / denom, s=rhs.shape)
