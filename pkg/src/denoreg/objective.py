"""The denoiser-residual objective and its gradient.

The restoration objective is

    E(x) = ||H x - y||^2 / (2 sigma^2) + (lam / 2) x^T (x - f(x)),

a quadratic data term plus a regularizer proportional to the correlation
between the image and its denoising residual x - f(x). For engines that
are locally scale-invariant with a non-expansive Jacobian, the gradient
of the regularizer collapses to lam * (x - f(x)), so one engine
activation per gradient is enough.
"""

from dataclasses import dataclass

import numpy as np

from denoreg import operators


def data_term(x: np.ndarray, y: np.ndarray, model, sigma: float) -> float:
    r = operators.apply(model, x) - y
    return float(np.vdot(r, r)) / (2.0 * sigma**2)


def data_gradient(x: np.ndarray, y: np.ndarray, model, sigma: float) -> np.ndarray:
    return operators.adjoint(model, operators.apply(model, x) - y) / sigma**2


def rho_l(x: np.ndarray, engine, denoised: np.ndarray | None = None) -> float:
    """Residual-correlation regularizer (1/2) x^T (x - f(x))."""
    x = np.asarray(x, dtype=np.float64)
    fx = engine(x) if denoised is None else denoised
    return 0.5 * float(np.vdot(x, x - fx))


@dataclass(frozen=True)
class ResidualPenalties:
    """Both residual penalties and the term relating them.

    quadratic = ||x - f(x)||^2, laplacian = (1/2) x^T (x - f(x)), and
    symmetrization = f(x)^T (f(x) - x), tied by the identity
    quadratic = 2 * laplacian + symmetrization.
    """

    quadratic: float
    laplacian: float
    symmetrization: float


def rho_q(x: np.ndarray, engine) -> ResidualPenalties:
    """Squared-residual penalty plus its decomposition terms."""
    x = np.asarray(x, dtype=np.float64)
    fx = engine(x)
    residual = x - fx
    return ResidualPenalties(
        quadratic=float(np.vdot(residual, residual)),
        laplacian=0.5 * float(np.vdot(x, residual)),
        symmetrization=float(np.vdot(fx, fx - x)),
    )


def red_energy(
    x: np.ndarray,
    y: np.ndarray,
    model,
    lam: float,
    sigma: float,
    engine,
    denoised: np.ndarray | None = None,
) -> float:
    """Objective value; one engine activation unless denoised is supplied."""
    x = np.asarray(x, dtype=np.float64)
    fx = engine(x) if denoised is None else denoised
    return data_term(x, y, model, sigma) + lam * 0.5 * float(np.vdot(x, x - fx))


def red_gradient(
    x: np.ndarray,
    y: np.ndarray,
    model,
    lam: float,
    sigma: float,
    engine,
    denoised: np.ndarray | None = None,
) -> np.ndarray:
    """Objective gradient H^T(Hx - y)/sigma^2 + lam (x - f(x))."""
    x = np.asarray(x, dtype=np.float64)
    fx = engine(x) if denoised is None else denoised
    return data_gradient(x, y, model, sigma) + lam * (x - fx)
