"""Plug-and-play ADMM baseline with an increasing penalty schedule.

The v-update is a single black-box denoiser call at the schedule-driven
level sigma_f(k) = sqrt(lam / beta_k) with beta_k = alpha^k * beta_0,
instead of an explicit regularizer minimization. There is no objective
function behind this scheme and no principled stopping rule, so the run
records the full trace plus the best-PSNR iterate (when ground truth is
available) and never stops early; the report exposes both the final and
the best iterate rather than silently picking one.
"""

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from denoreg import operators
from denoreg.denoisers import rescale_noise_level
from denoreg.image import psnr
from denoreg.solvers import SolverDivergenceError, resolve_init, solve_data_quadratic


@dataclass(frozen=True)
class P3Params:
    """Penalty schedule and solver knobs for the plug-and-play baseline.

    beta_k = alpha^k * beta_0 for outer iteration k = 0..N-1, so the
    first iteration uses beta_0 exactly; the denoiser level follows
    sigma_f(k) = sqrt(lam / beta_k). lam here is an independent knob,
    not tied to the residual-regularizer weight.
    """

    lam: float
    sigma: float
    beta0: float
    alpha: float = 1.02
    outer_iters: int = 200
    inner_iters: int = 200
    init: Union[str, np.ndarray] = "auto"

    def __post_init__(self):
        if self.lam <= 0 or self.sigma <= 0 or self.beta0 <= 0:
            raise ValueError("lam, sigma and beta0 must be positive")
        if self.alpha < 1.0:
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")
        if self.outer_iters < 1 or self.inner_iters < 1:
            raise ValueError("iteration counts must be >= 1")

    def beta_schedule(self) -> np.ndarray:
        return self.beta0 * self.alpha ** np.arange(self.outer_iters)

    def sigma_f_schedule(self) -> np.ndarray:
        return np.sqrt(self.lam / self.beta_schedule())


@dataclass
class P3RunReport:
    """Full trace of a plug-and-play run.

    energy_trace records the data-fidelity term only (the scheme has no
    explicit objective) and gap_trace the split residual ||x - v||; both
    have iterations_run + 1 entries. beta_trace / sigma_f_trace carry the
    schedule actually used, one entry per iteration.
    """

    final: np.ndarray
    best: Optional[np.ndarray]
    best_iteration: Optional[int]
    best_psnr: Optional[float]
    energy_trace: np.ndarray
    gap_trace: np.ndarray
    psnr_trace: Optional[np.ndarray]
    beta_trace: np.ndarray
    sigma_f_trace: np.ndarray
    iterations_run: int


def solve_p3(y, model, params: P3Params, engine, ground_truth=None) -> P3RunReport:
    """Run the plug-and-play ADMM baseline for the full iteration budget."""
    y = np.asarray(y, dtype=np.float64)
    x = resolve_init(y, model, params.init)
    v = x.copy()
    u = np.zeros_like(x)
    betas = params.beta_schedule()
    sigma_fs = params.sigma_f_schedule()

    fidelity, gaps = [], []
    psnrs = [] if ground_truth is not None else None
    best = best_iteration = best_psnr = None

    def record(k):
        nonlocal best, best_iteration, best_psnr
        residual = operators.apply(model, x) - y
        value = float(np.vdot(residual, residual)) / (2.0 * params.sigma**2)
        gap = float(np.linalg.norm(x - v))
        if not (np.isfinite(value) and np.isfinite(gap) and np.all(np.isfinite(x))):
            raise SolverDivergenceError(f"non-finite iterate at iteration {k}")
        fidelity.append(value)
        gaps.append(gap)
        if psnrs is not None:
            quality = psnr(ground_truth, x).psnr_db
            psnrs.append(quality)
            if best_psnr is None or quality > best_psnr:
                best, best_iteration, best_psnr = x.copy(), k, quality

    for k in range(params.outer_iters):
        record(k)
        x = solve_data_quadratic(
            y, model, params.sigma, betas[k], anchor=v - u, z0=x, steps=params.inner_iters
        )
        v = rescale_noise_level(engine, float(sigma_fs[k]), x + u)
        u = u + x - v
    record(params.outer_iters)

    return P3RunReport(
        final=x,
        best=best,
        best_iteration=best_iteration,
        best_psnr=best_psnr,
        energy_trace=np.asarray(fidelity),
        gap_trace=np.asarray(gaps),
        psnr_trace=None if psnrs is None else np.asarray(psnrs),
        beta_trace=betas,
        sigma_f_trace=sigma_fs,
        iterations_run=params.outer_iters,
    )
