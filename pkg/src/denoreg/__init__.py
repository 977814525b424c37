"""Denoiser-driven regularization for linear inverse problems.

Any black-box denoising engine that is locally scale-invariant and
non-expansive defines an explicit convex regularizer
(1/2) x^T (x - f(x)). This package provides three solvers built on that
regularizer (steepest descent, ADMM, fixed point), a plug-and-play ADMM
baseline, degradation operators for deblurring and super-resolution,
three reference engines, certification tools for engine admissibility,
and machinery for deriving engines from quadratic priors.
"""

from denoreg.analysis import (
    PassivityEstimate,
    PropertyReport,
    certify_engine,
    directional_derivative,
    directional_gap,
    homogeneity_deviation,
    passivity_power_method,
)
from denoreg.denoisers import (
    MedianDenoiser,
    NlmDenoiser,
    TikhonovDenoiser,
    median_filter,
    nlm,
    rescale_noise_level,
    tikhonov_wiener,
)
from denoreg.image import QualityReport, load_image, psnr, save_image
from denoreg.objective import red_energy, red_gradient, rho_l, rho_q
from denoreg.operators import (
    DegradationModel,
    Psf,
    add_gaussian_noise,
    adjoint,
    apply,
    gaussian_psf,
    identity_psf,
    solve_normal_fft,
    uniform_psf,
)
from denoreg.pnp import P3Params, P3RunReport, solve_p3
from denoreg.priors import (
    DenseFilterMatrix,
    QuadraticPrior,
    difference_prior_1d,
    difference_prior_2d,
    induced_denoiser,
    kernelize,
    row_stochastic_check,
)
from denoreg.solvers import (
    RunReport,
    SolverDivergenceError,
    SolverParams,
    solve,
    solve_admm,
    solve_fp,
    solve_sd,
)

__version__ = "0.1.0"
