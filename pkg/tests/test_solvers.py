import numpy as np
import pytest

from denoreg.denoisers import MedianDenoiser, TikhonovDenoiser
from denoreg.objective import red_energy
from denoreg.operators import (
    DegradationModel,
    add_gaussian_noise,
    apply,
    gaussian_psf,
    identity_psf,
    psf_transfer,
    uniform_psf,
)
from denoreg.solvers import (
    RunReport,
    SolverDivergenceError,
    SolverParams,
    bicubic_upscale,
    resolve_init,
    solve,
    solve_admm,
    solve_fp,
    solve_sd,
)

from conftest import IdentityEngine, ScaledEngine, ZeroEngine, materialize, rng


@pytest.fixture(scope="module")
def deblur_instance(crop64):
    model = DegradationModel(uniform_psf(9), noise_sigma=np.sqrt(2))
    y = add_gaussian_noise(apply(model, crop64), np.sqrt(2), seed=11)
    return model, y, crop64


def ridge_target(y, lam, sigma):
    return y / (1 + lam * sigma**2)


# --- analytic-minimizer oracles ---------------------------------------------


def test_sd_identity_engine_converges_to_observation(crop16):
    model = DegradationModel(identity_psf())
    start = crop16 + rng(0).normal(0, 20, crop16.shape)
    params = SolverParams(lam=0.1, sigma=1.5, outer_iters=300, init=start)
    report = solve_sd(crop16, model, params, IdentityEngine())
    assert np.linalg.norm(report.final - crop16) / np.linalg.norm(crop16) < 1e-6
    assert report.grad_norm_trace[-1] < 1e-6 * report.grad_norm_trace[0]


def test_sd_zero_engine_ridge_minimizer(crop16):
    # the default step 2/(1/sigma^2 + lam) equals 2/L exactly on this
    # degenerate instance (Hessian = L*I), so the iteration reflects
    # around the minimizer forever; damping lands inside (0, 2/L)
    model = DegradationModel(identity_psf())
    lam, sigma = 0.1, 1.5
    params = SolverParams(lam=lam, sigma=sigma, outer_iters=250, step_scale=0.9)
    report = solve_sd(crop16, model, params, ZeroEngine())
    target = ridge_target(crop16, lam, sigma)
    assert np.linalg.norm(report.final - target) / np.linalg.norm(target) < 1e-6


def test_sd_default_step_oscillates_on_degenerate_instance(crop16):
    # documents the boundary case: with step_scale=1 the iterate returns
    # to the start every two iterations
    model = DegradationModel(identity_psf())
    params = SolverParams(lam=0.1, sigma=1.5, outer_iters=2)
    report = solve_sd(crop16, model, params, ZeroEngine())
    assert np.allclose(report.final, crop16, atol=1e-9)


def test_admm_zero_engine_ridge_minimizer(crop16):
    model = DegradationModel(identity_psf())
    lam, sigma = 0.1, 1.5
    params = SolverParams(lam=lam, sigma=sigma, outer_iters=300, beta=0.05)
    report = solve_admm(crop16, model, params, ZeroEngine())
    target = ridge_target(crop16, lam, sigma)
    assert np.linalg.norm(report.final - target) / np.linalg.norm(target) < 1e-4


def test_fp_zero_engine_exact_first_step(crop16):
    model = DegradationModel(identity_psf())
    lam, sigma = 0.1, 1.5
    params = SolverParams(lam=lam, sigma=sigma, outer_iters=1)
    report = solve_fp(crop16, model, params, ZeroEngine())
    assert np.allclose(report.final, ridge_target(crop16, lam, sigma), rtol=1e-12, atol=1e-12)


# --- linear-engine dense oracle ----------------------------------------------


def test_fp_matches_dense_solve_linear_engine(camera):
    x8 = camera[120:128, 120:128]
    model = DegradationModel(uniform_psf(3), noise_sigma=np.sqrt(2))
    y = add_gaussian_noise(apply(model, x8), np.sqrt(2), seed=5)
    engine = TikhonovDenoiser(reg_weight=0.5, sigma_f=3.0)
    lam, sigma = 0.2, np.sqrt(2)

    w = materialize(engine, (8, 8))
    h = materialize(lambda v: apply(model, v), (8, 8))
    a = h.T @ h / sigma**2 + lam * (np.eye(64) - w)
    b = h.T @ y.reshape(-1) / sigma**2
    dense = np.linalg.solve(a, b).reshape(8, 8)

    params = SolverParams(lam=lam, sigma=sigma, outer_iters=200)
    report = solve_fp(y, model, params, engine)
    assert np.linalg.norm(report.final - dense) / np.linalg.norm(dense) < 1e-6


def test_fp_contraction_witness_fourier():
    # iteration matrix (H^T H / sigma^2 + lam I)^{-1} lam W has spectral
    # norm below one for the linear engine, computed from symbols
    model = DegradationModel(uniform_psf(3))
    engine = TikhonovDenoiser(reg_weight=0.5, sigma_f=3.0)
    lam, sigma = 0.2, np.sqrt(2)
    data = np.abs(psf_transfer(model.psf, (8, 8))) ** 2 / sigma**2
    gains = engine.fourier_gains((8, 8))
    assert np.max(lam * gains / (data + lam)) < 1.0


# --- cross-solver agreement ----------------------------------------------


def test_solvers_agree_on_deblur(deblur_instance):
    model, y, truth = deblur_instance
    engine = TikhonovDenoiser(reg_weight=0.5, sigma_f=3.0)
    lam, sigma = 0.02, np.sqrt(2)
    reports = {
        "sd": solve_sd(y, model, SolverParams(lam=lam, sigma=sigma, outer_iters=1500), engine, truth),
        "admm": solve_admm(
            y, model, SolverParams(lam=lam, sigma=sigma, outer_iters=200, beta=0.001), engine, truth
        ),
        "fp": solve_fp(y, model, SolverParams(lam=lam, sigma=sigma, outer_iters=200), engine, truth),
    }
    energies = [r.energy_trace[-1] for r in reports.values()]
    psnrs = [r.psnr_trace[-1] for r in reports.values()]
    assert (max(energies) - min(energies)) / min(energies) < 1e-3
    assert max(psnrs) - min(psnrs) < 0.05


def test_admm_beta_robustness(deblur_instance):
    model, y, _ = deblur_instance
    engine = TikhonovDenoiser(reg_weight=0.5, sigma_f=3.0)
    finals = []
    rates = []
    for beta in (1e-3, 1e-2, 1e-1):
        params = SolverParams(lam=0.02, sigma=np.sqrt(2), outer_iters=400, beta=beta)
        report = solve_admm(y, model, params, engine)
        finals.append(report.energy_trace[-1])
        tail = np.abs(report.energy_trace - report.energy_trace[-1]) / report.energy_trace[-1]
        rates.append(int(np.argmax(tail < 1e-6)))
    assert (max(finals) - min(finals)) / min(finals) < 1e-3
    assert len(set(rates)) > 1  # convergence speed differs with beta


def test_admm_v_iters_same_energy_faster(deblur_instance):
    model, y, _ = deblur_instance
    engine = TikhonovDenoiser(reg_weight=0.005, sigma_f=3.0)
    reports = {}
    for m2 in (1, 3):
        params = SolverParams(lam=0.01, sigma=np.sqrt(2), outer_iters=300, beta=0.001, v_iters=m2)
        reports[m2] = solve_admm(y, model, params, engine)
    e1 = reports[1].energy_trace[-1]
    e3 = reports[3].energy_trace[-1]
    assert abs(e1 - e3) / min(e1, e3) < 1e-3

    def settle(trace, tol=1e-6):
        rel = np.abs(trace - trace[-1]) / trace[-1]
        k = len(trace) - 1
        while k > 0 and rel[k - 1] < tol:
            k -= 1
        return k

    assert settle(reports[3].energy_trace) <= settle(reports[1].energy_trace)


# --- monotonicity / stationarity on convex instances ----------------------


def test_sd_energy_monotone_convex_instances(deblur_instance):
    model, y, _ = deblur_instance
    engine = TikhonovDenoiser(reg_weight=0.5, sigma_f=3.0)
    params = SolverParams(lam=0.02, sigma=np.sqrt(2), outer_iters=300)
    report = solve_sd(y, model, params, engine)
    diffs = np.diff(report.energy_trace)
    assert np.all(diffs <= 1e-10 * report.energy_trace[0])


def test_sd_stationarity_convex(deblur_instance):
    model, y, _ = deblur_instance
    engine = TikhonovDenoiser(reg_weight=0.5, sigma_f=3.0)
    params = SolverParams(lam=0.02, sigma=np.sqrt(2), outer_iters=1500)
    report = solve_sd(y, model, params, engine)
    assert report.grad_norm_trace[-1] / report.grad_norm_trace[0] < 1e-3


# --- report contract ----------------------------------------------------


def test_traces_have_initial_point(crop16):
    model = DegradationModel(identity_psf())
    params = SolverParams(lam=0.1, sigma=1.0, outer_iters=7)
    report = solve_fp(crop16, model, params, ZeroEngine(), ground_truth=crop16)
    assert report.iterations_run == 7
    assert len(report.energy_trace) == 8
    assert len(report.grad_norm_trace) == 8
    assert len(report.psnr_trace) == 8
    assert report.energy_trace[0] == pytest.approx(
        red_energy(crop16, crop16, model, 0.1, 1.0, ZeroEngine())
    )


def test_psnr_trace_absent_without_ground_truth(crop16):
    model = DegradationModel(identity_psf())
    report = solve_sd(crop16, model, SolverParams(lam=0.1, sigma=1.0, outer_iters=3), ZeroEngine())
    assert report.psnr_trace is None


def test_solve_dispatch(crop16):
    model = DegradationModel(identity_psf())
    params = SolverParams(lam=0.1, sigma=1.0, outer_iters=3, scheme="fp")
    report = solve(crop16, model, params, ZeroEngine())
    assert isinstance(report, RunReport)


def test_grad_tol_early_stop(crop16):
    model = DegradationModel(identity_psf())
    params = SolverParams(lam=0.1, sigma=1.5, outer_iters=500, step_scale=0.9, grad_tol=1e-4)
    report = solve_sd(crop16, model, params, ZeroEngine())
    assert report.iterations_run < 500
    assert len(report.energy_trace) == report.iterations_run + 1


# --- divergence guard -------------------------------------------------


def test_divergence_guard_aborts_with_partial_report(crop16):
    model = DegradationModel(identity_psf())
    params = SolverParams(lam=1.0, sigma=1.0, outer_iters=500)
    with pytest.raises(SolverDivergenceError) as excinfo:
        solve_sd(crop16, model, params, ScaledEngine(-3.0))
    assert excinfo.value.report is not None
    # the partial report carries everything recorded before the abort
    assert excinfo.value.report.iterations_run >= 9
    assert len(excinfo.value.report.energy_trace) == excinfo.value.report.iterations_run + 1


def test_median_jitter_does_not_trip_guard(deblur_instance):
    # nonsmooth engines produce tiny energy upticks near convergence;
    # these must not count as divergence
    model, y, truth = deblur_instance
    params = SolverParams(lam=0.12, sigma=np.sqrt(2), outer_iters=400)
    report = solve_sd(y, model, params, MedianDenoiser(), ground_truth=truth)
    assert report.iterations_run == 400
    assert report.psnr_trace[-1] > report.psnr_trace[0]


# --- initialization -----------------------------------------------------


def test_resolve_init_super_resolution_auto(crop16):
    model = DegradationModel(gaussian_psf(7, 1.6), scale_factor=3)
    x0 = resolve_init(crop16, model, "auto")
    assert x0.shape == (48, 48)
    assert np.allclose(x0, bicubic_upscale(crop16, 3))


def test_resolve_init_observation_invalid_for_sr(crop16):
    model = DegradationModel(gaussian_psf(7, 1.6), scale_factor=3)
    with pytest.raises(ValueError):
        resolve_init(crop16, model, "observation")


def test_resolve_init_custom_shape_checked(crop16):
    model = DegradationModel(identity_psf())
    with pytest.raises(ValueError):
        resolve_init(crop16, model, np.zeros((4, 4)))
    custom = np.full(crop16.shape, 9.0)
    assert np.array_equal(resolve_init(crop16, model, custom), custom)


def test_super_resolution_improves_over_bicubic(camera):
    truth = camera[64:130, 64:130]  # 66x66, divisible by 3
    model = DegradationModel(gaussian_psf(7, 1.6), scale_factor=3, noise_sigma=5.0)
    y = add_gaussian_noise(apply(model, truth), 5.0, seed=77)
    from denoreg.image import psnr

    baseline = psnr(truth, bicubic_upscale(y, 3)).psnr_db
    params = SolverParams(lam=0.008, sigma=5.0, outer_iters=20, inner_iters=40)
    report = solve_fp(y, model, params, MedianDenoiser(), ground_truth=truth)
    assert report.psnr_trace[-1] > baseline + 1.0


def test_params_validation():
    with pytest.raises(ValueError):
        SolverParams(lam=0.0, sigma=1.0)
    with pytest.raises(ValueError):
        SolverParams(lam=0.1, sigma=1.0, outer_iters=0)
    with pytest.raises(ValueError):
        SolverParams(lam=0.1, sigma=1.0, scheme="newton")
