//! Fixtures shared by the criterion benches.

use papc_core::io::{add_gaussian_noise, filament_phantom, gaussian_psf, synth_signal, SignalKind};
use papc_core::linops::{convolve_psf, Field};
use papc_core::problems::{
    build_smre_1d, build_smre_2d, build_tv_denoise, SmreObjective, SmreProblem, SmreSpec,
    TvDenoiseSpec,
};
use papc_core::{SaddleProblem, SolverConfig};

pub fn tv_problem(n: usize) -> SaddleProblem {
    let (_, b) = synth_signal(&SignalKind::Blocks, n, 0.03, 0).expect("valid signal parameters");
    build_tv_denoise(&TvDenoiseSpec { b, lambda: 0.05 }).expect("valid TV problem")
}

pub fn smre1d_problem(n: usize, levels: usize) -> SmreProblem {
    let (_, b) = synth_signal(&SignalKind::Blocks, n, 0.02, 0).expect("valid signal parameters");
    let spec = SmreSpec::denoising(b, 0.06, 0.93, levels, SmreObjective::DirichletEnergy);
    build_smre_1d(&spec).expect("valid SMRE problem")
}

pub fn smre2d_problem(n: usize, levels: usize) -> SmreProblem {
    let psf = gaussian_psf(7.min(n), 1.0).expect("valid PSF");
    let clean = filament_phantom(n).expect("valid phantom");
    let blurred = convolve_psf(&clean, &psf).expect("matching sizes");
    let noisy = add_gaussian_noise(blurred.as_slice(), 0.02, 0).expect("valid noise");
    let b = Field::new(n, noisy).expect("square field");
    let spec = SmreSpec::deconvolution(
        b,
        psf,
        0.07,
        1.0,
        levels,
        SmreObjective::SmoothedTv { alpha: 0.25 },
    )
    .expect("valid deconvolution spec");
    build_smre_2d(&spec).expect("valid SMRE problem")
}

/// Fixed iteration count, no stopping rule, no trace.
pub fn fixed_iterations(
    prob: &SaddleProblem,
    tau: f64,
    iters: usize,
    parallel: bool,
) -> SolverConfig {
    SolverConfig {
        max_iters: iters,
        stop_tol: 0.0,
        record_trace: false,
        parallel_dual: parallel,
        stagnation_window: 0,
        ..SolverConfig::with_tau(prob, tau)
    }
}
