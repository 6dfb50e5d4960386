//! Subcommand implementations.

use std::io::Write;
use std::path::PathBuf;

use papc_core::functions::{pqs_certificate, quadratic_fidelity, ScalarKernel, SeparableSum};
use papc_core::io::{
    add_gaussian_noise, filament_phantom, format_trace_csv, gaussian_psf, read_image, read_psf_csv,
    read_signal_csv, synth_signal, SignalKind,
};
use papc_core::linops::{convolve_psf, Field, Grad1dDirichlet};
use papc_core::papc::{
    iteration_budget, optimality_residual, solve, tune_parameters, BudgetTarget, ConvergenceReport,
    IterateState, SaddleProblem, SolverConfig,
};
use papc_core::problems::{
    build_smre_1d, build_smre_2d, build_tv_denoise, constraint_violation, SmreObjective,
    SmreProblem, SmreSpec, TvDenoiseSpec,
};
use papc_core::SmoothObjective;

use crate::output::{fmt_f64, OutputSet, Summary};
use crate::{
    CertifyArgs, CertifyObjective, CliError, Command, DenoiseTvArgs, ForwardArg, ObjectiveArg,
    SignalArg, Smre1dArgs, Smre2dArgs, SolveOpts, TargetArg, TauChoice, TuneArgs, EXIT_IO,
};

/// What a subcommand produced: a summary for stdout and files for `dir`.
pub struct Report {
    pub summary: Summary,
    pub outputs: OutputSet,
    pub dir: Option<PathBuf>,
}

pub fn dispatch(cmd: &Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    let report = match cmd {
        Command::DenoiseTv(a) => with_threads(a.common.threads, || denoise_tv(a))??,
        Command::Smre1d(a) => with_threads(a.common.threads, || smre1d(a))??,
        Command::Smre2d(a) => with_threads(a.common.threads, || smre2d(a))??,
        Command::Tune(a) => tune(a)?,
        Command::Certify(a) => certify(a)?,
    };
    if let Some(dir) = &report.dir {
        report.outputs.commit(dir)?;
    }
    stdout
        .write_all(report.summary.render().as_bytes())
        .map_err(|e| CliError {
            code: EXIT_IO,
            message: format!("cannot write report: {e}"),
        })
}

fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::config(format!("cannot start {threads} threads: {e}")))?;
    Ok(pool.install(f))
}

fn signal_kind(s: SignalArg) -> SignalKind {
    match s {
        SignalArg::Blocks => SignalKind::Blocks,
        SignalArg::Ramp => SignalKind::Ramp,
    }
}

fn csv_bytes(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}\n")).collect()
}

fn raw_bytes(f: &Field) -> Vec<u8> {
    let n = f.n();
    let mut b = Vec::with_capacity(16 + 8 * n * n);
    b.extend_from_slice(papc_core::io::RAW_MAGIC);
    b.extend_from_slice(&(n as u64).to_le_bytes());
    for v in f.as_slice() {
        b.extend_from_slice(&v.to_le_bytes());
    }
    b
}

fn pgm_bytes(f: &Field) -> Vec<u8> {
    let n = f.n();
    let mut b = format!("P5\n{n} {n}\n65535\n").into_bytes();
    for &v in f.as_slice() {
        b.extend_from_slice(&((v.clamp(0.0, 1.0) * 65535.0).round() as u16).to_be_bytes());
    }
    b
}

/// Solver configuration from the shared options; `tau` either fixed or
/// tuned from the problem's condition numbers.
fn solver_config(
    prob: &SaddleProblem,
    opts: &SolveOpts,
    tau: TauChoice,
    max_iters: usize,
    stop_tol: f64,
) -> Result<SolverConfig, CliError> {
    let spec = prob.spectral();
    let lf = prob.f().lipschitz_grad();
    let (tau, tuned_sigma, tuned_alpha) = match tau {
        TauChoice::Value(t) => (t, None, None),
        TauChoice::Tuned => {
            let kappa_a = spec
                .kappa()
                .ok_or_else(|| CliError::config("tau=tuned needs lambda_min(A^T A) > 0"))?;
            let mu = prob.f().pqs_constant().ok_or_else(|| {
                CliError::config("tau=tuned needs a known quadratic support constant mu")
            })?;
            let t = tune_parameters(kappa_a, lf / mu, lf, spec.lambda_max)?;
            (t.tau, Some(t.sigma), Some(t.alpha))
        }
    };
    let sigma = opts
        .sigma
        .or(tuned_sigma)
        .unwrap_or(1.0 / (tau * spec.lambda_max));
    let cfg = SolverConfig {
        tau,
        sigma,
        alpha: opts.rate_alpha.or(tuned_alpha).unwrap_or(2.0),
        max_iters: opts.max_iters.unwrap_or(max_iters),
        stop_tol: opts.stop_tol.unwrap_or(stop_tol),
        record_trace: true,
        parallel_dual: opts.threads != 1,
        seed: opts.seed,
        stagnation_window: opts.stagnation_window,
    };
    cfg.validate(prob)?;
    Ok(cfg)
}

fn solve_summary(
    summary: &mut Summary,
    prob: &SaddleProblem,
    cfg: &SolverConfig,
    report: &ConvergenceReport,
) {
    let spec = prob.spectral();
    summary
        .num("tau", cfg.tau)
        .num("sigma", cfg.sigma)
        .num("rate_alpha", cfg.alpha)
        .num("lipschitz_f", prob.f().lipschitz_grad())
        .num("lambda_max", spec.lambda_max)
        .num("lambda_min", spec.lambda_min)
        .set("spectral_certified", spec.certified)
        .set("iterations", report.iterations_run)
        .set("stop_reason", report.stop_reason.as_str())
        .opt("final_step_H", report.last_step_h())
        .opt("estimated_rate_c", report.estimated_rate_c)
        .opt("aposteriori_bound", report.aposteriori_bound)
        .opt("delta_certified", report.delta_certified);
    if let Some(last) = report.trace.last() {
        summary
            .num("objective", last.objective)
            .num("max_violation", last.max_violation);
    }
    summary.set("seed", cfg.seed);
}

// ---------------------------------------------------------------------------

pub fn denoise_tv(a: &DenoiseTvArgs) -> Result<Report, CliError> {
    let (clean, b) = match &a.input {
        Some(p) => (None, read_signal_csv(p)?),
        None => {
            let (c, b) = synth_signal(&signal_kind(a.signal), a.n, a.noise_sd, a.common.seed)?;
            (Some(c), b)
        }
    };
    let prob = build_tv_denoise(&TvDenoiseSpec {
        b: b.clone(),
        lambda: a.lambda,
    })?;
    let cfg = solver_config(&prob, &a.common, a.tau, 5000, 1e-8)?;
    let (state, report) = solve(&prob, &cfg, IterateState::zeros(&prob))?;

    let mut summary = Summary::new();
    summary
        .set("command", "denoise-tv")
        .set("n", b.len())
        .num("lambda", a.lambda)
        .num("noise_sd", a.noise_sd);
    solve_summary(&mut summary, &prob, &cfg, &report);
    summary.num(
        "optimality_residual",
        optimality_residual(&prob, &state.x, &state.y),
    );

    let mut outputs = OutputSet::new();
    outputs.add("data.csv", csv_bytes(&b));
    if let Some(c) = &clean {
        outputs.add("clean.csv", csv_bytes(c));
    }
    outputs.add("reconstruction.csv", csv_bytes(&state.x));
    outputs.add("trace.csv", format_trace_csv(&report.trace));
    outputs.add("summary.txt", summary.render());
    Ok(Report {
        summary,
        outputs,
        dir: Some(a.common.out.clone()),
    })
}

fn smre_objective(kind: ObjectiveArg, alpha: f64) -> SmreObjective {
    match kind {
        ObjectiveArg::Quadratic => SmreObjective::DirichletEnergy,
        ObjectiveArg::Huber => SmreObjective::SmoothedTv { alpha },
    }
}

fn smre_summary(
    summary: &mut Summary,
    p: &SmreProblem,
    spec: &SmreSpec,
    x: &[f64],
) -> Result<String, CliError> {
    summary
        .set("levels", p.windows.levels)
        .set("total_constraints", p.windows.total_constraints)
        .set("dual_blocks", p.problem.blocks().len())
        .num("q0", spec.q0)
        .num("scale_f", spec.scale_f);
    let v = constraint_violation(x, spec, &p.windows)?;
    let mut csv = String::from("level,q,max_violation\n");
    for (l, (q, viol)) in p.q.iter().zip(&v).enumerate() {
        summary.num(&format!("q_level_{}", l + 1), *q);
        summary.num(&format!("violation_level_{}", l + 1), *viol);
        csv.push_str(&format!("{},{},{}\n", l + 1, fmt_f64(*q), fmt_f64(*viol)));
    }
    Ok(csv)
}

fn positive_tau_default(prob: &SaddleProblem) -> TauChoice {
    TauChoice::Value(0.8 / prob.f().lipschitz_grad())
}

pub fn smre1d(a: &Smre1dArgs) -> Result<Report, CliError> {
    let (clean, b) = match &a.input {
        Some(p) => (None, read_signal_csv(p)?),
        None => {
            let (c, b) = synth_signal(&signal_kind(a.signal), a.n, a.noise_sd, a.common.seed)?;
            (Some(c), b)
        }
    };
    let q0 = a.q0.unwrap_or(3.0 * a.noise_sd);
    let spec = SmreSpec::denoising(
        b.clone(),
        q0,
        a.scale_f,
        a.levels,
        smre_objective(a.objective, a.huber_alpha),
    );
    let p = build_smre_1d(&spec)?;
    let tau = a.tau.unwrap_or_else(|| positive_tau_default(&p.problem));
    let cfg = solver_config(&p.problem, &a.common, tau, 50_000, 1e-6)?;
    let (state, report) = solve(&p.problem, &cfg, IterateState::zeros(&p.problem))?;

    let mut summary = Summary::new();
    summary
        .set("command", "smre1d")
        .set("n", b.len())
        .set(
            "objective_kind",
            format!("{:?}", a.objective).to_lowercase(),
        )
        .num("noise_sd", a.noise_sd);
    solve_summary(&mut summary, &p.problem, &cfg, &report);
    let violations = smre_summary(&mut summary, &p, &spec, &state.x)?;

    let mut outputs = OutputSet::new();
    outputs.add("data.csv", csv_bytes(&b));
    if let Some(c) = &clean {
        outputs.add("clean.csv", csv_bytes(c));
    }
    outputs.add("reconstruction.csv", csv_bytes(&state.x));
    outputs.add("trace.csv", format_trace_csv(&report.trace));
    outputs.add("violations.csv", violations);
    outputs.add("summary.txt", summary.render());
    Ok(Report {
        summary,
        outputs,
        dir: Some(a.common.out.clone()),
    })
}

pub fn smre2d(a: &Smre2dArgs) -> Result<Report, CliError> {
    let psf = match (&a.forward, &a.psf) {
        (ForwardArg::Identity, _) => None,
        (ForwardArg::Psf, Some(p)) => Some(read_psf_csv(p)?),
        (ForwardArg::Psf, None) => Some(gaussian_psf(a.psf_size, a.psf_sd)?),
    };
    let (clean, b) = match &a.input {
        Some(p) => (None, read_image(p)?),
        None => {
            let clean = filament_phantom(a.n)?;
            let blurred = match &psf {
                Some(k) => convolve_psf(&clean, k)?,
                None => clean.clone(),
            };
            let noisy = add_gaussian_noise(blurred.as_slice(), a.noise_sd, a.common.seed)?;
            (Some(clean), Field::new(a.n, noisy)?)
        }
    };
    let n = b.n();
    let objective = smre_objective(a.objective, a.huber_alpha);
    let spec = match psf {
        Some(k) => SmreSpec::deconvolution(b.clone(), k, a.q0, a.scale_f, a.levels, objective)?,
        None => SmreSpec::denoising(b.as_slice().to_vec(), a.q0, a.scale_f, a.levels, objective),
    };
    let p = build_smre_2d(&spec)?;
    let cfg = solver_config(&p.problem, &a.common, a.tau, 800, 1e-10)?;
    let (state, report) = solve(&p.problem, &cfg, IterateState::zeros(&p.problem))?;

    let mut summary = Summary::new();
    summary
        .set("command", "smre2d")
        .set("n", n)
        .set(
            "objective_kind",
            format!("{:?}", a.objective).to_lowercase(),
        )
        .set("forward", format!("{:?}", a.forward).to_lowercase())
        .num("noise_sd", a.noise_sd);
    solve_summary(&mut summary, &p.problem, &cfg, &report);
    let violations = smre_summary(&mut summary, &p, &spec, &state.x)?;

    let x = Field::new(n, state.x)?;
    let mut outputs = OutputSet::new();
    outputs.add("data.raw", raw_bytes(&b));
    if let Some(c) = &clean {
        outputs.add("clean.raw", raw_bytes(c));
    }
    outputs.add("reconstruction.raw", raw_bytes(&x));
    outputs.add("reconstruction.pgm", pgm_bytes(&x));
    outputs.add("trace.csv", format_trace_csv(&report.trace));
    outputs.add("violations.csv", violations);
    outputs.add("summary.txt", summary.render());
    Ok(Report {
        summary,
        outputs,
        dir: Some(a.common.out.clone()),
    })
}

pub fn tune(a: &TuneArgs) -> Result<Report, CliError> {
    let (kappa_a, kappa_f, lf, lmax) = match a.tv_n {
        Some(n) => {
            let s = Grad1dDirichlet::new(n)?.spectrum();
            (s.lambda_max / s.lambda_min, 1.0, 1.0, s.lambda_max)
        }
        None => (a.kappa_a, a.kappa_f, a.lipschitz, a.lambda_max),
    };
    let t = tune_parameters(kappa_a, kappa_f, lf, lmax)?;
    let target = match a.target {
        TargetArg::Primal => BudgetTarget::Primal,
        TargetArg::Dual => BudgetTarget::Dual,
    };
    let budget = iteration_budget(a.eps, a.initial_distance, t.delta_m, lf, target);
    let mut summary = Summary::new();
    summary
        .set("command", "tune")
        .num("kappa_a", kappa_a)
        .num("kappa_f", kappa_f)
        .num("lipschitz_f", lf)
        .num("lambda_max", lmax)
        .num("rho", t.rho)
        .num("tau", t.tau)
        .num("tau_times_lipschitz", t.tau * lf)
        .num("sigma", t.sigma)
        .num("alpha", t.alpha)
        .num("delta_m", t.delta_m)
        .num("delta_branch_1", t.delta_branches.0)
        .num("delta_branch_2", t.delta_branches.1)
        .num("eps", a.eps)
        .num("initial_distance", a.initial_distance)
        .set("target", format!("{:?}", a.target).to_lowercase())
        .set("iteration_budget", budget);
    Ok(Report {
        summary,
        outputs: OutputSet::new(),
        dir: None,
    })
}

pub fn certify(a: &CertifyArgs) -> Result<Report, CliError> {
    let point_path = a
        .point
        .as_ref()
        .ok_or_else(|| CliError::config("certify needs --point <CSV>"))?;
    let y = read_signal_csv(point_path)?;
    let phi: Box<dyn SmoothObjective> = match a.objective {
        CertifyObjective::Quadratic => {
            let b = match &a.data {
                Some(p) => read_signal_csv(p)?,
                None => y.clone(),
            };
            if b.len() != y.len() {
                return Err(CliError::config(format!(
                    "data has {} values, point has {}",
                    b.len(),
                    y.len()
                )));
            }
            Box::new(quadratic_fidelity(b))
        }
        CertifyObjective::Huber => Box::new(SeparableSum::new(
            y.len(),
            ScalarKernel::Huber { alpha: a.alpha },
        )?),
        CertifyObjective::ModifiedHuber => Box::new(SeparableSum::new(
            y.len(),
            ScalarKernel::ModifiedHuber {
                alpha: a.alpha,
                eps: a.eps,
            },
        )?),
        CertifyObjective::Bump => Box::new(SeparableSum::new(y.len(), ScalarKernel::GaussianBump)?),
    };
    let r = pqs_certificate(phi.as_ref(), &y, a.radius, a.mu, a.samples, a.seed)?;
    let mut summary = Summary::new();
    summary
        .set("command", "certify")
        .set("objective", phi.label())
        .set("dim", y.len())
        .set("pass", r.pass)
        .num("worst_slack", r.worst_slack)
        .num("radius", r.radius)
        .num("mu", r.mu)
        .set("samples", r.samples)
        .set("seed", a.seed);
    Ok(Report {
        summary,
        outputs: OutputSet::new(),
        dir: None,
    })
}
