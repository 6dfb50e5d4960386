use std::fs;
use std::path::Path;
use std::process::Command;

use papc_core::io::{read_image, read_signal_csv, read_trace_csv};

fn papc(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let code = papc_cli::run(
        std::iter::once("papc").chain(args.iter().copied()),
        &mut out,
    );
    (code, String::from_utf8(out).unwrap())
}

fn binary(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_papc"))
        .args(args)
        .output()
        .unwrap()
}

fn get(summary: &str, key: &str) -> String {
    summary
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in\n{summary}"))
        .to_string()
}

fn num(summary: &str, key: &str) -> f64 {
    get(summary, key).parse().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn denoise_tv_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tv");
    let (code, stdout) = papc(&[
        "denoise-tv",
        "--n",
        "32",
        "--max-iters",
        "300",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code, 0);
    for f in [
        "data.csv",
        "clean.csv",
        "reconstruction.csv",
        "trace.csv",
        "summary.txt",
    ] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert_eq!(summary, stdout);
    assert_eq!(
        read_signal_csv(out.join("reconstruction.csv"))
            .unwrap()
            .len(),
        32
    );
    let trace = read_trace_csv(out.join("trace.csv")).unwrap();
    let iters: usize = get(&summary, "iterations").parse().unwrap();
    assert_eq!(trace.len(), iters + 1);
    assert!(trace.windows(2).all(|w| w[1].iter > w[0].iter));
    assert!(num(&summary, "lambda_min") > 0.0);
    assert_eq!(get(&summary, "spectral_certified"), "true");
}

#[test]
fn tuned_tau_uses_certified_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tv");
    let (code, s) = papc(&[
        "denoise-tv",
        "--n",
        "16",
        "--tau",
        "tuned",
        "--max-iters",
        "50",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code, 0);
    assert!(num(&s, "rate_alpha") > 1.0);
    assert!(num(&s, "delta_certified") > 0.0);
    let lmax = num(&s, "lambda_max");
    assert!(num(&s, "tau") * num(&s, "sigma") * lmax <= 1.0 + 1e-9);
}

#[test]
fn zero_iterations_emit_initial_state() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("z");
    let (code, s) = papc(&[
        "denoise-tv",
        "--n",
        "20",
        "--max-iters",
        "0",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code, 0);
    assert_eq!(get(&s, "iterations"), "0");
    assert_eq!(get(&s, "stop_reason"), "budget");
    assert_eq!(get(&s, "estimated_rate_c"), "absent");
    let trace = read_trace_csv(out.join("trace.csv")).unwrap();
    assert_eq!(trace.len(), 1);
    assert_eq!(trace[0].iter, 0);
    assert!(read_signal_csv(out.join("reconstruction.csv"))
        .unwrap()
        .iter()
        .all(|v| *v == 0.0));
}

#[test]
fn runs_are_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let (code, _) = papc(&[
            "denoise-tv",
            "--n",
            "24",
            "--max-iters",
            "100",
            "--seed",
            seed,
            "--out",
            path_str(&out),
        ]);
        assert_eq!(code, 0);
        (
            fs::read(out.join("data.csv")).unwrap(),
            fs::read(out.join("reconstruction.csv")).unwrap(),
            fs::read(out.join("trace.csv")).unwrap(),
        )
    };
    let a = run("a", "7");
    let b = run("b", "7");
    let c = run("c", "8");
    assert_eq!(a, b);
    assert_ne!(a.0, c.0);
}

#[test]
fn config_file_merges_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# small run\nn = 40\nmax_iters = 25\nlambda=0.2\nsignal = ramp\n",
    )
    .unwrap();
    let out = dir.path().join("o");
    let (code, s) = papc(&[
        "denoise-tv",
        "--config",
        path_str(&cfg),
        "--max-iters",
        "3",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code, 0);
    assert_eq!(get(&s, "iterations"), "3");
    assert_eq!(read_signal_csv(out.join("data.csv")).unwrap().len(), 40);
    assert_eq!(num(&s, "lambda"), 0.2);
}

#[test]
fn config_errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad_key = dir.path().join("bad.cfg");
    fs::write(&bad_key, "levels = 3\n").unwrap();
    assert_eq!(papc(&["denoise-tv", "--config", path_str(&bad_key)]).0, 2);

    let malformed = dir.path().join("malformed.cfg");
    fs::write(&malformed, "n 12\n").unwrap();
    assert_eq!(papc(&["denoise-tv", "--config", path_str(&malformed)]).0, 2);

    let bad_value = dir.path().join("value.cfg");
    fs::write(&bad_value, "n = twelve\n").unwrap();
    assert_eq!(papc(&["denoise-tv", "--config", path_str(&bad_value)]).0, 2);

    let missing = dir.path().join("missing.cfg");
    assert_eq!(papc(&["denoise-tv", "--config", path_str(&missing)]).0, 4);
}

#[test]
fn exit_codes_from_binary() {
    let dir = tempfile::tempdir().unwrap();

    let out = dir.path().join("tau");
    let o = binary(&["denoise-tv", "--tau", "1.5", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tau"));
    assert!(!out.exists());

    let huge = dir.path().join("huge.csv");
    fs::write(&huge, "1e308\n-1e308\n1e308\n-1e308\n").unwrap();
    let out = dir.path().join("diverged");
    let o = binary(&[
        "denoise-tv",
        "--input",
        path_str(&huge),
        "--lambda",
        "1e308",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!out.exists(), "a failed run must not leave partial outputs");

    let out = dir.path().join("io");
    let o = binary(&[
        "denoise-tv",
        "--input",
        path_str(&dir.path().join("nope.csv")),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert!(!out.exists());

    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "\n").unwrap();
    assert_eq!(
        binary(&[
            "denoise-tv",
            "--input",
            path_str(&empty),
            "--out",
            path_str(&out)
        ])
        .status
        .code(),
        Some(4)
    );

    assert_eq!(binary(&["denoise-tv", "--bogus"]).status.code(), Some(2));
    assert_eq!(binary(&[]).status.code(), Some(2));
}

#[test]
fn help_lists_keys_and_defaults() {
    let o = binary(&["smre1d", "--help"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    for key in [
        "--levels",
        "--q0",
        "--scale-f",
        "--max-iters",
        "--config",
        "--seed",
    ] {
        assert!(text.contains(key), "help lacks {key}");
    }
    assert!(text.contains("[default: 512]"));
    assert!(text.contains("[default: 0.93]"));
}

#[test]
fn smre1d_small_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s1");
    let (code, s) = papc(&[
        "smre1d",
        "--n",
        "64",
        "--levels",
        "3",
        "--max-iters",
        "400",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code, 0);
    assert_eq!(get(&s, "dual_blocks"), "6");
    assert_eq!(get(&s, "total_constraints"), "189");
    assert_eq!(get(&s, "delta_certified"), "absent");
    let violations = fs::read_to_string(out.join("violations.csv")).unwrap();
    assert_eq!(violations.lines().count(), 4);
    assert!(violations.starts_with("level,q,max_violation"));
    let q1 = num(&s, "q_level_1");
    let q3 = num(&s, "q_level_3");
    assert!((q3 - q1 * 0.93 * 0.93).abs() < 1e-12);
}

#[test]
fn smre1d_huber_objective() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s1h");
    let (code, s) = papc(&[
        "smre1d",
        "--n",
        "48",
        "--levels",
        "2",
        "--objective",
        "huber",
        "--max-iters",
        "100",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code, 0);
    assert!(get(&s, "objective_kind").contains("huber"));
}

#[test]
fn smre2d_small_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s2");
    let (code, s) = papc(&[
        "smre2d",
        "--n",
        "16",
        "--levels",
        "2",
        "--psf-size",
        "3",
        "--max-iters",
        "30",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code, 0);
    assert_eq!(get(&s, "iterations"), "30");
    for f in [
        "data.raw",
        "clean.raw",
        "reconstruction.raw",
        "reconstruction.pgm",
        "trace.csv",
        "violations.csv",
    ] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    assert_eq!(read_image(out.join("reconstruction.raw")).unwrap().n(), 16);
    assert_eq!(read_image(out.join("reconstruction.pgm")).unwrap().n(), 16);
    // 1 + 4 tilings
    assert_eq!(get(&s, "dual_blocks"), "5");

    let out = dir.path().join("s2i");
    let (code, _) = papc(&[
        "smre2d",
        "--n",
        "12",
        "--levels",
        "1",
        "--forward",
        "identity",
        "--max-iters",
        "5",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code, 0);
}

#[test]
fn tune_reports_root_and_budget() {
    let (code, s) = papc(&["tune"]);
    assert_eq!(code, 0);
    assert!((num(&s, "rho") - 1.7446).abs() < 1e-3);
    assert!((num(&s, "tau_times_lipschitz") - 0.5732).abs() < 1e-3);
    assert!((num(&s, "delta_branch_1") - num(&s, "delta_branch_2")).abs() < 1e-6);

    let (code, s) = papc(&["tune", "--tv-n", "64", "--eps", "1e-4"]);
    assert_eq!(code, 0);
    let budget: usize = get(&s, "iteration_budget").parse().unwrap();
    assert!(budget > 1000);

    assert_eq!(papc(&["tune", "--kappa-a", "0.5"]).0, 2);
}

#[test]
fn certify_passes_and_fails_as_expected() {
    let dir = tempfile::tempdir().unwrap();
    let point = dir.path().join("y.csv");
    fs::write(&point, "0.1\n-0.4\n2.0\n").unwrap();
    let (code, s) = papc(&[
        "certify",
        "--point",
        path_str(&point),
        "--mu",
        "1",
        "--radius",
        "3",
    ]);
    assert_eq!(code, 0);
    assert_eq!(get(&s, "pass"), "true");

    // Linear branch of the Huber function at 10α admits no quadratic support.
    let far = dir.path().join("far.csv");
    fs::write(&far, "2.5\n").unwrap();
    let (code, s) = papc(&[
        "certify",
        "--objective",
        "huber",
        "--alpha",
        "0.25",
        "--point",
        path_str(&far),
        "--radius",
        "2.5",
        "--mu",
        "0.1",
    ]);
    assert_eq!(code, 0);
    assert_eq!(get(&s, "pass"), "false");
    assert!(num(&s, "worst_slack") < 0.0);

    assert_eq!(papc(&["certify"]).0, 2);
}
