use papc_core::io::{
    add_gaussian_noise, format_trace_csv, read_image, read_signal_csv, read_trace_csv, write_image,
    write_signal_csv, write_trace_csv, TraceRecord,
};
use papc_core::linops::Field;
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL | prop::num::f64::ZERO
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn signal_csv_is_lossless(v in prop::collection::vec(finite(), 1..50)) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_signal_csv(&p, &v).unwrap();
        prop_assert_eq!(read_signal_csv(&p).unwrap(), v);
    }

    #[test]
    fn raw_image_is_lossless(n in 1usize..12, seed in any::<u64>()) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.raw");
        let f = Field::from_fn(n, |i, j| ((i * 31 + j * 7) as f64 + seed as f64).sin() * 1e3);
        write_image(&p, &f).unwrap();
        let g = read_image(&p).unwrap();
        prop_assert_eq!(g.as_slice(), f.as_slice());
    }

    #[test]
    fn graymap_quantizes_unit_range(n in 2usize..12) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.pgm");
        let f = Field::from_fn(n, |i, j| (i * n + j) as f64 / (n * n) as f64);
        write_image(&p, &f).unwrap();
        let g = read_image(&p).unwrap();
        prop_assert_eq!(g.n(), n);
        for (a, b) in g.as_slice().iter().zip(f.as_slice()) {
            prop_assert!((a - b).abs() <= 0.5 / 65535.0 + 1e-15);
        }
    }

    #[test]
    fn trace_csv_is_lossless(rows in prop::collection::vec((finite(), finite(), finite(), finite(), finite()), 1..20)) {
        let records: Vec<TraceRecord> = rows
            .into_iter()
            .enumerate()
            .map(|(k, (a, b, c, d, e))| TraceRecord {
                iter: k,
                step_h: a,
                primal_step: b,
                dual_step: c,
                objective: d,
                max_violation: e,
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_trace_csv(&p, &records).unwrap();
        prop_assert_eq!(read_trace_csv(&p).unwrap(), records.clone());
        prop_assert_eq!(std::fs::read_to_string(&p).unwrap(), format_trace_csv(&records));
    }
}

#[test]
fn noise_variance_matches_request() {
    let clean = vec![0.0; 10_000];
    let noisy = add_gaussian_noise(&clean, 0.2, 42).unwrap();
    let var = noisy.iter().map(|v| v * v).sum::<f64>() / noisy.len() as f64;
    assert!((var / 0.04 - 1.0).abs() < 0.1, "variance {var}");
    assert_eq!(noisy, add_gaussian_noise(&clean, 0.2, 42).unwrap());
}
