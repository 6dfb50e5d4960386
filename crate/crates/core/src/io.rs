//! File formats, synthetic data and trace persistence.
//!
//! Formats:
//!
//! * signal CSV: one decimal per line (scientific notation accepted);
//! * PSF CSV: `k` rows of `k` comma-separated decimals;
//! * binary graymap (`P5`, 8 or 16 bit), scaled to `[0, 1]` on read;
//! * raw float: 8-byte magic `PAPCF64\0`, `n` as u64 LE, then `n²` f64 LE;
//! * trace CSV: `iter,step_H,primal_step,dual_step,objective,max_violation`.
//!
//! Every writer goes through a temporary file in the target directory that is
//! renamed into place, so a failed write never leaves a partial file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linops::Field;

pub const RAW_MAGIC: &[u8; 8] = b"PAPCF64\0";
pub const TRACE_HEADER: &str = "iter,step_H,primal_step,dual_step,objective,max_violation";

/// One row of a solver trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub step_h: f64,
    pub primal_step: f64,
    pub dual_step: f64,
    pub objective: f64,
    pub max_violation: f64,
}

/// Writes `bytes` to `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_f64(path: &Path, line: usize, tok: &str) -> Result<f64> {
    tok.trim().parse::<f64>().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("not a number: {:?}", tok.trim()),
    })
}

// ---------------------------------------------------------------------------
// Signals

/// Reads one value per line; blank lines are skipped.
pub fn read_signal_csv(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_f64(path, i + 1, line)?);
    }
    if out.is_empty() {
        return Err(Error::EmptyInput(format!(
            "{} contains no values",
            path.display()
        )));
    }
    Ok(out)
}

/// Shortest round-trip decimal representation, one value per line.
pub fn write_signal_csv(path: impl AsRef<Path>, values: &[f64]) -> Result<()> {
    let mut s = String::with_capacity(values.len() * 24);
    for v in values {
        s.push_str(&format!("{v}\n"));
    }
    write_atomic(path.as_ref(), s.as_bytes())
}

/// `k` lines of `k` comma-separated nonnegative decimals.
pub fn read_psf_csv(path: impl AsRef<Path>) -> Result<Field> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| parse_f64(path, i + 1, t))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput(format!(
            "{} contains no kernel rows",
            path.display()
        )));
    }
    let k = rows.len();
    if rows[0].len() != k {
        return Err(Error::InvalidDimension(format!(
            "PSF must be square, got {k} rows of {} columns",
            rows[0].len()
        )));
    }
    Field::new(k, rows.concat())
}

pub fn write_psf_csv(path: impl AsRef<Path>, psf: &Field) -> Result<()> {
    let k = psf.n();
    let mut s = String::new();
    for i in 0..k {
        let row: Vec<String> = (0..k).map(|j| format!("{}", psf.get(i, j))).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    write_atomic(path.as_ref(), s.as_bytes())
}

// ---------------------------------------------------------------------------
// Images

/// Reads a binary graymap or raw float image, recognized by its magic.
pub fn read_image(path: impl AsRef<Path>) -> Result<Field> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(RAW_MAGIC) {
        read_raw(&bytes)
    } else if bytes.starts_with(b"P5") {
        read_pgm(&bytes)
    } else {
        Err(Error::Format(format!(
            "{}: unrecognized image magic {:?}",
            path.display(),
            String::from_utf8_lossy(&bytes[..bytes.len().min(8)])
        )))
    }
}

fn read_raw(bytes: &[u8]) -> Result<Field> {
    if bytes.len() < 16 {
        return Err(Error::Format("raw float header truncated".into()));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = &bytes[16..];
    if n == 0 || n.checked_mul(n).and_then(|m| m.checked_mul(8)) != Some(body.len()) {
        return Err(Error::Format(format!(
            "raw float body has {} bytes, header declares side {n}",
            body.len()
        )));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Field::new(n, data)
}

fn read_pgm(bytes: &[u8]) -> Result<Field> {
    // magic, width, height, maxval separated by whitespace and comments,
    // then exactly one whitespace byte before the raster
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for f in fields.iter_mut() {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        *f = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format("malformed graymap header".into()))?;
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::Format("malformed graymap header".into()));
    }
    pos += 1;
    let [w, h, maxval] = fields;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!(
            "graymap maxval {maxval} out of range"
        )));
    }
    if w != h {
        return Err(Error::InvalidDimension(format!(
            "graymap must be square, got {w}x{h}"
        )));
    }
    let bpp = if maxval < 256 { 1 } else { 2 };
    let raster = &bytes[pos..];
    if raster.len() < w * h * bpp {
        return Err(Error::Format(format!(
            "graymap raster truncated: {} of {} bytes",
            raster.len(),
            w * h * bpp
        )));
    }
    let scale = maxval as f64;
    let data = if bpp == 1 {
        raster[..w * h].iter().map(|&v| v as f64 / scale).collect()
    } else {
        raster[..2 * w * h]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / scale)
            .collect()
    };
    Field::new(w, data)
}

/// Raw float (lossless) unless the extension is `.pgm`, in which case a
/// 16-bit graymap of the values clamped to `[0, 1]`.
pub fn write_image(path: impl AsRef<Path>, field: &Field) -> Result<()> {
    let path = path.as_ref();
    let is_pgm = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    let n = field.n();
    let bytes = if is_pgm {
        let mut b = format!("P5\n{n} {n}\n65535\n").into_bytes();
        for &v in field.as_slice() {
            let q = (v.clamp(0.0, 1.0) * 65535.0).round() as u16;
            b.extend_from_slice(&q.to_be_bytes());
        }
        b
    } else {
        let mut b = Vec::with_capacity(16 + 8 * n * n);
        b.extend_from_slice(RAW_MAGIC);
        b.extend_from_slice(&(n as u64).to_le_bytes());
        for &v in field.as_slice() {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b
    };
    write_atomic(path, &bytes)
}

// ---------------------------------------------------------------------------
// Synthetic data

#[derive(Debug, Clone, PartialEq)]
pub enum SignalKind {
    /// Piecewise constant steps.
    Blocks,
    /// Linear ramp from 0 to 1 with a step in the middle.
    Ramp,
    /// Clean signal read from a signal CSV; must have length `n`.
    CustomCsv(PathBuf),
}

/// Adds i.i.d. `N(0, sd²)` noise drawn from a ChaCha8 stream seeded by `seed`.
pub fn add_gaussian_noise(clean: &[f64], noise_sd: f64, seed: u64) -> Result<Vec<f64>> {
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise_sd must be >= 0, got {noise_sd}"
        )));
    }
    if noise_sd == 0.0 {
        return Ok(clean.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(clean
        .iter()
        .map(|c| {
            let z: f64 = StandardNormal.sample(&mut rng);
            c + noise_sd * z
        })
        .collect())
}

fn blocks_signal(n: usize) -> Vec<f64> {
    const STEPS: [(f64, f64); 7] = [
        (0.10, 0.0),
        (0.22, 0.8),
        (0.35, 0.3),
        (0.48, 1.0),
        (0.62, 0.1),
        (0.80, 0.6),
        (1.01, 0.2),
    ];
    (0..n)
        .map(|i| {
            let t = (i as f64 + 0.5) / n as f64;
            STEPS.iter().find(|(end, _)| t < *end).map_or(0.2, |s| s.1)
        })
        .collect()
}

fn ramp_signal(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let t = if n > 1 {
                i as f64 / (n - 1) as f64
            } else {
                0.0
            };
            if t < 0.5 {
                0.8 * t
            } else {
                0.8 * t + 0.2
            }
        })
        .collect()
}

/// `(clean, noisy)`; `noisy = clean + N(0, noise_sd²)` i.i.d.
pub fn synth_signal(
    kind: &SignalKind,
    n: usize,
    noise_sd: f64,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidDimension("signal length must be >= 1".into()));
    }
    let clean = match kind {
        SignalKind::Blocks => blocks_signal(n),
        SignalKind::Ramp => ramp_signal(n),
        SignalKind::CustomCsv(path) => {
            let v = read_signal_csv(path)?;
            if v.len() != n {
                return Err(Error::InvalidDimension(format!(
                    "{} has {} values, expected {n}",
                    path.display(),
                    v.len()
                )));
            }
            v
        }
    };
    let noisy = add_gaussian_noise(&clean, noise_sd, seed)?;
    Ok((clean, noisy))
}

/// Thin bright curves and two spots on a dark background, values in `[0, 1]`.
pub fn filament_phantom(n: usize) -> Result<Field> {
    if n < 2 {
        return Err(Error::InvalidDimension(format!(
            "phantom side must be >= 2, got {n}"
        )));
    }
    let s = n as f64;
    let width = (s / 64.0).max(0.6);
    let bump = |d: f64| (-0.5 * (d / width).powi(2)).exp();
    Ok(Field::from_fn(n, |i, j| {
        let (y, x) = (i as f64, j as f64);
        // sinusoidal filament, a diagonal and a circle arc
        let d1 = (y - (0.35 * s + 0.12 * s * (2.0 * std::f64::consts::PI * x / s).sin())).abs();
        let d2 = (x - y - 0.1 * s).abs() / std::f64::consts::SQRT_2;
        let r = ((x - 0.62 * s).powi(2) + (y - 0.68 * s).powi(2)).sqrt();
        let d3 = (r - 0.18 * s).abs();
        let spot = |cx: f64, cy: f64, rad: f64| {
            let d = ((x - cx * s).powi(2) + (y - cy * s).powi(2)).sqrt();
            (-0.5 * (d / (rad * s)).powi(2)).exp()
        };
        let v = 0.9 * bump(d1)
            + 0.7 * bump(d2)
            + 0.8 * bump(d3)
            + 0.6 * spot(0.2, 0.8, 0.03)
            + 0.5 * spot(0.8, 0.2, 0.04);
        v.min(1.0)
    }))
}

/// Normalized (unit-mass) `k×k` Gaussian kernel centred at `k/2`.
pub fn gaussian_psf(k: usize, sd: f64) -> Result<Field> {
    if k == 0 {
        return Err(Error::InvalidDimension("PSF side must be >= 1".into()));
    }
    if !(sd > 0.0 && sd.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "PSF standard deviation must be positive, got {sd}"
        )));
    }
    let c = (k / 2) as f64;
    let raw = Field::from_fn(k, |i, j| {
        (-((i as f64 - c).powi(2) + (j as f64 - c).powi(2)) / (2.0 * sd * sd)).exp()
    });
    let mass: f64 = raw.as_slice().iter().sum();
    Field::new(k, raw.into_vec().into_iter().map(|v| v / mass).collect())
}

// ---------------------------------------------------------------------------
// Traces

/// Header plus one row per record, 17 significant digits.
pub fn write_trace_csv(path: impl AsRef<Path>, records: &[TraceRecord]) -> Result<()> {
    write_atomic(path.as_ref(), format_trace_csv(records).as_bytes())
}

pub fn format_trace_csv(records: &[TraceRecord]) -> String {
    let mut s = String::with_capacity(64 + records.len() * 128);
    s.push_str(TRACE_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.iter, r.step_h, r.primal_step, r.dual_step, r.objective, r.max_violation
        ));
    }
    s
}

pub fn read_trace_csv(path: impl AsRef<Path>) -> Result<Vec<TraceRecord>> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == TRACE_HEADER => {}
        _ => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: format!("expected header {TRACE_HEADER:?}"),
            })
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split(',').collect();
        if toks.len() != 6 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("expected 6 columns, found {}", toks.len()),
            });
        }
        let iter = toks[0].trim().parse::<usize>().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: format!("bad iteration index {:?}", toks[0]),
        })?;
        let v = toks[1..]
            .iter()
            .map(|t| parse_f64(path, i + 1, t))
            .collect::<Result<Vec<_>>>()?;
        out.push(TraceRecord {
            iter,
            step_h: v[0],
            primal_step: v[1],
            dual_step: v[2],
            objective: v[3],
            max_violation: v[4],
        });
    }
    Ok(out)
}
