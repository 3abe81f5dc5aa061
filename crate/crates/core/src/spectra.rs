//! Laplace–Beltrami eigenvalues from probe signals: DFT, peak search, and
//! matching against the exact spectrum q² = β² − 1.

use std::f64::consts::PI;
use std::io::Write;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;
use thiserror::Error;

pub const MIN_SAMPLES: usize = 16;

/// Diameter of 𝓕, arccos((3σ − 2)/4): the recording window should start after
/// the wave has crossed the domain.
pub fn stabilization_time() -> f64 {
    ((3.0 * crate::golden::SIGMA - 2.0) / 4.0).acos()
}

#[derive(Debug, Error, PartialEq)]
pub enum SpectraError {
    #[error("signal has {0} samples, at least 16 are needed")]
    TooShort(usize),
    #[error("recording window starts at t = {start}, before the stabilization time {required}")]
    WindowTooEarly { start: f64, required: f64 },
    #[error("{0}")]
    InvalidParameter(String),
}

const SMALL_BETAS: [u32; 15] = [1, 13, 21, 25, 31, 33, 37, 41, 43, 45, 49, 51, 53, 55, 57];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExactEigenvalue {
    pub beta: u32,
    pub q2: f64,
}

impl ExactEigenvalue {
    pub fn q(&self) -> f64 {
        self.q2.sqrt()
    }
}

/// The first `count` admissible β with q² = β² − 1.
pub fn exact_spectrum(count: usize) -> Vec<ExactEigenvalue> {
    SMALL_BETAS
        .iter()
        .copied()
        .chain((30..).map(|n| 2 * n + 1))
        .take(count)
        .map(|beta| ExactEigenvalue {
            beta,
            q2: (beta as f64).powi(2) - 1.0,
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Window {
    None,
    Hann,
}

#[derive(Clone, Debug, Serialize)]
pub struct MagnitudeSpectrum {
    /// |X_j| for j = 0 … padded_len/2.
    pub magnitudes: Vec<f64>,
    pub samples: usize,
    pub padded_len: usize,
}

impl MagnitudeSpectrum {
    /// Angular frequency of (fractional) bin j.
    pub fn q_of_bin(&self, j: f64, dt: f64) -> f64 {
        2.0 * PI * j / (self.padded_len as f64 * dt)
    }
}

/// Smallest 2^a 3^b 5^c ≥ n.
pub fn fast_length(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut k = m;
        for p in [2, 3, 5] {
            while k.is_multiple_of(p) {
                k /= p;
            }
        }
        if k == 1 {
            return m;
        }
        m += 1;
    }
}

fn windowed(signal: &[f64], window: Window) -> Vec<f64> {
    let n = signal.len();
    match window {
        Window::None => signal.to_vec(),
        Window::Hann => signal
            .iter()
            .enumerate()
            .map(|(i, x)| x * (0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos()))
            .collect(),
    }
}

/// Full complex DFT of the windowed signal zero-padded to `len`.
pub fn dft(signal: &[f64], window: Window, len: usize) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = windowed(signal, window).into_iter().map(|x| Complex::new(x, 0.0)).collect();
    buf.resize(len, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    buf
}

pub fn dft_magnitude(signal: &[f64], window: Window) -> Result<MagnitudeSpectrum, SpectraError> {
    if signal.len() < MIN_SAMPLES {
        return Err(SpectraError::TooShort(signal.len()));
    }
    let padded_len = fast_length(signal.len());
    let full = dft(signal, window, padded_len);
    Ok(MagnitudeSpectrum {
        magnitudes: full[..=padded_len / 2].iter().map(|c| c.norm()).collect(),
        samples: signal.len(),
        padded_len,
    })
}

/// Removes the least-squares line a + b·k: the zero mode contributes a constant
/// plus a term linear in t.
pub fn detrend(signal: &[f64]) -> Vec<f64> {
    let n = signal.len() as f64;
    if signal.len() < 2 {
        return signal.to_vec();
    }
    let km = (n - 1.0) / 2.0;
    let ym = signal.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, y) in signal.iter().enumerate() {
        let dx = k as f64 - km;
        sxy += dx * (y - ym);
        sxx += dx * dx;
    }
    let b = sxy / sxx;
    signal
        .iter()
        .enumerate()
        .map(|(k, y)| y - ym - b * (k as f64 - km))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Peak {
    pub q: f64,
    pub q2: f64,
    /// Refined (fractional) bin.
    pub bin: f64,
    pub magnitude: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PeakOptions {
    /// Fraction of the largest nonzero-bin magnitude a peak must exceed.
    pub min_prominence: f64,
    pub max_peaks: usize,
}

impl Default for PeakOptions {
    fn default() -> Self {
        PeakOptions {
            min_prominence: 0.01,
            max_peaks: 64,
        }
    }
}

/// Strict maxima of a ±w neighbourhood (w grows with the padding ratio), above
/// the prominence threshold, refined by a parabola through the log-magnitudes
/// of the bin and its two neighbours. Sorted by q.
pub fn find_peaks(spec: &MagnitudeSpectrum, dt: f64, opts: &PeakOptions) -> Vec<Peak> {
    let m = &spec.magnitudes;
    if m.len() < 3 {
        return Vec::new();
    }
    let global = m[1..].iter().copied().fold(0.0, f64::max);
    if global <= 0.0 {
        return Vec::new();
    }
    let w = 2.max(spec.padded_len.div_ceil(spec.samples) + 1);
    let threshold = opts.min_prominence * global;
    let mut peaks = Vec::new();
    for j in 1..m.len() - 1 {
        if m[j] <= threshold {
            continue;
        }
        let lo = j.saturating_sub(w).max(1);
        let hi = (j + w).min(m.len() - 1);
        let is_max = (lo..=hi).all(|k| k == j || m[k] < m[j] || (m[k] == m[j] && k > j));
        if !is_max {
            continue;
        }
        let (a, b, c) = (m[j - 1].max(1e-300).ln(), m[j].ln(), m[j + 1].max(1e-300).ln());
        let denom = a - 2.0 * b + c;
        let delta = if denom < 0.0 { (0.5 * (a - c) / denom).clamp(-0.5, 0.5) } else { 0.0 };
        let bin = j as f64 + delta;
        let q = spec.q_of_bin(bin, dt);
        peaks.push(Peak {
            q,
            q2: q * q,
            bin,
            magnitude: (b - 0.25 * (a - c) * delta).exp(),
        });
    }
    if peaks.len() > opts.max_peaks {
        peaks.sort_by(|x, y| y.magnitude.total_cmp(&x.magnitude));
        peaks.truncate(opts.max_peaks);
    }
    peaks.sort_by(|x, y| x.q.total_cmp(&y.q));
    peaks
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenMatch {
    pub beta: u32,
    pub exact_q2: f64,
    pub detected_q2: Option<f64>,
    pub relative_error: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub peaks: Vec<Peak>,
    pub matches: Vec<EigenMatch>,
    /// 2π/((N_f − N_i + 1)Δt), zero when unknown.
    pub resolution_dq: f64,
}

impl SpectrumReport {
    pub fn missing(&self) -> Vec<u32> {
        self.matches.iter().filter(|m| m.detected_q2.is_none()).map(|m| m.beta).collect()
    }

    pub fn max_relative_error(&self) -> Option<f64> {
        self.matches
            .iter()
            .map(|m| m.relative_error)
            .try_fold(0.0f64, |acc, e| e.map(|e| acc.max(e)))
    }

    /// β, exact q², detected q², relative error.
    pub fn write_table<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{:>5} {:>10} {:>14} {:>14}", "beta", "exact", "numerical", "rel. error")?;
        for m in &self.matches {
            match (m.detected_q2, m.relative_error) {
                (Some(d), Some(e)) => writeln!(w, "{:>5} {:>10} {:>14.4} {:>14.7e}", m.beta, m.exact_q2, d, e)?,
                _ => writeln!(w, "{:>5} {:>10} {:>14} {:>14}", m.beta, m.exact_q2, "missing", "-")?,
            }
        }
        Ok(())
    }
}

/// |detected − exact| / exact.
pub fn relative_error(detected_q2: f64, exact_q2: f64) -> f64 {
    (detected_q2 - exact_q2).abs() / exact_q2
}

/// Greedy matching by increasing |Δq|; a pair is admissible when
/// |Δq| ≤ tol·q_exact. The zero eigenvalue is skipped (bin 0 is excluded from
/// the peak search).
pub fn match_eigenvalues(peaks: &[Peak], exact: &[ExactEigenvalue], tol: f64) -> SpectrumReport {
    let targets: Vec<&ExactEigenvalue> = exact.iter().filter(|e| e.q2 > 0.0).collect();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (ei, e) in targets.iter().enumerate() {
        for (pi, p) in peaks.iter().enumerate() {
            let d = (p.q - e.q()).abs();
            if d <= tol * e.q() {
                pairs.push((d, ei, pi));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut chosen: Vec<Option<usize>> = vec![None; targets.len()];
    let mut used = vec![false; peaks.len()];
    for (_, ei, pi) in pairs {
        if chosen[ei].is_none() && !used[pi] {
            chosen[ei] = Some(pi);
            used[pi] = true;
        }
    }
    let matches = targets
        .iter()
        .zip(&chosen)
        .map(|(e, c)| {
            let detected = c.map(|pi| peaks[pi].q2);
            EigenMatch {
                beta: e.beta,
                exact_q2: e.q2,
                detected_q2: detected,
                relative_error: detected.map(|d| relative_error(d, e.q2)),
            }
        })
        .collect();
    SpectrumReport {
        peaks: peaks.to_vec(),
        matches,
        resolution_dq: 0.0,
    }
}

/// Rejects windows starting before the stabilization time unless forced.
pub fn check_window(start_step: usize, dt: f64, force: bool) -> Result<(), SpectraError> {
    let start = start_step as f64 * dt;
    let required = stabilization_time();
    if start < required && !force {
        return Err(SpectraError::WindowTooEarly { start, required });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct AnalysisOptions {
    pub window: Window,
    pub peaks: PeakOptions,
    /// Matching tolerance, relative in q.
    pub match_tol: f64,
    pub exact_count: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            window: Window::None,
            peaks: PeakOptions::default(),
            match_tol: 0.1,
            exact_count: 16,
        }
    }
}

/// Detrends each probe signal, pools the peaks of all probes, and matches them
/// against the first `exact_count` exact eigenvalues.
pub fn analyze_signals(signals: &[Vec<f64>], dt: f64, opts: &AnalysisOptions) -> Result<SpectrumReport, SpectraError> {
    if !(dt > 0.0) {
        return Err(SpectraError::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    let mut pooled = Vec::new();
    let mut samples = 0;
    for s in signals {
        let spec = dft_magnitude(&detrend(s), opts.window)?;
        samples = samples.max(s.len());
        pooled.extend(find_peaks(&spec, dt, &opts.peaks));
    }
    pooled.sort_by(|a, b| a.q.total_cmp(&b.q));
    let mut report = match_eigenvalues(&pooled, &exact_spectrum(opts.exact_count), opts.match_tol);
    if samples > 0 {
        report.resolution_dq = 2.0 * PI / (samples as f64 * dt);
    }
    Ok(report)
}
