//! Power spectral density estimation and the fits run on top of it.

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    Hann,
    Rectangular,
}

impl Window {
    /// Periodic (DFT-even) window of length `n`.
    pub fn coefficients(&self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hann => (0..n)
                .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / n as f64).cos()))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchConfig {
    pub segment_len: usize,
    pub overlap: f64,
    pub window: Window,
}

impl WelchConfig {
    pub fn new(segment_len: usize) -> Self {
        WelchConfig {
            segment_len,
            overlap: 0.5,
            window: Window::Hann,
        }
    }
}

/// One-sided PSD in signal²/Hz on a grid from 0 to Nyquist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub psd: Vec<f64>,
    pub window: Window,
    pub segment_len: usize,
    pub overlap: f64,
    pub segments: usize,
}

impl Spectrum {
    /// Wrap externally produced values (e.g. read back from CSV).
    pub fn from_values(freqs: Vec<f64>, psd: Vec<f64>) -> Result<Self> {
        if freqs.len() != psd.len() || freqs.len() < 2 {
            return Err(Error::InvalidParameter {
                name: "spectrum",
                reason: format!("{} frequencies for {} values", freqs.len(), psd.len()),
            });
        }
        if freqs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter {
                name: "spectrum",
                reason: "frequencies must be strictly increasing".into(),
            });
        }
        let segment_len = 2 * (freqs.len() - 1);
        Ok(Spectrum {
            freqs,
            psd,
            window: Window::Rectangular,
            segment_len,
            overlap: 0.0,
            segments: 1,
        })
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn resolution(&self) -> f64 {
        self.freqs[1] - self.freqs[0]
    }

    /// `Σ psd · Δf`, the total power.
    pub fn integrated(&self) -> f64 {
        self.psd.iter().sum::<f64>() * self.resolution()
    }

    /// Indices of bins with `f_lo ≤ f ≤ f_hi`.
    pub fn band(&self, f_lo: f64, f_hi: f64) -> std::ops::Range<usize> {
        let start = self.freqs.partition_point(|&f| f < f_lo);
        let end = self.freqs.partition_point(|&f| f <= f_hi);
        start..end.max(start)
    }
}

/// Welch estimate: mean of windowed periodograms over segments overlapping
/// by the fraction `overlap`. No detrending is applied.
pub fn welch_psd(series: &[f64], dt: f64, segment_len: usize, overlap: f64, window: Window) -> Result<Spectrum> {
    if segment_len < 2 {
        return Err(Error::InvalidParameter {
            name: "segment_len",
            reason: "must be at least 2".into(),
        });
    }
    if series.len() < segment_len {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            needed: segment_len,
        });
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::InvalidParameter {
            name: "overlap",
            reason: format!("must lie in [0, 1), got {overlap}"),
        });
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: "must be positive".into(),
        });
    }

    let n = segment_len;
    let step = (n - (overlap * n as f64).round() as usize).max(1);
    let segments = (series.len() - n) / step + 1;
    let w = window.coefficients(n);
    let w_power: f64 = w.iter().map(|x| x * x).sum();
    let fft = FftPlanner::new().plan_fft_forward(n);

    let bins = n / 2 + 1;
    let mut acc = vec![0.0; bins];
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    for s in 0..segments {
        let seg = &series[s * step..s * step + n];
        for ((b, &x), &wi) in buf.iter_mut().zip(seg).zip(&w) {
            *b = Complex::new(x * wi, 0.0);
        }
        fft.process(&mut buf);
        for (a, c) in acc.iter_mut().zip(&buf[..bins]) {
            *a += c.norm_sqr();
        }
    }

    let scale = dt / (w_power * segments as f64);
    let psd = acc
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            let one_sided = if k == 0 || (n % 2 == 0 && k == n / 2) { 1.0 } else { 2.0 };
            a * scale * one_sided
        })
        .collect();
    let df = 1.0 / (n as f64 * dt);
    Ok(Spectrum {
        freqs: (0..bins).map(|k| k as f64 * df).collect(),
        psd,
        window,
        segment_len: n,
        overlap,
        segments,
    })
}

pub fn welch(series: &[f64], dt: f64, config: &WelchConfig) -> Result<Spectrum> {
    welch_psd(series, dt, config.segment_len, config.overlap, config.window)
}

/// Thermal oscillator line shape `C Γ / ((Ω² − ω²)² + Γ² ω²) + floor`, all
/// frequencies angular.
pub fn lorentzian(omega: f64, center: f64, gamma: f64, amplitude: f64, floor: f64) -> f64 {
    let d = center * center - omega * omega;
    amplitude * gamma / (d * d + gamma * gamma * omega * omega) + floor
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitErrors {
    pub omega: f64,
    pub gamma: f64,
    pub amplitude: f64,
    pub floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianFit {
    /// Resonance, rad/s.
    pub omega: f64,
    /// Linewidth, rad/s.
    pub gamma: f64,
    pub amplitude: f64,
    pub floor: f64,
    pub stderr: FitErrors,
    /// RMS of the log-residuals at the optimum.
    pub rms_residual: f64,
    pub iterations: usize,
    pub bins: usize,
    /// Another peak of comparable height sits in the band.
    pub multiple_peaks: bool,
}

impl LorentzianFit {
    pub fn omega_hz(&self) -> f64 {
        self.omega / (2.0 * PI)
    }

    pub fn gamma_hz(&self) -> f64 {
        self.gamma / (2.0 * PI)
    }
}

pub const MIN_FIT_BINS: usize = 10;
const MAX_ITERATIONS: usize = 500;

/// Parameters: `[Ω, ln Γ, ln C, ln floor]`.
struct LogModel<'a> {
    omega: &'a [f64],
    log_data: &'a [f64],
}

impl LogModel<'_> {
    fn residuals(&self, p: &Vector4<f64>) -> Option<DVector<f64>> {
        let (gamma, amp, floor) = (p[1].exp(), p[2].exp(), p[3].exp());
        let mut r = DVector::zeros(self.omega.len());
        for (i, (&w, &ld)) in self.omega.iter().zip(self.log_data).enumerate() {
            let m = lorentzian(w, p[0], gamma, amp, floor);
            if !(m > 0.0 && m.is_finite()) {
                return None;
            }
            r[i] = m.ln() - ld;
        }
        Some(r)
    }

    fn jacobian(&self, p: &Vector4<f64>) -> DMatrix<f64> {
        let (center, gamma, amp, floor) = (p[0], p[1].exp(), p[2].exp(), p[3].exp());
        let mut j = DMatrix::zeros(self.omega.len(), 4);
        for (i, &w) in self.omega.iter().enumerate() {
            let d = center * center - w * w;
            let den = d * d + gamma * gamma * w * w;
            let peak = amp * gamma / den;
            let m = peak + floor;
            j[(i, 0)] = -peak * 4.0 * d * center / den / m;
            j[(i, 1)] = (peak - peak * 2.0 * gamma * gamma * w * w / den) / m;
            j[(i, 2)] = peak / m;
            j[(i, 3)] = floor / m;
        }
        j
    }
}

/// Fit the thermal line shape to the bins inside `[f_lo, f_hi]` (Hz).
///
/// The fit minimizes squared differences of logarithms, so the multiplicative
/// scatter of averaged periodograms weighs all bins alike and only biases
/// the amplitude and floor, not the line position or width.
pub fn fit_lorentzian(spec: &Spectrum, band: (f64, f64)) -> Result<LorentzianFit> {
    let range = spec.band(band.0, band.1);
    let (freqs, psd): (Vec<f64>, Vec<f64>) = range
        .clone()
        .map(|i| (spec.freqs[i], spec.psd[i]))
        .filter(|&(_, p)| p > 0.0 && p.is_finite())
        .unzip();
    if freqs.len() < MIN_FIT_BINS {
        return Err(Error::BandTooNarrow {
            bins: freqs.len(),
            needed: MIN_FIT_BINS,
        });
    }
    let omega: Vec<f64> = freqs.iter().map(|f| 2.0 * PI * f).collect();
    let log_data: Vec<f64> = psd.iter().map(|p| p.ln()).collect();
    let model = LogModel {
        omega: &omega,
        log_data: &log_data,
    };

    let p0 = initial_guess(&omega, &psd);
    let (p, iterations, cost) = levenberg_marquardt(&model, p0)?;
    let n = omega.len();
    let rms_residual = (2.0 * cost / n as f64).sqrt();

    let gamma = p[1].exp();
    let amplitude = p[2].exp();
    let floor = p[3].exp();
    let lo = *omega.first().unwrap();
    let hi = *omega.last().unwrap();
    if !(p[0] > lo && p[0] < hi) {
        return Err(Error::DegenerateFit("fitted resonance lies outside the band"));
    }

    let j = model.jacobian(&p);
    let jtj: Matrix4<f64> = (j.transpose() * &j).fixed_view::<4, 4>(0, 0).into_owned();
    let dof = (n - 4).max(1) as f64;
    let sigma2 = 2.0 * cost / dof;
    // a floor far below the data leaves its column empty; the peak
    // parameters are then reported with the floor held fixed
    let cov = jtj.try_inverse().map(|c| c * sigma2).unwrap_or_else(|| {
        let mut c = Matrix4::from_element(f64::NAN);
        if let Some(inv) = jtj.fixed_view::<3, 3>(0, 0).into_owned().try_inverse() {
            c.fixed_view_mut::<3, 3>(0, 0).copy_from(&(inv * sigma2));
        }
        c
    });
    let se = |k: usize| {
        let v = cov[(k, k)];
        if v >= 0.0 { v.sqrt() } else { f64::NAN }
    };
    let stderr = FitErrors {
        omega: se(0),
        gamma: gamma * se(1),
        amplitude: amplitude * se(2),
        floor: floor * se(3),
    };

    Ok(LorentzianFit {
        omega: p[0],
        gamma,
        amplitude,
        floor,
        stderr,
        rms_residual,
        iterations,
        bins: n,
        multiple_peaks: has_second_peak(&omega, &psd, p[0], gamma, amplitude, floor),
    })
}

/// Ω from the highest bin (lowest frequency wins ties), Γ from the
/// half-power width around it.
fn initial_guess(omega: &[f64], psd: &[f64]) -> Vector4<f64> {
    let mut ipk = 0;
    for (i, &v) in psd.iter().enumerate() {
        if v > psd[ipk] {
            ipk = i;
        }
    }
    let floor = psd.iter().cloned().fold(f64::INFINITY, f64::min);
    let peak = psd[ipk];
    let half = floor + 0.5 * (peak - floor);
    let crossing = |range: &mut dyn Iterator<Item = usize>, edge: f64| -> f64 {
        let mut prev = ipk;
        for i in range {
            if psd[i] <= half {
                let t = (psd[prev] - half) / (psd[prev] - psd[i]);
                return omega[prev] + t * (omega[i] - omega[prev]);
            }
            prev = i;
        }
        edge
    };
    let left = crossing(&mut (0..ipk).rev(), omega[0]);
    let right = crossing(&mut (ipk + 1..omega.len()), *omega.last().unwrap());
    let bin = (omega[omega.len() - 1] - omega[0]) / (omega.len() - 1) as f64;
    let center = omega[ipk];
    let gamma = (right - left).max(bin);
    let amp = ((peak - floor).max(peak * 1e-3)) * gamma * center * center;
    Vector4::new(center, gamma.ln(), amp.ln(), (0.5 * floor).ln())
}

fn levenberg_marquardt(model: &LogModel, mut p: Vector4<f64>) -> Result<(Vector4<f64>, usize, f64)> {
    let cost_of = |r: &DVector<f64>| 0.5 * r.norm_squared();
    let mut r = model
        .residuals(&p)
        .ok_or(Error::DegenerateFit("initial guess gives a non-positive model"))?;
    let mut cost = cost_of(&r);
    let mut lambda = 1e-3;

    for iter in 1..=MAX_ITERATIONS {
        let j = model.jacobian(&p);
        let jtj: Matrix4<f64> = (j.transpose() * &j).fixed_view::<4, 4>(0, 0).into_owned();
        let grad: Vector4<f64> = (j.transpose() * &r).fixed_rows::<4>(0).into_owned();
        let dmax = (0..4).map(|k| jtj[(k, k)]).fold(0.0, f64::max);

        loop {
            let mut a = jtj;
            for k in 0..4 {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12 * dmax);
            }
            let step = a.lu().solve(&(-grad));
            let accepted = step.and_then(|delta| {
                let trial = p + delta;
                let rt = model.residuals(&trial)?;
                let ct = cost_of(&rt);
                (ct < cost).then_some((trial, rt, ct, delta))
            });
            match accepted {
                Some((trial, rt, ct, delta)) => {
                    let small_step = (0..4).all(|k| delta[k].abs() <= 1e-10 * (trial[k].abs() + 1e-10));
                    let small_gain = cost - ct <= 1e-10 * cost;
                    p = trial;
                    r = rt;
                    cost = ct;
                    lambda = (lambda / 10.0).max(1e-15);
                    if small_step || small_gain {
                        return Ok((p, iter, cost));
                    }
                    break;
                }
                None => {
                    lambda *= 10.0;
                    // no direction lowers the cost any more: we are at the minimum
                    if lambda > 1e12 {
                        return Ok((p, iter, cost));
                    }
                }
            }
        }
    }
    Err(Error::FitDidNotConverge {
        iterations: MAX_ITERATIONS,
        rms_residual: (2.0 * cost / model.omega.len() as f64).sqrt(),
    })
}

/// Three or more consecutive bins, away from the fitted line, that sit well
/// above the model and at least a quarter of the peak height over the floor.
fn has_second_peak(omega: &[f64], psd: &[f64], center: f64, gamma: f64, amp: f64, floor: f64) -> bool {
    let height = lorentzian(center, center, gamma, amp, 0.0);
    let mut run = 0;
    for (&w, &v) in omega.iter().zip(psd) {
        let m = lorentzian(w, center, gamma, amp, floor);
        let far = (w - center).abs() > 3.0 * gamma;
        if far && v > 4.0 * m && v - floor > 0.25 * height {
            run += 1;
            if run >= 3 {
                return true;
            }
        } else {
            run = 0;
        }
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqrtPowerFit {
    pub a: f64,
    /// `‖Ω − A√P‖ / ‖Ω‖`.
    pub residual: f64,
}

/// Least squares on `Ω = A √P` over `(P, Ω)` points.
pub fn fit_sqrt_power(points: &[(f64, f64)]) -> Result<SqrtPowerFit> {
    if points.len() < 3 {
        return Err(Error::InvalidParameter {
            name: "points",
            reason: format!("need at least 3, got {}", points.len()),
        });
    }
    if points.iter().any(|&(p, w)| !(p > 0.0) || !w.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "power",
            reason: "all powers must be positive".into(),
        });
    }
    let p0 = points[0].0;
    if points.iter().all(|&(p, _)| p == p0) {
        return Err(Error::DegenerateFit("all points share one power"));
    }
    let sp: f64 = points.iter().map(|&(p, _)| p).sum();
    let swp: f64 = points.iter().map(|&(p, w)| w * p.sqrt()).sum();
    let a = swp / sp;
    let ss: f64 = points.iter().map(|&(p, w)| (w - a * p.sqrt()).powi(2)).sum();
    let norm: f64 = points.iter().map(|&(_, w)| w * w).sum();
    let residual = if norm > 0.0 { (ss / norm).sqrt() } else { 0.0 };
    Ok(SqrtPowerFit { a, residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressureIndependence {
    pub mean: f64,
    /// Population standard deviation of `Ω_θ / ⟨Ω_θ⟩`.
    pub normalized_std: f64,
}

/// Spread of the torsional frequency across `(p, Ω_θ)` points.
pub fn pressure_independence(points: &[(f64, f64)]) -> Result<PressureIndependence> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "points",
            reason: format!("need at least 2, got {}", points.len()),
        });
    }
    let n = points.len() as f64;
    let mean = points.iter().map(|&(_, w)| w).sum::<f64>() / n;
    let var = points.iter().map(|&(_, w)| (w / mean - 1.0).powi(2)).sum::<f64>() / n;
    Ok(PressureIndependence {
        mean,
        normalized_std: var.sqrt(),
    })
}
