//! Quadratic-cost discrete Wigner-Ville distribution and Cohen-class smoothing.
//!
//! Row `n`, bin `k` of the distribution is
//!
//! ```text
//! W[n, k] = sum_m x[n+m] conj(x[n-m]) exp(-i 2 pi k m / N)
//! ```
//!
//! with zero padding outside `[0, N)`. The integer lag `m` stands for half the
//! continuous lag, so bin `k` sits at `omega_k = pi k / N` rad/sample and the
//! `N` bins cover `[0, pi)`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::signal::Signal;
use crate::tfr::{Provenance, TfrMatrix};

/// Scale that maps `||W||_F` onto `||x||^2`: `c_norm * ||W||_F = ||x||^2`.
///
/// Exact for signals whose DFT vanishes on bins `N/2..N` (including DC and
/// Nyquist handled as zero), because then the even- and odd-indexed samples
/// carry equal energy.
pub fn norm_constant(n: usize) -> f64 {
    (2.0 / n as f64).sqrt()
}

/// Scale that maps the frequency sum of a row onto instantaneous power:
/// `c_m * sum_k W[n, k] = |x[n]|^2`.
pub fn marginal_constant(n: usize) -> f64 {
    1.0 / n as f64
}

/// Frequency spacing of the WVD grid for a signal of length `n`.
pub fn bin_width(n: usize) -> f64 {
    std::f64::consts::PI / n as f64
}

fn lag_row(x: &[Complex64], n: usize, buf: &mut [Complex64]) {
    let len = x.len();
    buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
    let reach = n.min(len - 1 - n);
    buf[0] = x[n] * x[n].conj();
    for m in 1..=reach {
        let r = x[n + m] * x[n - m].conj();
        buf[m] = r;
        buf[len - m] = r.conj();
    }
}

/// WVD together with the largest imaginary residue of the lag-product DFTs.
pub fn wvd_with_residue(x: &Signal) -> Result<(TfrMatrix, f64)> {
    let len = x.len();
    if len < 2 {
        return Err(Error::InvalidSignal("WVD needs at least 2 samples".into()));
    }
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(len);
    let samples = x.samples();
    let rows: Vec<(Vec<f64>, f64)> = (0..len)
        .into_par_iter()
        .map(|n| {
            let mut buf = vec![Complex64::new(0.0, 0.0); len];
            lag_row(samples, n, &mut buf);
            fft.process(&mut buf);
            let residue = buf.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
            (buf.iter().map(|z| z.re).collect(), residue)
        })
        .collect();
    let residue = rows.iter().fold(0.0f64, |m, r| m.max(r.1));
    let values = rows.into_iter().flat_map(|r| r.0).collect();
    let (t, f) = TfrMatrix::wvd_axes(len, len);
    Ok((TfrMatrix::new(values, t, f, Provenance::Exact)?, residue))
}

/// Discrete Wigner-Ville distribution: `N` time rows by `N` frequency bins.
pub fn wvd_direct(x: &Signal) -> Result<TfrMatrix> {
    let (w, residue) = wvd_with_residue(x)?;
    let scale = w.max_abs();
    debug_assert!(residue <= 1e-9 * scale.max(f64::MIN_POSITIVE), "WVD residue {residue}");
    Ok(w)
}

/// A dense 2D kernel with odd dimensions, centred on its middle element.
/// Rows index time offsets, columns frequency offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2d {
    values: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl Kernel2d {
    pub fn new(values: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        if rows.is_multiple_of(2) || cols.is_multiple_of(2) {
            return Err(Error::InvalidKernel(format!("kernel dimensions {rows}x{cols} must be odd")));
        }
        if values.len() != rows * cols {
            return Err(Error::InvalidKernel(format!("{} values for a {rows}x{cols} kernel", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidKernel("non-finite kernel entry".into()));
        }
        Ok(Self { values, rows, cols })
    }

    pub fn identity() -> Self {
        Self { values: vec![1.0], rows: 1, cols: 1 }
    }

    /// Outer product of a time profile and a frequency profile.
    pub fn separable(time: &[f64], freq: &[f64]) -> Result<Self> {
        let values = time.iter().flat_map(|a| freq.iter().map(move |b| a * b)).collect();
        Self::new(values, time.len(), freq.len())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// 2D convolution of `w` with `kernel`, zero-padded at the boundaries, same
/// shape as `w`.
pub fn cohen_smooth(w: &TfrMatrix, kernel: &Kernel2d) -> Result<TfrMatrix> {
    let (nt, nf) = w.shape();
    if kernel.rows > 2 * nt || kernel.cols > 2 * nf {
        return Err(Error::InvalidKernel(format!(
            "{}x{} kernel exceeds twice the {nt}x{nf} grid",
            kernel.rows, kernel.cols
        )));
    }
    let (rt, rf) = ((kernel.rows / 2) as isize, (kernel.cols / 2) as isize);
    let values: Vec<f64> = (0..nt)
        .into_par_iter()
        .flat_map_iter(|n| {
            (0..nf).map(move |k| {
                let mut acc = 0.0;
                for a in 0..kernel.rows {
                    // out[n] += W[n - (a - rt)] * K[a]
                    let src_t = n as isize + rt - a as isize;
                    if src_t < 0 || src_t >= nt as isize {
                        continue;
                    }
                    let row = w.row(src_t as usize);
                    let krow = &kernel.values[a * kernel.cols..(a + 1) * kernel.cols];
                    for (b, kv) in krow.iter().enumerate() {
                        let src_f = k as isize + rf - b as isize;
                        if src_f >= 0 && src_f < nf as isize {
                            acc += kv * row[src_f as usize];
                        }
                    }
                }
                acc
            })
        })
        .collect();
    TfrMatrix::new(values, w.time_axis().to_vec(), w.freq_axis().to_vec(), Provenance::Smoothed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WvdReport {
    pub frobenius_norm: f64,
    pub min_value: f64,
    /// `max_n |c_m sum_k W[n,k] - |x[n]|^2|`.
    pub time_marginal_error: f64,
}

pub fn wvd_diagnostics(w: &TfrMatrix, x: &Signal) -> Result<WvdReport> {
    let n = x.len();
    if w.shape() != (n, n) {
        return Err(Error::ShapeMismatch(format!("WVD grid {:?} does not match signal length {n}", w.shape())));
    }
    let c_m = marginal_constant(n);
    let time_marginal_error =
        (0..n).map(|t| (c_m * w.row(t).iter().sum::<f64>() - x.samples()[t].norm_sqr()).abs()).fold(0.0, f64::max);
    Ok(WvdReport { frobenius_norm: w.frobenius_norm(), min_value: w.min_value(), time_marginal_error })
}
