//! The K-transform: per-cell inner products of the WVD with Gaussian kernels.
//!
//! `K[t, f] = sum_{n,k} W[n, k] Phi[t, f](n, pi k / N) * (pi / N)`, a Riemann
//! sum with explicit cell area. The discrete WVD is periodic in frequency with
//! period `pi`, so kernel support that crosses `0` or `pi` wraps around.
//! `k_fast` reaches the same values through a
//! smoothed pseudo-WVD followed by a residual Gaussian.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{index_range, KernelGrid, KernelParams, Sharing, KERNEL_EPS};
use crate::signal::Signal;
use crate::stft::{base_rows_for, residual_covariance, residual_smooth_sample, smoothed_pwvd_rows, BaseSmoothing};
use crate::tfr::{Provenance, TfrMatrix};
use crate::wvd::{bin_width, wvd_direct};

/// `<W, Phi> = sum W * Phi * cell area` for a WVD and a kernel sampled on the
/// same lattice (e.g. by `gaussian_kernel`).
pub fn wvd_inner(w: &TfrMatrix, phi: &TfrMatrix) -> Result<f64> {
    w.check_same_shape(phi)?;
    let area = bin_width(w.n_freq());
    Ok(w.values().iter().zip(phi.values()).map(|(a, b)| a * b).sum::<f64>() * area)
}

/// Unwrapped frequency bin indices within `half` of `mu`.
pub(crate) fn bin_span(mu: f64, half: f64, dw: f64) -> std::ops::RangeInclusive<i64> {
    ((mu - half) / dw).ceil() as i64..=((mu + half) / dw).floor() as i64
}

/// Inner product of `w` with the truncated density of `p`.
pub(crate) fn kernel_response(w: &TfrMatrix, p: &KernelParams) -> f64 {
    let (nt, nf) = w.shape();
    let dw = bin_width(nf);
    let (ht, hf) = p.support(KERNEL_EPS);
    let (a, b, c) = p.precision();
    let norm = dw / (std::f64::consts::PI * p.det().sqrt());
    let mut acc = 0.0;
    for n in index_range(p.mu_t, ht, 1.0, nt) {
        let dt = n as f64 - p.mu_t;
        let row = w.row(n);
        for k in bin_span(p.mu_f, hf, dw) {
            let df = k as f64 * dw - p.mu_f;
            acc += row[k.rem_euclid(nf as i64) as usize] * (-(a * dt * dt + 2.0 * b * dt * df + c * df * df)).exp();
        }
    }
    acc * norm
}

/// K-transform evaluated on a precomputed WVD.
pub fn k_exact_from_wvd(w: &TfrMatrix, grid: &KernelGrid) -> Result<TfrMatrix> {
    let (nt, nf) = grid.shape();
    let values: Vec<f64> =
        (0..nt * nf).into_par_iter().map(|i| kernel_response(w, &grid.get(i / nf, i % nf))).collect();
    TfrMatrix::new(values, grid.times().to_vec(), grid.freqs().to_vec(), Provenance::Exact)
}

/// Exact K-transform through the quadratic-cost WVD.
pub fn k_exact(x: &Signal, grid: &KernelGrid) -> Result<TfrMatrix> {
    k_exact_from_wvd(&wvd_direct(x)?, grid)
}

/// Fail early, before any transform work, if some kernel is narrower than the
/// base smoothing.
pub fn check_fast_applicable(grid: &KernelGrid, base: &BaseSmoothing) -> Result<()> {
    let (nt, nf) = grid.shape();
    for t in 0..nt {
        for f in 0..nf {
            if residual_covariance(&grid.get(t, f), base).is_none() {
                return Err(Error::ResidualNotPsd { t, f });
            }
        }
    }
    Ok(())
}

/// Fast K-transform: STFT-based smoothed pseudo-WVD, then the residual
/// Gaussian per output cell. Errors with `ResidualNotPsd` when a kernel is
/// narrower than `base`; `k_exact` handles such grids.
pub fn k_fast(x: &Signal, grid: &KernelGrid, base: &BaseSmoothing) -> Result<TfrMatrix> {
    check_fast_applicable(grid, base)?;
    let rows = base_rows_for(grid, base, x.len())?;
    let base_tfr = smoothed_pwvd_rows(x, base, &rows, 1)?;
    residual_smooth_sample(&base_tfr, base, grid)
}

/// One kernel centred at time 0, sampled on integer time offsets and
/// unwrapped WVD frequency bins.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSlice {
    pub offsets: std::ops::RangeInclusive<i64>,
    /// Unwrapped bin indices; reduce modulo the bin count to index the WVD.
    pub bins: std::ops::RangeInclusive<i64>,
    /// Row-major over `(offset, bin)`, density times cell area.
    pub values: Vec<f64>,
}

pub fn kernel_slice(p: &KernelParams, n_freq: usize) -> KernelSlice {
    let dw = bin_width(n_freq);
    let (ht, hf) = p.support(KERNEL_EPS);
    let r = ht.floor() as i64;
    let bins = bin_span(p.mu_f, hf, dw);
    let (a, b, c) = p.precision();
    let norm = dw / (std::f64::consts::PI * p.det().sqrt());
    let mut values = Vec::with_capacity((2 * r as usize + 1) * bins.clone().count());
    for off in -r..=r {
        let dt = off as f64;
        for k in bins.clone() {
            let df = k as f64 * dw - p.mu_f;
            values.push(norm * (-(a * dt * dt + 2.0 * b * dt * df + c * df * df)).exp());
        }
    }
    KernelSlice { offsets: -r..=r, bins, values }
}

/// Translation-equivariant K-transform: with kernels shared across time each
/// frequency row is a time convolution of the WVD with one kernel slice.
pub fn k_equivariant(x: &Signal, grid: &KernelGrid) -> Result<TfrMatrix> {
    let Sharing::PerFrequency(records) = grid.sharing() else {
        return Err(Error::NotTimeShared);
    };
    if let Some(t) = grid.times().iter().find(|t| t.fract() != 0.0) {
        return Err(Error::Domain(format!("equivariant mode needs integer output times, got {t}")));
    }
    let w = wvd_direct(x)?;
    let (nt_w, nf_w) = w.shape();
    let slices: Vec<KernelSlice> = records.iter().map(|p| kernel_slice(&p.with_center(0.0, p.mu_f), nf_w)).collect();
    let (nt, nf) = grid.shape();
    let times = grid.times();
    let values: Vec<f64> = (0..nt * nf)
        .into_par_iter()
        .map(|i| {
            let (t, s) = (times[i / nf] as i64, &slices[i % nf]);
            let width = s.bins.clone().count();
            let mut acc = 0.0;
            for (row, off) in s.offsets.clone().enumerate() {
                let n = t + off;
                if n < 0 || n >= nt_w as i64 {
                    continue;
                }
                let wrow = w.row(n as usize);
                let krow = &s.values[row * width..(row + 1) * width];
                acc += s.bins.clone().zip(krow).map(|(k, v)| wrow[k.rem_euclid(nf_w as i64) as usize] * v).sum::<f64>();
            }
            acc
        })
        .collect();
    TfrMatrix::new(values, times.to_vec(), grid.freqs().to_vec(), Provenance::Exact)
}
