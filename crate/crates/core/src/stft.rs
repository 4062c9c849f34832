//! Gabor STFT and the fast route to a Gaussian-smoothed WVD.
//!
//! The smoothed pseudo-WVD is computed from products of frequency-shifted
//! STFT values, `G_q * S(t, f + q) * conj(S(t, f - q))`, summed over offsets
//! `q`. With a Gaussian window of spread `s = 1 / sigma_f` the product
//! already carries a Gaussian of spread `sigma_f` in frequency and `s` in
//! time; the weights `G_q` narrow the time smoothing down to `sigma_t`. The
//! narrower `sigma_t`, the wider `G_q` and the slower the transform.
//!
//! The STFT is evaluated on `M = 2 N P` bins over `[0, 2 pi)` so that every
//! lookup `f +- q` lands on the grid. Adding the same product at `f + pi`
//! cancels the odd lag differences, which leaves an exact sum over the
//! integer WVD lattice.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::kernel::{KernelGrid, KernelParams};
use crate::signal::{gaussian_taps, gaussian_window, Signal};
use crate::tfr::{ComplexTfr, Provenance, TfrMatrix};
use crate::wvd::Kernel2d;

/// Boundary tap of the analysis windows used by the fast path.
pub const WINDOW_EPS: f64 = 1e-6;

/// Relative cut-off of the spectral-correlation weights `G_q`.
pub const CORRELATION_EPS: f64 = 1e-7;

/// Truncation of the residual Gaussian in `residual_smooth_sample`.
pub const RESIDUAL_EPS: f64 = 1e-10;

/// Smallest residual variance, in grid cells, that sampled Gaussian weights
/// represent without noticeable lattice aliasing (about `exp(-pi^2 v)`).
pub const MIN_RESOLVED_VARIANCE: f64 = 2.0;

/// Bases whose time narrowing changes the lag weights by less than this over
/// the window support are computed as plain spectrograms.
pub const SPECTROGRAM_SNAP: f64 = 1e-6;

/// `for_grid` keeps `sigma_t * sigma_f` at or below this unless the base sits
/// exactly on the spectrogram limit; just below the limit the oversampling
/// needed to resolve the narrowing grows without bound.
pub const NEAR_LIMIT_PRODUCT: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StftConfig {
    /// DFT size; defaults to `2 N`, i.e. bin spacing `pi / N`.
    pub n_fft: Option<usize>,
    /// Keep all `n_fft` bins over `[0, 2 pi)` instead of the lower half.
    pub full_circle: bool,
    pub window_eps: f64,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self { n_fft: None, full_circle: false, window_eps: WINDOW_EPS }
    }
}

/// Gabor STFT with window spread `sigma` seconds, one frame every `hop`
/// samples. Entry `[t, k]` is `sum_tau w[t - tau] x[tau] exp(-i w_k tau)` with
/// the signal zero-padded on both sides; bins `w_k = pi k / N` cover `[0, pi)`.
pub fn stft_gabor(x: &Signal, sigma: f64, hop: usize) -> Result<ComplexTfr> {
    stft_gabor_with(x, sigma, hop, &StftConfig::default())
}

pub fn stft_gabor_with(x: &Signal, sigma: f64, hop: usize, cfg: &StftConfig) -> Result<ComplexTfr> {
    if hop == 0 {
        return Err(Error::Domain("hop must be at least 1".into()));
    }
    let window = gaussian_window(sigma, cfg.window_eps, x.sample_rate())?;
    let n = x.len();
    let m = cfg.n_fft.unwrap_or(2 * n);
    if window.len() > m {
        return Err(Error::WindowTooLong { taps: window.len(), frame: m });
    }
    let frames: Vec<usize> = (0..n).step_by(hop).collect();
    let bins = if cfg.full_circle { m } else { m / 2 };
    let fft = FftPlanner::new().plan_fft_forward(m);
    let rows = local_stft_rows(x.samples(), &window.taps, &fft, &frames);
    let values = frames
        .iter()
        .zip(rows)
        .flat_map(|(&t, row)| {
            // local phase reference v = tau - t -> absolute phase
            row.into_iter().take(bins).enumerate().map(move |(k, z)| {
                let w = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                z * Complex64::from_polar(1.0, -w * t as f64)
            })
        })
        .collect();
    let time = frames.iter().map(|&t| t as f64).collect();
    let freq = (0..bins).map(|k| 2.0 * std::f64::consts::PI * k as f64 / m as f64).collect();
    ComplexTfr::new(values, time, freq, sigma)
}

/// `sum_v w(v) x[t + v] exp(-i 2 pi k v / M)` for every frame `t`, full circle.
fn local_stft_rows(x: &[Complex64], taps: &[f64], fft: &Arc<dyn Fft<f64>>, frames: &[usize]) -> Vec<Vec<Complex64>> {
    let m = fft.len();
    frames.par_iter().map(|&t| local_stft_row(x, taps, fft, t as i64, &mut vec![Complex64::default(); m])).collect()
}

fn local_stft_row(
    x: &[Complex64],
    taps: &[f64],
    fft: &Arc<dyn Fft<f64>>,
    t: i64,
    buf: &mut Vec<Complex64>,
) -> Vec<Complex64> {
    let m = fft.len();
    let h = (taps.len() / 2) as i64;
    buf.iter_mut().for_each(|z| *z = Complex64::default());
    for (i, &w) in taps.iter().enumerate() {
        let v = i as i64 - h;
        let src = t + v;
        if src >= 0 && (src as usize) < x.len() {
            buf[v.rem_euclid(m as i64) as usize] = x[src as usize] * w;
        }
    }
    fft.process(buf);
    std::mem::take(buf)
}

/// Spreads of the separable Gaussian smoothing applied by `smoothed_pwvd`,
/// in samples (time) and rad/sample (frequency).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseSmoothing {
    pub sigma_t: f64,
    pub sigma_f: f64,
}

impl BaseSmoothing {
    pub fn new(sigma_t: f64, sigma_f: f64) -> Result<Self> {
        for (name, v) in [("sigma_t", sigma_t), ("sigma_f", sigma_f)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("base {name} must be positive, got {v}")));
            }
        }
        // sigma_t * sigma_f <= 1, with room for sigma_t = 1/sigma_f computed in floating point
        if sigma_t * sigma_f > 1.0 + 1e-12 {
            return Err(Error::BasePrecondition { sigma_t, limit: 1.0 / sigma_f });
        }
        Ok(Self { sigma_t, sigma_f })
    }

    /// The spectrogram limit: window spread `s`, smoothing `(s, 1/s)`.
    pub fn spectrogram(s: f64) -> Result<Self> {
        Self::new(s, 1.0 / s)
    }

    /// Spread in samples of the STFT window.
    pub fn window_spread(&self) -> f64 {
        1.0 / self.sigma_f
    }

    pub fn as_kernel(&self) -> KernelParams {
        KernelParams { mu_t: 0.0, mu_f: 0.0, sigma_t: self.sigma_t, sigma_f: self.sigma_f, rho: 0.0 }
    }

    /// Sampled density times cell area on the WVD lattice of an
    /// `n_time x n_freq` grid, for use with `cohen_smooth`.
    pub fn cohen_kernel(&self, n_time: usize, n_freq: usize) -> Result<Kernel2d> {
        let dw = std::f64::consts::PI / n_freq as f64;
        let (ht, hf) = self.as_kernel().support(1e-12);
        let rt = (ht.floor() as usize).min(n_time.saturating_sub(1));
        let rf = ((hf / dw).floor() as usize).min(n_freq.saturating_sub(1));
        let p = self.as_kernel();
        let time: Vec<f64> = (-(rt as isize)..=rt as isize).map(|c| c as f64).collect();
        let freq: Vec<f64> = (-(rf as isize)..=rf as isize).map(|j| j as f64 * dw).collect();
        let values = time.iter().flat_map(|&c| freq.iter().map(move |&w| p.density(c, w) * dw)).collect();
        Kernel2d::new(values, time.len(), freq.len())
    }

    /// A base suited to `grid` for signals of length `n`: the largest
    /// `beta * (min sigma_t, min sigma_f)` such that every residual is either
    /// exactly zero along an axis where all kernel centres sit on grid nodes,
    /// or resolved by the lattice (variance of at least
    /// `MIN_RESOLVED_VARIANCE` cells in each principal direction).
    pub fn for_grid(grid: &KernelGrid, n: usize) -> Result<Self> {
        let dw = std::f64::consts::PI / n as f64;
        let cells: Vec<KernelParams> = grid.cells().collect();
        let on_grid_t = cells.iter().all(|p| p.mu_t.fract() == 0.0);
        let on_grid_f = cells.iter().all(|p| {
            let k = p.mu_f / dw;
            (k - k.round()).abs() <= 1e-9 * k.abs().max(1.0)
        });
        let min_t = cells.iter().map(|p| p.sigma_t).fold(f64::INFINITY, f64::min);
        let min_f = cells.iter().map(|p| p.sigma_f).fold(f64::INFINITY, f64::min);
        let cap = (1.0 / (min_t * min_f)).sqrt().min(1.0);
        let ok = |beta: f64| {
            let b = Self { sigma_t: beta * min_t, sigma_f: beta * min_f };
            cells.iter().all(|p| match residual_covariance(p, &b) {
                None => false,
                Some((vt, vf, rho)) => {
                    let (vf, rho) = (vf / (dw * dw), rho / dw);
                    if rho == 0.0 {
                        let axis = |v: f64, on: bool| (v == 0.0 && on) || v >= MIN_RESOLVED_VARIANCE;
                        axis(vt, on_grid_t) && axis(vf, on_grid_f)
                    } else {
                        let mean = 0.5 * (vt + vf);
                        let lam = mean - (0.25 * (vt - vf).powi(2) + rho * rho).sqrt();
                        lam >= MIN_RESOLVED_VARIANCE
                    }
                }
            })
        };
        let beta = if ok(cap) {
            cap
        } else {
            let (mut lo, mut hi) = (0.0, cap.min((NEAR_LIMIT_PRODUCT / (min_t * min_f)).sqrt()));
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if ok(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        if !(beta > 0.0) || !ok(beta) {
            return Err(Error::InvalidKernel(
                "kernels too narrow for the lattice; no base smoothing fits under this grid".into(),
            ));
        }
        Self::new(beta * min_t, beta * min_f)
    }
}

/// Rate `alpha` of the lag-sum weight `exp(-alpha u^2)` (with
/// `u = d1 + d2` for window offsets `d1, d2`) that narrows the spectrogram's
/// time smoothing down to `base.sigma_t`. `None` in the spectrogram limit, or
/// when the weight stays within `SPECTROGRAM_SNAP` of 1 over the window.
fn narrowing_rate(base: &BaseSmoothing, half_width: usize) -> Option<f64> {
    let s = base.window_spread();
    let alpha = 0.25 * (1.0 / (base.sigma_t * base.sigma_t) - 1.0 / (s * s));
    let reach = 2.0 * half_width as f64;
    (alpha * reach * reach > SPECTROGRAM_SNAP).then_some(alpha)
}

/// Symmetric spectral-correlation weights `G_0, G_1, ...` (for `q >= 0`) on
/// an `m`-point STFT, normalised so that `G_0 + 2 sum_{q>0} G_q = 1`.
fn correlation_weights(alpha: Option<f64>, m: usize) -> Vec<f64> {
    let Some(alpha) = alpha else {
        return vec![1.0];
    };
    let c = std::f64::consts::PI.powi(2) / (alpha * (m * m) as f64);
    let q_max = ((1.0 / CORRELATION_EPS).ln() / c).sqrt().floor() as usize;
    let mut g: Vec<f64> = (0..=q_max).map(|q| (-c * (q * q) as f64).exp()).collect();
    let total = g[0] + 2.0 * g[1..].iter().sum::<f64>();
    g.iter_mut().for_each(|v| *v /= total);
    g
}

/// Oversampling factor `P` and STFT size `M = 2 N P` for the fast path.
///
/// The sampled weights `G_q` act on the lag sum `u` with period `M`, so `M`
/// must also keep the periodic copies of `exp(-alpha u^2)` below
/// `CORRELATION_EPS` across the window support `|u| <= 2 half_width`.
fn fast_geometry(n: usize, half_width: usize, alpha: Option<f64>) -> (usize, usize) {
    let tail = alpha.map_or(0.0, |a| ((1.0 / CORRELATION_EPS).ln() / a).sqrt());
    let mut p = 1;
    while 2 * n * p < 3 * half_width || ((2 * n * p) as f64) < 2.0 * half_width as f64 + tail {
        p *= 2;
    }
    (p, 2 * n * p)
}

/// Gaussian-smoothed pseudo-WVD on the full `N x N` WVD grid.
pub fn smoothed_pwvd(x: &Signal, base: &BaseSmoothing) -> Result<TfrMatrix> {
    smoothed_pwvd_on(x, base, 1, 1)
}

/// Like `smoothed_pwvd` but only on every `time_step`-th row and
/// `freq_step`-th bin of the WVD grid.
///
/// Normalised so that it matches `cohen_smooth(wvd, base.cohen_kernel(..))`
/// (sampled density times cell area) up to frequency wrap-around at `0` and
/// `pi`.
pub fn smoothed_pwvd_on(x: &Signal, base: &BaseSmoothing, time_step: usize, freq_step: usize) -> Result<TfrMatrix> {
    if time_step == 0 {
        return Err(Error::Domain("grid steps must be at least 1".into()));
    }
    let rows: Vec<i64> = (0..x.len() as i64).step_by(time_step).collect();
    smoothed_pwvd_rows(x, base, &rows, freq_step)
}

/// Smoothed pseudo-WVD at arbitrary integer times, including times outside
/// the signal where the smoothing still spreads energy.
pub fn smoothed_pwvd_rows(x: &Signal, base: &BaseSmoothing, rows: &[i64], freq_step: usize) -> Result<TfrMatrix> {
    BaseSmoothing::new(base.sigma_t, base.sigma_f)?;
    if freq_step == 0 {
        return Err(Error::Domain("grid steps must be at least 1".into()));
    }
    let n = x.len();
    let taps = gaussian_taps(base.window_spread(), WINDOW_EPS);
    let alpha = narrowing_rate(base, taps.len() / 2);
    let (p, m) = fast_geometry(n, taps.len() / 2, alpha);
    let mut g = correlation_weights(alpha, m);
    g.truncate(m / 2);
    let fft = FftPlanner::new().plan_fft_forward(m);
    let bins: Vec<usize> = (0..n).step_by(freq_step).collect();
    let norm = 1.0 / (2.0 * std::f64::consts::PI.sqrt() * base.sigma_t);
    let half = m / 2;
    let qn = g.len() - 1;
    let values: Vec<f64> = rows
        .par_iter()
        .flat_map_iter(|&t| {
            let s = local_stft_row(x.samples(), &taps, &fft, t, &mut vec![Complex64::default(); m]);
            // circular padding by qn on both sides: ext[i + qn] = s[i mod m]
            let ext: Vec<Complex64> = (0..m + 2 * qn).map(|i| s[(i + m - qn % m) % m]).collect();
            let g = &g;
            bins.iter()
                .map(move |&k| {
                    let c = k * p;
                    let (lo, hi) = (c + qn, c + half + qn);
                    let mut acc = g[0] * (ext[lo].norm_sqr() + ext[hi].norm_sqr());
                    for q in 1..=qn {
                        let a = ext[lo + q] * ext[lo - q].conj() + ext[hi + q] * ext[hi - q].conj();
                        acc += 2.0 * g[q] * a.re;
                    }
                    acc * norm
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let time = rows.iter().map(|&t| t as f64).collect();
    let freq = bins.iter().map(|&k| std::f64::consts::PI * k as f64 / n as f64).collect();
    TfrMatrix::new(values, time, freq, Provenance::Fast)
}

/// Residual covariance `(v_t, v_f, rho)` left after the base smoothing, with
/// round-off snapped to zero; `None` if it is not positive semidefinite.
pub(crate) fn residual_covariance(p: &KernelParams, base: &BaseSmoothing) -> Option<(f64, f64, f64)> {
    let tol = 1e-12;
    let snap = |full: f64, part: f64| {
        let v = full * full - part * part;
        if v.abs() <= tol * full * full {
            Some(0.0)
        } else if v < 0.0 {
            None
        } else {
            Some(v)
        }
    };
    let vt = snap(p.sigma_t, base.sigma_t)?;
    let vf = snap(p.sigma_f, base.sigma_f)?;
    let det = vt * vf - p.rho * p.rho;
    let scale = (p.sigma_t * p.sigma_f).powi(2);
    if det < -tol * scale {
        return None;
    }
    let rho = if vt == 0.0 || vf == 0.0 { 0.0 } else { p.rho };
    Some((vt, vf, rho))
}

/// Integer times at which `k_fast` needs the base TFR for `grid`: the output
/// times widened by the residual time support, limited to where the base can
/// be nonzero for a signal of length `n`.
pub fn base_rows_for(grid: &KernelGrid, base: &BaseSmoothing, n: usize) -> Result<Vec<i64>> {
    let r = (1.0 / RESIDUAL_EPS).ln().sqrt();
    let (nt, nf) = grid.shape();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..nt {
        for f in 0..nf {
            let p = grid.get(t, f);
            let (vt, _, _) = residual_covariance(&p, base).ok_or(Error::ResidualNotPsd { t, f })?;
            let h = vt.sqrt() * r + 1.0;
            lo = lo.min(p.mu_t - h);
            hi = hi.max(p.mu_t + h);
        }
    }
    let reach = (gaussian_taps(base.window_spread(), WINDOW_EPS).len() / 2) as f64;
    let lo = lo.floor().max(-reach) as i64;
    let hi = hi.ceil().min(n as f64 - 1.0 + reach) as i64;
    Ok((lo..=hi.max(lo)).collect())
}

/// Uniform axis `origin + i * step`, `len` nodes, optionally periodic.
#[derive(Debug, Clone, Copy)]
struct Axis {
    origin: f64,
    step: f64,
    len: usize,
    periodic: bool,
}

impl Axis {
    fn of(values: &[f64], what: &str, period: Option<f64>) -> Result<Self> {
        let step = if values.len() > 1 { values[1] - values[0] } else { 1.0 };
        let uniform = values.windows(2).all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step.abs().max(1.0));
        if !uniform {
            return Err(Error::ShapeMismatch(format!("base {what} axis is not uniform")));
        }
        let periodic = period.is_some_and(|p| values[0] == 0.0 && (values.len() as f64 * step - p).abs() <= 1e-9 * p);
        Ok(Self { origin: values[0], step, len: values.len(), periodic })
    }

    /// Fractional index of coordinate `u`.
    fn pos(&self, u: f64) -> f64 {
        (u - self.origin) / self.step
    }

    /// Storage index of node `j`, or `None` off a non-periodic grid.
    fn index(&self, j: i64) -> Option<usize> {
        if self.periodic {
            Some(j.rem_euclid(self.len as i64) as usize)
        } else if j >= 0 && (j as usize) < self.len {
            Some(j as usize)
        } else {
            None
        }
    }

    /// Linear interpolation nodes and weights for coordinate `u`.
    fn interp(&self, u: f64) -> [(i64, f64); 2] {
        let x = self.pos(u);
        let i = x.floor();
        let frac = x - i;
        [(i as i64, 1.0 - frac), (i as i64 + 1, frac)]
    }

    /// Nodes within `half` (coordinate units) of `u`, always including the
    /// two nodes that bracket `u`.
    fn window(&self, u: f64, half: f64) -> std::ops::RangeInclusive<i64> {
        let x = self.pos(u);
        let h = half / self.step;
        let lo = (x - h).ceil().min(x.floor()) as i64;
        let hi = (x + h).floor().max(x.ceil()) as i64;
        lo..=hi
    }

    fn coord(&self, j: i64) -> f64 {
        self.origin + j as f64 * self.step
    }
}

/// Weighted sum over the base grid for one output cell.
fn residual_cell(base_tfr: &TfrMatrix, ta: &Axis, fa: &Axis, p: &KernelParams, res: (f64, f64, f64)) -> f64 {
    let (vt, vf, rho) = res;
    let r = (1.0 / RESIDUAL_EPS).ln().sqrt();
    let at = |j: i64, l: i64| match (ta.index(j), fa.index(l)) {
        (Some(j), Some(l)) => base_tfr.get(j, l),
        _ => 0.0,
    };
    // Spreads far below one grid step act as a delta: interpolate instead.
    let vt = if vt.sqrt() < 1e-3 * ta.step { 0.0 } else { vt };
    let vf = if vf.sqrt() < 1e-3 * fa.step { 0.0 } else { vf };
    let axis_weights = |axis: &Axis, mu: f64, v: f64| -> Vec<(i64, f64)> {
        if v == 0.0 {
            return axis.interp(mu).to_vec();
        }
        let nodes: Vec<(i64, f64)> = axis
            .window(mu, v.sqrt() * r)
            .map(|j| {
                let d = axis.coord(j) - mu;
                (j, (-d * d / v).exp())
            })
            .collect();
        let total: f64 = nodes.iter().map(|n| n.1).sum();
        if total > 0.0 {
            nodes.into_iter().map(|(j, w)| (j, w / total)).collect()
        } else {
            axis.interp(mu).to_vec()
        }
    };
    if vt > 0.0 && vf > 0.0 && rho != 0.0 {
        let det = vt * vf - rho * rho;
        if det > 0.0 {
            let (a, b, c) = (vf / det, -rho / det, vt / det);
            let (mut acc, mut total) = (0.0, 0.0);
            for j in ta.window(p.mu_t, vt.sqrt() * r) {
                let dt = ta.coord(j) - p.mu_t;
                for l in fa.window(p.mu_f, vf.sqrt() * r) {
                    let df = fa.coord(l) - p.mu_f;
                    let w = (-(a * dt * dt + 2.0 * b * dt * df + c * df * df)).exp();
                    total += w;
                    acc += w * at(j, l);
                }
            }
            if total > 0.0 {
                return acc / total;
            }
        }
    }
    // separable residual (rho = 0, or a degenerate correlated one)
    let tw = axis_weights(ta, p.mu_t, vt);
    let fw = axis_weights(fa, p.mu_f, vf);
    let mut acc = 0.0;
    for &(j, wj) in &tw {
        if wj == 0.0 {
            continue;
        }
        acc += wj * fw.iter().map(|&(l, wl)| wl * at(j, l)).sum::<f64>();
    }
    acc
}

/// Complete the smoothing of `base_tfr` (the output of `smoothed_pwvd` with
/// `base`) up to each kernel of `grid`: every output cell is a Gaussian-weighted
/// sum of base values with the residual covariance `Sigma - diag(base)`,
/// centred at the kernel's `mu`.
///
/// Base rows missing from `base_tfr` count as zero, so near the signal edges
/// the base should extend past the output times (see `base_rows_for`). A
/// frequency axis covering `[0, pi)` is treated as periodic, like the WVD.
pub fn residual_smooth_sample(base_tfr: &TfrMatrix, base: &BaseSmoothing, grid: &KernelGrid) -> Result<TfrMatrix> {
    let (nt, nf) = grid.shape();
    let mut residuals = Vec::with_capacity(nt * nf);
    for t in 0..nt {
        for f in 0..nf {
            let p = grid.get(t, f);
            let r = residual_covariance(&p, base).ok_or(Error::ResidualNotPsd { t, f })?;
            residuals.push((p, r));
        }
    }
    let ta = Axis::of(base_tfr.time_axis(), "time", None)?;
    let fa = Axis::of(base_tfr.freq_axis(), "frequency", Some(std::f64::consts::PI))?;
    let values: Vec<f64> = residuals.par_iter().map(|(p, r)| residual_cell(base_tfr, &ta, &fa, p, *r)).collect();
    TfrMatrix::new(values, grid.times().to_vec(), grid.freqs().to_vec(), Provenance::Fast)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{synth, SignalKind, SignalSpec};
    use crate::wvd::{cohen_smooth, wvd_direct};
    use std::f64::consts::PI;

    #[test]
    fn tone_spectrogram_peaks_at_tone_bin() {
        let n = 256;
        let omega = 0.3 * PI;
        let x = synth(&SignalSpec::new(SignalKind::Tone { omega }, n)).unwrap();
        let s = stft_gabor(&x, 8.0, 1).unwrap().power();
        let want = (omega / (PI / n as f64)).round() as usize;
        for t in 40..216 {
            let row = s.row(t);
            let arg = (0..s.n_freq()).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
            assert_eq!(arg, want, "frame {t}");
        }
    }

    #[test]
    fn zero_signal_gives_zero_stft() {
        let x = Signal::from_real(&[0.0; 32], 1.0).unwrap();
        let s = stft_gabor(&x, 2.0, 3).unwrap();
        assert!(s.values().iter().all(|z| z.norm() == 0.0));
        assert_eq!(s.n_time(), 11);
    }

    #[test]
    fn overlong_window_rejected() {
        let x = Signal::from_real(&[1.0; 16], 1.0).unwrap();
        assert!(matches!(stft_gabor(&x, 20.0, 1), Err(Error::WindowTooLong { .. })));
        assert!(stft_gabor(&x, 1.0, 0).is_err());
    }

    #[test]
    fn absolute_phase_matches_definition() {
        let x = synth(&SignalSpec::new(SignalKind::WhiteNoise { seed: 4 }, 24)).unwrap();
        let s = stft_gabor(&x, 1.5, 5).unwrap();
        let w = gaussian_window(1.5, WINDOW_EPS, 1.0).unwrap();
        let h = w.half_width() as isize;
        for (ti, &t) in s.time_axis().iter().enumerate() {
            for (k, &om) in s.freq_axis().iter().enumerate() {
                let mut want = Complex64::default();
                for tau in 0..24isize {
                    let d = t as isize - tau;
                    if d.abs() <= h {
                        want += x.samples()[tau as usize]
                            * w.taps[(d + h) as usize]
                            * Complex64::from_polar(1.0, -om * tau as f64);
                    }
                }
                assert!((s.get(ti, k) - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn base_precondition() {
        assert!(matches!(BaseSmoothing::new(4.0, 0.5), Err(Error::BasePrecondition { .. })));
        assert!(BaseSmoothing::new(4.0, 0.25).is_ok());
        assert!(BaseSmoothing::spectrogram(3.0).is_ok());
        assert!(BaseSmoothing::new(0.0, 0.25).is_err());
    }

    #[test]
    fn correlation_weights_collapse_in_spectrogram_limit() {
        let b = BaseSmoothing::spectrogram(6.0).unwrap();
        assert_eq!(narrowing_rate(&b, 40), None);
        assert_eq!(correlation_weights(None, 128), vec![1.0]);
        let b = BaseSmoothing::new(2.0, 1.0 / 6.0).unwrap();
        let g = correlation_weights(narrowing_rate(&b, 40), 128);
        assert!(g.len() > 3);
        assert!((g[0] + 2.0 * g[1..].iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_signal_gives_zero_pwvd() {
        let x = Signal::from_real(&[0.0; 32], 1.0).unwrap();
        let b = BaseSmoothing::new(2.0, 0.3).unwrap();
        let w = smoothed_pwvd(&x, &b).unwrap();
        assert!(w.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fast_matches_cohen_smoothing_on_band_limited_pulse() {
        let n = 64;
        let x = synth(&SignalSpec::new(SignalKind::GaussianPulse { center: 30.0, spread: 5.0, omega: PI / 2.0 }, n))
            .unwrap();
        let b = BaseSmoothing::new(2.5, 0.2).unwrap();
        let fast = smoothed_pwvd(&x, &b).unwrap();
        let slow = cohen_smooth(&wvd_direct(&x).unwrap(), &b.cohen_kernel(n, n).unwrap()).unwrap();
        let err = fast.max_abs_diff(&slow).unwrap() / slow.max_abs();
        assert!(err < 1e-3, "{err}");
    }

    /// Just below the spectrogram limit the lag weight is nearly flat, and an
    /// STFT too short for it wraps the narrowing away.
    #[test]
    fn near_limit_base_keeps_its_time_spread() {
        let n = 64;
        let x = synth(&SignalSpec::new(SignalKind::GaussianPulse { center: 32.0, spread: 3.0, omega: PI / 2.0 }, n))
            .unwrap();
        for product in [0.9985, 0.99999] {
            let b = BaseSmoothing::new(5.0 * product, 0.2).unwrap();
            let fast = smoothed_pwvd(&x, &b).unwrap();
            let slow = cohen_smooth(&wvd_direct(&x).unwrap(), &b.cohen_kernel(n, n).unwrap()).unwrap();
            let err = fast.max_abs_diff(&slow).unwrap() / slow.max_abs();
            assert!(err < 1e-6, "product {product}: {err}");
        }
    }

    #[test]
    fn for_grid_stays_clear_of_the_limit() {
        let n = 64;
        let (t, f) = TfrMatrix::wvd_axes(n, 16);
        let (st, sf) = (5.608767859387993, 0.2117472288211861);
        let rec: Vec<KernelParams> =
            f.iter().map(|&w| KernelParams::new(0.0, w, st, sf, 0.07035553348700613 * st * sf).unwrap()).collect();
        let grid = KernelGrid::per_frequency(t, f, rec).unwrap();
        let b = BaseSmoothing::for_grid(&grid, n).unwrap();
        let product = b.sigma_t * b.sigma_f;
        assert!(product <= NEAR_LIMIT_PRODUCT || product == 1.0, "{product}");
    }

    #[test]
    fn zero_residual_returns_base_samples() {
        let x = synth(&SignalSpec::new(SignalKind::WhiteNoise { seed: 2 }, 32)).unwrap();
        let b = BaseSmoothing::new(2.0, 0.4).unwrap();
        let base_tfr = smoothed_pwvd(&x, &b).unwrap();
        let (t, f) = TfrMatrix::wvd_axes(32, 32);
        let rec: Vec<KernelParams> = f.iter().map(|&w| KernelParams::new(0.0, w, 2.0, 0.4, 0.0).unwrap()).collect();
        let grid = KernelGrid::per_frequency(t, f, rec).unwrap();
        let out = residual_smooth_sample(&base_tfr, &b, &grid).unwrap();
        let d = out.max_abs_diff(&base_tfr).unwrap();
        assert!(d <= 1e-12 * base_tfr.max_abs(), "{d}");
    }

    #[test]
    fn narrower_kernel_is_not_psd() {
        let x = synth(&SignalSpec::new(SignalKind::WhiteNoise { seed: 2 }, 16)).unwrap();
        let b = BaseSmoothing::new(2.0, 0.4).unwrap();
        let base_tfr = smoothed_pwvd(&x, &b).unwrap();
        let (t, f) = TfrMatrix::wvd_axes(16, 16);
        let rec = vec![KernelParams::new(0.0, 1.0, 1.5, 0.5, 0.0).unwrap(); 16];
        let grid = KernelGrid::per_frequency(t, f, rec).unwrap();
        assert!(matches!(residual_smooth_sample(&base_tfr, &b, &grid), Err(Error::ResidualNotPsd { t: 0, f: 0 })));
    }

    #[test]
    fn dominated_base_is_feasible() {
        let n = 64;
        let (t, f) = TfrMatrix::wvd_axes(n, 8);
        let rec: Vec<KernelParams> = f
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                let st = 3.0 + 0.5 * i as f64;
                KernelParams::new(0.0, w, st, 1.0 / st, 0.6).unwrap()
            })
            .collect();
        let grid = KernelGrid::per_frequency(t, f, rec.clone()).unwrap();
        let b = BaseSmoothing::for_grid(&grid, n).unwrap();
        assert!(rec.iter().all(|p| residual_covariance(p, &b).is_some()));
        assert!(b.sigma_t * b.sigma_f <= 1.0);
    }
}
