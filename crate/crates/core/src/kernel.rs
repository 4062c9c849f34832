//! Gaussian kernel parameterisation `theta(t, f) = (mu_t, mu_f, sigma_t, sigma_f, rho)`.
//!
//! A kernel with spreads `sigma_t`, `sigma_f` and chirpness `rho` is the
//! density
//!
//! ```text
//! Phi(tau, omega) = exp(-d' C^-1 d) / (pi sqrt(det C)),   C = [[sigma_t^2, rho], [rho, sigma_f^2]]
//! ```
//!
//! with `d = (tau - mu_t, omega - mu_f)`, i.e. a normal density of covariance
//! `C / 2`. In this convention the WVD of the window `exp(-u^2 / (2 s^2))` is
//! exactly the kernel with spreads `(s, 1/s)`, so a spectrogram with window
//! spread `s` has `sigma_t * sigma_f = 1`. Time is in samples, frequency in
//! rad/sample.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tfr::{Provenance, TfrMatrix};

/// Truncation tolerance applied to each kernel axis.
pub const KERNEL_EPS: f64 = 1e-8;

/// Smallest admissible `det C` relative to `sigma_t^2 sigma_f^2`.
pub const MIN_RELATIVE_DET: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub mu_t: f64,
    pub mu_f: f64,
    pub sigma_t: f64,
    pub sigma_f: f64,
    pub rho: f64,
}

impl KernelParams {
    pub fn new(mu_t: f64, mu_f: f64, sigma_t: f64, sigma_f: f64, rho: f64) -> Result<Self> {
        let p = Self { mu_t, mu_f, sigma_t, sigma_f, rho };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.mu_t, self.mu_f, self.sigma_t, self.sigma_f, self.rho];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidKernel(format!("non-finite parameter in {self:?}")));
        }
        if !(self.sigma_t > 0.0 && self.sigma_f > 0.0) {
            return Err(Error::InvalidKernel(format!(
                "spreads must be positive (sigma_t {}, sigma_f {})",
                self.sigma_t, self.sigma_f
            )));
        }
        let scale = (self.sigma_t * self.sigma_f).powi(2);
        if !(self.det() > MIN_RELATIVE_DET * scale) {
            return Err(Error::InvalidKernel(format!(
                "covariance not positive definite: det {} with rho {}",
                self.det(),
                self.rho
            )));
        }
        Ok(())
    }

    /// `det C = sigma_t^2 sigma_f^2 - rho^2`.
    pub fn det(&self) -> f64 {
        let s = self.sigma_t * self.sigma_f;
        (s - self.rho) * (s + self.rho)
    }

    /// Coefficients `(a, b, c)` of `d' C^-1 d = a dt^2 + 2 b dt dw + c dw^2`.
    pub fn precision(&self) -> (f64, f64, f64) {
        let det = self.det();
        (self.sigma_f * self.sigma_f / det, -self.rho / det, self.sigma_t * self.sigma_t / det)
    }

    pub fn density(&self, tau: f64, omega: f64) -> f64 {
        let (a, b, c) = self.precision();
        let (dt, dw) = (tau - self.mu_t, omega - self.mu_f);
        let q = a * dt * dt + 2.0 * b * dt * dw + c * dw * dw;
        (-q).exp() / (std::f64::consts::PI * self.det().sqrt())
    }

    /// Half-widths in time and frequency beyond which every axis marginal is
    /// below `eps` of its peak.
    pub fn support(&self, eps: f64) -> (f64, f64) {
        let r = (1.0 / eps).ln().sqrt();
        (self.sigma_t * r, self.sigma_f * r)
    }

    pub fn with_center(mut self, mu_t: f64, mu_f: f64) -> Self {
        self.mu_t = mu_t;
        self.mu_f = mu_f;
        self
    }
}

/// How parameters are shared across output cells.
#[derive(Debug, Clone, PartialEq)]
pub enum Sharing {
    /// One record per output cell, row-major (time, frequency).
    PerCell(Vec<KernelParams>),
    /// One record per output frequency. Time centres follow the output time
    /// axis (`mu_t = t`), which makes the transform translation-equivariant.
    PerFrequency(Vec<KernelParams>),
}

/// The family of kernels `Phi[t, f]` over an output grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelGrid {
    times: Vec<f64>,
    freqs: Vec<f64>,
    sharing: Sharing,
}

impl KernelGrid {
    pub fn per_cell(times: Vec<f64>, freqs: Vec<f64>, params: Vec<KernelParams>) -> Result<Self> {
        if params.len() != times.len() * freqs.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} kernel records for a {}x{} grid",
                params.len(),
                times.len(),
                freqs.len()
            )));
        }
        Self::build(times, freqs, Sharing::PerCell(params))
    }

    pub fn per_frequency(times: Vec<f64>, freqs: Vec<f64>, params: Vec<KernelParams>) -> Result<Self> {
        if params.len() != freqs.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} kernel records for {} frequencies",
                params.len(),
                freqs.len()
            )));
        }
        Self::build(times, freqs, Sharing::PerFrequency(params))
    }

    fn build(times: Vec<f64>, freqs: Vec<f64>, sharing: Sharing) -> Result<Self> {
        if times.is_empty() || freqs.is_empty() {
            return Err(Error::ShapeMismatch("empty output grid".into()));
        }
        // Reuse the axis checks of TfrMatrix.
        TfrMatrix::zeros(times.clone(), freqs.clone(), Provenance::Exact)?;
        let records = match &sharing {
            Sharing::PerCell(p) | Sharing::PerFrequency(p) => p,
        };
        for p in records {
            p.validate()?;
        }
        Ok(Self { times, freqs, sharing })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.times.len(), self.freqs.len())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn sharing(&self) -> &Sharing {
        &self.sharing
    }

    pub fn is_time_shared(&self) -> bool {
        matches!(self.sharing, Sharing::PerFrequency(_))
    }

    /// Parameters of output cell `(t, f)` with centres resolved.
    pub fn get(&self, t: usize, f: usize) -> KernelParams {
        match &self.sharing {
            Sharing::PerCell(p) => p[t * self.freqs.len() + f],
            Sharing::PerFrequency(p) => {
                let q = p[f];
                q.with_center(self.times[t], q.mu_f)
            }
        }
    }

    /// Expand a time-shared grid into explicit per-cell records.
    pub fn to_per_cell(&self) -> Self {
        let (nt, nf) = self.shape();
        let params = (0..nt).flat_map(|t| (0..nf).map(move |f| (t, f))).map(|(t, f)| self.get(t, f)).collect();
        Self { times: self.times.clone(), freqs: self.freqs.clone(), sharing: Sharing::PerCell(params) }
    }

    pub fn cells(&self) -> impl Iterator<Item = KernelParams> + '_ {
        let (nt, nf) = self.shape();
        (0..nt).flat_map(move |t| (0..nf).map(move |f| self.get(t, f)))
    }

    /// CSV with columns `t,f,mu_t,mu_f,sigma_t,sigma_f,rho`, one line per cell.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = String::new();
        let mode = if self.is_time_shared() { "per-frequency" } else { "per-cell" };
        writeln!(out, "# sharing={mode}").unwrap();
        out.push_str("t,f,mu_t,mu_f,sigma_t,sigma_f,rho\n");
        for (ti, t) in self.times.iter().enumerate() {
            for (fi, f) in self.freqs.iter().enumerate() {
                let p = self.get(ti, fi);
                writeln!(
                    out,
                    "{t:.16e},{f:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    p.mu_t, p.mu_f, p.sigma_t, p.sigma_f, p.rho
                )
                .unwrap();
            }
        }
        fs::write(path, out)?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bad = |msg: String| Error::Format { what: "kernel grid", path: path.to_path_buf(), msg };
        let text = fs::read_to_string(path)?;
        let mut shared = false;
        let mut rows: Vec<[f64; 7]> = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(c) = line.strip_prefix('#') {
                shared = c.trim() == "sharing=per-frequency";
                continue;
            }
            if line.starts_with("t,") {
                continue;
            }
            let cells: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>().map_err(|e| bad(format!("{c:?}: {e}"))))
                .collect::<Result<_>>()?;
            let row: [f64; 7] =
                cells.try_into().map_err(|v: Vec<f64>| bad(format!("expected 7 columns, got {}", v.len())))?;
            rows.push(row);
        }
        let mut times: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let mut freqs: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        for axis in [&mut times, &mut freqs] {
            axis.sort_by(f64::total_cmp);
            axis.dedup();
        }
        let (nt, nf) = (times.len(), freqs.len());
        if rows.len() != nt * nf {
            return Err(bad(format!("{} rows do not tile a {nt}x{nf} grid", rows.len())));
        }
        let mut cells = vec![None; nt * nf];
        for r in &rows {
            let ti = times.binary_search_by(|v| v.total_cmp(&r[0])).unwrap();
            let fi = freqs.binary_search_by(|v| v.total_cmp(&r[1])).unwrap();
            cells[ti * nf + fi] =
                Some(KernelParams { mu_t: r[2], mu_f: r[3], sigma_t: r[4], sigma_f: r[5], rho: r[6] });
        }
        let cells: Vec<KernelParams> =
            cells.into_iter().collect::<Option<_>>().ok_or_else(|| bad("duplicate cell".into()))?;
        if shared {
            let per_f = cells[..nf].iter().map(|p| p.with_center(0.0, p.mu_f)).collect();
            let grid = Self::per_frequency(times, freqs, per_f)?;
            if grid.cells().zip(&cells).any(|(a, b)| a != *b) {
                return Err(bad("per-frequency grid with time-varying parameters".into()));
            }
            Ok(grid)
        } else {
            Self::per_cell(times, freqs, cells)
        }
    }
}

/// Bounds of the kernel support intersected with an axis `0..len` of spacing
/// `step` starting at 0.
pub(crate) fn index_range(center: f64, half: f64, step: f64, len: usize) -> std::ops::Range<usize> {
    let lo = ((center - half) / step).ceil().max(0.0);
    let hi = ((center + half) / step).floor() + 1.0;
    let hi = hi.min(len as f64);
    if hi <= lo {
        0..0
    } else {
        lo as usize..hi as usize
    }
}

/// Sampled kernel density on the WVD axes of an `n_time x n_freq` grid (time
/// step 1 sample, frequency step `pi / n_freq`), zero outside the truncated
/// support. Frequency support wraps with the WVD's period `pi`.
pub fn gaussian_kernel(p: &KernelParams, n_time: usize, n_freq: usize) -> Result<TfrMatrix> {
    p.validate()?;
    let dw = std::f64::consts::PI / n_freq as f64;
    let (ht, hf) = p.support(KERNEL_EPS);
    let mut values = vec![0.0; n_time * n_freq];
    // the WVD is pi-periodic in frequency, so support past 0 or pi wraps
    let bins = ((p.mu_f - hf) / dw).ceil() as i64..=((p.mu_f + hf) / dw).floor() as i64;
    for n in index_range(p.mu_t, ht, 1.0, n_time) {
        for k in bins.clone() {
            values[n * n_freq + k.rem_euclid(n_freq as i64) as usize] += p.density(n as f64, k as f64 * dw);
        }
    }
    let (t, f) = TfrMatrix::wvd_axes(n_time, n_freq);
    TfrMatrix::new(values, t, f, Provenance::Other("kernel".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rejects_non_positive_definite() {
        assert!(KernelParams::new(0.0, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(KernelParams::new(0.0, 0.0, 0.0, 1.0, 0.0).is_err());
        assert!(KernelParams::new(0.0, 0.0, 2.0, 0.5, 0.99).is_ok());
        assert!(KernelParams::new(f64::NAN, 0.0, 2.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn uncorrelated_kernel_is_separable() {
        let p = KernelParams::new(20.0, 1.3, 4.0, 0.2, 0.0).unwrap();
        let g = gaussian_kernel(&p, 48, 64).unwrap();
        let dw = PI / 64.0;
        let pt = |n: f64| (-(n - 20.0f64).powi(2) / 16.0).exp() / (PI.sqrt() * 4.0);
        let pf = |w: f64| (-(w - 1.3f64).powi(2) / 0.04).exp() / (PI.sqrt() * 0.2);
        let mut worst = 0.0f64;
        for n in 0..48 {
            for k in 0..64 {
                let v = g.get(n, k);
                if v != 0.0 {
                    worst = worst.max((v - pt(n as f64) * pf(k as f64 * dw)).abs());
                }
            }
        }
        assert!(worst <= 1e-12, "{worst}");
    }

    #[test]
    fn riemann_mass_is_one_inside_grid() {
        let dw = PI / 128.0;
        for rho in [0.0, 0.3, -0.5] {
            let p = KernelParams::new(64.0, 1.5, 5.0, 0.25, rho).unwrap();
            let g = gaussian_kernel(&p, 128, 128).unwrap();
            let mass: f64 = g.values().iter().sum::<f64>() * dw;
            assert!((mass - 1.0).abs() < 1e-3, "rho {rho}: {mass}");
        }
    }

    #[test]
    fn positive_chirpness_tilts_level_sets_upward() {
        let p = KernelParams::new(32.0, PI / 2.0, 6.0, 0.3, 1.2).unwrap();
        let g = gaussian_kernel(&p, 64, 128).unwrap();
        // ridge frequency per time row increases with time
        let ridge: Vec<usize> = (26..=38)
            .map(|n| {
                let row = g.row(n);
                (0..128).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap()
            })
            .collect();
        assert!(ridge.windows(2).all(|w| w[1] >= w[0]));
        assert!(ridge.last() > ridge.first());
        // slope matches the conditional mean rho / sigma_t^2
        let slope = (ridge[12] as f64 - ridge[0] as f64) * (PI / 128.0) / 12.0;
        assert!((slope - 1.2 / 36.0).abs() < 0.01, "{slope}");
    }

    #[test]
    fn csv_round_trip_both_sharing_modes() {
        let dir = tempfile::tempdir().unwrap();
        let times = vec![0.0, 4.0, 8.0];
        let freqs = vec![0.5, 1.0];
        let rec = |f: f64| KernelParams::new(0.0, f, 3.0, 0.4, 0.1).unwrap();
        let shared = KernelGrid::per_frequency(times.clone(), freqs.clone(), vec![rec(0.5), rec(1.0)]).unwrap();
        let p = dir.path().join("k.csv");
        shared.write_csv(&p).unwrap();
        assert_eq!(KernelGrid::read_csv(&p).unwrap(), shared);
        let cell = shared.to_per_cell();
        cell.write_csv(&p).unwrap();
        assert_eq!(KernelGrid::read_csv(&p).unwrap(), cell);
    }
}
