//! Unconstrained learnable kernel parameters and the maps onto valid kernels.

use crate::error::{Error, Result};
use crate::kernel::{KernelGrid, KernelParams};
use crate::presets::{output_freqs, Preset};

/// Added to `|raw|` so spreads stay clear of zero.
pub const DEFAULT_EPS: f64 = 1e-3;

/// Largest admissible `|rho| / (sigma_t sigma_f)`. `tanh` saturates to exactly
/// 1.0 in floating point for large arguments; clamping keeps `det C > 0`.
pub const CHIRP_LIMIT: f64 = 1.0 - 1e-9;

/// Raw `(sigma_t, sigma_f, rho)` values, one triple per output frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct UnconstrainedParams {
    /// Centre frequency of each kernel; fixed during learning.
    pub mu_f: Vec<f64>,
    pub raw: Vec<[f64; 3]>,
    pub eps: f64,
}

/// `sigma = |raw| + eps`, `rho = tanh(raw_rho) sigma_t sigma_f`.
///
/// The chirpness is tied to the product of spreads rather than its square
/// root because `sigma_t`, `sigma_f` here are spreads, not variances; this is
/// what keeps `det C = sigma_t^2 sigma_f^2 (1 - tanh^2)` positive.
pub fn constrain(raw: [f64; 3], eps: f64, mu_t: f64, mu_f: f64) -> KernelParams {
    let sigma_t = raw[0].abs() + eps;
    let sigma_f = raw[1].abs() + eps;
    let c = raw[2].tanh().clamp(-CHIRP_LIMIT, CHIRP_LIMIT);
    KernelParams { mu_t, mu_f, sigma_t, sigma_f, rho: c * sigma_t * sigma_f }
}

/// Inverse of `constrain` on its range (positive branch of `|.|`).
pub fn unconstrain(p: &KernelParams, eps: f64) -> Result<[f64; 3]> {
    if !(p.sigma_t > eps && p.sigma_f > eps) {
        return Err(Error::InvalidKernel(format!(
            "spreads ({}, {}) must exceed eps {eps} to be representable",
            p.sigma_t, p.sigma_f
        )));
    }
    let c = p.rho / (p.sigma_t * p.sigma_f);
    Ok([p.sigma_t - eps, p.sigma_f - eps, c.clamp(-CHIRP_LIMIT, CHIRP_LIMIT).atanh()])
}

impl UnconstrainedParams {
    pub fn new(mu_f: Vec<f64>, raw: Vec<[f64; 3]>, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Config(format!("constraint eps must be positive, got {eps}")));
        }
        if mu_f.len() != raw.len() || raw.is_empty() {
            return Err(Error::ShapeMismatch(format!(
                "{} centre frequencies for {} raw triples",
                mu_f.len(),
                raw.len()
            )));
        }
        if raw.iter().flatten().chain(&mu_f).any(|v| !v.is_finite()) {
            return Err(Error::Config("raw parameters must be finite".into()));
        }
        Ok(Self { mu_f, raw, eps })
    }

    /// Start from a preset sampled at `n_freq` output frequencies.
    pub fn from_preset(p: &Preset, n_freq: usize, eps: f64) -> Result<Self> {
        let mut mu_f = Vec::with_capacity(n_freq);
        let mut raw = Vec::with_capacity(n_freq);
        for f in output_freqs(n_freq) {
            let k = p.params_at(f)?;
            mu_f.push(k.mu_f);
            raw.push(unconstrain(&k, eps)?);
        }
        Self::new(mu_f, raw, eps)
    }

    pub fn n_freq(&self) -> usize {
        self.raw.len()
    }

    /// Kernel of frequency row `f`, centred at time 0.
    pub fn kernel(&self, f: usize) -> KernelParams {
        constrain(self.raw[f], self.eps, 0.0, self.mu_f[f])
    }

    pub fn kernels(&self) -> Vec<KernelParams> {
        (0..self.n_freq()).map(|f| self.kernel(f)).collect()
    }

    /// Time-shared grid over output times `0..n_time`.
    pub fn grid(&self, n_time: usize) -> Result<KernelGrid> {
        KernelGrid::per_frequency((0..n_time).map(|t| t as f64).collect(), output_freqs(self.n_freq()), self.kernels())
    }

    pub(crate) fn flat(&self) -> impl Iterator<Item = f64> + '_ {
        self.raw.iter().flatten().copied()
    }

    pub(crate) fn flat_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.raw.iter_mut().flatten()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_chirp_raw_gives_zero_rho() {
        let p = constrain([2.0, 0.5, 0.0], DEFAULT_EPS, 0.0, 1.0);
        assert_eq!(p.rho, 0.0);
        assert_eq!(p.det(), (p.sigma_t * p.sigma_f).powi(2));
    }

    #[test]
    fn saturated_chirp_keeps_det_positive() {
        let p = constrain([2.0, 0.5, 50.0], DEFAULT_EPS, 0.0, 1.0);
        assert!(p.rho < p.sigma_t * p.sigma_f);
        assert!(p.det() > 0.0);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn abs_plus_eps() {
        let p = constrain([1.0, -2.0, 0.0], 1e-3, 0.0, 0.0);
        assert_eq!(p.sigma_f, 2.001);
    }

    #[test]
    fn preset_round_trip() {
        let pr = Preset::Chirpogram { sigma0: 3.0, scale_max: 2.0, chirp: 0.4 };
        let u = UnconstrainedParams::from_preset(&pr, 8, DEFAULT_EPS).unwrap();
        for (f, w) in output_freqs(8).into_iter().enumerate() {
            let want = pr.params_at(w).unwrap();
            let got = u.kernel(f);
            assert!((got.sigma_t - want.sigma_t).abs() < 1e-12);
            assert!((got.sigma_f - want.sigma_f).abs() < 1e-12);
            assert!((got.rho - want.rho).abs() < 1e-12);
            assert_eq!(got.mu_f, want.mu_f);
        }
    }
}
