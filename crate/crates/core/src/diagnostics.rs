//! Interference, logon-area and parameter-stability diagnostics.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernel::{KernelGrid, KernelParams};
use crate::ktransform::k_exact_from_wvd;
use crate::signal::Signal;
use crate::tfr::TfrMatrix;
use crate::wvd::wvd_direct;

/// Relative tolerance below zero still counted as nonnegative.
pub const NONNEGATIVITY_TOL: f64 = 1e-6;

/// Lipschitz constant of the standard 2D Gaussian used by `lipschitz_bound`.
pub const KAPPA: f64 = 0.2422;

/// Uncertainty-principle lower bound on the logon area.
pub const MIN_LOGON_AREA: f64 = 1.0 / (4.0 * PI);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferenceReport {
    pub min_value: f64,
    /// Fraction of entries below `-tol * max`.
    pub negative_fraction: f64,
    pub passes_nonnegativity: bool,
}

pub fn interference_report(k: &TfrMatrix) -> InterferenceReport {
    let min_value = k.min_value();
    let floor = -NONNEGATIVITY_TOL * k.max_value().max(0.0);
    let negatives = k.values().iter().filter(|&&v| v < floor).count();
    InterferenceReport {
        min_value,
        negative_fraction: negatives as f64 / k.values().len() as f64,
        passes_nonnegativity: min_value >= floor,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogonReport {
    /// Rotation that removes the chirpness.
    pub theta: f64,
    pub sigma_t_rot: f64,
    pub sigma_f_rot: f64,
    pub area: f64,
    pub passes: bool,
}

/// Rotated spreads of the matrix `[[sigma_t, rho], [rho, sigma_f]]` and the
/// area test `sigma_t' sigma_f' >= 1/(4 pi)`.
///
/// The comparison allows 4 ulps of slack so that the boundary case
/// `sigma_t = sigma_f = 1/(2 sqrt(pi))`, whose product rounds one ulp below
/// `1/(4 pi)`, lands on the threshold.
pub fn logon_area(p: &KernelParams) -> Result<LogonReport> {
    p.validate()?;
    let (st, sf, rho) = (p.sigma_t, p.sigma_f, p.rho);
    let theta = if rho == 0.0 {
        0.0
    } else if st == sf {
        // arctan(+-inf) / 2
        PI / 4.0 * rho.signum()
    } else {
        (2.0 * rho / (st - sf)).atan() / 2.0
    };
    let (c, s) = (theta.cos(), theta.sin());
    let sigma_t_rot = st * c * c + 2.0 * rho * c * s + sf * s * s;
    let sigma_f_rot = st * s * s - 2.0 * rho * c * s + sf * c * c;
    let area = sigma_t_rot * sigma_f_rot;
    let passes = area >= MIN_LOGON_AREA * (1.0 - 4.0 * f64::EPSILON);
    Ok(LogonReport { theta, sigma_t_rot, sigma_f_rot, area, passes })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzReport {
    /// Frobenius norm `||K_1 - K_2||_F` over the output cells.
    pub lhs: f64,
    /// `kappa ||x||^2 (sum ||theta - theta'||^2)^{-1/2}`.
    pub rhs: f64,
    /// `sum ||theta - theta'||^2` over the output cells.
    pub param_distance_sq: f64,
    pub holds: bool,
}

fn theta_vec(p: &KernelParams) -> [f64; 5] {
    [p.mu_t, p.mu_f, p.sigma_t, p.sigma_f, p.rho]
}

/// Compare the change of the transform between two kernel grids with the
/// parameter-distance bound. Note the bound decays with the parameter
/// distance, so it is loosest for nearby grids.
pub fn lipschitz_bound(g1: &KernelGrid, g2: &KernelGrid, x: &Signal) -> Result<LipschitzReport> {
    if g1.shape() != g2.shape() || g1.times() != g2.times() || g1.freqs() != g2.freqs() {
        return Err(Error::ShapeMismatch(format!("kernel grids {:?} and {:?} differ", g1.shape(), g2.shape())));
    }
    let w = wvd_direct(x)?;
    let k1 = k_exact_from_wvd(&w, g1)?;
    let k2 = k_exact_from_wvd(&w, g2)?;
    let lhs = k1.values().iter().zip(k2.values()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let param_distance_sq: f64 = g1
        .cells()
        .zip(g2.cells())
        .map(|(a, b)| theta_vec(&a).iter().zip(theta_vec(&b)).map(|(u, v)| (u - v) * (u - v)).sum::<f64>())
        .sum::<f64>();
    let rhs = if param_distance_sq > 0.0 { KAPPA * x.energy() / param_distance_sq.sqrt() } else { f64::INFINITY };
    Ok(LipschitzReport { lhs, rhs, param_distance_sq, holds: lhs <= rhs * (1.0 + 1e-6) })
}
