//! Kernel grids that reproduce classical time-frequency representations.
//!
//! Output frequency `f_j = pi j / F` for `j < F`, output times are samples.
//! The wavelet-style presets follow the scale law `a(f) = 2^{S (1 - f/pi)}`,
//! which is 1 at `f = pi` and `2^S` at `f = 0`; the centre frequency is
//! `pi / a(f)`, i.e. `S` octaves below the top band at `f = 0`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kernel::{KernelGrid, KernelParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    /// Gabor spectrogram with window spread `sigma_t` samples.
    Spectrogram {
        sigma_t: f64,
    },
    MelSpectrogram {
        sigma_t: f64,
        scale_max: f64,
    },
    /// Constant-Q scalogram: `sigma_t = a(f) sigma0`, `sigma_f = 1 / (a(f) sigma0)`.
    Scalogram {
        sigma0: f64,
        scale_max: f64,
    },
    /// Scalogram with every time spread widened by `widen`.
    ScatteringLayer {
        sigma0: f64,
        scale_max: f64,
        widen: f64,
    },
    /// Scalogram tilted by `rho = chirp * sigma_t * sigma_f`, `|chirp| < 1`.
    Chirpogram {
        sigma0: f64,
        scale_max: f64,
        chirp: f64,
    },
}

/// Hyper-parameters by name, as read from a command line or config file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetHyper {
    pub sigma_t: f64,
    pub sigma0: f64,
    pub scale_max: f64,
    pub widen: f64,
    pub chirp: f64,
}

impl Default for PresetHyper {
    fn default() -> Self {
        Self { sigma_t: 8.0, sigma0: 4.0, scale_max: 3.0, widen: 2.0, chirp: 0.5 }
    }
}

pub const PRESET_NAMES: [&str; 5] = ["spectrogram", "mel_spectrogram", "scalogram", "scattering_layer", "chirpogram"];

/// `2^{S (1 - f / pi)}`.
pub fn scale_law(f: f64, scale_max: f64) -> f64 {
    (scale_max * (1.0 - f / PI)).exp2()
}

impl Preset {
    pub fn from_name(name: &str, h: &PresetHyper) -> Result<Self> {
        let p = match name {
            "spectrogram" => Preset::Spectrogram { sigma_t: h.sigma_t },
            "mel_spectrogram" | "mel" => Preset::MelSpectrogram { sigma_t: h.sigma_t, scale_max: h.scale_max },
            "scalogram" => Preset::Scalogram { sigma0: h.sigma0, scale_max: h.scale_max },
            "scattering_layer" | "scattering" => {
                Preset::ScatteringLayer { sigma0: h.sigma0, scale_max: h.scale_max, widen: h.widen }
            }
            "chirpogram" => Preset::Chirpogram { sigma0: h.sigma0, scale_max: h.scale_max, chirp: h.chirp },
            other => return Err(Error::UnknownPreset(other.to_string())),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Spectrogram { .. } => "spectrogram",
            Preset::MelSpectrogram { .. } => "mel_spectrogram",
            Preset::Scalogram { .. } => "scalogram",
            Preset::ScatteringLayer { .. } => "scattering_layer",
            Preset::Chirpogram { .. } => "chirpogram",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive: &[(&str, f64)] = match *self {
            Preset::Spectrogram { sigma_t } => &[("sigma_t", sigma_t)][..],
            Preset::MelSpectrogram { sigma_t, scale_max } => &[("sigma_t", sigma_t), ("S", scale_max)],
            Preset::Scalogram { sigma0, scale_max } => &[("sigma0", sigma0), ("S", scale_max)],
            Preset::ScatteringLayer { sigma0, scale_max, widen } => {
                &[("sigma0", sigma0), ("S", scale_max), ("s", widen)]
            }
            Preset::Chirpogram { sigma0, scale_max, chirp } => {
                if !(chirp.abs() < 1.0) {
                    return Err(Error::Config(format!("chirp coefficient must lie in (-1, 1), got {chirp}")));
                }
                &[("sigma0", sigma0), ("S", scale_max)]
            }
        };
        for &(name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("preset {} needs {name} > 0, got {v}", self.name())));
            }
        }
        Ok(())
    }

    /// Kernel for output frequency `f`, centred at time 0.
    pub fn params_at(&self, f: f64) -> Result<KernelParams> {
        let (mu_f, sigma_t, sigma_f, rho) = match *self {
            Preset::Spectrogram { sigma_t } => (f, sigma_t, 1.0 / sigma_t, 0.0),
            Preset::MelSpectrogram { sigma_t, scale_max } => {
                let a = scale_law(f, scale_max);
                (PI / a, sigma_t, 1.0 / (a * sigma_t), 0.0)
            }
            Preset::Scalogram { sigma0, scale_max } => {
                let a = scale_law(f, scale_max);
                (PI / a, a * sigma0, 1.0 / (a * sigma0), 0.0)
            }
            Preset::ScatteringLayer { sigma0, scale_max, widen } => {
                let a = scale_law(f, scale_max);
                (PI / a, widen * a * sigma0, 1.0 / (a * sigma0), 0.0)
            }
            Preset::Chirpogram { sigma0, scale_max, chirp } => {
                let a = scale_law(f, scale_max);
                let (st, sf) = (a * sigma0, 1.0 / (a * sigma0));
                (PI / a, st, sf, chirp * st * sf)
            }
        };
        KernelParams::new(0.0, mu_f, sigma_t, sigma_f, rho)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::from_name(s, &PresetHyper::default())
    }
}

/// Output frequencies `pi j / f_out`.
pub fn output_freqs(f_out: usize) -> Vec<f64> {
    (0..f_out).map(|j| PI * j as f64 / f_out as f64).collect()
}

/// Time-shared kernel grid of a preset over output times `0..t_out` and
/// frequencies `pi j / f_out`.
pub fn preset_params(p: &Preset, t_out: usize, f_out: usize) -> Result<KernelGrid> {
    preset_grid(p, (0..t_out).map(|t| t as f64).collect(), output_freqs(f_out))
}

pub fn preset_grid(p: &Preset, times: Vec<f64>, freqs: Vec<f64>) -> Result<KernelGrid> {
    p.validate()?;
    let records = freqs.iter().map(|&f| p.params_at(f)).collect::<Result<Vec<_>>>()?;
    KernelGrid::per_frequency(times, freqs, records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrogram_is_minimum_uncertainty_everywhere() {
        let g = preset_params(&Preset::Spectrogram { sigma_t: 3.7 }, 5, 16).unwrap();
        for p in g.cells() {
            assert!((p.sigma_t * p.sigma_f - 1.0).abs() < 1e-15);
            assert_eq!(p.rho, 0.0);
        }
        assert_eq!(g.get(3, 5).mu_t, 3.0);
        assert_eq!(g.get(3, 5).mu_f, g.freqs()[5]);
    }

    #[test]
    fn scalogram_is_constant_q() {
        let g = preset_params(&Preset::Scalogram { sigma0: 1.3, scale_max: 4.0 }, 2, 32).unwrap();
        for p in g.cells() {
            assert!((p.sigma_t * p.sigma_f - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn scale_law_endpoints() {
        assert_eq!(scale_law(PI, 3.0), 1.0);
        assert_eq!(scale_law(0.0, 3.0), 8.0);
        let s = Preset::Scalogram { sigma0: 2.0, scale_max: 3.0 };
        assert_eq!(s.params_at(PI).unwrap().mu_f, PI);
        assert_eq!(s.params_at(0.0).unwrap().mu_f, PI / 8.0);
        assert_eq!(s.params_at(0.0).unwrap().sigma_t, 16.0);
    }

    #[test]
    fn scattering_widens_time_and_chirpogram_tilts() {
        let h = PresetHyper { sigma0: 2.0, scale_max: 2.0, widen: 3.0, chirp: -0.4, ..Default::default() };
        let f = 1.0;
        let base = Preset::from_name("scalogram", &h).unwrap().params_at(f).unwrap();
        let sc = Preset::from_name("scattering_layer", &h).unwrap().params_at(f).unwrap();
        let ch = Preset::from_name("chirpogram", &h).unwrap().params_at(f).unwrap();
        assert!((sc.sigma_t - 3.0 * base.sigma_t).abs() < 1e-12);
        assert_eq!(sc.sigma_f, base.sigma_f);
        assert!((ch.rho + 0.4).abs() < 1e-12);
        let mel = Preset::from_name("mel_spectrogram", &h).unwrap().params_at(f).unwrap();
        assert_eq!(mel.sigma_t, h.sigma_t);
        assert!((mel.sigma_f - 2f64.powf(2.0 * (f / PI - 1.0)) / h.sigma_t).abs() < 1e-15);
    }

    #[test]
    fn unknown_and_invalid_presets() {
        assert!(matches!(Preset::from_name("cqt", &PresetHyper::default()), Err(Error::UnknownPreset(_))));
        let h = PresetHyper { chirp: 1.0, ..Default::default() };
        assert!(Preset::from_name("chirpogram", &h).is_err());
        assert!(Preset::Spectrogram { sigma_t: -1.0 }.validate().is_err());
        for name in PRESET_NAMES {
            assert_eq!(name.parse::<Preset>().unwrap().name(), name);
        }
    }
}
