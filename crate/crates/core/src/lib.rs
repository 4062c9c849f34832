//! Learnable Gaussian-kernel Wigner-Ville time-frequency representations.
//!
//! The crate computes the discrete Wigner-Ville distribution (WVD), smooths
//! it with per-cell Gaussian kernels (the K-transform), evaluates the same
//! transform through a fast STFT route, and learns kernel parameters with a
//! small classifier head.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod kernel;
pub mod ktransform;
pub mod learn;
pub mod presets;
pub mod signal;
pub mod stft;
pub mod tfr;
pub mod wvd;

pub use error::{Error, Result};
pub use kernel::{gaussian_kernel, KernelGrid, KernelParams, Sharing};
pub use ktransform::{k_equivariant, k_exact, k_fast};
pub use presets::{preset_params, Preset, PresetHyper};
pub use signal::{analytic, gaussian_window, synth, Signal, SignalKind, SignalSpec};
pub use stft::{residual_smooth_sample, smoothed_pwvd, stft_gabor, BaseSmoothing};
pub use tfr::{ComplexTfr, Provenance, TfrMatrix};
pub use wvd::{cohen_smooth, wvd_direct, Kernel2d};
