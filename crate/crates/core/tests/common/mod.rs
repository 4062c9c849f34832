#![allow(dead_code)]

use std::f64::consts::PI;

use ktfr::{synth, Signal, SignalKind, SignalSpec};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Analytic band noise on `[pi/4, 3pi/4]` under a Hann^2 envelope, so the
/// signal fades out before both edges.
pub fn tapered_band_noise(n: usize, seed: u64) -> Signal {
    let x = synth(&SignalSpec::new(SignalKind::BandNoise { seed, lo: PI / 4.0, hi: 3.0 * PI / 4.0 }, n)).unwrap();
    let samples = x
        .samples()
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let h = (PI * i as f64 / (n - 1) as f64).sin().powi(2);
            z * h * h
        })
        .collect();
    Signal::new(samples, 1.0).unwrap()
}

/// Complex white noise on `[lo, hi)`, exactly zero elsewhere.
pub fn compact_noise(n: usize, lo: usize, hi: usize, seed: u64) -> Signal {
    let mut r = rng(seed);
    let samples = (0..n)
        .map(|i| {
            if (lo..hi).contains(&i) {
                let re: f64 = StandardNormal.sample(&mut r);
                let im: f64 = StandardNormal.sample(&mut r);
                Complex64::new(re, im)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    Signal::new(samples, 1.0).unwrap()
}

pub fn uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    r.random_range(lo..hi)
}

/// `max |a - b| / max |b|`.
pub fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let d = a.iter().zip(b).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
    if scale == 0.0 {
        d
    } else {
        d / scale
    }
}
