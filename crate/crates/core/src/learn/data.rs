//! Labelled signal sets and the synthetic up-/down-chirp task.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::signal::Signal;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub signals: Vec<Signal>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl LabeledSet {
    pub fn new(signals: Vec<Signal>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::Config(format!("need at least 2 classes, got {n_classes}")));
        }
        if signals.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!("{} signals, {} labels", signals.len(), labels.len())));
        }
        if let Some(l) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::Config(format!("label {l} out of range for {n_classes} classes")));
        }
        Ok(Self { signals, labels, n_classes })
    }

    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }

    /// Stratified split: `n_train` examples (equal share per class) go to
    /// the first set, the rest to the second. Order is shuffled by `seed`.
    pub fn split(&self, n_train: usize, seed: u64) -> Result<(LabeledSet, LabeledSet)> {
        if !n_train.is_multiple_of(self.n_classes) {
            return Err(Error::Config(format!("train size {n_train} is not a multiple of {} classes", self.n_classes)));
        }
        let per_class = n_train / self.n_classes;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for c in 0..self.n_classes {
            let mut idx: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i] == c).collect();
            if idx.len() < per_class {
                return Err(Error::Config(format!("class {c} has {} examples, need {per_class}", idx.len())));
            }
            idx.shuffle(&mut rng);
            train.extend_from_slice(&idx[..per_class]);
            test.extend_from_slice(&idx[per_class..]);
        }
        train.shuffle(&mut rng);
        test.shuffle(&mut rng);
        Ok((self.subset(&train)?, self.subset(&test)?))
    }

    pub fn subset(&self, idx: &[usize]) -> Result<LabeledSet> {
        LabeledSet::new(
            idx.iter().map(|&i| self.signals[i].clone()).collect(),
            idx.iter().map(|&i| self.labels[i]).collect(),
            self.n_classes,
        )
    }
}

/// Up-chirp (label 0) versus down-chirp (label 1). Each example sweeps
/// between a random low and high frequency under a decaying envelope, so the
/// start of the sweep carries more energy, plus complex white noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ChirpTask {
    pub len: usize,
    pub low: (f64, f64),
    pub high: (f64, f64),
    /// Envelope `exp(-decay n / len)`.
    pub decay: f64,
    pub noise: f64,
}

impl Default for ChirpTask {
    fn default() -> Self {
        use std::f64::consts::PI;
        Self { len: 512, low: (0.15 * PI, 0.3 * PI), high: (0.55 * PI, 0.75 * PI), decay: 2.0, noise: 0.3 }
    }
}

impl ChirpTask {
    /// `n` examples alternating between the two classes.
    pub fn generate(&self, n: usize, seed: u64) -> Result<LabeledSet> {
        if self.len < 2 || n == 0 {
            return Err(Error::Config(format!("chirp task needs len >= 2 and n > 0 (len {}, n {n})", self.len)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, self.noise.max(0.0)).map_err(|e| Error::Config(e.to_string()))?;
        let mut signals = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let label = i % 2;
            let lo = rng.random_range(self.low.0..=self.low.1);
            let hi = rng.random_range(self.high.0..=self.high.1);
            let (start, end) = if label == 0 { (lo, hi) } else { (hi, lo) };
            let phase0 = rng.random_range(0.0..std::f64::consts::TAU);
            let rate = (end - start) / (2.0 * (self.len - 1) as f64);
            let samples = (0..self.len)
                .map(|k| {
                    let t = k as f64;
                    let env = (-self.decay * t / self.len as f64).exp();
                    let noise = Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
                    Complex64::from_polar(env, phase0 + start * t + rate * t * t) + noise
                })
                .collect();
            signals.push(Signal::new(samples, 1.0)?);
            labels.push(label);
        }
        LabeledSet::new(signals, labels, 2)
    }
}
