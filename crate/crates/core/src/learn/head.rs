//! Time-pooled, log-compressed linear classifier ("linear scattering" head).

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::tfr::TfrMatrix;

pub const LOG_OFFSET: f64 = 0.1;

/// Affine map from `n_freq` pooled features to `n_classes` logits.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierHead {
    /// Row-major `n_freq x n_classes`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub log_offset: f64,
    n_freq: usize,
    n_classes: usize,
}

impl ClassifierHead {
    pub fn new(weights: Vec<f64>, bias: Vec<f64>, n_freq: usize) -> Result<Self> {
        let n_classes = bias.len();
        if n_classes < 2 || weights.len() != n_freq * n_classes {
            return Err(Error::ShapeMismatch(format!(
                "{} weights and {} biases for {n_freq} features",
                weights.len(),
                n_classes
            )));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::Config("head parameters must be finite".into()));
        }
        Ok(Self { weights, bias, log_offset: LOG_OFFSET, n_freq, n_classes })
    }

    pub fn zeros(n_freq: usize, n_classes: usize) -> Result<Self> {
        Self::new(vec![0.0; n_freq * n_classes], vec![0.0; n_classes], n_freq)
    }

    /// Weights drawn from `N(0, scale^2)`, zero bias.
    pub fn random(n_freq: usize, n_classes: usize, scale: f64, rng: &mut impl Rng) -> Result<Self> {
        let normal = Normal::new(0.0, scale).map_err(|e| Error::Config(e.to_string()))?;
        Self::new((0..n_freq * n_classes).map(|_| normal.sample(rng)).collect(), vec![0.0; n_classes], n_freq)
    }

    pub fn n_freq(&self) -> usize {
        self.n_freq
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// `log(pooled + offset)`, rejecting non-positive arguments.
    pub fn features(&self, pooled: &[f64]) -> Result<Vec<f64>> {
        pooled
            .iter()
            .enumerate()
            .map(|(row, &m)| {
                let v = m + self.log_offset;
                if v > 0.0 {
                    Ok(v.ln())
                } else {
                    Err(Error::NonPositiveFeature { row, value: v })
                }
            })
            .collect()
    }

    pub fn logits(&self, features: &[f64]) -> Vec<f64> {
        let mut out = self.bias.clone();
        for (f, &v) in features.iter().enumerate() {
            let w = &self.weights[f * self.n_classes..(f + 1) * self.n_classes];
            out.iter_mut().zip(w).for_each(|(o, w)| *o += v * w);
        }
        out
    }

    pub(crate) fn flat(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights.iter().chain(&self.bias).copied()
    }

    pub(crate) fn flat_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().chain(self.bias.iter_mut())
    }
}

/// Mean over the time axis of each frequency column. Each column is summed
/// in sorted order, so any permutation of the time axis gives the same bits.
pub fn time_pool(k: &TfrMatrix) -> Vec<f64> {
    let (nt, nf) = k.shape();
    let mut col = vec![0.0; nt];
    (0..nf)
        .map(|f| {
            col.iter_mut().enumerate().for_each(|(t, c)| *c = k.get(t, f));
            col.sort_by(f64::total_cmp);
            col.iter().sum::<f64>() / nt as f64
        })
        .collect()
}

/// Logits of a TFR: `log(mean_t K + 0.1)` per frequency, then the affine map.
pub fn forward_head(k: &TfrMatrix, head: &ClassifierHead) -> Result<Vec<f64>> {
    if k.n_freq() != head.n_freq() {
        return Err(Error::ShapeMismatch(format!(
            "TFR has {} frequency rows, head expects {}",
            k.n_freq(),
            head.n_freq()
        )));
    }
    Ok(head.logits(&head.features(&time_pool(k))?))
}

/// Softmax cross-entropy of one example, computed stably.
pub fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
    lse - logits[label]
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Index of the largest logit; ties go to the lower class index.
pub fn argmax(logits: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in logits.iter().enumerate() {
        if v > logits[best] {
            best = i;
        }
    }
    best
}
