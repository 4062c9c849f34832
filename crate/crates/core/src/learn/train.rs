//! Gradient training of kernel parameters and head with Adam.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ktransform::{kernel_slice, KernelSlice};
use crate::presets::Preset;

use super::data::LabeledSet;
use super::head::{argmax, cross_entropy, softmax, ClassifierHead};
use super::params::{UnconstrainedParams, DEFAULT_EPS};
use super::pooled::PooledWvd;

/// Loss above which training is declared diverged.
pub const DIVERGENCE_LOSS: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GradientMode {
    /// Central differences through the whole pipeline with step
    /// `h (1 + |p|)` for every parameter.
    Numeric { h: f64 },
    /// Closed-form head gradient; kernel parameters stay frozen.
    AnalyticHead,
}

impl Default for GradientMode {
    fn default() -> Self {
        GradientMode::Numeric { h: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_opt: f64,
    pub mode: GradientMode,
    /// Examples drawn (stratified) into the training split.
    pub n_train: usize,
    /// Standard deviation of the initial head weights.
    pub head_init_scale: f64,
    /// Edge rows cached per signal; bounds the kernel time support.
    pub edge_depth: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 200,
            batch_size: 20,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps_opt: 1e-8,
            mode: GradientMode::default(),
            n_train: 200,
            head_init_scale: 0.01,
            edge_depth: 64,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be finite and >= 0, got {}", self.learning_rate));
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive".into());
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.eps_opt > 0.0) {
            return bad(format!("invalid Adam constants ({}, {}, {})", self.beta1, self.beta2, self.eps_opt));
        }
        if let GradientMode::Numeric { h } = self.mode {
            if !(h > 0.0 && h.is_finite()) {
                return bad(format!("finite-difference step must be positive, got {h}"));
            }
        }
        Ok(())
    }

    /// One-line `key=value` summary, used in checkpoint headers.
    pub fn summary(&self) -> String {
        let mode = match self.mode {
            GradientMode::Numeric { h } => format!("numeric:{h:?}"),
            GradientMode::AnalyticHead => "analytic-head".into(),
        };
        format!(
            "lr={:?} epochs={} batch_size={} seed={} beta1={:?} beta2={:?} eps_opt={:?} mode={mode} n_train={}",
            self.learning_rate,
            self.epochs,
            self.batch_size,
            self.seed,
            self.beta1,
            self.beta2,
            self.eps_opt,
            self.n_train
        )
    }
}

/// Kernel parameters plus classifier head.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub kernels: UnconstrainedParams,
    pub head: ClassifierHead,
}

impl Model {
    pub fn new(kernels: UnconstrainedParams, head: ClassifierHead) -> Result<Self> {
        if kernels.n_freq() != head.n_freq() {
            return Err(Error::ShapeMismatch(format!(
                "{} kernels for a head over {} features",
                kernels.n_freq(),
                head.n_freq()
            )));
        }
        Ok(Self { kernels, head })
    }

    pub fn n_params(&self) -> usize {
        3 * self.kernels.n_freq() + self.head.weights.len() + self.head.bias.len()
    }

    /// Kernel raws, then head weights (row-major), then biases.
    pub fn flat(&self) -> Vec<f64> {
        self.kernels.flat().chain(self.head.flat()).collect()
    }

    fn set_flat(&mut self, values: &[f64]) {
        let targets = self.kernels.flat_mut().chain(self.head.flat_mut());
        targets.zip(values).for_each(|(t, v)| *t = *v);
    }

    /// Kernel slices on the lattice of an `n`-sample signal.
    pub fn slices(&self, n: usize) -> Vec<KernelSlice> {
        self.kernels.kernels().iter().map(|p| kernel_slice(p, n)).collect()
    }

    /// Pooled K rows of one cached signal.
    pub fn pooled(&self, cache: &PooledWvd) -> Result<Vec<f64>> {
        pooled_with(&self.slices(cache.len()), cache)
    }

    pub fn logits(&self, cache: &PooledWvd) -> Result<Vec<f64>> {
        self.logits_with(&self.slices(cache.len()), cache)
    }

    fn logits_with(&self, slices: &[KernelSlice], cache: &PooledWvd) -> Result<Vec<f64>> {
        Ok(self.head.logits(&self.head.features(&pooled_with(slices, cache)?)?))
    }
}

fn pooled_with(slices: &[KernelSlice], cache: &PooledWvd) -> Result<Vec<f64>> {
    slices.iter().map(|s| cache.pooled_slice(s)).collect()
}

/// How the model is initialised.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Preset { preset: Preset, n_freq: usize },
    Params(UnconstrainedParams),
}

impl Init {
    fn kernels(&self) -> Result<UnconstrainedParams> {
        match self {
            Init::Preset { preset, n_freq } => UnconstrainedParams::from_preset(preset, *n_freq, DEFAULT_EPS),
            Init::Params(u) => Ok(u.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    pub grad: Vec<f64>,
}

/// A cached example.
pub type Example<'a> = (&'a PooledWvd, usize);

fn mean_loss(head: &ClassifierHead, features: &[Vec<f64>], labels: &[usize]) -> f64 {
    features.iter().zip(labels).map(|(f, &l)| cross_entropy(&head.logits(f), l)).sum::<f64>() / labels.len() as f64
}

fn check_finite(loss: f64, index: Option<usize>) -> Result<f64> {
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(Error::NonFiniteLoss { index })
    }
}

/// Mean softmax cross-entropy over `batch` and its gradient with respect to
/// `model.flat()`.
pub fn loss_and_grad(model: &Model, batch: &[Example<'_>], mode: GradientMode) -> Result<LossGrad> {
    if batch.is_empty() {
        return Err(Error::EmptyData("loss over an empty batch".into()));
    }
    let n = batch[0].0.len();
    let slices = model.slices(n);
    let pooled: Vec<Vec<f64>> = batch.par_iter().map(|(c, _)| pooled_with(&slices, c)).collect::<Result<_>>()?;
    let labels: Vec<usize> = batch.iter().map(|&(_, l)| l).collect();
    let features: Vec<Vec<f64>> = pooled.iter().map(|p| model.head.features(p)).collect::<Result<_>>()?;
    let loss = check_finite(mean_loss(&model.head, &features, &labels), None)?;
    let n_kernel = 3 * model.kernels.n_freq();
    let grad = match mode {
        GradientMode::AnalyticHead => {
            let nc = model.head.n_classes();
            let mut grad = vec![0.0; model.n_params()];
            let b = batch.len() as f64;
            for (f, &l) in features.iter().zip(&labels) {
                let mut delta = softmax(&model.head.logits(f));
                delta[l] -= 1.0;
                for (j, fv) in f.iter().enumerate() {
                    for c in 0..nc {
                        grad[n_kernel + j * nc + c] += fv * delta[c] / b;
                    }
                }
                let bias = n_kernel + f.len() * nc;
                for c in 0..nc {
                    grad[bias + c] += delta[c] / b;
                }
            }
            grad
        }
        GradientMode::Numeric { h } => {
            let base = model.flat();
            (0..model.n_params())
                .into_par_iter()
                .map(|i| {
                    let step = h * (1.0 + base[i].abs());
                    let eval = |sign: f64| -> Result<f64> {
                        let mut m = model.clone();
                        let mut theta = base.clone();
                        theta[i] += sign * step;
                        m.set_flat(&theta);
                        let l = if i < n_kernel {
                            let row = i / 3;
                            let s = kernel_slice(&m.kernels.kernel(row), n);
                            let mut feats = features.clone();
                            for (fv, (c, _)) in feats.iter_mut().zip(batch) {
                                fv[row] = m.head.features(&[c.pooled_slice(&s)?])?[0];
                            }
                            mean_loss(&m.head, &feats, &labels)
                        } else {
                            mean_loss(&m.head, &features, &labels)
                        };
                        check_finite(l, Some(i))
                    };
                    Ok((eval(1.0)? - eval(-1.0)?) / (2.0 * step))
                })
                .collect::<Result<Vec<f64>>>()?
        }
    };
    Ok(LossGrad { loss, grad })
}

/// Adaptive-moment optimiser state.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self { lr, beta1, beta2, eps, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            params[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: Model,
    pub curve: Vec<EpochRecord>,
    pub initial_accuracy: f64,
    pub test_accuracy: f64,
}

/// Cache every signal of a set.
pub fn cache_set(data: &LabeledSet, depth: usize) -> Result<Vec<PooledWvd>> {
    if let Some(s) = data.signals.iter().find(|s| s.len() != data.signals[0].len()) {
        return Err(Error::ShapeMismatch(format!(
            "signals of length {} and {} in one set",
            data.signals[0].len(),
            s.len()
        )));
    }
    data.signals.par_iter().map(|x| PooledWvd::new(x, depth)).collect()
}

fn accuracy_cached(model: &Model, caches: &[PooledWvd], labels: &[usize]) -> Result<f64> {
    if caches.is_empty() {
        return Err(Error::EmptyData("accuracy of an empty set".into()));
    }
    let slices = model.slices(caches[0].len());
    let hits: Vec<bool> = caches
        .par_iter()
        .zip(labels)
        .map(|(c, &l)| Ok(argmax(&model.logits_with(&slices, c)?) == l))
        .collect::<Result<_>>()?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / hits.len() as f64)
}

/// Fraction of examples whose largest logit is the true class.
pub fn evaluate(data: &LabeledSet, model: &Model, edge_depth: usize) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyData("evaluation set is empty".into()));
    }
    accuracy_cached(model, &cache_set(data, edge_depth)?, &data.labels)
}

fn full_loss(model: &Model, caches: &[PooledWvd], labels: &[usize]) -> Result<f64> {
    let slices = model.slices(caches[0].len());
    let per: Vec<f64> = caches
        .par_iter()
        .zip(labels)
        .map(|(c, &l)| Ok(cross_entropy(&model.logits_with(&slices, c)?, l)))
        .collect::<Result<_>>()?;
    Ok(per.iter().sum::<f64>() / per.len() as f64)
}

/// Split `data` by `cfg.seed`, then train with Adam for `cfg.epochs` epochs.
pub fn train(data: &LabeledSet, cfg: &TrainConfig, init: &Init) -> Result<TrainOutcome> {
    cfg.validate()?;
    let (train_set, test_set) = data.split(cfg.n_train, cfg.seed)?;
    if train_set.is_empty() || test_set.is_empty() {
        return Err(Error::EmptyData(format!("split of {} examples into {} train", data.len(), cfg.n_train)));
    }
    let train_c = cache_set(&train_set, cfg.edge_depth)?;
    let test_c = cache_set(&test_set, cfg.edge_depth)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let kernels = init.kernels()?;
    let head = ClassifierHead::random(kernels.n_freq(), data.n_classes, cfg.head_init_scale, &mut rng)?;
    let mut model = Model::new(kernels, head)?;
    let mut adam = Adam::new(model.n_params(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps_opt);
    let initial_accuracy = accuracy_cached(&model, &test_c, &test_set.labels)?;

    let mut order: Vec<usize> = (0..train_c.len()).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<Example<'_>> = chunk.iter().map(|&i| (&train_c[i], train_set.labels[i])).collect();
            let lg = loss_and_grad(&model, &batch, cfg.mode)?;
            let mut theta = model.flat();
            adam.step(&mut theta, &lg.grad);
            model.set_flat(&theta);
        }
        let train_loss = full_loss(&model, &train_c, &train_set.labels)?;
        if !(train_loss <= DIVERGENCE_LOSS) {
            return Err(Error::Diverged { epoch, loss: train_loss });
        }
        let test_accuracy = accuracy_cached(&model, &test_c, &test_set.labels)?;
        curve.push(EpochRecord { epoch, train_loss, test_accuracy });
    }
    let test_accuracy = curve.last().map_or(initial_accuracy, |r| r.test_accuracy);
    Ok(TrainOutcome { model, curve, initial_accuracy, test_accuracy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::data::ChirpTask;

    fn small_set() -> (Vec<PooledWvd>, Vec<usize>) {
        let task = ChirpTask { len: 64, ..Default::default() };
        let data = task.generate(6, 3).unwrap();
        (cache_set(&data, 32).unwrap(), data.labels)
    }

    fn model() -> Model {
        let k = UnconstrainedParams::from_preset(&Preset::Spectrogram { sigma_t: 3.0 }, 4, DEFAULT_EPS).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        Model::new(k, ClassifierHead::random(4, 2, 0.5, &mut rng).unwrap()).unwrap()
    }

    #[test]
    fn analytic_head_gradient_matches_finite_differences() {
        let (c, l) = small_set();
        let batch: Vec<Example<'_>> = c.iter().zip(l).collect();
        let m = model();
        let a = loss_and_grad(&m, &batch, GradientMode::AnalyticHead).unwrap();
        let b = loss_and_grad(&m, &batch, GradientMode::Numeric { h: 1e-5 }).unwrap();
        assert_eq!(a.loss, b.loss);
        for i in 12..m.n_params() {
            assert!((a.grad[i] - b.grad[i]).abs() <= 1e-4 * b.grad[i].abs().max(1e-3), "{i}");
        }
        assert!(a.grad[..12].iter().all(|&g| g == 0.0));
    }

    #[test]
    fn duplicated_batch_keeps_loss_and_gradient() {
        let (c, l) = small_set();
        let batch: Vec<Example<'_>> = c.iter().zip(l).collect();
        let twice: Vec<Example<'_>> = batch.iter().chain(&batch).copied().collect();
        let m = model();
        let a = loss_and_grad(&m, &batch, GradientMode::Numeric { h: 1e-4 }).unwrap();
        let b = loss_and_grad(&m, &twice, GradientMode::Numeric { h: 1e-4 }).unwrap();
        assert!((a.loss - b.loss).abs() <= 1e-14);
        for (x, y) in a.grad.iter().zip(&b.grad) {
            assert!((x - y).abs() <= 1e-8 * x.abs().max(1.0));
        }
    }

    #[test]
    fn adam_zero_rate_is_identity() {
        let mut a = Adam::new(2, 0.0, 0.9, 0.999, 1e-8);
        let mut p = [1.0, -2.0];
        a.step(&mut p, &[3.0, 4.0]);
        assert_eq!(p, [1.0, -2.0]);
    }

    #[test]
    fn empty_inputs_are_errors() {
        let m = model();
        assert!(matches!(loss_and_grad(&m, &[], GradientMode::AnalyticHead), Err(Error::EmptyData(_))));
        let empty = LabeledSet::new(vec![], vec![], 2).unwrap();
        assert!(matches!(evaluate(&empty, &m, 8), Err(Error::EmptyData(_))));
    }
}
