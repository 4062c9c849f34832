//! Learning kernel parameters on a synthetic classification task.
//!
//! Features are `log(mean_t K + 0.1)` per frequency row of a time-shared K
//! grid, fed to an affine softmax classifier. Kernel spreads and chirpness are
//! learned through unconstrained raw values; their gradient comes from central
//! differences through the transform.

pub mod checkpoint;
pub mod data;
pub mod head;
pub mod params;
pub mod pooled;
pub mod train;

pub use checkpoint::{read_checkpoint, write_checkpoint, write_loss_curve};
pub use data::{ChirpTask, LabeledSet};
pub use head::{argmax, cross_entropy, forward_head, time_pool, ClassifierHead, LOG_OFFSET};
pub use params::{constrain, unconstrain, UnconstrainedParams, CHIRP_LIMIT, DEFAULT_EPS};
pub use pooled::PooledWvd;
pub use train::{
    cache_set, evaluate, loss_and_grad, train, Adam, EpochRecord, GradientMode, Init, LossGrad, Model, TrainConfig,
    TrainOutcome,
};
