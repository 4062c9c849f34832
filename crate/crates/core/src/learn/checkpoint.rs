//! CSV checkpoints (raw kernel parameters + head) and loss curves.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::head::ClassifierHead;
use super::params::UnconstrainedParams;
use super::train::{EpochRecord, Model, TrainConfig};

/// Layout, after a `# ktfr checkpoint ...` header line:
///
/// ```text
/// kernel,<f>,<mu_f>,<sigma_t_raw>,<sigma_f_raw>,<rho_raw>
/// weight,<f>,<w_0>,...,<w_{C-1}>
/// bias,0,<b_0>,...,<b_{C-1}>
/// ```
pub fn write_checkpoint(path: impl AsRef<Path>, model: &Model, cfg: &TrainConfig) -> Result<()> {
    let mut s = format!("# ktfr checkpoint {} eps={:?}\n", cfg.summary(), model.kernels.eps);
    s.push_str("section,index,values\n");
    for (f, (mu, r)) in model.kernels.mu_f.iter().zip(&model.kernels.raw).enumerate() {
        writeln!(s, "kernel,{f},{mu:?},{:?},{:?},{:?}", r[0], r[1], r[2]).unwrap();
    }
    let nc = model.head.n_classes();
    for f in 0..model.head.n_freq() {
        let row: Vec<String> = model.head.weights[f * nc..(f + 1) * nc].iter().map(|v| format!("{v:?}")).collect();
        writeln!(s, "weight,{f},{}", row.join(",")).unwrap();
    }
    let bias: Vec<String> = model.head.bias.iter().map(|v| format!("{v:?}")).collect();
    writeln!(s, "bias,0,{}", bias.join(",")).unwrap();
    fs::write(path, s)?;
    Ok(())
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let bad = |msg: String| Error::Format { what: "checkpoint", path: path.to_path_buf(), msg };
    let text = fs::read_to_string(path)?;
    let header = text.lines().next().ok_or_else(|| bad("empty file".into()))?;
    let eps = header
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix("eps="))
        .ok_or_else(|| bad("header lacks eps".into()))?
        .parse::<f64>()
        .map_err(|e| bad(e.to_string()))?;
    let (mut mu_f, mut raw, mut weights, mut bias) = (vec![], vec![], vec![], vec![]);
    for (i, line) in text.lines().enumerate().skip(2) {
        let mut fields = line.split(',');
        let section = fields.next().unwrap_or_default();
        let _index = fields.next();
        let values: Vec<f64> = fields
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(format!("line {}: {e}", i + 1)))?;
        match (section, values.len()) {
            ("kernel", 4) => {
                mu_f.push(values[0]);
                raw.push([values[1], values[2], values[3]]);
            }
            ("weight", _) => weights.extend(values),
            ("bias", _) => bias = values,
            _ => return Err(bad(format!("line {}: unexpected record {line:?}", i + 1))),
        }
    }
    let n_freq = raw.len();
    Model::new(UnconstrainedParams::new(mu_f, raw, eps)?, ClassifierHead::new(weights, bias, n_freq)?)
}

/// `epoch,train_loss,test_acc` rows.
pub fn write_loss_curve(path: impl AsRef<Path>, curve: &[EpochRecord]) -> Result<()> {
    let mut s = String::from("epoch,train_loss,test_acc\n");
    for r in curve {
        writeln!(s, "{},{:?},{:?}", r.epoch, r.train_loss, r.test_accuracy).unwrap();
    }
    fs::write(path, s)?;
    Ok(())
}
