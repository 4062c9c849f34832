//! Time-pooled K-transform rows from cached WVD column sums.
//!
//! With one kernel per frequency row and output times `0..N`, the mean over
//! time of a K row only sees the WVD through the windowed column sums
//! `C[tau, k] = sum_{t < N} W[t + tau, k]`. Those equal the full column sum
//! minus a few rows at one edge, so caching the totals plus `depth` prefix and
//! suffix sums makes every pooled row cheap to re-evaluate.

use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::ktransform::{kernel_slice, KernelSlice};
use crate::signal::Signal;
use crate::wvd::wvd_direct;

#[derive(Debug, Clone, PartialEq)]
pub struct PooledWvd {
    n: usize,
    depth: usize,
    total: Vec<f64>,
    /// Row `j - 1` holds `sum_{t < j} W[t]`, `j = 1..=depth`.
    head: Vec<f64>,
    /// Row `j - 1` holds the sum of the last `j` WVD rows.
    tail: Vec<f64>,
}

impl PooledWvd {
    /// Cache for kernels whose time support stays within `depth` samples.
    pub fn new(x: &Signal, depth: usize) -> Result<Self> {
        let w = wvd_direct(x)?;
        let (n, nf) = w.shape();
        let depth = depth.min(n);
        let mut total = vec![0.0; nf];
        for t in 0..n {
            total.iter_mut().zip(w.row(t)).for_each(|(a, b)| *a += b);
        }
        let cumulative = |rows: &mut dyn Iterator<Item = usize>| {
            let mut acc = vec![0.0; nf];
            let mut out = Vec::with_capacity(depth * nf);
            for t in rows.take(depth) {
                acc.iter_mut().zip(w.row(t)).for_each(|(a, b)| *a += b);
                out.extend_from_slice(&acc);
            }
            out
        };
        let head = cumulative(&mut (0..n));
        let tail = cumulative(&mut (0..n).rev());
        Ok(Self { n, depth, total, head, tail })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// `mean_t K[t, f]` over output times `0..N` for kernel `p` (centre time
    /// ignored).
    pub fn pooled_row(&self, p: &KernelParams) -> Result<f64> {
        self.pooled_slice(&kernel_slice(&p.with_center(0.0, p.mu_f), self.n))
    }

    /// As `pooled_row`, for a slice already built on this cache's lattice.
    pub fn pooled_slice(&self, s: &KernelSlice) -> Result<f64> {
        let n = self.n as i64;
        let width = s.bins.clone().count();
        let mut acc = 0.0;
        for (row, tau) in s.offsets.clone().enumerate() {
            let edge = tau.unsigned_abs() as usize;
            if edge >= self.n {
                continue;
            }
            if edge > self.depth {
                return Err(Error::Domain(format!(
                    "kernel time support {} exceeds the cached edge depth {}",
                    s.offsets.end(),
                    self.depth
                )));
            }
            let cut: Option<&[f64]> = match tau {
                0 => None,
                t if t > 0 => Some(&self.head[(edge - 1) * self.n..edge * self.n]),
                _ => Some(&self.tail[(edge - 1) * self.n..edge * self.n]),
            };
            let mut krow = &s.values[row * width..(row + 1) * width];
            // walk the unwrapped bin range in contiguous pieces of the lattice
            let mut k = *s.bins.start();
            while !krow.is_empty() {
                let start = k.rem_euclid(n) as usize;
                let len = krow.len().min(self.n - start);
                let (piece, rest) = krow.split_at(len);
                acc += dot(piece, &self.total[start..start + len]);
                if let Some(c) = cut {
                    acc -= dot(piece, &c[start..start + len]);
                }
                krow = rest;
                k += len as i64;
            }
        }
        Ok(acc / self.n as f64)
    }
}

/// Dot product with four fixed accumulators (vectorises, stays deterministic).
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelGrid;
    use crate::ktransform::k_equivariant;
    use crate::signal::{synth, SignalKind, SignalSpec};

    #[test]
    fn pooled_rows_match_time_mean_of_exact_transform() {
        let n = 64;
        let x = synth(&SignalSpec::new(SignalKind::WhiteNoise { seed: 4 }, n)).unwrap();
        let cache = PooledWvd::new(&x, 32).unwrap();
        let kernels: Vec<KernelParams> = (0..6)
            .map(|f| {
                KernelParams::new(0.0, 0.5 * f as f64, 1.5 + f as f64, 0.2 + 0.05 * f as f64, 0.1 * f as f64).unwrap()
            })
            .collect();
        let times = (0..n).map(|t| t as f64).collect();
        let freqs = kernels.iter().map(|p| p.mu_f).collect();
        let k = k_equivariant(&x, &KernelGrid::per_frequency(times, freqs, kernels.clone()).unwrap()).unwrap();
        for (f, p) in kernels.iter().enumerate() {
            let want = (0..n).map(|t| k.get(t, f)).sum::<f64>() / n as f64;
            let got = cache.pooled_row(p).unwrap();
            assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "{f}: {got} vs {want}");
        }
    }

    #[test]
    fn support_beyond_depth_is_an_error() {
        let x = synth(&SignalSpec::new(SignalKind::WhiteNoise { seed: 4 }, 64)).unwrap();
        let cache = PooledWvd::new(&x, 4).unwrap();
        let p = KernelParams::new(0.0, 1.0, 5.0, 0.3, 0.0).unwrap();
        assert!(matches!(cache.pooled_row(&p), Err(Error::Domain(_))));
    }
}
