//! Signal containers, oracle signal synthesis, analytic conversion and
//! truncated Gaussian windows.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// A uniformly sampled time series. Real signals are stored with zero
/// imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<Complex64>,
    sample_rate_hz: f64,
}

impl Signal {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidSignal(format!("need at least 2 samples, got {}", samples.len())));
        }
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::InvalidSignal(format!("sample rate must be positive, got {sample_rate_hz}")));
        }
        if let Some(i) = samples.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidSignal(format!("non-finite sample at index {i}")));
        }
        Ok(Self { samples, sample_rate_hz })
    }

    pub fn from_real(samples: &[f64], sample_rate_hz: f64) -> Result<Self> {
        Self::new(samples.iter().map(|&v| Complex64::new(v, 0.0)).collect(), sample_rate_hz)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn is_real(&self) -> bool {
        self.samples.iter().all(|z| z.im == 0.0)
    }

    /// Discrete energy `sum |x[n]|^2`.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self { samples: self.samples.iter().map(|z| z * alpha).collect(), sample_rate_hz: self.sample_rate_hz }
    }

    /// Delay by `shift` samples (negative advances), zero-filling the vacated end.
    pub fn shifted(&self, shift: isize) -> Self {
        let n = self.len() as isize;
        let samples = (0..n)
            .map(|i| {
                let j = i - shift;
                if (0..n).contains(&j) {
                    self.samples[j as usize]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Self { samples, sample_rate_hz: self.sample_rate_hz }
    }

    /// Multiply by `exp(i * omega * n)`.
    pub fn modulated(&self, omega: f64) -> Self {
        let samples =
            self.samples.iter().enumerate().map(|(n, z)| z * Complex64::from_polar(1.0, omega * n as f64)).collect();
        Self { samples, sample_rate_hz: self.sample_rate_hz }
    }

    pub fn add(&self, other: &Signal) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::ShapeMismatch(format!(
                "cannot add signals of length {} and {}",
                self.len(),
                other.len()
            )));
        }
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect();
        Ok(Self { samples, sample_rate_hz: self.sample_rate_hz })
    }
}

/// Oracle signal families. Frequencies are normalized angular frequencies in
/// rad/sample and must lie in `[0, pi]`.
#[derive(Debug, Clone, PartialEq)]
pub enum SignalKind {
    Impulse {
        n0: usize,
    },
    /// `exp(i * omega * n)`.
    Tone {
        omega: f64,
    },
    /// Complex linear chirp sweeping from `start` to `end` over the full length.
    LinearChirp {
        start: f64,
        end: f64,
    },
    /// Gaussian envelope `exp(-(n - center)^2 / (2 spread^2))` on a carrier
    /// `exp(i * omega * n)`; `omega = 0` gives a real pulse.
    GaussianPulse {
        center: f64,
        spread: f64,
        omega: f64,
    },
    /// Real standard-normal noise.
    WhiteNoise {
        seed: u64,
    },
    /// Analytic noise: independent complex normal DFT coefficients on the
    /// bins whose frequency lies in `[lo, hi]` (excluding DC and Nyquist),
    /// zero elsewhere, scaled to unit mean power.
    BandNoise {
        seed: u64,
        lo: f64,
        hi: f64,
    },
    Sum(Vec<SignalKind>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub kind: SignalKind,
    pub len: usize,
    pub sample_rate_hz: f64,
    pub amplitude: f64,
}

impl SignalSpec {
    pub fn new(kind: SignalKind, len: usize) -> Self {
        Self { kind, len, sample_rate_hz: 1.0, amplitude: 1.0 }
    }

    pub fn with_sample_rate(mut self, fs: f64) -> Self {
        self.sample_rate_hz = fs;
        self
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }
}

fn check_omega(omega: f64) -> Result<()> {
    if (0.0..=PI).contains(&omega) {
        Ok(())
    } else {
        Err(Error::Domain(format!("frequency {omega} rad/sample outside [0, pi]")))
    }
}

fn render(kind: &SignalKind, len: usize, out: &mut [Complex64]) -> Result<()> {
    match kind {
        SignalKind::Impulse { n0 } => {
            if *n0 >= len {
                return Err(Error::Domain(format!("impulse position {n0} outside [0, {len})")));
            }
            out[*n0] += 1.0;
        }
        SignalKind::Tone { omega } => {
            check_omega(*omega)?;
            for (n, z) in out.iter_mut().enumerate() {
                *z += Complex64::from_polar(1.0, omega * n as f64);
            }
        }
        SignalKind::LinearChirp { start, end } => {
            check_omega(*start)?;
            check_omega(*end)?;
            let span = (len.max(2) - 1) as f64;
            for (n, z) in out.iter_mut().enumerate() {
                let t = n as f64;
                let phase = start * t + (end - start) * t * t / (2.0 * span);
                *z += Complex64::from_polar(1.0, phase);
            }
        }
        SignalKind::GaussianPulse { center, spread, omega } => {
            check_omega(*omega)?;
            if !(*spread > 0.0) {
                return Err(Error::Domain(format!("pulse spread must be positive, got {spread}")));
            }
            for (n, z) in out.iter_mut().enumerate() {
                let u = (n as f64 - center) / spread;
                let env = (-0.5 * u * u).exp();
                *z +=
                    if *omega == 0.0 { Complex64::new(env, 0.0) } else { Complex64::from_polar(env, omega * n as f64) };
            }
        }
        SignalKind::WhiteNoise { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            for z in out.iter_mut() {
                let v: f64 = StandardNormal.sample(&mut rng);
                *z += v;
            }
        }
        SignalKind::BandNoise { seed, lo, hi } => {
            check_omega(*lo)?;
            check_omega(*hi)?;
            if lo > hi {
                return Err(Error::Domain(format!("empty band [{lo}, {hi}]")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut spec = vec![Complex64::new(0.0, 0.0); len];
            let mut used = 0usize;
            for (j, z) in spec.iter_mut().enumerate().take(len.div_ceil(2)).skip(1) {
                let w = 2.0 * PI * j as f64 / len as f64;
                if w >= *lo && w <= *hi {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    *z = Complex64::new(re, im);
                    used += 1;
                }
            }
            if used == 0 {
                return Err(Error::Domain(format!("band [{lo}, {hi}] contains no DFT bin at length {len}")));
            }
            FftPlanner::<f64>::new().plan_fft_inverse(len).process(&mut spec);
            let scale = 1.0 / (2.0 * used as f64).sqrt();
            for (z, v) in out.iter_mut().zip(spec) {
                *z += v * scale;
            }
        }
        SignalKind::Sum(parts) => {
            for part in parts {
                render(part, len, out)?;
            }
        }
    }
    Ok(())
}

/// Render a [`SignalSpec`]. Deterministic: equal specs give bitwise-equal signals.
pub fn synth(spec: &SignalSpec) -> Result<Signal> {
    let mut samples = vec![Complex64::new(0.0, 0.0); spec.len];
    render(&spec.kind, spec.len, &mut samples)?;
    for z in &mut samples {
        *z *= spec.amplitude;
    }
    Signal::new(samples, spec.sample_rate_hz)
}

/// Analytic signal via the one-sided spectrum: positive bins doubled, DC and
/// Nyquist kept, negative bins zeroed. The real part reproduces the input.
pub fn analytic(x: &Signal) -> Result<Signal> {
    if !x.is_real() {
        return Err(Error::AlreadyComplex);
    }
    let n = x.len();
    let mut buf = x.samples().to_vec();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    for (k, z) in buf.iter_mut().enumerate() {
        let gain = if k == 0 || (n.is_multiple_of(2) && k == half) {
            1.0
        } else if k <= (n - 1) / 2 {
            2.0
        } else {
            0.0
        };
        *z *= gain / n as f64;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    // Re-impose the identity exactly; the FFT round trip leaves ~1e-16 noise.
    for (z, orig) in buf.iter_mut().zip(x.samples()) {
        z.re = orig.re;
    }
    Signal::new(buf, x.sample_rate())
}

/// Convert real input to its analytic signal, pass complex input through.
/// `convert = false` skips the conversion entirely.
pub fn prepare_for_wvd(x: &Signal, convert: bool) -> Result<Signal> {
    if convert && x.is_real() {
        analytic(x)
    } else {
        Ok(x.clone())
    }
}

/// Unit-peak, symmetric, truncated Gaussian window.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianWindow {
    /// Time spread in seconds.
    pub sigma: f64,
    pub taps: Vec<f64>,
    pub truncation_eps: f64,
}

impl GaussianWindow {
    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn half_width(&self) -> usize {
        self.taps.len() / 2
    }

    pub fn l2_norm_sqr(&self) -> f64 {
        self.taps.iter().map(|w| w * w).sum()
    }
}

/// Window length in samples for a unit-peak Gaussian of spread `sigma`
/// seconds whose boundary value is `eps`: twice the distance from the centre
/// to where the Gaussian falls to `eps`, times the sample rate.
pub fn truncation_length(sigma: f64, eps: f64, fs: f64) -> f64 {
    2.0 * fs * sigma * (2.0 * (1.0 / eps).ln()).sqrt()
}

/// Number of samples either side of the centre needed so the boundary tap is
/// at most `eps` times the peak, for a spread given in samples.
pub(crate) fn half_width_samples(sigma_samples: f64, eps: f64) -> usize {
    let reach = sigma_samples * (2.0 * (1.0 / eps).ln()).sqrt();
    let h = reach.ceil();
    // ceil of an exact integer reach still leaves the boundary tap == eps
    if h.is_finite() {
        h as usize
    } else {
        usize::MAX
    }
}

pub(crate) fn gaussian_taps(sigma_samples: f64, eps: f64) -> Vec<f64> {
    let h = half_width_samples(sigma_samples, eps) as isize;
    (-h..=h)
        .map(|k| {
            let u = k as f64 / sigma_samples;
            (-0.5 * u * u).exp()
        })
        .collect()
}

/// Gaussian window of spread `sigma` seconds at sample rate `fs`, truncated so
/// that its boundary taps are at most `eps` times the centre tap.
pub fn gaussian_window(sigma: f64, eps: f64, fs: f64) -> Result<GaussianWindow> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!("window spread must be positive, got {sigma}")));
    }
    if !(fs > 0.0) {
        return Err(Error::Domain(format!("sample rate must be positive, got {fs}")));
    }
    if eps >= 1.0 {
        return Err(Error::ToleranceTooLarge { eps });
    }
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("truncation eps must be positive, got {eps}")));
    }
    Ok(GaussianWindow { sigma, taps: gaussian_taps(sigma * fs, eps), truncation_eps: eps })
}

/// Read a 16-bit PCM mono WAV file, scaling samples by 1/32768.
pub fn load_wav(path: impl AsRef<Path>) -> Result<Signal> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) if io.kind() == std::io::ErrorKind::NotFound => Error::Io(io),
        hound::Error::Unsupported => Error::UnsupportedFormat("unsupported WAV encoding".into()),
        other => Error::WavParse(other.to_string()),
    })?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::UnsupportedFormat(format!("unsupported channel count {}", spec.channels)));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::UnsupportedFormat(format!(
            "unsupported sample format: {:?} with {} bits (need 16-bit PCM)",
            spec.sample_format, spec.bits_per_sample
        )));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| Complex64::new(v as f64 / 32768.0, 0.0)))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::WavParse(e.to_string()))?;
    Signal::new(samples, spec.sample_rate as f64)
}
