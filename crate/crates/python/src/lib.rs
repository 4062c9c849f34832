//! Python bindings. Matrices cross the boundary as lists of rows
//! (`[time][freq]`); `numpy.asarray` turns them into arrays.

use ::ktfr as core;
use core::diagnostics;
use core::learn::{self, ChirpTask, GradientMode, Init, TrainConfig};
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rows(m: &core::TfrMatrix) -> Vec<Vec<f64>> {
    (0..m.n_time()).map(|t| m.row(t).to_vec()).collect()
}

/// A sampled signal.
#[pyclass(name = "Signal", frozen, from_py_object)]
#[derive(Clone)]
struct PySignal(core::Signal);

#[pymethods]
impl PySignal {
    #[new]
    #[pyo3(signature = (samples, sample_rate = 1.0))]
    fn new(samples: Vec<Complex64>, sample_rate: f64) -> PyResult<Self> {
        core::Signal::new(samples, sample_rate).map(Self).map_err(err)
    }

    /// `exp(i omega n)`.
    #[staticmethod]
    fn tone(n: usize, omega: f64) -> PyResult<Self> {
        synth(core::SignalKind::Tone { omega }, n)
    }

    #[staticmethod]
    fn chirp(n: usize, start: f64, end: f64) -> PyResult<Self> {
        synth(core::SignalKind::LinearChirp { start, end }, n)
    }

    #[staticmethod]
    #[pyo3(signature = (n, seed, lo = 0.0, hi = std::f64::consts::PI))]
    fn band_noise(n: usize, seed: u64, lo: f64, hi: f64) -> PyResult<Self> {
        synth(core::SignalKind::BandNoise { seed, lo, hi }, n)
    }

    /// Analytic signal of a real signal.
    fn analytic(&self) -> PyResult<Self> {
        core::analytic(&self.0).map(Self).map_err(err)
    }

    fn samples(&self) -> Vec<Complex64> {
        self.0.samples().to_vec()
    }

    fn energy(&self) -> f64 {
        self.0.energy()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

fn synth(kind: core::SignalKind, n: usize) -> PyResult<PySignal> {
    core::synth(&core::SignalSpec::new(kind, n)).map(PySignal).map_err(err)
}

/// One Gaussian kernel: centre `(mu_t, mu_f)`, spreads and correlation `rho`.
#[pyclass(name = "KernelParams", frozen, get_all, from_py_object)]
#[derive(Clone)]
struct PyKernelParams {
    mu_t: f64,
    mu_f: f64,
    sigma_t: f64,
    sigma_f: f64,
    rho: f64,
}

impl PyKernelParams {
    fn inner(&self) -> PyResult<core::KernelParams> {
        core::KernelParams::new(self.mu_t, self.mu_f, self.sigma_t, self.sigma_f, self.rho).map_err(err)
    }
}

impl From<core::KernelParams> for PyKernelParams {
    fn from(p: core::KernelParams) -> Self {
        Self { mu_t: p.mu_t, mu_f: p.mu_f, sigma_t: p.sigma_t, sigma_f: p.sigma_f, rho: p.rho }
    }
}

#[pymethods]
impl PyKernelParams {
    #[new]
    #[pyo3(signature = (mu_t, mu_f, sigma_t, sigma_f, rho = 0.0))]
    fn new(mu_t: f64, mu_f: f64, sigma_t: f64, sigma_f: f64, rho: f64) -> PyResult<Self> {
        core::KernelParams::new(mu_t, mu_f, sigma_t, sigma_f, rho).map(Self::from).map_err(err)
    }

    fn det(&self) -> PyResult<f64> {
        Ok(self.inner()?.det())
    }

    fn density(&self, tau: f64, omega: f64) -> PyResult<f64> {
        Ok(self.inner()?.density(tau, omega))
    }

    /// `(theta, sigma_t_rot, sigma_f_rot, area, passes)`.
    fn logon(&self) -> PyResult<(f64, f64, f64, f64, bool)> {
        let r = diagnostics::logon_area(&self.inner()?).map_err(err)?;
        Ok((r.theta, r.sigma_t_rot, r.sigma_f_rot, r.area, r.passes))
    }

    fn __repr__(&self) -> String {
        format!(
            "KernelParams(mu_t={}, mu_f={}, sigma_t={}, sigma_f={}, rho={})",
            self.mu_t, self.mu_f, self.sigma_t, self.sigma_f, self.rho
        )
    }
}

/// Kernel parameters over an output grid.
#[pyclass(name = "KernelGrid", frozen, from_py_object)]
#[derive(Clone)]
struct PyKernelGrid(core::KernelGrid);

#[pymethods]
impl PyKernelGrid {
    /// One kernel per output frequency, shared by every output time.
    #[staticmethod]
    fn per_frequency(times: Vec<f64>, freqs: Vec<f64>, params: Vec<PyKernelParams>) -> PyResult<Self> {
        let p = params.iter().map(|p| p.inner()).collect::<PyResult<Vec<_>>>()?;
        core::KernelGrid::per_frequency(times, freqs, p).map(Self).map_err(err)
    }

    /// Preset grid over times `0..n_time` and frequencies `pi j / n_freq`.
    #[staticmethod]
    #[pyo3(signature = (name, n_time, n_freq, sigma_t = 8.0, sigma0 = 4.0, scale_max = 3.0, widen = 2.0, chirp = 0.5))]
    #[allow(clippy::too_many_arguments)]
    fn preset(
        name: &str,
        n_time: usize,
        n_freq: usize,
        sigma_t: f64,
        sigma0: f64,
        scale_max: f64,
        widen: f64,
        chirp: f64,
    ) -> PyResult<Self> {
        let h = core::PresetHyper { sigma_t, sigma0, scale_max, widen, chirp };
        let p = core::Preset::from_name(name, &h).map_err(err)?;
        core::preset_params(&p, n_time, n_freq).map(Self).map_err(err)
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    fn times(&self) -> Vec<f64> {
        self.0.times().to_vec()
    }

    fn freqs(&self) -> Vec<f64> {
        self.0.freqs().to_vec()
    }

    fn get(&self, t: usize, f: usize) -> PyResult<PyKernelParams> {
        let (nt, nf) = self.0.shape();
        if t >= nt || f >= nf {
            return Err(PyValueError::new_err(format!("cell ({t}, {f}) outside grid {nt}x{nf}")));
        }
        Ok(self.0.get(t, f).into())
    }
}

/// Discrete Wigner-Ville distribution, `N x N`.
#[pyfunction]
fn wvd(x: &PySignal) -> PyResult<Vec<Vec<f64>>> {
    core::wvd_direct(&x.0).map(|m| rows(&m)).map_err(err)
}

/// `|STFT|^2` with a Gaussian window of spread `sigma`.
#[pyfunction]
#[pyo3(signature = (x, sigma, hop = 1))]
fn spectrogram(x: &PySignal, sigma: f64, hop: usize) -> PyResult<Vec<Vec<f64>>> {
    core::stft_gabor(&x.0, sigma, hop).map(|s| rows(&s.power())).map_err(err)
}

#[pyfunction]
fn smoothed_pwvd(x: &PySignal, sigma_t: f64, sigma_f: f64) -> PyResult<Vec<Vec<f64>>> {
    let b = core::BaseSmoothing::new(sigma_t, sigma_f).map_err(err)?;
    core::smoothed_pwvd(&x.0, &b).map(|m| rows(&m)).map_err(err)
}

/// Reference K-transform by direct WVD inner products.
#[pyfunction]
fn k_exact(x: &PySignal, grid: &PyKernelGrid) -> PyResult<Vec<Vec<f64>>> {
    core::k_exact(&x.0, &grid.0).map(|m| rows(&m)).map_err(err)
}

/// K-transform for time-shared grids on integer times (correlation form).
#[pyfunction]
fn k_equivariant(x: &PySignal, grid: &PyKernelGrid) -> PyResult<Vec<Vec<f64>>> {
    core::k_equivariant(&x.0, &grid.0).map(|m| rows(&m)).map_err(err)
}

/// Fast K-transform; the base smoothing is chosen from the grid unless given.
#[pyfunction]
#[pyo3(signature = (x, grid, base_sigma_t = None, base_sigma_f = None))]
fn k_fast(
    x: &PySignal,
    grid: &PyKernelGrid,
    base_sigma_t: Option<f64>,
    base_sigma_f: Option<f64>,
) -> PyResult<Vec<Vec<f64>>> {
    let base = match (base_sigma_t, base_sigma_f) {
        (Some(t), Some(f)) => core::BaseSmoothing::new(t, f),
        (None, None) => core::BaseSmoothing::for_grid(&grid.0, x.0.len()),
        _ => return Err(PyValueError::new_err("give both base spreads or neither")),
    }
    .map_err(err)?;
    core::k_fast(&x.0, &grid.0, &base).map(|m| rows(&m)).map_err(err)
}

/// Outcome of `train_chirp`.
#[pyclass(name = "TrainResult", frozen, get_all)]
struct PyTrainResult {
    initial_accuracy: f64,
    test_accuracy: f64,
    /// `(epoch, train_loss, test_accuracy)` per epoch.
    curve: Vec<(usize, f64, f64)>,
    kernels: Vec<PyKernelParams>,
}

/// Train kernels and a linear head on the synthetic up/down chirp task.
#[pyfunction]
#[pyo3(signature = (epochs = 200, learning_rate = 1e-3, seed = 0, n_total = 300, n_train = 200, length = 512, n_freq = 16, sigma_t = 8.0, batch_size = 20))]
#[allow(clippy::too_many_arguments)]
fn train_chirp(
    py: Python<'_>,
    epochs: usize,
    learning_rate: f64,
    seed: u64,
    n_total: usize,
    n_train: usize,
    length: usize,
    n_freq: usize,
    sigma_t: f64,
    batch_size: usize,
) -> PyResult<PyTrainResult> {
    let data = ChirpTask { len: length, ..Default::default() }.generate(n_total, seed).map_err(err)?;
    let cfg = TrainConfig {
        epochs,
        learning_rate,
        seed,
        n_train,
        batch_size,
        mode: GradientMode::default(),
        ..Default::default()
    };
    let init = Init::Preset { preset: core::Preset::Spectrogram { sigma_t }, n_freq };
    let out = py.detach(|| learn::train(&data, &cfg, &init)).map_err(err)?;
    Ok(PyTrainResult {
        initial_accuracy: out.initial_accuracy,
        test_accuracy: out.test_accuracy,
        curve: out.curve.iter().map(|e| (e.epoch, e.train_loss, e.test_accuracy)).collect(),
        kernels: out.model.kernels.kernels().into_iter().map(Into::into).collect(),
    })
}

#[pymodule(name = "ktfr")]
pub fn ktfr(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySignal>()?;
    m.add_class::<PyKernelParams>()?;
    m.add_class::<PyKernelGrid>()?;
    m.add_class::<PyTrainResult>()?;
    m.add_function(wrap_pyfunction!(wvd, m)?)?;
    m.add_function(wrap_pyfunction!(spectrogram, m)?)?;
    m.add_function(wrap_pyfunction!(smoothed_pwvd, m)?)?;
    m.add_function(wrap_pyfunction!(k_exact, m)?)?;
    m.add_function(wrap_pyfunction!(k_equivariant, m)?)?;
    m.add_function(wrap_pyfunction!(k_fast, m)?)?;
    m.add_function(wrap_pyfunction!(train_chirp, m)?)?;
    m.add("MIN_LOGON_AREA", diagnostics::MIN_LOGON_AREA)?;
    Ok(())
}
