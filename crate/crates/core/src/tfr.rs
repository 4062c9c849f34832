//! Real and complex time-frequency grids and their on-disk formats.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Which computation produced a grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Exact,
    Fast,
    Smoothed,
    Spectrogram,
    Preset(String),
    Other(String),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Exact => f.write_str("exact"),
            Provenance::Fast => f.write_str("fast"),
            Provenance::Smoothed => f.write_str("smoothed"),
            Provenance::Spectrogram => f.write_str("spectrogram"),
            Provenance::Preset(name) => write!(f, "preset:{name}"),
            Provenance::Other(s) => f.write_str(s),
        }
    }
}

impl FromStr for Provenance {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "exact" => Provenance::Exact,
            "fast" => Provenance::Fast,
            "smoothed" => Provenance::Smoothed,
            "spectrogram" => Provenance::Spectrogram,
            other => match other.strip_prefix("preset:") {
                Some(name) => Provenance::Preset(name.to_string()),
                None => Provenance::Other(other.to_string()),
            },
        })
    }
}

/// Real-valued time x frequency grid, stored row-major with one row per time.
///
/// Time coordinates are in samples, frequency coordinates in rad/sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TfrMatrix {
    values: Vec<f64>,
    time_axis: Vec<f64>,
    freq_axis: Vec<f64>,
    pub provenance: Provenance,
}

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.iter().any(|v| !v.is_finite()) {
        return Err(Error::ShapeMismatch(format!("{name} axis has non-finite entries")));
    }
    if axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::ShapeMismatch(format!("{name} axis is not strictly increasing")));
    }
    Ok(())
}

impl TfrMatrix {
    pub fn new(values: Vec<f64>, time_axis: Vec<f64>, freq_axis: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if values.len() != time_axis.len() * freq_axis.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                time_axis.len(),
                freq_axis.len()
            )));
        }
        check_axis("time", &time_axis)?;
        check_axis("frequency", &freq_axis)?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch(format!("non-finite value at flat index {i}")));
        }
        Ok(Self { values, time_axis, freq_axis, provenance })
    }

    pub fn zeros(time_axis: Vec<f64>, freq_axis: Vec<f64>, provenance: Provenance) -> Result<Self> {
        let n = time_axis.len() * freq_axis.len();
        Self::new(vec![0.0; n], time_axis, freq_axis, provenance)
    }

    /// Sample-index time axis `0..n` and WVD frequency axis `pi k / n_freq`.
    pub fn wvd_axes(n_time: usize, n_freq: usize) -> (Vec<f64>, Vec<f64>) {
        let t = (0..n_time).map(|i| i as f64).collect();
        let f = (0..n_freq).map(|k| std::f64::consts::PI * k as f64 / n_freq as f64).collect();
        (t, f)
    }

    pub fn n_time(&self) -> usize {
        self.time_axis.len()
    }

    pub fn n_freq(&self) -> usize {
        self.freq_axis.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_time(), self.n_freq())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn time_axis(&self) -> &[f64] {
        &self.time_axis
    }

    pub fn freq_axis(&self) -> &[f64] {
        &self.freq_axis
    }

    #[inline]
    pub fn get(&self, t: usize, f: usize) -> f64 {
        self.values[t * self.n_freq() + f]
    }

    #[inline]
    pub fn set(&mut self, t: usize, f: usize, v: f64) {
        let nf = self.n_freq();
        self.values[t * nf + f] = v;
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let nf = self.n_freq();
        &self.values[t * nf..(t + 1) * nf]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &TfrMatrix) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Largest absolute difference divided by the largest magnitude of `reference`.
    pub fn max_rel_diff(&self, reference: &TfrMatrix) -> Result<f64> {
        let d = self.max_abs_diff(reference)?;
        let scale = reference.max_abs();
        Ok(if scale == 0.0 { d } else { d / scale })
    }

    pub fn check_same_shape(&self, other: &TfrMatrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", self.shape(), other.shape())));
        }
        Ok(())
    }

    /// Row-major CSV: a provenance comment, a header of frequency coordinates,
    /// then one line per time with its coordinate first. Floats are written
    /// with 17 significant digits.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path.as_ref())?);
        writeln!(w, "# provenance={}", self.provenance)?;
        write!(w, "time\\freq")?;
        for f in &self.freq_axis {
            write!(w, ",{f:.16e}")?;
        }
        writeln!(w)?;
        for (t, tv) in self.time_axis.iter().enumerate() {
            write!(w, "{tv:.16e}")?;
            for v in self.row(t) {
                write!(w, ",{v:.16e}")?;
            }
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bad = |msg: String| Error::Format { what: "TFR CSV", path: path.to_path_buf(), msg };
        let text = fs::read_to_string(path)?;
        let mut provenance = Provenance::Other("unknown".into());
        let mut lines = text.lines().filter(|l| !l.trim().is_empty()).peekable();
        while let Some(line) = lines.peek() {
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(p) = rest.trim().strip_prefix("provenance=") {
                    provenance = p.parse().unwrap();
                }
                lines.next();
            } else {
                break;
            }
        }
        let header = lines.next().ok_or_else(|| bad("missing header".into()))?;
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
        let freq_axis = header.split(',').skip(1).map(parse).collect::<Result<Vec<_>>>()?;
        let mut time_axis = Vec::new();
        let mut values = Vec::new();
        for line in lines {
            let mut cells = line.split(',');
            time_axis.push(parse(cells.next().unwrap_or(""))?);
            let before = values.len();
            for c in cells {
                values.push(parse(c)?);
            }
            if values.len() - before != freq_axis.len() {
                return Err(bad(format!("row {} has wrong width", time_axis.len())));
            }
        }
        Self::new(values, time_axis, freq_axis, provenance)
    }

    /// 8-bit binary PGM, min-max scaled. Time runs left to right and the
    /// highest frequency is the top row. Returns the `(min, max)` used.
    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<(f64, f64)> {
        let (lo, hi) = (self.min_value(), self.max_value());
        let span = hi - lo;
        let (width, height) = (self.n_time(), self.n_freq());
        let mut w = BufWriter::new(fs::File::create(path.as_ref())?);
        write!(w, "P5\n{width} {height}\n255\n")?;
        let mut row = vec![0u8; width];
        for f in (0..height).rev() {
            for (t, px) in row.iter_mut().enumerate() {
                let v = self.get(t, f);
                *px = if span > 0.0 { (255.0 * (v - lo) / span).round() as u8 } else { 0 };
            }
            w.write_all(&row)?;
        }
        w.flush()?;
        Ok((lo, hi))
    }

    /// PGM plus a sidecar CSV (`<path>.csv`) recording the scaling.
    pub fn write_pgm_with_sidecar(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let (lo, hi) = self.write_pgm(path)?;
        let mut side = path.as_os_str().to_owned();
        side.push(".csv");
        fs::write(side, format!("min,max,width,height\n{lo:.16e},{hi:.16e},{},{}\n", self.n_time(), self.n_freq()))?;
        Ok(())
    }
}

/// Complex time x frequency grid (an STFT), row-major with one row per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTfr {
    values: Vec<Complex64>,
    time_axis: Vec<f64>,
    freq_axis: Vec<f64>,
    /// Spread of the analysis window in seconds.
    pub window_sigma: f64,
}

impl ComplexTfr {
    pub fn new(values: Vec<Complex64>, time_axis: Vec<f64>, freq_axis: Vec<f64>, window_sigma: f64) -> Result<Self> {
        if values.len() != time_axis.len() * freq_axis.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                time_axis.len(),
                freq_axis.len()
            )));
        }
        if !(window_sigma > 0.0) {
            return Err(Error::Domain(format!("window spread must be positive, got {window_sigma}")));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::ShapeMismatch("non-finite STFT entry".into()));
        }
        Ok(Self { values, time_axis, freq_axis, window_sigma })
    }

    pub fn n_time(&self) -> usize {
        self.time_axis.len()
    }

    pub fn n_freq(&self) -> usize {
        self.freq_axis.len()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn time_axis(&self) -> &[f64] {
        &self.time_axis
    }

    pub fn freq_axis(&self) -> &[f64] {
        &self.freq_axis
    }

    pub fn get(&self, t: usize, f: usize) -> Complex64 {
        self.values[t * self.n_freq() + f]
    }

    /// Squared modulus: the spectrogram.
    pub fn power(&self) -> TfrMatrix {
        TfrMatrix {
            values: self.values.iter().map(|z| z.norm_sqr()).collect(),
            time_axis: self.time_axis.clone(),
            freq_axis: self.freq_axis.clone(),
            provenance: Provenance::Spectrogram,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TfrMatrix {
        let (t, f) = TfrMatrix::wvd_axes(3, 4);
        let values = (0..12).map(|i| (i as f64 * 0.7).sin() / 3.0 + 1e-300).collect();
        TfrMatrix::new(values, t, f, Provenance::Preset("scalogram".into())).unwrap()
    }

    #[test]
    fn rejects_bad_shapes_and_axes() {
        assert!(TfrMatrix::new(vec![0.0; 5], vec![0.0, 1.0], vec![0.0, 1.0], Provenance::Exact).is_err());
        assert!(TfrMatrix::new(vec![0.0; 4], vec![1.0, 0.0], vec![0.0, 1.0], Provenance::Exact).is_err());
        assert!(TfrMatrix::new(vec![f64::NAN; 4], vec![0.0, 1.0], vec![0.0, 1.0], Provenance::Exact).is_err());
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let m = sample();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        m.write_csv(&p).unwrap();
        let back = TfrMatrix::read_csv(&p).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn pgm_header_and_scaling() {
        let m = sample();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.pgm");
        m.write_pgm_with_sidecar(&p).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        let header = b"P5\n3 4\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        let pixels = &bytes[header.len()..];
        assert_eq!(pixels.len(), 12);
        assert_eq!(*pixels.iter().max().unwrap(), 255);
        assert_eq!(*pixels.iter().min().unwrap(), 0);
        let side = std::fs::read_to_string(dir.path().join("m.pgm.csv")).unwrap();
        assert!(side.starts_with("min,max,width,height\n"));
    }
}
