mod common;

use std::f64::consts::PI;

use common::{compact_noise, max_rel, tapered_band_noise};
use ktfr::ktransform::wvd_inner;
use ktfr::presets::output_freqs;
use ktfr::wvd::{marginal_constant, wvd_with_residue};
use ktfr::{
    analytic, gaussian_kernel, gaussian_window, k_equivariant, k_exact, k_fast, preset_params, smoothed_pwvd, synth,
    wvd_direct, BaseSmoothing, KernelGrid, KernelParams, Preset, PresetHyper, Signal, SignalKind, SignalSpec,
    TfrMatrix,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rustfft::FftPlanner;

fn fft(x: &[Complex64]) -> Vec<Complex64> {
    let mut b = x.to_vec();
    FftPlanner::new().plan_fft_forward(b.len()).process(&mut b);
    b
}

fn real_noise(n: usize, seed: u64) -> Signal {
    synth(&SignalSpec::new(SignalKind::WhiteNoise { seed }, n)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn synth_is_deterministic(seed in any::<u64>(), n in 3usize..300) {
        let spec = SignalSpec::new(SignalKind::BandNoise { seed, lo: 0.0, hi: PI }, n);
        let a = synth(&spec).unwrap();
        let b = synth(&spec).unwrap();
        prop_assert!(a.samples().iter().zip(b.samples()).all(|(p, q)| p.re.to_bits() == q.re.to_bits() && p.im.to_bits() == q.im.to_bits()));
    }

    #[test]
    fn analytic_doubles_positive_bins(seed in any::<u64>(), n in 4usize..200) {
        let x = real_noise(n, seed);
        let sx = fft(x.samples());
        let sa = fft(analytic(&x).unwrap().samples());
        let scale = sx.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        for k in 0..=n / 2 {
            let gain = if k == 0 || (n % 2 == 0 && k == n / 2) { 1.0 } else { 2.0 };
            prop_assert!((sa[k] - sx[k] * gain).norm() <= 1e-9 * scale, "bin {}", k);
        }
    }

    #[test]
    fn window_is_symmetric(sigma in 0.3f64..40.0, eps in 1e-9f64..1e-2) {
        let w = gaussian_window(sigma, eps, 1.0).unwrap();
        let m = w.len();
        prop_assert!((0..m).all(|k| w.taps[k] == w.taps[m - 1 - k]));
    }

    #[test]
    fn wvd_is_real_and_quadratic(seed in any::<u64>(), n in 8usize..96, alpha in -5.0f64..5.0) {
        let x = tapered_band_noise(n, seed);
        let (w, residue) = wvd_with_residue(&x).unwrap();
        prop_assert!(residue <= 1e-9 * w.max_abs().max(f64::MIN_POSITIVE));
        let wa = wvd_direct(&x.scaled(alpha)).unwrap();
        prop_assert!(max_rel(wa.values(), w.scaled(alpha * alpha).values()) <= 1e-12);
    }

    #[test]
    fn wvd_time_marginal_is_power(seed in any::<u64>(), n in 4usize..80) {
        let x = compact_noise(n, 0, n, seed);
        let w = wvd_direct(&x).unwrap();
        for t in 0..n {
            let m = marginal_constant(n) * w.row(t).iter().sum::<f64>();
            prop_assert!((m - x.samples()[t].norm_sqr()).abs() <= 1e-10 * (1.0 + m.abs()));
        }
    }

    #[test]
    fn spectrogram_limit_is_nonnegative(seed in any::<u64>(), s in 1.5f64..6.0) {
        let x = tapered_band_noise(96, seed);
        let w = smoothed_pwvd(&x, &BaseSmoothing::spectrogram(s).unwrap()).unwrap();
        prop_assert!(w.min_value() >= -1e-6 * w.max_value());
    }

    /// Smoothing by the base and then by the residual equals smoothing by the
    /// full kernel (Gaussian semigroup), for kernels dominating the base.
    #[test]
    fn gaussian_composition(seed in any::<u64>(), st in 3.0f64..6.0, q in 0.8f64..1.5, c in -0.5f64..0.5) {
        let n = 64;
        let x = tapered_band_noise(n, seed);
        let (t, f) = TfrMatrix::wvd_axes(n, 16);
        let sf = q / st;
        let rec: Vec<KernelParams> = f.iter().map(|&w| KernelParams::new(0.0, w, st, sf, c * st * sf).unwrap()).collect();
        let grid = KernelGrid::per_frequency(t, f, rec).unwrap();
        let base = BaseSmoothing::for_grid(&grid, n).unwrap();
        let fast = k_fast(&x, &grid, &base).unwrap();
        let exact = k_exact(&x, &grid).unwrap();
        prop_assert!(max_rel(fast.values(), exact.values()) <= 1e-6);
    }

    #[test]
    fn presets_agree_exact_and_fast(seed in any::<u64>(), which in 0usize..3, size in 0usize..3) {
        let n = 64 << size;
        let h = PresetHyper { sigma0: 2.0, scale_max: 2.0, ..Default::default() };
        let name = ["spectrogram", "scalogram", "chirpogram"][which];
        let grid = preset_params(&Preset::from_name(name, &h).unwrap(), n, 32).unwrap();
        let x = tapered_band_noise(n, seed);
        let base = BaseSmoothing::for_grid(&grid, n).unwrap();
        let fast = k_fast(&x, &grid, &base).unwrap();
        let exact = k_equivariant(&x, &grid).unwrap();
        prop_assert!(max_rel(fast.values(), exact.values()) <= 1e-2);
    }

    /// Constant kernels centred on the output frequencies commute with
    /// on-grid modulation.
    #[test]
    fn constant_grid_commutes_with_modulation(seed in any::<u64>(), k0 in 0usize..48, st in 1.0f64..5.0, sf in 0.1f64..0.6) {
        let n = 48;
        let x = compact_noise(n, 0, n, seed);
        let (t, f) = TfrMatrix::wvd_axes(n, n);
        let rec: Vec<KernelParams> = f.iter().map(|&w| KernelParams::new(0.0, w, st, sf, 0.2 * st * sf).unwrap()).collect();
        let grid = KernelGrid::per_frequency(t, f, rec).unwrap();
        let k = k_equivariant(&x, &grid).unwrap();
        let km = k_equivariant(&x.modulated(PI * k0 as f64 / n as f64), &grid).unwrap();
        for tt in 0..n {
            for j in 0..n {
                prop_assert!((km.get(tt, (j + k0) % n) - k.get(tt, j)).abs() <= 1e-9 * k.max_abs());
            }
        }
    }

    #[test]
    fn kernel_linearity(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let n = 40;
        let w = wvd_direct(&tapered_band_noise(n, seed)).unwrap();
        let p1 = gaussian_kernel(&KernelParams::new(17.0, 1.0, 3.0, 0.4, 0.5).unwrap(), n, n).unwrap();
        let p2 = gaussian_kernel(&KernelParams::new(25.0, 2.2, 2.0, 0.2, -0.1).unwrap(), n, n).unwrap();
        let mixed: Vec<f64> = p1.values().iter().zip(p2.values()).map(|(u, v)| a * u + b * v).collect();
        let mix = TfrMatrix::new(mixed, p1.time_axis().to_vec(), p1.freq_axis().to_vec(), p1.provenance.clone()).unwrap();
        let want = a * wvd_inner(&w, &p1).unwrap() + b * wvd_inner(&w, &p2).unwrap();
        let got = wvd_inner(&w, &mix).unwrap();
        let scale = (a * wvd_inner(&w, &p1).unwrap()).abs() + (b * wvd_inner(&w, &p2).unwrap()).abs();
        prop_assert!((got - want).abs() <= 1e-12 * scale.max(1e-300));
    }
}

/// Decimating a band-limited signal by 2 halves the WVD and maps frequency
/// bin `k` of the original onto bin `k` of the shorter grid.
#[test]
fn decimation_rescales_the_wvd() {
    let n = 256;
    for seed in 0..5 {
        let x = synth(&SignalSpec::new(SignalKind::BandNoise { seed, lo: 0.3, hi: 0.45 * PI }, n)).unwrap();
        let taper: Vec<Complex64> =
            x.samples().iter().enumerate().map(|(i, z)| z * (PI * i as f64 / (n - 1) as f64).sin().powi(4)).collect();
        let x = Signal::new(taper, 1.0).unwrap();
        let d = Signal::new(x.samples().iter().step_by(2).cloned().collect(), 1.0).unwrap();
        let w = wvd_direct(&x).unwrap();
        let wd = wvd_direct(&d).unwrap();
        let mut got = Vec::new();
        let mut want = Vec::new();
        for t in 0..n / 2 {
            for k in 0..n / 2 {
                got.push(wd.get(t, k));
                want.push(0.5 * w.get(2 * t, k));
            }
        }
        let err = max_rel(&got, &want);
        assert!(err <= 5e-2, "seed {seed}: {err}");
    }
}

/// The representation change caused by a fixed perturbation shrinks as the
/// kernels widen.
#[test]
fn stability_improves_with_kernel_volume() {
    let n = 128;
    let x = tapered_band_noise(n, 31);
    let noise = compact_noise(n, 0, n, 32).scaled(0.05);
    let y = x.add(&noise).unwrap();
    let (t, f) = (TfrMatrix::wvd_axes(n, 16).0, output_freqs(16));
    let mut last = f64::INFINITY;
    for g in [1.0, 1.5, 2.0, 3.0, 4.0] {
        let rec: Vec<KernelParams> =
            f.iter().map(|&w| KernelParams::new(0.0, w, 2.0 * g, 0.2 * g, 0.0).unwrap()).collect();
        let grid = KernelGrid::per_frequency(t.clone(), f.clone(), rec).unwrap();
        let change = k_equivariant(&x, &grid).unwrap().max_abs_diff(&k_equivariant(&y, &grid).unwrap()).unwrap();
        assert!(change <= last, "g {g}: {change} > {last}");
        last = change;
    }
}
