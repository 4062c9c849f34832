//! Subcommand implementations.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ktfr::diagnostics::{interference_report, lipschitz_bound, logon_area};
use ktfr::learn::{train, write_checkpoint, write_loss_curve, ChirpTask, GradientMode, Init, TrainConfig};
use ktfr::presets::preset_grid;
use ktfr::signal::{load_wav, prepare_for_wvd};
use ktfr::{
    k_equivariant, k_exact, k_fast, smoothed_pwvd, synth, wvd_direct, BaseSmoothing, KernelGrid, KernelParams, Preset,
    PresetHyper, Sharing, Signal, TfrMatrix,
};

use crate::config::{ConfigFile, Resolver};
use crate::spec::{parse_number, parse_spec};
use crate::{
    BaseArgs, BenchArgs, Cli, CliError, Command, CompareArgs, DiagnoseArgs, GridArgs, HyperArgs, InputArgs,
    PresetsArgs, TrainArgs, TransformArgs,
};

type Out<'a> = &'a mut dyn Write;

fn io(e: std::io::Error) -> CliError {
    CliError::Library(e.into())
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn run(cli: &Cli, out: Out<'_>) -> Result<(), CliError> {
    let cfg = cli.config.as_deref().map(ConfigFile::load).transpose()?;
    let section = match &cli.command {
        Command::Transform(_) => "transform",
        Command::Compare(_) => "compare",
        Command::Diagnose(_) => "diagnose",
        Command::Bench(_) => "bench",
        Command::Train(_) => "train",
        Command::Presets(_) => "presets",
    };
    let r = Resolver { cfg: cfg.as_ref(), section };
    let seed = r.or(cli.seed, "seed", 0u64)?;
    match &cli.command {
        Command::Transform(a) => transform(r, a, out),
        Command::Compare(a) => compare(r, a, out),
        Command::Diagnose(a) => diagnose(r, a, out),
        Command::Bench(a) => bench(r, a, seed, out),
        Command::Train(a) => train_cmd(r, a, seed, out),
        Command::Presets(a) => presets(r, a, out),
    }
}

fn positive(v: f64, what: &str) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(config_err(format!("{what} must be positive, got {v}")))
    }
}

fn at_least(v: usize, min: usize, what: &str) -> Result<usize, CliError> {
    if v >= min {
        Ok(v)
    } else {
        Err(config_err(format!("{what} must be at least {min}, got {v}")))
    }
}

fn load_signal(r: Resolver<'_>, a: &InputArgs) -> Result<Signal, CliError> {
    let input: Option<PathBuf> = r.get(a.input.clone(), "input")?;
    let spec: Option<String> = r.get(a.spec.clone(), "spec")?;
    let x = match (input, spec) {
        (Some(_), Some(_)) => return Err(config_err("give either --input or --spec, not both")),
        (None, None) => return Err(config_err("no signal: pass --input <wav> or --spec <spec>")),
        (Some(path), None) => load_wav(&path)?,
        (None, Some(s)) => {
            let len = at_least(r.or(a.len, "len", 256)?, 2, "len")?;
            synth(&parse_spec(&s, len).map_err(config_err)?)?
        }
    };
    let keep_real = a.no_analytic || r.or(None, "no-analytic", false)?;
    Ok(prepare_for_wvd(&x, !keep_real)?)
}

fn hyper(r: Resolver<'_>, a: &HyperArgs) -> Result<PresetHyper, CliError> {
    let d = PresetHyper::default();
    Ok(PresetHyper {
        sigma_t: r.or(a.sigma_t, "sigma-t", d.sigma_t)?,
        sigma0: r.or(a.sigma0, "sigma0", d.sigma0)?,
        scale_max: r.or(a.scale_max, "S", d.scale_max)?,
        widen: r.or(a.widen, "widen", d.widen)?,
        chirp: r.or(a.chirp, "chirp", d.chirp)?,
    })
}

fn preset(r: Resolver<'_>, name: Option<String>, key: &str, h: &HyperArgs) -> Result<Preset, CliError> {
    let name: String = r.or(name, key, "spectrogram".to_string())?;
    Preset::from_name(&name, &hyper(r, h)?).map_err(|e| config_err(e.to_string()))
}

fn build_grid(r: Resolver<'_>, a: &GridArgs, n: usize) -> Result<KernelGrid, CliError> {
    if let Some(path) = r.get::<PathBuf>(a.kernels.clone(), "kernels")? {
        return Ok(KernelGrid::read_csv(path)?);
    }
    let p = preset(r, a.preset.clone(), "preset", &a.hyper)?;
    let freqs = at_least(r.or(a.freqs, "freqs", 64)?, 1, "freqs")?;
    let hop = at_least(r.or(a.hop, "hop", 1)?, 1, "hop")?;
    let times = (0..n).step_by(hop).map(|t| t as f64).collect();
    Ok(preset_grid(&p, times, ktfr::presets::output_freqs(freqs))?)
}

fn base(r: Resolver<'_>, a: &BaseArgs, grid: &KernelGrid, n: usize) -> Result<BaseSmoothing, CliError> {
    let st = r.get(a.base_sigma_t, "base-sigma-t")?;
    let sf = r.get(a.base_sigma_f, "base-sigma-f")?;
    match (st, sf) {
        (Some(st), Some(sf)) => Ok(BaseSmoothing::new(st, sf)?),
        (None, None) => Ok(BaseSmoothing::for_grid(grid, n)?),
        _ => Err(config_err("give both --base-sigma-t and --base-sigma-f, or neither")),
    }
}

fn exact(x: &Signal, grid: &KernelGrid) -> Result<TfrMatrix, CliError> {
    let integer_times = grid.times().iter().all(|t| t.fract() == 0.0);
    Ok(if grid.is_time_shared() && integer_times { k_equivariant(x, grid)? } else { k_exact(x, grid)? })
}

fn write_tfr(k: &TfrMatrix, path: &Path, format: &str) -> Result<Vec<PathBuf>, CliError> {
    let pgm = path.with_extension("pgm");
    match format {
        "csv" => k.write_csv(path).map(|_| vec![path.to_path_buf()]),
        "pgm" => k.write_pgm_with_sidecar(path).map(|_| vec![path.to_path_buf()]),
        "both" => {
            k.write_csv(path)?;
            k.write_pgm_with_sidecar(&pgm)?;
            Ok(vec![path.to_path_buf(), pgm])
        }
        other => return Err(config_err(format!("unknown format {other:?}; use csv, pgm or both"))),
    }
    .map_err(CliError::from)
}

fn transform(r: Resolver<'_>, a: &TransformArgs, out: Out<'_>) -> Result<(), CliError> {
    let path: PathBuf = r.get(a.out.clone(), "out")?.ok_or_else(|| config_err("transform needs --out"))?;
    let format: String = r.or(a.format.clone(), "format", "csv".to_string())?;
    let method: String = r.or(a.method.clone(), "method", "auto".to_string())?;
    let x = load_signal(r, &a.input)?;
    let grid = build_grid(r, &a.grid, x.len())?;
    let k = match method.as_str() {
        "auto" => exact(&x, &grid)?,
        "exact" => k_exact(&x, &grid)?,
        "equivariant" => k_equivariant(&x, &grid)?,
        "fast" => k_fast(&x, &grid, &base(r, &a.base, &grid, x.len())?)?,
        other => return Err(config_err(format!("unknown method {other:?}; use auto, exact, fast or equivariant"))),
    };
    for p in write_tfr(&k, &path, &format)? {
        writeln!(out, "wrote {} ({} x {}, {})", p.display(), k.n_time(), k.n_freq(), k.provenance).map_err(io)?;
    }
    Ok(())
}

fn compare(r: Resolver<'_>, a: &CompareArgs, out: Out<'_>) -> Result<(), CliError> {
    let tol = positive(r.or(a.tol, "tol", 1e-2)?, "tol")?;
    let x = load_signal(r, &a.input)?;
    let grid = build_grid(r, &a.grid, x.len())?;
    let b = base(r, &a.base, &grid, x.len())?;
    let fast = k_fast(&x, &grid, &b)?;
    let reference = exact(&x, &grid)?;
    let scale = reference.max_abs();
    let diffs: Vec<f64> = fast.values().iter().zip(reference.values()).map(|(p, q)| (p - q).abs()).collect();
    let (max_rel, mean_rel) = if scale > 0.0 {
        (diffs.iter().cloned().fold(0.0, f64::max) / scale, diffs.iter().sum::<f64>() / diffs.len() as f64 / scale)
    } else {
        (0.0, 0.0)
    };
    writeln!(
        out,
        "base_sigma_t={:.6} base_sigma_f={:.6}\nmax_rel_err={max_rel:.6e}\nmean_rel_err={mean_rel:.6e}\ntol={tol:e}",
        b.sigma_t, b.sigma_f
    )
    .map_err(io)?;
    if max_rel > tol {
        return Err(CliError::Tolerance(format!("max relative error {max_rel:.3e} exceeds tolerance {tol:e}")));
    }
    Ok(())
}

fn unique_kernels(grid: &KernelGrid) -> Vec<KernelParams> {
    match grid.sharing() {
        Sharing::PerCell(v) | Sharing::PerFrequency(v) => v.clone(),
    }
}

fn diagnose(r: Resolver<'_>, a: &DiagnoseArgs, out: Out<'_>) -> Result<(), CliError> {
    let x = load_signal(r, &a.input)?;
    let grid = build_grid(r, &a.grid, x.len())?;
    let w = wvd_direct(&x)?;
    let k = exact(&x, &grid)?;
    for (name, m) in [("wvd", &w), ("k", &k)] {
        let rep = interference_report(m);
        writeln!(
            out,
            "{name}.min={:.6e} {name}.negative_fraction={:.6} {name}.nonnegative={}",
            rep.min_value, rep.negative_fraction, rep.passes_nonnegativity
        )
        .map_err(io)?;
    }
    let kernels = unique_kernels(&grid);
    let reports = kernels.iter().map(logon_area).collect::<Result<Vec<_>, _>>()?;
    let min = reports.iter().map(|l| l.area).fold(f64::INFINITY, f64::min);
    let max = reports.iter().map(|l| l.area).fold(f64::NEG_INFINITY, f64::max);
    let passing = reports.iter().filter(|l| l.passes).count();
    writeln!(
        out,
        "logon.kernels={} logon.min_area={min:.6e} logon.max_area={max:.6e} logon.passing={passing}",
        reports.len()
    )
    .map_err(io)?;
    if let Some(pair) = r.get::<PathBuf>(a.pair.clone(), "pair")? {
        let other = KernelGrid::read_csv(pair)?;
        let l = lipschitz_bound(&grid, &other, &x)?;
        writeln!(
            out,
            "lipschitz.lhs={:.6e} lipschitz.rhs={:.6e} lipschitz.param_distance_sq={:.6e} lipschitz.holds={}",
            l.lhs, l.rhs, l.param_distance_sq, l.holds
        )
        .map_err(io)?;
    }
    Ok(())
}

fn bench(r: Resolver<'_>, a: &BenchArgs, seed: u64, out: Out<'_>) -> Result<(), CliError> {
    let mut input = a.input.clone();
    if input.input.is_none() && r.get::<String>(input.spec.clone(), "spec")?.is_none() {
        input.spec = Some(format!("band:seed={seed}"));
    }
    if input.len.is_none() {
        input.len = Some(r.or(None, "len", 4096)?);
    }
    let x = load_signal(r, &input)?;
    let sf = positive(r.or(a.base_sigma_f, "base-sigma-f", 1.0 / 256.0)?, "base-sigma-f")?;
    let sweep: String = r.or(a.sweep.clone(), "sweep", "48,64,96,160,256".to_string())?;
    let sweep: Vec<f64> = sweep.split(',').map(parse_number).collect::<Result<_, _>>().map_err(config_err)?;
    let repeats = at_least(r.or(a.repeats, "repeats", 1)?, 1, "repeats")?;
    let mut rows = Vec::with_capacity(sweep.len());
    writeln!(out, "sigma_t,sigma_f,seconds").map_err(io)?;
    for &st in &sweep {
        let b = BaseSmoothing::new(st, sf)?;
        let mut best = f64::INFINITY;
        for _ in 0..repeats {
            let t0 = Instant::now();
            smoothed_pwvd(&x, &b)?;
            best = best.min(t0.elapsed().as_secs_f64());
        }
        writeln!(out, "{st},{sf},{best:.6}").map_err(io)?;
        rows.push((st, best));
    }
    let monotone = rows.windows(2).all(|w| w[1].1 <= w[0].1);
    let speedup = rows.first().map_or(1.0, |f| f.1) / rows.last().map_or(1.0, |l| l.1);
    writeln!(out, "monotone={monotone} speedup={speedup:.2}").map_err(io)?;
    if let Some(path) = r.get::<PathBuf>(a.out.clone(), "out")? {
        let mut s = String::from("sigma_t,sigma_f,seconds\n");
        for (st, t) in &rows {
            s.push_str(&format!("{st},{sf},{t}\n"));
        }
        fs::write(path, s).map_err(io)?;
    }
    Ok(())
}

fn train_cmd(r: Resolver<'_>, a: &TrainArgs, seed: u64, out: Out<'_>) -> Result<(), CliError> {
    let dir: PathBuf = r.get(a.out_dir.clone(), "out-dir")?.ok_or_else(|| config_err("train needs --out-dir"))?;
    let d = TrainConfig::default();
    let mode_name: String = r.or(a.mode.clone(), "mode", "numeric".to_string())?;
    let mode = match mode_name.as_str() {
        "numeric" => GradientMode::Numeric { h: positive(r.or(a.h, "h", 1e-4)?, "h")? },
        "analytic-head" => GradientMode::AnalyticHead,
        other => return Err(config_err(format!("unknown gradient mode {other:?}; use numeric or analytic-head"))),
    };
    let cfg = TrainConfig {
        learning_rate: r.or(a.lr, "lr", d.learning_rate)?,
        epochs: r.or(a.epochs, "epochs", d.epochs)?,
        batch_size: at_least(r.or(a.batch_size, "batch-size", d.batch_size)?, 1, "batch-size")?,
        n_train: r.or(a.n_train, "n-train", d.n_train)?,
        seed,
        mode,
        ..d
    };
    let n_total = r.or(a.n_total, "n-total", 300)?;
    let len = at_least(r.or(a.len, "len", 512)?, 2, "len")?;
    let n_freq = at_least(r.or(a.freqs, "freqs", 16)?, 1, "freqs")?;
    if cfg.n_train >= n_total {
        return Err(config_err(format!("n-train {} must be below n-total {n_total}", cfg.n_train)));
    }
    let p = preset(r, a.preset.clone(), "preset", &a.hyper)?;
    let data = ChirpTask { len, ..Default::default() }.generate(n_total, seed)?;
    let outcome = train(&data, &cfg, &Init::Preset { preset: p, n_freq })?;
    fs::create_dir_all(&dir).map_err(io)?;
    write_checkpoint(dir.join("checkpoint.csv"), &outcome.model, &cfg)?;
    write_loss_curve(dir.join("loss_curve.csv"), &outcome.curve)?;
    let final_loss = outcome.curve.last().map_or(f64::NAN, |c| c.train_loss);
    writeln!(
        out,
        "epochs={} initial_accuracy={:.4} test_accuracy={:.4} final_train_loss={final_loss:.6}\nwrote {}",
        cfg.epochs,
        outcome.initial_accuracy,
        outcome.test_accuracy,
        dir.display()
    )
    .map_err(io)?;
    Ok(())
}

fn presets(r: Resolver<'_>, a: &PresetsArgs, out: Out<'_>) -> Result<(), CliError> {
    let name: String = r.get(a.name.clone(), "name")?.ok_or_else(|| config_err("presets needs --name"))?;
    let p = Preset::from_name(&name, &hyper(r, &a.hyper)?).map_err(|e| config_err(e.to_string()))?;
    let freqs = at_least(r.or(a.freqs, "freqs", 8)?, 1, "freqs")?;
    let times = at_least(r.or(a.times, "times", 1)?, 1, "times")?;
    let grid = preset_grid(&p, (0..times).map(|t| t as f64).collect(), ktfr::presets::output_freqs(freqs))?;
    writeln!(out, "t,f,mu_t,mu_f,sigma_t,sigma_f,rho,sigma_t_sigma_f").map_err(io)?;
    for t in 0..times {
        for f in 0..freqs {
            let k = grid.get(t, f);
            writeln!(
                out,
                "{t},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
                grid.freqs()[f],
                k.mu_t,
                k.mu_f,
                k.sigma_t,
                k.sigma_f,
                k.rho,
                k.sigma_t * k.sigma_f
            )
            .map_err(io)?;
        }
    }
    Ok(())
}
