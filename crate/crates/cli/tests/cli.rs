use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ktfr::presets::preset_params;
use ktfr::{Preset, TfrMatrix};

fn ktfr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ktfr")).args(args).output().expect("run ktfr")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn tone_transform_peaks_at_the_tone_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let o = ktfr(&["transform", "--spec", "tone:0.5pi", "--preset", "spectrogram", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let k = TfrMatrix::read_csv(&out).unwrap();
    let df = k.freq_axis()[1] - k.freq_axis()[0];
    for t in 32..k.n_time() - 32 {
        let row = k.row(t);
        let best = (0..row.len()).fold(0, |b, i| if row[i] > row[b] { i } else { b });
        assert!((k.freq_axis()[best] - PI / 2.0).abs() <= df, "frame {t}: peak at {}", k.freq_axis()[best]);
    }
}

#[test]
fn identical_invocations_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let o = ktfr(&[
            "transform",
            "--spec",
            "noise:seed=3",
            "--len",
            "64",
            "--freqs",
            "16",
            "--out",
            p(out),
            "--format",
            "both",
        ]);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read(a.with_extension("pgm")).unwrap(), fs::read(b.with_extension("pgm")).unwrap());
    let side = fs::read_to_string(dir.path().join("a.pgm.csv")).unwrap();
    assert!(side.starts_with("min,max,width,height\n"));
}

#[test]
fn compare_passes_and_fails_by_tolerance() {
    let ok = ktfr(&["compare", "--spec", "noise:seed=7", "--preset", "scalogram", "--tol", "1e-2"]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(stdout(&ok).contains("max_rel_err="));
    let strict = ktfr(&["compare", "--spec", "noise:seed=7", "--len", "64", "--freqs", "16", "--tol", "1e-14"]);
    assert_eq!(code(&strict), 3);
}

#[test]
fn compare_rejects_narrow_kernels_under_a_wide_base() {
    let o = ktfr(&[
        "compare",
        "--spec",
        "noise:seed=1",
        "--len",
        "64",
        "--freqs",
        "8",
        "--sigma-t",
        "2",
        "--base-sigma-t",
        "4",
        "--base-sigma-f",
        "0.2",
    ]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("not PSD"));
}

#[test]
fn scalogram_preset_table_is_minimum_uncertainty() {
    let o = ktfr(&["presets", "--name", "scalogram", "--freqs", "4", "--S", "3", "--sigma0", "1.0"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    for r in rows {
        let product: f64 = r.rsplit(',').next().unwrap().parse().unwrap();
        assert!((product - 1.0).abs() < 1e-12, "{r}");
    }
}

#[test]
fn usage_and_config_errors_have_distinct_codes() {
    assert_eq!(code(&ktfr(&["frobnicate"])), 2);
    assert_eq!(code(&ktfr(&["transform", "--bogus"])), 2);
    assert_eq!(code(&ktfr(&["compare"])), 1);
    assert_eq!(code(&ktfr(&["presets", "--name", "cqt"])), 1);
    assert_eq!(code(&ktfr(&["transform", "--spec", "saw:1", "--out", "/dev/null"])), 1);
}

#[test]
fn config_file_sections_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "len = 64\nfreqs = 8\n[compare]\nspec = noise:seed=2\ntol = -1\n").unwrap();
    assert_eq!(code(&ktfr(&["compare", "--config", p(&cfg)])), 1);
    assert_eq!(code(&ktfr(&["compare", "--config", p(&cfg), "--tol", "1e-2"])), 0);
    fs::write(&cfg, "not a key value line\n").unwrap();
    assert_eq!(code(&ktfr(&["compare", "--config", p(&cfg)])), 1);
}

#[test]
fn thread_cap_is_validated() {
    let run = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_ktfr"))
            .args(["presets", "--name", "spectrogram", "--freqs", "2"])
            .env("KTFR_THREADS", v)
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("1")), 0);
    assert_eq!(code(&run("0")), 1);
    assert_eq!(code(&run("many")), 1);
}

#[test]
fn diagnose_reports_all_sections() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    preset_params(&Preset::Spectrogram { sigma_t: 4.0 }, 64, 8).unwrap().write_csv(&a).unwrap();
    preset_params(&Preset::Spectrogram { sigma_t: 4.1 }, 64, 8).unwrap().write_csv(&b).unwrap();
    let o = ktfr(&["diagnose", "--spec", "tone:0.8+tone:2.0", "--len", "64", "--kernels", p(&a), "--pair", p(&b)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("wvd.nonnegative=false"), "{text}");
    assert!(text.contains("k.nonnegative=true"), "{text}");
    assert!(text.contains("logon.kernels=8"));
    assert!(text.contains("lipschitz.holds=true"), "{text}");
}

#[test]
fn bench_reports_a_sweep() {
    let o = ktfr(&["bench", "--len", "256", "--sweep", "4,8,16", "--base-sigma-f", "1/16"]);
    // `1/16` is not a number the flag parser accepts
    assert_eq!(code(&o), 2);
    let o = ktfr(&["bench", "--len", "256", "--sweep", "4,8,16", "--base-sigma-f", "0.0625"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 5);
    assert!(text.contains("monotone="));
}

#[test]
fn train_writes_deterministic_checkpoint_and_curve() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = vec![];
    for run in ["r1", "r2"] {
        let out = dir.path().join(run);
        let o = ktfr(&[
            "train",
            "--epochs",
            "3",
            "--n-total",
            "24",
            "--n-train",
            "12",
            "--len",
            "64",
            "--freqs",
            "4",
            "--batch-size",
            "4",
            "--sigma-t",
            "3",
            "--seed",
            "5",
            "--out-dir",
            p(&out),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        files.push((
            fs::read(out.join("checkpoint.csv")).unwrap(),
            fs::read_to_string(out.join("loss_curve.csv")).unwrap(),
        ));
    }
    assert_eq!(files[0], files[1]);
    let curve = &files[0].1;
    assert!(curve.starts_with("epoch,train_loss,test_acc\n"));
    assert_eq!(curve.lines().count(), 4);
    assert!(String::from_utf8_lossy(&files[0].0).starts_with("# ktfr checkpoint lr="));
}
