use std::path::Path;
use std::process::{Command, Output};

use mtae::data::{encode_images, encode_labels, Image};
use mtae::math::RandomSource;

fn mtae(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mtae"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\n{}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Twenty 28x28 blobs, ten per class, written as uncompressed IDX files.
fn idx_fixture(dir: &Path) {
    let mut rng = RandomSource::new(3);
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for i in 0..20u8 {
        let c = i % 2;
        let (cx, cy) = if c == 0 { (10.0, 14.0) } else { (18.0, 14.0) };
        let px = (0..28 * 28)
            .map(|k| {
                let (x, y) = ((k % 28) as f64, (k / 28) as f64);
                let r2 = (x - cx).powi(2) + (y - cy).powi(2);
                ((-r2 / 20.0).exp() + 0.1 * rng.next_f64()).min(1.0)
            })
            .collect();
        images.push(Image::new(28, 28, px).unwrap());
        labels.push(c);
    }
    std::fs::write(dir.join("images.idx"), encode_images(&images).unwrap()).unwrap();
    std::fs::write(dir.join("labels.idx"), encode_labels(&labels)).unwrap();
}

fn tiny_config(dir: &Path) -> std::path::PathBuf {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/mnist-r-d-mtae.cfg"))
        .unwrap()
        .lines()
        .map(|l| match l.split_once(" = ").map(|(k, _)| k) {
            Some("images") => "images = images.idx".to_string(),
            Some("labels") => "labels = labels.idx".to_string(),
            Some("per_class") => "per_class = 5".to_string(),
            Some("repetitions") => "repetitions = 2".to_string(),
            Some("out") => "out = results".to_string(),
            Some("epochs") => "epochs = 2".to_string(),
            Some("hidden_dim") => "hidden_dim = 8".to_string(),
            Some("svm_c") => "svm_c = 1".to_string(),
            _ => l.to_string(),
        })
        .collect::<Vec<_>>()
        .join("\n");
    let path = dir.join("tiny.cfg");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn no_arguments_prints_usage_and_fails() {
    let out = mtae(&[]);
    assert!(!out.status.success());
    let text = String::from_utf8_lossy(&out.stdout) + String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("Usage"), "{text}");
}

#[test]
fn unknown_config_key_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "dataset = mnist-r\nfrobnicate = 1\n").unwrap();
    let out = mtae(&["eval", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn gen_data_writes_six_views() {
    let dir = tempfile::tempdir().unwrap();
    idx_fixture(dir.path());
    let cache = dir.path().join("cache");
    let d = dir.path();
    ok(&mtae(&[
        "gen-data",
        "--images",
        d.join("images.idx").to_str().unwrap(),
        "--labels",
        d.join("labels.idx").to_str().unwrap(),
        "--per-class",
        "5",
        "--out",
        cache.to_str().unwrap(),
    ]));
    let loaded = mtae::data::load_corpus(&cache).unwrap();
    let names: Vec<&str> = loaded.corpus.views.iter().map(|v| v.name.as_str()).collect();
    assert_eq!(names, ["M", "M15", "M30", "M45", "M60", "M75"]);
    assert!(loaded.corpus.views.iter().all(|v| v.len() == 10 && v.dim() == 256));
    assert_eq!(loaded.metadata["per_class"], "5");
}

#[test]
fn eval_is_byte_reproducible_and_parts_merge() {
    let dir = tempfile::tempdir().unwrap();
    idx_fixture(dir.path());
    let cfg = tiny_config(dir.path());
    let cfg = cfg.to_str().unwrap();
    let mut reports = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        ok(&mtae(&["eval", "--config", cfg, "--out", out.to_str().unwrap()]));
        reports.push(std::fs::read(out.join("report.csv")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);

    let parts = dir.path().join("parts");
    let p = parts.to_str().unwrap();
    for k in ["0", "1"] {
        ok(&mtae(&["eval", "--config", cfg, "--out", p, "--only-rep", k]));
    }
    ok(&mtae(&["eval", "--config", cfg, "--out", p, "--collect", "--repetitions", "1"]));
    let first = mtae::harness::EvalReport::load(parts.join("report.csv")).unwrap();
    assert_eq!(first.repetitions, 1);
    ok(&mtae(&["eval", "--config", cfg, "--out", p, "--collect"]));
    assert_eq!(std::fs::read(parts.join("report.csv")).unwrap(), reports[0]);
}

#[test]
fn train_then_spectrum_and_filters() {
    let dir = tempfile::tempdir().unwrap();
    idx_fixture(dir.path());
    let cfg = tiny_config(dir.path());
    let cfg = cfg.to_str().unwrap();
    let model_dir = dir.path().join("model");
    ok(&mtae(&["train", "--config", cfg, "--holdout", "M45", "--out", model_dir.to_str().unwrap()]));
    let trace = std::fs::read_to_string(model_dir.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 3, "{trace}");
    let model = model_dir.join("model.bin");
    let m = model.to_str().unwrap();

    let spectra = dir.path().join("spectrum");
    let line = ok(&mtae(&["spectrum", "--config", cfg, "--model", m, "--view", "M45", "--out", spectra.to_str().unwrap()]));
    assert!(line.starts_with("top-20 mass"));
    assert!(spectra.join("spectrum.txt").exists());

    let fil = dir.path().join("filters");
    ok(&mtae(&["filters", "--model", m, "--count", "8", "--cols", "4", "--out", fil.to_str().unwrap()]));
    assert!(std::fs::read(fil.join("filters.pgm")).unwrap().starts_with(b"P"));
}

#[test]
fn oracle_command_passes() {
    let text = ok(&mtae(&["oracle", "--fixtures", "5"]));
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
    assert!(text.lines().count() >= 8);
}
