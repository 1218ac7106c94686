//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 1-5 and 7 read the committed long-run reports under `results/`
//! (produced by `scripts/reproduce.sh`); they report FAIL honestly but do
//! not fail the build, since they measure the method rather than the code.
//! Criteria 6 and 8-10 run live and fail the build when they fail.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use mtae::autoencoder::TrainConfig;
use mtae::data::{
    assemble_training_matrices, rand_sel, write_feature_table, DomainView, MultiDomainCorpus,
};
use mtae::harness::{
    emit_report, run_leave_one_domain_out, ClassifierSettings, EvalReport, ExperimentConfig,
};
use mtae::math::{Matrix, RandomSource};
use mtae::oracle::gradient_suite;

const METHODS: [&str; 5] = ["raw", "ae", "dae", "mtae", "d-mtae"];
const MNIST_R: [f64; 5] = [63.68, 83.88, 85.30, 85.73, 87.58];
const MNIST_S: [f64; 5] = [71.98, 85.14, 85.28, 88.48, 88.72];
const REQUIRED_REPS: usize = 10;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn report(ds: &str, method: &str) -> Option<EvalReport> {
    EvalReport::load(root().join("results").join(ds).join(method).join("report.csv")).ok()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn reproduction(ds: &str, targets: [f64; 5]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (m, want) in METHODS.iter().zip(targets) {
        match report(ds, m) {
            Some(r) => {
                let got = r.overall_mean();
                let ok = (got - want).abs() <= 3.0 && r.repetitions >= REQUIRED_REPS;
                pass &= ok;
                parts.push(format!("{m} {got:.2} vs {want:.2} ({} reps)", r.repetitions));
            }
            None => {
                pass = false;
                parts.push(format!("{m} missing"));
            }
        }
    }
    outcome(pass, parts.join("; "))
}

fn ordering() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for ds in ["mnist-r", "mnist-s"] {
        let means: Option<BTreeMap<&str, (f64, usize)>> = METHODS
            .iter()
            .map(|m| report(ds, m).map(|r| (*m, (r.overall_mean(), r.repetitions))))
            .collect();
        let Some(means) = means else {
            pass = false;
            parts.push(format!("{ds}: reports missing"));
            continue;
        };
        let v = |m: &str| means[m].0;
        let enough = means.values().all(|(_, n)| *n >= REQUIRED_REPS);
        let ok = v("d-mtae") > v("mtae") - 0.5 && v("mtae") > v("ae") && v("ae") > v("raw") + 5.0;
        pass &= ok && enough;
        parts.push(format!(
            "{ds}: d-mtae {:.2}, mtae {:.2}, ae {:.2}, raw {:.2}{}",
            v("d-mtae"),
            v("mtae"),
            v("ae"),
            v("raw"),
            if ok { "" } else { " (order broken)" }
        ));
    }
    outcome(pass, parts.join("; "))
}

fn spot_cell() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (m, want) in [("raw", 52.40), ("d-mtae", 82.50)] {
        match report("mnist-r", m).as_ref().and_then(|r| r.case("M").map(|c| (c.mean(), r.repetitions))) {
            Some((got, n)) => {
                pass &= (got - want).abs() <= 4.0 && n >= REQUIRED_REPS;
                parts.push(format!("{m} {got:.2} vs {want:.2} ({n} reps)"));
            }
            None => {
                pass = false;
                parts.push(format!("{m} missing"));
            }
        }
    }
    outcome(pass, parts.join("; "))
}

fn anomaly() -> Outcome {
    let Some(r) = report("mnist-r", "d-mtae") else {
        return outcome(false, "d-mtae report missing");
    };
    let lowest = r
        .cases
        .iter()
        .min_by(|a, b| a.mean().total_cmp(&b.mean()))
        .expect("six cases");
    let cells: Vec<String> = r.cases.iter().map(|c| format!("{} {:.2}", c.target, c.mean())).collect();
    outcome(
        lowest.target == "M45" && r.repetitions >= REQUIRED_REPS,
        format!("lowest {}; {} ({} reps)", lowest.target, cells.join(", "), r.repetitions),
    )
}

fn read_spectra(method: &str) -> Option<BTreeMap<String, f64>> {
    let text = std::fs::read_to_string(root().join("results/mnist-r").join(method).join("spectra.csv")).ok()?;
    text.lines()
        .skip(1)
        .map(|l| {
            let (t, v) = l.split_once(',')?;
            Some((t.to_string(), v.parse().ok()?))
        })
        .collect()
}

fn spectrum() -> Outcome {
    let (Some(ae), Some(dm)) = (read_spectra("ae"), read_spectra("d-mtae")) else {
        return outcome(false, "spectra.csv missing");
    };
    let mut pass = ae.len() == 6 && dm.len() == 6;
    let mut parts = Vec::new();
    for (t, a) in &ae {
        let d = dm.get(t).copied().unwrap_or(f64::NAN);
        pass &= d > *a;
        parts.push(format!("{t} {d:.4}/{a:.4}"));
    }
    outcome(pass, format!("d-mtae/ae top-20 mass: {}", parts.join(", ")))
}

fn gradients() -> Outcome {
    let start = Instant::now();
    let checks = gradient_suite(20, 2024);
    let secs = start.elapsed().as_secs_f64();
    let failed: Vec<String> = checks.iter().filter(|c| !c.passed()).map(|c| c.line()).collect();
    let worst = checks.iter().map(|c| c.worst).fold(0.0, f64::max);
    outcome(
        failed.is_empty() && secs < 10.0,
        format!(
            "{} families x 20 fixtures, worst {worst:.2e}, {secs:.2}s{}",
            checks.len(),
            if failed.is_empty() { String::new() } else { format!("; {}", failed.join("; ")) }
        ),
    )
}

fn unbalanced_corpus(rng: &mut RandomSource) -> MultiDomainCorpus {
    let m = 2 + rng.below(3);
    let classes = 2 + rng.below(4);
    let views = (0..m)
        .map(|l| {
            let mut labels = Vec::new();
            for c in 0..classes {
                labels.extend(std::iter::repeat(c).take(1 + rng.below(6)));
            }
            rng.shuffle(&mut labels);
            // the row id is stored in the first column so selections can be traced
            let x = Matrix::from_fn(labels.len(), 3, |i, j| if j == 0 { i as f64 } else { rng.next_f64() });
            DomainView::new(format!("v{l}"), x, labels).unwrap()
        })
        .collect();
    MultiDomainCorpus::new(views).unwrap()
}

fn rand_sel_suite() -> Outcome {
    let mut failures = Vec::new();
    for seed in 0..100 {
        let mut rng = RandomSource::new(seed);
        let corpus = unbalanced_corpus(&mut rng);
        let minima: BTreeMap<usize, usize> = corpus.views[0]
            .class_counts()
            .keys()
            .map(|&c| (c, corpus.views.iter().map(|v| v.class_counts()[&c]).min().unwrap()))
            .collect();
        let out = rand_sel(&corpus, &mut rng).unwrap();
        let counts_ok = out.views.iter().all(|v| v.class_counts() == minima);
        let aligned = out.aligned && out.views.iter().all(|v| v.labels == out.views[0].labels);
        // every kept row is a distinct original row of the same class
        let faithful = out.views.iter().zip(&corpus.views).all(|(o, v)| {
            let mut ids: Vec<usize> = (0..o.len()).map(|i| o.x[(i, 0)] as usize).collect();
            let same = ids.iter().zip(&o.labels).all(|(&id, &l)| v.labels[id] == l && v.x.row(id) == o.x.row(ids.iter().position(|&x| x == id).unwrap()));
            ids.sort_unstable();
            ids.dedup();
            same && ids.len() == o.len()
        });
        if !(counts_ok && aligned && faithful) {
            failures.push(seed);
        }
    }
    // stacked task pairs: M = 3 views, n = 2 rows
    let views = (0..3)
        .map(|l| {
            let x = Matrix::from_fn(2, 2, |i, j| (10 * l + i) as f64 + 0.5 * j as f64);
            DomainView::new(format!("v{l}"), x, vec![0, 1]).unwrap()
        })
        .collect();
    let t = assemble_training_matrices(&MultiDomainCorpus::new(views).unwrap()).unwrap();
    let mut pairs: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for l in 0..3 {
        for j in 0..6 {
            let input = t.x_bar[(j, 0)] as usize;
            let target = t.targets[l][(j, 0)] as usize;
            // same instance, views input/10 -> target/10
            assert_eq!(input % 10, target % 10);
            *pairs.entry((input / 10, target / 10)).or_default() += 1;
        }
    }
    let pairs_ok = pairs.len() == 9 && pairs.values().all(|&n| n == 2) && t.x_bar.rows() == 6;
    outcome(
        failures.is_empty() && pairs_ok,
        format!(
            "100 corpora, {} failures; {} of 9 task pairs, each seen {:?} times",
            failures.len(),
            pairs.len(),
            pairs.values().collect::<std::collections::BTreeSet<_>>()
        ),
    )
}

fn small_digit_config(dir: &Path) -> ExperimentConfig {
    let text = std::fs::read_to_string(root().join("configs/mnist-r-d-mtae.cfg")).unwrap();
    let mut cfg = ExperimentConfig::parse(&text, root().join("configs")).unwrap();
    cfg.source = match cfg.source {
        mtae::harness::DataSource::Idx { images, labels, side, data_seed, .. } => mtae::harness::DataSource::Idx {
            images,
            labels,
            per_class: 3,
            side,
            data_seed,
        },
        s => s,
    };
    cfg.train.epochs = 2;
    cfg.train.hidden_dim = 16;
    cfg.repetitions = 2;
    cfg.spectrum = true;
    cfg.out = dir.display().to_string();
    cfg
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_digit_config(dir.path());
    let mut bytes = Vec::new();
    for k in 0..2 {
        let out = run_leave_one_domain_out(&cfg).unwrap();
        let d = dir.path().join(format!("run{k}"));
        emit_report(&out.report, &d).unwrap();
        bytes.push(std::fs::read(d.join("report.csv")).unwrap());
    }
    outcome(
        bytes[0] == bytes[1],
        format!("two eval runs, report.csv {} bytes, identical: {}", bytes[0].len(), bytes[0] == bytes[1]),
    )
}

/// Three domains of Gaussian class clusters in 512 dimensions; every domain
/// adds its own offset and its own low-rank nuisance, so held-out domains
/// are shifted well beyond the class separation.
fn synthetic_tables(seed: u64, dir: &Path) -> Vec<String> {
    let (d, classes, rank) = (512, 5, 8);
    let mut r = RandomSource::new(seed);
    let centers: Vec<Vec<f64>> = (0..classes).map(|_| (0..d).map(|_| 0.15 * r.normal()).collect()).collect();
    (0..3)
        .map(|l| {
            let offset: Vec<f64> = (0..d).map(|_| r.normal()).collect();
            let basis = Matrix::from_fn(d, rank, |_, _| r.normal() / (d as f64).sqrt());
            let mut rows = Vec::new();
            let mut labels = Vec::new();
            for (c, mu) in centers.iter().enumerate() {
                for _ in 0..25 + r.below(11) {
                    let z: Vec<f64> = (0..rank).map(|_| 4.0 * r.normal()).collect();
                    rows.push(
                        (0..d)
                            .map(|i| mu[i] + offset[i] + (0..rank).map(|k| basis[(i, k)] * z[k]).sum::<f64>() + 0.5 * r.normal())
                            .collect::<Vec<f64>>(),
                    );
                    labels.push(c);
                }
            }
            let name = format!("domain-{l}.csv");
            let view = DomainView::new(&name, Matrix::from_rows(&rows), labels).unwrap();
            write_feature_table(&view, dir.join(&name)).unwrap();
            name
        })
        .collect()
}

fn feature_pipeline() -> Outcome {
    let preset = |m: &str| {
        let p = root().join(format!("configs/feature-tables-{m}.cfg"));
        ExperimentConfig::load(&p).unwrap()
    };
    let mut presets_ok = true;
    for (m, want) in [("mtae", TrainConfig::feature_mtae()), ("d-mtae", TrainConfig::feature_dmtae())] {
        let cfg = preset(m);
        let again = ExperimentConfig::parse(&cfg.to_text(), &cfg.base_dir).unwrap();
        presets_ok &= cfg.train == want && again == cfg && matches!(cfg.classifier, ClassifierSettings::OneHidden { .. });
    }
    for (m, want) in [
        ("ae", TrainConfig::pixel_ae()),
        ("dae", TrainConfig::pixel_dae()),
        ("mtae", TrainConfig::pixel_mtae()),
        ("d-mtae", TrainConfig::pixel_dmtae()),
    ] {
        for ds in ["mnist-r", "mnist-s"] {
            let cfg = ExperimentConfig::load(root().join(format!("configs/{ds}-{m}.cfg"))).unwrap();
            presets_ok &= cfg.train == want && cfg.repetitions == REQUIRED_REPS;
        }
    }

    let (mut pre, mut none) = (0.0, 0.0);
    let seeds = 10;
    for seed in 0..seeds {
        let dir = tempfile::tempdir().unwrap();
        let tables = synthetic_tables(seed, dir.path());
        let mut cfg = preset("mtae");
        cfg.base_dir = dir.path().to_path_buf();
        cfg.source = mtae::harness::DataSource::Tables(tables);
        // desk-scale pretraining; the shipped preset is far larger
        cfg.train.hidden_dim = 64;
        cfg.train.epochs = 30;
        cfg.train.learning_rate = 0.01;
        cfg.train.seed = seed;
        cfg.classifier = ClassifierSettings::OneHidden {
            learning_rate: 0.05,
            epochs: 30,
            batch_size: 10,
            weight_decay: 3e-4,
        };
        cfg.repetitions = 1;
        pre += run_leave_one_domain_out(&cfg).unwrap().report.overall_mean();
        cfg.method = mtae::harness::Method::Raw;
        none += run_leave_one_domain_out(&cfg).unwrap().report.overall_mean();
    }
    let (pre, none) = (pre / seeds as f64, none / seeds as f64);
    outcome(
        presets_ok && pre > none,
        format!("mtae+1hnn {pre:.2} vs 1hnn {none:.2} over {seeds} seeds; presets round-trip: {presets_ok}"),
    )
}

fn main() {
    // `cargo test -- --list` and filters: this target has a single entry
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    type Check = fn() -> Outcome;
    let criteria: [(&str, Check, bool); 10] = [
        ("digit rotations reproduction", || reproduction("mnist-r", MNIST_R), false),
        ("digit dilations reproduction", || reproduction("mnist-s", MNIST_S), false),
        ("method ordering", ordering, false),
        ("rotations spot cell", spot_cell, false),
        ("hardest rotation case", anomaly, false),
        ("gradient oracles", gradients, true),
        ("spectrum decay", spectrum, false),
        ("balanced selection", rand_sel_suite, true),
        ("deterministic reports", determinism, true),
        ("feature-table pipeline", feature_pipeline, true),
    ];
    let mut live_failures = 0;
    for (i, (name, check, live)) in criteria.iter().enumerate() {
        let o = check();
        println!(
            "criterion {:>2} {} {:<30} {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            name,
            o.detail
        );
        if *live && !o.pass {
            live_failures += 1;
        }
    }
    if live_failures > 0 {
        eprintln!("{live_failures} live criteria failed");
        std::process::exit(1);
    }
}
