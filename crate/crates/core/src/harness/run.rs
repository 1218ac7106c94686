use std::path::Path;

use super::config::{ClassifierSettings, DataSource, Dataset, ExperimentConfig, Method, SvmC, SVM_C_GRID};
use super::report::{CaseResult, EvalReport};
use crate::analysis::{average_spectrum, SpectrumReport};
use crate::autoencoder::{save_autoencoder, train_mtae, train_single_task, ModelParams, TrainConfig};
use crate::classifier::{
    accuracy, cross_validate_svm, fine_tune_1hnn, predict, train_linear_svm, NetConfig,
};
use crate::data::{
    build_view_corpus, load_feature_table, load_idx_images, load_idx_labels, mnist_r_transforms,
    mnist_s_transforms, select_base_subset, MultiDomainCorpus,
};
use crate::error::{Error, Result};
use crate::math::{Activation, Matrix, RandomSource};
use crate::par;

const CV_FOLDS: usize = 10;

/// Builds the multi-domain corpus an experiment runs on.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<MultiDomainCorpus> {
    match &cfg.source {
        DataSource::Idx {
            images,
            labels,
            per_class,
            side,
            data_seed,
        } => {
            let imgs = load_idx_images(cfg.resolve(images))?;
            let labs = load_idx_labels(cfg.resolve(labels))?;
            let base = select_base_subset(&imgs, &labs, *per_class, *side, &mut RandomSource::new(*data_seed))?;
            let transforms = match cfg.dataset {
                Dataset::MnistS => mnist_s_transforms(),
                _ => mnist_r_transforms(),
            };
            build_view_corpus(&base, &transforms)
        }
        DataSource::Tables(files) => {
            let views = files
                .iter()
                .map(|f| load_feature_table(cfg.resolve(f)))
                .collect::<Result<Vec<_>>>()?;
            MultiDomainCorpus::new(views)
        }
    }
}

/// Indices of the training domains for one leave-one-out case. Errors if the
/// held-out domain would leak into training.
pub fn source_domains(domains: usize, held_out: usize) -> Result<Vec<usize>> {
    if held_out >= domains {
        return Err(Error::InvalidArgument(format!(
            "held-out domain {held_out} of {domains}"
        )));
    }
    let src: Vec<usize> = (0..domains).filter(|&l| l != held_out).collect();
    if src.contains(&held_out) || src.is_empty() {
        return Err(Error::InvalidArgument("held-out domain leaked into training".into()));
    }
    Ok(src)
}

/// Everything one (case, repetition) job produces.
#[derive(Debug, Clone)]
pub struct JobOutput {
    /// Percent.
    pub accuracy: f64,
    pub model: Option<ModelParams>,
    pub train_config: Option<TrainConfig>,
}

/// Seeds for one job: the learner and the classifier get separate streams
/// derived from `(base + rep, case)`.
fn job_seeds(base: u64, rep: usize, case: usize) -> (u64, u64) {
    let root = RandomSource::derive(base.wrapping_add(rep as u64), case as u64);
    (root.fork(0).next_u64(), root.fork(1).next_u64())
}

/// Trains the feature learner (if any) on the source domains, fits the
/// classifier on the source rows and scores it on the held-out view.
pub fn run_case(cfg: &ExperimentConfig, corpus: &MultiDomainCorpus, held_out: usize, rep: usize) -> Result<JobOutput> {
    let src_ids = source_domains(corpus.domains(), held_out)?;
    let sources = corpus.without(held_out)?;
    debug_assert_eq!(sources.domains(), src_ids.len());
    let (x_src, y_src) = sources.concatenated()?;
    let target = &corpus.views[held_out];
    let (learner_seed, clf_seed) = job_seeds(cfg.train.seed, rep, held_out);
    let train_cfg = TrainConfig {
        seed: learner_seed,
        ..cfg.train.clone()
    };

    let model = match cfg.method {
        Method::Raw => None,
        Method::Ae | Method::Dae => Some(train_single_task(&train_cfg, &x_src)?.0),
        Method::Mtae | Method::DMtae => Some(train_mtae(&train_cfg, &sources)?.0),
    };

    let predicted = match &cfg.classifier {
        ClassifierSettings::LinearSvm { c, epochs } => {
            let f_src = features(model.as_ref(), &x_src)?;
            let f_tgt = features(model.as_ref(), &target.x)?;
            let c = match c {
                SvmC::Fixed(v) => *v,
                SvmC::CrossValidated => {
                    cross_validate_svm(&f_src, &y_src, &SVM_C_GRID, *epochs, CV_FOLDS, clf_seed)?.best
                }
            };
            let svm = train_linear_svm(&f_src, &y_src, c, *epochs, clf_seed)?;
            predict(&svm, &f_tgt)?
        }
        ClassifierSettings::OneHidden {
            learning_rate,
            epochs,
            batch_size,
            weight_decay,
        } => {
            let net_cfg = NetConfig {
                hidden_dim: cfg.train.hidden_dim,
                learning_rate: *learning_rate,
                epochs: *epochs,
                batch_size: *batch_size,
                weight_decay: *weight_decay,
                hidden: model.as_ref().map_or(Activation::Sigmoid, |p| p.enc),
                seed: clf_seed,
            };
            let init = model.as_ref().map(|p| (&p.w, p.b_enc.as_slice()));
            fine_tune_1hnn(init, &x_src, &y_src, &net_cfg)?.predict(&target.x)?
        }
    };
    Ok(JobOutput {
        accuracy: 100.0 * accuracy(&predicted, &target.labels),
        model,
        train_config: cfg.method.learns_features().then_some(train_cfg),
    })
}

/// Report plus the optional first-repetition artifacts.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: EvalReport,
    /// `(held-out name, spectrum on the held-out view)`.
    pub spectra: Vec<(String, SpectrumReport)>,
    /// `(held-out name, model, its training config)`.
    pub checkpoints: Vec<(String, ModelParams, TrainConfig)>,
}

/// Leave-one-domain-out evaluation: every domain is held out once, each
/// case repeated `repetitions` times with seeds `seed + rep`. Jobs run in
/// parallel; results do not depend on scheduling.
pub fn run_leave_one_domain_out(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let corpus = load_dataset(cfg)?;
    run_on_corpus(cfg, &corpus)
}

pub fn run_on_corpus(cfg: &ExperimentConfig, corpus: &MultiDomainCorpus) -> Result<ExperimentOutput> {
    run_repetitions(cfg, corpus, 0..cfg.repetitions)
}

/// Runs only repetitions `reps` of the experiment. Repetition `r` gets the
/// same seeds as in a full run, so [`merge_parts`] over disjoint ranges gives
/// the full report exactly. Spectra and checkpoints come from repetition 0.
pub fn run_repetitions(
    cfg: &ExperimentConfig,
    corpus: &MultiDomainCorpus,
    reps: std::ops::Range<usize>,
) -> Result<ExperimentOutput> {
    let m = corpus.domains();
    if m < 2 {
        return Err(Error::InvalidArgument("leave-one-out needs >= 2 domains".into()));
    }
    if reps.is_empty() || reps.end > cfg.repetitions {
        return Err(Error::InvalidArgument(format!(
            "repetitions {reps:?} outside 0..{}",
            cfg.repetitions
        )));
    }
    let first = reps.start;
    let reps = reps.len();
    let jobs = par::map_indexed(m * reps, |j| run_case(cfg, corpus, j / reps, first + j % reps));
    let mut cases = Vec::with_capacity(m);
    let mut spectra = Vec::new();
    let mut checkpoints = Vec::new();
    let mut it = jobs.into_iter();
    for held in 0..m {
        let name = corpus.views[held].name.clone();
        let mut acc = Vec::with_capacity(reps);
        for rep in 0..reps {
            let out = it.next().expect("one job per case and repetition")?;
            acc.push(out.accuracy);
            if first + rep != 0 {
                continue;
            }
            if let Some(p) = out.model {
                if cfg.spectrum {
                    let tag = format!("{} held-out {name}", cfg.method);
                    spectra.push((name.clone(), average_spectrum(&p, &corpus.views[held].x, &tag)?));
                }
                if cfg.checkpoints {
                    let tc = out.train_config.expect("set with model");
                    checkpoints.push((name.clone(), p, tc));
                }
            }
        }
        let sources = source_domains(m, held)?
            .into_iter()
            .map(|l| corpus.views[l].name.clone())
            .collect();
        cases.push(CaseResult {
            sources,
            target: name,
            accuracies: acc,
        });
    }
    Ok(ExperimentOutput {
        report: EvalReport {
            dataset: cfg.dataset.to_string(),
            method: cfg.method.to_string(),
            classifier: cfg.classifier.kind().to_string(),
            repetitions: reps,
            config_hash: cfg.hash(),
            cases,
        },
        spectra,
        checkpoints,
    })
}

/// Joins partial reports (in repetition order) into the report of the
/// full run. Every part must come from `cfg` and cover the same cases.
pub fn merge_parts(cfg: &ExperimentConfig, parts: &[EvalReport]) -> Result<EvalReport> {
    let merged = merge_available(cfg, parts)?;
    if merged.repetitions != cfg.repetitions {
        return Err(Error::Config(format!(
            "parts hold {} of {} repetitions",
            merged.repetitions, cfg.repetitions
        )));
    }
    Ok(merged)
}

/// As [`merge_parts`] without requiring every repetition to be present; the
/// merged report records how many it holds.
pub fn merge_available(cfg: &ExperimentConfig, parts: &[EvalReport]) -> Result<EvalReport> {
    let hash = cfg.hash();
    let first = parts.first().ok_or(Error::Empty("report parts"))?;
    let mut merged = EvalReport {
        repetitions: 0,
        cases: first
            .cases
            .iter()
            .map(|c| CaseResult {
                accuracies: Vec::new(),
                ..c.clone()
            })
            .collect(),
        ..first.clone()
    };
    for p in parts {
        if p.config_hash != hash {
            return Err(Error::Config(format!(
                "part has config {} but the config is {hash}",
                p.config_hash
            )));
        }
        if p.cases.len() != merged.cases.len() {
            return Err(Error::Config("parts cover different cases".into()));
        }
        for (m, c) in merged.cases.iter_mut().zip(&p.cases) {
            if m.target != c.target || m.sources != c.sources {
                return Err(Error::Config("parts cover different cases".into()));
            }
            m.accuracies.extend_from_slice(&c.accuracies);
        }
        merged.repetitions += p.repetitions;
    }
    Ok(merged)
}

/// Safe file stem for a domain name (`M*0.9` → `M_0.9`).
pub fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

/// Writes the report, plus `spectra.csv`, per-case spectra and checkpoints
/// when present.
pub fn write_outputs(out: &ExperimentOutput, dir: &Path) -> Result<()> {
    super::report::emit_report(&out.report, dir)?;
    write_extras(out, dir)
}

/// Spectra and checkpoints only.
pub fn write_extras(out: &ExperimentOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    if !out.spectra.is_empty() {
        let mut csv = String::from("target,top20_mass\n");
        for (name, s) in &out.spectra {
            csv.push_str(&format!("{name},{}\n", s.top_k_mass(20)));
            s.write(dir.join(format!("spectrum-{}.txt", file_stem(name))))?;
        }
        let p = dir.join("spectra.csv");
        std::fs::write(&p, csv).map_err(|e| Error::io(&p, e))?;
    }
    for (name, p, tc) in &out.checkpoints {
        save_autoencoder(dir.join(format!("model-{}.bin", file_stem(name))), p, tc)?;
    }
    Ok(())
}

/// Feature matrix of a view under an optional learner.
pub fn features(model: Option<&ModelParams>, x: &Matrix) -> Result<Matrix> {
    match model {
        Some(p) => p.encode(x),
        None => Ok(x.clone()),
    }
}
