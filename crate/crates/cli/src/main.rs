use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mtae::analysis::{average_spectrum, export_filter_grid, write_pgm, DEFAULT_HIGH, DEFAULT_LOW};
use mtae::autoencoder::{load_autoencoder, save_autoencoder, train_mtae, train_single_task, TrainTrace};
use mtae::data::{
    build_view_corpus, load_corpus, load_idx_images, load_idx_labels, mnist_r_transforms,
    mnist_s_transforms, save_corpus, select_base_subset, CorpusCache, MultiDomainCorpus,
};
use mtae::harness::{
    emit_report, load_dataset, merge_available, merge_parts, run_leave_one_domain_out, run_repetitions, write_extras, write_outputs, Dataset,
    EvalReport, ExperimentConfig, Method,
};
use mtae::math::RandomSource;
use mtae::oracle::{gradient_suite, small_instance_suite};
use mtae::{Error, Result};

#[derive(Parser)]
#[command(name = "mtae", version, about = "Multi-task autoencoders for domain generalization")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Base seed; overrides the config file's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Experiment config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Build and cache the rotated or dilated digit views from IDX files.
    GenData {
        #[arg(long, default_value = "mnist-r")]
        dataset: String,
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value_t = 100)]
        per_class: usize,
        #[arg(long, default_value_t = 16)]
        side: usize,
    },
    /// Train the config's feature learner on every domain except `--holdout`.
    Train {
        /// Domain name to leave out, e.g. `M45`.
        #[arg(long)]
        holdout: Option<String>,
    },
    /// Leave-one-domain-out evaluation from a config file.
    Eval {
        /// Overrides the config's `repetitions`; with `--collect`, merges only
        /// the first N parts.
        #[arg(long)]
        repetitions: Option<usize>,
        /// Run only this repetition, into `<out>/rep-<k>/`.
        #[arg(long, conflicts_with = "collect")]
        only_rep: Option<usize>,
        /// Merge the `rep-<k>/` parts into the full report instead of training.
        #[arg(long)]
        collect: bool,
    },
    /// Mean encoder-Jacobian spectrum of a checkpoint on one view.
    Spectrum {
        #[arg(long)]
        model: PathBuf,
        /// View name; its data come from `--cache` or from `--config`.
        #[arg(long)]
        view: String,
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Render a grid of encoder filters of a checkpoint as PGM.
    Filters {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 10)]
        cols: usize,
        #[arg(long, default_value_t = DEFAULT_LOW, allow_negative_numbers = true)]
        low: f64,
        #[arg(long, default_value_t = DEFAULT_HIGH, allow_negative_numbers = true)]
        high: f64,
    },
    /// Run the finite-difference and small-instance self checks.
    Oracle {
        #[arg(long, default_value_t = 20)]
        fixtures: usize,
    },
}

fn need<'a, T>(v: &'a Option<T>, flag: &str) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| Error::InvalidArgument(format!("--{flag} is required for this command")))
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(need(&c.config, "config")?)?;
    if let Some(s) = c.seed {
        cfg.train.seed = s;
    }
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write(path: &Path, body: String) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn trace_csv(t: &TrainTrace) -> String {
    let mut s = String::from("epoch,mean_loss,seconds\n");
    for (i, e) in t.epochs.iter().enumerate() {
        s.push_str(&format!("{},{},{}\n", i + 1, e.mean_loss(), e.seconds));
    }
    s
}

fn view_index(corpus: &MultiDomainCorpus, name: &str) -> Result<usize> {
    corpus.views.iter().position(|v| v.name == name).ok_or_else(|| {
        let names: Vec<&str> = corpus.views.iter().map(|v| v.name.as_str()).collect();
        Error::InvalidArgument(format!("no view `{name}`; have {}", names.join(", ")))
    })
}

fn run(cli: Cli) -> Result<()> {
    let c = &cli.common;
    match cli.command {
        Command::GenData {
            dataset,
            images,
            labels,
            per_class,
            side,
        } => {
            let out = need(&c.out, "out")?;
            let seed = c.seed.unwrap_or(0);
            let transforms = match dataset.parse::<Dataset>()? {
                Dataset::MnistR => mnist_r_transforms(),
                Dataset::MnistS => mnist_s_transforms(),
                Dataset::FeatureTables => {
                    return Err(Error::InvalidArgument("gen-data builds mnist-r or mnist-s".into()))
                }
            };
            let imgs = load_idx_images(&images)?;
            let labs = load_idx_labels(&labels)?;
            let base = select_base_subset(&imgs, &labs, per_class, side, &mut RandomSource::new(seed))?;
            let corpus = build_view_corpus(&base, &transforms)?;
            let cache = CorpusCache {
                corpus,
                seed,
                transforms: transforms.iter().map(|t| t.kind).collect(),
                metadata: [
                    ("dataset".to_string(), dataset.clone()),
                    ("per_class".to_string(), per_class.to_string()),
                    ("side".to_string(), side.to_string()),
                ]
                .into(),
            };
            save_corpus(out, &cache)?;
            println!("{} views of {} rows -> {}", cache.corpus.domains(), base.len(), out.display());
        }
        Command::Train { holdout } => {
            let cfg = load_config(c)?;
            let out = need(&c.out, "out")?;
            let corpus = load_dataset(&cfg)?;
            let corpus = match &holdout {
                Some(name) => corpus.without(view_index(&corpus, name)?)?,
                None => corpus,
            };
            let (p, trace) = match cfg.method {
                Method::Raw => return Err(Error::Config("method `raw` has nothing to train".into())),
                Method::Ae | Method::Dae => train_single_task(&cfg.train, &corpus.concatenated()?.0)?,
                Method::Mtae | Method::DMtae => train_mtae(&cfg.train, &corpus)?,
            };
            create_dir(out)?;
            save_autoencoder(out.join("model.bin"), &p, &cfg.train)?;
            write(&out.join("trace.csv"), trace_csv(&trace))?;
            let last = trace.mean_losses().last().copied().unwrap_or(f64::NAN);
            println!("{} epochs, final loss {last:.6} -> {}", trace.epochs.len(), out.display());
        }
        Command::Eval {
            repetitions,
            only_rep,
            collect,
        } => {
            let mut cfg = load_config(c)?;
            // parts carry the hash of the config as written, so collecting a
            // prefix of them must not touch `cfg`
            let wanted = repetitions.unwrap_or(cfg.repetitions);
            if !collect {
                cfg.repetitions = wanted;
            }
            let dir = match &c.out {
                Some(d) => d.clone(),
                None => cfg.resolve(&cfg.out),
            };
            let part_dir = |k: usize| dir.join(format!("rep-{k}"));
            if collect {
                let parts = (0..wanted)
                    .map(|k| EvalReport::load(part_dir(k).join("report.csv")))
                    .collect::<Result<Vec<_>>>()?;
                let report = if wanted == cfg.repetitions {
                    merge_parts(&cfg, &parts)?
                } else {
                    merge_available(&cfg, &parts)?
                };
                emit_report(&report, &dir)?;
                print!("{}", report.to_table());
            } else if let Some(k) = only_rep {
                cfg.validate()?;
                let corpus = load_dataset(&cfg)?;
                let result = run_repetitions(&cfg, &corpus, k..k + 1)?;
                // spectra and checkpoints belong with the full report
                write_extras(&result, &dir)?;
                emit_report(&result.report, &part_dir(k))?;
                print!("{}", result.report.to_table());
            } else {
                let result = run_leave_one_domain_out(&cfg)?;
                write_outputs(&result, &dir)?;
                print!("{}", result.report.to_table());
            }
        }
        Command::Spectrum { model, view, cache } => {
            let out = need(&c.out, "out")?;
            let (p, _) = load_autoencoder(&model)?;
            let corpus = match (&cache, &c.config) {
                (Some(dir), _) => load_corpus(dir)?.corpus,
                (None, Some(_)) => load_dataset(&load_config(c)?)?,
                (None, None) => return Err(Error::InvalidArgument("--cache or --config is required".into())),
            };
            let k = view_index(&corpus, &view)?;
            let report = average_spectrum(&p, &corpus.views[k].x, &format!("{} on {view}", model.display()))?;
            create_dir(out)?;
            report.write(out.join("spectrum.txt"))?;
            println!("top-20 mass {:.6}", report.top_k_mass(20));
        }
        Command::Filters {
            model,
            count,
            cols,
            low,
            high,
        } => {
            let out = need(&c.out, "out")?;
            let (p, _) = load_autoencoder(&model)?;
            let mut rng = RandomSource::new(c.seed.unwrap_or(0));
            let grid = export_filter_grid(&p.w, count, cols, low, high, &mut rng)?;
            create_dir(out)?;
            write_pgm(&grid.render(), out.join("filters.pgm"))?;
            println!("{count} filters -> {}", out.join("filters.pgm").display());
        }
        Command::Oracle { fixtures } => {
            let seed = c.seed.unwrap_or(0);
            let checks: Vec<_> = gradient_suite(fixtures, seed)
                .into_iter()
                .chain(small_instance_suite(seed))
                .collect();
            for ch in &checks {
                println!("{}", ch.line());
            }
            if let Some(f) = checks.iter().find(|ch| !ch.passed()) {
                return Err(Error::InvalidArgument(format!("oracle `{}` failed", f.name)));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
