//! Experiment configuration files.
//!
//! Flat `key = value` text, `#` comments. Every key listed below is
//! required (classifier keys only for the chosen classifier); unknown keys
//! are errors.
//!
//! ```text
//! dataset = mnist-r            # mnist-r | mnist-s | feature-tables
//! images = ../data/digits-images-idx3-ubyte.gz
//! labels = ../data/digits-labels-idx1-ubyte.gz
//! per_class = 100
//! image_side = 16
//! data_seed = 0
//! method = d-mtae              # raw | ae | dae | mtae | d-mtae
//! classifier = linear-svm      # linear-svm | 1hnn
//! repetitions = 10
//! out = ../results/mnist-r-d-mtae
//! spectrum = off
//! checkpoints = off
//! svm_c = 1                    # a number, or `cv` for 10-fold selection
//! svm_epochs = 50
//! learning_rate = 0.03
//! ... every training key, see `TrainConfig::to_key_values`
//! ```
//!
//! Feature-table experiments replace the image keys by
//! `tables = a.csv, b.csv, c.csv` (one file per domain). The `1hnn`
//! classifier takes `nn_learning_rate`, `nn_epochs`, `nn_batch_size` and
//! `nn_weight_decay` instead of the `svm_*` keys. Relative paths are
//! resolved against the config file's directory. `seed` is the base seed;
//! repetition `r` runs with `seed + r`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::autoencoder::TrainConfig;
use crate::data::parse_key_values;
use crate::error::{Error, Result};

macro_rules! text_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(Error::Config(format!(
                        concat!("unknown ", stringify!($name), " `{}`"), other
                    ))),
                }
            }
        }
    };
}

text_enum!(Dataset { MnistR => "mnist-r", MnistS => "mnist-s", FeatureTables => "feature-tables" });
text_enum!(Method { Raw => "raw", Ae => "ae", Dae => "dae", Mtae => "mtae", DMtae => "d-mtae" });
text_enum!(ClassifierKind { LinearSvm => "linear-svm", OneHidden => "1hnn" });

impl Method {
    pub fn learns_features(self) -> bool {
        self != Method::Raw
    }

    pub fn multi_task(self) -> bool {
        matches!(self, Method::Mtae | Method::DMtae)
    }

    pub fn denoising(self) -> bool {
        matches!(self, Method::Dae | Method::DMtae)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Idx {
        images: String,
        labels: String,
        per_class: usize,
        side: usize,
        data_seed: u64,
    },
    Tables(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SvmC {
    Fixed(f64),
    /// Chosen by 10-fold cross validation over `{0.01, 0.1, 1, 10}`.
    CrossValidated,
}

pub const SVM_C_GRID: [f64; 4] = [0.01, 0.1, 1.0, 10.0];

#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierSettings {
    LinearSvm { c: SvmC, epochs: usize },
    OneHidden {
        learning_rate: f64,
        epochs: usize,
        batch_size: usize,
        weight_decay: f64,
    },
}

impl ClassifierSettings {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            ClassifierSettings::LinearSvm { .. } => ClassifierKind::LinearSvm,
            ClassifierSettings::OneHidden { .. } => ClassifierKind::OneHidden,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: Dataset,
    pub source: DataSource,
    pub method: Method,
    /// `train.seed` is the base seed of the experiment.
    pub train: TrainConfig,
    pub classifier: ClassifierSettings,
    pub repetitions: usize,
    pub out: String,
    /// Write per-case Jacobian spectra of the held-out domain (first repetition).
    pub spectrum: bool,
    /// Write per-case autoencoder checkpoints (first repetition).
    pub checkpoints: bool,
    /// Directory relative paths are resolved against; not serialized.
    pub base_dir: PathBuf,
}

fn on_off(s: &str, key: &str) -> Result<bool> {
    match s {
        "on" => Ok(true),
        "off" => Ok(false),
        _ => Err(Error::Config(format!("`{key}` must be `on` or `off`"))),
    }
}

fn parse<T: FromStr>(s: &str, key: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{s}`")))
}

struct Keys(BTreeMap<String, String>);

impl Keys {
    fn take(&mut self, k: &str) -> Result<String> {
        self.0
            .remove(k)
            .ok_or_else(|| Error::Config(format!("missing key `{k}`")))
    }

    fn num<T: FromStr>(&mut self, k: &str) -> Result<T> {
        let v = self.take(k)?;
        parse(&v, k)
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut kv = Keys(parse_key_values(text)?);
        let dataset: Dataset = kv.take("dataset")?.parse()?;
        let source = match dataset {
            Dataset::FeatureTables => {
                let list = kv.take("tables")?;
                let files: Vec<String> = list
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect();
                if files.len() < 2 {
                    return Err(Error::Config("`tables` needs at least two files".into()));
                }
                DataSource::Tables(files)
            }
            Dataset::MnistR | Dataset::MnistS => DataSource::Idx {
                images: kv.take("images")?,
                labels: kv.take("labels")?,
                per_class: kv.num("per_class")?,
                side: kv.num("image_side")?,
                data_seed: kv.num("data_seed")?,
            },
        };
        let method: Method = kv.take("method")?.parse()?;
        let kind: ClassifierKind = kv.take("classifier")?.parse()?;
        let repetitions: usize = kv.num("repetitions")?;
        let out = kv.take("out")?;
        let spectrum = on_off(&kv.take("spectrum")?, "spectrum")?;
        let checkpoints = on_off(&kv.take("checkpoints")?, "checkpoints")?;
        let classifier = match kind {
            ClassifierKind::LinearSvm => {
                let c = kv.take("svm_c")?;
                let c = if c == "cv" {
                    SvmC::CrossValidated
                } else {
                    let v: f64 = parse(&c, "svm_c")?;
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(Error::Config("`svm_c` must be positive".into()));
                    }
                    SvmC::Fixed(v)
                };
                ClassifierSettings::LinearSvm {
                    c,
                    epochs: kv.num("svm_epochs")?,
                }
            }
            ClassifierKind::OneHidden => ClassifierSettings::OneHidden {
                learning_rate: kv.num("nn_learning_rate")?,
                epochs: kv.num("nn_epochs")?,
                batch_size: kv.num("nn_batch_size")?,
                weight_decay: kv.num("nn_weight_decay")?,
            },
        };
        let train = TrainConfig::take_from(&mut kv.0)?;
        if let Some(k) = kv.0.keys().next() {
            return Err(Error::Config(format!("unknown key `{k}`")));
        }
        let cfg = Self {
            dataset,
            source,
            method,
            train,
            classifier,
            repetitions,
            out,
            spectrum,
            checkpoints,
            base_dir: base_dir.into(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.repetitions == 0 {
            return bad("`repetitions` must be >= 1");
        }
        if self.method.learns_features() && self.method.denoising() != (self.train.corruption_level > 0.0) {
            return bad("`corruption_level` must be > 0 exactly for the denoising methods");
        }
        match &self.classifier {
            ClassifierSettings::LinearSvm { epochs, .. } if *epochs == 0 => {
                return bad("`svm_epochs` must be >= 1")
            }
            ClassifierSettings::OneHidden {
                learning_rate,
                epochs,
                batch_size,
                weight_decay,
            } if !(*learning_rate >= 0.0 && *weight_decay >= 0.0 && *epochs >= 1 && *batch_size >= 1) => {
                return bad("1hnn settings need rate >= 0, decay >= 0, epochs >= 1, batch >= 1")
            }
            _ => {}
        }
        if let DataSource::Idx { per_class, side, .. } = &self.source {
            if *per_class == 0 || *side == 0 {
                return bad("`per_class` and `image_side` must be >= 1");
            }
        }
        Ok(())
    }

    /// Resolves a path from the file against the config's directory.
    pub fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Canonical text form; parsing it back yields the same config.
    pub fn to_text(&self) -> String {
        let mut lines: Vec<(String, String)> = vec![("dataset".into(), self.dataset.to_string())];
        match &self.source {
            DataSource::Idx {
                images,
                labels,
                per_class,
                side,
                data_seed,
            } => {
                lines.push(("images".into(), images.clone()));
                lines.push(("labels".into(), labels.clone()));
                lines.push(("per_class".into(), per_class.to_string()));
                lines.push(("image_side".into(), side.to_string()));
                lines.push(("data_seed".into(), data_seed.to_string()));
            }
            DataSource::Tables(files) => lines.push(("tables".into(), files.join(", "))),
        }
        let flag = |b: bool| if b { "on" } else { "off" }.to_string();
        lines.push(("method".into(), self.method.to_string()));
        lines.push(("classifier".into(), self.classifier.kind().to_string()));
        lines.push(("repetitions".into(), self.repetitions.to_string()));
        lines.push(("out".into(), self.out.clone()));
        lines.push(("spectrum".into(), flag(self.spectrum)));
        lines.push(("checkpoints".into(), flag(self.checkpoints)));
        match &self.classifier {
            ClassifierSettings::LinearSvm { c, epochs } => {
                let c = match c {
                    SvmC::Fixed(v) => v.to_string(),
                    SvmC::CrossValidated => "cv".into(),
                };
                lines.push(("svm_c".into(), c));
                lines.push(("svm_epochs".into(), epochs.to_string()));
            }
            ClassifierSettings::OneHidden {
                learning_rate,
                epochs,
                batch_size,
                weight_decay,
            } => {
                lines.push(("nn_learning_rate".into(), learning_rate.to_string()));
                lines.push(("nn_epochs".into(), epochs.to_string()));
                lines.push(("nn_batch_size".into(), batch_size.to_string()));
                lines.push(("nn_weight_decay".into(), weight_decay.to_string()));
            }
        }
        for (k, v) in self.train.to_key_values() {
            lines.push((k.to_string(), v));
        }
        lines.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// 64-bit FNV-1a of the canonical text, as 16 hex digits.
    pub fn hash(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.to_text().bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}
