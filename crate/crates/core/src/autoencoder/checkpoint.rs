//! Autoencoder checkpoints: a binary blob (see [`crate::blob`]) holding the
//! training configuration, dimensions, activation kinds and every parameter
//! array, plus a human-readable `<file>.manifest.txt` next to it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::model::ModelParams;
use super::train::{EarlyStop, TrainConfig};
use crate::blob::{BlobReader, BlobWriter, VERSION};
use crate::data::parse_key_values;
use crate::error::{Error, Result};
use crate::math::Activation;

const KIND: &str = "autoencoder";

const CONFIG_KEYS: [&str; 11] = [
    "learning_rate",
    "weight_decay",
    "epochs",
    "hidden_dim",
    "corruption_level",
    "loss",
    "batch_size",
    "seed",
    "early_stop",
    "enc_activation",
    "dec_activation",
];

impl TrainConfig {
    /// Every field as `(key, value)` text; floats use shortest round-trip form.
    /// `early_stop` is `off` or `<window>,<tolerance>`.
    pub fn to_key_values(&self) -> Vec<(&'static str, String)> {
        let early = match self.early_stop {
            None => "off".to_string(),
            Some(es) => format!("{},{}", es.window, es.tolerance),
        };
        let values = [
            self.learning_rate.to_string(),
            self.weight_decay.to_string(),
            self.epochs.to_string(),
            self.hidden_dim.to_string(),
            self.corruption_level.to_string(),
            self.loss.as_str().to_string(),
            self.batch_size.to_string(),
            self.seed.to_string(),
            early,
            self.enc_activation.as_str().to_string(),
            self.dec_activation.as_str().to_string(),
        ];
        CONFIG_KEYS.into_iter().zip(values).collect()
    }

    /// Removes every training key from `kv` and builds a validated config.
    /// Missing keys are errors; keys that are not training keys are left in
    /// the map for the caller to judge.
    pub fn take_from(kv: &mut BTreeMap<String, String>) -> Result<Self> {
        fn take(kv: &mut BTreeMap<String, String>, k: &str) -> Result<String> {
            kv.remove(k)
                .ok_or_else(|| Error::Config(format!("missing key `{k}`")))
        }
        fn num<T: std::str::FromStr>(s: &str, k: &str) -> Result<T> {
            s.parse()
                .map_err(|_| Error::Config(format!("`{k}`: cannot parse `{s}`")))
        }
        let mut get = |k: &str| take(kv, k);
        let learning_rate = num(&get("learning_rate")?, "learning_rate")?;
        let weight_decay = num(&get("weight_decay")?, "weight_decay")?;
        let epochs = num(&get("epochs")?, "epochs")?;
        let hidden_dim = num(&get("hidden_dim")?, "hidden_dim")?;
        let corruption_level = num(&get("corruption_level")?, "corruption_level")?;
        let loss = num(&get("loss")?, "loss")?;
        let batch_size = num(&get("batch_size")?, "batch_size")?;
        let seed = num(&get("seed")?, "seed")?;
        let early = get("early_stop")?;
        let early_stop = if early == "off" {
            None
        } else {
            let (w, t) = early
                .split_once(',')
                .ok_or_else(|| Error::Config("`early_stop` is `off` or `window,tolerance`".into()))?;
            Some(EarlyStop {
                window: num(w.trim(), "early_stop")?,
                tolerance: num(t.trim(), "early_stop")?,
            })
        };
        let enc_activation = num(&get("enc_activation")?, "enc_activation")?;
        let dec_activation = num(&get("dec_activation")?, "dec_activation")?;
        let cfg = Self {
            learning_rate,
            weight_decay,
            epochs,
            hidden_dim,
            corruption_level,
            loss,
            batch_size,
            seed,
            early_stop,
            enc_activation,
            dec_activation,
        };
        cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }
}

fn manifest_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.txt");
    PathBuf::from(s)
}

/// Writes `path` (binary) and `path.manifest.txt` (text).
pub fn save_autoencoder(path: impl AsRef<Path>, p: &ModelParams, cfg: &TrainConfig) -> Result<()> {
    let path = path.as_ref();
    let config_text: String = cfg
        .to_key_values()
        .into_iter()
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect();

    let mut w = BlobWriter::new(KIND);
    w.str(&config_text);
    w.u64(p.input_dim() as u64);
    w.u64(p.hidden_dim() as u64);
    w.u64(p.domains() as u64);
    w.u64(p.enc.code() as u64);
    w.u64(p.dec.code() as u64);
    w.matrix(&p.w);
    w.floats(&p.b_enc);
    for (v, b) in p.v.iter().zip(&p.b_dec) {
        w.matrix(v);
        w.floats(b);
    }
    std::fs::write(path, w.finish()).map_err(|e| Error::io(path, e))?;

    let mut m = String::new();
    let _ = writeln!(m, "kind = {KIND}");
    let _ = writeln!(m, "version = {VERSION}");
    let _ = writeln!(m, "input_dim = {}", p.input_dim());
    let _ = writeln!(m, "hidden_dim = {}", p.hidden_dim());
    let _ = writeln!(m, "domains = {}", p.domains());
    let _ = writeln!(m, "encoder = {}", p.enc);
    let _ = writeln!(m, "decoder = {}", p.dec);
    let _ = writeln!(m, "# training configuration");
    m.push_str(&config_text);
    let mp = manifest_path(path);
    std::fs::write(&mp, m).map_err(|e| Error::io(&mp, e))
}

fn activation(code: u64) -> Result<Activation> {
    u8::try_from(code)
        .ok()
        .and_then(Activation::from_code)
        .ok_or_else(|| Error::Checkpoint(format!("unknown activation code {code}")))
}

/// Reads a checkpoint written by [`save_autoencoder`]; the manifest is not needed.
pub fn load_autoencoder(path: impl AsRef<Path>) -> Result<(ModelParams, TrainConfig)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = BlobReader::open(&bytes, KIND)?;
    let mut kv = parse_key_values(&r.str()?)?;
    let cfg = TrainConfig::take_from(&mut kv)?;
    let d_x = r.usize()?;
    let d_h = r.usize()?;
    let m = r.usize()?;
    let enc = activation(r.u64()?)?;
    let dec = activation(r.u64()?)?;
    let mut p = ModelParams::zeros(d_x, d_h, m, enc, dec);
    let shape_err = || Error::Checkpoint("parameter shapes disagree with header".into());
    p.w = r.matrix()?;
    p.b_enc = r.floats()?;
    if p.w.shape() != (d_x, d_h) || p.b_enc.len() != d_h {
        return Err(shape_err());
    }
    for l in 0..m {
        p.v[l] = r.matrix()?;
        p.b_dec[l] = r.floats()?;
        if p.v[l].shape() != (d_h, d_x) || p.b_dec[l].len() != d_x {
            return Err(shape_err());
        }
    }
    r.finish()?;
    if !p.is_finite() {
        return Err(Error::NonFinite("checkpoint parameters"));
    }
    Ok((p, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::RandomSource;

    #[test]
    fn config_round_trips_through_text() {
        for mut cfg in [TrainConfig::pixel_dmtae(), TrainConfig::feature_mtae()] {
            cfg.early_stop = Some(EarlyStop {
                window: 3,
                tolerance: 1e-4,
            });
            let mut kv: BTreeMap<String, String> = cfg
                .to_key_values()
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect();
            assert_eq!(TrainConfig::take_from(&mut kv).unwrap(), cfg);
            assert!(kv.is_empty());
        }
    }

    #[test]
    fn missing_key_is_named() {
        let mut kv: BTreeMap<String, String> = TrainConfig::pixel_ae()
            .to_key_values()
            .into_iter()
            .filter(|(k, _)| *k != "hidden_dim")
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let e = TrainConfig::take_from(&mut kv).unwrap_err();
        assert!(e.to_string().contains("hidden_dim"));
    }

    #[test]
    fn checkpoint_is_bit_exact() {
        let mut rng = RandomSource::new(5);
        let p = ModelParams::random(6, 4, 3, Activation::Sigmoid, Activation::Linear, &mut rng).unwrap();
        let cfg = TrainConfig::feature_dmtae();
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("model.bin");
        save_autoencoder(&f, &p, &cfg).unwrap();
        let (q, c) = load_autoencoder(&f).unwrap();
        assert_eq!(q, p);
        assert_eq!(c, cfg);
        let manifest = std::fs::read_to_string(manifest_path(&f)).unwrap();
        assert!(manifest.contains("domains = 3"));
        assert!(manifest.contains("corruption_level = 0.2"));
    }
}
