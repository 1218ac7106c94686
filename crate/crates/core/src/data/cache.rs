//! On-disk corpus cache.
//!
//! A cache directory holds `manifest.txt` and one `view-<k>.bin` per view.
//! The manifest is `key = value` text:
//!
//! ```text
//! format = mtae-corpus-v1
//! seed = 7
//! views = 2
//! view.0.name = M
//! view.0.rows = 1000
//! view.0.cols = 256
//! view.0.transform = identity
//! ...
//! ```
//!
//! Each blob is `rows` little-endian `u32` labels followed by `rows × cols`
//! little-endian `f64` values, row-major. Extra manifest keys are preserved
//! as free-form metadata.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{DomainView, MultiDomainCorpus, TransformKind};
use crate::error::{Error, Result};
use crate::math::Matrix;

const FORMAT: &str = "mtae-corpus-v1";

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusCache {
    pub corpus: MultiDomainCorpus,
    pub seed: u64,
    pub transforms: Vec<TransformKind>,
    pub metadata: BTreeMap<String, String>,
}

pub fn save_corpus(dir: impl AsRef<Path>, cache: &CorpusCache) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let views = &cache.corpus.views;
    if cache.transforms.len() != views.len() {
        return Err(Error::InvalidArgument(
            "one transform per view is required".into(),
        ));
    }
    let mut m = String::new();
    let _ = writeln!(m, "format = {FORMAT}");
    let _ = writeln!(m, "seed = {}", cache.seed);
    let _ = writeln!(m, "views = {}", views.len());
    for (k, (v, t)) in views.iter().zip(&cache.transforms).enumerate() {
        let _ = writeln!(m, "view.{k}.name = {}", v.name);
        let _ = writeln!(m, "view.{k}.rows = {}", v.len());
        let _ = writeln!(m, "view.{k}.cols = {}", v.dim());
        let _ = writeln!(m, "view.{k}.transform = {}", t.describe());

        let mut blob = Vec::with_capacity(v.len() * (4 + 8 * v.dim()));
        for &l in &v.labels {
            blob.extend_from_slice(&(l as u32).to_le_bytes());
        }
        for x in v.x.as_slice() {
            blob.extend_from_slice(&x.to_le_bytes());
        }
        let p = dir.join(format!("view-{k}.bin"));
        std::fs::write(&p, blob).map_err(|e| Error::io(&p, e))?;
    }
    for (k, v) in &cache.metadata {
        let _ = writeln!(m, "{k} = {v}");
    }
    let p = dir.join("manifest.txt");
    std::fs::write(&p, m).map_err(|e| Error::io(&p, e))
}

pub(crate) fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn load_corpus(dir: impl AsRef<Path>) -> Result<CorpusCache> {
    let dir = dir.as_ref();
    let mp = dir.join("manifest.txt");
    let text = std::fs::read_to_string(&mp).map_err(|e| Error::io(&mp, e))?;
    let mut kv = parse_key_values(&text)?;
    let mut take = |k: &str| {
        kv.remove(k)
            .ok_or_else(|| Error::Config(format!("corpus manifest missing `{k}`")))
    };
    let format = take("format")?;
    if format != FORMAT {
        return Err(Error::Config(format!("unsupported corpus format `{format}`")));
    }
    let num = |s: String, k: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::Config(format!("corpus manifest `{k}` is not a count")))
    };
    let seed: u64 = take("seed")?
        .parse()
        .map_err(|_| Error::Config("corpus manifest `seed` is not an integer".into()))?;
    let n_views = num(take("views")?, "views")?;
    let mut views = Vec::with_capacity(n_views);
    let mut transforms = Vec::with_capacity(n_views);
    for k in 0..n_views {
        let name = take(&format!("view.{k}.name"))?;
        let rows = num(take(&format!("view.{k}.rows"))?, "rows")?;
        let cols = num(take(&format!("view.{k}.cols"))?, "cols")?;
        transforms.push(TransformKind::parse(&take(&format!("view.{k}.transform"))?)?);
        let p = dir.join(format!("view-{k}.bin"));
        let blob = std::fs::read(&p).map_err(|e| Error::io(&p, e))?;
        if blob.len() != rows * (4 + 8 * cols) {
            return Err(Error::Truncated("corpus view"));
        }
        let (lab, vals) = blob.split_at(rows * 4);
        let labels = lab
            .chunks_exact(4)
            .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
            .collect();
        let data = vals
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
            .collect();
        views.push(DomainView::new(name, Matrix::new(rows, cols, data)?, labels)?);
    }
    Ok(CorpusCache {
        corpus: MultiDomainCorpus::new(views)?,
        seed,
        transforms,
        metadata: kv,
    })
}
