use std::path::Path;

use super::{LinearModel, OneHiddenNet};
use crate::blob::{BlobReader, BlobWriter};
use crate::error::{Error, Result};
use crate::math::Activation;

const LINEAR: &str = "linear-classifier";
const NET: &str = "one-hidden-net";

fn write(path: &Path, bytes: Vec<u8>) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn shape_error() -> Error {
    Error::Checkpoint("classifier parameter shapes disagree".into())
}

pub fn save_linear_model(path: impl AsRef<Path>, m: &LinearModel) -> Result<()> {
    let mut w = BlobWriter::new(LINEAR);
    w.matrix(&m.weights);
    w.floats(&m.biases);
    write(path.as_ref(), w.finish())
}

pub fn load_linear_model(path: impl AsRef<Path>) -> Result<LinearModel> {
    let bytes = read(path.as_ref())?;
    let mut r = BlobReader::open(&bytes, LINEAR)?;
    let weights = r.matrix()?;
    let biases = r.floats()?;
    r.finish()?;
    if biases.len() != weights.rows() {
        return Err(shape_error());
    }
    Ok(LinearModel { weights, biases })
}

pub fn save_net(path: impl AsRef<Path>, net: &OneHiddenNet) -> Result<()> {
    let mut w = BlobWriter::new(NET);
    w.str(net.hidden.as_str());
    w.matrix(&net.w1);
    w.floats(&net.b1);
    w.matrix(&net.w2);
    w.floats(&net.b2);
    write(path.as_ref(), w.finish())
}

pub fn load_net(path: impl AsRef<Path>) -> Result<OneHiddenNet> {
    let bytes = read(path.as_ref())?;
    let mut r = BlobReader::open(&bytes, NET)?;
    let hidden: Activation = r.str()?.parse()?;
    let net = OneHiddenNet {
        hidden,
        w1: r.matrix()?,
        b1: r.floats()?,
        w2: r.matrix()?,
        b2: r.floats()?,
    };
    r.finish()?;
    let ok = net.b1.len() == net.w1.cols()
        && net.w2.rows() == net.w1.cols()
        && net.b2.len() == net.w2.cols();
    if !ok {
        return Err(shape_error());
    }
    Ok(net)
}
