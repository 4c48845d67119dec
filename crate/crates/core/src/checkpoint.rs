//! Versioned binary checkpoint of a [`LinearSoftmaxModel`].
//!
//! ```text
//! MAXENT-CKPT v1\n
//! C n n_raw trainable_A\n          (trainable_A is 0 or 1)
//! W: C·n little-endian f64, row-major
//! A: n·n_raw little-endian f64, row-major (only when trainable_A = 1)
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::classifier::LinearSoftmaxModel;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

pub const MAGIC: &str = "MAXENT-CKPT";
pub const VERSION: &str = "v1";

pub fn write_checkpoint<T: Real, W: Write>(model: &LinearSoftmaxModel<T>, mut out: W) -> Result<()> {
    let (c, n) = model.classifier().shape();
    let trainable = model.feature_map().is_some();
    writeln!(out, "{MAGIC} {VERSION}")?;
    writeln!(out, "{c} {n} {} {}", model.raw_dim(), u8::from(trainable))?;
    let mut payload = Vec::with_capacity(8 * (c * n + n * model.raw_dim()));
    for &v in model.classifier().as_slice() {
        payload.extend_from_slice(&v.as_f64().to_le_bytes());
    }
    if let Some(a) = model.feature_map() {
        for &v in a.as_slice() {
            payload.extend_from_slice(&v.as_f64().to_le_bytes());
        }
    }
    out.write_all(&payload)?;
    out.flush()?;
    Ok(())
}

fn take_line<'a>(bytes: &'a [u8], what: &str) -> Result<(&'a str, &'a [u8])> {
    let end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format(format!("truncated before end of {what} line")))?;
    let line = std::str::from_utf8(&bytes[..end]).map_err(|_| Error::Format(format!("{what} line is not UTF-8")))?;
    Ok((line, &bytes[end + 1..]))
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<LinearSoftmaxModel<f64>> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let (magic, rest) = take_line(&bytes, "magic")?;
    match magic.split_once(' ') {
        Some((MAGIC, VERSION)) => {}
        Some((MAGIC, v)) => return Err(Error::Format(format!("unsupported version `{v}`"))),
        _ => return Err(Error::Format(format!("bad magic line `{magic}`"))),
    }
    let (dims, payload) = take_line(rest, "dims")?;
    let fields: Vec<usize> = dims
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Format(format!("bad dims line `{dims}`")))?;
    let [c, n, n_raw, trainable] = fields[..] else {
        return Err(Error::Format(format!("dims line needs 4 fields, got `{dims}`")));
    };
    if trainable > 1 {
        return Err(Error::Format(format!("trainable_A flag must be 0 or 1, got {trainable}")));
    }
    if trainable == 0 && n_raw != n {
        return Err(Error::Format(format!("n_raw = {n_raw} differs from n = {n} without a feature map")));
    }
    let w_len = c.checked_mul(n).ok_or_else(|| Error::Format("dims overflow".into()))?;
    let a_len = if trainable == 1 {
        n.checked_mul(n_raw).ok_or_else(|| Error::Format("dims overflow".into()))?
    } else {
        0
    };
    let expected = (w_len + a_len) * 8;
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "dims `{dims}` require {expected} payload bytes, found {}",
            payload.len()
        )));
    }
    let floats: Vec<f64> = payload
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
        .collect();
    let classifier = Matrix::from_vec(c, n, floats[..w_len].to_vec())?;
    let feature_map = if trainable == 1 {
        Some(Matrix::from_vec(n, n_raw, floats[w_len..].to_vec())?)
    } else {
        None
    };
    LinearSoftmaxModel::new(classifier, feature_map).map_err(|e| Error::Format(e.to_string()))
}

pub fn save_checkpoint<T: Real>(model: &LinearSoftmaxModel<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_checkpoint(model, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<LinearSoftmaxModel<f64>> {
    read_checkpoint(fs::File::open(path)?)
}
