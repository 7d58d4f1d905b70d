//! Model persistence.
//!
//! Binary layout (all integers and floats little-endian):
//!
//! ```text
//! offset  size  field
//! 0       5     magic "ELMFS"
//! 5       2     format version (u16) = 1
//! 7       4     hidden count  (u32)
//! 11      4     frame length M (u32)
//! 15      4     training length Ns (u32)
//! 19      1     activation tag (u8): 0 sigmoid, 1 tanh, 2 relu
//! 20      8     init seed (u64)
//! 28      -     W  (hidden × (M-Ns)) f64 row-major
//!         -     b  (hidden) f64
//!         -     Y  ((M-Ns) × hidden) f64 row-major
//! ```
//!
//! A sibling `<path>.meta` text file records the training parameters in
//! `key = value` lines. Both files are byte-deterministic for equal
//! models, so re-running a training with equal seeds reproduces them
//! exactly.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Mat;

use super::{Activation, ElmModel, TrainMeta};

pub const MAGIC: &[u8; 5] = b"ELMFS";
pub const FORMAT_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 28;

/// Expected file size for a given geometry.
pub fn file_size(n_hidden: usize, m: usize, n_train: usize) -> usize {
    let n = m - n_train;
    HEADER_LEN + 8 * (2 * n_hidden * n + n_hidden)
}

/// Serializes a model to its binary representation.
pub fn to_bytes(model: &ElmModel) -> Result<Vec<u8>> {
    let (m, ns) = model.frame_dims().ok_or_else(|| {
        Error::ModelFormat(
            "only metric-input models (input dim = M - Ns) can be persisted in format v1".into(),
        )
    })?;
    let mut buf = Vec::with_capacity(file_size(model.n_hidden(), m, ns));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(model.n_hidden() as u32).to_le_bytes());
    buf.extend_from_slice(&(m as u32).to_le_bytes());
    buf.extend_from_slice(&(ns as u32).to_le_bytes());
    buf.push(model.activation().tag());
    buf.extend_from_slice(&model.meta().seed.to_le_bytes());
    for v in model.input_weights().data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for v in model.bias() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for v in model.output_weights().data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    Ok(buf)
}

/// Parses a model from its binary representation.
pub fn from_bytes(bytes: &[u8]) -> Result<ElmModel> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::ModelFormat(format!(
            "file truncated: {} bytes is shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[..5] != MAGIC {
        return Err(Error::ModelFormat(
            "bad magic bytes (not an ELMFS model)".into(),
        ));
    }
    let version = u16::from_le_bytes(bytes[5..7].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported format version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let n_hidden = u32::from_le_bytes(bytes[7..11].try_into().unwrap()) as usize;
    let m = u32::from_le_bytes(bytes[11..15].try_into().unwrap()) as usize;
    let ns = u32::from_le_bytes(bytes[15..19].try_into().unwrap()) as usize;
    let tag = bytes[19];
    let seed = u64::from_le_bytes(bytes[20..28].try_into().unwrap());

    if n_hidden < 1 {
        return Err(Error::ModelFormat("hidden count must be positive".into()));
    }
    if ns < 1 || m <= ns {
        return Err(Error::ModelFormat(format!(
            "inconsistent frame dims: M = {m}, Ns = {ns}"
        )));
    }
    let activation = Activation::from_tag(tag)
        .ok_or_else(|| Error::ModelFormat(format!("unknown activation tag {tag}")))?;

    let expected = file_size(n_hidden, m, ns);
    if bytes.len() != expected {
        return Err(Error::ModelFormat(format!(
            "file size {} does not match geometry (expected {expected} bytes for \
             hidden {n_hidden}, M {m}, Ns {ns})",
            bytes.len()
        )));
    }

    let n = m - ns;
    let mut cursor = HEADER_LEN;
    let mut read_f64s = |count: usize| -> Vec<f64> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push(f64::from_le_bytes(
                bytes[cursor..cursor + 8].try_into().unwrap(),
            ));
            cursor += 8;
        }
        out
    };
    let w = Mat::from_rows(n_hidden, n, read_f64s(n_hidden * n))?;
    let b = read_f64s(n_hidden);
    let upsilon = Mat::from_rows(n, n_hidden, read_f64s(n * n_hidden))?;

    ElmModel::from_parts(
        w,
        b,
        upsilon,
        activation,
        Some((m, ns)),
        TrainMeta {
            seed,
            n_samples: None,
            solver: None,
        },
    )
}

/// Writes the model binary plus its `<path>.meta` text sibling.
pub fn save_model(model: &ElmModel, path: &Path) -> Result<()> {
    let bytes = to_bytes(model)?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    f.sync_all()?;

    let (m, ns) = model.frame_dims().expect("checked by to_bytes");
    let mut meta = String::new();
    meta.push_str(&format!("format_version = {FORMAT_VERSION}\n"));
    meta.push_str(&format!("n_hidden = {}\n", model.n_hidden()));
    meta.push_str(&format!("frame_len = {m}\n"));
    meta.push_str(&format!("n_train = {ns}\n"));
    meta.push_str(&format!("activation = {}\n", model.activation().name()));
    meta.push_str(&format!("init_seed = {}\n", model.meta().seed));
    if let Some(n) = model.meta().n_samples {
        meta.push_str(&format!("n_samples = {n}\n"));
    }
    if let Some(s) = &model.meta().solver {
        meta.push_str(&format!("solver = {s}\n"));
    }
    fs::write(meta_path(path), meta)?;
    Ok(())
}

/// Reads a model back from disk.
pub fn load_model(path: &Path) -> Result<ElmModel> {
    let mut f = fs::File::open(path)?;
    let mut bytes = Vec::new();
    f.read_to_end(&mut bytes)?;
    from_bytes(&bytes)
}

/// Path of the human-readable metadata sibling.
pub fn meta_path(model_path: &Path) -> std::path::PathBuf {
    let mut os = model_path.as_os_str().to_os_string();
    os.push(".meta");
    os.into()
}
