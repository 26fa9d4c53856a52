//! Dataset files and synthetic data.
//!
//! File layout, all little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 5     | magic `DIGA1` |
//! | 4     | feature count `n` (u32) |
//! | 4     | example count `m` (u32) |
//! | 1     | label flag, 0 or 1 |
//! | 4·n·m | features as f32, row-major `n × m` (one row per feature) |
//! | m     | labels as u8, present only when the flag is 1 |

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::Dataset;
use crate::RunRng;

pub const MAGIC: &[u8; 5] = b"DIGA1";
pub const HEADER_LEN: usize = 14;

/// Minimum distance from the separating hyperplane for separable synthetic
/// data.
pub const SYNTH_MARGIN: f64 = 0.1;

/// Contents of a dataset file before any normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub features: usize,
    pub examples: usize,
    /// Row-major `features × examples`.
    pub x: Vec<f32>,
    pub y: Option<Vec<u8>>,
}

pub fn encode(raw: &RawDataset) -> Result<Vec<u8>> {
    let n = u32::try_from(raw.features)
        .map_err(|_| Error::InvalidData(format!("{} features do not fit u32", raw.features)))?;
    let m = u32::try_from(raw.examples)
        .map_err(|_| Error::InvalidData(format!("{} examples do not fit u32", raw.examples)))?;
    if raw.x.len() != raw.features * raw.examples {
        return Err(Error::InvalidData(format!(
            "{} feature values for a {} x {} matrix",
            raw.x.len(),
            raw.features,
            raw.examples
        )));
    }
    if let Some(y) = &raw.y {
        if y.len() != raw.examples {
            return Err(Error::InvalidData(format!(
                "{} labels for {} examples",
                y.len(),
                raw.examples
            )));
        }
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * raw.x.len() + raw.examples);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&n.to_le_bytes());
    out.extend_from_slice(&m.to_le_bytes());
    out.push(u8::from(raw.y.is_some()));
    for v in &raw.x {
        out.extend_from_slice(&v.to_le_bytes());
    }
    if let Some(y) = &raw.y {
        out.extend_from_slice(y);
    }
    Ok(out)
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")))
        .ok_or_else(|| Error::parse(bytes.len() as u64, "truncated header"))
}

pub fn decode(bytes: &[u8]) -> Result<RawDataset> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::parse(0, "missing DIGA1 magic"));
    }
    let n = read_u32(bytes, 5)? as usize;
    let m = read_u32(bytes, 9)? as usize;
    let flag = *bytes
        .get(13)
        .ok_or_else(|| Error::parse(13, "truncated header"))?;
    if n == 0 {
        return Err(Error::parse(5, "feature count is 0"));
    }
    if m == 0 {
        return Err(Error::parse(9, "example count is 0"));
    }
    if flag > 1 {
        return Err(Error::parse(13, format!("label flag {flag} is not 0 or 1")));
    }
    let x_len = n
        .checked_mul(m)
        .and_then(|c| c.checked_mul(4))
        .ok_or_else(|| Error::parse(5, "declared size overflows"))?;
    let expected = HEADER_LEN + x_len + if flag == 1 { m } else { 0 };
    if bytes.len() != expected {
        return Err(Error::parse(
            bytes.len().min(expected) as u64,
            format!(
                "payload is {} bytes, header declares {}",
                bytes.len(),
                expected
            ),
        ));
    }
    let x = bytes[HEADER_LEN..HEADER_LEN + x_len]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    let y = if flag == 1 {
        let start = HEADER_LEN + x_len;
        let labels = bytes[start..].to_vec();
        if let Some(j) = labels.iter().position(|&l| l > 1) {
            return Err(Error::parse(
                (start + j) as u64,
                format!("label {} is not 0 or 1", labels[j]),
            ));
        }
        Some(labels)
    } else {
        None
    };
    Ok(RawDataset {
        features: n,
        examples: m,
        x,
        y,
    })
}

pub fn read_raw(path: &Path) -> Result<RawDataset> {
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode(&bytes)
}

pub fn write_raw(path: &Path, raw: &RawDataset) -> Result<()> {
    fs::write(path, encode(raw)?).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Stores a dataset with its features narrowed to f32.
pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    write_raw(
        path,
        &RawDataset {
            features: data.features(),
            examples: data.m(),
            x: data.x().as_slice().iter().map(|&v| v as f32).collect(),
            y: Some(data.y().to_vec()),
        },
    )
}

/// Reads a labeled dataset file, dividing every feature by
/// `normalize_divisor` when given (255 for 8-bit pixels).
pub fn load_dataset(path: &Path, normalize_divisor: Option<f64>) -> Result<Dataset> {
    if let Some(d) = normalize_divisor {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::config(format!(
                "normalization divisor must be positive, got {d}"
            )));
        }
    }
    let raw = read_raw(path)?;
    let y = raw.y.ok_or_else(|| {
        Error::InvalidData(format!("{} has no labels", path.display()))
    })?;
    let scale = normalize_divisor.unwrap_or(1.0);
    let x: Vec<f64> = raw.x.iter().map(|&v| f64::from(v) / scale).collect();
    Dataset::new(Matrix::from_vec(raw.features, raw.examples, x)?, y)
}

/// Uniform features in `[0, 1)`.
///
/// Without `separable` the labels are fair coin flips. With it they come from
/// a random hyperplane through the centre of the cube, and points closer than
/// [`SYNTH_MARGIN`] to it are redrawn. Features are generated at f32
/// precision so the dataset survives a file round trip exactly.
pub fn synth_dataset(features: usize, examples: usize, seed: u64, separable: bool) -> Result<Dataset> {
    if features == 0 || examples == 0 {
        return Err(Error::config(format!(
            "synthetic data needs at least one feature and example, got {features} x {examples}"
        )));
    }
    let mut rng = RunRng::seed_from_u64(seed);
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(examples);
    let mut y = Vec::with_capacity(examples);
    if separable {
        let w: Vec<f64> = (0..features).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        let b = -0.5 * w.iter().sum::<f64>();
        while cols.len() < examples {
            let col: Vec<f64> = (0..features).map(|_| f64::from(rng.random::<f32>())).collect();
            let s = w.iter().zip(&col).map(|(a, b)| a * b).sum::<f64>() + b;
            if s.abs() / norm < SYNTH_MARGIN {
                continue;
            }
            y.push(u8::from(s > 0.0));
            cols.push(col);
        }
    } else {
        for _ in 0..examples {
            cols.push((0..features).map(|_| f64::from(rng.random::<f32>())).collect());
        }
        y.extend((0..examples).map(|_| rng.random_range(0..=1u8)));
    }
    let mut x = Matrix::zeros(features, examples);
    for (j, col) in cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            x.set(i, j, v);
        }
    }
    Dataset::new(x, y)
}
