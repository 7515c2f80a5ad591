//! Feature files.
//!
//! Binary layout, all integers little-endian:
//!
//! ```text
//! offset  size   field
//! 0       4      magic "KFEA"
//! 4       1      version (1)
//! 5       1      dtype (1 = f32)
//! 6       2      reserved, zero
//! 8       8      n (u64)
//! 16      8      d (u64)
//! 24      4*n*d  values, f32, row-major
//! ..      1      has_labels (0 or 1)
//! ..      4*n    labels, u32, present when has_labels = 1
//! ```
//!
//! Files ending in `.csv` use a text layout instead: a header
//! `label,f0,...,f{d-1}` and one sample per line, label `-1` when absent.
//! Values are stored as `f32` in both layouts and widened on load.

use std::io::Write as _;
use std::path::Path;

use kite_core::{FeatureMatrix, LabelVector, Provenance};

use crate::{Error, Result};

pub const MAGIC: [u8; 4] = *b"KFEA";
pub const VERSION: u8 = 1;
pub const DTYPE_F32: u8 = 1;
pub const HEADER_LEN: usize = 24;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FormatError {
    #[error("bad magic {0:02x?}, not a feature file")]
    BadMagic([u8; 4]),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u8),
    #[error("unsupported dtype code {0}")]
    UnsupportedDtype(u8),
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: u64, found: u64 },
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },
    #[error("{0} unexpected trailing bytes")]
    TrailingBytes(usize),
    #[error("malformed file: {0}")]
    Malformed(String),
}

/// Features of `n` samples with optional class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFile {
    pub features: FeatureMatrix,
    pub labels: Option<LabelVector>,
}

impl FeatureFile {
    pub fn new(features: FeatureMatrix, labels: Option<LabelVector>) -> std::result::Result<Self, FormatError> {
        if let Some(l) = &labels {
            if l.len() != features.rows() {
                return Err(FormatError::Malformed(format!(
                    "{} labels for {} samples",
                    l.len(),
                    features.rows()
                )));
            }
        }
        Ok(Self { features, labels })
    }
}

fn to_f32(features: &FeatureMatrix) -> std::result::Result<Vec<f32>, FormatError> {
    let d = features.cols();
    features
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let x = v as f32;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(FormatError::NonFiniteValue { row: i / d, col: i % d })
            }
        })
        .collect()
}

pub fn encode(file: &FeatureFile) -> std::result::Result<Vec<u8>, FormatError> {
    let values = to_f32(&file.features)?;
    let n = file.features.rows();
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * values.len() + 1 + file.labels.as_ref().map_or(0, |_| 4 * n));
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(DTYPE_F32);
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(file.features.cols() as u64).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    match &file.labels {
        None => out.push(0),
        Some(labels) => {
            out.push(1);
            for l in labels.as_slice() {
                out.extend_from_slice(&l.to_le_bytes());
            }
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: u64) -> std::result::Result<&'a [u8], FormatError> {
        let left = (self.bytes.len() - self.pos) as u64;
        if len > left {
            return Err(FormatError::TruncatedPayload { expected: self.pos as u64 + len, found: self.bytes.len() as u64 });
        }
        let s = &self.bytes[self.pos..self.pos + len as usize];
        self.pos += len as usize;
        Ok(s)
    }

    fn u64(&mut self) -> std::result::Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

fn malformed(e: kite_core::Error) -> FormatError {
    FormatError::Malformed(e.to_string())
}

/// Size checks happen before any allocation, so a corrupt header cannot
/// request more memory than the input holds.
pub fn decode(bytes: &[u8]) -> std::result::Result<FeatureFile, FormatError> {
    let mut c = Cursor { bytes, pos: 0 };
    let head = c.take(HEADER_LEN as u64)?;
    let magic: [u8; 4] = head[0..4].try_into().expect("4 bytes");
    if magic != MAGIC {
        return Err(FormatError::BadMagic(magic));
    }
    if head[4] != VERSION {
        return Err(FormatError::UnsupportedVersion(head[4]));
    }
    if head[5] != DTYPE_F32 {
        return Err(FormatError::UnsupportedDtype(head[5]));
    }
    c.pos = 8;
    let n = c.u64()?;
    let d = c.u64()?;
    let payload_len = n
        .checked_mul(d)
        .and_then(|v| v.checked_mul(4))
        .ok_or_else(|| FormatError::Malformed(format!("header size {n}x{d} overflows")))?;
    let payload = c.take(payload_len)?;
    let (n, d) = (n as usize, d as usize);
    let mut data = Vec::with_capacity(n * d);
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
        if !v.is_finite() {
            return Err(FormatError::NonFiniteValue { row: i / d, col: i % d });
        }
        data.push(f64::from(v));
    }
    let labels = match c.take(1)?[0] {
        0 => None,
        1 => {
            let raw = c.take(4 * n as u64)?;
            let labels = raw.chunks_exact(4).map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes"))).collect();
            Some(LabelVector::from_labels(labels).map_err(malformed)?)
        }
        flag => return Err(FormatError::Malformed(format!("has_labels flag {flag}"))),
    };
    if c.pos != bytes.len() {
        return Err(FormatError::TrailingBytes(bytes.len() - c.pos));
    }
    let features = FeatureMatrix::new(n, d, data, Provenance::Raw).map_err(malformed)?;
    FeatureFile::new(features, labels)
}

pub fn encode_csv(file: &FeatureFile) -> std::result::Result<Vec<u8>, FormatError> {
    let values = to_f32(&file.features)?;
    let d = file.features.cols();
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| FormatError::Malformed(e.to_string());
    let header: Vec<String> = std::iter::once("label".to_string()).chain((0..d).map(|j| format!("f{j}"))).collect();
    w.write_record(&header).map_err(csv_err)?;
    for (i, row) in values.chunks_exact(d).enumerate() {
        let label = file.labels.as_ref().map_or("-1".to_string(), |l| l.as_slice()[i].to_string());
        let record: Vec<String> = std::iter::once(label).chain(row.iter().map(|v| v.to_string())).collect();
        w.write_record(&record).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| FormatError::Malformed(e.to_string()))
}

pub fn decode_csv(bytes: &[u8]) -> std::result::Result<FeatureFile, FormatError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(bytes);
    let csv_err = |e: csv::Error| FormatError::Malformed(e.to_string());
    let header = r.headers().map_err(csv_err)?.clone();
    if header.get(0) != Some("label") || header.len() < 2 {
        return Err(FormatError::Malformed("header must be `label,f0,...`".into()));
    }
    let d = header.len() - 1;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut unlabelled = 0usize;
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let label = &rec[0];
        if label == "-1" {
            unlabelled += 1;
        } else {
            labels.push(label.parse::<u32>().map_err(|_| FormatError::Malformed(format!("bad label `{label}`")))?);
        }
        for (col, field) in rec.iter().skip(1).enumerate() {
            let v: f32 = field.parse().map_err(|_| FormatError::Malformed(format!("bad value `{field}`")))?;
            if !v.is_finite() {
                return Err(FormatError::NonFiniteValue { row, col });
            }
            data.push(f64::from(v));
        }
    }
    let n = data.len() / d;
    let labels = match (labels.len(), unlabelled) {
        (0, _) => None,
        (_, 0) => Some(LabelVector::from_labels(labels).map_err(malformed)?),
        _ => return Err(FormatError::Malformed("labels must be given for all samples or none".into())),
    };
    let features = FeatureMatrix::new(n, d, data, Provenance::Raw).map_err(malformed)?;
    FeatureFile::new(features, labels)
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Writes the binary layout, or CSV when the path ends in `.csv`.
pub fn write_features(path: &Path, file: &FeatureFile) -> Result<()> {
    let bytes = if is_csv(path) { encode_csv(file) } else { encode(file) }
        .map_err(|source| Error::Format { path: path.into(), source })?;
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn read_features(path: &Path) -> Result<FeatureFile> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if is_csv(path) { decode_csv(&bytes) } else { decode(&bytes) }
        .map_err(|source| Error::Format { path: path.into(), source })
}
