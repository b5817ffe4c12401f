//! Dataset ingestion (CSV and IDX) and the bundled digits-like generator.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dist::{stream_rng, LabeledSample, Provenance, SAMPLING_STREAM};
use crate::error::{Error, Result};

pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;
pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;

/// Maps one digit to `+1` and another to `-1`; every other digit is dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigitPair {
    pub positive: u8,
    pub negative: u8,
}

impl DigitPair {
    pub fn new(positive: u8, negative: u8) -> Result<Self> {
        if positive > 9 || negative > 9 || positive == negative {
            return Err(Error::InvalidInput(format!(
                "digit pair {positive}/{negative} must be two distinct digits"
            )));
        }
        Ok(Self { positive, negative })
    }

    fn label(&self, digit: i64) -> Option<i8> {
        if digit == self.positive as i64 {
            Some(1)
        } else if digit == self.negative as i64 {
            Some(-1)
        } else {
            None
        }
    }
}

impl std::str::FromStr for DigitPair {
    type Err = Error;

    /// Parses `6v7` or `6,7`: the first digit becomes the positive class.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("digit pair `{s}` is not of the form `6v7`"));
        let (a, b) = s.trim().split_once(['v', ',']).ok_or_else(bad)?;
        let a = a.trim().parse().map_err(|_| bad())?;
        let b = b.trim().parse().map_err(|_| bad())?;
        DigitPair::new(a, b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "lowercase")]
pub enum DatasetSource {
    /// One row per example, label first.
    Csv { path: String },
    /// An IDX image file and its label file.
    Idx { images: String, labels: String },
}

pub fn load_dataset(source: &DatasetSource, remap: Option<DigitPair>) -> Result<LabeledSample> {
    match source {
        DatasetSource::Csv { path } => load_csv(path, remap),
        DatasetSource::Idx { images, labels } => {
            let pair =
                remap.ok_or_else(|| Error::InvalidInput("IDX labels are digits; a digit pair is required".into()))?;
            load_idx(images, labels, pair)
        }
    }
}

/// Reads a headerless or single-header CSV whose first column is the label.
///
/// Without `remap`, labels must be `-1` or `+1`. With it, labels are digits
/// and rows with other digits are dropped.
pub fn load_csv(path: impl AsRef<Path>, remap: Option<DigitPair>) -> Result<LabeledSample> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let Some(first) = record.get(0) else {
            continue;
        };
        let Ok(label) = first.parse::<f64>() else {
            if row == 0 {
                continue;
            }
            return Err(Error::Parse(format!(
                "row {}: label `{first}` is not a number",
                row + 1
            )));
        };
        if label.fract() != 0.0 {
            return Err(Error::Parse(format!(
                "row {}: label {label} is not an integer",
                row + 1
            )));
        }
        let label = label as i64;
        let y = match remap {
            Some(pair) => match pair.label(label) {
                Some(y) => y,
                None if (0..=9).contains(&label) => continue,
                None => return Err(Error::InvalidLabel(label)),
            },
            None if label == 1 || label == -1 => label as i8,
            None => return Err(Error::InvalidLabel(label)),
        };
        let x = record
            .iter()
            .skip(1)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("row {}: `{v}` is not a number", row + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        features.push(x);
        labels.push(y);
    }
    if labels.is_empty() {
        return Err(Error::Empty);
    }
    LabeledSample::new(features, labels, Provenance::External)
}

/// A parsed IDX tensor of unsigned bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxTensor {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

/// Parses the big-endian IDX layout: two zero bytes, a type byte (only
/// `0x08`, unsigned byte, is supported), the number of dimensions, one
/// 32-bit size per dimension, then the payload.
pub fn parse_idx(bytes: &[u8], expected_magic: u32) -> Result<IdxTensor> {
    if bytes.len() < 4 {
        return Err(Error::Parse("IDX file is shorter than its magic number".into()));
    }
    let magic = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
    if magic != expected_magic {
        return Err(Error::Parse(format!(
            "IDX magic {magic:#010x}, expected {expected_magic:#010x}"
        )));
    }
    let rank = bytes[3] as usize;
    let header = 4 + 4 * rank;
    if bytes.len() < header {
        return Err(Error::Parse("IDX header is truncated".into()));
    }
    let dims: Vec<usize> = bytes[4..header]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]) as usize)
        .collect();
    let len: usize = dims.iter().product();
    let payload = &bytes[header..];
    if payload.len() != len {
        return Err(Error::Parse(format!(
            "IDX payload has {} bytes, header declares {len}",
            payload.len()
        )));
    }
    Ok(IdxTensor {
        dims,
        data: payload.to_vec(),
    })
}

/// Loads an IDX image/label pair, keeping the two digits of `pair`. Pixels
/// are divided by the largest pixel value in the image file.
pub fn load_idx(images: impl AsRef<Path>, labels: impl AsRef<Path>, pair: DigitPair) -> Result<LabeledSample> {
    let images = parse_idx(&fs::read(images)?, IDX_IMAGES_MAGIC)?;
    let labels = parse_idx(&fs::read(labels)?, IDX_LABELS_MAGIC)?;
    let n = images.dims[0];
    if labels.dims[0] != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: labels.dims[0],
        });
    }
    let pixels = images.dims[1..].iter().product::<usize>();
    let max = images.data.iter().copied().max().unwrap_or(0).max(1) as f64;
    let mut features = Vec::new();
    let mut ys = Vec::new();
    for (i, &digit) in labels.data.iter().enumerate() {
        if digit > 9 {
            return Err(Error::InvalidLabel(digit as i64));
        }
        if let Some(y) = pair.label(digit as i64) {
            let row = &images.data[i * pixels..(i + 1) * pixels];
            features.push(row.iter().map(|&p| p as f64 / max).collect());
            ys.push(y);
        }
    }
    if ys.is_empty() {
        return Err(Error::Empty);
    }
    LabeledSample::new(features, ys, Provenance::External)
}

/// Appends a constant-one feature to every row.
pub fn with_bias(features: &[Vec<f64>]) -> Vec<Vec<f64>> {
    features
        .iter()
        .map(|x| {
            let mut row = x.clone();
            row.push(1.0);
            row
        })
        .collect()
}

/// Parameters of the digits-like generator. Both classes share a set of
/// "style" blobs; a class is a style centre shifted by `+-separation` along
/// the first axis, plus Gaussian noise. As with pixels, the noise scale
/// differs by axis: unit on the first axis and decaying geometrically down
/// to `min_scale` on the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigitsLike {
    pub examples: usize,
    pub dim: usize,
    pub styles: usize,
    pub separation: f64,
    /// Scale of the style centres in the remaining axes.
    pub style_spread: f64,
    pub min_scale: f64,
    pub seed: u64,
}

impl Default for DigitsLike {
    fn default() -> Self {
        Self {
            examples: 3000,
            dim: 64,
            styles: 3,
            separation: 2.0,
            style_spread: 1.0,
            min_scale: 0.03,
            seed: 20140601,
        }
    }
}

impl DigitsLike {
    pub fn generate(&self) -> Result<LabeledSample> {
        if self.examples < 2 || self.dim < 2 || self.styles == 0 {
            return Err(Error::InvalidInput(
                "digits-like data needs two examples, two dimensions and one style".into(),
            ));
        }
        let mut rng = stream_rng(self.seed, SAMPLING_STREAM);
        let scales: Vec<f64> = (0..self.dim)
            .map(|j| self.min_scale.powf(j as f64 / (self.dim - 1) as f64))
            .collect();
        let normal = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
        let styles: Vec<Vec<f64>> = (0..self.styles)
            .map(|_| {
                let mut c: Vec<f64> = scales
                    .iter()
                    .map(|s| s * self.style_spread * normal(&mut rng))
                    .collect();
                c[0] = 0.0;
                c
            })
            .collect();
        let mut features = Vec::with_capacity(self.examples);
        let mut labels = Vec::with_capacity(self.examples);
        for i in 0..self.examples {
            // Alternate classes so both are always present.
            let class: i8 = if i % 2 == 0 { 1 } else { -1 };
            let style = &styles[rng.random_range(0..self.styles)];
            let mut x: Vec<f64> = style
                .iter()
                .zip(&scales)
                .map(|(c, s)| c + s * normal(&mut rng))
                .collect();
            x[0] += class as f64 * self.separation;
            features.push(x);
            labels.push(class);
        }
        LabeledSample::new(features, labels, Provenance::Clean { seed: self.seed })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn idx_bytes(magic: u32, dims: &[u32], data: &[u8]) -> Vec<u8> {
        let mut out = magic.to_be_bytes().to_vec();
        for d in dims {
            out.extend_from_slice(&d.to_be_bytes());
        }
        out.extend_from_slice(data);
        out
    }

    #[test]
    fn csv_with_signed_labels() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "1,0.5,0.25\n-1,1.0,0.0\n1,0.0,2.0").unwrap();
        let s = load_csv(file.path(), None).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.labels, vec![1, -1, 1]);
        assert_eq!(s.features[2], vec![0.0, 2.0]);
    }

    #[test]
    fn csv_header_and_remap() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "label,a\n6,0.1\n7,0.2\n3,0.3\n6,0.4").unwrap();
        let s = load_csv(file.path(), Some("6v7".parse().unwrap())).unwrap();
        assert_eq!(s.labels, vec![1, -1, 1]);
        assert!(matches!(load_csv(file.path(), None), Err(Error::InvalidLabel(6))));
    }

    #[test]
    fn csv_rejects_ragged_rows() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "1,0.5,0.25\n-1,1.0").unwrap();
        assert!(matches!(load_csv(file.path(), None), Err(Error::Csv(_))));
    }

    #[test]
    fn idx_images_are_three_dimensional() {
        let bytes = idx_bytes(IDX_IMAGES_MAGIC, &[2, 2, 3], &[0; 12]);
        let t = parse_idx(&bytes, IDX_IMAGES_MAGIC).unwrap();
        assert_eq!(t.dims, vec![2, 2, 3]);
        assert!(parse_idx(&bytes, IDX_LABELS_MAGIC).is_err());
        assert!(parse_idx(&bytes[..bytes.len() - 1], IDX_IMAGES_MAGIC).is_err());
    }

    #[test]
    fn idx_pair_is_filtered_and_scaled() {
        let dir = tempfile::tempdir().unwrap();
        let images = dir.path().join("images.idx");
        let labels = dir.path().join("labels.idx");
        let pixels = [0, 255, 10, 20, 30, 40, 50, 60, 70];
        fs::write(&images, idx_bytes(IDX_IMAGES_MAGIC, &[3, 1, 3], &pixels)).unwrap();
        fs::write(&labels, idx_bytes(IDX_LABELS_MAGIC, &[3], &[6, 2, 7])).unwrap();
        let s = load_idx(&images, &labels, DigitPair::new(6, 7).unwrap()).unwrap();
        assert_eq!(s.labels, vec![1, -1]);
        assert_eq!(s.features[0], vec![0.0, 1.0, 10.0 / 255.0]);
        assert_eq!(s.features[1][2], 70.0 / 255.0);
    }

    #[test]
    fn digit_pair_parsing() {
        assert_eq!("0v9".parse::<DigitPair>().unwrap(), DigitPair::new(0, 9).unwrap());
        assert!("6v6".parse::<DigitPair>().is_err());
        assert!("six".parse::<DigitPair>().is_err());
    }

    #[test]
    fn digits_like_is_deterministic_and_balanced() {
        let config = DigitsLike {
            examples: 200,
            ..DigitsLike::default()
        };
        let a = config.generate().unwrap();
        assert_eq!(a, config.generate().unwrap());
        assert_eq!(a.dim(), 64);
        assert_eq!(a.positive_fraction(), 0.5);
    }
}
