//! Feature matrices, anomaly-detection domains and their on-disk formats.
//!
//! The canonical feature file (`.featb`) is:
//!
//! | bytes | content                                        |
//! |-------|------------------------------------------------|
//! | 8     | magic `FEATB1\0\0`                             |
//! | 4     | rows, `u32` little-endian                      |
//! | 4     | dims, `u32` little-endian                      |
//! | 4·r·d | values, IEEE-754 `f32` little-endian, row-major |
//!
//! Label files (`.labels`) hold one signed integer per line, `+1` for an
//! anomalous frame and `-1` for a normal one.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub const FEATB_MAGIC: &[u8; 8] = b"FEATB1\0\0";
const FEATB_HEADER_LEN: usize = 16;

/// Dense `rows × dims` matrix of per-frame descriptors, stored row-major.
///
/// Every value is finite and both dimensions are at least one.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    dims: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, dims: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || dims == 0 {
            return Err(Error::Shape(format!(
                "feature matrix must be non-empty, got {rows}x{dims}"
            )));
        }
        if values.len() != rows * dims {
            return Err(Error::Shape(format!(
                "expected {} values for {rows}x{dims}, got {}",
                rows * dims,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite value {} at row {}, column {}",
                values[pos],
                pos / dims,
                pos % dims
            )));
        }
        Ok(Self { rows, dims, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dims = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * dims);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dims {
                return Err(Error::Shape(format!(
                    "row {i} has {} entries, expected {dims}",
                    r.len()
                )));
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), dims, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dims..(i + 1) * self.dims]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dims)
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dims];
        for row in self.iter_rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        let n = self.rows as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &FeatureMatrix) -> Result<FeatureMatrix> {
        if self.dims != other.dims {
            return Err(Error::Shape(format!(
                "cannot stack {} columns on {} columns",
                other.dims, self.dims
            )));
        }
        let mut values = Vec::with_capacity(self.values.len() + other.values.len());
        values.extend_from_slice(&self.values);
        values.extend_from_slice(&other.values);
        Ok(FeatureMatrix {
            rows: self.rows + other.rows,
            dims: self.dims,
            values,
        })
    }

    pub fn select_rows(&self, idx: &[usize]) -> Result<FeatureMatrix> {
        let mut values = Vec::with_capacity(idx.len() * self.dims);
        for &i in idx {
            if i >= self.rows {
                return Err(Error::Shape(format!(
                    "row index {i} out of range for {} rows",
                    self.rows
                )));
            }
            values.extend_from_slice(self.row(i));
        }
        FeatureMatrix::new(idx.len(), self.dims, values)
    }

    /// Rounds every value to the nearest `f32`, the precision of `.featb`.
    pub fn to_single_precision(&self) -> Result<FeatureMatrix> {
        let values = self.values.iter().map(|&v| v as f32 as f64).collect();
        FeatureMatrix::new(self.rows, self.dims, values)
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.dims, &self.values)
    }

    pub fn from_dmatrix(m: &DMatrix<f64>) -> Result<FeatureMatrix> {
        let mut values = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            values.extend(m.row(i).iter().copied());
        }
        FeatureMatrix::new(m.nrows(), m.ncols(), values)
    }
}

/// Frame-level ground truth. `+1` marks an anomaly, `-1` a normal frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Anomaly,
    Normal,
}

impl Label {
    pub fn as_i8(self) -> i8 {
        match self {
            Label::Anomaly => 1,
            Label::Normal => -1,
        }
    }

    pub fn from_i64(v: i64) -> Option<Label> {
        match v {
            1 => Some(Label::Anomaly),
            -1 => Some(Label::Normal),
            _ => None,
        }
    }

    pub fn is_anomaly(self) -> bool {
        self == Label::Anomaly
    }
}

/// A named domain: normal-only training frames plus a labelled test set.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainDataset {
    name: String,
    train: FeatureMatrix,
    test: FeatureMatrix,
    test_labels: Vec<Label>,
}

impl DomainDataset {
    pub fn new(
        name: impl Into<String>,
        train: FeatureMatrix,
        test: FeatureMatrix,
        test_labels: Vec<Label>,
    ) -> Result<Self> {
        let name = name.into();
        if train.dims() != test.dims() {
            return Err(Error::Shape(format!(
                "domain {name}: train has {} dims, test has {}",
                train.dims(),
                test.dims()
            )));
        }
        if test_labels.len() != test.rows() {
            return Err(Error::Shape(format!(
                "domain {name}: {} labels for {} test rows",
                test_labels.len(),
                test.rows()
            )));
        }
        let anomalies = test_labels.iter().filter(|l| l.is_anomaly()).count();
        if anomalies == 0 || anomalies == test_labels.len() {
            return Err(Error::Data(format!(
                "domain {name}: test labels must contain both classes"
            )));
        }
        Ok(Self {
            name,
            train,
            test,
            test_labels,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn train(&self) -> &FeatureMatrix {
        &self.train
    }

    pub fn test(&self) -> &FeatureMatrix {
        &self.test
    }

    pub fn test_labels(&self) -> &[Label] {
        &self.test_labels
    }

    pub fn dims(&self) -> usize {
        self.train.dims()
    }

    pub fn renamed(&self, name: impl Into<String>) -> DomainDataset {
        DomainDataset {
            name: name.into(),
            ..self.clone()
        }
    }
}

/// Source and target domains described by the same descriptor set.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainPair {
    source: DomainDataset,
    target: DomainDataset,
}

impl DomainPair {
    pub fn new(source: DomainDataset, target: DomainDataset) -> Result<Self> {
        if source.dims() != target.dims() {
            return Err(Error::Shape(format!(
                "source {} has {} dims but target {} has {}",
                source.name(),
                source.dims(),
                target.name(),
                target.dims()
            )));
        }
        Ok(Self { source, target })
    }

    pub fn source(&self) -> &DomainDataset {
        &self.source
    }

    pub fn target(&self) -> &DomainDataset {
        &self.target
    }
}

// ---------------------------------------------------------------------------
// .featb / .labels
// ---------------------------------------------------------------------------

pub fn encode_features(m: &FeatureMatrix) -> Result<Vec<u8>> {
    let rows = u32::try_from(m.rows())
        .map_err(|_| Error::Data(format!("{} rows exceed u32", m.rows())))?;
    let dims = u32::try_from(m.dims())
        .map_err(|_| Error::Data(format!("{} dims exceed u32", m.dims())))?;
    let mut buf = Vec::with_capacity(FEATB_HEADER_LEN + 4 * m.values().len());
    buf.extend_from_slice(FEATB_MAGIC);
    buf.extend_from_slice(&rows.to_le_bytes());
    buf.extend_from_slice(&dims.to_le_bytes());
    for (i, &v) in m.values().iter().enumerate() {
        let single = v as f32;
        if !single.is_finite() {
            return Err(Error::Data(format!(
                "value {v} at flat index {i} overflows single precision"
            )));
        }
        buf.extend_from_slice(&single.to_le_bytes());
    }
    Ok(buf)
}

pub fn decode_features(bytes: &[u8]) -> Result<FeatureMatrix> {
    if bytes.len() < FEATB_HEADER_LEN {
        return Err(Error::Format(format!(
            "header truncated: {} bytes, need {FEATB_HEADER_LEN}",
            bytes.len()
        )));
    }
    if &bytes[..8] != FEATB_MAGIC {
        return Err(Error::Format("bad magic, not a .featb file".into()));
    }
    let rows = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let dims = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    if rows == 0 || dims == 0 {
        return Err(Error::Format(format!(
            "header declares empty matrix {rows}x{dims}"
        )));
    }
    let expected = rows
        .checked_mul(dims)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Format(format!("header size {rows}x{dims} overflows")))?;
    let payload = &bytes[FEATB_HEADER_LEN..];
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "payload is {} bytes, header {rows}x{dims} requires {expected}",
            payload.len()
        )));
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    FeatureMatrix::new(rows, dims, values)
}

/// Writes `m` as `.featb`. Values are stored at single precision, so the
/// round-trip is exact for matrices already at `f32` precision.
pub fn save_features(m: &FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_features(m)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_features(&bytes)
}

pub fn save_labels(labels: &[Label], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for l in labels {
        let text = if l.is_anomaly() { "+1" } else { "-1" };
        writeln!(w, "{text}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn parse_labels(text: &str) -> Result<Vec<Label>> {
    let mut labels = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let value: i64 = line
            .trim_start_matches('+')
            .parse()
            .map_err(|_| Error::Format(format!("line {}: not an integer: {line:?}", lineno + 1)))?;
        let label = Label::from_i64(value).ok_or_else(|| {
            Error::Data(format!("line {}: label {value} not in {{+1, -1}}", lineno + 1))
        })?;
        labels.push(label);
    }
    Ok(labels)
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<Label>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels(&text)
}

/// Reads a headerless CSV of numbers, one frame per line. Lossy to the text
/// precision of the file.
pub fn import_features_csv(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::Format(format!("row {}: bad number {f:?}", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Format(format!("{}: no rows", path.display())));
    }
    FeatureMatrix::from_rows(&rows)
}

// ---------------------------------------------------------------------------
// Synthetic domains
// ---------------------------------------------------------------------------

/// Parameters for [`make_synthetic_pair`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub dims: usize,
    pub shift: f64,
    pub anomaly_offset: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            n_train: 200,
            n_test: 200,
            dims: 8,
            shift: 3.0,
            anomaly_offset: 6.0,
        }
    }
}

/// Axis carrying the domain shift.
pub const SHIFT_AXIS: usize = 0;
/// Axis carrying the anomaly offset, orthogonal to [`SHIFT_AXIS`].
pub const ANOMALY_AXIS: usize = 1;

/// Two Gaussian domains with a mean shift between them.
///
/// Source normals are `N(0, I)`, target normals `N(shift·e0, I)`. Anomalies
/// are normals displaced by `anomaly_offset` along `e1`, and exactly half of
/// each test set is anomalous. Values are rounded to `f32` so the result
/// survives a `.featb` round-trip unchanged.
pub fn make_synthetic_pair(spec: &SyntheticSpec) -> Result<DomainPair> {
    if spec.n_train < 2 {
        return Err(Error::Config(format!("n_train must be >= 2, got {}", spec.n_train)));
    }
    if spec.n_test < 4 || spec.n_test % 2 != 0 {
        return Err(Error::Config(format!(
            "n_test must be even and >= 4, got {}",
            spec.n_test
        )));
    }
    if spec.dims < 2 {
        return Err(Error::Config(format!("dims must be >= 2, got {}", spec.dims)));
    }
    if !(spec.anomaly_offset > 0.0) || !spec.anomaly_offset.is_finite() {
        return Err(Error::Config(format!(
            "anomaly_offset must be positive, got {}",
            spec.anomaly_offset
        )));
    }
    if !spec.shift.is_finite() {
        return Err(Error::Config("shift must be finite".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let source = synthetic_domain(&mut rng, "source", spec, 0.0)?;
    let target = synthetic_domain(&mut rng, "target", spec, spec.shift)?;
    DomainPair::new(source, target)
}

fn synthetic_domain(
    rng: &mut ChaCha8Rng,
    name: &str,
    spec: &SyntheticSpec,
    shift: f64,
) -> Result<DomainDataset> {
    let draw = |n: usize, rng: &mut ChaCha8Rng| -> Vec<f64> {
        let mut values: Vec<f64> = (0..n * spec.dims)
            .map(|_| StandardNormal.sample(rng))
            .collect();
        for row in values.chunks_exact_mut(spec.dims) {
            row[SHIFT_AXIS] += shift;
        }
        values
    };

    let train = draw(spec.n_train, rng);
    let mut labels: Vec<Label> = (0..spec.n_test)
        .map(|i| if i < spec.n_test / 2 { Label::Normal } else { Label::Anomaly })
        .collect();
    labels.shuffle(rng);
    let mut test = draw(spec.n_test, rng);
    for (row, label) in test.chunks_exact_mut(spec.dims).zip(&labels) {
        if label.is_anomaly() {
            row[ANOMALY_AXIS] += spec.anomaly_offset;
        }
    }

    let single = |v: Vec<f64>| v.into_iter().map(|x| x as f32 as f64).collect::<Vec<_>>();
    DomainDataset::new(
        name,
        FeatureMatrix::new(spec.n_train, spec.dims, single(train))?,
        FeatureMatrix::new(spec.n_test, spec.dims, single(test))?,
        labels,
    )
}

// ---------------------------------------------------------------------------
// Standardization
// ---------------------------------------------------------------------------

/// Per-feature standardization fitted on one matrix (the source train set)
/// and applied unchanged to any other.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(train: &FeatureMatrix) -> Standardizer {
        let mean = train.column_means();
        let n = train.rows() as f64;
        let mut var = vec![0.0; train.dims()];
        for row in train.iter_rows() {
            for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        // constant columns are only centered
        let scale = var
            .into_iter()
            .map(|v| {
                let sd = (v / (n - 1.0).max(1.0)).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn apply(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        if x.dims() != self.mean.len() {
            return Err(Error::Shape(format!(
                "standardizer fitted on {} dims, got {}",
                self.mean.len(),
                x.dims()
            )));
        }
        let mut values = Vec::with_capacity(x.values().len());
        for row in x.iter_rows() {
            values.extend(
                row.iter()
                    .zip(&self.mean)
                    .zip(&self.scale)
                    .map(|((v, m), s)| (v - m) / s),
            );
        }
        FeatureMatrix::new(x.rows(), x.dims(), values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: usize, dims: usize, v: &[f64]) -> FeatureMatrix {
        FeatureMatrix::new(rows, dims, v.to_vec()).unwrap()
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(matches!(
            FeatureMatrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::Data(_))
        ));
        assert!(matches!(FeatureMatrix::new(0, 2, vec![]), Err(Error::Shape(_))));
        assert!(matches!(
            FeatureMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn featb_two_by_three() {
        let a = m(2, 3, &[1.0, 2.0, 3.0, -4.0, 0.5, 6.25]);
        let bytes = encode_features(&a).unwrap();
        assert_eq!(&bytes[..8], b"FEATB1\0\0");
        assert_eq!(&bytes[8..12], &2u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &3u32.to_le_bytes());
        assert_eq!(bytes.len(), 16 + 24);
        assert_eq!(decode_features(&bytes).unwrap(), a);
    }

    #[test]
    fn featb_truncated_payload() {
        let a = m(2, 3, &[1.0; 6]);
        let mut bytes = encode_features(&a).unwrap();
        bytes.truncate(bytes.len() - 4);
        assert!(matches!(decode_features(&bytes), Err(Error::Format(_))));
        assert!(matches!(decode_features(&bytes[..10]), Err(Error::Format(_))));
    }

    #[test]
    fn featb_bad_magic() {
        let mut bytes = encode_features(&m(1, 1, &[0.0])).unwrap();
        bytes[0] = b'X';
        assert!(matches!(decode_features(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn featb_nan_is_data_error() {
        let mut bytes = encode_features(&m(1, 2, &[0.0, 1.0])).unwrap();
        bytes[16..20].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(decode_features(&bytes), Err(Error::Data(_))));
    }

    #[test]
    fn featb_file_round_trip_1x1() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.featb");
        let a = m(1, 1, &[0.0]);
        save_features(&a, &path).unwrap();
        assert_eq!(load_features(&path).unwrap(), a);
    }

    #[test]
    fn featb_80x4096_seeded_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let values: Vec<f64> = (0..80 * 4096)
            .map(|_| {
                let x: f64 = StandardNormal.sample(&mut rng);
                x as f32 as f64
            })
            .collect();
        let a = FeatureMatrix::new(80, 4096, values).unwrap();
        let back = decode_features(&encode_features(&a).unwrap()).unwrap();
        assert_eq!(back.rows(), 80);
        assert_eq!(back.dims(), 4096);
        assert!(a
            .values()
            .iter()
            .zip(back.values())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn save_to_missing_dir_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("x.featb");
        assert!(matches!(
            save_features(&m(1, 1, &[1.0]), path),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn labels_parse() {
        let l = parse_labels("+1\n-1\n1\n\n").unwrap();
        assert_eq!(l, vec![Label::Anomaly, Label::Normal, Label::Anomaly]);
        assert!(matches!(parse_labels("0\n"), Err(Error::Data(_))));
        assert!(matches!(parse_labels("abc\n"), Err(Error::Format(_))));
    }

    #[test]
    fn labels_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.labels");
        let labels = vec![Label::Normal, Label::Anomaly, Label::Normal];
        save_labels(&labels, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "-1\n+1\n-1\n");
        assert_eq!(load_labels(&path).unwrap(), labels);
    }

    #[test]
    fn csv_import() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        std::fs::write(&path, "1.5, 2\n3,4\n").unwrap();
        let a = import_features_csv(&path).unwrap();
        assert_eq!(a, m(2, 2, &[1.5, 2.0, 3.0, 4.0]));
    }

    #[test]
    fn dataset_invariants() {
        let train = m(2, 2, &[0.0; 4]);
        let test = m(2, 2, &[0.0; 4]);
        assert!(matches!(
            DomainDataset::new("a", train.clone(), test.clone(), vec![Label::Normal; 2]),
            Err(Error::Data(_))
        ));
        assert!(matches!(
            DomainDataset::new("a", train.clone(), test.clone(), vec![Label::Normal]),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            DomainDataset::new("a", m(1, 3, &[0.0; 3]), test.clone(), vec![Label::Normal, Label::Anomaly]),
            Err(Error::Shape(_))
        ));
        assert!(DomainDataset::new("a", train, test, vec![Label::Normal, Label::Anomaly]).is_ok());
    }

    #[test]
    fn synthetic_is_deterministic_and_balanced() {
        let spec = SyntheticSpec { seed: 7, ..Default::default() };
        let a = make_synthetic_pair(&spec).unwrap();
        let b = make_synthetic_pair(&spec).unwrap();
        assert_eq!(a, b);
        for d in [a.source(), a.target()] {
            let anomalies = d.test_labels().iter().filter(|l| l.is_anomaly()).count();
            assert_eq!(anomalies, spec.n_test / 2);
            assert_eq!(d.train().rows(), spec.n_train);
            assert_eq!(d.dims(), spec.dims);
        }
        let c = make_synthetic_pair(&SyntheticSpec { seed: 8, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn synthetic_zero_shift_means_agree() {
        let spec = SyntheticSpec {
            seed: 7,
            n_train: 500,
            dims: 8,
            shift: 0.0,
            ..Default::default()
        };
        let pair = make_synthetic_pair(&spec).unwrap();
        let ms = pair.source().train().column_means();
        let mt = pair.target().train().column_means();
        let gap: f64 = ms.iter().zip(&mt).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(gap < 0.5, "gap {gap}");
    }

    #[test]
    fn synthetic_shift_moves_target_mean() {
        let spec = SyntheticSpec { seed: 3, n_train: 500, shift: 3.0, ..Default::default() };
        let pair = make_synthetic_pair(&spec).unwrap();
        let mt = pair.target().train().column_means();
        assert!((mt[SHIFT_AXIS] - 3.0).abs() < 0.3);
        assert!(mt[ANOMALY_AXIS].abs() < 0.3);
    }

    #[test]
    fn synthetic_rejects_bad_counts() {
        for spec in [
            SyntheticSpec { n_train: 1, ..Default::default() },
            SyntheticSpec { n_test: 2, ..Default::default() },
            SyntheticSpec { n_test: 7, ..Default::default() },
            SyntheticSpec { dims: 1, ..Default::default() },
            SyntheticSpec { anomaly_offset: 0.0, ..Default::default() },
        ] {
            assert!(matches!(make_synthetic_pair(&spec), Err(Error::Config(_))));
        }
    }

    #[test]
    fn standardizer_fits_source_only() {
        let train = m(3, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0]);
        let s = Standardizer::fit(&train);
        let out = s.apply(&train).unwrap();
        assert_eq!(out.row(1), &[0.0, 0.0]);
        assert_eq!(out.row(0), &[-1.0, 0.0]);
        assert!(matches!(s.apply(&m(1, 3, &[0.0; 3])), Err(Error::Shape(_))));
    }

    proptest! {
        #[test]
        fn featb_round_trip_is_exact(
            rows in 1usize..6,
            dims in 1usize..6,
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let values: Vec<f64> = (0..rows * dims)
                .map(|_| {
                    let x: f64 = StandardNormal.sample(&mut rng);
                    (x * 1e3) as f32 as f64
                })
                .collect();
            let a = FeatureMatrix::new(rows, dims, values).unwrap();
            let back = decode_features(&encode_features(&a).unwrap()).unwrap();
            prop_assert_eq!(back, a);
        }
    }
}
