//! Tabular binary-classification datasets: CSV ingestion, z-score scaling,
//! and a seeded synthetic generator with a planted informative support.
//!
//! Labels are stored as `0` (benign / normal) and `1` (malignant).

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textfmt;

/// A validated feature matrix with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    features: Array2<f64>,
    feature_names: Vec<String>,
    labels: Vec<u8>,
}

impl Dataset {
    /// Builds a dataset, checking shape agreement, label coverage, finiteness
    /// and feature-name uniqueness.
    pub fn new(
        name: impl Into<String>,
        features: Array2<f64>,
        feature_names: Vec<String>,
        labels: Vec<u8>,
    ) -> Result<Self> {
        let (n, p) = features.dim();
        if n != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{n} feature rows but {} labels",
                labels.len()
            )));
        }
        if p != feature_names.len() {
            return Err(Error::DimensionMismatch(format!(
                "{p} feature columns but {} feature names",
                feature_names.len()
            )));
        }
        let mut seen = HashSet::with_capacity(p);
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateFeature(name.clone()));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::InvalidArgument(format!("label {bad} is not binary")));
        }
        let positives = labels.iter().filter(|&&l| l == 1).count();
        if positives == 0 || positives == n {
            let only = if positives == 0 { "0" } else { "1" };
            return Err(Error::SingleClass(vec![only.to_string()]));
        }
        for ((row, col), &v) in features.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row,
                    column: feature_names[col].clone(),
                    value: v.to_string(),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            features,
            feature_names,
            labels,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn n_cases(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Case counts as `[class 0, class 1]`.
    pub fn class_counts(&self) -> [usize; 2] {
        let positives = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - positives, positives]
    }

    /// Row indices belonging to `class`, ascending.
    pub fn rows_of_class(&self, class: u8) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect()
    }

    /// Labels of the given rows, in order.
    pub fn labels_at(&self, rows: &[usize]) -> Vec<u8> {
        rows.iter().map(|&r| self.labels[r]).collect()
    }

    /// A dataset restricted to `columns`, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Result<Dataset> {
        let p = self.n_features();
        if let Some(&bad) = columns.iter().find(|&&c| c >= p) {
            return Err(Error::DimensionMismatch(format!(
                "column {bad} out of range for {p} features"
            )));
        }
        let features = self.features.select(Axis(1), columns);
        let names = columns
            .iter()
            .map(|&c| self.feature_names[c].clone())
            .collect();
        Dataset::new(self.name.clone(), features, names, self.labels.clone())
    }
}

/// Explicit mapping from the two label symbols found in a CSV to `{0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMapping {
    pub negative: String,
    pub positive: String,
}

/// Optional JSON sidecar next to a CSV (`foo.csv` -> `foo.manifest.json`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_column: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negative_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_url: Option<String>,
    /// Training cases per class for balanced splits, when the default
    /// fraction rule should not be used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_class: Option<usize>,
    /// Generator parameters for synthetic datasets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSpec>,
}

impl DatasetManifest {
    pub fn label_mapping(&self) -> Option<LabelMapping> {
        match (&self.negative_label, &self.positive_label) {
            (Some(n), Some(p)) => Some(LabelMapping {
                negative: n.clone(),
                positive: p.clone(),
            }),
            _ => None,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| Error::Manifest {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = textfmt::to_json_pretty(self).expect("manifest serializes");
        fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Sidecar manifest location for a CSV path.
pub fn manifest_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("manifest.json")
}

/// Reads the sidecar manifest if one exists.
pub fn load_manifest(csv_path: &Path) -> Result<Option<DatasetManifest>> {
    let path = manifest_path(csv_path);
    if path.is_file() {
        DatasetManifest::read(&path).map(Some)
    } else {
        Ok(None)
    }
}

/// CSV ingestion options.
#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub label_column: String,
    /// Explicit label mapping; when absent the sidecar manifest is consulted,
    /// then lexicographic order (smaller symbol -> 0).
    pub mapping: Option<LabelMapping>,
    pub name: Option<String>,
}

impl CsvOptions {
    pub fn new(label_column: impl Into<String>) -> Self {
        Self {
            label_column: label_column.into(),
            mapping: None,
            name: None,
        }
    }
}

/// Loads a CSV with a header row and one label column.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<Dataset> {
    load_csv_with(path, &CsvOptions::new(label_column))
}

pub fn load_csv_with(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        });
    }
    let manifest = load_manifest(path)?;
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(csv_err)?;
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let label_positions: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| **h == options.label_column)
        .map(|(i, _)| i)
        .collect();
    let label_idx = match label_positions.as_slice() {
        [] => return Err(Error::MissingLabelColumn(options.label_column.clone())),
        [i] => *i,
        _ => return Err(Error::AmbiguousLabelColumn(options.label_column.clone())),
    };
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    let p = feature_names.len();

    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        // Line numbers as a text editor shows them; the header is line 1.
        let line = i + 2;
        if record.len() != header.len() {
            return Err(Error::RaggedRow {
                row: line,
                expected: header.len(),
                found: record.len(),
            });
        }
        for (col, field) in record.iter().enumerate() {
            let field = field.trim();
            if col == label_idx {
                raw_labels.push(field.to_string());
                continue;
            }
            let column = &header[col];
            let v: f64 = field.parse().map_err(|_| Error::NonNumeric {
                row: line,
                column: column.clone(),
                value: field.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: line,
                    column: column.clone(),
                    value: field.to_string(),
                });
            }
            values.push(v);
        }
    }

    let symbols: BTreeSet<&str> = raw_labels.iter().map(String::as_str).collect();
    if symbols.len() > 2 {
        return Err(Error::TooManyClasses(
            symbols.into_iter().map(str::to_string).collect(),
        ));
    }
    let mapping = match options
        .mapping
        .clone()
        .or_else(|| manifest.as_ref().and_then(DatasetManifest::label_mapping))
    {
        Some(m) => m,
        None => {
            if symbols.len() < 2 {
                return Err(Error::SingleClass(
                    symbols.into_iter().map(str::to_string).collect(),
                ));
            }
            let mut it = symbols.iter();
            LabelMapping {
                negative: it.next().unwrap().to_string(),
                positive: it.next().unwrap().to_string(),
            }
        }
    };
    let labels = raw_labels
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if *s == mapping.negative {
                Ok(0)
            } else if *s == mapping.positive {
                Ok(1)
            } else {
                Err(Error::UnmappedLabel {
                    row: i + 2,
                    value: s.clone(),
                })
            }
        })
        .collect::<Result<Vec<u8>>>()?;

    let n = labels.len();
    let features = Array2::from_shape_vec((n, p), values)
        .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
    let name = options
        .name
        .clone()
        .or_else(|| manifest.and_then(|m| m.name))
        .unwrap_or_else(|| {
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default()
        });
    Dataset::new(name, features, feature_names, labels)
}

/// Writes `data` as CSV with the label column first. Values carry 17
/// significant digits, so reading the file back gives identical `f64`s.
pub fn write_csv(
    data: &Dataset,
    path: impl AsRef<Path>,
    label_column: &str,
    mapping: &LabelMapping,
) -> Result<()> {
    let path = path.as_ref();
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec![label_column.to_string()];
    header.extend(data.feature_names.iter().cloned());
    writer.write_record(&header).map_err(csv_err)?;
    for (row, &label) in data.features.rows().into_iter().zip(&data.labels) {
        let mut record = Vec::with_capacity(row.len() + 1);
        record.push(if label == 1 {
            mapping.positive.clone()
        } else {
            mapping.negative.clone()
        });
        record.extend(row.iter().map(|&v| textfmt::g17(v)));
        writer.write_record(&record).map_err(csv_err)?;
    }
    writer.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Per-column z-score parameters fit on a subset of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub means: Vec<f64>,
    /// Population standard deviations.
    pub stddevs: Vec<f64>,
    /// Zero-variance columns; their scaled values are 0.
    pub constant: Vec<bool>,
}

impl ScalingParams {
    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    /// Scales `rows` of `x` into a new matrix.
    pub fn transform(&self, x: ArrayView2<'_, f64>, rows: &[usize]) -> Result<Array2<f64>> {
        if x.ncols() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "scaling fit on {} columns applied to {}",
                self.len(),
                x.ncols()
            )));
        }
        if let Some(&bad) = rows.iter().find(|&&r| r >= x.nrows()) {
            return Err(Error::DimensionMismatch(format!(
                "row {bad} out of range for {} rows",
                x.nrows()
            )));
        }
        let mut out = Array2::zeros((rows.len(), self.len()));
        for (mut dst, &r) in out.rows_mut().into_iter().zip(rows) {
            for (j, (d, &v)) in dst.iter_mut().zip(x.row(r)).enumerate() {
                *d = if self.constant[j] {
                    0.0
                } else {
                    (v - self.means[j]) / self.stddevs[j]
                };
            }
        }
        Ok(out)
    }
}

/// Column means and population standard deviations over `rows`.
pub fn fit_scaling(data: &Dataset, rows: &[usize]) -> Result<ScalingParams> {
    fit_scaling_matrix(data.features(), rows)
}

pub fn fit_scaling_matrix(x: ArrayView2<'_, f64>, rows: &[usize]) -> Result<ScalingParams> {
    if rows.is_empty() {
        return Err(Error::EmptyRows);
    }
    if let Some(&bad) = rows.iter().find(|&&r| r >= x.nrows()) {
        return Err(Error::DimensionMismatch(format!(
            "row {bad} out of range for {} rows",
            x.nrows()
        )));
    }
    let count = rows.len() as f64;
    let p = x.ncols();
    let mut means = vec![0.0; p];
    for &r in rows {
        for (m, &v) in means.iter_mut().zip(x.row(r)) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= count);
    let mut vars = vec![0.0; p];
    for &r in rows {
        for ((s, &v), &m) in vars.iter_mut().zip(x.row(r)).zip(&means) {
            *s += (v - m) * (v - m);
        }
    }
    let stddevs: Vec<f64> = vars.iter().map(|s| (s / count).sqrt()).collect();
    let constant = stddevs
        .iter()
        .zip(&means)
        .map(|(&s, &m)| s <= 1e-12 * (1.0 + m.abs()))
        .collect();
    Ok(ScalingParams {
        means,
        stddevs,
        constant,
    })
}

/// `(x - mean) / stddev` for the given rows; constant columns map to 0.
pub fn apply_scaling(
    data: &Dataset,
    params: &ScalingParams,
    rows: &[usize],
) -> Result<Array2<f64>> {
    params.transform(data.features(), rows)
}

/// Parameters of the synthetic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub p: usize,
    pub support: Vec<usize>,
    pub coefficient_magnitude: f64,
    pub noise_stddev: f64,
    /// Fraction of cases labelled 1.
    pub class_balance: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n: 200,
            p: 50,
            support: (0..5).collect(),
            coefficient_magnitude: 1.0,
            noise_stddev: 0.5,
            class_balance: 0.5,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(Error::InvalidArgument(format!("n = {} < 4", self.n)));
        }
        if self.p < 1 {
            return Err(Error::InvalidArgument("p must be at least 1".into()));
        }
        let mut seen = HashSet::new();
        for &j in &self.support {
            if j >= self.p {
                return Err(Error::InvalidArgument(format!(
                    "support index {j} >= p = {}",
                    self.p
                )));
            }
            if !seen.insert(j) {
                return Err(Error::InvalidArgument(format!(
                    "support index {j} repeated"
                )));
            }
        }
        if !(self.class_balance > 0.0 && self.class_balance < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "class_balance {} outside (0, 1)",
                self.class_balance
            )));
        }
        if !self.coefficient_magnitude.is_finite()
            || !self.noise_stddev.is_finite()
            || self.noise_stddev < 0.0
        {
            return Err(Error::InvalidArgument(
                "coefficient_magnitude and noise_stddev must be finite, noise_stddev >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Draws a dataset whose labels depend linearly on the planted support.
///
/// Features are i.i.d. standard normal; the latent score is
/// `magnitude * sum(x_support) + noise`, and the `round(class_balance * n)`
/// highest scores are labelled 1 (ties resolved by lower row index).
pub fn synthesize(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let features =
        Array2::from_shape_simple_fn((spec.n, spec.p), || StandardNormal.sample(&mut rng));
    let noise: Array1<f64> = Array1::from_shape_simple_fn(spec.n, || {
        let z: f64 = StandardNormal.sample(&mut rng);
        z * spec.noise_stddev
    });
    let scores: Vec<f64> = features
        .rows()
        .into_iter()
        .zip(noise.iter())
        .map(|(row, e)| {
            spec.support
                .iter()
                .map(|&j| spec.coefficient_magnitude * row[j])
                .sum::<f64>()
                + e
        })
        .collect();
    let positives = ((spec.class_balance * spec.n as f64).round() as usize).clamp(1, spec.n - 1);
    let mut order: Vec<usize> = (0..spec.n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut labels = vec![0u8; spec.n];
    for &i in &order[..positives] {
        labels[i] = 1;
    }
    let names = (0..spec.p).map(|j| format!("f{j}")).collect();
    Dataset::new("synthetic", features, names, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn tiny() -> Dataset {
        Dataset::new(
            "t",
            array![[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]],
            vec!["a".into(), "b".into()],
            vec![0, 1, 1],
        )
        .unwrap()
    }

    #[test]
    fn rejects_invariant_violations() {
        let x = array![[1.0], [2.0]];
        assert!(matches!(
            Dataset::new("t", x.clone(), vec!["a".into()], vec![0, 0]),
            Err(Error::SingleClass(_))
        ));
        assert!(matches!(
            Dataset::new("t", x.clone(), vec!["a".into()], vec![0]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            Dataset::new(
                "t",
                array![[1.0, 2.0]],
                vec!["a".into(), "a".into()],
                vec![0]
            ),
            Err(Error::DuplicateFeature(_))
        ));
        assert!(matches!(
            Dataset::new("t", array![[f64::NAN], [1.0]], vec!["a".into()], vec![0, 1]),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn scaling_hand_values() {
        let d = tiny();
        let params = fit_scaling(&d, &[0, 1, 2]).unwrap();
        assert_eq!(params.means[0], 2.0);
        assert!((params.stddevs[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(!params.constant[0]);
        assert!(params.constant[1]);
        let scaled = apply_scaling(&d, &params, &[0, 1, 2]).unwrap();
        assert!(scaled.column(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scaling_single_value() {
        let params = ScalingParams {
            means: vec![2.0],
            stddevs: vec![2.0],
            constant: vec![false],
        };
        let out = params.transform(array![[4.0]].view(), &[0]).unwrap();
        assert_eq!(out[[0, 0]], 1.0);
        let flagged = ScalingParams {
            constant: vec![true],
            ..params.clone()
        };
        assert_eq!(
            flagged.transform(array![[123.0]].view(), &[0]).unwrap()[[0, 0]],
            0.0
        );
        assert!(matches!(
            params.transform(array![[1.0, 2.0]].view(), &[0]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn scaling_rejects_empty_rows() {
        assert!(matches!(fit_scaling(&tiny(), &[]), Err(Error::EmptyRows)));
    }

    #[test]
    fn test_rows_use_training_statistics() {
        let d = tiny();
        let params = fit_scaling(&d, &[0, 1]).unwrap();
        let test = apply_scaling(&d, &params, &[2]).unwrap();
        // Mean 1.5, std 0.5 over the training rows.
        assert_eq!(test[[0, 0]], 3.0);
    }

    #[test]
    fn synth_rejects_bad_specs() {
        let bad = [
            SynthSpec {
                n: 3,
                ..SynthSpec::default()
            },
            SynthSpec {
                p: 0,
                support: vec![],
                ..SynthSpec::default()
            },
            SynthSpec {
                support: vec![1, 1],
                ..SynthSpec::default()
            },
            SynthSpec {
                support: vec![50],
                ..SynthSpec::default()
            },
            SynthSpec {
                class_balance: 1.0,
                ..SynthSpec::default()
            },
        ];
        for spec in bad {
            assert!(synthesize(&spec).is_err(), "{spec:?}");
        }
    }

    #[test]
    fn synth_is_deterministic_and_balanced() {
        let spec = SynthSpec::default();
        let a = synthesize(&spec).unwrap();
        let b = synthesize(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.class_counts(), [100, 100]);
        let c = synthesize(&SynthSpec { seed: 1, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn select_columns_reorders() {
        let d = tiny().select_columns(&[1, 0]).unwrap();
        assert_eq!(d.feature_names(), ["b", "a"]);
        assert_eq!(d.features()[[2, 1]], 3.0);
        assert!(tiny().select_columns(&[2]).is_err());
    }
}
