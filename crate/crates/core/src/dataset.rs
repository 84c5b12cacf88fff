//! Labeled point sets, target encodings, the Sinc3C generator, CSV ingestion,
//! standardization and stratified fold assignment.
//!
//! Class labels are stored zero-based: class index `0` is the first class
//! (`C₁`), `J - 1` the last. Every tie rule that prefers "the lowest class
//! index" therefore depends on the label order fixed at load time.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Points in `R^d` with class labels `0..num_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    dim: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
    class_names: Vec<String>,
}

impl LabeledDataset {
    /// Builds a dataset from row vectors. `class_names.len()` fixes `J`.
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::Dataset(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        if class_names.is_empty() {
            return Err(Error::Dataset("at least one class is required".into()));
        }
        let dim = points.first().map_or(1, Vec::len);
        if dim == 0 {
            return Err(Error::Dataset("points must have dimension >= 1".into()));
        }
        let mut features = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::Dataset(format!(
                    "point {i} has dimension {} (expected {dim})",
                    p.len()
                )));
            }
            features.extend_from_slice(p);
        }
        if let Some((i, &c)) = labels.iter().enumerate().find(|(_, &c)| c >= class_names.len()) {
            return Err(Error::Dataset(format!(
                "label {c} of point {i} outside 0..{}",
                class_names.len()
            )));
        }
        Ok(Self { dim, features, labels, class_names })
    }

    /// Convenience constructor with classes named `1..=num_classes`.
    pub fn with_class_count(points: Vec<Vec<f64>>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        let names = (1..=num_classes).map(|c| c.to_string()).collect();
        Self::new(points, labels, names)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.dim)
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// Number of points in each class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for &c in &self.labels {
            counts[c] += 1;
        }
        counts
    }

    /// Rows `indices` in the given order, keeping the class table.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            features.extend_from_slice(self.point(i));
        }
        Self {
            dim: self.dim,
            features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }

    /// Same points with labels replaced, e.g. for label-randomization canaries.
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Self> {
        let points = self.points().map(<[f64]>::to_vec).collect();
        Self::new(points, labels, self.class_names.clone())
    }

    /// Writes `x1,..,xd,label` rows with a header; labels use the class names.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
            let header: Vec<String> = (1..=self.dim).map(|j| format!("x{j}")).collect();
            writeln!(out, "{},label", header.join(","))?;
            for (p, &c) in self.points().zip(&self.labels) {
                let row: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
                writeln!(out, "{},{}", row.join(","), self.class_names[c])?;
            }
            out.flush()
        };
        write(&mut out).map_err(|e| Error::io(path, e))
    }
}

/// Real-valued regression targets, one row per point and one column per output.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTargets {
    rows: usize,
    // column-major
    values: Vec<f64>,
}

impl RegressionTargets {
    pub fn from_column(values: Vec<f64>) -> Self {
        Self { rows: values.len(), values }
    }

    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Dataset("target columns differ in length".into()));
        }
        Ok(Self { rows, values: columns.concat() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.values.len().checked_div(self.rows).unwrap_or(0)
    }

    pub fn column(&self, l: usize) -> &[f64] {
        &self.values[l * self.rows..(l + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.rows.max(1))
    }

    pub fn get(&self, i: usize, l: usize) -> f64 {
        self.values[l * self.rows + i]
    }
}

/// `sin(πx) / (πx)` with the removable singularity at 0.
///
/// Nonzero integers return exactly 0, so points sitting on a root of the
/// function fall on the closed side of the `[0, 0.2)` band.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else if x.fract() == 0.0 {
        0.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Sinc3C class of a function value: `(-inf, 0)`, `[0, 0.2)`, `[0.2, inf)`.
pub fn sinc3c_class(value: f64) -> usize {
    if value < 0.0 {
        0
    } else if value < 0.2 {
        1
    } else {
        2
    }
}

fn sinc3c_from_grid(xs: impl Iterator<Item = f64>) -> LabeledDataset {
    let (points, labels): (Vec<_>, Vec<_>) = xs.map(|x| (vec![x], sinc3c_class(sinc(x)))).unzip();
    LabeledDataset::with_class_count(points, labels, 3).expect("grid dataset is well formed")
}

/// The 59-point Sinc3C training set: `-5, -4.83, ..., 4.86`.
pub fn sinc3c_train() -> LabeledDataset {
    // integer hundredths keep each grid point the correctly rounded decimal
    let count = (1000 / 17) + 1;
    sinc3c_from_grid((0..count).map(|i| f64::from(-500 + 17 * i) / 100.0))
}

/// The 201-point Sinc3C test set: `-5, -4.95, ..., 5`.
pub fn sinc3c_test() -> LabeledDataset {
    sinc3c_from_grid((0..=200).map(|i| f64::from(i - 100) / 20.0))
}

fn check_two_class(ds: &LabeledDataset) -> Result<()> {
    if ds.num_classes() != 2 {
        return Err(Error::InvalidParameter(format!(
            "binary encoding needs J = 2, dataset has J = {}",
            ds.num_classes()
        )));
    }
    Ok(())
}

/// `-1` for the first class, `+1` for the second.
pub fn encode_binary(ds: &LabeledDataset) -> Result<RegressionTargets> {
    check_two_class(ds)?;
    Ok(RegressionTargets::from_column(
        ds.labels().iter().map(|&c| if c == 0 { -1.0 } else { 1.0 }).collect(),
    ))
}

/// `n × J` indicator matrix.
pub fn encode_onehot(ds: &LabeledDataset) -> RegressionTargets {
    let columns = (0..ds.num_classes())
        .map(|l| ds.labels().iter().map(|&c| if c == l { 1.0 } else { 0.0 }).collect())
        .collect();
    RegressionTargets::from_columns(columns).expect("columns share length")
}

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
    Last,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvOptions {
    pub label: LabelColumn,
    pub has_header: bool,
    /// Explicit class order; otherwise classes are numbered by first appearance.
    pub label_order: Option<Vec<String>>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self { label: LabelColumn::Last, has_header: true, label_order: None }
    }
}

/// Reads a comma-separated file with real-valued features and one label column.
pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(opts.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let parse_err = |row: usize, msg: String| Error::Parse { path: path.to_path_buf(), row, msg };
    let header_rows = usize::from(opts.has_header);

    let header: Option<Vec<String>> = if opts.has_header {
        let h = reader.headers().map_err(|e| parse_err(1, e.to_string()))?;
        Some(h.iter().map(str::to_owned).collect())
    } else {
        None
    };

    let mut points = Vec::new();
    let mut tokens = Vec::new();
    let mut width: Option<usize> = header.as_ref().map(Vec::len);
    let mut label_idx: Option<usize> = None;

    for (r, record) in reader.records().enumerate() {
        let row = r + 1 + header_rows;
        let record = record.map_err(|e| parse_err(row, e.to_string()))?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(parse_err(row, format!("expected {w} columns, found {}", record.len())));
        }
        if w < 2 {
            return Err(parse_err(row, "need at least one feature and a label column".into()));
        }
        let li = match label_idx {
            Some(li) => li,
            None => {
                let li = resolve_label_column(&opts.label, header.as_deref(), w)
                    .map_err(|msg| parse_err(header_rows.max(1), msg))?;
                label_idx = Some(li);
                li
            }
        };
        let mut p = Vec::with_capacity(w - 1);
        for (j, field) in record.iter().enumerate() {
            if j == li {
                continue;
            }
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(row, format!("column {}: cannot parse {field:?} as a number", j + 1)))?;
            if !v.is_finite() {
                return Err(parse_err(row, format!("column {}: non-finite value {field:?}", j + 1)));
            }
            p.push(v);
        }
        points.push(p);
        tokens.push(record[li].to_owned());
    }

    if points.is_empty() {
        return Err(Error::Dataset(format!("{}: no data rows", path.display())));
    }

    let (labels, class_names) = map_labels(&tokens, opts.label_order.as_deref())
        .map_err(|(i, msg)| parse_err(i + 1 + header_rows, msg))?;
    LabeledDataset::new(points, labels, class_names)
}

fn resolve_label_column(spec: &LabelColumn, header: Option<&[String]>, width: usize) -> std::result::Result<usize, String> {
    match spec {
        LabelColumn::Last => Ok(width - 1),
        LabelColumn::Index(i) if *i < width => Ok(*i),
        LabelColumn::Index(i) => Err(format!("label column {i} out of range (width {width})")),
        LabelColumn::Name(name) => header
            .ok_or_else(|| format!("label column {name:?} given by name but the file has no header"))?
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| format!("no column named {name:?}")),
    }
}

type LabelMap = (Vec<usize>, Vec<String>);

fn map_labels(tokens: &[String], order: Option<&[String]>) -> std::result::Result<LabelMap, (usize, String)> {
    let mut names: Vec<String> = order.map(<[String]>::to_vec).unwrap_or_default();
    let mut index: HashMap<String, usize> = names.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    let mut labels = Vec::with_capacity(tokens.len());
    for (i, t) in tokens.iter().enumerate() {
        let c = match index.get(t) {
            Some(&c) => c,
            None if order.is_some() => return Err((i, format!("label {t:?} not in the supplied label order"))),
            None => {
                names.push(t.clone());
                index.insert(t.clone(), names.len() - 1);
                names.len() - 1
            }
        };
        labels.push(c);
    }
    Ok((labels, names))
}

/// Per-feature affine map fitted on a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Population standard deviation, replaced by 1 for constant features.
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(train: &LabeledDataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Dataset("cannot standardize with an empty training set".into()));
        }
        let n = train.len() as f64;
        let d = train.dim();
        let mut mean = vec![0.0; d];
        for p in train.points() {
            for (m, v) in mean.iter_mut().zip(p) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for p in train.points() {
            for ((s, v), m) in var.iter_mut().zip(p).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, scale })
    }

    pub fn transform_point(&self, p: &[f64]) -> Vec<f64> {
        p.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect()
    }

    pub fn inverse_point(&self, p: &[f64]) -> Vec<f64> {
        p.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| v * s + m).collect()
    }

    pub fn transform(&self, ds: &LabeledDataset) -> LabeledDataset {
        let points = ds.points().map(|p| self.transform_point(p)).collect();
        LabeledDataset::new(points, ds.labels().to_vec(), ds.class_names().to_vec())
            .expect("transform keeps shape")
    }
}

/// Standardizes `train` and every set in `others` with the training statistics.
pub fn standardize(train: &LabeledDataset, others: &[LabeledDataset]) -> Result<(LabeledDataset, Vec<LabeledDataset>)> {
    let s = Standardizer::fit(train)?;
    Ok((s.transform(train), others.iter().map(|o| s.transform(o)).collect()))
}

/// Assignment of every point to one of `fold_count` folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub fold_count: usize,
    pub assignment: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    /// `(train, test)` index lists for fold `f`, each in ascending order.
    pub fn split(&self, f: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.assignment.len()).partition(|&i| self.assignment[i] != f)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.fold_count];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Stratified folds: each class is shuffled and dealt round-robin, the deal
/// continuing across classes so fold sizes differ by at most one.
pub fn make_folds(ds: &LabeledDataset, fold_count: usize, seed: u64) -> Result<FoldPlan> {
    if fold_count < 2 || fold_count > ds.len() {
        return Err(Error::InvalidParameter(format!(
            "fold count {fold_count} must lie in [2, {}]",
            ds.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; ds.len()];
    let mut next = 0;
    for class in 0..ds.num_classes() {
        let mut members: Vec<usize> = (0..ds.len()).filter(|&i| ds.label(i) == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = next;
            next = (next + 1) % fold_count;
        }
    }
    Ok(FoldPlan { fold_count, assignment, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinc_values() {
        assert_eq!(sinc(0.0), 1.0);
        assert_eq!(sinc(1.0), 0.0);
        assert_eq!(sinc(-5.0), 0.0);
        let x: f64 = 0.5;
        assert!((sinc(x) - 2.0 / std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn sinc3c_train_grid() {
        let ds = sinc3c_train();
        assert_eq!(ds.len(), 59);
        assert_eq!(ds.dim(), 1);
        assert_eq!(ds.num_classes(), 3);
        assert_eq!(ds.point(0), &[-5.0]);
        assert_eq!(ds.label(0), 1);
        let x = ds.point(1)[0];
        assert_eq!(x, -4.83);
        let direct = (std::f64::consts::PI * x).sin() / (std::f64::consts::PI * x);
        let expected = if direct < 0.0 { 0 } else if direct < 0.2 { 1 } else { 2 };
        assert_eq!(ds.label(1), expected);
        assert!(ds.point(58)[0] <= 5.0 && ds.point(58)[0] + 0.17 > 5.0);
        assert_eq!(sinc3c_train(), ds);
    }

    #[test]
    fn sinc3c_test_grid() {
        let ds = sinc3c_test();
        assert_eq!(ds.len(), 201);
        assert_eq!(ds.point(100), &[0.0]);
        assert_eq!(ds.label(100), 2);
        assert_eq!(ds.point(200), &[5.0]);
        assert_eq!(ds.label(200), 1);
    }

    #[test]
    fn interval_boundaries() {
        assert_eq!(sinc3c_class(-1e-300), 0);
        assert_eq!(sinc3c_class(0.0), 1);
        assert_eq!(sinc3c_class(0.2), 2);
    }

    fn tiny(labels: Vec<usize>, j: usize) -> LabeledDataset {
        let pts = (0..labels.len()).map(|i| vec![i as f64]).collect();
        LabeledDataset::with_class_count(pts, labels, j).unwrap()
    }

    #[test]
    fn binary_encoding() {
        let t = encode_binary(&tiny(vec![0, 1, 0], 2)).unwrap();
        assert_eq!(t.column(0), &[-1.0, 1.0, -1.0]);
        let t = encode_binary(&tiny(vec![0, 0], 2)).unwrap();
        assert_eq!(t.column(0), &[-1.0, -1.0]);
        assert!(encode_binary(&tiny(vec![0, 1, 2], 3)).is_err());
    }

    #[test]
    fn onehot_encoding() {
        let t = encode_onehot(&tiny(vec![1], 3));
        assert_eq!((t.rows(), t.cols()), (1, 3));
        assert_eq!([t.get(0, 0), t.get(0, 1), t.get(0, 2)], [0.0, 1.0, 0.0]);

        let ds = tiny(vec![0, 1, 1, 0, 1], 2);
        let oh = encode_onehot(&ds);
        let bin = encode_binary(&ds).unwrap();
        for i in 0..ds.len() {
            assert_eq!(oh.get(i, 0) + oh.get(i, 1), 1.0);
            assert_eq!(oh.get(i, 1) - oh.get(i, 0), bin.get(i, 0));
        }
    }

    #[test]
    fn standardize_conventions() {
        let train = LabeledDataset::with_class_count(vec![vec![0.0, 3.0], vec![2.0, 3.0]], vec![0, 0], 1).unwrap();
        let (t, _) = standardize(&train, &[]).unwrap();
        assert_eq!(t.point(0), &[-1.0, 0.0]);
        assert_eq!(t.point(1), &[1.0, 0.0]);
    }

    #[test]
    fn standardize_uses_train_statistics_only() {
        let train = tiny(vec![0, 0, 0, 0], 1);
        let other = LabeledDataset::with_class_count(vec![vec![100.0]], vec![0], 1).unwrap();
        let s = Standardizer::fit(&train).unwrap();
        let (_, o) = standardize(&train, &[other]).unwrap();
        assert_eq!(o[0].point(0)[0], (100.0 - s.mean[0]) / s.scale[0]);
        assert!(standardize(&LabeledDataset::with_class_count(vec![], vec![], 1).unwrap(), &[]).is_err());
    }

    #[test]
    fn folds_one_point_each() {
        let ds = tiny(vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1], 2);
        let plan = make_folds(&ds, 10, 3).unwrap();
        assert!(plan.fold_sizes().iter().all(|&s| s == 1));
        assert_eq!(plan, make_folds(&ds, 10, 3).unwrap());
        assert!(make_folds(&ds, 1, 0).is_err());
        assert!(make_folds(&ds, 11, 0).is_err());
    }

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn csv_first_appearance_order_and_errors() {
        let f = write_tmp("a,b,y\n1,2,yes\n3,4,no\n5,6,yes\n");
        let opts = CsvOptions { label: LabelColumn::Name("y".into()), ..Default::default() };
        let ds = load_csv(f.path(), &opts).unwrap();
        assert_eq!(ds.class_names(), &["yes".to_string(), "no".to_string()]);
        assert_eq!(ds.labels(), &[0, 1, 0]);
        assert_eq!(ds.point(1), &[3.0, 4.0]);

        let opts = CsvOptions { label_order: Some(vec!["no".into(), "yes".into()]), ..opts };
        assert_eq!(load_csv(f.path(), &opts).unwrap().labels(), &[1, 0, 1]);

        let empty = write_tmp("");
        assert!(load_csv(empty.path(), &CsvOptions::default()).is_err());

        let ragged = write_tmp("a,b,y\n1,2,yes\n3,no\n");
        match load_csv(ragged.path(), &CsvOptions::default()) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        let bad = write_tmp("1,x,yes\n");
        let opts = CsvOptions { has_header: false, ..Default::default() };
        match load_csv(bad.path(), &opts) {
            Err(Error::Parse { row, msg, .. }) => {
                assert_eq!(row, 1);
                assert!(msg.contains("column 2"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn csv_round_trip_through_writer() {
        let ds = sinc3c_train();
        let f = tempfile::NamedTempFile::new().unwrap();
        ds.write_csv(f.path()).unwrap();
        let opts = CsvOptions { label_order: Some(ds.class_names().to_vec()), ..Default::default() };
        assert_eq!(load_csv(f.path(), &opts).unwrap(), ds);
    }
}
