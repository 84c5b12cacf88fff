//! Configuration-driven experiments: the Sinc3C table and curves,
//! cross-validation tables on CSV data, ad-hoc prediction, and single
//! evidence / LOOCV curves.
//!
//! Every command writes `manifest.toml` into its output directory. The
//! manifest is itself a valid config (paths made absolute), so
//! `--config <out>/manifest.toml` reruns the same experiment.

use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use crate::classic::ClassicRule;
use crate::classify::{fit, predict, select_evidence, ClassifierSpec, FittedClassifier, Method, PredictionRecord};
use crate::dataset::{load_csv, make_folds, sinc3c_test, sinc3c_train, CsvOptions, LabelColumn, LabeledDataset, Standardizer};
use crate::error::{Error, Result};
use crate::eval::{error_rate, format_rate, loocv_curve, run_cv, write_cv_csv, CVResult, CvSettings, LoocvCurve};
use crate::gp::{ContinuousMode, EvidencePoint, Formulation, OptimizerSettings};
use crate::neighbors::NeighborIndex;

/// Where the data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// `sinc3c` or `csv`.
    #[serde(default = "default_source")]
    pub source: String,
    /// CSV path, relative to the config file.
    pub path: Option<PathBuf>,
    /// Label column name; the last column when absent.
    pub label: Option<String>,
    /// Zero-based label column index (alternative to `label`).
    pub label_index: Option<usize>,
    #[serde(default = "yes")]
    pub has_header: bool,
    /// Explicit class order; otherwise first appearance.
    pub classes: Option<Vec<String>>,
    /// Standardize features with training-set statistics; on by default for
    /// CSV data, off for Sinc3C.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardize: Option<bool>,
}

fn default_source() -> String {
    "sinc3c".into()
}

fn yes() -> bool {
    true
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            source: default_source(),
            path: None,
            label: None,
            label_index: None,
            has_header: true,
            classes: None,
            standardize: None,
        }
    }
}

impl DataConfig {
    /// The effective standardization flag.
    pub fn standardize(&self) -> bool {
        self.standardize.unwrap_or(self.source == "csv")
    }
}

/// Global run settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_folds")]
    pub folds: usize,
    /// Default upper end of every `k` grid.
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_seed() -> u64 {
    0
}

fn default_folds() -> usize {
    10
}

fn default_k_max() -> usize {
    100
}

fn default_iterations() -> usize {
    200
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            out_dir: default_out(),
            seed: default_seed(),
            folds: default_folds(),
            k_max: default_k_max(),
            max_iterations: default_iterations(),
        }
    }
}

/// One `[[method]]` block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub method: String,
    pub formulation: Option<String>,
    pub k: Option<usize>,
    pub k_max: Option<usize>,
    pub sigma0: Option<f64>,
    /// Noise standard deviation; `σ² = sigma²`. Mutually exclusive with `sigma2`.
    pub sigma: Option<f64>,
    pub sigma2: Option<f64>,
    /// `optimize` (default) or `fixed`.
    pub mode: Option<String>,
}

impl MethodConfig {
    pub fn new(method: &str) -> Self {
        Self {
            method: method.into(),
            formulation: None,
            k: None,
            k_max: None,
            sigma0: None,
            sigma: None,
            sigma2: None,
            mode: None,
        }
    }

    fn bayes(method: &str, formulation: &str, sigma0: f64, sigma: f64) -> Self {
        Self { formulation: Some(formulation.into()), sigma0: Some(sigma0), sigma: Some(sigma), ..Self::new(method) }
    }

    /// Resolves names and defaults into a spec.
    pub fn to_spec(&self, default_k_max: usize) -> Result<ClassifierSpec> {
        let method: Method = self.method.parse()?;
        let formulation = self.formulation.as_deref().map(str::parse::<Formulation>).transpose()?;
        let sigma2 = match (self.sigma, self.sigma2) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(format!("{}: give either sigma or sigma2, not both", self.method)))
            }
            (Some(s), None) => s * s,
            (None, Some(s2)) => s2,
            (None, None) => 1.0,
        };
        let mode = match self.mode.as_deref().map(str::to_ascii_lowercase).as_deref() {
            None | Some("optimize") => ContinuousMode::Optimize,
            Some("fixed") => ContinuousMode::Fixed,
            Some(m) => return Err(Error::Config(format!("unknown mode {m:?} (optimize, fixed)"))),
        };
        Ok(ClassifierSpec {
            method,
            formulation,
            k: self.k,
            k_max: self.k_max.unwrap_or(default_k_max),
            sigma0: self.sigma0.unwrap_or(1.0),
            sigma2,
            mode,
        })
    }
}

/// Provenance written with every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestInfo {
    pub command: String,
    pub version: String,
    pub seed: u64,
}

/// A whole experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default, rename = "method")]
    pub methods: Vec<MethodConfig>,
    /// Present only in written manifests; ignored on input.
    #[serde(default, skip_serializing)]
    pub manifest: Option<ManifestInfo>,
}

/// Command-line overrides applied on top of a config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub k_max: Option<usize>,
    pub standardize: Option<bool>,
    /// `(σ₀, σ²)` held fixed for every evidence-based method.
    pub fixed_hyper: Option<(f64, f64)>,
    /// Keep only methods of this family.
    pub method: Option<Method>,
    /// Keep only methods with this formulation (classic rules are kept).
    pub formulation: Option<Formulation>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(p) = &cfg.data.path {
            if p.is_relative() {
                cfg.data.path = Some(base_dir.join(p));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// The 11 Sinc3C rows with initial `(σ₀, σ) = (300, 3)`.
    pub fn sinc3c_default() -> Self {
        let mut methods = vec![MethodConfig::new("knn"), MethodConfig::new("mknn"), MethodConfig::new("sknn")];
        for f in ["mul1", "mul2"] {
            for m in ["bmknn", "bsknn", "mknn_bk", "sknn_bk"] {
                methods.push(MethodConfig::bayes(m, f, 300.0, 3.0));
            }
        }
        // table order: B-I rows, then B-II rows
        Self {
            data: DataConfig::default(),
            run: RunConfig { out_dir: PathBuf::from("out/sinc3c"), ..RunConfig::default() },
            methods,
            manifest: None,
        }
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(d) = &o.out_dir {
            self.run.out_dir = d.clone();
        }
        if let Some(s) = o.seed {
            self.run.seed = s;
        }
        if let Some(k) = o.k_max {
            self.run.k_max = k;
            for m in &mut self.methods {
                m.k_max = Some(m.k_max.map_or(k, |mk| mk.min(k)));
            }
        }
        if let Some(s) = o.standardize {
            self.data.standardize = Some(s);
        }
        if o.method.is_some() || o.formulation.is_some() {
            let mut kept = Vec::new();
            for m in self.methods.drain(..) {
                let method: Method = m.method.parse()?;
                let formulation = m.formulation.as_deref().map(str::parse::<Formulation>).transpose()?;
                let method_ok = o.method.is_none_or(|x| x == method);
                let form_ok = o.formulation.is_none_or(|f| !method.uses_evidence() || formulation == Some(f));
                if method_ok && form_ok {
                    kept.push(m);
                }
            }
            if kept.is_empty() {
                return Err(Error::Config("no configured method matches --method/--formulation".into()));
            }
            self.methods = kept;
        }
        if let Some((s0, s2)) = o.fixed_hyper {
            for m in &mut self.methods {
                m.sigma0 = Some(s0);
                m.sigma = None;
                m.sigma2 = Some(s2);
                m.mode = Some("fixed".into());
            }
        }
        Ok(())
    }

    pub fn specs(&self) -> Result<Vec<ClassifierSpec>> {
        if self.methods.is_empty() {
            return Err(Error::Config("no [[method]] blocks".into()));
        }
        self.methods.iter().map(|m| m.to_spec(self.run.k_max)).collect()
    }

    pub fn optimizer(&self) -> OptimizerSettings {
        OptimizerSettings { max_iterations: self.run.max_iterations, ..OptimizerSettings::default() }
    }

    fn csv_options(&self) -> CsvOptions {
        let label = match (&self.data.label, self.data.label_index) {
            (Some(name), _) => LabelColumn::Name(name.clone()),
            (None, Some(i)) => LabelColumn::Index(i),
            (None, None) => LabelColumn::Last,
        };
        CsvOptions { label, has_header: self.data.has_header, label_order: self.data.classes.clone() }
    }

    /// Loads the configured CSV dataset.
    pub fn load_dataset(&self) -> Result<LabeledDataset> {
        match self.data.source.as_str() {
            "sinc3c" => Ok(sinc3c_train()),
            "csv" => {
                let path = self.data.path.as_ref().ok_or_else(|| Error::Config("data.path is required for csv".into()))?;
                load_csv(path, &self.csv_options())
            }
            s => Err(Error::Config(format!("unknown data source {s:?} (sinc3c, csv)"))),
        }
    }

    fn absolutized(&self) -> Self {
        let mut c = self.clone();
        if let Some(p) = &c.data.path {
            c.data.path = Some(std::path::absolute(p).unwrap_or_else(|_| p.clone()));
        }
        c.run.out_dir = std::path::absolute(&c.run.out_dir).unwrap_or_else(|_| c.run.out_dir.clone());
        c.data.standardize = Some(self.data.standardize());
        c
    }

    /// Serializes the resolved config with a `[manifest]` table.
    pub fn manifest_toml(&self, command: &str) -> Result<String> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            manifest: ManifestInfo,
            #[serde(flatten)]
            config: &'a ExperimentConfig,
        }
        let config = self.absolutized();
        let m = Manifest {
            manifest: ManifestInfo {
                command: command.into(),
                version: env!("CARGO_PKG_VERSION").into(),
                seed: self.run.seed,
            },
            config: &config,
        };
        toml::to_string(&m).map_err(|e| Error::Config(e.to_string()))
    }
}

fn prepare_out_dir(cfg: &ExperimentConfig, command: &str) -> Result<PathBuf> {
    let dir = cfg.run.out_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let manifest = dir.join("manifest.toml");
    fs::write(&manifest, cfg.manifest_toml(command)?).map_err(|e| Error::io(&manifest, e))?;
    Ok(dir)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Dataset(format!("{}: {e}", path.display()))
}

/// One row of the Sinc3C table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub label: String,
    pub error: f64,
    pub errors: usize,
    pub k: usize,
    pub sigma0: f64,
    pub sigma2: f64,
}

/// Everything the Sinc3C command computes.
#[derive(Debug, Clone)]
pub struct Sinc3cReport {
    pub rows: Vec<TableRow>,
    /// `(rule, [(k, error)])` on the training set.
    pub loocv: Vec<(ClassicRule, LoocvCurve)>,
    /// `(row label, trace)` for every evidence selection.
    pub evidence: Vec<(String, Vec<EvidencePoint>)>,
}

/// Fits every method on the training set, scores the test set.
pub fn run_train_test(
    cfg: &ExperimentConfig,
    train: &LabeledDataset,
    test: &LabeledDataset,
) -> Result<(Vec<TableRow>, Vec<FittedClassifier>)> {
    let specs = cfg.specs()?;
    let (train, test) = if cfg.data.standardize() {
        let s = Standardizer::fit(train)?;
        (s.transform(train), s.transform(test))
    } else {
        (train.clone(), test.clone())
    };
    let index = NeighborIndex::new(&train);
    let settings = cfg.optimizer();
    let queries: Vec<Vec<f64>> = test.points().map(<[f64]>::to_vec).collect();
    let mut cache = std::collections::HashMap::new();
    let mut rows = Vec::new();
    let mut fitted = Vec::new();
    for spec in &specs {
        spec.validate(train.num_classes())?;
        let selection = match spec.selection_key() {
            Some(key) => {
                if !cache.contains_key(&key) {
                    cache.insert(key.clone(), select_evidence(&index, spec, &settings)?);
                }
                cache.get(&key).cloned()
            }
            None => None,
        };
        let model = fit(&index, spec, &settings, selection)?;
        let predicted: Vec<usize> = predict(&model, &index, &queries)?.into_iter().map(|r| r.class).collect();
        let error = error_rate(&predicted, test.labels())?;
        let errors = predicted.iter().zip(test.labels()).filter(|(p, a)| p != a).count();
        info!("{}: k = {}, error = {}", spec.label(), model.hyper.k, format_rate(error));
        rows.push(TableRow {
            label: spec.label(),
            error,
            errors,
            k: model.hyper.k,
            sigma0: model.hyper.sigma0,
            sigma2: model.hyper.sigma2,
        });
        fitted.push(model);
    }
    Ok((rows, fitted))
}

/// Aligned text version of a train/test table.
pub fn table_text(rows: &[TableRow]) -> String {
    let width = rows.iter().map(|r| r.label.len()).max().unwrap_or(7).max(7);
    let mut out = format!("{:<width$}  {:>10}  {:>4}\n", "Methods", "error", "k");
    for r in rows {
        out.push_str(&format!("{:<width$}  {:>10}  {:>4}\n", r.label, format_rate(r.error), r.k));
    }
    out
}

fn write_loocv(path: &Path, curve: &[(usize, f64)]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["k", "loo_error"]).map_err(csv_err(path))?;
    for (k, e) in curve {
        w.write_record([k.to_string(), format_rate(*e)]).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes an evidence trace as `k,sigma0,sigma2,log_evidence,iterations`.
pub fn write_evidence(path: &Path, trace: &[EvidencePoint]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["k", "sigma0", "sigma2", "log_evidence", "iterations"]).map_err(csv_err(path))?;
    for p in trace {
        w.write_record([
            p.k.to_string(),
            p.sigma0.to_string(),
            p.sigma2.to_string(),
            p.log_evidence.to_string(),
            p.iterations.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .filter_map(|c| match c {
            'a'..='z' | 'A'..='Z' | '0'..='9' => Some(c.to_ascii_lowercase()),
            '-' | ' ' => Some('_'),
            _ => None,
        })
        .collect::<String>()
        .split('_')
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join("_")
}

/// The Sinc3C experiment: table, LOOCV curves, evidence curves and the
/// train/test data.
pub fn cmd_sinc3c(cfg: &ExperimentConfig) -> Result<Sinc3cReport> {
    let (train, test) = (sinc3c_train(), sinc3c_test());
    let dir = prepare_out_dir(cfg, "sinc3c")?;
    let (rows, fitted) = run_train_test(cfg, &train, &test)?;

    let path = dir.join("table.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["method", "error", "errors", "k", "sigma0", "sigma2"]).map_err(csv_err(&path))?;
    for r in &rows {
        w.write_record([
            r.label.clone(),
            format_rate(r.error),
            r.errors.to_string(),
            r.k.to_string(),
            r.sigma0.to_string(),
            r.sigma2.to_string(),
        ])
        .map_err(csv_err(&path))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    write_text(&dir.join("table.txt"), &table_text(&rows))?;

    let index = NeighborIndex::new(&train);
    let grid: Vec<usize> = (1..=cfg.run.k_max.min(train.len() - 2)).collect();
    let mut loocv = Vec::new();
    for rule in [ClassicRule::Knn, ClassicRule::Mknn, ClassicRule::Sknn] {
        let curve = loocv_curve(&index, rule, &grid)?;
        write_loocv(&dir.join(format!("loocv_{}.csv", file_stem(rule.name()))), &curve)?;
        loocv.push((rule, curve));
    }

    let mut evidence = Vec::new();
    for m in fitted.iter().filter(|m| m.spec.method.is_bayes()) {
        if let Some(sel) = &m.selection {
            let label = m.spec.label();
            write_evidence(&dir.join(format!("evidence_{}.csv", file_stem(&label))), &sel.trace)?;
            evidence.push((label, sel.trace.clone()));
        }
    }

    train.write_csv(dir.join("sinc3c_train.csv"))?;
    test.write_csv(dir.join("sinc3c_test.csv"))?;
    Ok(Sinc3cReport { rows, loocv, evidence })
}

/// Cross-validation over every configured method.
pub fn cmd_cv(cfg: &ExperimentConfig) -> Result<Vec<CVResult>> {
    let ds = cfg.load_dataset()?;
    let specs = cfg.specs()?;
    let folds = make_folds(&ds, cfg.run.folds, cfg.run.seed)?;
    let dir = prepare_out_dir(cfg, "cv")?;
    let settings = CvSettings { standardize: cfg.data.standardize(), optimizer: cfg.optimizer() };
    let results = run_cv(&ds, &folds, &specs, &settings)?;
    write_cv_csv(&dir, &results)?;
    Ok(results)
}

/// Reads a feature-only CSV (a column named like the training label column
/// is dropped when present).
pub fn load_queries(path: &Path, dim: usize, has_header: bool) -> Result<Vec<Vec<f64>>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().has_headers(has_header).trim(csv::Trim::All).from_reader(file);
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let row = i + 1 + usize::from(has_header);
        let rec = rec.map_err(|e| Error::Parse { path: path.to_path_buf(), row, msg: e.to_string() })?;
        if rec.len() != dim && rec.len() != dim + 1 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row,
                msg: format!("expected {dim} features, found {} columns", rec.len()),
            });
        }
        let q = rec
            .iter()
            .take(dim)
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Parse { path: path.to_path_buf(), row, msg: e.to_string() })?;
        out.push(q);
    }
    if out.is_empty() {
        return Err(Error::Dataset(format!("{}: no query rows", path.display())));
    }
    Ok(out)
}

/// Fits the first configured method on the training data and classifies
/// the query file. With `exclude_self`, a query identical to a training
/// point is classified with that point held out.
pub fn cmd_predict(
    cfg: &ExperimentConfig,
    train_path: Option<&Path>,
    query_path: &Path,
    exclude_self: bool,
) -> Result<Vec<PredictionRecord>> {
    let mut cfg = cfg.clone();
    if let Some(p) = train_path {
        cfg.data.source = "csv".into();
        cfg.data.path = Some(p.to_path_buf());
    }
    let train = cfg.load_dataset()?;
    let spec = cfg.specs()?.into_iter().next().expect("specs() rejects empty lists");
    let queries = load_queries(query_path, train.dim(), cfg.data.has_header)?;
    let dir = prepare_out_dir(&cfg, "predict")?;
    let (train_t, queries_t) = if cfg.data.standardize() {
        let s = Standardizer::fit(&train)?;
        (s.transform(&train), queries.iter().map(|q| s.transform_point(q)).collect())
    } else {
        (train.clone(), queries.clone())
    };
    let index = NeighborIndex::new(&train_t);
    let model = fit(&index, &spec, &cfg.optimizer(), None)?;
    let records: Vec<PredictionRecord> = if exclude_self {
        queries_t
            .iter()
            .map(|q| {
                let own = train_t.points().position(|p| p == q.as_slice());
                crate::classify::predict_profile(&model, &index, &index.profile(q, own))
            })
            .collect::<Result<_>>()?
    } else {
        predict(&model, &index, &queries_t)?
    };

    let path = dir.join("predictions.csv");
    let mut w = csv_writer(&path)?;
    let j = train.num_classes();
    let mut header = vec!["row".to_string(), "class".into(), "class_index".into(), "k".into()];
    header.extend((0..j).map(|c| format!("mean_{}", train.class_names()[c])));
    header.extend(["variance", "weight_mass", "tie", "fallback"].map(String::from));
    w.write_record(&header).map_err(csv_err(&path))?;
    for (i, r) in records.iter().enumerate() {
        let mut row = vec![
            (i + 1).to_string(),
            train.class_names()[r.class].clone(),
            r.class.to_string(),
            model.hyper.k.to_string(),
        ];
        // the binary formulation has one ±1 mean; show it under the second class
        for c in 0..j {
            row.push(match (r.means.len(), c) {
                (0, _) => String::new(),
                (1, 0) => String::new(),
                (1, _) => r.means[0].to_string(),
                _ => r.means[c].to_string(),
            });
        }
        row.push(r.variance.map(|v| v.to_string()).unwrap_or_default());
        row.push(r.weight_mass.to_string());
        row.push(r.tie.to_string());
        row.push(r.fallback.to_string());
        w.write_record(&row).map_err(csv_err(&path))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(records)
}

/// Evidence-vs-`k` trace for every evidence-based method in the config.
pub fn evidence_curve(cfg: &ExperimentConfig) -> Result<Vec<(String, Vec<EvidencePoint>)>> {
    let ds = cfg.load_dataset()?;
    let ds = if cfg.data.standardize() { Standardizer::fit(&ds)?.transform(&ds) } else { ds };
    let index = NeighborIndex::new(&ds);
    let dir = prepare_out_dir(cfg, "evidence-curve")?;
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for spec in cfg.specs()?.into_iter().filter(|s| s.method.is_bayes()) {
        let key = spec.selection_key().expect("bayes spec");
        if !seen.insert(key) {
            continue;
        }
        spec.validate(ds.num_classes())?;
        let sel = select_evidence(&index, &spec, &cfg.optimizer())?;
        let label = spec.label();
        write_evidence(&dir.join(format!("evidence_{}.csv", file_stem(&label))), &sel.trace)?;
        out.push((label, sel.trace));
    }
    if out.is_empty() {
        return Err(Error::Config("no Bayesian method (bmknn, bsknn) configured".into()));
    }
    Ok(out)
}

/// LOOCV-error-vs-`k` curve for every classic rule in the config.
pub fn loocv_curves(cfg: &ExperimentConfig) -> Result<Vec<(ClassicRule, LoocvCurve)>> {
    let ds = cfg.load_dataset()?;
    let ds = if cfg.data.standardize() { Standardizer::fit(&ds)?.transform(&ds) } else { ds };
    let index = NeighborIndex::new(&ds);
    let dir = prepare_out_dir(cfg, "loocv-curve")?;
    let grid: Vec<usize> = (1..=cfg.run.k_max.min(ds.len().saturating_sub(2))).collect();
    let mut rules: Vec<ClassicRule> = Vec::new();
    for spec in cfg.specs()? {
        if let Some(rule) = spec.method.classic_rule().filter(|_| !spec.method.uses_evidence()) {
            if !rules.contains(&rule) {
                rules.push(rule);
            }
        }
    }
    if rules.is_empty() {
        return Err(Error::Config("no classic method (knn, mknn, sknn) configured".into()));
    }
    let mut out = Vec::new();
    for rule in rules {
        let curve = loocv_curve(&index, rule, &grid)?;
        write_loocv(&dir.join(format!("loocv_{}.csv", file_stem(rule.name()))), &curve)?;
        out.push((rule, curve));
    }
    Ok(out)
}
