//! Dataset parsing, feature scaling, task detection and cross-validation.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qp::Task;
use crate::synth::rng;

/// Raw features and targets as read from disk.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub task_hint: Option<Task>,
}

impl Dataset {
    pub fn new(features: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        let ds = Dataset {
            features,
            targets,
            task_hint: None,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.targets.is_empty() {
            return Err(Error::Data("dataset has no rows".into()));
        }
        if self.features.len() != self.targets.len() {
            return Err(Error::Dimension(format!(
                "{} feature rows but {} targets",
                self.features.len(),
                self.targets.len()
            )));
        }
        let n = self.n_features();
        for (i, row) in self.features.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension(format!("row {i} has {} features, expected {n}", row.len())));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("row {i} has a non-finite feature")));
            }
        }
        if let Some(i) = self.targets.iter().position(|t| !t.is_finite()) {
            return Err(Error::Data(format!("row {i} has a non-finite target")));
        }
        Ok(())
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            targets: idx.iter().map(|&i| self.targets[i]).collect(),
            task_hint: self.task_hint,
        }
    }
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_number(tok: &str, path: &Path, line: usize, what: &str) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_error(path, line, format!("{what} `{tok}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_error(path, line, format!("{what} `{tok}` is not finite")));
    }
    Ok(v)
}

/// Reads the sparse `label idx:value …` format.
pub fn parse_sparse_svm(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    parse_sparse_svm_str(&read_text(path)?, path)
}

/// Parses sparse-format text; `source` names the input in error messages.
///
/// Indices are 1-based and strictly increasing within a line. Text after
/// `#` is ignored and blank lines are skipped. Missing entries are zero and
/// the feature count is the largest index seen.
pub fn parse_sparse_svm_str(text: &str, source: impl AsRef<Path>) -> Result<Dataset> {
    let path = source.as_ref();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut targets = Vec::new();
    let mut width = 0;
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label = tokens.next().expect("non-empty line has a token");
        let target = parse_number(label, path, line_no, "label")?;
        let mut entries = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_error(path, line_no, format!("expected `index:value`, found `{tok}`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_error(path, line_no, format!("index `{idx}` is not a positive integer")))?;
            if idx == 0 {
                return Err(parse_error(path, line_no, "indices are 1-based"));
            }
            if idx <= last {
                return Err(parse_error(
                    path,
                    line_no,
                    format!("index {idx} does not increase after {last}"),
                ));
            }
            last = idx;
            entries.push((idx - 1, parse_number(val, path, line_no, "value")?));
        }
        width = width.max(last);
        rows.push(entries);
        targets.push(target);
    }
    if targets.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    let features = rows
        .into_iter()
        .map(|entries| {
            let mut row = vec![0.0; width];
            for (i, v) in entries {
                row[i] = v;
            }
            row
        })
        .collect();
    let ds = Dataset::new(features, targets)?;
    Ok(ds)
}

/// Writes rows in the sparse format, omitting zero entries.
pub fn format_sparse_svm(data: &Dataset) -> String {
    let mut out = String::new();
    for (row, y) in data.features.iter().zip(&data.targets) {
        let _ = write!(out, "{y}");
        for (i, v) in row.iter().enumerate() {
            if *v != 0.0 {
                let _ = write!(out, " {}:{}", i + 1, v);
            }
        }
        out.push('\n');
    }
    out
}

/// Which CSV column holds the target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LabelColumn {
    First,
    #[default]
    Last,
    /// 0-based column index.
    Index(usize),
}

impl std::str::FromStr for LabelColumn {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "first" => Ok(LabelColumn::First),
            "last" => Ok(LabelColumn::Last),
            other => other
                .parse()
                .map(LabelColumn::Index)
                .map_err(|_| format!("label column must be `first`, `last` or an index, got `{other}`")),
        }
    }
}

/// Reads a comma-separated file of numeric columns.
pub fn parse_csv(path: impl AsRef<Path>, label_column: LabelColumn) -> Result<Dataset> {
    let path = path.as_ref();
    parse_csv_str(&read_text(path)?, path, label_column)
}

/// Parses CSV text. A first row containing any non-numeric field is taken
/// to be a header.
pub fn parse_csv_str(text: &str, source: impl AsRef<Path>, label_column: LabelColumn) -> Result<Dataset> {
    let path = source.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut features = Vec::new();
    let mut targets = Vec::new();
    let mut width: Option<usize> = None;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(i + 1, |p| p.line() as usize);
            parse_error(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(i + 1, |p| p.line() as usize);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        if i == 0 && rec.iter().any(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        let n_cols = rec.len();
        if n_cols < 2 {
            return Err(parse_error(path, line, "need at least one feature and one target column"));
        }
        match width {
            None => width = Some(n_cols),
            Some(w) if w != n_cols => {
                return Err(parse_error(path, line, format!("expected {w} columns, found {n_cols}")));
            }
            _ => {}
        }
        let label_at = match label_column {
            LabelColumn::First => 0,
            LabelColumn::Last => n_cols - 1,
            LabelColumn::Index(k) if k < n_cols => k,
            LabelColumn::Index(k) => {
                return Err(parse_error(path, line, format!("label column {k} out of range for {n_cols} columns")));
            }
        };
        let mut row = Vec::with_capacity(n_cols - 1);
        for (c, field) in rec.iter().enumerate() {
            let v = parse_number(field, path, line, "field")?;
            if c == label_at {
                targets.push(v);
            } else {
                row.push(v);
            }
        }
        features.push(row);
    }
    if targets.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    Dataset::new(features, targets)
}

/// Per-feature `(min, max)` from training data.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalerState {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ScalerState {
    /// Leaves data already in the unit cube unchanged.
    pub fn identity(n_features: usize) -> Self {
        ScalerState {
            min: vec![0.0; n_features],
            max: vec![1.0; n_features],
        }
    }

    pub fn n_features(&self) -> usize {
        self.min.len()
    }

    /// `(x − min)/(max − min)`; constant features map to `0.5`.
    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&v, (&lo, &hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.5 })
            .collect()
    }

    /// Inverse of [`transform_row`](Self::transform_row) on non-constant features.
    pub fn inverse_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&v, (&lo, &hi))| if hi > lo { lo + v * (hi - lo) } else { lo })
            .collect()
    }
}

pub fn scale_fit(features: &[Vec<f64>]) -> Result<ScalerState> {
    let first = features
        .first()
        .ok_or_else(|| Error::Data("cannot fit a scaler on no rows".into()))?;
    let mut min = first.clone();
    let mut max = first.clone();
    for row in features {
        if row.len() != min.len() {
            return Err(Error::Dimension("ragged feature rows".into()));
        }
        for (k, &v) in row.iter().enumerate() {
            min[k] = min[k].min(v);
            max[k] = max[k].max(v);
        }
    }
    Ok(ScalerState { min, max })
}

pub fn scale_apply(state: &ScalerState, features: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    features
        .iter()
        .map(|row| {
            if row.len() != state.n_features() {
                Err(Error::Dimension(format!(
                    "row has {} features, scaler expects {}",
                    row.len(),
                    state.n_features()
                )))
            } else {
                Ok(state.transform_row(row))
            }
        })
        .collect()
}

/// How raw targets map onto the learning task.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TargetEncoding {
    /// `classes[0] ↦ −1`, `classes[1] ↦ +1`.
    Binary { classes: [f64; 2] },
    Real,
}

impl TargetEncoding {
    pub fn task(&self) -> Task {
        match self {
            TargetEncoding::Binary { .. } => Task::Classification,
            TargetEncoding::Real => Task::Regression,
        }
    }

    pub fn encode(&self, y: f64) -> Result<f64> {
        match *self {
            TargetEncoding::Binary { classes } => {
                if y == classes[0] {
                    Ok(-1.0)
                } else if y == classes[1] {
                    Ok(1.0)
                } else {
                    Err(Error::Data(format!("label {y} is neither {} nor {}", classes[0], classes[1])))
                }
            }
            TargetEncoding::Real => Ok(y),
        }
    }

    /// Maps a prediction back to the original label space.
    pub fn decode(&self, v: f64) -> f64 {
        match *self {
            TargetEncoding::Binary { classes } => {
                if v >= 0.0 {
                    classes[1]
                } else {
                    classes[0]
                }
            }
            TargetEncoding::Real => v,
        }
    }
}

fn distinct_sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Exactly two distinct targets means classification.
pub fn detect_task(targets: &[f64]) -> TargetEncoding {
    let d = distinct_sorted(targets);
    if d.len() == 2 {
        TargetEncoding::Binary { classes: [d[0], d[1]] }
    } else {
        TargetEncoding::Real
    }
}

/// Resolves the encoding for a requested task, rejecting impossible requests.
pub fn resolve_task(targets: &[f64], requested: Option<Task>) -> Result<TargetEncoding> {
    let auto = detect_task(targets);
    match requested {
        None => Ok(auto),
        Some(Task::Regression) => Ok(TargetEncoding::Real),
        Some(Task::Classification) => match auto {
            TargetEncoding::Binary { .. } => Ok(auto),
            TargetEncoding::Real => Err(Error::Data(format!(
                "classification needs exactly two distinct labels, found {}",
                distinct_sorted(targets).len()
            ))),
        },
    }
}

pub fn encode_targets(encoding: &TargetEncoding, targets: &[f64]) -> Result<Vec<f64>> {
    targets.iter().map(|&y| encoding.encode(y)).collect()
}

/// Fraction of matching labels.
pub fn accuracy(predicted: &[f64], truth: &[f64]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    predicted.iter().zip(truth).filter(|(p, t)| p == t).count() as f64 / truth.len() as f64
}

pub fn mean_squared_error(predicted: &[f64], truth: &[f64]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    predicted.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / truth.len() as f64
}

/// Fold index of every sample.
///
/// For classification each class is shuffled separately and the class lists
/// are concatenated before dealing folds round-robin, so every fold gets a
/// near-equal share of each class. Fold sizes differ by at most one.
pub fn fold_assignment(targets: &[f64], task: Task, folds: usize, seed: u64) -> Result<Vec<usize>> {
    let m = targets.len();
    if folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {folds}")));
    }
    if folds > m {
        return Err(Error::Config(format!("{folds} folds for {m} samples")));
    }
    let mut r = rng(seed);
    let order: Vec<usize> = match task {
        Task::Classification => {
            let mut out = Vec::with_capacity(m);
            for class in distinct_sorted(targets) {
                let mut idx: Vec<usize> = (0..m).filter(|&i| targets[i] == class).collect();
                idx.shuffle(&mut r);
                out.extend(idx);
            }
            out
        }
        Task::Regression => {
            let mut idx: Vec<usize> = (0..m).collect();
            idx.shuffle(&mut r);
            idx
        }
    };
    let mut fold = vec![0; m];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % folds;
    }
    Ok(fold)
}

/// One `(C, δ)` grid point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub c: f64,
    pub padding: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvScore {
    pub candidate: Candidate,
    /// Mean validation accuracy (classification) or MSE (regression).
    pub score: f64,
    pub fold_scores: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvResult {
    pub best: Candidate,
    pub table: Vec<CvScore>,
}

/// Parses `C=1,10;delta=0.1,0.5` into a grid. Missing keys fall back to the
/// given defaults.
pub fn parse_grid(text: &str, default_c: f64, default_padding: f64) -> Result<Vec<Candidate>> {
    let mut cs = vec![default_c];
    let mut ds = vec![default_padding];
    for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, vals) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("grid entry `{part}` needs `key=v1,v2`")))?;
        let values: Vec<f64> = vals
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("grid value `{v}` is not a number")))
            })
            .collect::<Result<_>>()?;
        if values.is_empty() {
            return Err(Error::Config(format!("grid entry `{part}` has no values")));
        }
        match key.trim() {
            "C" | "c" => cs = values,
            "delta" => ds = values,
            other => return Err(Error::Config(format!("unknown grid key `{other}`"))),
        }
    }
    if cs.iter().any(|&c| !(c > 0.0)) || ds.iter().any(|&d| !(d >= 0.0)) {
        return Err(Error::Config("grid needs C > 0 and delta >= 0".into()));
    }
    Ok(cs
        .iter()
        .flat_map(|&c| ds.iter().map(move |&padding| Candidate { c, padding }))
        .collect())
}

/// k-fold cross-validation over `grid`.
///
/// `trainer(train_features, train_targets, test_features, candidate)` must
/// return predictions on `test_features` in the encoded label space.
/// Candidates are evaluated in parallel. Ties go to the smaller `C`, then
/// the smaller `δ`.
pub fn kfold_cv<F>(
    features: &[Vec<f64>],
    targets: &[f64],
    task: Task,
    folds: usize,
    grid: &[Candidate],
    seed: u64,
    trainer: F,
) -> Result<CvResult>
where
    F: Fn(&[Vec<f64>], &[f64], &[Vec<f64>], Candidate) -> Result<Vec<f64>> + Sync,
{
    if grid.is_empty() {
        return Err(Error::Config("empty hyperparameter grid".into()));
    }
    if features.len() != targets.len() {
        return Err(Error::Dimension("features and targets differ in length".into()));
    }
    let assignment = fold_assignment(targets, task, folds, seed)?;
    let table: Vec<CvScore> = grid
        .par_iter()
        .map(|&cand| {
            let mut fold_scores = Vec::with_capacity(folds);
            for f in 0..folds {
                let (mut tr_x, mut tr_y, mut te_x, mut te_y) = (vec![], vec![], vec![], vec![]);
                for i in 0..targets.len() {
                    if assignment[i] == f {
                        te_x.push(features[i].clone());
                        te_y.push(targets[i]);
                    } else {
                        tr_x.push(features[i].clone());
                        tr_y.push(targets[i]);
                    }
                }
                let pred = trainer(&tr_x, &tr_y, &te_x, cand)?;
                fold_scores.push(match task {
                    Task::Classification => accuracy(&pred, &te_y),
                    Task::Regression => mean_squared_error(&pred, &te_y),
                });
            }
            let score = fold_scores.iter().sum::<f64>() / folds as f64;
            Ok(CvScore {
                candidate: cand,
                score,
                fold_scores,
            })
        })
        .collect::<Result<_>>()?;

    let mut order: Vec<usize> = (0..table.len()).collect();
    order.sort_by(|&a, &b| {
        let (ca, cb) = (table[a].candidate, table[b].candidate);
        ca.c.total_cmp(&cb.c).then(ca.padding.total_cmp(&cb.padding))
    });
    let better = |a: f64, b: f64| match task {
        Task::Classification => a > b,
        Task::Regression => a < b,
    };
    let mut best = order[0];
    for &i in &order[1..] {
        if better(table[i].score, table[best].score) {
            best = i;
        }
    }
    Ok(CvResult {
        best: table[best].candidate,
        table,
    })
}

/// A path for error messages when parsing in-memory text.
pub fn inline_source(name: &str) -> PathBuf {
    PathBuf::from(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_basic() {
        let ds = parse_sparse_svm_str("+1 1:0.5 3:2\n-1\n", "t").unwrap();
        assert_eq!(ds.features, vec![vec![0.5, 0.0, 2.0], vec![0.0, 0.0, 0.0]]);
        assert_eq!(ds.targets, vec![1.0, -1.0]);
    }

    #[test]
    fn sparse_errors_carry_line_numbers() {
        let err = parse_sparse_svm_str("1 1:1\n# note\n1 2:1 1:3\n", "f.svm").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_sparse_svm_str("1 0:1\n", "f").is_err());
        assert!(parse_sparse_svm_str("x 1:1\n", "f").is_err());
        assert!(parse_sparse_svm_str("1 1=1\n", "f").is_err());
        assert!(parse_sparse_svm_str("# only comments\n", "f").is_err());
    }

    #[test]
    fn csv_header_detection() {
        let with = parse_csv_str("a,b,y\n1,2,0\n3,4,1\n", "c", LabelColumn::Last).unwrap();
        let without = parse_csv_str("1,2,0\n3,4,1\n", "c", LabelColumn::Last).unwrap();
        assert_eq!(with, without);
        assert_eq!(with.features, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        let first = parse_csv_str("0,1,2\n", "c", LabelColumn::First).unwrap();
        assert_eq!(first.targets, vec![0.0]);
        assert!(parse_csv_str("1,2,3\n1,2\n", "c", LabelColumn::Last).is_err());
        assert!(parse_csv_str("1,2,3\n1,x,2\n", "c", LabelColumn::Last).is_err());
    }

    #[test]
    fn scaler_constant_and_identity() {
        let rows = vec![vec![0.0, 3.0], vec![1.0, 3.0]];
        let s = scale_fit(&rows).unwrap();
        let t = scale_apply(&s, &rows).unwrap();
        assert_eq!(t, vec![vec![0.0, 0.5], vec![1.0, 0.5]]);
    }

    #[test]
    fn task_detection() {
        assert_eq!(detect_task(&[3.0, 5.0, 3.0]), TargetEncoding::Binary { classes: [3.0, 5.0] });
        assert_eq!(detect_task(&[1.0, 2.0, 3.0]), TargetEncoding::Real);
        assert!(resolve_task(&[1.0, 2.0, 3.0], Some(Task::Classification)).is_err());
        let enc = detect_task(&[3.0, 5.0]);
        assert_eq!(encode_targets(&enc, &[5.0, 3.0]).unwrap(), vec![1.0, -1.0]);
        assert_eq!(enc.decode(0.0), 5.0);
    }

    #[test]
    fn folds_balanced() {
        let y: Vec<f64> = (0..11).map(|i| if i < 4 { 1.0 } else { -1.0 }).collect();
        let f = fold_assignment(&y, Task::Classification, 3, 1).unwrap();
        let sizes: Vec<usize> = (0..3).map(|k| f.iter().filter(|&&v| v == k).count()).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        assert!(fold_assignment(&y, Task::Classification, 12, 1).is_err());
        assert_eq!(f, fold_assignment(&y, Task::Classification, 3, 1).unwrap());
    }

    #[test]
    fn cv_ties_prefer_small_c_then_small_delta() {
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..12).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let grid = parse_grid("C=10,1;delta=0.5,0.25", 1.0, 0.5).unwrap();
        let cv = kfold_cv(&x, &y, Task::Classification, 3, &grid, 0, |_, _, te, _| Ok(vec![1.0; te.len()])).unwrap();
        assert_eq!(cv.best, Candidate { c: 1.0, padding: 0.25 });
        assert_eq!(cv.table.len(), 4);
        assert!(cv.table.iter().all(|r| (r.score - 0.5).abs() < 1e-12));

        let picky = kfold_cv(&x, &y, Task::Regression, 4, &grid, 0, |_, _, te, cand| {
            Ok(vec![if cand.c == 10.0 { 0.0 } else { 5.0 }; te.len()])
        })
        .unwrap();
        assert_eq!(picky.best.c, 10.0);
        assert!(kfold_cv(&x, &y, Task::Classification, 13, &grid, 0, |_, _, te, _| Ok(vec![0.0; te.len()])).is_err());
    }

    #[test]
    fn grid_parsing() {
        let g = parse_grid("C=1,10;delta=0.2", 1.0, 0.5).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g[1], Candidate { c: 10.0, padding: 0.2 });
        assert_eq!(parse_grid("", 2.0, 0.5).unwrap(), vec![Candidate { c: 2.0, padding: 0.5 }]);
        assert!(parse_grid("gamma=1", 1.0, 0.5).is_err());
        assert!(parse_grid("C=-1", 1.0, 0.5).is_err());
    }
}
