//! Trained predictors: construction from a training run, evaluation and a
//! versioned, checksummed text format.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::apd::train;
use crate::data::{encode_targets, resolve_task, scale_apply, scale_fit, ScalerState, TargetEncoding};
use crate::eig::TraceSimplexMatrix;
use crate::error::{Error, Result};
use crate::kernel::{TkBasis, TkBasisConfig};
use crate::matrix::SymmetricMatrix;
use crate::problem::{GklProblem, TrainConfig, TrainData, TrainResult};
use crate::qp::Task;

pub const FORMAT_MAGIC: &str = "tessellate-model";
pub const FORMAT_VERSION: u32 = 1;

/// Support weights with magnitude at or below this are dropped.
pub const SUPPORT_PRUNE: f64 = 1e-12;

/// One training point kept by the predictor, in scaled coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportVector {
    pub point: Vec<f64>,
    pub coef: f64,
}

/// Decision function `f(x) = Σ_i coef_i k(s_i, x̃) − bias`, where `x̃` is
/// `x` after min-max scaling, clamped to the unit cube.
#[derive(Clone, Debug)]
pub struct TkPredictor {
    basis: TkBasis,
    p: TraceSimplexMatrix,
    support: Vec<SupportVector>,
    bias: f64,
    encoding: TargetEncoding,
    scaler: ScalerState,
    meta: BTreeMap<String, String>,
}

impl PartialEq for TkPredictor {
    fn eq(&self, other: &Self) -> bool {
        self.basis.config() == other.basis.config()
            && self.p.matrix() == other.p.matrix()
            && self.support == other.support
            && self.bias == other.bias
            && self.encoding == other.encoding
            && self.scaler == other.scaler
            && self.meta == other.meta
    }
}

impl TkPredictor {
    pub fn new(
        basis_config: TkBasisConfig,
        p: TraceSimplexMatrix,
        support: Vec<SupportVector>,
        bias: f64,
        encoding: TargetEncoding,
        scaler: ScalerState,
    ) -> Result<Self> {
        let basis = TkBasis::new(basis_config);
        if p.n_p() != basis.n_p() {
            return Err(Error::Dimension(format!(
                "kernel parameter has order {}, basis needs {}",
                p.n_p(),
                basis.n_p()
            )));
        }
        let n = basis.n_features();
        if scaler.n_features() != n {
            return Err(Error::Dimension(format!(
                "scaler has {} features, basis has {n}",
                scaler.n_features()
            )));
        }
        if let Some(sv) = support.iter().find(|sv| sv.point.len() != n) {
            return Err(Error::Dimension(format!(
                "support point has {} coordinates, expected {n}",
                sv.point.len()
            )));
        }
        if !bias.is_finite() || support.iter().any(|sv| !sv.coef.is_finite()) {
            return Err(Error::Numerical("non-finite predictor weights".into()));
        }
        Ok(TkPredictor {
            basis,
            p,
            support,
            bias,
            encoding,
            scaler,
            meta: BTreeMap::new(),
        })
    }

    /// Builds the predictor for a finished run on `problem`.
    pub fn from_training(
        problem: &GklProblem,
        result: &TrainResult,
        scaler: ScalerState,
        encoding: TargetEncoding,
    ) -> Result<Self> {
        let weights = result.alpha.weights(problem.targets());
        let support = weights
            .iter()
            .enumerate()
            .filter(|(_, w)| w.abs() > SUPPORT_PRUNE)
            .map(|(i, &coef)| SupportVector {
                point: problem.context().point(i).to_vec(),
                coef,
            })
            .collect();
        let mut pred = Self::new(
            problem.basis().config().clone(),
            result.p.clone(),
            support,
            result.bias,
            encoding,
            scaler,
        )?;
        let cfg = problem.config();
        for (k, v) in [
            ("algorithm", cfg.algorithm.name().to_string()),
            ("c", cfg.c.to_string()),
            ("epsilon", cfg.epsilon.to_string()),
            ("training_samples", problem.len().to_string()),
            ("primal", result.primal.to_string()),
            ("gap", result.gap.to_string()),
            ("iterations", result.iterations.to_string()),
            ("converged", result.converged.to_string()),
        ] {
            pred.meta.insert(k.to_string(), v);
        }
        Ok(pred)
    }

    pub fn basis(&self) -> &TkBasis {
        &self.basis
    }

    pub fn kernel_parameter(&self) -> &TraceSimplexMatrix {
        &self.p
    }

    pub fn support(&self) -> &[SupportVector] {
        &self.support
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn task(&self) -> Task {
        self.encoding.task()
    }

    pub fn encoding(&self) -> &TargetEncoding {
        &self.encoding
    }

    pub fn scaler(&self) -> &ScalerState {
        &self.scaler
    }

    pub fn meta(&self) -> &BTreeMap<String, String> {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut BTreeMap<String, String> {
        &mut self.meta
    }

    pub fn n_features(&self) -> usize {
        self.basis.n_features()
    }

    fn check_row(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features() {
            return Err(Error::Dimension(format!(
                "input has {} features, model expects {}",
                x.len(),
                self.n_features()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("input has a non-finite feature".into()));
        }
        Ok(())
    }

    /// Raw decision value for one unscaled input.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        self.check_row(x)?;
        let mut s = self.basis.scratch();
        Ok(self.decision_scaled(&self.unit_point(x), &mut s))
    }

    fn unit_point(&self, x: &[f64]) -> Vec<f64> {
        self.scaler
            .transform_row(x)
            .into_iter()
            .map(|v| v.clamp(0.0, 1.0))
            .collect()
    }

    fn decision_scaled(&self, x: &[f64], s: &mut crate::kernel::BasisScratch) -> f64 {
        let p = self.p.matrix().as_slice();
        self.support
            .iter()
            .map(|sv| sv.coef * self.basis.kernel_value(p, &sv.point, x, s))
            .sum::<f64>()
            - self.bias
    }

    pub fn decision_values(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        for r in rows {
            self.check_row(r)?;
        }
        Ok(rows
            .par_iter()
            .map_init(
                || self.basis.scratch(),
                |s, r| self.decision_scaled(&self.unit_point(r), s),
            )
            .collect())
    }

    /// Predictions in the original label space. A zero decision value
    /// counts as the positive class.
    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        Ok(self
            .decision_values(rows)?
            .into_iter()
            .map(|v| self.encoding.decode(v))
            .collect())
    }

    /// Accuracy for classification or mean squared error for regression.
    pub fn evaluate(&self, rows: &[Vec<f64>], targets: &[f64]) -> Result<Metric> {
        if rows.len() != targets.len() {
            return Err(Error::Dimension("features and targets differ in length".into()));
        }
        let pred = self.predict(rows)?;
        Ok(match self.task() {
            Task::Classification => Metric::Accuracy(crate::data::accuracy(&pred, targets)),
            Task::Regression => Metric::MeanSquaredError(crate::data::mean_squared_error(&pred, targets)),
        })
    }

    pub fn to_text(&self) -> String {
        let mut b = String::new();
        let cfg = self.basis.config();
        let _ = writeln!(b, "{FORMAT_MAGIC} {FORMAT_VERSION}");
        b.push_str("[basis]\n");
        let _ = writeln!(b, "n_features {}", cfg.n_features());
        let _ = writeln!(b, "degree {}", cfg.degree());
        let _ = writeln!(b, "domain_lower {}", join(cfg.domain_lower()));
        let _ = writeln!(b, "domain_upper {}", join(cfg.domain_upper()));
        let _ = writeln!(b, "padding {}", join(cfg.padding()));
        let _ = writeln!(b, "fingerprint {}", self.basis.table().fingerprint());
        b.push_str("[task]\n");
        match self.encoding {
            TargetEncoding::Binary { classes } => {
                b.push_str("task classification\n");
                let _ = writeln!(b, "classes {}", join(&classes));
            }
            TargetEncoding::Real => b.push_str("task regression\n"),
        }
        b.push_str("[scaler]\n");
        let _ = writeln!(b, "min {}", join(&self.scaler.min));
        let _ = writeln!(b, "max {}", join(&self.scaler.max));
        b.push_str("[parameter]\n");
        let np = self.p.n_p();
        let _ = writeln!(b, "order {np}");
        for i in 0..np {
            let _ = writeln!(b, "{}", join(self.p.matrix().row(i)));
        }
        b.push_str("[support]\n");
        let _ = writeln!(b, "bias {}", num(self.bias));
        let _ = writeln!(b, "count {}", self.support.len());
        for sv in &self.support {
            let _ = writeln!(b, "{} {}", num(sv.coef), join(&sv.point));
        }
        b.push_str("[meta]\n");
        for (k, v) in &self.meta {
            let _ = writeln!(b, "{k} {v}");
        }
        let _ = writeln!(b, "checksum {}", checksum(&b));
        b
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let body_end = text
            .rfind("checksum ")
            .filter(|&i| i == 0 || text.as_bytes()[i - 1] == b'\n')
            .ok_or_else(|| bad("missing checksum line"))?;
        let (body, tail) = text.split_at(body_end);
        let stored = tail["checksum ".len()..].trim();
        if stored != checksum(body) {
            return Err(bad("checksum mismatch"));
        }

        let mut r = Lines::new(body);
        let header = r.next_line()?;
        let mut head = header.split_whitespace();
        if head.next() != Some(FORMAT_MAGIC) {
            return Err(bad("not a model file"));
        }
        let version: u32 = head
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("missing format version"))?;
        if version != FORMAT_VERSION {
            return Err(bad(format!("unsupported format version {version}, expected {FORMAT_VERSION}")));
        }

        r.section("basis")?;
        let n: usize = parse_one(r.field("n_features")?)?;
        let degree: u32 = parse_one(r.field("degree")?)?;
        let lower = parse_vec(r.field("domain_lower")?, n)?;
        let upper = parse_vec(r.field("domain_upper")?, n)?;
        let padding = parse_vec(r.field("padding")?, n)?;
        let fingerprint = r.field("fingerprint")?.to_string();
        let basis_config = TkBasisConfig::new(degree, lower, upper, padding).map_err(|e| bad(e.to_string()))?;
        let expected = crate::kernel::enumerate_exponents(n, degree).fingerprint();
        if fingerprint != expected {
            return Err(bad("basis fingerprint does not match this build's exponent ordering"));
        }

        r.section("task")?;
        let encoding = match r.field("task")? {
            "classification" => {
                let c = parse_vec(r.field("classes")?, 2)?;
                TargetEncoding::Binary { classes: [c[0], c[1]] }
            }
            "regression" => TargetEncoding::Real,
            other => return Err(bad(format!("unknown task `{other}`"))),
        };

        r.section("scaler")?;
        let scaler = ScalerState {
            min: parse_vec(r.field("min")?, n)?,
            max: parse_vec(r.field("max")?, n)?,
        };

        r.section("parameter")?;
        let np: usize = parse_one(r.field("order")?)?;
        let mut rows = Vec::with_capacity(np);
        for _ in 0..np {
            rows.push(parse_vec(r.next_line()?, np)?);
        }
        let p = SymmetricMatrix::from_rows(&rows).map_err(|e| bad(e.to_string()))?;
        let p = TraceSimplexMatrix::new(p).map_err(|e| bad(format!("invalid kernel parameter: {e}")))?;

        r.section("support")?;
        let bias: f64 = parse_one(r.field("bias")?)?;
        let count: usize = parse_one(r.field("count")?)?;
        let mut support = Vec::with_capacity(count);
        for _ in 0..count {
            let v = parse_vec(r.next_line()?, n + 1)?;
            support.push(SupportVector {
                coef: v[0],
                point: v[1..].to_vec(),
            });
        }

        r.section("meta")?;
        let mut meta = BTreeMap::new();
        while let Some(line) = r.try_next() {
            let (k, v) = line.split_once(' ').unwrap_or((line, ""));
            meta.insert(k.to_string(), v.to_string());
        }

        let mut pred =
            Self::new(basis_config, p, support, bias, encoding, scaler).map_err(|e| bad(e.to_string()))?;
        pred.meta = meta;
        Ok(pred)
    }
}

/// A held-out score.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Metric {
    Accuracy(f64),
    MeanSquaredError(f64),
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::Accuracy(_) => "accuracy",
            Metric::MeanSquaredError(_) => "mse",
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            Metric::Accuracy(v) | Metric::MeanSquaredError(v) => v,
        }
    }
}

/// A predictor together with the run that produced it.
#[derive(Clone, Debug)]
pub struct Fitted {
    pub predictor: TkPredictor,
    pub result: TrainResult,
}

/// Scales raw features, encodes targets and trains.
///
/// `task` forces the learning task; `None` picks classification exactly
/// when the targets take two distinct values.
pub fn fit(features: &[Vec<f64>], targets: &[f64], task: Option<Task>, config: TrainConfig) -> Result<Fitted> {
    let scaler = scale_fit(features)?;
    let scaled = scale_apply(&scaler, features)?;
    let encoding = resolve_task(targets, task)?;
    let y = encode_targets(&encoding, targets)?;
    let data = TrainData::new(scaled, y, encoding.task())?;
    let problem = GklProblem::new(&data, config)?;
    let result = train(&problem)?;
    let predictor = TkPredictor::from_training(&problem, &result, scaler, encoding)?;
    Ok(Fitted { predictor, result })
}

fn bad(msg: impl Into<String>) -> Error {
    Error::ModelFormat(msg.into())
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn join(v: &[f64]) -> String {
    v.iter().map(|&x| num(x)).collect::<Vec<_>>().join(" ")
}

fn checksum(body: &str) -> String {
    Sha256::digest(body.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn parse_one<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| bad(format!("cannot parse `{s}`")))
}

fn parse_vec(s: &str, len: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| bad(format!("cannot parse number `{t}`")))
        })
        .collect::<Result<_>>()?;
    if v.len() != len {
        return Err(bad(format!("expected {len} numbers, found {}", v.len())));
    }
    Ok(v)
}

struct Lines<'a> {
    inner: std::str::Lines<'a>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines { inner: text.lines() }
    }

    fn try_next(&mut self) -> Option<&'a str> {
        self.inner.next().filter(|l| !l.is_empty())
    }

    fn next_line(&mut self) -> Result<&'a str> {
        self.inner.next().ok_or_else(|| bad("unexpected end of file"))
    }

    fn section(&mut self, name: &str) -> Result<()> {
        let line = self.next_line()?;
        if line.trim() != format!("[{name}]") {
            return Err(bad(format!("expected section [{name}], found `{line}`")));
        }
        Ok(())
    }

    fn field(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next_line()?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok(v),
            _ if line == key => Ok(""),
            _ => Err(bad(format!("expected `{key}`, found `{line}`"))),
        }
    }
}
