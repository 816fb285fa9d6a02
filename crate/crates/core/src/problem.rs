//! Training configuration, the bound learning problem and iteration traces.

use std::io::Write;
use std::time::Instant;

use crate::eig::TraceSimplexMatrix;
use crate::error::{Error, Result};
use crate::kernel::{KernelContext, TkBasis, TkBasisConfig, DEFAULT_CACHE_BUDGET_BYTES};
use crate::matrix::SymmetricMatrix;
use crate::qp::{self, DualVariables, QpProblem, QpSolution, SmoOptions, Task, WorkingSetSelection};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Algorithm {
    #[default]
    FrankWolfe,
    PrimalDual,
    Hybrid,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::FrankWolfe => "fw",
            Algorithm::PrimalDual => "apd",
            Algorithm::Hybrid => "hybrid",
        }
    }
}

/// Which eigenvector of `D` the Frank-Wolfe direction uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EigenDirection {
    #[default]
    Largest,
    /// Debug switch: the smallest-eigenvalue direction.
    Smallest,
}

/// Bound used for the `α`-gradient Lipschitz constant in APD.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StepBound {
    /// `(n_P/2) Σ D_ij(e)²`.
    #[default]
    Frobenius,
    /// `n_P Σ_k λ_max(G(x_k, x_k))`, which bounds `trace K(P)` over the
    /// trace simplex and is usually far smaller.
    Trace,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub degree: u32,
    /// Integration-box padding `δ`, shared by every feature.
    pub padding: f64,
    pub c: f64,
    pub epsilon: f64,
    /// Duality-gap tolerance.
    pub tol: f64,
    pub maxit: usize,
    pub n_gamma: usize,
    pub algorithm: Algorithm,
    pub cache_budget_bytes: u64,
    /// Floor on the inner SMO tolerance.
    pub qp_tol: f64,
    pub selection: WorkingSetSelection,
    pub direction: EigenDirection,
    /// Gap at which the hybrid method hands over from Frank-Wolfe to APD.
    pub switch_tol: f64,
    /// APD evaluates the duality gap every this many iterations.
    pub check_interval: usize,
    /// Strong-convexity modulus for APD; `None` derives it from `K(P₀)`.
    pub mu: Option<f64>,
    /// Free constant in the coupling Lipschitz bound; `None` means `n_P`.
    pub c_scale: Option<f64>,
    pub step_bound: StepBound,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            degree: 1,
            padding: 0.5,
            c: 1.0,
            epsilon: 0.1,
            tol: 0.01,
            maxit: 100,
            n_gamma: 10,
            algorithm: Algorithm::FrankWolfe,
            cache_budget_bytes: DEFAULT_CACHE_BUDGET_BYTES,
            qp_tol: 1e-6,
            selection: WorkingSetSelection::MaximalViolatingPair,
            direction: EigenDirection::Largest,
            switch_tol: 1e-3,
            check_interval: 10,
            mu: None,
            c_scale: None,
            step_bound: StepBound::Frobenius,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("C", self.c)?;
        positive("tol", self.tol)?;
        positive("qp_tol", self.qp_tol)?;
        positive("switch_tol", self.switch_tol)?;
        if !(self.padding >= 0.0 && self.padding.is_finite()) {
            return Err(Error::Config(format!("padding must be nonnegative, got {}", self.padding)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be nonnegative, got {}", self.epsilon)));
        }
        if self.maxit == 0 {
            return Err(Error::Config("maxit must be at least 1".into()));
        }
        if self.n_gamma == 0 {
            return Err(Error::Config("n_gamma must be at least 1".into()));
        }
        if self.check_interval == 0 {
            return Err(Error::Config("check_interval must be at least 1".into()));
        }
        if let Some(mu) = self.mu {
            positive("mu", mu)?;
        }
        if let Some(c) = self.c_scale {
            positive("c_scale", c)?;
        }
        Ok(())
    }
}

/// Scaled training samples with targets.
#[derive(Clone, Debug)]
pub struct TrainData {
    /// Features already mapped into `[0, 1]ⁿ`.
    pub features: Vec<Vec<f64>>,
    /// `±1` labels or real targets.
    pub targets: Vec<f64>,
    pub task: Task,
}

impl TrainData {
    pub fn new(features: Vec<Vec<f64>>, targets: Vec<f64>, task: Task) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Data("no training samples".into()));
        }
        if features.len() != targets.len() {
            return Err(Error::Dimension(format!(
                "{} samples but {} targets",
                features.len(),
                targets.len()
            )));
        }
        let n = features[0].len();
        if n == 0 {
            return Err(Error::Data("samples have no features".into()));
        }
        if let Some(i) = features.iter().position(|f| f.len() != n) {
            return Err(Error::Dimension(format!("sample {i} has {} features, expected {n}", features[i].len())));
        }
        Ok(TrainData {
            features,
            targets,
            task,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features[0].len()
    }
}

/// A dataset bound to a basis and configuration.
pub struct GklProblem {
    ctx: KernelContext,
    targets: Vec<f64>,
    task: Task,
    config: TrainConfig,
}

impl GklProblem {
    pub fn new(data: &TrainData, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let basis_cfg = TkBasisConfig::unit_cube(data.n_features(), config.degree, config.padding)?;
        let ctx = KernelContext::new(TkBasis::new(basis_cfg), &data.features, config.cache_budget_bytes)?;
        Ok(GklProblem {
            ctx,
            targets: data.targets.clone(),
            task: data.task,
            config,
        })
    }

    pub fn context(&self) -> &KernelContext {
        &self.ctx
    }

    pub fn basis(&self) -> &TkBasis {
        self.ctx.basis()
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn n_p(&self) -> usize {
        self.ctx.basis().n_p()
    }

    /// `e_⋆`: the labels for classification, ones for regression.
    pub fn e_star(&self) -> Vec<f64> {
        match self.task {
            Task::Classification => self.targets.clone(),
            Task::Regression => vec![1.0; self.targets.len()],
        }
    }

    pub fn kernel_matrix(&self, p: &TraceSimplexMatrix) -> Result<SymmetricMatrix> {
        self.ctx.kernel_matrix(p.matrix())
    }

    /// `D(e_⋆⊙α)`.
    pub fn d_matrix(&self, alpha: &DualVariables) -> Result<SymmetricMatrix> {
        self.ctx.assemble_d(&alpha.weights(&self.targets))
    }

    /// `κ_⋆(α)`.
    pub fn kappa(&self, alpha: &DualVariables) -> f64 {
        match self.task {
            Task::Classification => alpha.values.iter().sum(),
            Task::Regression => {
                let l1: f64 = alpha.values.iter().map(|a| a.abs()).sum();
                let lin: f64 = alpha.values.iter().zip(&self.targets).map(|(a, y)| a * y).sum();
                lin - self.config.epsilon * l1
            }
        }
    }

    pub fn qp_problem<'a>(&'a self, kernel: &'a SymmetricMatrix) -> QpProblem<'a> {
        QpProblem::new(kernel, self.task, &self.targets, self.config.c, self.config.epsilon)
    }

    pub fn smo_options(&self, tol: f64) -> SmoOptions {
        SmoOptions {
            tol,
            max_iterations: None,
            selection: self.config.selection,
        }
    }

    /// OPT_A on a precomputed kernel matrix.
    pub fn solve_dual(&self, kernel: &SymmetricMatrix, tol: f64, warm: Option<&DualVariables>) -> Result<QpSolution> {
        qp::solve(&self.qp_problem(kernel), &self.smo_options(tol), warm)
    }
}

/// One row of a training trace. Entries left as `None` were not evaluated
/// at that iteration.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub primal: Option<f64>,
    pub dual: Option<f64>,
    pub gap: Option<f64>,
    pub gamma: Option<f64>,
    pub t_opt_a_ms: f64,
    pub t_opt_p_ms: f64,
    pub t_linesearch_ms: f64,
    pub tau: Option<f64>,
    pub sigma: Option<f64>,
    pub theta: Option<f64>,
    /// `L(P_{k+1}, α_k) − L(P_k, α_{k+1})`, logged by APD.
    pub l_difference: Option<f64>,
}

/// Result of any of the training algorithms.
#[derive(Clone, Debug)]
pub struct TrainResult {
    pub p: TraceSimplexMatrix,
    pub alpha: DualVariables,
    pub bias: f64,
    /// OPT_A at the returned kernel parameter.
    pub primal: f64,
    /// Duality gap of the returned iterate.
    pub gap: f64,
    pub converged: bool,
    pub iterations: usize,
    pub trace: Vec<IterationRecord>,
}

pub(crate) fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// Writes a trace as CSV. The step-size columns are included when
/// `with_step_sizes` is set.
pub fn write_trace_csv<W: Write>(mut out: W, trace: &[IterationRecord], with_step_sizes: bool) -> std::io::Result<()> {
    write!(out, "k,primal,dual,gap,gamma,t_opt_a_ms,t_opt_p_ms,t_linesearch_ms")?;
    if with_step_sizes {
        write!(out, ",tau,sigma,theta")?;
    }
    writeln!(out)?;
    for r in trace {
        write!(
            out,
            "{},{},{},{},{},{:.6},{:.6},{:.6}",
            r.k,
            cell(r.primal),
            cell(r.dual),
            cell(r.gap),
            cell(r.gamma),
            r.t_opt_a_ms,
            r.t_opt_p_ms,
            r.t_linesearch_ms
        )?;
        if with_step_sizes {
            write!(out, ",{},{},{}", cell(r.tau), cell(r.sigma), cell(r.theta))?;
        }
        writeln!(out)?;
    }
    Ok(())
}
