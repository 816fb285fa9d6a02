//! SMO solver for the dual QPs `max_α λ(e⊙α, P) + κ(α)` over a box with one
//! equality constraint, including the proximal variant used by the
//! primal-dual method.
//!
//! Every problem is reduced to the minimization form
//! `min ½ aᵀQa + pᵀa  s.t.  sᵀa = 0,  0 ≤ a ≤ C` with `s ∈ {±1}`. For
//! classification `a = α` and `s = y`. For regression `α = a⁺ − a⁻` is split
//! into `2m` nonnegative variables with `s = (+1, −1)`.

use crate::error::{Error, Result};
use crate::matrix::SymmetricMatrix;

/// Learning task: labels in `{−1, +1}` or real targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Classification,
    Regression,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Classification => "classification",
            Task::Regression => "regression",
        }
    }
}

/// Dual variables `α` in the task's feasible set.
#[derive(Clone, Debug, PartialEq)]
pub struct DualVariables {
    pub values: Vec<f64>,
    pub task: Task,
}

impl DualVariables {
    pub fn zeros(m: usize, task: Task) -> Self {
        DualVariables {
            values: vec![0.0; m],
            task,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The weights `β = e⊙α` entering `K(P)` and `D(β)`: `y⊙α` for
    /// classification, `α` itself for regression.
    pub fn weights(&self, targets: &[f64]) -> Vec<f64> {
        match self.task {
            Task::Classification => self.values.iter().zip(targets).map(|(a, y)| a * y).collect(),
            Task::Regression => self.values.clone(),
        }
    }

    /// Checks box and equality constraints; `tol` scales the equality slack.
    pub fn is_feasible(&self, targets: &[f64], c: f64, tol: f64) -> bool {
        let m = self.values.len() as f64;
        match self.task {
            Task::Classification => {
                let eq: f64 = self.values.iter().zip(targets).map(|(a, y)| a * y).sum();
                self.values.iter().all(|&a| (0.0..=c).contains(&a)) && eq.abs() <= tol * c * m.max(1.0)
            }
            Task::Regression => {
                let eq: f64 = self.values.iter().sum();
                self.values.iter().all(|&a| (-c..=c).contains(&a)) && eq.abs() <= tol * c * m.max(1.0)
            }
        }
    }
}

/// Output of an SMO solve.
#[derive(Clone, Debug)]
pub struct QpSolution {
    pub alpha: DualVariables,
    /// `λ(e⊙α, P) + κ(α)` without any proximal term.
    pub objective: f64,
    /// Objective including the proximal term; equals `objective` for plain duals.
    pub prox_objective: f64,
    /// Offset `b`; decision values are `Σ β_j k(x_j, x) − b`.
    pub bias: f64,
    pub iterations: usize,
    pub kkt_violation: f64,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WorkingSetSelection {
    #[default]
    MaximalViolatingPair,
    SecondOrder,
}

#[derive(Clone, Debug)]
pub struct SmoOptions {
    pub tol: f64,
    /// Defaults to `max(10⁷, 100·l)` for `l` solver variables.
    pub max_iterations: Option<usize>,
    pub selection: WorkingSetSelection,
}

impl Default for SmoOptions {
    fn default() -> Self {
        SmoOptions {
            tol: 1e-6,
            max_iterations: None,
            selection: WorkingSetSelection::default(),
        }
    }
}

impl SmoOptions {
    pub fn with_tol(tol: f64) -> Self {
        SmoOptions {
            tol,
            ..Default::default()
        }
    }
}

/// Proximal term `−(1/τ)·½‖α − center‖²` added to the dual objective.
#[derive(Clone, Copy, Debug)]
pub struct Prox<'a> {
    pub tau: f64,
    pub center: &'a DualVariables,
}

/// A dual QP instance.
#[derive(Clone, Copy, Debug)]
pub struct QpProblem<'a> {
    pub kernel: &'a SymmetricMatrix,
    pub task: Task,
    /// Labels in `{−1, +1}` or regression targets.
    pub targets: &'a [f64],
    pub c: f64,
    /// Tube half-width; ignored for classification.
    pub epsilon: f64,
    pub prox: Option<Prox<'a>>,
}

impl<'a> QpProblem<'a> {
    pub fn new(kernel: &'a SymmetricMatrix, task: Task, targets: &'a [f64], c: f64, epsilon: f64) -> Self {
        QpProblem {
            kernel,
            task,
            targets,
            c,
            epsilon,
            prox: None,
        }
    }

    pub fn with_prox(mut self, tau: f64, center: &'a DualVariables) -> Self {
        self.prox = Some(Prox { tau, center });
        self
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    fn validate(&self) -> Result<()> {
        let m = self.targets.len();
        if m == 0 {
            return Err(Error::Data("QP needs at least one sample".into()));
        }
        if self.kernel.order() != m {
            return Err(Error::Dimension(format!(
                "kernel matrix of order {} for {m} samples",
                self.kernel.order()
            )));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("box bound C must be positive, got {}", self.c)));
        }
        if !self.kernel.is_finite() {
            return Err(Error::Numerical("kernel matrix has non-finite entries".into()));
        }
        if self.targets.iter().any(|t| !t.is_finite()) {
            return Err(Error::Data("non-finite targets".into()));
        }
        match self.task {
            Task::Classification => {
                if self.targets.iter().any(|&y| y != 1.0 && y != -1.0) {
                    return Err(Error::Data("classification labels must be -1 or +1".into()));
                }
                let pos = self.targets.iter().filter(|&&y| y > 0.0).count();
                if pos == 0 || pos == m {
                    return Err(Error::Data(
                        "classification needs both classes; the equality constraint is degenerate".into(),
                    ));
                }
            }
            Task::Regression => {
                if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
                    return Err(Error::Config(format!(
                        "epsilon must be nonnegative, got {}",
                        self.epsilon
                    )));
                }
            }
        }
        if let Some(prox) = self.prox {
            if !(prox.tau > 0.0) || prox.tau.is_nan() {
                return Err(Error::Config("proximal step must be positive".into()));
            }
            if prox.center.len() != m || prox.center.task != self.task {
                return Err(Error::Dimension("proximal center does not match the problem".into()));
            }
            if prox.center.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical("proximal center has non-finite entries".into()));
            }
        }
        Ok(())
    }

    /// `λ(e⊙α) + κ(α)`.
    pub fn objective(&self, alpha: &[f64]) -> f64 {
        match self.task {
            Task::Classification => {
                let beta: Vec<f64> = alpha.iter().zip(self.targets).map(|(a, y)| a * y).collect();
                alpha.iter().sum::<f64>() - 0.5 * self.kernel.quad_form(&beta)
            }
            Task::Regression => {
                let l1: f64 = alpha.iter().map(|a| a.abs()).sum();
                let lin: f64 = alpha.iter().zip(self.targets).map(|(a, y)| a * y).sum();
                -0.5 * self.kernel.quad_form(alpha) - self.epsilon * l1 + lin
            }
        }
    }

    /// Objective minus the proximal penalty, if any.
    pub fn prox_objective(&self, alpha: &[f64]) -> f64 {
        let base = self.objective(alpha);
        match self.prox {
            Some(Prox { tau, center }) => {
                let dist: f64 = alpha
                    .iter()
                    .zip(&center.values)
                    .map(|(a, c)| (a - c) * (a - c))
                    .sum();
                base - 0.5 * dist / tau
            }
            None => base,
        }
    }
}

/// The problem in solver form.
struct Reduced<'a> {
    kernel: &'a SymmetricMatrix,
    m: usize,
    sign: Vec<f64>,
    linear: Vec<f64>,
    c: f64,
    inv_tau: f64,
}

impl<'a> Reduced<'a> {
    fn new(problem: &QpProblem<'a>) -> Self {
        let m = problem.len();
        let (sign, mut linear) = match problem.task {
            Task::Classification => (problem.targets.to_vec(), vec![-1.0; m]),
            Task::Regression => {
                let mut sign = vec![1.0; m];
                sign.extend(std::iter::repeat_n(-1.0, m));
                let mut linear: Vec<f64> = problem.targets.iter().map(|y| problem.epsilon - y).collect();
                linear.extend(problem.targets.iter().map(|y| problem.epsilon + y));
                (sign, linear)
            }
        };
        let mut inv_tau = 0.0;
        if let Some(Prox { tau, center }) = problem.prox {
            inv_tau = 1.0 / tau;
            for (t, p) in linear.iter_mut().enumerate() {
                let o = t % m;
                // classification variables are α itself; regression variables carry the sign
                let dir = match problem.task {
                    Task::Classification => 1.0,
                    Task::Regression => sign[t],
                };
                *p -= dir * center.values[o] * inv_tau;
            }
        }
        Reduced {
            kernel: problem.kernel,
            m,
            sign,
            linear,
            c: problem.c,
            inv_tau,
        }
    }

    fn len(&self) -> usize {
        self.sign.len()
    }

    /// Entry of the unsigned Hessian `K̂ = K + I/τ` lifted to solver variables.
    #[inline]
    fn khat(&self, s: usize, t: usize) -> f64 {
        let (os, ot) = (s % self.m, t % self.m);
        let v = self.kernel.get(os, ot);
        if os == ot {
            v + self.inv_tau
        } else {
            v
        }
    }

    #[inline]
    fn q(&self, s: usize, t: usize) -> f64 {
        self.sign[s] * self.sign[t] * self.khat(s, t)
    }

    fn gradient(&self, a: &[f64]) -> Vec<f64> {
        let l = self.len();
        (0..l)
            .map(|t| {
                let mut g = self.linear[t];
                for (s, &av) in a.iter().enumerate() {
                    if av != 0.0 {
                        g += self.q(t, s) * av;
                    }
                }
                g
            })
            .collect()
    }

    fn lift(&self, alpha: &DualVariables) -> Vec<f64> {
        if self.len() == self.m {
            alpha.values.clone()
        } else {
            let mut a: Vec<f64> = alpha.values.iter().map(|v| v.max(0.0)).collect();
            a.extend(alpha.values.iter().map(|v| (-v).max(0.0)));
            a
        }
    }

    fn collapse(&self, a: &[f64]) -> Vec<f64> {
        if self.len() == self.m {
            a.to_vec()
        } else {
            (0..self.m).map(|i| a[i] - a[i + self.m]).collect()
        }
    }

    fn in_up(&self, t: usize, a: f64) -> bool {
        if self.sign[t] > 0.0 {
            a < self.c
        } else {
            a > 0.0
        }
    }

    fn in_low(&self, t: usize, a: f64) -> bool {
        if self.sign[t] > 0.0 {
            a > 0.0
        } else {
            a < self.c
        }
    }
}

const MIN_CURVATURE: f64 = 1e-12;

fn smo(red: &Reduced, options: &SmoOptions, start: Vec<f64>) -> (Vec<f64>, Vec<f64>, usize, f64, bool) {
    let l = red.len();
    let c = red.c;
    let mut a = start;
    let mut grad = red.gradient(&a);
    let max_iter = options.max_iterations.unwrap_or_else(|| (100 * l).max(10_000_000));
    let mut iter = 0;
    let mut violation;
    loop {
        // m(a) = max_{I_up} −s G,  M(a) = min_{I_low} −s G
        let mut i = usize::MAX;
        let mut gmax = f64::NEG_INFINITY;
        let mut gmin = f64::INFINITY;
        let mut j_first = usize::MAX;
        for t in 0..l {
            let v = -red.sign[t] * grad[t];
            if red.in_up(t, a[t]) && v > gmax {
                gmax = v;
                i = t;
            }
            if red.in_low(t, a[t]) && v < gmin {
                gmin = v;
                j_first = t;
            }
        }
        violation = (gmax - gmin).max(0.0);
        if i == usize::MAX || j_first == usize::MAX || gmax - gmin < options.tol {
            break;
        }
        if iter >= max_iter {
            return (a, grad, iter, violation, false);
        }
        let j = match options.selection {
            WorkingSetSelection::MaximalViolatingPair => j_first,
            WorkingSetSelection::SecondOrder => {
                let kii = red.khat(i, i);
                let mut best = j_first;
                let mut best_val = f64::INFINITY;
                for t in 0..l {
                    if !red.in_low(t, a[t]) {
                        continue;
                    }
                    let b = gmax + red.sign[t] * grad[t];
                    if b > 0.0 {
                        let curv = (kii + red.khat(t, t) - 2.0 * red.khat(i, t)).max(MIN_CURVATURE);
                        let val = -b * b / curv;
                        if val < best_val {
                            best_val = val;
                            best = t;
                        }
                    }
                }
                best
            }
        };

        let (old_i, old_j) = (a[i], a[j]);
        let qii = red.q(i, i);
        let qjj = red.q(j, j);
        let qij = red.q(i, j);
        if red.sign[i] != red.sign[j] {
            let quad = (qii + qjj + 2.0 * qij).max(MIN_CURVATURE);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = a[i] - a[j];
            a[i] += delta;
            a[j] += delta;
            if diff > 0.0 {
                if a[j] < 0.0 {
                    a[j] = 0.0;
                    a[i] = diff;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = -diff;
            }
            if diff > 0.0 {
                if a[i] > c {
                    a[i] = c;
                    a[j] = c - diff;
                }
            } else if a[j] > c {
                a[j] = c;
                a[i] = c + diff;
            }
        } else {
            let quad = (qii + qjj - 2.0 * qij).max(MIN_CURVATURE);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = a[i] + a[j];
            a[i] -= delta;
            a[j] += delta;
            if sum > c {
                if a[i] > c {
                    a[i] = c;
                    a[j] = sum - c;
                }
            } else if a[j] < 0.0 {
                a[j] = 0.0;
                a[i] = sum;
            }
            if sum > c {
                if a[j] > c {
                    a[j] = c;
                    a[i] = sum - c;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = sum;
            }
        }
        let (di, dj) = (a[i] - old_i, a[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += red.q(t, i) * di + red.q(t, j) * dj;
        }
        iter += 1;
    }
    (a, grad, iter, violation, true)
}

/// Offset from free variables, or the midpoint of the feasible interval.
fn bias(red: &Reduced, a: &[f64], grad: &[f64]) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..red.len() {
        let yg = red.sign[t] * grad[t];
        if a[t] >= red.c {
            if red.sign[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if a[t] <= 0.0 {
            if red.sign[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else if ub.is_finite() && lb.is_finite() {
        0.5 * (ub + lb)
    } else if ub.is_finite() {
        ub
    } else if lb.is_finite() {
        lb
    } else {
        0.0
    }
}

/// Solves a dual QP instance by SMO, optionally warm-started from a feasible point.
pub fn solve(problem: &QpProblem, options: &SmoOptions, warm: Option<&DualVariables>) -> Result<QpSolution> {
    problem.validate()?;
    if !(options.tol > 0.0) {
        return Err(Error::Config("QP tolerance must be positive".into()));
    }
    let red = Reduced::new(problem);
    let start = match warm {
        Some(w) => {
            if w.len() != problem.len() || w.task != problem.task {
                return Err(Error::Dimension("warm start does not match the problem".into()));
            }
            if !w.is_feasible(problem.targets, problem.c, 1e-6) {
                return Err(Error::Numerical("warm start is infeasible".into()));
            }
            let mut a = red.lift(w);
            a.iter_mut().for_each(|v| *v = v.clamp(0.0, problem.c));
            a
        }
        None => vec![0.0; red.len()],
    };
    let (a, grad, iterations, kkt_violation, converged) = smo(&red, options, start);
    let b = bias(&red, &a, &grad);
    let values = red.collapse(&a);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("SMO produced non-finite dual variables".into()));
    }
    let objective = problem.objective(&values);
    let prox_objective = problem.prox_objective(&values);
    Ok(QpSolution {
        alpha: DualVariables {
            values,
            task: problem.task,
        },
        objective,
        prox_objective,
        bias: b,
        iterations,
        kkt_violation,
        converged,
    })
}

/// `max Σα − ½ Σ α_iα_j y_iy_j K_ij` over `0 ≤ α ≤ C`, `Σ α_i y_i = 0`.
pub fn solve_svc_dual(
    kernel: &SymmetricMatrix,
    labels: &[f64],
    c: f64,
    tol: f64,
    warm: Option<&DualVariables>,
) -> Result<QpSolution> {
    let problem = QpProblem::new(kernel, Task::Classification, labels, c, 0.0);
    solve(&problem, &SmoOptions::with_tol(tol), warm)
}

/// `max −½αᵀKα − ε‖α‖₁ + yᵀα` over `−C ≤ α ≤ C`, `Σ α_i = 0`.
pub fn solve_svr_dual(
    kernel: &SymmetricMatrix,
    targets: &[f64],
    c: f64,
    epsilon: f64,
    tol: f64,
    warm: Option<&DualVariables>,
) -> Result<QpSolution> {
    let problem = QpProblem::new(kernel, Task::Regression, targets, c, epsilon);
    solve(&problem, &SmoOptions::with_tol(tol), warm)
}

/// The dual objective minus `(1/τ)·½‖α − center‖²`, warm-started at `center`.
#[allow(clippy::too_many_arguments)]
pub fn solve_prox_qp(
    kernel: &SymmetricMatrix,
    task: Task,
    targets: &[f64],
    c: f64,
    epsilon: f64,
    tau: f64,
    center: &DualVariables,
    tol: f64,
) -> Result<QpSolution> {
    let problem = QpProblem::new(kernel, task, targets, c, epsilon).with_prox(tau, center);
    solve(&problem, &SmoOptions::with_tol(tol), Some(center))
}

/// Largest instance accepted by [`brute_force_qp`].
pub const BRUTE_FORCE_MAX: usize = 8;

/// Reference solver: accelerated projected gradient on the split form with an
/// exact Euclidean projection onto `{0 ≤ a ≤ C, sᵀa = 0}`.
///
/// Runs until the projected-gradient residual falls below `1e-9`. Intended
/// for checking [`solve`] on tiny instances only.
pub fn brute_force_qp(problem: &QpProblem) -> Result<QpSolution> {
    problem.validate()?;
    let m = problem.len();
    if m > BRUTE_FORCE_MAX {
        return Err(Error::Config(format!(
            "brute-force QP supports at most {BRUTE_FORCE_MAX} samples, got {m}"
        )));
    }
    // Independent construction of the split problem in minimization form.
    let split = problem.task == Task::Regression;
    let l = if split { 2 * m } else { m };
    let origin = |t: usize| t % m;
    let sign: Vec<f64> = (0..l)
        .map(|t| match problem.task {
            Task::Classification => problem.targets[t],
            Task::Regression => {
                if t < m {
                    1.0
                } else {
                    -1.0
                }
            }
        })
        .collect();
    let inv_tau = problem.prox.map_or(0.0, |p| 1.0 / p.tau);
    let mut hess = vec![0.0; l * l];
    for s in 0..l {
        for t in 0..l {
            let same = if origin(s) == origin(t) { inv_tau } else { 0.0 };
            hess[s * l + t] = sign[s] * sign[t] * (problem.kernel.get(origin(s), origin(t)) + same);
        }
    }
    let lin: Vec<f64> = (0..l)
        .map(|t| {
            let o = origin(t);
            let base = match problem.task {
                Task::Classification => -1.0,
                Task::Regression => problem.epsilon - sign[t] * problem.targets[o],
            };
            let centre = problem.prox.map_or(0.0, |p| p.center.values[o]);
            let dir = if split { sign[t] } else { 1.0 };
            base - dir * centre * inv_tau
        })
        .collect();
    let grad_at = |a: &[f64]| -> Vec<f64> {
        (0..l)
            .map(|s| lin[s] + (0..l).map(|t| hess[s * l + t] * a[t]).sum::<f64>())
            .collect()
    };
    let lipschitz = (0..l)
        .map(|s| (0..l).map(|t| hess[s * l + t].abs()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1e-12);
    let step = 1.0 / lipschitz;
    let c = problem.c;
    let project = |z: &[f64]| project_box_hyperplane(z, &sign, c);

    let mut a = vec![0.0; l];
    let mut y = a.clone();
    let mut t_k = 1.0f64;
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    while iterations < 5_000_000 {
        let g = grad_at(&y);
        let z: Vec<f64> = y.iter().zip(&g).map(|(v, gv)| v - step * gv).collect();
        let next = project(&z);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_k * t_k).sqrt());
        let mom = (t_k - 1.0) / t_next;
        let mut y_next: Vec<f64> = next.iter().zip(&a).map(|(n, o)| n + mom * (n - o)).collect();
        // adaptive restart when momentum points uphill
        let uphill: f64 = g.iter().zip(next.iter().zip(&a)).map(|(gv, (n, o))| gv * (n - o)).sum();
        if uphill > 0.0 {
            y_next = next.clone();
            t_k = 1.0;
        } else {
            t_k = t_next;
        }
        a = next;
        y = y_next;
        iterations += 1;
        if iterations % 16 == 0 {
            let ga = grad_at(&a);
            let za: Vec<f64> = a.iter().zip(&ga).map(|(v, gv)| v - step * gv).collect();
            let pa = project(&za);
            residual = a.iter().zip(&pa).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max) / step;
            if residual <= 1e-9 {
                break;
            }
        }
    }
    let values: Vec<f64> = if split {
        (0..m).map(|i| a[i] - a[i + m]).collect()
    } else {
        a
    };
    let objective = problem.objective(&values);
    let prox_objective = problem.prox_objective(&values);
    Ok(QpSolution {
        alpha: DualVariables {
            values,
            task: problem.task,
        },
        objective,
        prox_objective,
        bias: 0.0,
        iterations,
        kkt_violation: residual,
        converged: residual <= 1e-9,
    })
}

/// Euclidean projection onto `{0 ≤ a ≤ c, sᵀa = 0}` by bisection on the multiplier.
fn project_box_hyperplane(z: &[f64], sign: &[f64], c: f64) -> Vec<f64> {
    let at = |nu: f64| -> Vec<f64> {
        z.iter()
            .zip(sign)
            .map(|(zv, s)| (zv - nu * s).clamp(0.0, c))
            .collect()
    };
    let h = |nu: f64| -> f64 { at(nu).iter().zip(sign).map(|(a, s)| a * s).sum() };
    let span = z.iter().map(|v| v.abs()).fold(0.0, f64::max) + c + 1.0;
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * span {
            break;
        }
    }
    at(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eye(m: usize) -> SymmetricMatrix {
        SymmetricMatrix::identity(m)
    }

    #[test]
    fn svc_two_points() {
        let s = solve_svc_dual(&eye(2), &[1.0, -1.0], 1.0, 1e-10, None).unwrap();
        assert!((s.alpha.values[0] - 1.0).abs() < 1e-9);
        assert!((s.alpha.values[1] - 1.0).abs() < 1e-9);
        assert!((s.objective - 1.0).abs() < 1e-12);

        let s = solve_svc_dual(&eye(2), &[1.0, -1.0], 0.5, 1e-10, None).unwrap();
        assert_eq!(s.alpha.values, vec![0.5, 0.5]);
        assert!((s.objective - 0.75).abs() < 1e-12);
    }

    #[test]
    fn svr_two_points() {
        let s = solve_svr_dual(&eye(2), &[1.0, -1.0], 10.0, 0.0, 1e-10, None).unwrap();
        assert!((s.alpha.values[0] - 1.0).abs() < 1e-9);
        assert!((s.alpha.values[1] + 1.0).abs() < 1e-9);
        assert!((s.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn svr_wide_tube_is_zero() {
        let s = solve_svr_dual(&eye(3), &[0.1, 0.2, 0.3], 1.0, 1.0, 1e-10, None).unwrap();
        assert!(s.alpha.values.iter().all(|&a| a == 0.0));
        assert_eq!(s.objective, 0.0);
    }

    #[test]
    fn single_class_rejected() {
        let e = solve_svc_dual(&eye(2), &[1.0, 1.0], 1.0, 1e-6, None).unwrap_err();
        assert!(matches!(e, Error::Data(_)));
        assert!(solve_svc_dual(&eye(2), &[1.0, 0.5], 1.0, 1e-6, None).is_err());
    }

    #[test]
    fn non_finite_kernel_rejected() {
        let mut k = eye(2);
        k.set(0, 1, f64::INFINITY);
        assert!(matches!(
            solve_svc_dual(&k, &[1.0, -1.0], 1.0, 1e-6, None),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn tiny_tau_stays_at_center() {
        let center = DualVariables {
            values: vec![0.3, 0.3],
            task: Task::Classification,
        };
        let s = solve_prox_qp(&eye(2), Task::Classification, &[1.0, -1.0], 1.0, 0.0, 1e-9, &center, 1e-12).unwrap();
        assert!((s.alpha.values[0] - 0.3).abs() < 1e-6);
    }

    #[test]
    fn projection_is_feasible() {
        let p = project_box_hyperplane(&[2.0, -3.0, 0.5], &[1.0, 1.0, -1.0], 1.0);
        let eq: f64 = p[0] + p[1] - p[2];
        assert!(eq.abs() < 1e-12);
        assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
