//! Accelerated primal-dual kernel learning and the Frank-Wolfe → APD hybrid.
//!
//! The kernel parameter takes projected ascent steps on `½D(e⊙α)` with
//! extrapolation, while `α` takes proximal steps on the SVM dual. Both
//! Bregman distances are half squared Euclidean norms.

use std::time::Instant;

use crate::eig::{default_projection_eps, extremal_eigpair, project_trace_simplex, Extremal, TraceSimplexMatrix};
use crate::error::{Error, Result};
use crate::fw::{opt_a, opt_p, run_fw};
use crate::matrix::SymmetricMatrix;
use crate::problem::{elapsed_ms, GklProblem, IterationRecord, StepBound, TrainResult};
use crate::qp::{self, DualVariables, QpSolution};

/// Step-size constants for APD.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApdConstants {
    pub l_aa: f64,
    pub l_ap: f64,
    pub tau0: f64,
    pub sigma0: f64,
    pub mu: f64,
    pub c_scale: f64,
}

/// Step constants: `L_αα = (n_P/2) Σ D_ij(e_⋆)²` (or the trace bound, if
/// configured), `L_αP = (c/n_P) L_αα`, `τ₀ = 1/(3 L_αα)`,
/// `σ₀ = L_αα / (2 L_αP²)`.
///
/// Unless configured, `μ = 10⁻⁶ · trace K(P₀) / m`.
pub fn compute_constants(problem: &GklProblem, p0: &TraceSimplexMatrix) -> Result<ApdConstants> {
    let np = problem.n_p() as f64;
    let cfg = problem.config();
    let l_aa = match cfg.step_bound {
        StepBound::Frobenius => {
            let d = problem.context().assemble_d(&problem.e_star())?;
            lipschitz_frobenius(np, &d)
        }
        StepBound::Trace => {
            let ctx = problem.context();
            let mut total = 0.0;
            for k in 0..ctx.len() {
                total += extremal_eigpair(&ctx.diagonal_block(k), Extremal::Max)?.0;
            }
            np * total
        }
    };
    let c_scale = cfg.c_scale.unwrap_or(np);
    let mu = match cfg.mu {
        Some(mu) => mu,
        None => 1e-6 * problem.kernel_matrix(p0)?.trace() / problem.len() as f64,
    };
    constants_from(np, l_aa, c_scale, mu)
}

/// `(n_P/2) Σ_ij D_ij²`.
pub fn lipschitz_frobenius(n_p: f64, d: &SymmetricMatrix) -> f64 {
    0.5 * n_p * d.as_slice().iter().map(|v| v * v).sum::<f64>()
}

/// Derives the step constants from `L_αα`.
pub fn constants_from(n_p: f64, l_aa: f64, c_scale: f64, mu: f64) -> Result<ApdConstants> {
    if !(l_aa > 0.0) || !l_aa.is_finite() {
        return Err(Error::Numerical(
            "D(e) vanishes; the data give no curvature for step sizes".into(),
        ));
    }
    if !(mu > 0.0) {
        return Err(Error::Numerical(format!("strong-convexity modulus must be positive, got {mu}")));
    }
    let l_ap = c_scale / n_p * l_aa;
    Ok(ApdConstants {
        l_aa,
        l_ap,
        tau0: 1.0 / (3.0 * l_aa),
        sigma0: l_aa / (2.0 * l_ap * l_ap),
        mu,
        c_scale,
    })
}

/// Iterate of the primal-dual method.
#[derive(Clone, Debug)]
pub struct ApdState {
    pub p: TraceSimplexMatrix,
    pub p_prev: TraceSimplexMatrix,
    pub alpha: DualVariables,
    /// `½ D(e⊙α_k)`.
    pub x: SymmetricMatrix,
    pub x_prev: SymmetricMatrix,
    pub gamma: f64,
    pub tau: f64,
    /// `σ_{k−1}`.
    pub sigma_prev: f64,
    pub k: usize,
}

impl ApdState {
    /// `(τ₋₁, σ₋₁) = (τ₀, σ₀)`, `γ₀ = σ₀/τ₀`, `x₋₁ = x₀`.
    pub fn initial(problem: &GklProblem, p: TraceSimplexMatrix, alpha: DualVariables, consts: &ApdConstants) -> Result<Self> {
        let x = problem.d_matrix(&alpha)?.scaled(0.5);
        Ok(ApdState {
            p_prev: p.clone(),
            p,
            alpha,
            x_prev: x.clone(),
            x,
            gamma: consts.sigma0 / consts.tau0,
            tau: consts.tau0,
            sigma_prev: consts.sigma0,
            k: 0,
        })
    }
}

/// Diagnostics from a single step.
#[derive(Clone, Copy, Debug)]
pub struct ApdStepInfo {
    pub tau: f64,
    pub sigma: f64,
    pub theta: f64,
    /// `L(P_{k+1}, α_k) − L(P_k, α_{k+1})`.
    pub l_difference: f64,
    pub prox_iterations: usize,
}

/// `L(P, α) = κ(α) − ⟨x, P⟩` with `x = ½D(e⊙α)`.
fn lagrangian(problem: &GklProblem, alpha: &DualVariables, x: &SymmetricMatrix, p: &TraceSimplexMatrix) -> f64 {
    problem.kappa(alpha) - x.inner(p.matrix())
}

/// One APD iteration.
pub fn apd_step(problem: &GklProblem, state: &ApdState, consts: &ApdConstants, qp_tol: f64) -> Result<(ApdState, ApdStepInfo)> {
    let tau = state.tau;
    let sigma = state.gamma * tau;
    let theta = state.sigma_prev / sigma;
    let extrapolated = state.x.lincomb(1.0 + theta, -theta, &state.x_prev);
    let mut target = state.p.matrix().clone();
    target.add_scaled(sigma, &extrapolated);
    let n_p = problem.n_p() as f64;
    let p_next = project_trace_simplex(&target, n_p, default_projection_eps(n_p))?.matrix;

    let kernel = problem.kernel_matrix(&p_next)?;
    let prox = problem.qp_problem(&kernel).with_prox(tau, &state.alpha);
    let sol = qp::solve(&prox, &problem.smo_options(qp_tol), Some(&state.alpha))?;
    let alpha_next = sol.alpha;
    let x_next = problem.d_matrix(&alpha_next)?.scaled(0.5);

    let l_difference = lagrangian(problem, &state.alpha, &state.x, &p_next)
        - lagrangian(problem, &alpha_next, &x_next, &state.p);

    let gamma_next = state.gamma * (1.0 + consts.mu * tau);
    let tau_next = tau * (state.gamma / gamma_next).sqrt();
    Ok((
        ApdState {
            p_prev: state.p.clone(),
            p: p_next,
            alpha: alpha_next,
            x_prev: state.x.clone(),
            x: x_next,
            gamma: gamma_next,
            tau: tau_next,
            sigma_prev: sigma,
            k: state.k + 1,
        },
        ApdStepInfo {
            tau,
            sigma,
            theta,
            l_difference,
            prox_iterations: sol.iterations,
        },
    ))
}

struct Checkpoint {
    primal: f64,
    dual: f64,
    solution: QpSolution,
    t_opt_a_ms: f64,
    t_opt_p_ms: f64,
}

/// Gap at `P_k`: OPT_A(P_k) minus the eigen dual at its maximizer.
fn checkpoint(problem: &GklProblem, p: &TraceSimplexMatrix, warm: &DualVariables) -> Result<Checkpoint> {
    let t = Instant::now();
    let (solution, _) = opt_a(problem, p, Some(warm), problem.config().qp_tol)?;
    let t_opt_a_ms = elapsed_ms(t);
    let t = Instant::now();
    let dual = opt_p(problem, &solution.alpha)?.dual;
    Ok(Checkpoint {
        primal: solution.objective,
        dual,
        solution,
        t_opt_a_ms,
        t_opt_p_ms: elapsed_ms(t),
    })
}

pub(crate) fn run_apd(
    problem: &GklProblem,
    p0: TraceSimplexMatrix,
    alpha0: Option<DualVariables>,
    tol: f64,
    maxit: usize,
    k_offset: usize,
) -> Result<TrainResult> {
    let cfg = problem.config();
    let consts = compute_constants(problem, &p0)?;
    let warm = alpha0.unwrap_or_else(|| DualVariables::zeros(problem.len(), problem.task()));
    let first = checkpoint(problem, &p0, &warm)?;
    let alpha_init = first.solution.alpha.clone();
    let mut state = ApdState::initial(problem, p0, alpha_init, &consts)?;

    let mut trace = Vec::new();
    let mut best_p = state.p.clone();
    let mut best = first.solution.clone();
    let mut best_dual = first.dual;
    let mut pending = Some(first);
    let mut converged = false;
    loop {
        let k = state.k;
        let check = match pending.take() {
            Some(c) => Some(c),
            None if k % cfg.check_interval == 0 || k == maxit => Some(checkpoint(problem, &state.p, &state.alpha)?),
            None => None,
        };
        let mut record = IterationRecord {
            k: k + k_offset,
            ..Default::default()
        };
        if let Some(c) = check {
            let gap = c.primal - c.dual;
            record.primal = Some(c.primal);
            record.dual = Some(c.dual);
            record.gap = Some(gap);
            record.t_opt_a_ms = c.t_opt_a_ms;
            record.t_opt_p_ms = c.t_opt_p_ms;
            best_dual = best_dual.max(c.dual);
            if c.primal < best.objective {
                best = c.solution;
                best_p = state.p.clone();
            }
            if gap < tol {
                converged = true;
                trace.push(record);
                break;
            }
        }
        if k >= maxit {
            trace.push(record);
            break;
        }
        let t = Instant::now();
        let (next, info) = apd_step(problem, &state, &consts, cfg.qp_tol)?;
        record.t_linesearch_ms = elapsed_ms(t);
        record.tau = Some(info.tau);
        record.sigma = Some(info.sigma);
        record.theta = Some(info.theta);
        record.l_difference = Some(info.l_difference);
        trace.push(record);
        state = next;
    }
    Ok(TrainResult {
        p: best_p,
        primal: best.objective,
        bias: best.bias,
        alpha: best.alpha,
        gap: best.objective - best_dual,
        converged,
        iterations: state.k,
        trace,
    })
}

/// APD from `init` (or `P₀ = I`). The gap is evaluated every
/// `check_interval` iterations; the best checked iterate is returned with
/// `α = OPT_A(P)`.
pub fn train_apd(problem: &GklProblem, init: Option<(TraceSimplexMatrix, DualVariables)>) -> Result<TrainResult> {
    let cfg = problem.config();
    let (p0, alpha0) = match init {
        Some((p, a)) => (p, Some(a)),
        None => (TraceSimplexMatrix::identity(problem.n_p()), None),
    };
    run_apd(problem, p0, alpha0, cfg.tol, cfg.maxit, 0)
}

/// Frank-Wolfe down to the switch tolerance, then APD to the final
/// tolerance, finishing with OPT_A at the returned parameter.
pub fn train_hybrid(problem: &GklProblem) -> Result<TrainResult> {
    let cfg = problem.config();
    let switch = cfg.switch_tol.max(cfg.tol);
    let fw = run_fw(problem, TraceSimplexMatrix::identity(problem.n_p()), None, switch, cfg.maxit)?;
    if fw.gap < cfg.tol {
        return Ok(fw);
    }
    let offset = fw.trace.last().map_or(0, |r| r.k + 1);
    let apd = run_apd(problem, fw.p.clone(), Some(fw.alpha.clone()), cfg.tol, cfg.maxit, offset)?;
    let (final_sol, _) = opt_a(problem, &apd.p, Some(&apd.alpha), cfg.qp_tol)?;
    let final_dual = opt_p(problem, &final_sol.alpha)?.dual;
    let best_dual = final_dual.max(apd.primal - apd.gap).max(fw.primal - fw.gap);
    let iterations = fw.iterations + apd.iterations;
    let mut trace = fw.trace;
    trace.extend(apd.trace);
    let (p, primal, bias, alpha) = if final_sol.objective <= fw.primal {
        (apd.p, final_sol.objective, final_sol.bias, final_sol.alpha)
    } else {
        (fw.p, fw.primal, fw.bias, fw.alpha)
    };
    let gap = primal - best_dual;
    Ok(TrainResult {
        p,
        alpha,
        bias,
        primal,
        gap,
        converged: gap < cfg.tol,
        iterations,
        trace,
    })
}

/// Dispatches on the configured algorithm.
pub fn train(problem: &GklProblem) -> Result<TrainResult> {
    use crate::problem::Algorithm;
    match problem.config().algorithm {
        Algorithm::FrankWolfe => crate::fw::train_fw(problem),
        Algorithm::PrimalDual => train_apd(problem, None),
        Algorithm::Hybrid => train_hybrid(problem),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fw::train_fw;
    use crate::problem::{Algorithm, TrainConfig, TrainData};
    use crate::qp::Task;
    use crate::synth::cancer_like;

    fn problem(features: Vec<Vec<f64>>, targets: Vec<f64>, cfg: TrainConfig) -> GklProblem {
        let data = TrainData::new(features, targets, Task::Classification).unwrap();
        GklProblem::new(&data, cfg).unwrap()
    }

    fn separable(cfg: TrainConfig) -> GklProblem {
        let x = vec![vec![0.1, 0.2], vec![0.2, 0.1], vec![0.8, 0.9], vec![0.9, 0.7]];
        problem(x, vec![1.0, 1.0, -1.0, -1.0], cfg)
    }

    #[test]
    fn lipschitz_bound_formula() {
        let d = SymmetricMatrix::from_diagonal(&[3.0]);
        assert_eq!(lipschitz_frobenius(4.0, &d), 0.5 * 4.0 * 9.0);
        let d = SymmetricMatrix::from_upper_fn(3, |i, j| 1.0 + i as f64 - 0.5 * j as f64);
        let doubled = d.scaled(2.0);
        let ratio = lipschitz_frobenius(6.0, &doubled) / lipschitz_frobenius(6.0, &d);
        assert!((ratio - 4.0).abs() < 1e-12);
    }

    #[test]
    fn constants_follow_definitions() {
        let c = constants_from(6.0, 2.5, 6.0, 1e-3).unwrap();
        assert_eq!(c.l_ap, c.l_aa);
        assert!((c.tau0 - 1.0 / 7.5).abs() < 1e-15);
        assert!((c.sigma0 - 2.5 / (2.0 * 2.5 * 2.5)).abs() < 1e-15);
        assert!(constants_from(6.0, 2.5, 6.0, 0.0).is_err());
        assert!(constants_from(6.0, 0.0, 6.0, 1e-3).is_err());
    }

    #[test]
    fn cancelling_points_are_degenerate() {
        let pr = problem(vec![vec![0.4, 0.4], vec![0.4, 0.4]], vec![1.0, -1.0], TrainConfig::default());
        let err = compute_constants(&pr, &TraceSimplexMatrix::identity(pr.n_p())).unwrap_err();
        assert!(err.is_numerical(), "{err}");
    }

    #[test]
    fn first_step_and_constant_steps_without_strong_convexity() {
        let pr = separable(TrainConfig::default());
        let p0 = TraceSimplexMatrix::identity(pr.n_p());
        let mut consts = compute_constants(&pr, &p0).unwrap();
        consts.mu = 1e-300;
        let (sol, _) = crate::fw::opt_a(&pr, &p0, None, 1e-10).unwrap();
        let mut state = ApdState::initial(&pr, p0, sol.alpha, &consts).unwrap();
        for k in 0..5 {
            let (next, info) = apd_step(&pr, &state, &consts, 1e-10).unwrap();
            if k == 0 {
                assert_eq!(info.theta, 1.0);
            }
            assert!((info.tau - consts.tau0).abs() <= 1e-12 * consts.tau0);
            assert!((info.sigma - consts.sigma0).abs() <= 1e-12 * consts.sigma0);
            assert!(TraceSimplexMatrix::new(next.p.matrix().clone()).is_ok());
            assert!(next.alpha.is_feasible(pr.targets(), pr.config().c, 1e-9));
            state = next;
        }
    }

    #[test]
    fn apd_matches_frank_wolfe_on_separable_data() {
        // Narrow margin keeps the optimal α near the box bound, where the
        // step-size constants are not overly conservative.
        let x = vec![vec![0.45, 0.5], vec![0.4, 0.45], vec![0.55, 0.5], vec![0.6, 0.55]];
        let cfg = TrainConfig {
            c: 10.0,
            tol: 1e-6,
            maxit: 100_000,
            qp_tol: 1e-10,
            ..TrainConfig::default()
        };
        let pr = problem(x, vec![1.0, 1.0, -1.0, -1.0], cfg);
        let fw = train_fw(&pr).unwrap();
        let apd = train_apd(&pr, None).unwrap();
        assert!((fw.primal - apd.primal).abs() <= 1e-4, "fw {} apd {}", fw.primal, apd.primal);
        for rec in &apd.trace {
            if let (Some(p), Some(g)) = (rec.primal, rec.gap) {
                assert!(g >= -1e-8 * (1.0 + p.abs()));
            }
        }
    }

    #[test]
    fn hybrid_without_second_phase_is_frank_wolfe() {
        let cfg = TrainConfig {
            tol: 1e-3,
            switch_tol: 1e-3,
            algorithm: Algorithm::Hybrid,
            ..TrainConfig::default()
        };
        let fw = train_fw(&separable(cfg.clone())).unwrap();
        let hy = train(&separable(cfg)).unwrap();
        assert_eq!(fw.primal, hy.primal);
        assert_eq!(fw.iterations, hy.iterations);
    }

    #[test]
    fn hybrid_reaches_tight_tolerance() {
        let s = cancer_like(80, 2);
        let cfg = TrainConfig {
            tol: 1e-5,
            maxit: 1000,
            algorithm: Algorithm::Hybrid,
            ..TrainConfig::default()
        };
        let pr = problem(s.features, s.targets, cfg);
        let hy = train_hybrid(&pr).unwrap();
        assert!(hy.gap <= 1e-5, "gap {}", hy.gap);
        let switch_primal = hy.trace.iter().filter_map(|r| r.primal).next().unwrap();
        assert!(hy.primal <= switch_primal);
    }
}
