//! Frank-Wolfe kernel learning: alternate the SVM dual, the eigenvector
//! direction and a grid line search until the duality gap closes.

use std::time::Instant;

use rayon::prelude::*;

use crate::eig::{extremal_eigpair, Extremal, TraceSimplexMatrix};
use crate::error::Result;
use crate::matrix::SymmetricMatrix;
use crate::problem::{elapsed_ms, EigenDirection, GklProblem, IterationRecord, TrainResult};
use crate::qp::{DualVariables, QpSolution};

/// `λ(e⊙α, P) = −½ βᵀ K(P) β` with `β = e⊙α`.
pub fn objective_lambda(problem: &GklProblem, alpha: &DualVariables, p: &TraceSimplexMatrix) -> Result<f64> {
    let beta = alpha.weights(problem.targets());
    let k = problem.kernel_matrix(p)?;
    Ok(-0.5 * k.quad_form(&beta))
}

/// The same value through the basis: `−½ ⟨D(e⊙α), P⟩`.
pub fn objective_lambda_via_d(problem: &GklProblem, alpha: &DualVariables, p: &TraceSimplexMatrix) -> Result<f64> {
    Ok(-0.5 * problem.d_matrix(alpha)?.inner(p.matrix()))
}

/// OPT_A(P): the SVM dual at a fixed kernel parameter.
///
/// Returns the solution together with `K(P)` so callers can reuse it.
pub fn opt_a(
    problem: &GklProblem,
    p: &TraceSimplexMatrix,
    warm: Option<&DualVariables>,
    tol: f64,
) -> Result<(QpSolution, SymmetricMatrix)> {
    let k = problem.kernel_matrix(p)?;
    let sol = problem.solve_dual(&k, tol, warm)?;
    Ok((sol, k))
}

/// Frank-Wolfe direction and dual bound for fixed `α`.
#[derive(Clone, Debug)]
pub struct OptP {
    /// `S = n_P v vᵀ`.
    pub direction: TraceSimplexMatrix,
    /// `κ(α) − ½⟨D, S⟩`; a lower bound on the saddle value.
    pub dual: f64,
    /// Eigenvalue of `D` belonging to `v`.
    pub eigenvalue: f64,
    pub d: SymmetricMatrix,
}

/// OPT_P(α): minimizes `λ(e⊙α, P)` over the trace simplex.
///
/// Since `λ = −½⟨D, P⟩`, the minimizer puts all of its trace on the
/// eigenvector of `D` with the largest eigenvalue.
pub fn opt_p(problem: &GklProblem, alpha: &DualVariables) -> Result<OptP> {
    let d = problem.d_matrix(alpha)?;
    let which = match problem.config().direction {
        EigenDirection::Largest => Extremal::Max,
        EigenDirection::Smallest => Extremal::Min,
    };
    let (eigenvalue, v) = extremal_eigpair(&d, which)?;
    let direction = TraceSimplexMatrix::rank_one(&v)?;
    let dual = problem.kappa(alpha) - 0.5 * d.inner(direction.matrix());
    Ok(OptP {
        direction,
        dual,
        eigenvalue,
        d,
    })
}

/// Outcome of a line search.
#[derive(Clone, Debug)]
pub struct LineSearch {
    pub gamma: f64,
    pub solution: QpSolution,
    /// `K(P_k + γ(S − P_k))`.
    pub kernel: SymmetricMatrix,
    /// Whether the grid produced a lower primal than the current iterate.
    pub improved: bool,
}

/// Classical step `2/(k+2)`.
pub fn classical_step(k: usize) -> f64 {
    2.0 / (k as f64 + 2.0)
}

/// Grid search over `γ ∈ {1/n_γ, …, 1} ∪ {2/(k+2)}`.
///
/// Uses linearity of `K` in `P` so every candidate kernel is a blend of
/// `K(P_k)` and `K(S)`. Candidates run in parallel, each warm-started at
/// `α_k`. The least primal wins if it beats `primal_k`; otherwise the
/// classical step is taken.
#[allow(clippy::too_many_arguments)]
pub fn line_search(
    problem: &GklProblem,
    kernel_k: &SymmetricMatrix,
    primal_k: f64,
    direction: &TraceSimplexMatrix,
    alpha_k: &DualVariables,
    k: usize,
    tol: f64,
) -> Result<LineSearch> {
    let kernel_s = problem.kernel_matrix(direction)?;
    let n = problem.config().n_gamma;
    let classical = classical_step(k);
    let mut gammas: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
    if !gammas.iter().any(|g| (g - classical).abs() < 1e-15) {
        gammas.push(classical);
    }
    let results: Vec<Result<(f64, QpSolution, SymmetricMatrix)>> = gammas
        .par_iter()
        .map(|&g| {
            let kernel = kernel_k.lincomb(1.0 - g, g, &kernel_s);
            let sol = problem.solve_dual(&kernel, tol, Some(alpha_k))?;
            Ok((g, sol, kernel))
        })
        .collect();
    let mut candidates = Vec::with_capacity(results.len());
    for r in results {
        candidates.push(r?);
    }
    let best = candidates
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.objective.total_cmp(&b.1 .1.objective).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .expect("at least one candidate");
    let improved = candidates[best].1.objective < primal_k;
    let pick = if improved {
        best
    } else {
        candidates
            .iter()
            .position(|c| (c.0 - classical).abs() < 1e-15)
            .expect("classical step is always a candidate")
    };
    let (gamma, solution, kernel) = candidates.swap_remove(pick);
    Ok(LineSearch {
        gamma,
        solution,
        kernel,
        improved,
    })
}

/// Loosest inner SMO tolerance used early in a run.
pub const MAX_INNER_TOL: f64 = 1e-3;

/// Inner SMO tolerance for the next iteration: one hundredth of the relative
/// gap, kept within `[qp_tol, MAX_INNER_TOL]`.
pub(crate) fn inner_tolerance(qp_tol: f64, gap: f64, primal: f64) -> f64 {
    let rel = 0.01 * gap / (1.0 + primal.abs());
    if rel.is_finite() {
        rel.clamp(qp_tol, MAX_INNER_TOL.max(qp_tol))
    } else {
        qp_tol
    }
}

pub(crate) fn run_fw(
    problem: &GklProblem,
    p0: TraceSimplexMatrix,
    warm: Option<&DualVariables>,
    tol: f64,
    maxit: usize,
) -> Result<TrainResult> {
    let qp_tol = problem.config().qp_tol;
    let t = Instant::now();
    let (mut sol, mut kernel) = opt_a(problem, &p0, warm, qp_tol)?;
    let mut t_opt_a = elapsed_ms(t);
    let mut p = p0;

    let mut trace = Vec::new();
    let mut best: Option<(TraceSimplexMatrix, QpSolution)> = None;
    let mut best_dual = f64::NEG_INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    for k in 0..=maxit {
        let t = Instant::now();
        let step = opt_p(problem, &sol.alpha)?;
        let t_opt_p = elapsed_ms(t);
        let primal = sol.objective;
        let gap = primal - step.dual;
        let mut record = IterationRecord {
            k,
            primal: Some(primal),
            dual: Some(step.dual),
            gap: Some(gap),
            t_opt_a_ms: t_opt_a,
            t_opt_p_ms: t_opt_p,
            ..Default::default()
        };
        best_dual = best_dual.max(step.dual);
        if best.as_ref().is_none_or(|b| primal < b.1.objective) {
            best = Some((p.clone(), sol.clone()));
        }
        if gap < tol {
            converged = true;
            trace.push(record);
            break;
        }
        if k == maxit {
            trace.push(record);
            break;
        }

        let t = Instant::now();
        let ls = line_search(
            problem,
            &kernel,
            primal,
            &step.direction,
            &sol.alpha,
            k,
            inner_tolerance(qp_tol, gap, primal),
        )?;
        record.t_linesearch_ms = elapsed_ms(t);
        record.gamma = Some(ls.gamma);
        trace.push(record);

        p = p.convex_combination(&step.direction, ls.gamma);
        sol = ls.solution;
        kernel = ls.kernel;
        t_opt_a = 0.0;
        iterations += 1;
    }

    // Every dual value bounds the saddle value from below, so the best pair certifies the gap.
    let (p, sol) = best.expect("at least one iterate");
    let gap = sol.objective - best_dual;
    Ok(TrainResult {
        p,
        primal: sol.objective,
        bias: sol.bias,
        alpha: sol.alpha,
        gap,
        converged,
        iterations,
        trace,
    })
}

/// Frank-Wolfe from `P₀ = I` until the gap drops below `tol` or `maxit`
/// steps are taken. Returns the iterate with the least primal value.
pub fn train_fw(problem: &GklProblem) -> Result<TrainResult> {
    let cfg = problem.config();
    let p0 = TraceSimplexMatrix::identity(problem.n_p());
    run_fw(problem, p0, None, cfg.tol, cfg.maxit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eig::jacobi_eig;
    use crate::problem::{TrainConfig, TrainData};
    use crate::qp::Task;
    use crate::synth::checkerboard;

    fn problem(features: Vec<Vec<f64>>, targets: Vec<f64>, cfg: TrainConfig) -> GklProblem {
        let data = TrainData::new(features, targets, Task::Classification).unwrap();
        GklProblem::new(&data, cfg).unwrap()
    }

    fn small() -> GklProblem {
        let x = vec![vec![0.1, 0.2], vec![0.8, 0.3], vec![0.4, 0.9], vec![0.7, 0.7]];
        problem(x, vec![1.0, -1.0, -1.0, 1.0], TrainConfig::default())
    }

    #[test]
    fn lambda_paths_agree() {
        let pr = small();
        let alpha = DualVariables {
            values: vec![0.3, 0.5, 0.1, 0.3],
            task: Task::Classification,
        };
        let p = TraceSimplexMatrix::identity(pr.n_p()).convex_combination(
            &TraceSimplexMatrix::rank_one(&(0..pr.n_p()).map(|i| 1.0 + i as f64).collect::<Vec<_>>()).unwrap(),
            0.3,
        );
        let a = objective_lambda(&pr, &alpha, &p).unwrap();
        let b = objective_lambda_via_d(&pr, &alpha, &p).unwrap();
        assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{a} vs {b}");
        assert!(a < 0.0);

        let zero = DualVariables::zeros(4, Task::Classification);
        assert_eq!(objective_lambda(&pr, &zero, &p).unwrap(), 0.0);
    }

    #[test]
    fn zero_alpha_gives_canonical_direction() {
        let pr = small();
        let step = opt_p(&pr, &DualVariables::zeros(4, Task::Classification)).unwrap();
        assert_eq!(step.dual, 0.0);
        let n_p = pr.n_p() as f64;
        assert!((step.direction.matrix().get(0, 0) - n_p).abs() < 1e-12);
    }

    #[test]
    fn single_point_d_is_the_basis_gram_matrix() {
        let pr = problem(vec![vec![0.3, 0.6]], vec![1.0], TrainConfig::default());
        let x = [0.3, 0.6];
        let d = pr.context().assemble_d(&[2.0]).unwrap();
        let n_p = pr.n_p();
        for i in 0..n_p {
            for j in 0..n_p {
                let g = pr.basis().eval_g(i, j, &x, &x).unwrap();
                assert!((d.get(i, j) - 4.0 * g).abs() <= 1e-12 * (1.0 + g.abs()));
            }
        }
        // A Gram matrix of distinct basis functions, so not rank one.
        let eig = jacobi_eig(&d).unwrap();
        assert!(eig.eigenvalues[1] > 1e-8 * eig.eigenvalues[0]);
        let (lmax, v) = extremal_eigpair(&d, Extremal::Max).unwrap();
        let s = TraceSimplexMatrix::rank_one(&v).unwrap();
        assert!((d.inner(s.matrix()) - n_p as f64 * lmax).abs() <= 1e-9 * lmax * n_p as f64);
    }

    #[test]
    fn zero_direction_leaves_primal_unchanged() {
        let pr = small();
        let p = TraceSimplexMatrix::identity(pr.n_p());
        let (sol, k) = opt_a(&pr, &p, None, 1e-10).unwrap();
        let ls = line_search(&pr, &k, sol.objective, &p, &sol.alpha, 0, 1e-10).unwrap();
        assert!((ls.solution.objective - sol.objective).abs() <= 1e-9 * (1.0 + sol.objective.abs()));
    }

    #[test]
    fn line_search_beats_classical_step() {
        let pr = small();
        let p = TraceSimplexMatrix::identity(pr.n_p());
        let (sol, k) = opt_a(&pr, &p, None, 1e-10).unwrap();
        let s = opt_p(&pr, &sol.alpha).unwrap().direction;
        for it in [0, 3, 10] {
            let ls = line_search(&pr, &k, sol.objective, &s, &sol.alpha, it, 1e-10).unwrap();
            let classical = p.convex_combination(&s, classical_step(it));
            let (at_classical, _) = opt_a(&pr, &classical, Some(&sol.alpha), 1e-10).unwrap();
            assert!(ls.solution.objective <= at_classical.objective + 1e-9);
        }
    }

    #[test]
    fn two_separable_points_converge_fast() {
        let cfg = TrainConfig {
            tol: 1e-6,
            maxit: 5,
            qp_tol: 1e-10,
            ..TrainConfig::default()
        };
        let pr = problem(vec![vec![0.2, 0.2], vec![0.8, 0.9]], vec![1.0, -1.0], cfg);
        let r = train_fw(&pr).unwrap();
        assert!(r.converged && r.gap < 1e-6 && r.iterations <= 5, "gap {} after {}", r.gap, r.iterations);
    }

    #[test]
    fn checkerboard_fits_training_set() {
        let s = checkerboard(200, 4, 3);
        let cfg = TrainConfig {
            c: 10.0,
            maxit: 200,
            ..TrainConfig::default()
        };
        let pr = problem(s.features.clone(), s.targets.clone(), cfg);
        let r = train_fw(&pr).unwrap();
        assert!(r.gap < 1e-2 && r.iterations <= 200, "gap {} after {}", r.gap, r.iterations);
        let beta = r.alpha.weights(pr.targets());
        let k = pr.kernel_matrix(&r.p).unwrap();
        let f = k.mul_vec(&beta);
        let correct = f
            .iter()
            .zip(&s.targets)
            .filter(|(v, y)| (**v - r.bias >= 0.0) == (**y > 0.0))
            .count();
        assert!(correct as f64 >= 0.95 * s.len() as f64, "{correct} of {}", s.len());
        for rec in &r.trace {
            if let (Some(p), Some(g)) = (rec.primal, rec.gap) {
                assert!(g >= -1e-8 * (1.0 + p.abs()));
            }
        }
    }
}
