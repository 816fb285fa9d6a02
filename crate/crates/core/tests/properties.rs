use proptest::prelude::*;
use tessellate::apd::{apd_step, compute_constants, ApdState};
use tessellate::bench::random_parameter;
use tessellate::data::{fold_assignment, format_sparse_svm, parse_sparse_svm_str, scale_apply, scale_fit, Dataset};
use tessellate::eig::{default_projection_eps, jacobi_eig, project_trace_simplex, TraceSimplexMatrix};
use tessellate::fw::{opt_a, opt_p, train_fw};
use tessellate::kernel::{
    assemble_d, kernel_matrix, quadrature_oracle_g, relative_error, TkBasis, TkBasisConfig,
};
use tessellate::model::{SupportVector, TkPredictor};
use tessellate::data::{ScalerState, TargetEncoding};
use tessellate::qp::{brute_force_qp, solve, DualVariables, QpProblem, SmoOptions, Task};
use tessellate::{GklProblem, SymmetricMatrix, TrainConfig, TrainData};

fn unit_point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..=1.0, n)
}

fn points(n: usize, m: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(unit_point(n), m)
}

fn symmetric(order: usize) -> impl Strategy<Value = SymmetricMatrix> {
    prop::collection::vec(-3.0f64..3.0, order * order).prop_map(move |v| {
        SymmetricMatrix::from_upper_fn(order, |i, j| 0.5 * (v[i * order + j] + v[j * order + i]))
    })
}

/// `AᵀA + 0.01 I` from a random square `A`.
fn psd_kernel(m: usize) -> impl Strategy<Value = SymmetricMatrix> {
    prop::collection::vec(-1.0f64..1.0, m * m).prop_map(move |a| {
        SymmetricMatrix::from_upper_fn(m, |i, j| {
            let dot: f64 = (0..m).map(|k| a[k * m + i] * a[k * m + j]).sum();
            dot + if i == j { 0.01 } else { 0.0 }
        })
    })
}

fn labels(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop::bool::ANY, m).prop_map(|b| {
        let mut y: Vec<f64> = b.into_iter().map(|p| if p { 1.0 } else { -1.0 }).collect();
        y[0] = 1.0;
        y[1] = -1.0;
        y
    })
}

fn small_problem(features: Vec<Vec<f64>>, targets: Vec<f64>, task: Task, c: f64) -> GklProblem {
    let data = TrainData::new(features, targets, task).unwrap();
    GklProblem::new(&data, TrainConfig { c, ..TrainConfig::default() }).unwrap()
}

fn classification_set(m: std::ops::Range<usize>) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    m.prop_flat_map(|m| (points(2, m..m + 1), labels(m)))
}

/// A point of `{0 ≤ α ≤ C, Σ αy = 0}`: balance the two classes' sums.
fn feasible_alpha(raw: &[f64], y: &[f64], c: f64) -> DualVariables {
    let pos: f64 = raw.iter().zip(y).filter(|(_, &t)| t > 0.0).map(|(a, _)| a).sum();
    let neg: f64 = raw.iter().zip(y).filter(|(_, &t)| t < 0.0).map(|(a, _)| a).sum();
    let target = pos.min(neg);
    let values = raw
        .iter()
        .zip(y)
        .map(|(a, &t)| {
            let side = if t > 0.0 { pos } else { neg };
            if side > 0.0 { c * a * target / side } else { 0.0 }
        })
        .collect();
    DualVariables {
        values,
        task: Task::Classification,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn basis_matches_exact_integration(
        n in 1usize..=3,
        d in 0u32..=2,
        pick in (0usize..1000, 0usize..1000),
        x in unit_point(3),
        y in unit_point(3),
    ) {
        let basis = TkBasis::new(TkBasisConfig::unit_cube(n, d, 0.5).unwrap());
        let (i, j) = (pick.0 % basis.n_p(), pick.1 % basis.n_p());
        let fast = basis.eval_g(i, j, &x[..n], &y[..n]).unwrap();
        let exact = quadrature_oracle_g(&basis, i, j, &x[..n], &y[..n]).unwrap();
        prop_assert!(relative_error(fast, exact) <= 1e-9, "{fast} vs {exact}");
    }

    #[test]
    fn basis_is_symmetric_under_swap(x in unit_point(2), y in unit_point(2), pick in (0usize..10, 0usize..10)) {
        let basis = TkBasis::new(TkBasisConfig::unit_cube(2, 1, 0.5).unwrap());
        let a = basis.eval_g(pick.0, pick.1, &x, &y).unwrap();
        let b = basis.eval_g(pick.1, pick.0, &y, &x).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn kernel_matrix_is_psd(xs in points(2, 3..12), rank in 1usize..=10, seed in 0u64..1000) {
        let basis = TkBasis::new(TkBasisConfig::unit_cube(2, 1, 0.5).unwrap());
        let p = random_parameter(basis.n_p(), rank, seed).unwrap();
        let k = kernel_matrix(&basis, &xs, p.matrix()).unwrap();
        let eig = jacobi_eig(&k).unwrap();
        let min = *eig.eigenvalues.last().unwrap();
        prop_assert!(min >= -1e-9 * k.trace(), "min eigenvalue {min}");
    }

    #[test]
    fn quadratic_form_equals_d_inner_product(
        xs in points(2, 2..10),
        w in prop::collection::vec(-2.0f64..2.0, 10),
        seed in 0u64..1000,
    ) {
        let basis = TkBasis::new(TkBasisConfig::unit_cube(2, 1, 0.5).unwrap());
        let beta = &w[..xs.len()];
        let p = random_parameter(basis.n_p(), basis.n_p(), seed).unwrap();
        let k = kernel_matrix(&basis, &xs, p.matrix()).unwrap();
        let d = assemble_d(&basis, &xs, beta).unwrap();
        let lhs = k.quad_form(beta);
        let rhs = d.inner(p.matrix());
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
        let de = jacobi_eig(&d).unwrap();
        prop_assert!(*de.eigenvalues.last().unwrap() >= -1e-9 * (1.0 + d.trace().abs()));
    }

    #[test]
    fn svc_matches_reference(k in psd_kernel(5), y in labels(5), c in 0.1f64..10.0) {
        let problem = QpProblem::new(&k, Task::Classification, &y, c, 0.0);
        let smo = solve(&problem, &SmoOptions::with_tol(1e-10), None).unwrap();
        let reference = brute_force_qp(&problem).unwrap();
        prop_assert!((smo.objective - reference.objective).abs() <= 1e-6 * (1.0 + reference.objective.abs()));
        prop_assert!(smo.alpha.is_feasible(&y, c, 1e-9));
    }

    #[test]
    fn svr_matches_reference(
        k in psd_kernel(4),
        t in prop::collection::vec(-2.0f64..2.0, 4),
        c in 0.1f64..10.0,
        eps in 0.0f64..0.5,
    ) {
        let problem = QpProblem::new(&k, Task::Regression, &t, c, eps);
        let smo = solve(&problem, &SmoOptions::with_tol(1e-10), None).unwrap();
        let reference = brute_force_qp(&problem).unwrap();
        prop_assert!((smo.objective - reference.objective).abs() <= 1e-6 * (1.0 + reference.objective.abs()));
        prop_assert!(smo.alpha.is_feasible(&t, c, 1e-9));
    }

    #[test]
    fn warm_start_reaches_the_same_optimum(
        k in psd_kernel(6),
        y in labels(6),
        c in 0.5f64..5.0,
        raw in prop::collection::vec(0.0f64..1.0, 6),
    ) {
        let problem = QpProblem::new(&k, Task::Classification, &y, c, 0.0);
        let opts = SmoOptions::with_tol(1e-9);
        let cold = solve(&problem, &opts, None).unwrap();
        let start = feasible_alpha(&raw, &y, c);
        let warm = solve(&problem, &opts, Some(&start)).unwrap();
        prop_assert!((cold.objective - warm.objective).abs() <= 1e-6 * (1.0 + cold.objective.abs()));
        // Starting at the optimum, SMO has nothing left to do.
        let again = solve(&problem, &opts, Some(&cold.alpha)).unwrap();
        prop_assert!(again.objective >= cold.objective - 1e-12 * (1.0 + cold.objective.abs()));
        prop_assert!(again.iterations <= 1);
    }

    #[test]
    fn jacobi_reconstructs(a in symmetric(6)) {
        let eig = jacobi_eig(&a).unwrap();
        let back = eig.reconstruct_with(&eig.eigenvalues);
        prop_assert!(back.max_abs_diff(&a) <= 1e-10 * (1.0 + a.frobenius_norm()));
        for w in eig.eigenvalues.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
        for (i, u) in eig.eigenvectors.iter().enumerate() {
            for (j, v) in eig.eigenvectors.iter().enumerate() {
                let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot - want).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn projection_is_feasible_idempotent_and_nearest(a in symmetric(3), seeds in prop::collection::vec(0u64..10_000, 50)) {
        let np = 3.0;
        let eps = default_projection_eps(np);
        let proj = project_trace_simplex(&a, np, eps).unwrap();
        let p = proj.matrix.matrix().clone();
        prop_assert!((p.trace() - np).abs() <= 1e-9);
        let again = project_trace_simplex(&p, np, eps).unwrap();
        prop_assert!(again.matrix.matrix().max_abs_diff(&p) <= 1e-9);
        let dist = |q: &SymmetricMatrix| q.lincomb(1.0, -1.0, &a).frobenius_norm();
        let best = dist(&p);
        for s in seeds {
            let q = random_parameter(3, 1 + (s % 3) as usize, s).unwrap();
            prop_assert!(best <= dist(q.matrix()) + 1e-9);
        }
    }

    #[test]
    fn scaler_maps_into_unit_cube(rows in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 3), 1..20)) {
        let s = scale_fit(&rows).unwrap();
        let t = scale_apply(&s, &rows).unwrap();
        for (r, tr) in rows.iter().zip(&t) {
            prop_assert!(tr.iter().all(|v| (0.0..=1.0).contains(v)));
            let back = s.inverse_row(tr);
            for k in 0..3 {
                if s.max[k] > s.min[k] {
                    prop_assert!((back[k] - r[k]).abs() <= 1e-9 * (1.0 + r[k].abs()));
                }
            }
        }
    }

    #[test]
    fn folds_partition_and_stratify(
        y in prop::collection::vec(prop::bool::ANY, 10..60),
        k in 2usize..6,
        seed in 0u64..100,
    ) {
        let y: Vec<f64> = y.into_iter().map(|b| if b { 1.0 } else { -1.0 }).collect();
        let folds = fold_assignment(&y, Task::Classification, k, seed).unwrap();
        prop_assert_eq!(folds.len(), y.len());
        let sizes: Vec<usize> = (0..k).map(|f| folds.iter().filter(|&&v| v == f).count()).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for class in [-1.0, 1.0] {
            let per: Vec<usize> = (0..k)
                .map(|f| folds.iter().zip(&y).filter(|(&v, &t)| v == f && t == class).count())
                .collect();
            prop_assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
        }
        prop_assert_eq!(folds, fold_assignment(&y, Task::Classification, k, seed).unwrap());
    }

    #[test]
    fn sparse_text_round_trips(
        rows in prop::collection::vec(prop::collection::vec(prop_oneof![Just(0.0), -5.0f64..5.0], 4), 1..15),
        y in prop::collection::vec(-3i32..3, 15),
    ) {
        let mut rows = rows;
        rows[0][3] = 1.5;
        let targets: Vec<f64> = y[..rows.len()].iter().map(|&v| v as f64).collect();
        let ds = Dataset::new(rows, targets).unwrap();
        let back = parse_sparse_svm_str(&format_sparse_svm(&ds), "mem").unwrap();
        prop_assert_eq!(back, ds);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn eigen_direction_beats_feasible_points(
        (xs, y) in classification_set(4..12),
        raw in prop::collection::vec(0.0f64..1.0, 12),
        seeds in prop::collection::vec(0u64..10_000, 20),
    ) {
        let m = xs.len();
        let problem = small_problem(xs, y.clone(), Task::Classification, 1.0);
        let alpha = feasible_alpha(&raw[..m], &y, 1.0);
        let step = opt_p(&problem, &alpha).unwrap();
        let d = &step.d;
        let at_s = d.inner(step.direction.matrix());
        let lambda_max = jacobi_eig(d).unwrap().eigenvalues[0];
        prop_assert!((at_s - problem.n_p() as f64 * lambda_max).abs() <= 1e-8 * (1.0 + at_s.abs()));
        for (r, s) in seeds.iter().enumerate() {
            let q = random_parameter(problem.n_p(), 1 + r % problem.n_p(), *s).unwrap();
            prop_assert!(-0.5 * at_s <= -0.5 * d.inner(q.matrix()) + 1e-8);
        }
    }

    #[test]
    fn weak_duality_at_random_pairs(
        (xs, y) in classification_set(4..12),
        raw in prop::collection::vec(0.0f64..1.0, 12),
        rank in 1usize..=10,
        seed in 0u64..1000,
    ) {
        let m = xs.len();
        let problem = small_problem(xs, y.clone(), Task::Classification, 2.0);
        let p = random_parameter(problem.n_p(), rank, seed).unwrap();
        let (sol, _) = opt_a(&problem, &p, None, 1e-9).unwrap();
        let alpha = feasible_alpha(&raw[..m], &y, 2.0);
        let dual = opt_p(&problem, &alpha).unwrap().dual;
        prop_assert!(dual <= sol.objective + 1e-7 * (1.0 + sol.objective.abs()), "{dual} > {}", sol.objective);
    }

    #[test]
    fn step_sizes_keep_gamma_tau_squared(
        (xs, y) in classification_set(6..10),
        mu in 1e-4f64..1e-1,
    ) {
        let data = TrainData::new(xs, y, Task::Classification).unwrap();
        let cfg = TrainConfig { mu: Some(mu), ..TrainConfig::default() };
        let problem = GklProblem::new(&data, cfg).unwrap();
        let p0 = TraceSimplexMatrix::identity(problem.n_p());
        let consts = compute_constants(&problem, &p0).unwrap();
        let (a0, _) = opt_a(&problem, &p0, None, 1e-8).unwrap();
        let mut state = ApdState::initial(&problem, p0, a0.alpha, &consts).unwrap();
        let invariant = state.gamma * state.tau * state.tau;
        for _ in 0..5 {
            let (next, info) = apd_step(&problem, &state, &consts, 1e-8).unwrap();
            prop_assert!((info.sigma - state.gamma * info.tau).abs() <= 1e-12 * info.sigma.abs());
            state = next;
            let now = state.gamma * state.tau * state.tau;
            prop_assert!((now - invariant).abs() <= 1e-12 * invariant, "{now} vs {invariant}");
            prop_assert!((state.p.matrix().trace() - problem.n_p() as f64).abs() <= 1e-8);
        }
    }

    #[test]
    fn predictor_text_round_trip(
        pts in points(2, 1..6),
        coefs in prop::collection::vec(-3.0f64..3.0, 6),
        bias in -2.0f64..2.0,
        seed in 0u64..1000,
        queries in points(2, 1..5),
    ) {
        let support: Vec<SupportVector> = pts
            .iter()
            .zip(&coefs)
            .map(|(p, &c)| SupportVector { point: p.clone(), coef: c })
            .collect();
        let p = random_parameter(10, 4, seed).unwrap();
        let model = TkPredictor::new(
            TkBasisConfig::unit_cube(2, 1, 0.5).unwrap(),
            p,
            support,
            bias,
            TargetEncoding::Binary { classes: [0.0, 1.0] },
            ScalerState::identity(2),
        )
        .unwrap();
        let back = TkPredictor::from_text(&model.to_text()).unwrap();
        prop_assert_eq!(&back, &model);
        prop_assert_eq!(back.decision_values(&queries).unwrap(), model.decision_values(&queries).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn training_ignores_sample_order((xs, y) in classification_set(8..16), seed in 0u64..1000) {
        use rand::seq::SliceRandom;
        let m = xs.len();
        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(&mut tessellate::synth::rng(seed));
        let cfg = TrainConfig { tol: 1e-6, maxit: 300, qp_tol: 1e-9, ..TrainConfig::default() };
        let a = GklProblem::new(&TrainData::new(xs.clone(), y.clone(), Task::Classification).unwrap(), cfg.clone()).unwrap();
        let b = GklProblem::new(
            &TrainData::new(
                order.iter().map(|&i| xs[i].clone()).collect(),
                order.iter().map(|&i| y[i]).collect(),
                Task::Classification,
            )
            .unwrap(),
            cfg,
        )
        .unwrap();
        let ra = train_fw(&a).unwrap();
        let rb = train_fw(&b).unwrap();
        prop_assert!((ra.primal - rb.primal).abs() <= 1e-4 * (1.0 + ra.primal.abs()), "{} vs {}", ra.primal, rb.primal);
    }
}
