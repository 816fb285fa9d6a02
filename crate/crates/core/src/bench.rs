//! Timing and iteration-count experiments that emit plot-ready rows.

use std::io::Write;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::eig::{extremal_eigpair, Extremal, TraceSimplexMatrix};
use crate::error::{Error, Result};
use crate::fw::run_fw;
use crate::matrix::SymmetricMatrix;
use crate::problem::{elapsed_ms, GklProblem, TrainConfig, TrainData};
use crate::qp::DualVariables;
use crate::synth::{checkerboard, rng, smooth_regression, Samples};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchMode {
    /// Per-iteration Frank-Wolfe time against `m`.
    IterationScaling,
    /// Assembly of `D` and its extremal eigenpair against `m`.
    EigVsM,
    /// SMO iterations at the learned rank-one `P` against random `P` of
    /// increasing rank.
    RankIterations,
}

impl BenchMode {
    pub fn name(self) -> &'static str {
        match self {
            BenchMode::IterationScaling => "iteration-scaling",
            BenchMode::EigVsM => "eig-vs-m",
            BenchMode::RankIterations => "rank-iterations",
        }
    }
}

impl std::str::FromStr for BenchMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "iteration-scaling" => Ok(BenchMode::IterationScaling),
            "eig-vs-m" => Ok(BenchMode::EigVsM),
            "rank-iterations" => Ok(BenchMode::RankIterations),
            other => Err(format!("unknown bench mode `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub mode: BenchMode,
    pub m: usize,
    pub n_p: usize,
    /// Rank of the kernel parameter, where meaningful.
    pub rank: Option<usize>,
    pub phase: String,
    pub mean_ms: f64,
    pub std_ms: f64,
}

pub const BENCH_HEADER: &str = "mode,m,n_P,rank,phase,mean_ms,std_ms";

/// Writes rows as CSV. For the `smo_iterations` phase the value columns
/// hold iteration counts rather than milliseconds.
pub fn write_bench_csv<W: Write>(mut out: W, rows: &[BenchRow]) -> std::io::Result<()> {
    writeln!(out, "{BENCH_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{:.6},{:.6}",
            r.mode.name(),
            r.m,
            r.n_p,
            r.rank.map(|k| k.to_string()).unwrap_or_default(),
            r.phase,
            r.mean_ms,
            r.std_ms
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub sizes: Vec<usize>,
    pub n_features: usize,
    pub degree: u32,
    /// Timed iterations (iteration-scaling) or repetitions (other modes).
    pub repeats: usize,
    pub seed: u64,
    /// SMO tolerance for rank-iterations.
    pub smo_tol: f64,
}

impl BenchOptions {
    pub fn defaults_for(mode: BenchMode) -> Self {
        match mode {
            BenchMode::IterationScaling => BenchOptions {
                sizes: vec![100, 200, 400, 800],
                n_features: 2,
                degree: 1,
                repeats: 5,
                seed: 0,
                smo_tol: 0.1,
            },
            BenchMode::EigVsM => BenchOptions {
                sizes: vec![200, 2000],
                n_features: 2,
                degree: 2,
                repeats: 20,
                seed: 0,
                smo_tol: 0.1,
            },
            BenchMode::RankIterations => BenchOptions {
                sizes: vec![200],
                n_features: 5,
                degree: 1,
                repeats: 20,
                seed: 0,
                smo_tol: 0.1,
            },
        }
    }
}

pub fn run_bench(mode: BenchMode, opts: &BenchOptions) -> Result<Vec<BenchRow>> {
    if opts.sizes.is_empty() || opts.repeats == 0 {
        return Err(Error::Config("bench needs at least one size and one repeat".into()));
    }
    match mode {
        BenchMode::IterationScaling => iteration_scaling(opts),
        BenchMode::EigVsM => eig_vs_m(opts),
        BenchMode::RankIterations => rank_iterations(opts),
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Checkerboard classification in two dimensions, smooth regression otherwise.
fn fixture(opts: &BenchOptions, m: usize) -> Samples {
    if opts.n_features == 2 {
        checkerboard(m, 4, opts.seed)
    } else {
        smooth_regression(m, opts.n_features, opts.seed)
    }
}

fn problem_for(samples: &Samples, opts: &BenchOptions, c: f64) -> Result<GklProblem> {
    let data = TrainData::new(samples.features.clone(), samples.targets.clone(), samples.task)?;
    let cfg = TrainConfig {
        degree: opts.degree,
        c,
        ..TrainConfig::default()
    };
    GklProblem::new(&data, cfg)
}

fn row(mode: BenchMode, m: usize, n_p: usize, rank: Option<usize>, phase: &str, xs: &[f64]) -> BenchRow {
    let (mean_ms, std_ms) = mean_std(xs);
    BenchRow {
        mode,
        m,
        n_p,
        rank,
        phase: phase.to_string(),
        mean_ms,
        std_ms,
    }
}

fn iteration_scaling(opts: &BenchOptions) -> Result<Vec<BenchRow>> {
    let mode = BenchMode::IterationScaling;
    let mut rows = Vec::new();
    for &m in &opts.sizes {
        let samples = fixture(opts, m);
        let problem = problem_for(&samples, opts, 1.0)?;
        let n_p = problem.n_p();
        // A negative tolerance forces exactly `repeats` steps.
        let run = run_fw(&problem, TraceSimplexMatrix::identity(n_p), None, -1.0, opts.repeats)?;
        let steps: Vec<_> = run.trace.iter().filter(|r| r.gamma.is_some()).collect();
        let opt_p: Vec<f64> = steps.iter().map(|r| r.t_opt_p_ms).collect();
        let ls: Vec<f64> = steps.iter().map(|r| r.t_linesearch_ms).collect();
        let total: Vec<f64> = steps.iter().map(|r| r.t_opt_p_ms + r.t_linesearch_ms).collect();
        rows.push(row(mode, m, n_p, None, "opt_p", &opt_p));
        rows.push(row(mode, m, n_p, None, "line_search", &ls));
        rows.push(row(mode, m, n_p, None, "total", &total));
    }
    Ok(rows)
}

fn random_alpha(problem: &GklProblem, seed: u64) -> DualVariables {
    let mut r = rng(seed);
    let c = problem.config().c;
    let mut a = DualVariables::zeros(problem.len(), problem.task());
    for v in a.values.iter_mut() {
        *v = r.gen_range(0.0..c);
    }
    a
}

fn eig_vs_m(opts: &BenchOptions) -> Result<Vec<BenchRow>> {
    let mode = BenchMode::EigVsM;
    let mut rows = Vec::new();
    for &m in &opts.sizes {
        let samples = fixture(opts, m);
        let problem = problem_for(&samples, opts, 1.0)?;
        let n_p = problem.n_p();
        let alpha = random_alpha(&problem, opts.seed);
        let t = Instant::now();
        let d = problem.d_matrix(&alpha)?;
        let assembly = elapsed_ms(t);
        let mut eig = Vec::with_capacity(opts.repeats);
        for _ in 0..opts.repeats {
            let t = Instant::now();
            std::hint::black_box(extremal_eigpair(std::hint::black_box(&d), Extremal::Max)?);
            eig.push(elapsed_ms(t));
        }
        rows.push(row(mode, m, n_p, None, "assemble_d", &[assembly]));
        rows.push(row(mode, m, n_p, None, "eigen", &eig));
    }
    Ok(rows)
}

/// `Σ v_i v_iᵀ/‖v_i‖` over `rank` Gaussian vectors, rescaled to trace `n_P`.
pub fn random_parameter(n_p: usize, rank: usize, seed: u64) -> Result<TraceSimplexMatrix> {
    if rank == 0 || rank > n_p {
        return Err(Error::Config(format!("rank must lie in 1..={n_p}, got {rank}")));
    }
    let mut r = rng(seed);
    let mut p = SymmetricMatrix::zeros(n_p);
    for _ in 0..rank {
        let v: Vec<f64> = (0..n_p).map(|_| r.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        p.add_scaled(1.0 / norm, &SymmetricMatrix::outer(&v, 1.0));
    }
    let tr = p.trace();
    p.scale(n_p as f64 / tr);
    TraceSimplexMatrix::new(p)
}

/// Ranks compared against the learned rank-one parameter.
pub fn comparison_ranks(n_p: usize) -> Vec<usize> {
    let mut ranks = vec![n_p.div_ceil(2), n_p];
    ranks.dedup();
    ranks
}

/// Runs on smooth regression data. The rank-one parameter is the leading
/// eigen-direction of a Frank-Wolfe solution at gap `1e-3`.
fn rank_iterations(opts: &BenchOptions) -> Result<Vec<BenchRow>> {
    let mode = BenchMode::RankIterations;
    let mut rows = Vec::new();
    for &m in &opts.sizes {
        let samples = smooth_regression(m, opts.n_features, opts.seed);
        let problem = problem_for(&samples, opts, 1.0)?;
        let n_p = problem.n_p();
        let learned = run_fw(&problem, TraceSimplexMatrix::identity(n_p), None, 1e-3, 100)?;
        let (_, lead) = extremal_eigpair(learned.p.matrix(), Extremal::Max)?;
        let rank_one = TraceSimplexMatrix::rank_one(&lead)?;

        let measure = |p: &TraceSimplexMatrix, its: &mut Vec<f64>, ms: &mut Vec<f64>| -> Result<()> {
            let k = problem.kernel_matrix(p)?;
            let t = Instant::now();
            let sol = problem.solve_dual(&k, opts.smo_tol, None)?;
            ms.push(elapsed_ms(t));
            its.push(sol.iterations as f64);
            Ok(())
        };

        let (mut its, mut ms) = (Vec::new(), Vec::new());
        for _ in 0..opts.repeats {
            measure(&rank_one, &mut its, &mut ms)?;
        }
        rows.push(row(mode, m, n_p, Some(1), "smo_iterations", &its));
        rows.push(row(mode, m, n_p, Some(1), "smo", &ms));

        for rank in comparison_ranks(n_p) {
            let (mut its, mut ms) = (Vec::new(), Vec::new());
            for trial in 0..opts.repeats {
                let p = random_parameter(n_p, rank, opts.seed.wrapping_add(trial as u64 + 1))?;
                measure(&p, &mut its, &mut ms)?;
            }
            rows.push(row(mode, m, n_p, Some(rank), "smo_iterations", &its));
            rows.push(row(mode, m, n_p, Some(rank), "smo", &ms));
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_parameter_is_feasible() {
        let p = random_parameter(6, 3, 4).unwrap();
        assert!((p.matrix().trace() - 6.0).abs() < 1e-12);
        let eig = crate::eig::jacobi_eig(p.matrix()).unwrap();
        let positive = eig.eigenvalues.iter().filter(|&&l| l > 1e-9).count();
        assert_eq!(positive, 3);
        assert!(random_parameter(6, 7, 0).is_err());
    }

    #[test]
    fn csv_schema() {
        let rows = vec![BenchRow {
            mode: BenchMode::EigVsM,
            m: 10,
            n_p: 4,
            rank: None,
            phase: "eigen".into(),
            mean_ms: 1.0,
            std_ms: 0.0,
        }];
        let mut buf = Vec::new();
        write_bench_csv(&mut buf, &rows).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().next().unwrap(), BENCH_HEADER);
        assert_eq!(s.lines().nth(1).unwrap(), "eig-vs-m,10,4,,eigen,1.000000,0.000000");
    }
}
