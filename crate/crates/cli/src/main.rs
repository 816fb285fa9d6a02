//! `tessellate`: train, apply and benchmark tessellated kernel machines.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tessellate::bench::{run_bench, write_bench_csv, BenchMode, BenchOptions};
use tessellate::data::{
    kfold_cv, parse_csv, parse_grid, parse_sparse_svm, resolve_task, Dataset, LabelColumn,
};
use tessellate::kernel::oracle_check;
use tessellate::problem::{write_trace_csv, Algorithm, StepBound, TrainConfig};
use tessellate::qp::Task;
use tessellate::{fit, Error, TkPredictor};

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

/// Oracle agreement required by `validate-kernel`.
const ORACLE_TOLERANCE: f64 = 1e-9;
const CLOSED_FORM_TOLERANCE: f64 = 1e-12;

#[derive(Parser, Debug)]
#[command(name = "tessellate", version, about = "Tessellated kernel learning")]
struct Cli {
    /// Worker threads; defaults to all available cores.
    #[arg(long, global = true, env = "TESSELLATE_THREADS", value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Learn a kernel and classifier or regressor from a data file.
    Train(TrainArgs),
    /// Write one prediction per input row.
    Predict(PredictArgs),
    /// Print `metric,value` lines for a labelled data file.
    Evaluate(EvaluateArgs),
    /// Check the closed-form kernel basis against exact integration.
    ValidateKernel(ValidateArgs),
    /// Emit timing or iteration-count measurements as CSV.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    /// `.csv` files are read as CSV, anything else as sparse text.
    Auto,
    Svm,
    Csv,
}

#[derive(Args, Debug)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Auto)]
    format: Format,
    /// CSV target column: `first`, `last` or a 0-based index.
    #[arg(long, default_value = "last")]
    label_column: LabelColumn,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TaskArg {
    Auto,
    Classify,
    Regress,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AlgorithmArg {
    Fw,
    Apd,
    Hybrid,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StepBoundArg {
    Frobenius,
    Trace,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    input: DataArgs,
    #[arg(long, value_enum, default_value_t = TaskArg::Auto)]
    task: TaskArg,
    #[arg(long, default_value_t = 1)]
    degree: u32,
    /// Padding of the integration box around the unit cube.
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Fw)]
    algorithm: AlgorithmArg,
    #[arg(long, default_value_t = 0.01)]
    tol: f64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    maxit: u64,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    n_gamma: u64,
    /// Step-size bound for the primal-dual method.
    #[arg(long, value_enum, default_value_t = StepBoundArg::Frobenius)]
    step_bound: StepBoundArg,
    /// Cross-validation grid, e.g. `C=0.1,1,10;delta=0.25,0.5`.
    #[arg(long)]
    cv: Option<String>,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(2..))]
    folds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    model_out: Option<PathBuf>,
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    input: DataArgs,
    /// Destination file; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write raw decision values instead of labels.
    #[arg(long)]
    decision_values: bool,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    input: DataArgs,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, default_value_t = 1)]
    degree: u32,
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    #[arg(long, hide = true, default_value_t = 0.0)]
    inject_fault: f64,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    mode: BenchMode,
    /// Comma-separated sample counts; each mode has its own default.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    degree: Option<u32>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Lib(Error),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn exit_code(f: &Failure) -> u8 {
    match f {
        Failure::Usage(_) => EXIT_USAGE,
        Failure::Check(_) => EXIT_NUMERICAL,
        Failure::Lib(e) if e.is_data_error() => EXIT_DATA,
        Failure::Lib(e) if e.is_numerical() => EXIT_NUMERICAL,
        Failure::Lib(_) => EXIT_USAGE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t as usize).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let outcome = match cli.command {
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate(a),
        Command::ValidateKernel(a) => validate_kernel(a),
        Command::Bench(a) => bench(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) | Failure::Check(m) => eprintln!("error: {m}"),
                Failure::Lib(e) => eprintln!("error: {e}"),
            }
            ExitCode::from(exit_code(&f))
        }
    }
}

fn load(args: &DataArgs) -> Result<Dataset, Failure> {
    Ok(if is_sparse(args) {
        parse_sparse_svm(&args.data)?
    } else {
        parse_csv(&args.data, args.label_column)?
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Lib(Error::Io { path: path.to_path_buf(), source: e }))
}

fn write_failed(path: Option<&Path>, e: io::Error) -> Failure {
    Failure::Lib(Error::Io {
        path: path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf),
        source: e,
    })
}

fn train(a: TrainArgs) -> Result<(), Failure> {
    let ds = load(&a.input)?;
    let requested = match a.task {
        TaskArg::Auto => None,
        TaskArg::Classify => Some(Task::Classification),
        TaskArg::Regress => Some(Task::Regression),
    };
    let task = resolve_task(&ds.targets, requested)?.task();
    let mut cfg = TrainConfig {
        degree: a.degree,
        padding: a.delta,
        c: a.c,
        epsilon: a.epsilon,
        tol: a.tol,
        maxit: a.maxit as usize,
        n_gamma: a.n_gamma as usize,
        algorithm: match a.algorithm {
            AlgorithmArg::Fw => Algorithm::FrankWolfe,
            AlgorithmArg::Apd => Algorithm::PrimalDual,
            AlgorithmArg::Hybrid => Algorithm::Hybrid,
        },
        step_bound: match a.step_bound {
            StepBoundArg::Frobenius => StepBound::Frobenius,
            StepBoundArg::Trace => StepBound::Trace,
        },
        ..TrainConfig::default()
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;

    if let Some(text) = &a.cv {
        let grid = parse_grid(text, cfg.c, cfg.padding).map_err(|e| Failure::Usage(e.to_string()))?;
        if a.folds as usize > ds.len() {
            return Err(Failure::Lib(Error::Data(format!(
                "{} folds requested for {} samples",
                a.folds,
                ds.len()
            ))));
        }
        let base = cfg.clone();
        let cv = kfold_cv(
            &ds.features,
            &ds.targets,
            task,
            a.folds as usize,
            &grid,
            a.seed,
            |tr_x, tr_y, te_x, cand| {
                let cfg = TrainConfig {
                    c: cand.c,
                    padding: cand.padding,
                    ..base.clone()
                };
                fit(tr_x, tr_y, Some(task), cfg)?.predictor.predict(te_x)
            },
        )?;
        for row in &cv.table {
            eprintln!(
                "cv C={} delta={} score={:.6}",
                row.candidate.c, row.candidate.padding, row.score
            );
        }
        cfg.c = cv.best.c;
        cfg.padding = cv.best.padding;
    }

    let fitted = fit(&ds.features, &ds.targets, Some(task), cfg.clone())?;
    let r = &fitted.result;
    if let Some(path) = &a.trace_out {
        let mut w = create(path)?;
        let with_steps = cfg.algorithm != Algorithm::FrankWolfe;
        write_trace_csv(&mut w, &r.trace, with_steps)
            .and_then(|_| w.flush())
            .map_err(|e| write_failed(Some(path), e))?;
    }
    if let Some(path) = &a.model_out {
        fitted.predictor.save(path)?;
    }
    let train_metric = fitted.predictor.evaluate(&ds.features, &ds.targets)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let lines = [
        ("task".to_string(), task.name().to_string()),
        ("algorithm".into(), cfg.algorithm.name().to_string()),
        ("C".into(), cfg.c.to_string()),
        ("delta".into(), cfg.padding.to_string()),
        ("primal".into(), format!("{:.10e}", r.primal)),
        ("gap".into(), format!("{:.6e}", r.gap)),
        ("iterations".into(), r.iterations.to_string()),
        ("converged".into(), r.converged.to_string()),
        ("support_vectors".into(), fitted.predictor.support().len().to_string()),
        (format!("train_{}", train_metric.name()), format!("{:.6}", train_metric.value())),
    ];
    for (k, v) in lines {
        writeln!(out, "{k},{v}").map_err(|e| write_failed(None, e))?;
    }
    Ok(())
}

/// Sparse files omit trailing zero features, so narrower rows are padded to
/// the model's width. Wider rows are an error.
fn fit_width(model: &TkPredictor, ds: &Dataset, sparse: bool) -> Result<Vec<Vec<f64>>, Failure> {
    let want = model.n_features();
    let have = ds.n_features();
    if have == want {
        return Ok(ds.features.clone());
    }
    if sparse && have < want {
        return Ok(ds
            .features
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r.resize(want, 0.0);
                r
            })
            .collect());
    }
    Err(Failure::Lib(Error::Dimension(format!(
        "data has {have} features but the model expects {want}"
    ))))
}

fn is_sparse(args: &DataArgs) -> bool {
    match args.format {
        Format::Svm => true,
        Format::Csv => false,
        Format::Auto => !args
            .data
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("csv")),
    }
}

fn predict(a: PredictArgs) -> Result<(), Failure> {
    let model = TkPredictor::load(&a.model)?;
    let ds = load(&a.input)?;
    let rows = fit_width(&model, &ds, is_sparse(&a.input))?;
    let values = if a.decision_values {
        model.decision_values(&rows)?
    } else {
        model.predict(&rows)?
    };
    let mut text = String::with_capacity(values.len() * 8);
    for v in values {
        text.push_str(&v.to_string());
        text.push('\n');
    }
    match &a.out {
        Some(path) => {
            let mut w = create(path)?;
            w.write_all(text.as_bytes())
                .and_then(|_| w.flush())
                .map_err(|e| write_failed(Some(path), e))
        }
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| write_failed(None, e)),
    }
}

fn evaluate(a: EvaluateArgs) -> Result<(), Failure> {
    let model = TkPredictor::load(&a.model)?;
    let ds = load(&a.input)?;
    let rows = fit_width(&model, &ds, is_sparse(&a.input))?;
    let metric = model.evaluate(&rows, &ds.targets)?;
    let mut out = io::stdout().lock();
    writeln!(out, "metric,value")
        .and_then(|_| writeln!(out, "{},{}", metric.name(), metric.value()))
        .and_then(|_| writeln!(out, "samples,{}", ds.len()))
        .map_err(|e| write_failed(None, e))
}

fn validate_kernel(a: ValidateArgs) -> Result<(), Failure> {
    if !(a.delta > 0.0 && a.delta.is_finite()) {
        return Err(Failure::Usage(format!("delta must be positive, got {}", a.delta)));
    }
    let report = oracle_check(a.n as usize, a.degree, a.delta, a.trials as usize, a.seed, a.inject_fault)?;
    let closed_ok = report.closed_form_error.is_none_or(|e| e <= CLOSED_FORM_TOLERANCE);
    let ok = report.max_relative_error <= ORACLE_TOLERANCE && closed_ok;
    let mut text = format!(
        "trials,{}\nmax_relative_error,{:e}\n",
        report.trials, report.max_relative_error
    );
    if let Some(e) = report.closed_form_error {
        text.push_str(&format!("closed_form_error,{e:e}\n"));
    }
    if !ok {
        eprint!("{text}");
        return Err(Failure::Check(format!(
            "kernel basis disagrees with exact integration (tolerance {ORACLE_TOLERANCE:e})"
        )));
    }
    text.push_str("status,pass\n");
    io::stdout()
        .lock()
        .write_all(text.as_bytes())
        .map_err(|e| write_failed(None, e))
}

fn bench(a: BenchArgs) -> Result<(), Failure> {
    let mut opts = BenchOptions::defaults_for(a.mode);
    if let Some(s) = a.sizes {
        opts.sizes = s;
    }
    if let Some(n) = a.n {
        opts.n_features = n;
    }
    if let Some(d) = a.degree {
        opts.degree = d;
    }
    if let Some(r) = a.repeats {
        opts.repeats = r;
    }
    opts.seed = a.seed;
    if opts.sizes.iter().any(|&m| m < 2) || opts.n_features == 0 {
        return Err(Failure::Usage("sizes must be at least 2 and n at least 1".into()));
    }
    let rows = run_bench(a.mode, &opts).map_err(|e| match e {
        Error::Config(m) => Failure::Usage(m),
        other => Failure::Lib(other),
    })?;
    match &a.out {
        Some(path) => {
            let mut w = create(path)?;
            write_bench_csv(&mut w, &rows)
                .and_then(|_| w.flush())
                .map_err(|e| write_failed(Some(path), e))
        }
        None => write_bench_csv(io::stdout().lock(), &rows).map_err(|e| write_failed(None, e)),
    }
}
