use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lcgp::experiment::{emit_report, read_table, run_real_data, run_simulated, ExperimentConfig, ExperimentError, RmseReport};
use lcgp::fd::check_kernel_constraint;
use lcgp::gp::{fit_hyperparameters, Dataset, GpError, GpModel, ModelSpec};
use lcgp::kernel::{transform_kernel, SeHyperparams};
use lcgp::operator::{
    construct_g, operator_to_json, parse_operator_json, ConstructOptions, OperatorError, OperatorMatrix,
    DEFAULT_MAX_DEGREE,
};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Linearly constrained Gaussian process tools.
///
/// Log verbosity follows RUST_LOG (e.g. RUST_LOG=info).
#[derive(Parser, Debug)]
#[command(name = "lcgp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Find an operator matrix G with F G = 0.
    ConstructG {
        #[arg(long)]
        f_spec: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_DEGREE)]
        max_degree: u32,
        /// Where to write the G spec; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check by finite differences that F annihilates the induced kernel.
    CheckKernel {
        #[arg(long)]
        f_spec: PathBuf,
        /// Path to a G spec, `auto` to construct it from F, or `identity` for the diagonal kernel.
        #[arg(long, default_value = "auto")]
        g_spec: String,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Maximum violation relative to the kernel scale.
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        #[arg(long, default_value_t = 1.0)]
        length_scale: f64,
        #[arg(long, default_value_t = 1.0)]
        signal_variance: f64,
    },
    /// Run the simulated divergence-free reconstruction experiment.
    SimExperiment {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the train/test comparison on a measured 3-D field.
    RealExperiment {
        #[arg(long)]
        config: Option<PathBuf>,
        /// CSV with columns x1,x2,x3,b1,b2,b3.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Predict with a model spec at the points of a CSV file.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    fn no_solution(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<OperatorError> for Failure {
    fn from(e: OperatorError) -> Self {
        match e {
            OperatorError::NoAnnihilatorFound { .. } => Failure::no_solution(e.to_string()),
            e => Failure::usage(e.to_string()),
        }
    }
}

impl From<GpError> for Failure {
    fn from(e: GpError) -> Self {
        match e {
            GpError::Operator(op) => op.into(),
            e => Failure::usage(e.to_string()),
        }
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Operator(op) => op.into(),
            ExperimentError::Gp(gp) => gp.into(),
            e => Failure::usage(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
}

fn load_operator(path: &Path) -> Result<OperatorMatrix, Failure> {
    parse_operator_json(&read(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load_config(path: Option<&Path>, default: ExperimentConfig, seed: Option<u64>) -> Result<ExperimentConfig, Failure> {
    let mut config = match path {
        Some(p) => ExperimentConfig::from_json(&read(p)?).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?,
        None => default,
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    Ok(config)
}

fn print_report(report: &RmseReport) {
    println!("{:<12} {:>5} {:>12} {:>12} {:>5}", "method", "Nc", "rmse", "std", "ok");
    for r in &report.rows {
        println!("{:<12} {:>5} {:>12.5e} {:>12.3e} {:>5}", r.method, r.nc, r.mean, r.std, r.n_ok);
    }
    for f in &report.failures {
        eprintln!("failed: {f}");
    }
}

fn construct_g_cmd(f_spec: &Path, max_degree: u32, out: Option<&Path>) -> Result<(), Failure> {
    let f = load_operator(f_spec)?;
    let opts = ConstructOptions {
        max_degree,
        ..ConstructOptions::default()
    };
    let (g, sol) = construct_g(&f, &opts)?;
    log::info!("ansatz degrees {:?}, {:?} arithmetic", sol.ansatz.degrees(), sol.arithmetic);
    let json = operator_to_json(&g);
    match out {
        Some(p) => {
            write(p, &format!("{json}\n"))?;
            println!("{g}");
        }
        None => println!("{json}"),
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn check_kernel_cmd(
    f_spec: &Path,
    g_spec: &str,
    samples: usize,
    seed: u64,
    tol: f64,
    length_scale: f64,
    signal_variance: f64,
) -> Result<(), Failure> {
    let f = load_operator(f_spec)?;
    let g = match g_spec {
        "auto" => construct_g(&f, &ConstructOptions::default())?.0,
        "identity" => OperatorMatrix::identity(f.cols(), f.vars()),
        path => load_operator(Path::new(path))?,
    };
    let theta = SeHyperparams::new(signal_variance, length_scale, 0.0).map_err(|e| Failure::usage(e.to_string()))?;
    let kernel = transform_kernel(&g, &theta).map_err(|e| Failure::usage(e.to_string()))?;
    if kernel.rows() != f.cols() {
        return Err(Failure::usage(format!(
            "G has {} rows but F acts on {} components",
            kernel.rows(),
            f.cols()
        )));
    }
    if samples == 0 {
        log::warn!("no samples requested; the check passes vacuously");
        println!("max violation 0 (0 samples)");
        return Ok(());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-4 * length_scale;
    let span = 2.0 * length_scale;
    let check = check_kernel_constraint(&f, &kernel, samples, (-span, span), h, &mut rng);
    println!(
        "max violation {:.3e} (kernel scale {:.3e}, relative {:.3e}, {} samples)",
        check.max_violation,
        check.kernel_scale,
        check.relative(),
        check.samples
    );
    if check.relative() <= tol {
        Ok(())
    } else {
        Err(Failure::no_solution(format!(
            "constraint violated: relative {:.3e} exceeds tolerance {tol:e}",
            check.relative()
        )))
    }
}

fn split_table(path: &Path, input_dim: usize) -> Result<(DMatrix<f64>, DMatrix<f64>), Failure> {
    let (_, table) = read_table(path).map_err(|e| Failure::usage(e.to_string()))?;
    if table.ncols() <= input_dim {
        return Err(Failure::usage(format!(
            "{}: expected {input_dim} input columns followed by outputs, found {} columns",
            path.display(),
            table.ncols()
        )));
    }
    Ok((
        table.columns(0, input_dim).into_owned(),
        table.columns(input_dim, table.ncols() - input_dim).into_owned(),
    ))
}

fn predict_cmd(model: &Path, points: &Path, out: &Path) -> Result<(), Failure> {
    let spec: ModelSpec = serde_json::from_str(&read(model)?)
        .map_err(|e| Failure::usage(format!("{} line {} column {}: {e}", model.display(), e.line(), e.column())))?;
    let base = model.parent().unwrap_or(Path::new("."));
    let (x, y) = split_table(&base.join(&spec.training_data), spec.input_dim)?;
    let data = Dataset::new(x, y, spec.noise_variance.max(0.0).sqrt())?;
    let resolved = spec.resolve(data.output_dim())?;
    let (thetas, noise) = match &spec.fit {
        Some(cfg) => {
            let fitted = fit_hyperparameters(&data, &resolved.family, &resolved.thetas, spec.noise_variance, cfg)?;
            log::info!("fitted hyperparameters {:?}", fitted.thetas);
            (fitted.thetas, fitted.noise_variance)
        }
        None => (resolved.thetas, spec.noise_variance),
    };
    let k = data.output_dim();
    let gp = GpModel::fit(resolved.family.build(&thetas)?, data, noise)?;
    let (_, q) = read_table(points).map_err(|e| Failure::usage(e.to_string()))?;
    if q.ncols() != spec.input_dim {
        return Err(Failure::usage(format!(
            "{}: expected {} columns, found {}",
            points.display(),
            spec.input_dim,
            q.ncols()
        )));
    }
    let pred = gp.predict(&q);
    let mut text = String::new();
    let mut header: Vec<String> = (1..=spec.input_dim).map(|i| format!("x{i}")).collect();
    header.extend((1..=k).map(|i| format!("mean{i}")));
    header.extend((1..=k).map(|i| format!("var{i}")));
    writeln!(text, "{}", header.join(",")).unwrap();
    for i in 0..q.nrows() {
        let row: Vec<String> = q
            .row(i)
            .iter()
            .chain(pred.means.row(i).iter())
            .chain(pred.marginal_variances.row(i).iter())
            .map(|v| v.to_string())
            .collect();
        writeln!(text, "{}", row.join(",")).unwrap();
    }
    write(out, &text)?;
    println!("wrote {} predictions to {}", q.nrows(), out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::ConstructG { f_spec, max_degree, out } => construct_g_cmd(&f_spec, max_degree, out.as_deref()),
        Command::CheckKernel {
            f_spec,
            g_spec,
            samples,
            seed,
            tol,
            length_scale,
            signal_variance,
        } => check_kernel_cmd(&f_spec, &g_spec, samples, seed, tol, length_scale, signal_variance),
        Command::SimExperiment { config, out, seed } => {
            let config = load_config(config.as_deref(), ExperimentConfig::default(), seed)?;
            let report = run_simulated(&config)?;
            print_report(&report);
            emit_report(&report, &out)?;
            Ok(())
        }
        Command::RealExperiment { config, data, out, seed } => {
            let config = load_config(config.as_deref(), ExperimentConfig::real_default(), seed)?;
            let report = run_real_data(&config, &data)?;
            print_report(&report);
            emit_report(&report, &out)?;
            Ok(())
        }
        Command::Predict { model, points, out } => predict_cmd(&model, &points, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
