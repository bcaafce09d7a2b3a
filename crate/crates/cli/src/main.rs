use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kernel_sysid::diagnostics::{
    relative_degree_probe, stability_trend_with, Probe, TrendThresholds, DEFAULT_H_STEP,
};
use kernel_sysid::experiment::{run_experiment, ExperimentConfig};
use kernel_sysid::gram::assemble_gram;
use kernel_sysid::io::{
    read_dataset_csv, read_signal_csv, write_curve_csv, write_gram_csv, write_model_csv,
    write_weights_csv,
};
use kernel_sysid::kernels::KernelSpec;
use kernel_sysid::mkl::{fit_mkl, KernelDictionary, MklOptions};
use kernel_sysid::quadrature::QuadratureConfig;
use kernel_sysid::solver::{fit_rls, log_grid, select_lambda, IdentifiedModel};
use kernel_sysid::Error;

#[derive(Parser)]
#[command(name = "ksysid", version, about = "Kernel-based impulse response identification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the bimodal-system benchmark and write CSV reports.
    Experiment(ExperimentArgs),
    /// Fit an impulse response to one input signal and its measurements.
    Identify(IdentifyArgs),
    /// Stability trend and relative-degree probe of a kernel.
    Diagnose(DiagnoseArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// `key = value` configuration file; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Override the number of runs.
    #[arg(long)]
    runs: Option<usize>,
}

#[derive(Args)]
struct IdentifyArgs {
    /// Input signal CSV with header `t,level`.
    #[arg(long)]
    input: PathBuf,
    /// Measurements CSV with header `t,y`.
    #[arg(long)]
    data: PathBuf,
    /// Kernel description; repeat to learn a weighted combination.
    #[arg(long = "kernel", required = true)]
    kernels: Vec<String>,
    #[arg(long, conflicts_with = "gcv")]
    lambda: Option<f64>,
    /// Choose lambda by generalized cross validation.
    #[arg(long)]
    gcv: bool,
    /// GCV grid as `lo,hi,count`.
    #[arg(long, default_value = "1e-8,1e2,30")]
    lambda_grid: String,
    #[arg(long)]
    out: PathBuf,
    /// Output curve grid as `t0,t1,count`; defaults to `0, 4/3 max(t), 401`.
    #[arg(long)]
    grid: Option<String>,
    /// Also write the Gram matrix of each kernel.
    #[arg(long)]
    export_gram: bool,
    /// Scale each kernel's Gram matrix to unit mean diagonal before learning weights.
    #[arg(long)]
    normalize: bool,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long)]
    kernel: String,
    /// Increasing truncation horizons.
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,40")]
    horizons: Vec<f64>,
    /// Probe function: `constant` or `cosine:<w>`.
    #[arg(long, default_value = "constant")]
    probe: String,
    /// Section time of the relative-degree probe.
    #[arg(long, default_value_t = 1.0)]
    section_time: f64,
    #[arg(long, default_value_t = 4)]
    max_order: usize,
    #[arg(long, default_value_t = DEFAULT_H_STEP)]
    h_step: f64,
    /// Also write the stability table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Experiment(a) => experiment(a),
        Command::Identify(a) => identify(a),
        Command::Diagnose(a) => diagnose(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn experiment(args: ExperimentArgs) -> Result<(), Error> {
    let mut config = match &args.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(n) = args.runs {
        config.n_runs = n;
    }
    let report = run_experiment(&config)?;
    report.write(&args.out)?;
    for (run, msg) in &report.failures {
        eprintln!("run {run} excluded: {msg}");
    }
    println!("{:>3} {:>6} {:>5} {:>9} {:>9} {:>9} {:>9} {:>9}", "r", "metric", "n", "min", "q1", "median", "q3", "max");
    for s in &report.summaries {
        println!(
            "{:>3} {:>6} {:>5} {:>9.3} {:>9.3} {:>9.3} {:>9.3} {:>9.3}",
            s.r, s.metric, s.count, s.min, s.q1, s.median, s.q3, s.max
        );
    }
    Ok(())
}

fn parse_triple(s: &str, what: &str) -> Result<(f64, f64, usize), Error> {
    let bad = || Error::InvalidArgument(format!("{what} must be `a,b,count`, got `{s}`"));
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].parse().map_err(|_| bad())?;
    let b: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    if !(a.is_finite() && b.is_finite() && a < b && n >= 2) {
        return Err(bad());
    }
    Ok((a, b, n))
}

fn create_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn identify(args: IdentifyArgs) -> Result<(), Error> {
    let u = read_signal_csv(&args.input)?;
    let data = read_dataset_csv(&args.data)?;
    let specs = args
        .kernels
        .iter()
        .map(|s| s.parse::<KernelSpec>())
        .collect::<Result<Vec<_>, _>>()?;
    if args.lambda.is_none() && !args.gcv {
        return Err(Error::InvalidArgument("pass either --lambda <value> or --gcv".into()));
    }
    let (t0, t1, n) = match &args.grid {
        Some(g) => parse_triple(g, "--grid")?,
        None => {
            let tmax = data.times().iter().copied().fold(0.0f64, f64::max);
            (0.0, if tmax > 0.0 { tmax * 4.0 / 3.0 } else { 1.0 }, 401)
        }
    };
    let grid: Vec<f64> = (0..n)
        .map(|i| t0 + (t1 - t0) * i as f64 / (n - 1) as f64)
        .collect();
    let q = QuadratureConfig::default();
    let times = data.times().to_vec();
    let y = data.values();
    let grams = specs
        .iter()
        .map(|s| assemble_gram(s, &u, &times, &q))
        .collect::<Result<Vec<_>, _>>()?;
    create_dir(&args.out)?;
    if args.export_gram {
        for (k, g) in grams.iter().enumerate() {
            let name = if grams.len() == 1 {
                "gram.csv".to_string()
            } else {
                format!("gram_{k}.csv")
            };
            write_gram_csv(&args.out.join(name), g)?;
        }
    }
    let mut dict = KernelDictionary::new(specs.clone(), grams)?;
    if args.normalize {
        dict = dict.trace_normalized()?;
    }
    let lambda = match args.lambda {
        Some(l) => l,
        None => {
            let (lo, hi, count) = parse_triple(&args.lambda_grid, "--lambda-grid")?;
            let uniform = dict.combined(&dict.uniform_weights());
            select_lambda(&uniform, y, &log_grid(lo, hi, count))?.selected
        }
    };
    let (weights, coefficients) = if specs.len() == 1 {
        (vec![1.0], fit_rls(dict.grams()[0].matrix(), y, lambda)?)
    } else {
        let m = fit_mkl(&dict, y, lambda, &MklOptions::default())?;
        (m.weights, m.coefficients)
    };
    if specs.len() > 1 {
        let omegas: Vec<f64> = specs.iter().map(|s| s.min_rate().unwrap_or(0.0)).collect();
        write_weights_csv(&args.out.join("weights.csv"), &omegas, &weights)?;
    }
    let model = IdentifiedModel::new(
        dict.components(&weights),
        u,
        times,
        coefficients,
        lambda,
        q,
    )?;
    write_model_csv(&args.out.join("model.csv"), &model)?;
    write_curve_csv(&args.out.join("impulse.csv"), "h", &grid, &model.impulse_curve(&grid)?)?;
    write_curve_csv(&args.out.join("output.csv"), "y", &grid, &model.output_curve(&grid)?)?;
    println!("lambda = {lambda}");
    Ok(())
}

fn parse_probe(s: &str) -> Result<Probe, Error> {
    let s = s.trim().to_ascii_lowercase();
    if s == "constant" {
        return Ok(Probe::Constant);
    }
    if let Some(w) = s.strip_prefix("cosine:") {
        if let Ok(w) = w.trim().parse::<f64>() {
            return Ok(Probe::Cosine(w));
        }
    }
    Err(Error::InvalidArgument(format!(
        "probe must be `constant` or `cosine:<w>`, got `{s}`"
    )))
}

fn diagnose(args: DiagnoseArgs) -> Result<(), Error> {
    let spec: KernelSpec = args.kernel.parse()?;
    let probe = parse_probe(&args.probe)?;
    let q = QuadratureConfig::default();
    let report = stability_trend_with(&spec, &args.horizons, probe, &TrendThresholds::default(), &q)?;
    let degree = relative_degree_probe(&spec, args.section_time, args.max_order, args.h_step)?;

    let mut out = String::new();
    let _ = writeln!(out, "kernel   {spec}");
    let _ = writeln!(out, "{:>12} {:>22} {:>22}", "horizon", "l1", "probe_integral");
    for ((t, a), b) in report.horizons.iter().zip(&report.l1_values).zip(&report.lemma2_values) {
        let _ = writeln!(out, "{t:>12} {a:>22.12e} {b:>22.12e}");
    }
    let _ = writeln!(out, "verdict  {}", report.verdict);
    let _ = writeln!(out, "{:>12} {:>22}", "order", "section_derivative");
    for (i, e) in degree.derivative_estimates.iter().enumerate() {
        let _ = writeln!(out, "{i:>12} {e:>22.12e}");
    }
    match degree.estimated_degree {
        Some(d) => {
            let _ = writeln!(out, "relative_degree  {d}");
        }
        None => {
            let _ = writeln!(out, "relative_degree  > {}", args.max_order + 1);
        }
    }
    print!("{out}");

    if let Some(path) = &args.csv {
        let mut csv = String::from("horizon,l1,probe_integral\n");
        for ((t, a), b) in report.horizons.iter().zip(&report.l1_values).zip(&report.lemma2_values) {
            let _ = writeln!(csv, "{t},{a},{b}");
        }
        std::fs::write(path, csv).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
    }
    Ok(())
}
