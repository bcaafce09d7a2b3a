//! The bimodal-system benchmark: random binary inputs, noisy samples of the
//! output on `[0, 0.75]`, and multiple kernel learning over warped TC
//! dictionaries, scored against the true impulse response and output on `[0, 1]`.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gram::assemble_gram;
use crate::io::{write_curve_csv, write_dataset_csv, write_signal_csv, write_weights_csv};
use crate::kernels::{Atom, BaseShape, KernelSpec};
use crate::mkl::{active_atoms, fit_mkl, fit_mkl_from, KernelDictionary, MklModel, MklOptions};
use crate::quadrature::{trapezoid, QuadratureConfig};
use crate::signals::{add_noise_from_rng, binary_input_from_rng, Dataset, PiecewiseConstantSignal, TrueSystem};
use crate::solver::{log_grid, select_lambda, IdentifiedModel};

const STREAM_INPUT: u64 = 0;
const STREAM_TIMES: u64 = 1;
const STREAM_NOISE: u64 = 2;

/// How the regularization weight is chosen before reporting an MKL fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaSelection {
    /// GCV once on the uniform mixture, then MKL at that fixed `lambda`.
    Uniform,
    /// MKL at every grid point (warm-started from the larger neighbour) and
    /// GCV on each learned mixture; the best pair is kept.
    Learned,
}

impl std::fmt::Display for LambdaSelection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LambdaSelection::Uniform => "uniform",
            LambdaSelection::Learned => "learned",
        })
    }
}

impl FromStr for LambdaSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "uniform" => Ok(LambdaSelection::Uniform),
            "learned" => Ok(LambdaSelection::Learned),
            other => Err(bad(format!(
                "lambda selection must be `uniform` or `learned`, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub system: TrueSystem,
    pub n_runs: usize,
    pub n_samples: usize,
    pub sample_interval: (f64, f64),
    pub noise_ratio: f64,
    /// Dictionary size.
    pub m: usize,
    /// Endpoints of the log-spaced decay-rate grid.
    pub omega_range: (f64, f64),
    pub r_values: Vec<u32>,
    pub n_switch: usize,
    pub switch_interval: (f64, f64),
    /// Levels `(first, second)` the binary input alternates between.
    pub input_levels: (f64, f64),
    pub base_seed: u64,
    /// `(lo, hi, count)` of the log-spaced GCV grid.
    pub lambda_grid: (f64, f64, usize),
    pub quadrature: QuadratureConfig,
    pub fit_nodes: usize,
    pub active_threshold: f64,
    /// Scale each basis Gram matrix to trace `n_samples` before learning weights.
    pub normalize_grams: bool,
    pub lambda_selection: LambdaSelection,
    pub mkl: MklOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            system: TrueSystem::default(),
            n_runs: 50,
            n_samples: 100,
            sample_interval: (0.0, 0.75),
            noise_ratio: 0.1,
            m: 40,
            omega_range: (1.0, 1000.0),
            r_values: vec![1, 2],
            n_switch: 10,
            switch_interval: (0.0, 1.0),
            input_levels: (1.0, 0.0),
            base_seed: 2013,
            lambda_grid: (1e-8, 1e2, 30),
            quadrature: QuadratureConfig::default(),
            fit_nodes: 2001,
            active_threshold: 0.01,
            normalize_grams: true,
            lambda_selection: LambdaSelection::Learned,
            // looser than the library default: 40 atoms per run, 30 lambdas
            mkl: MklOptions {
                tol: 1e-9,
                ..MklOptions::default()
            },
        }
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let interval_ok = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && a < b;
        if self.n_runs == 0 || self.n_samples == 0 || self.m == 0 || self.n_switch == 0 {
            return Err(bad("n_runs, n_samples, m and n_switch must be positive"));
        }
        if !interval_ok(self.sample_interval) || !interval_ok(self.switch_interval) {
            return Err(bad("sample and switch intervals must be nonempty"));
        }
        let (w0, w1) = self.omega_range;
        if !(w0 > 0.0 && w0 <= w1 && w1.is_finite()) {
            return Err(bad("omega range must satisfy 0 < min <= max"));
        }
        if self.r_values.is_empty() || self.r_values.contains(&0) {
            return Err(bad("r values must be >= 1"));
        }
        if !(self.noise_ratio >= 0.0 && self.noise_ratio.is_finite()) {
            return Err(bad("noise_ratio must be >= 0"));
        }
        let (l0, l1, ln) = self.lambda_grid;
        if !(l0 > 0.0 && l0 <= l1 && l1.is_finite() && ln > 0) {
            return Err(bad("lambda grid must satisfy 0 < lo <= hi and count >= 1"));
        }
        if self.fit_nodes < 3 || self.fit_nodes.is_multiple_of(2) {
            return Err(bad("fit_nodes must be odd and >= 3"));
        }
        if !(self.active_threshold >= 0.0) {
            return Err(bad("active_threshold must be >= 0"));
        }
        if !(self.mkl.tol > 0.0) || self.mkl.max_iter == 0 {
            return Err(bad("mkl_tol must be positive and mkl_max_iter >= 1"));
        }
        self.quadrature.validate()
    }

    pub fn omega_grid(&self) -> Vec<f64> {
        log_grid(self.omega_range.0, self.omega_range.1, self.m)
    }

    pub fn lambda_values(&self) -> Vec<f64> {
        let (lo, hi, n) = self.lambda_grid;
        log_grid(lo, hi, n)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_config(&text).map_err(|(line, msg)| Error::Parse {
            path: path.display().to_string(),
            line,
            msg,
        })
    }

    /// The `key = value` form accepted by [`ExperimentConfig::from_str`].
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let pair = |(a, b): (f64, f64)| format!("{a}, {b}");
        let _ = writeln!(s, "omega1 = {}", self.system.omega1);
        let _ = writeln!(s, "omega2 = {}", self.system.omega2);
        let _ = writeln!(s, "amplitude = {}", self.system.amplitude);
        let _ = writeln!(s, "n_runs = {}", self.n_runs);
        let _ = writeln!(s, "n_samples = {}", self.n_samples);
        let _ = writeln!(s, "sample_interval = {}", pair(self.sample_interval));
        let _ = writeln!(s, "noise_ratio = {}", self.noise_ratio);
        let _ = writeln!(s, "m = {}", self.m);
        let _ = writeln!(s, "omega_range = {}", pair(self.omega_range));
        let rs: Vec<String> = self.r_values.iter().map(|r| r.to_string()).collect();
        let _ = writeln!(s, "r_values = {}", rs.join(", "));
        let _ = writeln!(s, "n_switch = {}", self.n_switch);
        let _ = writeln!(s, "switch_interval = {}", pair(self.switch_interval));
        let _ = writeln!(s, "input_levels = {}", pair(self.input_levels));
        let _ = writeln!(s, "base_seed = {}", self.base_seed);
        let (l0, l1, ln) = self.lambda_grid;
        let _ = writeln!(s, "lambda_grid = {l0}, {l1}, {ln}");
        let _ = writeln!(s, "panel_order = {}", self.quadrature.panel_order);
        let _ = writeln!(s, "entry_rel_tol = {}", self.quadrature.entry_rel_tol);
        let _ = writeln!(s, "fit_nodes = {}", self.fit_nodes);
        let _ = writeln!(s, "active_threshold = {}", self.active_threshold);
        let _ = writeln!(s, "normalize_grams = {}", self.normalize_grams);
        let _ = writeln!(s, "lambda_selection = {}", self.lambda_selection);
        let _ = writeln!(s, "mkl_tol = {}", self.mkl.tol);
        let _ = writeln!(s, "mkl_max_iter = {}", self.mkl.max_iter);
        s
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_config(s).map_err(|(line, msg)| Error::Parse {
            path: "<config>".into(),
            line,
            msg,
        })
    }
}

fn parse_config(text: &str) -> std::result::Result<ExperimentConfig, (u64, String)> {
    let mut cfg = ExperimentConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or((line_no, format!("expected `key = value`, found `{line}`")))?;
        let key = key.trim();
        let value = value.trim();
        let err = |m: String| (line_no, m);
        let num = |v: &str| -> std::result::Result<f64, (u64, String)> {
            v.trim()
                .parse::<f64>()
                .map_err(|_| err(format!("`{v}` is not a number")))
        };
        let int = |v: &str| -> std::result::Result<u64, (u64, String)> {
            v.trim()
                .parse::<u64>()
                .map_err(|_| err(format!("`{v}` is not a nonnegative integer")))
        };
        let list = |v: &str, n: usize| -> std::result::Result<Vec<String>, (u64, String)> {
            let parts: Vec<String> = v.split(',').map(|p| p.trim().to_string()).collect();
            if parts.len() != n {
                return Err(err(format!("`{key}` expects {n} comma-separated values")));
            }
            Ok(parts)
        };
        let pair = |v: &str| -> std::result::Result<(f64, f64), (u64, String)> {
            let p = list(v, 2)?;
            Ok((num(&p[0])?, num(&p[1])?))
        };
        match key {
            "omega1" => cfg.system.omega1 = num(value)?,
            "omega2" => cfg.system.omega2 = num(value)?,
            "amplitude" => cfg.system.amplitude = num(value)?,
            "n_runs" => cfg.n_runs = int(value)? as usize,
            "n_samples" => cfg.n_samples = int(value)? as usize,
            "sample_interval" => cfg.sample_interval = pair(value)?,
            "noise_ratio" => cfg.noise_ratio = num(value)?,
            "m" => cfg.m = int(value)? as usize,
            "omega_range" => cfg.omega_range = pair(value)?,
            "r_values" => {
                cfg.r_values = value
                    .split(',')
                    .map(|v| int(v).map(|x| x as u32))
                    .collect::<std::result::Result<_, _>>()?
            }
            "n_switch" => cfg.n_switch = int(value)? as usize,
            "switch_interval" => cfg.switch_interval = pair(value)?,
            "input_levels" => cfg.input_levels = pair(value)?,
            "base_seed" => cfg.base_seed = int(value)?,
            "lambda_grid" => {
                let p = list(value, 3)?;
                cfg.lambda_grid = (num(&p[0])?, num(&p[1])?, int(&p[2])? as usize);
            }
            "panel_order" => cfg.quadrature.panel_order = int(value)? as usize,
            "entry_rel_tol" => cfg.quadrature.entry_rel_tol = num(value)?,
            "fit_nodes" => cfg.fit_nodes = int(value)? as usize,
            "active_threshold" => cfg.active_threshold = num(value)?,
            "normalize_grams" => {
                cfg.normalize_grams = value
                    .parse()
                    .map_err(|_| err(format!("`{value}` is not `true` or `false`")))?
            }
            "lambda_selection" => {
                cfg.lambda_selection = value.parse().map_err(|e: Error| err(e.to_string()))?
            }
            "mkl_tol" => cfg.mkl.tol = num(value)?,
            "mkl_max_iter" => cfg.mkl.max_iter = int(value)? as usize,
            other => return Err(err(format!("unknown key `{other}`"))),
        }
    }
    cfg.validate().map_err(|e| (0, e.to_string()))?;
    Ok(cfg)
}

/// `m` kernels `(t1 t2)^(r-1) exp(-w_k max(t1, t2))` on the configured grid.
pub fn dictionary_basis(config: &ExperimentConfig, r: u32) -> Result<Vec<KernelSpec>> {
    if r == 0 {
        return Err(bad("r must be >= 1"));
    }
    config
        .omega_grid()
        .into_iter()
        .map(|w| KernelSpec::warped(vec![Atom::unit(w)], r - 1, BaseShape::Min))
        .collect()
}

pub fn build_dictionary(
    config: &ExperimentConfig,
    r: u32,
    u: &PiecewiseConstantSignal,
    times: &[f64],
) -> Result<KernelDictionary> {
    let basis = dictionary_basis(config, r)?;
    let grams = basis
        .iter()
        .map(|spec| assemble_gram(spec, u, times, &config.quadrature))
        .collect::<Result<Vec<_>>>()?;
    let dict = KernelDictionary::new(basis, grams)?;
    if config.normalize_grams {
        dict.trace_normalized()
    } else {
        Ok(dict)
    }
}

/// MKL fit on `dict` with `lambda` chosen from `grid` by the given rule.
pub fn fit_dictionary(
    dict: &KernelDictionary,
    y: &[f64],
    grid: &[f64],
    rule: LambdaSelection,
    opts: &MklOptions,
) -> Result<MklModel> {
    match rule {
        LambdaSelection::Uniform => {
            let uniform = dict.combined(&dict.uniform_weights());
            let lambda = select_lambda(&uniform, y, grid)?.selected;
            fit_mkl(dict, y, lambda, opts)
        }
        LambdaSelection::Learned => {
            let mut init = dict.uniform_weights();
            let mut best: Option<(f64, MklModel)> = None;
            // descending, so ties keep the larger lambda
            for &lambda in grid.iter().rev() {
                let model = fit_mkl_from(dict, y, lambda, &init, opts)?;
                let k = dict.combined(&model.weights);
                let score = select_lambda(&k, y, &[lambda]).map_or(f64::NAN, |g| g.scores[0]);
                init.clone_from(&model.weights);
                if score.is_finite() && best.as_ref().is_none_or(|(b, _)| score < *b) {
                    best = Some((score, model));
                }
            }
            best.map(|(_, m)| m).ok_or(Error::LambdaSelection)
        }
    }
}

fn fit_nodes(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// `(fit_h, fit_y)` from estimates sampled on `n` equispaced nodes of `[0, 1]`.
pub fn fit_scores_sampled(
    h_star: &[f64],
    y_star: &[f64],
    truth: &TrueSystem,
    u: &PiecewiseConstantSignal,
) -> Result<(f64, f64)> {
    let n = h_star.len();
    if n < 3 || y_star.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n.max(3),
            got: y_star.len(),
        });
    }
    let ts = fit_nodes(n);
    let h: Vec<f64> = ts.iter().map(|&t| truth.impulse(t)).collect();
    let y: Vec<f64> = ts.iter().map(|&t| truth.response(u, t)).collect();
    let y_bar = trapezoid(&y, 0.0, 1.0);
    let sq = |f: &dyn Fn(usize) -> f64| trapezoid(&(0..n).map(f).collect::<Vec<_>>(), 0.0, 1.0);
    let h_den = sq(&|i| h[i] * h[i]);
    let y_den = sq(&|i| (y[i] - y_bar).powi(2));
    if !(h_den > 0.0) {
        return Err(Error::UndefinedScore("true impulse response vanishes on [0, 1]"));
    }
    if !(y_den > 0.0) {
        return Err(Error::UndefinedScore("true output is constant on [0, 1]"));
    }
    let h_num = sq(&|i| (h_star[i] - h[i]).powi(2));
    let y_num = sq(&|i| (y_star[i] - y[i]).powi(2));
    Ok((
        100.0 * (1.0 - (h_num / h_den).sqrt()),
        100.0 * (1.0 - (y_num / y_den).sqrt()),
    ))
}

/// `fit_h = 100 (1 - sqrt(int (h* - h)^2 / int h^2))` and the analogous output
/// score against the mean-output baseline, by trapezoid on `n_nodes` points of `[0, 1]`.
pub fn fit_scores(
    h_star: impl Fn(f64) -> f64,
    y_star: impl Fn(f64) -> f64,
    truth: &TrueSystem,
    u: &PiecewiseConstantSignal,
    n_nodes: usize,
) -> Result<(f64, f64)> {
    if n_nodes < 3 || n_nodes.is_multiple_of(2) {
        return Err(bad("n_nodes must be odd and >= 3"));
    }
    let ts = fit_nodes(n_nodes);
    let h: Vec<f64> = ts.iter().map(|&t| h_star(t)).collect();
    let y: Vec<f64> = ts.iter().map(|&t| y_star(t)).collect();
    fit_scores_sampled(&h, &y, truth, u)
}

/// One `(run, r)` result row.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run: usize,
    pub r: u32,
    pub seed: u64,
    pub fit_h: f64,
    pub fit_y: f64,
    pub lambda: f64,
    pub active_atoms: usize,
    pub weights: Vec<f64>,
}

/// Data and curves of a single run, kept for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub input: PiecewiseConstantSignal,
    pub data: Dataset,
    pub nodes: Vec<f64>,
    pub true_h: Vec<f64>,
    pub true_y: Vec<f64>,
    /// `(r, h*, y*)` on `nodes`.
    pub estimates: Vec<(u32, Vec<f64>, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub r: u32,
    pub metric: &'static str,
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub records: Vec<RunRecord>,
    /// `(run, message)` for runs dropped after a numerical failure.
    pub failures: Vec<(usize, String)>,
    pub summaries: Vec<Summary>,
    pub omegas: Vec<f64>,
    pub first_run: Option<RunArtifacts>,
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Min, lower hinge, median, upper hinge, max. The hinges are medians of the
/// lower and upper halves, each including the median when the count is odd.
pub fn five_number_summary(values: &[f64]) -> Option<[f64; 5]> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let half = n.div_ceil(2);
    Some([
        v[0],
        median_sorted(&v[..half]),
        median_sorted(&v),
        median_sorted(&v[n - half..]),
        v[n - 1],
    ])
}

/// Ordinal statistics of one metric for one `r`.
pub fn summarize(records: &[RunRecord], r: u32, metric: &'static str) -> Option<Summary> {
    let values: Vec<f64> = records
        .iter()
        .filter(|rec| rec.r == r)
        .map(|rec| match metric {
            "fit_h" => rec.fit_h,
            _ => rec.fit_y,
        })
        .collect();
    let [min, q1, median, q3, max] = five_number_summary(&values)?;
    Some(Summary {
        r,
        metric,
        count: values.len(),
        min,
        q1,
        median,
        q3,
        max,
    })
}

fn run_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

struct RunOutput {
    records: Vec<RunRecord>,
    artifacts: Option<RunArtifacts>,
}

/// Input signal and noisy measurements of repetition `run`, drawn from
/// independent streams of a generator seeded with `base_seed + run`.
pub fn simulate_run(config: &ExperimentConfig, run: usize) -> Result<(PiecewiseConstantSignal, Dataset)> {
    let seed = config.base_seed.wrapping_add(run as u64);
    let u = binary_input_from_rng(
        &mut run_rng(seed, STREAM_INPUT),
        config.n_switch,
        config.switch_interval,
        config.input_levels,
    )?;
    let mut times_rng = run_rng(seed, STREAM_TIMES);
    let (a, b) = config.sample_interval;
    let times: Vec<f64> = (0..config.n_samples)
        .map(|_| times_rng.random_range(a..b))
        .collect();
    let y0: Vec<f64> = times.iter().map(|&t| config.system.response(&u, t)).collect();
    let y = add_noise_from_rng(&mut run_rng(seed, STREAM_NOISE), &y0, config.noise_ratio)?;
    Ok((u, Dataset::new(times, y)?))
}

fn run_single(config: &ExperimentConfig, run: usize, keep_curves: bool) -> Result<RunOutput> {
    let seed = config.base_seed.wrapping_add(run as u64);
    let (u, data) = simulate_run(config, run)?;
    let times = data.times().to_vec();
    let y = data.values().to_vec();

    let nodes = fit_nodes(config.fit_nodes);
    let mut records = Vec::with_capacity(config.r_values.len());
    let mut estimates = Vec::new();
    for &r in &config.r_values {
        let dict = build_dictionary(config, r, &u, &times)?;
        let mkl = fit_dictionary(&dict, &y, &config.lambda_values(), config.lambda_selection, &config.mkl)?;
        let lambda = mkl.lambda;
        let model = IdentifiedModel::new(
            dict.components(&mkl.weights),
            u.clone(),
            times.clone(),
            mkl.coefficients.clone(),
            lambda,
            config.quadrature.clone(),
        )?;
        let h_star = model.impulse_curve(&nodes)?;
        let y_star = model.output_curve(&nodes)?;
        let (fit_h, fit_y) = fit_scores_sampled(&h_star, &y_star, &config.system, &u)?;
        records.push(RunRecord {
            run,
            r,
            seed,
            fit_h,
            fit_y,
            lambda,
            active_atoms: active_atoms(&mkl, config.active_threshold).len(),
            weights: mkl.weights.clone(),
        });
        if keep_curves {
            estimates.push((r, h_star, y_star));
        }
    }
    let artifacts = if keep_curves {
        Some(RunArtifacts {
            data,
            true_h: nodes.iter().map(|&t| config.system.impulse(t)).collect(),
            true_y: nodes.iter().map(|&t| config.system.response(&u, t)).collect(),
            nodes,
            input: u,
            estimates,
        })
    } else {
        None
    };
    Ok(RunOutput { records, artifacts })
}

/// Run every configured repetition. Runs that fail numerically are recorded in
/// `failures` and left out of the summaries; configuration errors abort.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let outputs: Vec<Result<RunOutput>> = (0..config.n_runs)
        .into_par_iter()
        .map(|run| run_single(config, run, run == 0))
        .collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut first_run = None;
    for (run, out) in outputs.into_iter().enumerate() {
        match out {
            Ok(o) => {
                records.extend(o.records);
                if o.artifacts.is_some() {
                    first_run = o.artifacts;
                }
            }
            Err(e) if e.is_numerical() => failures.push((run, e.to_string())),
            Err(e) => return Err(e),
        }
    }
    let mut summaries = Vec::new();
    for &r in &config.r_values {
        for metric in ["fit_h", "fit_y"] {
            if let Some(s) = summarize(&records, r, metric) {
                summaries.push(s);
            }
        }
    }
    Ok(ExperimentReport {
        records,
        failures,
        summaries,
        omegas: config.omega_grid(),
        first_run,
    })
}

impl ExperimentReport {
    pub fn median(&self, r: u32, metric: &str) -> Option<f64> {
        self.summaries
            .iter()
            .find(|s| s.r == r && s.metric == metric)
            .map(|s| s.median)
    }

    pub fn report_csv(&self) -> String {
        let mut s = String::from("run,r,seed,fit_h,fit_y,lambda,active_atoms\n");
        for rec in &self.records {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                rec.run, rec.r, rec.seed, rec.fit_h, rec.fit_y, rec.lambda, rec.active_atoms
            );
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("r,metric,count,excluded,min,q1,median,q3,max\n");
        for sm in &self.summaries {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                sm.r,
                sm.metric,
                sm.count,
                self.failures.len(),
                sm.min,
                sm.q1,
                sm.median,
                sm.q3,
                sm.max
            );
        }
        s
    }

    /// Write `report.csv`, `summary.csv`, `failures.csv` and the first run's
    /// curves and weights into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let put = |name: &str, text: &str| {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| Error::io(&p, e))
        };
        put("report.csv", &self.report_csv())?;
        put("summary.csv", &self.summary_csv())?;
        let mut f = String::from("run,message\n");
        for (run, msg) in &self.failures {
            let _ = writeln!(f, "{run},\"{}\"", msg.replace('"', "'"));
        }
        put("failures.csv", &f)?;
        if let Some(a) = &self.first_run {
            write_signal_csv(&dir.join("input.csv"), &a.input)?;
            write_dataset_csv(&dir.join("measurements.csv"), &a.data)?;
            write_curve_csv(&dir.join("true_h.csv"), "h", &a.nodes, &a.true_h)?;
            write_curve_csv(&dir.join("true_y.csv"), "y", &a.nodes, &a.true_y)?;
            for (r, h, y) in &a.estimates {
                write_curve_csv(&dir.join(format!("h_r{r}.csv")), "h", &a.nodes, h)?;
                write_curve_csv(&dir.join(format!("y_r{r}.csv")), "y", &a.nodes, y)?;
            }
            for rec in self.records.iter().filter(|rec| rec.run == 0) {
                write_weights_csv(
                    &dir.join(format!("weights_r{}.csv", rec.r)),
                    &self.omegas,
                    &rec.weights,
                )?;
            }
        }
        Ok(())
    }
}
