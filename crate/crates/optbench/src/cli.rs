//! Command-line front end.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::config::{parse_list, parse_methods, MethodChoice, Settings};
use crate::output::{columns_csv, fmt_f, trajectory_csv, write};
use crate::run::{
    gap_series, metric_kind, metric_series, overlays, prepare, resolve, run, Column, MethodParams, Prepared,
};
use crate::CliError;

/// Overrides the output directory unless `--out` is given.
pub const OUT_ENV: &str = "OPTBENCH_OUT";
pub const DEFAULT_OUT: &str = "optbench-out";
/// Stopping metric behind `eps`, recorded in every summary.
pub const ACCURACY_METRIC: &str = "residual";

#[derive(Debug, Parser)]
#[command(name = "optbench", version, about = "Runs optimistic saddle point solvers and writes CSV results")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One run: trajectory, summary and bound overlays.
    Solve(CommonArgs),
    /// Maximum average subsolver calls per iteration over random instances.
    BenchCalls(BenchArgs),
    /// Several methods on one instance, aligned by iteration.
    Compare(CompareArgs),
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// Flat `key = value` config; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// prob1, prob2, prob2_sc or prob_p3 (comma list for bench-calls).
    #[arg(long)]
    pub problem: Option<String>,
    /// first-fixed, first-ls, second-ls, pth-ls or mirror-prox.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub iters: Option<usize>,
    /// Target residual.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Use the full-size instances instead of the desk-scale defaults.
    #[arg(long)]
    pub paper_scale: bool,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Initial trial stepsize.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Strong monotonicity of the generated instance.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Regularization weight of the p-th-order model.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Order p of pth-ls.
    #[arg(long)]
    pub order: Option<usize>,
    /// M of first-fixed; 2·L1 by default.
    #[arg(long)]
    pub m_const: Option<f64>,
    /// Stepsize of mirror-prox; 1/(2·L1) by default.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Skip the reference point (no dist2, gap of prob2 or reference-based overlays).
    #[arg(long)]
    pub no_reference: bool,
}

#[derive(Debug, Args, Default)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Random instances per cell.
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Comma list of initial stepsizes.
    #[arg(long)]
    pub sigmas: Option<String>,
    /// Comma list of backtracking factors.
    #[arg(long)]
    pub betas: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma list of methods.
    #[arg(long)]
    pub methods: Option<String>,
}

/// Parses arguments, runs the command and returns the exit status.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => settings(&a, |_| Ok(())).and_then(|s| solve(&s)),
        Command::BenchCalls(b) => settings(&b.common, |s| {
            if let Some(v) = &b.repeats {
                s.repeats = Some(*v);
            }
            if let Some(v) = &b.sigmas {
                s.sigmas = parse_list("sigmas", v)?;
            }
            if let Some(v) = &b.betas {
                s.betas = parse_list("betas", v)?;
            }
            Ok(())
        })
        .and_then(|s| bench_calls(&s)),
        Command::Compare(c) => settings(&c.common, |s| {
            if let Some(v) = &c.methods {
                s.methods = parse_methods(v)?;
                if s.methods.is_empty() {
                    return Err(CliError::Config("empty method list".into()));
                }
            }
            Ok(())
        })
        .and_then(|s| compare(&s)),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("optbench: {e}");
            e.exit_code()
        }
    }
}

/// Config file, then flags, then the output-directory environment override.
fn settings(a: &CommonArgs, extra: impl FnOnce(&mut Settings) -> Result<(), CliError>) -> Result<Settings, CliError> {
    let base = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            Settings::from_text(&text)?
        }
        None => Settings::default(),
    };
    let mut flags = Settings {
        problem: a.problem.clone(),
        seed: a.seed,
        iters: a.iters,
        eps: a.eps,
        out: a.out.as_ref().map(|p| p.display().to_string()),
        paper_scale: a.paper_scale.then_some(true),
        alpha: a.alpha,
        beta: a.beta,
        sigma: a.sigma,
        mu: a.mu,
        lambda: a.lambda,
        order: a.order,
        m_const: a.m_const,
        eta: a.eta,
        reference: a.no_reference.then_some(false),
        ..Settings::default()
    };
    if let Some(m) = &a.method {
        flags.methods = parse_methods(m)?;
    }
    extra(&mut flags)?;
    let mut s = base.overlay(flags);
    if a.out.is_none() {
        if let Ok(dir) = std::env::var(OUT_ENV) {
            s.out = Some(dir);
        }
    }
    Ok(s)
}

fn out_dir(s: &Settings) -> PathBuf {
    PathBuf::from(s.out.clone().unwrap_or_else(|| DEFAULT_OUT.to_string()))
}

fn single_method(s: &Settings) -> Result<MethodChoice, CliError> {
    match s.methods.as_slice() {
        [m] => Ok(*m),
        [] => Err(CliError::Config("no method given".into())),
        _ => Err(CliError::Config("solve takes exactly one method".into())),
    }
}

fn problem_name(s: &Settings) -> Result<&str, CliError> {
    s.problem.as_deref().ok_or_else(|| CliError::Config("no problem given".into()))
}

fn check_iters(p: &MethodParams) -> Result<(), CliError> {
    if p.iters == 0 {
        return Err(CliError::Config("iters must be positive".into()));
    }
    Ok(())
}

fn summary_text(s: &Settings, prep: &Prepared, p: &MethodParams, traj: &optimistic::Trajectory) -> String {
    let mut t = String::new();
    let last = traj.records.last();
    let final_res = last.map_or(traj.residual0, |r| r.residual);
    let _ = writeln!(t, "problem = {}", prep.spec.name());
    let _ = writeln!(t, "instance = {}", prep.spec);
    let _ = writeln!(t, "seed = {}", prep.seed);
    let _ = writeln!(t, "method = {}", p.method.name());
    let _ = writeln!(t, "alpha = {}", p.alpha);
    let _ = writeln!(t, "beta = {}", p.beta);
    let _ = writeln!(t, "sigma = {}", p.sigma);
    let _ = writeln!(t, "eps = {:e}", p.eps);
    let _ = writeln!(t, "mu = {}", p.mu);
    let _ = writeln!(t, "iterations = {}", traj.iterations());
    let _ = writeln!(t, "stop = {:?}", traj.stop);
    let _ = writeln!(t, "last_status = {}", last.and_then(|r| r.status).map_or("none", |st| st.as_str()));
    let _ = writeln!(t, "accuracy_metric = {ACCURACY_METRIC}");
    let _ = writeln!(t, "final_residual = {}", fmt_f(final_res));
    let _ = writeln!(t, "total_calls = {}", traj.total_calls);
    let _ = writeln!(t, "average_calls = {}", fmt_f(traj.average_calls()));
    let _ = writeln!(t, "reference = {}", prep.z_star.is_some());
    for w in &traj.warnings {
        let _ = writeln!(t, "warning = {w}");
    }
    let _ = writeln!(t, "out = {}", out_dir(s).display());
    t
}

pub fn solve(s: &Settings) -> Result<(), CliError> {
    let method = single_method(s)?;
    let seed = s.seed.unwrap_or(1);
    let prep = prepare(s, problem_name(s)?, seed, s.reference.unwrap_or(true))?;
    let p = resolve(s, method, &prep.prob)?;
    check_iters(&p)?;
    let traj = run(&prep, &p, true)?;
    let gaps = gap_series(&prep, &traj)?;
    let dir = out_dir(s);
    write(&dir, "trajectory.csv", &trajectory_csv(&traj, gaps.as_deref()))?;
    write(&dir, "bounds.csv", &columns_csv(&overlays(&prep, &p, &traj)))?;
    let summary = summary_text(s, &prep, &p, &traj);
    write(&dir, "summary.txt", &summary)?;
    write(&dir, "config.txt", &Settings { seed: Some(seed), ..s.clone() }.to_text())?;
    print!("{summary}");
    Ok(())
}

/// One cell of the call-count table.
#[derive(Debug, Clone, PartialEq)]
pub struct CallCell {
    pub problem: String,
    pub m: usize,
    pub n: usize,
    pub mu: f64,
    pub sigma: f64,
    pub beta: f64,
    pub max_average_calls: f64,
    pub iterations_min: usize,
}

/// Maximum over `repeats` seeded instances of total calls / iterations.
pub fn call_cell(s: &Settings, name: &str, method: MethodChoice, sigma: f64, beta: f64) -> Result<CallCell, CliError> {
    let repeats = s.repeats.unwrap_or(50);
    if repeats == 0 {
        return Err(CliError::Config("repeats must be at least 1".into()));
    }
    let seed0 = s.seed.unwrap_or(1);
    let cell_settings = Settings { sigma: Some(sigma), beta: Some(beta), ..s.clone() };
    let results: Vec<Result<(f64, usize), CliError>> = (0..repeats as u64)
        .into_par_iter()
        .map(|i| {
            let prep = prepare(&cell_settings, name, seed0 + i, false)?;
            let p = resolve(&cell_settings, method, &prep.prob)?;
            check_iters(&p)?;
            let traj = run(&prep, &p, false)?;
            Ok((traj.average_calls(), traj.iterations()))
        })
        .collect();
    let mut best = f64::NEG_INFINITY;
    let mut min_iters = usize::MAX;
    for r in results {
        let (avg, its) = r?;
        best = best.max(avg);
        min_iters = min_iters.min(its);
    }
    let spec = crate::config::problem_spec_for(s, name)?;
    let (m, n) = spec.dims();
    Ok(CallCell {
        problem: name.to_string(),
        m,
        n,
        mu: spec.mu(),
        sigma,
        beta,
        max_average_calls: best,
        iterations_min: min_iters,
    })
}

pub fn bench_calls(s: &Settings) -> Result<(), CliError> {
    let method = single_method(s)?;
    if !matches!(method, MethodChoice::FirstLs | MethodChoice::SecondLs | MethodChoice::PthLs) {
        return Err(CliError::Config(format!("bench-calls needs a line-search method, got {}", method.name())));
    }
    let names: Vec<String> =
        problem_name(s)?.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect();
    let sigmas = if s.sigmas.is_empty() { vec![s.sigma.unwrap_or(1.0)] } else { s.sigmas.clone() };
    let betas = if s.betas.is_empty() { vec![s.beta.unwrap_or(0.5)] } else { s.betas.clone() };
    let repeats = s.repeats.unwrap_or(50);
    let mut csv = String::from(
        "problem,m,n,mu,method,sigma,beta,repeats,seed_base,iters,eps,accuracy_metric,max_avg_calls,min_iterations\n",
    );
    for name in &names {
        for &sigma in &sigmas {
            for &beta in &betas {
                let c = call_cell(s, name, method, sigma, beta)?;
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{},{},{:e},{ACCURACY_METRIC},{},{}",
                    c.problem,
                    c.m,
                    c.n,
                    c.mu,
                    method.name(),
                    sigma,
                    beta,
                    repeats,
                    s.seed.unwrap_or(1),
                    s.iters.unwrap_or(method.default_iters()),
                    s.eps.unwrap_or(method.default_eps()),
                    fmt_f(c.max_average_calls),
                    c.iterations_min
                );
                println!(
                    "{:<9} m={:<4} n={:<4} mu={:<5} sigma={:<7} beta={:<5} max avg calls {:.3}",
                    c.problem, c.m, c.n, c.mu, sigma, beta, c.max_average_calls
                );
            }
        }
    }
    write(&out_dir(s), "calls.csv", &csv)
}

pub fn compare(s: &Settings) -> Result<(), CliError> {
    if s.methods.is_empty() {
        return Err(CliError::Config("empty method list".into()));
    }
    let seed = s.seed.unwrap_or(1);
    let prep = prepare(s, problem_name(s)?, seed, s.reference.unwrap_or(true))?;
    let kind = metric_kind(&prep);
    let mut cols: Vec<Column> = Vec::new();
    let mut summary = String::new();
    let _ = writeln!(summary, "problem = {}", prep.spec.name());
    let _ = writeln!(summary, "instance = {}", prep.spec);
    let _ = writeln!(summary, "seed = {seed}");
    let _ = writeln!(summary, "metric = {}", kind.name());
    let _ = writeln!(summary, "accuracy_metric = {ACCURACY_METRIC}");
    for &m in &s.methods {
        let p = resolve(s, m, &prep.prob)?;
        check_iters(&p)?;
        let traj = run(&prep, &p, true)?;
        let gaps = gap_series(&prep, &traj)?;
        cols.push((format!("{}_{}", m.name(), kind.name()), metric_series(kind, &traj, gaps.as_deref())));
        for (name, col) in overlays(&prep, &p, &traj) {
            cols.push((format!("{}_{}", m.name(), name), col));
        }
        let _ = writeln!(
            summary,
            "{} = iterations {}, stop {:?}, total_calls {}, final_residual {}",
            m.name(),
            traj.iterations(),
            traj.stop,
            traj.total_calls,
            fmt_f(traj.records.last().map_or(traj.residual0, |r| r.residual))
        );
    }
    let dir = out_dir(s);
    write(&dir, "compare.csv", &columns_csv(&cols))?;
    write(&dir, "compare_summary.txt", &summary)?;
    print!("{summary}");
    Ok(())
}

/// Reads back a `key = value` file such as `summary.txt`.
pub fn read_pairs(path: &Path) -> Result<std::collections::BTreeMap<String, String>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    crate::config::parse_pairs(&text)
}
