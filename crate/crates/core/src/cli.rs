//! The `lundberg` command line.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{preset, ConfigError, JointModel, Model, ModelConfig, SingleModel, PRESETS};
use crate::error::Error;
use crate::figures::{reproduce, single_risk_sweep, Table};
use crate::market::decompose;
use crate::optimize::{
    optimal_loading_profit_single, optimal_loading_ruin_single, optimize_joint_profit, optimize_joint_ruin, Criterion,
    Diagnostics, LoadingResult, Mode, PreparedProblem,
};
use crate::ruin::{solve_survival, RuinCurve, SolverConfig, SolverMethod};
use crate::simulate::{simulate_bivariate_market, simulate_ruin_levels, RuinEstimate, SimConfig};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "LUNDBERG_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "lundberg", version, about = "Ruin probabilities and premium-loading optimization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Source {
    /// JSON model config.
    #[arg(required_unless_present = "preset", conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Use a built-in preset instead of a config file.
    #[arg(long)]
    pub preset: Option<String>,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output directory (default: $LUNDBERG_OUT_DIR, else the working directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum CriterionArg {
    Ruin,
    Profit,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Single,
    Common,
    Separate,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the survival curve; writes curve.csv and curve.json.
    Solve {
        #[command(flatten)]
        source: Source,
        /// Override the solver grid step h.
        #[arg(long)]
        grid_step: Option<f64>,
        /// Override the right end of the grid.
        #[arg(long)]
        x_max: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Find optimal loadings; writes optimize.json and sweep.csv.
    Optimize {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_enum, default_value = "ruin")]
        criterion: CriterionArg,
        /// Defaults to single for one risk and common for two.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Reserve at which ruin is minimized.
        #[arg(long)]
        reserve: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Monte Carlo ruin estimates; writes simulate.json.
    Simulate {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        paths: Option<usize>,
        /// Finite time horizon; defaults to 50/η.
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Reserve level; repeat for several.
        #[arg(long = "reserve")]
        reserves: Vec<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Emit the data behind an experiment figure (fig1..fig6).
    Reproduce {
        /// One of fig1..fig6.
        figure: String,
        /// Run the figure on this config instead of its preset.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Tabulate the claim decomposition of a two-risk config; writes decomposition.csv and .json.
    Decompose {
        #[command(flatten)]
        source: Source,
        /// Override the lattice step of the decomposition.
        #[arg(long)]
        grid_step: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Print a preset config.
    Preset {
        /// One of fig1..fig6.
        name: String,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
}

impl CliError {
    /// 2 config, 3 model precondition, 4 numerical instability, 1 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Model(e) => match e {
                Error::Validation(_) => 2,
                Error::NetProfit { .. }
                | Error::NoInteriorOptimum(_)
                | Error::RootBracketing(_)
                | Error::Infeasible(_) => 3,
                Error::Instability { .. } | Error::Accuracy(_) => 4,
            },
            CliError::Io { .. } => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

/// Runs a parsed command line and returns the files written.
pub fn run(cli: Cli) -> CliResult<Vec<PathBuf>> {
    match cli.command {
        Command::Solve { source, grid_step, x_max, output } => {
            let cfg = load(&source)?;
            cmd_solve(&cfg, grid_step, x_max, &out_dir(&output)?)
        }
        Command::Optimize { source, criterion, mode, reserve, output } => {
            let cfg = load(&source)?;
            let criterion = match criterion {
                CriterionArg::Ruin => Criterion::Ruin,
                CriterionArg::Profit => Criterion::Profit,
            };
            let mode = mode.map(|m| match m {
                ModeArg::Single => Mode::Single,
                ModeArg::Common => Mode::Common,
                ModeArg::Separate => Mode::Separate,
            });
            cmd_optimize(&cfg, criterion, mode, reserve, &out_dir(&output)?)
        }
        Command::Simulate { source, paths, horizon, seed, reserves, output } => {
            let mut cfg = load(&source)?;
            if let Some(n) = paths {
                cfg.simulation.paths = n;
            }
            if horizon.is_some() {
                cfg.simulation.horizon = horizon;
            }
            if let Some(s) = seed {
                cfg.simulation.seed = s;
            }
            if !reserves.is_empty() {
                cfg.reserves = reserves;
            }
            cmd_simulate(&cfg, &out_dir(&output)?)
        }
        Command::Reproduce { figure, config, output } => {
            let source = match config {
                Some(path) => Source { config: Some(path), preset: None },
                None => Source { config: None, preset: Some(figure.clone()) },
            };
            if !PRESETS.contains(&figure.as_str()) {
                return Err(CliError::Usage(format!(
                    "unknown figure {figure:?}; expected one of {}",
                    PRESETS.join(", ")
                )));
            }
            let cfg = load(&source)?;
            cmd_reproduce(&figure, &cfg, &out_dir(&output)?)
        }
        Command::Decompose { source, grid_step, output } => {
            let cfg = load(&source)?;
            cmd_decompose(&cfg, grid_step, &out_dir(&output)?)
        }
        Command::Preset { name } => {
            let cfg = preset(&name).ok_or_else(|| unknown_preset(&name))?;
            // A closed pipe (`| head`) is not an error worth reporting.
            let _ = writeln!(std::io::stdout(), "{}", cfg.to_json());
            Ok(Vec::new())
        }
    }
}

fn unknown_preset(name: &str) -> CliError {
    CliError::Usage(format!("unknown preset {name:?}; expected one of {}", PRESETS.join(", ")))
}

fn load(source: &Source) -> CliResult<ModelConfig> {
    match (&source.config, &source.preset) {
        (_, Some(name)) => preset(name).ok_or_else(|| unknown_preset(name)),
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(io(format!("reading {}", path.display())))?;
            Ok(ModelConfig::from_json(&text)?)
        }
        (None, None) => Err(CliError::Usage("give a config path or --preset".into())),
    }
}

fn out_dir(output: &Output) -> CliResult<PathBuf> {
    let dir = match &output.out {
        Some(d) => d.clone(),
        None => std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".")),
    };
    std::fs::create_dir_all(&dir).map_err(io(format!("creating {}", dir.display())))?;
    Ok(dir)
}

// Write-then-rename so readers never see a partial file.
fn write_atomic(dir: &Path, name: &str, contents: &str) -> CliResult<PathBuf> {
    let path = dir.join(name);
    let ctx = format!("writing {}", path.display());
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io(ctx.clone()))?;
    tmp.write_all(contents.as_bytes()).map_err(io(ctx.clone()))?;
    tmp.persist(&path).map_err(|e| CliError::Io { context: ctx, source: e.error })?;
    Ok(path)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> CliResult<PathBuf> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    write_atomic(dir, name, &text)
}

/// Hex SHA-256 of the compact config JSON.
pub fn fingerprint(cfg: &ModelConfig) -> String {
    let canonical = serde_json::to_string(cfg).expect("config serializes");
    Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn curve_csv(curve: &RuinCurve) -> String {
    let mut t = Table::new(vec!["x".into(), "survival".into(), "ruin".into()]);
    for (x, s) in curve.x.iter().zip(&curve.survival) {
        t.rows.push(vec![*x, *s, 1.0 - s]);
    }
    t.to_csv()
}

#[derive(Serialize)]
struct ReserveValue {
    reserve: f64,
    ruin: f64,
}

#[derive(Serialize)]
struct SolveReport {
    config_sha256: String,
    preset: Option<String>,
    method: SolverMethod,
    grid_step: f64,
    x_max: f64,
    nodes: usize,
    intensity: f64,
    premium: f64,
    mean_claim: f64,
    net_profit_margin: f64,
    survival_at_zero: f64,
    error_estimate: f64,
    loadings: Vec<f64>,
    reserves: Vec<ReserveValue>,
    /// Same company with claims treated as independent (two-risk configs).
    #[serde(skip_serializing_if = "Option::is_none")]
    independent: Option<Vec<ReserveValue>>,
}

fn reserve_values(curve: &RuinCurve, reserves: &[f64]) -> CliResult<Vec<ReserveValue>> {
    reserves.iter().map(|&u| Ok(ReserveValue { reserve: u, ruin: curve.ruin_at(u)? })).collect()
}

fn solver_reach(cfg: &ModelConfig, x_max: Option<f64>) -> f64 {
    x_max.or(cfg.solver.x_max).unwrap_or_else(|| cfg.report_reserves().into_iter().fold(cfg.reserve, f64::max))
}

pub fn cmd_solve(cfg: &ModelConfig, grid_step: Option<f64>, x_max: Option<f64>, dir: &Path) -> CliResult<Vec<PathBuf>> {
    let reserves = cfg.report_reserves();
    let reach = solver_reach(cfg, x_max);
    let report = |curve: &RuinCurve, intensity: f64, premium: f64, mean: f64, loadings: Vec<f64>| {
        Ok::<_, CliError>(SolveReport {
            config_sha256: fingerprint(cfg),
            preset: cfg.preset.clone(),
            method: curve.method,
            grid_step: curve.grid_step,
            x_max: *curve.x.last().unwrap_or(&0.0),
            nodes: curve.x.len(),
            intensity,
            premium,
            mean_claim: mean,
            net_profit_margin: premium - intensity * mean,
            survival_at_zero: curve.survival[0],
            error_estimate: curve.error_estimate,
            loadings,
            reserves: reserve_values(curve, &reserves)?,
            independent: None,
        })
    };
    match cfg.build()? {
        Model::Single(m) => {
            let s = m.surplus()?;
            let mean = s.severity.mean();
            let step = grid_step.or(cfg.solver.grid_step).unwrap_or(mean / 500.0);
            let mut solver = SolverConfig::new(step, reach.max(step));
            if let Some(n) = cfg.solver.series_terms {
                solver.series_terms = n;
            }
            solver.validate()?;
            let curve = solve_survival(&s, &solver)?;
            let r = report(&curve, s.intensity, s.premium, mean, m.loading.into_iter().collect())?;
            Ok(vec![write_atomic(dir, "curve.csv", &curve_csv(&curve))?, write_json(dir, "curve.json", &r)?])
        }
        Model::Joint(mut j) => {
            if let Some(h) = grid_step {
                j.problem.grid_step = h;
            }
            let (t1, t2) = j.loadings()?;
            let prepared = PreparedProblem::with_reach(&j.problem, reach)?;
            let (dep, ind) = prepared.curves(t1, t2)?;
            let e = prepared.exposure(t1, t2)?;
            let mut r = report(&dep, e.intensity, e.premium, e.severity.mean(), vec![t1, t2])?;
            r.independent = Some(reserve_values(&ind, &reserves)?);
            Ok(vec![
                write_atomic(dir, "curve.csv", &curve_csv(&dep))?,
                write_atomic(dir, "curve_independent.csv", &curve_csv(&ind))?,
                write_json(dir, "curve.json", &r)?,
            ])
        }
    }
}

#[derive(Serialize)]
struct OptimizeReport {
    config_sha256: String,
    preset: Option<String>,
    reserve: f64,
    #[serde(flatten)]
    result: LoadingResult,
}

pub fn cmd_optimize(
    cfg: &ModelConfig,
    criterion: Criterion,
    mode: Option<Mode>,
    reserve: Option<f64>,
    dir: &Path,
) -> CliResult<Vec<PathBuf>> {
    let mut cfg = cfg.clone();
    if let Some(u) = reserve {
        cfg.reserve = u;
    }
    let (result, sweep) = match cfg.build()? {
        Model::Single(m) => optimize_single(&cfg, &m, criterion, mode.unwrap_or(Mode::Single))?,
        Model::Joint(j) => optimize_joint(&cfg, &j, criterion, mode.unwrap_or(Mode::Common))?,
    };
    let report =
        OptimizeReport { config_sha256: fingerprint(&cfg), preset: cfg.preset.clone(), reserve: cfg.reserve, result };
    Ok(vec![write_json(dir, "optimize.json", &report)?, write_atomic(dir, "sweep.csv", &sweep.to_csv())?])
}

fn optimize_single(
    cfg: &ModelConfig,
    m: &SingleModel,
    criterion: Criterion,
    mode: Mode,
) -> CliResult<(LoadingResult, Table)> {
    if mode != Mode::Single {
        return Err(CliError::Usage("a single-risk config supports --mode single only".into()));
    }
    let Some(priced) = m.priced() else {
        return Err(CliError::Usage("optimizing a loading needs a demand curve".into()));
    };
    let (lam, mean) = (priced.risk.intensity, priced.risk.severity.mean());
    let result = match criterion {
        Criterion::Ruin => optimal_loading_ruin_single(&priced.demand, lam, mean)?,
        Criterion::Profit => optimal_loading_profit_single(&priced.demand, lam, mean)?,
    };
    let mut sweep_cfg = cfg.clone();
    sweep_cfg.reserves = vec![cfg.reserve];
    let (table, _) = single_risk_sweep(&sweep_cfg)?;
    Ok((result, table))
}

fn optimize_joint(
    cfg: &ModelConfig,
    j: &JointModel,
    criterion: Criterion,
    mode: Mode,
) -> CliResult<(LoadingResult, Table)> {
    let prepared = PreparedProblem::new(&j.problem)?;
    let column = match criterion {
        Criterion::Ruin => "ruin",
        Criterion::Profit => "expected_profit",
    };
    let mut table = Table::new(vec!["theta1".into(), "theta2".into(), column.into()]);
    if mode == Mode::Single {
        // Each risk priced at its own single-risk optimum.
        let m = &j.problem.market;
        let (d1, d2) = &j.problem.demands;
        let single = match criterion {
            Criterion::Ruin => optimal_loading_ruin_single,
            Criterion::Profit => optimal_loading_profit_single,
        };
        let a = single(d1, m.risk1.intensity, m.risk1.severity.mean())?;
        let b = single(d2, m.risk2.intensity, m.risk2.severity.mean())?;
        let (t1, t2) = (a.loadings[0], b.loadings[0]);
        let value = match criterion {
            Criterion::Ruin => prepared.ruin(t1, t2)?.unwrap_or(1.0),
            Criterion::Profit => prepared.expected_profit(t1, t2),
        };
        table.rows.push(vec![t1, t2, value]);
        let result = LoadingResult {
            criterion,
            mode,
            loadings: vec![t1, t2],
            value,
            expected_profit: prepared.expected_profit(t1, t2),
            diagnostics: Diagnostics::default(),
        };
        return Ok((result, table));
    }
    let out = match criterion {
        Criterion::Ruin => optimize_joint_ruin(&prepared, mode, &cfg.search)?,
        Criterion::Profit => optimize_joint_profit(&prepared, mode, &cfg.search)?,
    };
    for &(a, b, v) in &out.sweep {
        table.rows.push(vec![a, b, v]);
    }
    Ok((out.result, table))
}

#[derive(Serialize)]
struct SimulateReport {
    config_sha256: String,
    preset: Option<String>,
    simulation: SimConfig,
    estimates: Vec<RuinEstimate>,
}

pub fn cmd_simulate(cfg: &ModelConfig, dir: &Path) -> CliResult<Vec<PathBuf>> {
    let reserves = cfg.report_reserves();
    let sim = cfg.simulation;
    let report = match cfg.build()? {
        Model::Single(m) => simulate_ruin_levels(&m.surplus()?, &reserves, &sim)?,
        Model::Joint(j) => {
            let (t1, t2) = j.loadings()?;
            let prepared = PreparedProblem::new(&j.problem)?;
            let e = prepared.exposure(t1, t2)?;
            simulate_bivariate_market(&prepared.decomposition, &e.shares, e.premium, &reserves, &sim)?
        }
    };
    let out = SimulateReport {
        config_sha256: fingerprint(cfg),
        preset: cfg.preset.clone(),
        simulation: sim,
        estimates: report.estimates,
    };
    Ok(vec![write_json(dir, "simulate.json", &out)?])
}

pub fn cmd_reproduce(figure: &str, cfg: &ModelConfig, dir: &Path) -> CliResult<Vec<PathBuf>> {
    let data = reproduce(figure, cfg)?;
    let mut written = Vec::new();
    for (stem, table) in &data.tables {
        written.push(write_atomic(dir, &format!("{stem}.csv"), &table.to_csv())?);
    }
    #[derive(Serialize)]
    struct Wrapper<'a, T: Serialize> {
        figure: &'a str,
        config_sha256: String,
        summary: &'a T,
    }
    let w = Wrapper { figure, config_sha256: fingerprint(cfg), summary: &data.summary };
    written.push(write_json(dir, &format!("{figure}_summary.json"), &w)?);
    Ok(written)
}

#[derive(Serialize)]
struct DecompositionReport {
    config_sha256: String,
    step: Option<f64>,
    intensities: (f64, f64),
    lambda1_perp: f64,
    lambda2_perp: f64,
    lambda_par: f64,
    component_means: [Option<f64>; 5],
}

pub fn cmd_decompose(cfg: &ModelConfig, grid_step: Option<f64>, dir: &Path) -> CliResult<Vec<PathBuf>> {
    let Model::Joint(j) = cfg.build()? else {
        return Err(CliError::Usage("decompose needs a two-risk config".into()));
    };
    let h = grid_step.unwrap_or(j.problem.grid_step);
    let market = &j.problem.market;
    let d = decompose(market, h)?;
    let names = ["surv_1perp", "surv_2perp", "surv_1par", "surv_2par", "surv_sum"];
    let mut header: Vec<String> =
        ["x", "tail1", "tail2", "recomposed1", "recomposed2"].iter().map(|s| s.to_string()).collect();
    header.extend(names.iter().map(|s| s.to_string()));
    let mut table = Table::new(header);
    let comps = d.components();
    let reach = match &d.joint_par {
        Some(joint) => joint.shape().0.max(joint.shape().1) as f64 * h,
        None => solver_reach(cfg, None),
    };
    let n = (reach / h).ceil() as usize;
    for k in 0..=n {
        let x = k as f64 * h;
        let mut row = vec![
            x,
            market.risk1.tail_integral(x),
            market.risk2.tail_integral(x),
            d.recomposed_tail_integral(1, x),
            d.recomposed_tail_integral(2, x),
        ];
        row.extend(comps.iter().map(|c| c.map_or(0.0, |s| s.survival(x))));
        table.rows.push(row);
    }
    let report = DecompositionReport {
        config_sha256: fingerprint(cfg),
        step: d.step,
        intensities: (d.intensity1, d.intensity2),
        lambda1_perp: d.lambda1_perp,
        lambda2_perp: d.lambda2_perp,
        lambda_par: d.lambda_par,
        component_means: comps.map(|c| c.map(|s| s.mean())),
    };
    Ok(vec![write_atomic(dir, "decomposition.csv", &table.to_csv())?, write_json(dir, "decomposition.json", &report)?])
}
