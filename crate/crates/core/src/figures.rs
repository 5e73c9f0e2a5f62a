//! Data behind each experiment figure: loading sweeps, contour grids, optima.

use serde::{Deserialize, Serialize};

use crate::config::{Model, ModelConfig};
use crate::copulas::{Family, LevyCopula, OrdinaryCopula};
use crate::error::{validation, Result};
use crate::optimize::{
    alpha, optimal_loading_profit_single, optimal_loading_ruin_single, optimize_joint_profit, optimize_joint_ruin,
    weighted_average_loading, JointProblem, LoadingResult, Mode, PreparedProblem,
};

/// A numeric table written as CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Table { header, rows: Vec::new() }
    }

    /// Shortest round-trip decimal formatting, LF line endings.
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReserveArgmin {
    pub reserve: f64,
    pub theta: f64,
    pub ruin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleRiskSummary {
    pub theta_ruin: f64,
    pub alpha_min: f64,
    pub theta_profit: f64,
    pub max_profit: f64,
    /// Sweep argmin of the ruin probability at each reserve.
    pub sweep_argmin: Vec<ReserveArgmin>,
}

/// One dependence setting of a common-loading sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingSummary {
    pub label: String,
    pub levy_omega: Option<f64>,
    pub acquisition: Family,
    pub tau: f64,
    pub theta: f64,
    pub ruin: f64,
    pub grid_argmin: f64,
    pub fallback: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommonSummary {
    pub reserve: f64,
    pub settings: Vec<SettingSummary>,
    /// Single-risk ruin optima.
    pub single_optima: (f64, f64),
    /// Their average weighted by take rates at the reference loading.
    pub theta_weighted: f64,
    pub theta_profit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparateSummary {
    pub reserve: f64,
    pub ruin: LoadingResult,
    pub profit: LoadingResult,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Summary {
    Single(SingleRiskSummary),
    Common(CommonSummary),
    Separate(SeparateSummary),
}

/// Tables (file stem, table) and summary for one figure.
#[derive(Clone, Debug, PartialEq)]
pub struct FigureData {
    pub figure: String,
    pub tables: Vec<(String, Table)>,
    pub summary: Summary,
}

/// A Lévy/acquisition copula pair for a common-loading sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct Setting {
    pub label: String,
    pub levy: Option<LevyCopula>,
    pub acquisition: OrdinaryCopula,
}

/// Loading at which the common-loading take-rate weights are read.
pub const REFERENCE_LOADING: f64 = 0.4;

/// Builds the data for `figure` from its preset config, or from `cfg` when given.
pub fn reproduce(figure: &str, cfg: &ModelConfig) -> Result<FigureData> {
    let (tables, summary) = match figure {
        "fig1" | "fig2" => {
            let (t, s) = single_risk_sweep(cfg)?;
            (vec![(format!("{figure}_sweep"), t)], Summary::Single(s))
        }
        "fig3" => {
            let joint = joint_problem(cfg)?;
            let levy = joint.market.levy.unwrap_or(LevyCopula::clayton(1.0)?);
            let mut settings = vec![
                Setting { label: "independent".into(), levy: None, acquisition: OrdinaryCopula::Independence },
                Setting {
                    label: format!("clayton_{}", levy.omega()),
                    levy: Some(levy),
                    acquisition: OrdinaryCopula::Independence,
                },
            ];
            if levy.omega() != 0.5 {
                settings.push(Setting {
                    label: "clayton_0.5".into(),
                    levy: Some(LevyCopula::clayton(0.5)?),
                    acquisition: OrdinaryCopula::Independence,
                });
            }
            let (t, s) = common_loading_sweep(cfg, &settings)?;
            (vec![(format!("{figure}_sweep"), t)], Summary::Common(s))
        }
        "fig4" | "fig5" => {
            let (t, s) = separate_loading_grid(cfg)?;
            (vec![(format!("{figure}_grid"), t)], Summary::Separate(s))
        }
        "fig6" => {
            let joint = joint_problem(cfg)?;
            let levy = joint.market.levy;
            let mut settings =
                vec![Setting { label: "independent".into(), levy, acquisition: OrdinaryCopula::Independence }];
            for family in [Family::Clayton, Family::Gumbel] {
                for tau in ACQUISITION_TAUS {
                    settings.push(Setting {
                        label: format!("{family}_{tau}"),
                        levy,
                        acquisition: OrdinaryCopula::from_tau(family, tau)?,
                    });
                }
            }
            let (t, s) = common_loading_sweep(cfg, &settings)?;
            (vec![(format!("{figure}_sweep"), t)], Summary::Common(s))
        }
        other => return validation(format!("unknown figure {other:?}; expected one of fig1..fig6")),
    };
    Ok(FigureData { figure: figure.to_string(), tables, summary })
}

/// Kendall's τ levels of the acquisition-dependence figure.
pub const ACQUISITION_TAUS: [f64; 3] = [0.05, 0.25, 0.5];

fn joint_problem(cfg: &ModelConfig) -> Result<JointProblem> {
    match cfg.build()? {
        Model::Joint(j) => Ok(j.problem),
        Model::Single(_) => validation("this figure needs a two-risk config"),
    }
}

/// Ruin at each reserve over the loading grid, with α and expected profit.
pub fn single_risk_sweep(cfg: &ModelConfig) -> Result<(Table, SingleRiskSummary)> {
    let Model::Single(model) = cfg.build()? else {
        return validation("this figure needs a single-risk config");
    };
    let Some(priced) = model.priced() else {
        return validation("the loading sweep needs a demand curve");
    };
    let (lam, mean) = (priced.risk.intensity, priced.risk.severity.mean());
    let d = priced.demand;
    let reserves = cfg.report_reserves();
    let thetas = cfg.search.grid();
    let h = cfg.solver.grid_step.unwrap_or(mean / 500.0);
    let ruin = priced.ruin_sweep(&thetas, &reserves, h)?;

    let mut header = vec!["theta".to_string(), "alpha".into(), "expected_profit".into()];
    header.extend(reserves.iter().map(|u| format!("ruin_u{u}")));
    let mut table = Table::new(header);
    for (j, &t) in thetas.iter().enumerate() {
        let mut row = vec![t, alpha(&d, lam, mean, t), d.expected_profit(lam, mean, t)];
        row.extend(ruin.iter().map(|r| r[j]));
        table.rows.push(row);
    }
    let sweep_argmin = reserves
        .iter()
        .zip(&ruin)
        .map(|(&reserve, row)| {
            let (j, &v) = first_min(row);
            ReserveArgmin { reserve, theta: thetas[j], ruin: v }
        })
        .collect();
    let r = optimal_loading_ruin_single(&d, lam, mean)?;
    let p = optimal_loading_profit_single(&d, lam, mean)?;
    let summary = SingleRiskSummary {
        theta_ruin: r.loadings[0],
        alpha_min: r.value,
        theta_profit: p.loadings[0],
        max_profit: p.value,
        sweep_argmin,
    };
    Ok((table, summary))
}

fn first_min(v: &[f64]) -> (usize, &f64) {
    let mut best = (0, &v[0]);
    for (j, x) in v.iter().enumerate() {
        if x < best.1 {
            best = (j, x);
        }
    }
    best
}

/// Common-loading ruin sweeps at the reference reserve, one column per setting.
pub fn common_loading_sweep(cfg: &ModelConfig, settings: &[Setting]) -> Result<(Table, CommonSummary)> {
    let base = joint_problem(cfg)?;
    let thetas = cfg.search.grid();
    let mut header = vec!["theta".to_string(), "expected_profit".into()];
    header.extend(settings.iter().map(|s| format!("ruin_{}", s.label)));
    let mut table = Table::new(header);

    let mut columns = Vec::with_capacity(settings.len());
    let mut out = Vec::with_capacity(settings.len());
    let mut prepared: Option<PreparedProblem> = None;
    for s in settings {
        // Settings sharing a claim model reuse its decomposition.
        let reuse = prepared.as_ref().is_some_and(|p| p.problem.market.levy == s.levy);
        if !reuse {
            let mut problem = base.clone();
            problem.market.levy = s.levy;
            prepared = Some(PreparedProblem::new(&problem)?);
        }
        let p = prepared.as_mut().expect("prepared above");
        p.problem.acquisition = s.acquisition;
        let res = optimize_joint_ruin(p, Mode::Common, &cfg.search)?;
        columns.push(res.sweep.iter().map(|r| r.2).collect::<Vec<_>>());
        out.push(SettingSummary {
            label: s.label.clone(),
            levy_omega: s.levy.map(|l| l.omega()),
            acquisition: s.acquisition.family(),
            tau: s.acquisition.kendall_tau(),
            theta: res.result.loadings[0],
            ruin: res.result.value,
            grid_argmin: res.result.diagnostics.grid_argmin[0],
            fallback: res.result.diagnostics.fallback,
        });
    }
    let profit_problem = prepared.as_ref().expect("at least one setting");
    for (j, &t) in thetas.iter().enumerate() {
        let mut row = vec![t, profit_problem.expected_profit(t, t)];
        row.extend(columns.iter().map(|c| c[j]));
        table.rows.push(row);
    }

    let m = &base.market;
    let (d1, d2) = &base.demands;
    let a = optimal_loading_ruin_single(d1, m.risk1.intensity, m.risk1.severity.mean())?.loadings[0];
    let b = optimal_loading_ruin_single(d2, m.risk2.intensity, m.risk2.severity.mean())?.loadings[0];
    let theta_weighted =
        weighted_average_loading(a, b, d1.take_rate(REFERENCE_LOADING), d2.take_rate(REFERENCE_LOADING));
    let profit = optimize_joint_profit(profit_problem, Mode::Common, &cfg.search)?;
    let summary = CommonSummary {
        reserve: base.reserve,
        settings: out,
        single_optima: (a, b),
        theta_weighted,
        theta_profit: profit.result.loadings[0],
    };
    Ok((table, summary))
}

/// Ruin and expected profit over the two-loading grid.
pub fn separate_loading_grid(cfg: &ModelConfig) -> Result<(Table, SeparateSummary)> {
    let problem = joint_problem(cfg)?;
    let prepared = PreparedProblem::new(&problem)?;
    let ruin = optimize_joint_ruin(&prepared, Mode::Separate, &cfg.search)?;
    let profit = optimize_joint_profit(&prepared, Mode::Separate, &cfg.search)?;
    let mut table = Table::new(vec!["theta1".into(), "theta2".into(), "ruin".into(), "expected_profit".into()]);
    for &(a, b, v) in &ruin.sweep {
        table.rows.push(vec![a, b, v, prepared.expected_profit(a, b)]);
    }
    Ok((table, SeparateSummary { reserve: problem.reserve, ruin: ruin.result, profit: profit.result }))
}
