//! Premium-loading optimization.
//!
//! For a single risk the ruin-optimal loading minimizes `α(θ) = λp(θ)/c(θ)`
//! and has a closed form; the profit-optimal loading is the root of a scalar
//! equation. For a two-risk company the ruin probability at a reference
//! reserve is minimized numerically: a grid sweep over the loading box,
//! then quasi-Newton refinement with central finite differences.

use serde::{Deserialize, Serialize};

use crate::copulas::OrdinaryCopula;
use crate::demand::{acquisition_shares, shares_from_take_rates, DemandSpec};
use crate::distributions::TailTable;
use crate::error::{Error, Result};
use crate::market::{
    company_exposure, decompose, exposure_from_shares, CompanyExposure, ComponentTables, CompoundPoissonSpec,
    Decomposition, MarketSpec, SurplusModel,
};
use crate::ruin::{dependency_error_bound, solve_with_table, RuinCurve, SolverConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Ruin,
    Profit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Single,
    Common,
    Separate,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub evaluations: usize,
    pub iterations: usize,
    /// Loading-grid resolution of the sweep (0 for closed forms).
    pub grid_step: f64,
    pub grid_argmin: Vec<f64>,
    pub grid_value: f64,
    pub refined: bool,
    /// Refinement failed and the grid optimum is reported instead.
    pub fallback: bool,
}

/// Optimal loading(s) and the criterion value there.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadingResult {
    pub criterion: Criterion,
    pub mode: Mode,
    pub loadings: Vec<f64>,
    /// Ruin probability at the reference reserve, or expected profit per unit time.
    pub value: f64,
    pub expected_profit: f64,
    pub diagnostics: Diagnostics,
}

/// The single-risk scalar `α(θ) = λp(θ)/c(θ)`; infinite when `c(θ) ≤ 0`.
pub fn alpha(demand: &DemandSpec, intensity: f64, mean_claim: f64, theta: f64) -> f64 {
    let c = demand.premium_rate(intensity, mean_claim, theta);
    if c <= 0.0 {
        return f64::INFINITY;
    }
    intensity * demand.take_rate(theta) / c
}

/// `θ_ruin = (ln(λE[Y]/(rβ₁)) − β₀)/β₁`, the minimizer of `α`.
pub fn optimal_loading_ruin_single(demand: &DemandSpec, intensity: f64, mean_claim: f64) -> Result<LoadingResult> {
    let d = demand;
    let scale = intensity * mean_claim;
    if !(d.fixed_cost > 0.0 && scale > 0.0) {
        return Err(Error::NoInteriorOptimum(
            "α decreases without bound in θ when the fixed cost or the pure premium is zero".into(),
        ));
    }
    let theta = ((scale / (d.fixed_cost * d.beta1)).ln() - d.beta0) / d.beta1;
    if !(theta.is_finite() && theta >= 0.0) {
        return Err(Error::NoInteriorOptimum(format!(
            "λE[Y] = {scale} must be at least r·β₁·e^β₀ = {}",
            d.fixed_cost * d.beta1 * d.beta0.exp()
        )));
    }
    let a = alpha(d, intensity, mean_claim, theta);
    let delta = 1e-4;
    let local_min = a <= alpha(d, intensity, mean_claim, theta + delta)
        && (theta < delta || a <= alpha(d, intensity, mean_claim, theta - delta));
    if !local_min {
        return Err(Error::NoInteriorOptimum(format!("α is not locally minimal at θ = {theta}")));
    }
    Ok(LoadingResult {
        criterion: Criterion::Ruin,
        mode: Mode::Single,
        loadings: vec![theta],
        value: a,
        expected_profit: d.expected_profit(intensity, mean_claim, theta),
        diagnostics: Diagnostics { evaluations: 3, ..Diagnostics::default() },
    })
}

/// Residual of `1 + e^z − β₁θe^z = 0`, `z = β₀ + β₁θ`.
pub fn profit_equation(demand: &DemandSpec, theta: f64) -> f64 {
    let e = (demand.beta0 + demand.beta1 * theta).exp();
    1.0 + e - demand.beta1 * theta * e
}

/// Positive root of the profit equation, the maximizer of `θλp(θ)E[Y] − r`.
pub fn optimal_loading_profit_single(demand: &DemandSpec, intensity: f64, mean_claim: f64) -> Result<LoadingResult> {
    let d = demand;
    if !(d.beta1 > 0.0) {
        return Err(Error::RootBracketing("β₁ must be positive".into()));
    }
    // e^{-z}·residual is monotone: e^{-z} + 1 − β₁θ.
    let f = |t: f64| (-(d.beta0 + d.beta1 * t)).exp() + 1.0 - d.beta1 * t;
    let (mut lo, mut hi) = (1.0 / d.beta1, 1.0 / d.beta1 + 20.0);
    let (flo, fhi) = (f(lo), f(hi));
    if flo.signum() == fhi.signum() {
        return Err(Error::RootBracketing(format!("no sign change on [{lo}, {hi}]")));
    }
    let mut iterations = 0;
    while hi - lo > 1e-14 * hi.max(1.0) && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        if f(mid).signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let theta = 0.5 * (lo + hi);
    Ok(LoadingResult {
        criterion: Criterion::Profit,
        mode: Mode::Single,
        loadings: vec![theta],
        value: d.expected_profit(intensity, mean_claim, theta),
        expected_profit: d.expected_profit(intensity, mean_claim, theta),
        diagnostics: Diagnostics { evaluations: iterations + 2, iterations, ..Diagnostics::default() },
    })
}

/// `θ₁p₁(θ₁)λ₁E[Y¹] + θ₂p₂(θ₂)λ₂E[Y²]`; depends on marginals only.
pub fn expected_profit_joint(
    thetas: (f64, f64),
    demands: (&DemandSpec, &DemandSpec),
    intensities: (f64, f64),
    means: (f64, f64),
) -> f64 {
    thetas.0 * demands.0.take_rate(thetas.0) * intensities.0 * means.0
        + thetas.1 * demands.1.take_rate(thetas.1) * intensities.1 * means.1
}

/// Exposure-weighted average `(p₁θ₁* + p₂θ₂*)/(p₁ + p₂)`.
pub fn weighted_average_loading(theta1: f64, theta2: f64, p1: f64, p2: f64) -> f64 {
    if theta1 == theta2 {
        return theta1;
    }
    (p1 * theta1 + p2 * theta2) / (p1 + p2)
}

/// One risk sold under logit demand; ruin is evaluated on the bought portfolio.
#[derive(Clone, Debug, PartialEq)]
pub struct SingleRisk {
    pub risk: CompoundPoissonSpec,
    pub demand: DemandSpec,
}

impl SingleRisk {
    /// Claims at rate `λp(θ)`, premium `c(θ)`.
    pub fn surplus(&self, theta: f64) -> SurplusModel {
        let mean = self.risk.severity.mean();
        SurplusModel::new(
            self.risk.intensity * self.demand.take_rate(theta),
            self.risk.severity.clone(),
            self.demand.premium_rate(self.risk.intensity, mean, theta),
        )
    }

    /// Ruin probability at each reserve (rows) for each loading (columns); infeasible loadings give 1.
    pub fn ruin_sweep(&self, thetas: &[f64], reserves: &[f64], grid_step: f64) -> Result<Vec<Vec<f64>>> {
        let x_max = reserves.iter().copied().fold(grid_step, f64::max);
        let nodes = SolverConfig::new(grid_step, x_max).nodes();
        let table = self.risk.severity.tail_table(grid_step, nodes);
        let mean = self.risk.severity.mean();
        let mut out = vec![Vec::with_capacity(thetas.len()); reserves.len()];
        for &t in thetas {
            let m = self.surplus(t);
            match solve_with_table(m.intensity, mean, m.premium, &table) {
                Ok(curve) => {
                    for (row, &u) in out.iter_mut().zip(reserves) {
                        row.push(curve.ruin_at(u)?);
                    }
                }
                Err(Error::NetProfit { .. }) => {
                    for row in out.iter_mut() {
                        row.push(1.0);
                    }
                }
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }
}

/// Loading box and refinement settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    pub lower: f64,
    pub upper: f64,
    pub step: f64,
    pub fd_step: f64,
    pub max_iterations: usize,
    pub refine: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { lower: 0.05, upper: 1.0, step: 0.01, fd_step: 1e-3, max_iterations: 100, refine: true }
    }
}

impl SearchConfig {
    pub fn grid(&self) -> Vec<f64> {
        let n = ((self.upper - self.lower) / self.step + 1e-9).floor() as usize;
        // Rounded so nodes print as the decimals they stand for.
        (0..=n).map(|k| ((self.lower + k as f64 * self.step) * 1e12).round() / 1e12).collect()
    }
}

/// Two market risks sold by one company.
#[derive(Clone, Debug, PartialEq)]
pub struct JointProblem {
    pub market: MarketSpec,
    pub demands: (DemandSpec, DemandSpec),
    pub acquisition: OrdinaryCopula,
    /// Reference reserve for ruin optimization.
    pub reserve: f64,
    /// Solver grid step, also the lattice step of the decomposition.
    pub grid_step: f64,
}

/// A [`JointProblem`] with its decomposition and tail tables computed once.
#[derive(Clone, Debug)]
pub struct PreparedProblem {
    pub problem: JointProblem,
    pub decomposition: Decomposition,
    tables: ComponentTables,
    x_max: f64,
}

impl PreparedProblem {
    pub fn new(problem: &JointProblem) -> Result<Self> {
        Self::with_reach(problem, problem.reserve)
    }

    /// Prepares tables reaching at least `x_max` so curves can be read at larger reserves.
    pub fn with_reach(problem: &JointProblem, x_max: f64) -> Result<Self> {
        problem.demands.0.validate()?;
        problem.demands.1.validate()?;
        let h = problem.grid_step;
        let x_max = x_max.max(problem.reserve).max(h);
        let cfg = SolverConfig::new(h, x_max);
        cfg.validate()?;
        let decomposition = decompose(&problem.market, h)?;
        let tables = decomposition.tables(h, cfg.nodes());
        Ok(PreparedProblem { problem: problem.clone(), decomposition, tables, x_max })
    }

    pub fn exposure(&self, theta1: f64, theta2: f64) -> Result<CompanyExposure> {
        let p = &self.problem;
        let shares = acquisition_shares(&p.acquisition, &p.demands.0, &p.demands.1, theta1, theta2)?;
        company_exposure(
            &p.market,
            &self.decomposition,
            &shares,
            (theta1, theta2),
            (&p.demands.0, &p.demands.1),
            (p.reserve, 0.0),
        )
    }

    pub fn exposure_tables(&self, exposure: &CompanyExposure) -> (TailTable, TailTable) {
        (exposure.tail_table(&self.tables), exposure.independent_tail_table(&self.tables))
    }

    /// Survival curves of the company and of its independence approximation.
    pub fn curves(&self, theta1: f64, theta2: f64) -> Result<(RuinCurve, RuinCurve)> {
        let e = self.exposure(theta1, theta2)?;
        let (dep, ind) = self.exposure_tables(&e);
        let a = solve_with_table(e.intensity, e.severity.mean(), e.premium, &dep)?;
        let b = solve_with_table(e.intensity_hat, e.severity_hat.mean(), e.premium, &ind)?;
        Ok((a, b))
    }

    /// Ruin probability at the reference reserve; `None` when the net profit condition fails.
    pub fn ruin(&self, theta1: f64, theta2: f64) -> Result<Option<f64>> {
        let e = self.exposure(theta1, theta2)?;
        let table = e.tail_table(&self.tables);
        match solve_with_table(e.intensity, e.severity.mean(), e.premium, &table) {
            Ok(c) => Ok(Some(c.ruin_at(self.problem.reserve)?)),
            Err(Error::NetProfit { .. }) => Ok(None),
            Err(err) => Err(err),
        }
    }

    pub fn reach(&self) -> f64 {
        self.x_max
    }

    pub fn expected_profit(&self, theta1: f64, theta2: f64) -> f64 {
        let m = &self.problem.market;
        let d = &self.problem.demands;
        expected_profit_joint(
            (theta1, theta2),
            (&d.0, &d.1),
            (m.risk1.intensity, m.risk2.intensity),
            (m.risk1.severity.mean(), m.risk2.severity.mean()),
        )
    }
}

/// Sweep rows `(θ₁, θ₂, value)` plus the optimization result.
#[derive(Clone, Debug)]
pub struct JointOutcome {
    pub result: LoadingResult,
    pub sweep: Vec<(f64, f64, f64)>,
}

/// Minimizes ruin at the reference reserve over common or separate loadings.
pub fn optimize_joint_ruin(prepared: &PreparedProblem, mode: Mode, cfg: &SearchConfig) -> Result<JointOutcome> {
    let dims = match mode {
        Mode::Common => 1,
        Mode::Separate => 2,
        Mode::Single => {
            return Err(Error::Validation("joint optimization needs mode common or separate".into()));
        }
    };
    let pair = |x: &[f64]| if dims == 1 { (x[0], x[0]) } else { (x[0], x[1]) };
    let objective = |x: &[f64]| {
        let (a, b) = pair(x);
        prepared.ruin(a, b)
    };
    let out = minimize_box(objective, dims, cfg)?;
    let (t1, t2) = pair(&out.x);
    let sweep = out
        .sweep
        .iter()
        .map(|(x, v)| {
            let (a, b) = pair(x);
            (a, b, v.unwrap_or(1.0))
        })
        .collect();
    Ok(JointOutcome {
        result: LoadingResult {
            criterion: Criterion::Ruin,
            mode,
            loadings: out.x.clone(),
            value: out.value,
            expected_profit: prepared.expected_profit(t1, t2),
            diagnostics: out.diagnostics,
        },
        sweep,
    })
}

/// Maximizes the joint expected profit over common or separate loadings.
pub fn optimize_joint_profit(prepared: &PreparedProblem, mode: Mode, cfg: &SearchConfig) -> Result<JointOutcome> {
    let p = &prepared.problem;
    match mode {
        Mode::Separate => {
            let m = &p.market;
            let a = optimal_loading_profit_single(&p.demands.0, m.risk1.intensity, m.risk1.severity.mean())?;
            let b = optimal_loading_profit_single(&p.demands.1, m.risk2.intensity, m.risk2.severity.mean())?;
            let (t1, t2) = (a.loadings[0], b.loadings[0]);
            let value = prepared.expected_profit(t1, t2);
            Ok(JointOutcome {
                result: LoadingResult {
                    criterion: Criterion::Profit,
                    mode,
                    loadings: vec![t1, t2],
                    value,
                    expected_profit: value,
                    diagnostics: Diagnostics {
                        evaluations: a.diagnostics.evaluations + b.diagnostics.evaluations,
                        iterations: a.diagnostics.iterations.max(b.diagnostics.iterations),
                        ..Diagnostics::default()
                    },
                },
                sweep: Vec::new(),
            })
        }
        Mode::Common => {
            let out = minimize_box(|x: &[f64]| Ok(Some(-prepared.expected_profit(x[0], x[0]))), 1, cfg)?;
            let t = out.x[0];
            let mut diagnostics = out.diagnostics;
            diagnostics.grid_value = -diagnostics.grid_value;
            Ok(JointOutcome {
                result: LoadingResult {
                    criterion: Criterion::Profit,
                    mode,
                    loadings: vec![t],
                    value: -out.value,
                    expected_profit: -out.value,
                    diagnostics,
                },
                sweep: out.sweep.iter().map(|(x, v)| (x[0], x[0], -v.unwrap_or(f64::NAN))).collect(),
            })
        }
        Mode::Single => Err(Error::Validation("joint optimization needs mode common or separate".into())),
    }
}

struct BoxMinimum {
    x: Vec<f64>,
    value: f64,
    sweep: Vec<(Vec<f64>, Option<f64>)>,
    diagnostics: Diagnostics,
}

// Grid sweep over the box, then projected BFGS from the best grid point.
// The objective returns None at infeasible points.
fn minimize_box<F>(mut f: F, dims: usize, cfg: &SearchConfig) -> Result<BoxMinimum>
where
    F: FnMut(&[f64]) -> Result<Option<f64>>,
{
    let axis = cfg.grid();
    let mut sweep = Vec::new();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut visit = |x: Vec<f64>, f: &mut F| -> Result<()> {
        let v = f(&x)?;
        if let Some(v) = v {
            // Strict comparison: ties keep the earlier (smaller) loading.
            if best.as_ref().is_none_or(|(_, b)| v < *b) {
                best = Some((x.clone(), v));
            }
        }
        sweep.push((x, v));
        Ok(())
    };
    if dims == 1 {
        for &a in &axis {
            visit(vec![a], &mut f)?;
        }
    } else {
        for &a in &axis {
            for &b in &axis {
                visit(vec![a, b], &mut f)?;
            }
        }
    }
    let Some((grid_x, grid_value)) = best else {
        return Err(Error::Infeasible(format!(
            "net profit condition fails on the whole box [{}, {}]",
            cfg.lower, cfg.upper
        )));
    };
    let mut diagnostics = Diagnostics {
        evaluations: sweep.len(),
        grid_step: cfg.step,
        grid_argmin: grid_x.clone(),
        grid_value,
        ..Diagnostics::default()
    };
    if !cfg.refine {
        return Ok(BoxMinimum { x: grid_x, value: grid_value, sweep, diagnostics });
    }
    match bfgs(&mut f, &grid_x, grid_value, cfg) {
        Ok(r) if r.value <= grid_value => {
            diagnostics.evaluations += r.evaluations;
            diagnostics.iterations = r.iterations;
            diagnostics.refined = true;
            Ok(BoxMinimum { x: r.x, value: r.value, sweep, diagnostics })
        }
        Ok(r) => {
            diagnostics.evaluations += r.evaluations;
            diagnostics.iterations = r.iterations;
            diagnostics.fallback = true;
            Ok(BoxMinimum { x: grid_x, value: grid_value, sweep, diagnostics })
        }
        Err(Error::NetProfit { .. }) | Err(Error::Instability { .. }) => {
            diagnostics.fallback = true;
            Ok(BoxMinimum { x: grid_x, value: grid_value, sweep, diagnostics })
        }
        Err(e) => Err(e),
    }
}

struct Refined {
    x: Vec<f64>,
    value: f64,
    iterations: usize,
    evaluations: usize,
}

fn bfgs<F>(f: &mut F, x0: &[f64], f0: f64, cfg: &SearchConfig) -> Result<Refined>
where
    F: FnMut(&[f64]) -> Result<Option<f64>>,
{
    let n = x0.len();
    let clamp = |v: f64| v.clamp(cfg.lower, cfg.upper);
    let mut evaluations = 0;
    fn eval<F>(f: &mut F, x: &[f64], evaluations: &mut usize) -> Result<f64>
    where
        F: FnMut(&[f64]) -> Result<Option<f64>>,
    {
        *evaluations += 1;
        Ok(f(x)?.unwrap_or(f64::INFINITY))
    }
    // Central differences, one-sided against the box; also returns the diagonal curvature.
    let gradient = |f: &mut F, x: &[f64], fx: f64, evaluations: &mut usize| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut g = vec![0.0; n];
        let mut curv = vec![0.0; n];
        for i in 0..n {
            let d = cfg.fd_step;
            let mut up = x.to_vec();
            let mut dn = x.to_vec();
            up[i] = clamp(x[i] + d);
            dn[i] = clamp(x[i] - d);
            let fu = if up[i] == x[i] { fx } else { eval(f, &up, evaluations)? };
            let fd = if dn[i] == x[i] { fx } else { eval(f, &dn, evaluations)? };
            let span = up[i] - dn[i];
            g[i] = (fu - fd) / span;
            if up[i] != x[i] && dn[i] != x[i] {
                curv[i] = (fu - 2.0 * fx + fd) / (d * d);
            }
        }
        Ok((g, curv))
    };

    let mut x = x0.to_vec();
    let mut fx = f0;
    let (mut g, curv) = gradient(f, &x, fx, &mut evaluations)?;
    if g.iter().any(|v| !v.is_finite()) {
        return Ok(Refined { x, value: fx, iterations: 0, evaluations });
    }
    // Inverse-Hessian start from the measured curvature.
    let mut hinv = vec![vec![0.0; n]; n];
    for i in 0..n {
        hinv[i][i] = if curv[i] > 0.0 { 1.0 / curv[i] } else { cfg.step / g[i].abs().max(1e-12) };
    }
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        iterations += 1;
        let gnorm = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if gnorm < 1e-12 {
            break;
        }
        let mut dir: Vec<f64> = (0..n).map(|i| -(0..n).map(|j| hinv[i][j] * g[j]).sum::<f64>()).collect();
        if dir.iter().zip(&g).map(|(d, g)| d * g).sum::<f64>() >= 0.0 {
            for i in 0..n {
                for j in 0..n {
                    hinv[i][j] = if i == j { cfg.step / gnorm } else { 0.0 };
                }
                dir[i] = -hinv[i][i] * g[i];
            }
        }
        // Keep steps within a few grid cells of the current point.
        let dmax = dir.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if dmax > 5.0 * cfg.step {
            for d in &mut dir {
                *d *= 5.0 * cfg.step / dmax;
            }
        }
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-10 {
            let xn: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| clamp(a + t * d)).collect();
            let decrease: f64 = g.iter().zip(xn.iter().zip(&x)).map(|(g, (a, b))| g * (a - b)).sum();
            let fnew = eval(f, &xn, &mut evaluations)?;
            if fnew <= fx + 1e-4 * decrease && fnew.is_finite() {
                accepted = Some((xn, fnew));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fnew)) = accepted else { break };
        let (gn, _) = gradient(f, &xn, fnew, &mut evaluations)?;
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let smax = s.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        x = xn;
        fx = fnew;
        g = gn;
        if smax < 1e-9 {
            break;
        }
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        if sy > 1e-18 {
            let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| hinv[i][j] * y[j]).sum()).collect();
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            let rho = 1.0 / sy;
            for i in 0..n {
                for j in 0..n {
                    hinv[i][j] += (1.0 + yhy * rho) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }
    }
    Ok(Refined { x, value: fx, iterations, evaluations })
}

/// One row of the size-scaling table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub p1: f64,
    pub p2: f64,
    pub p11: f64,
    pub intensity: f64,
    pub reserve: f64,
    pub premium: f64,
    pub ruin: f64,
    pub ruin_independent: f64,
    pub gap: f64,
    pub bound: f64,
    pub asymptote: f64,
}

/// Ruin gap between dependent and independent treatment as the company shrinks.
///
/// For each `(p₁, p₂)` the joint share comes from the acquisition copula, the
/// reserve is `x₀λ̃E[Ỹ]` and the premium `(1+θ)λ̃E[Ỹ]`. Each row is solved on
/// `nodes` grid cells spanning `[0, x]`.
pub fn size_scaling_experiment(
    decomposition: &Decomposition,
    acquisition: &OrdinaryCopula,
    x0: f64,
    theta: f64,
    shares: &[(f64, f64)],
    nodes: usize,
) -> Result<Vec<ScalingRow>> {
    let mut rows = Vec::with_capacity(shares.len());
    for &(p1, p2) in shares {
        let s = shares_from_take_rates(acquisition, p1, p2)?;
        let probe = exposure_from_shares(decomposition, &s, 1.0, 0.0)?;
        let pure = probe.intensity * probe.severity.mean();
        let reserve = x0 * pure;
        let premium = (1.0 + theta) * pure;
        let e = exposure_from_shares(decomposition, &s, premium, reserve)?;
        let cfg = SolverConfig::new(reserve / nodes as f64, reserve);
        let dep = crate::ruin::solve_survival(&e.surplus_model(), &cfg)?;
        let ind = crate::ruin::solve_survival(&e.independent_surplus_model(), &cfg)?;
        let ruin = dep.ruin_at(reserve)?;
        let ruin_independent = ind.ruin_at(reserve)?;
        rows.push(ScalingRow {
            p1,
            p2,
            p11: s.p11,
            intensity: e.intensity,
            reserve,
            premium,
            ruin,
            ruin_independent,
            gap: (ruin - ruin_independent).abs(),
            bound: dependency_error_bound(s.p11, e.parallel_intensity, e.intensity, premium, reserve),
            asymptote: s.p11 * e.parallel_intensity * x0 / (1.0 + theta),
        });
    }
    Ok(rows)
}
