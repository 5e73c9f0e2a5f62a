//! Market risk models: compound Poisson risks, their independent aggregation,
//! the Lévy-copula decomposition of a dependent pair, and the mapping from
//! market to company exposure.

use serde::{Deserialize, Serialize};

use crate::copulas::LevyCopula;
use crate::demand::{AcquisitionShares, DemandSpec};
use crate::distributions::{sum_distribution, JointSeverity, SeverityModel, TailTable};
use crate::error::{validation, Result};

/// Survival level below which a marginal tail is treated as exhausted when gridding.
pub const TAIL_CUTOFF: f64 = 1e-12;
const MAX_JOINT_CELLS: usize = 60_000;

/// Claim arrivals at rate `intensity` with i.i.d. sizes drawn from `severity`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompoundPoissonSpec {
    pub intensity: f64,
    pub severity: SeverityModel,
}

impl CompoundPoissonSpec {
    pub fn new(intensity: f64, severity: SeverityModel) -> Result<Self> {
        let s = CompoundPoissonSpec { intensity, severity };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.intensity.is_finite() && self.intensity >= 0.0) {
            return validation(format!("claim intensity must be nonnegative, got {}", self.intensity));
        }
        self.severity.validate()
    }

    /// Tail integral `U(x) = λ·F̄(x)`.
    pub fn tail_integral(&self, x: f64) -> f64 {
        self.intensity * self.severity.survival(x)
    }
}

/// A surplus process `u + ct − S_t` without the reserve: what the solvers and simulator need.
#[derive(Clone, Debug, PartialEq)]
pub struct SurplusModel {
    pub intensity: f64,
    pub severity: SeverityModel,
    pub premium: f64,
}

impl SurplusModel {
    pub fn new(intensity: f64, severity: SeverityModel, premium: f64) -> Self {
        SurplusModel { intensity, severity, premium }
    }

    /// `c − λE[Y]`.
    pub fn net_profit_margin(&self) -> f64 {
        self.premium - self.intensity * self.severity.mean()
    }

    /// Relative safety loading `c/(λE[Y]) − 1`.
    pub fn relative_loading(&self) -> f64 {
        self.premium / (self.intensity * self.severity.mean()) - 1.0
    }
}

/// Superposition of independent compound Poisson processes.
pub fn aggregate_independent(specs: &[CompoundPoissonSpec]) -> Result<CompoundPoissonSpec> {
    for s in specs {
        s.validate()?;
    }
    let total: f64 = specs.iter().map(|s| s.intensity).sum();
    if !(total > 0.0) {
        return validation("aggregation needs at least one positive intensity");
    }
    if specs.len() == 1 {
        return Ok(specs[0].clone());
    }
    let weights: Vec<f64> = specs.iter().map(|s| s.intensity / total).collect();
    let components = specs.iter().map(|s| s.severity.clone()).collect();
    Ok(CompoundPoissonSpec { intensity: total, severity: SeverityModel::mixture(normalized(weights), components)? })
}

fn normalized(mut w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    for x in &mut w {
        *x /= s;
    }
    w
}

/// Two market risks, optionally coupled through a Lévy copula on their claim measure.
#[derive(Clone, Debug, PartialEq)]
pub struct MarketSpec {
    pub risk1: CompoundPoissonSpec,
    pub risk2: CompoundPoissonSpec,
    /// `None` is the independence marker.
    pub levy: Option<LevyCopula>,
}

impl MarketSpec {
    pub fn validate(&self) -> Result<()> {
        self.risk1.validate()?;
        self.risk2.validate()?;
        if self.levy.is_some() && !(self.risk1.intensity > 0.0 && self.risk2.intensity > 0.0) {
            return validation("a Lévy copula needs both claim intensities positive");
        }
        Ok(())
    }

    pub fn parallel_intensity(&self) -> f64 {
        match &self.levy {
            Some(c) => c.eval(self.risk1.intensity, self.risk2.intensity),
            None => 0.0,
        }
    }
}

/// The pair of risks written as three independent compound Poisson processes:
/// claims on risk 1 only, on risk 2 only, and simultaneous claims on both.
///
/// With a Lévy copula every component is gridded on the same lattice, so the
/// recomposed marginals are exactly the lattice versions of the inputs. Without
/// one, the single-risk components are the input severities.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub lambda1_perp: f64,
    pub lambda2_perp: f64,
    pub lambda_par: f64,
    /// `None` when the component has zero intensity.
    pub sev1_perp: Option<SeverityModel>,
    pub sev2_perp: Option<SeverityModel>,
    pub sev1_par: Option<SeverityModel>,
    pub sev2_par: Option<SeverityModel>,
    pub sum_par: Option<SeverityModel>,
    pub joint_par: Option<JointSeverity>,
    /// Marginal severities consistent with the components (lattice versions when gridded).
    pub marginal1: SeverityModel,
    pub marginal2: SeverityModel,
    pub intensity1: f64,
    pub intensity2: f64,
    /// Lattice step, when gridded.
    pub step: Option<f64>,
}

/// Splits `market` into independent components on a lattice of spacing `step`.
pub fn decompose(market: &MarketSpec, step: f64) -> Result<Decomposition> {
    market.validate()?;
    let (r1, r2) = (&market.risk1, &market.risk2);
    let Some(copula) = market.levy else {
        return Ok(Decomposition {
            lambda1_perp: r1.intensity,
            lambda2_perp: r2.intensity,
            lambda_par: 0.0,
            sev1_perp: Some(r1.severity.clone()),
            sev2_perp: Some(r2.severity.clone()),
            sev1_par: None,
            sev2_par: None,
            sum_par: None,
            joint_par: None,
            marginal1: r1.severity.clone(),
            marginal2: r2.severity.clone(),
            intensity1: r1.intensity,
            intensity2: r2.intensity,
            step: None,
        });
    };
    if !(step.is_finite() && step > 0.0) {
        return validation(format!("grid step must be positive, got {step}"));
    }
    let (lam1, lam2) = (r1.intensity, r2.intensity);
    let lam_par = copula.eval(lam1, lam2);
    let lam1_perp = (lam1 - lam_par).max(0.0);
    let lam2_perp = (lam2 - lam_par).max(0.0);

    let cap = tail_cap(&r1.severity).max(tail_cap(&r2.severity));
    let cells = (cap / step).ceil() as usize;
    if cells > MAX_JOINT_CELLS {
        return validation(format!("joint lattice would need {cells} cells per axis; use a larger grid step"));
    }
    let cells = cells.max(1);
    let tails = |s: &CompoundPoissonSpec| -> Vec<f64> {
        let mut t: Vec<f64> = (0..cells).map(|k| s.tail_integral(k as f64 * step)).collect();
        t.push(0.0);
        t
    };
    let tail1 = tails(r1);
    let tail2 = tails(r2);

    let marginal = |t: &[f64], lam: f64| -> Result<SeverityModel> {
        let masses = t.windows(2).map(|w| (w[0] - w[1]) / lam).collect();
        SeverityModel::gridded(step, masses)
    };
    let marginal1 = marginal(&tail1, lam1)?;
    let marginal2 = marginal(&tail2, lam2)?;

    // P(Y^{i⊥} ≥ x) = (Uᵢ(x) − 𝒞(Uᵢ(x), λⱼ)) / λᵢ⊥
    let perp = |t: &[f64], lam_perp: f64, own_first: bool, other: f64| -> Result<Option<SeverityModel>> {
        if lam_perp <= TAIL_CUTOFF * (lam1 + lam2) {
            return Ok(None);
        }
        let survival: Vec<f64> = t
            .iter()
            .map(|&u| {
                let c = if own_first { copula.eval(u, other) } else { copula.eval(other, u) };
                (u - c) / lam_perp
            })
            .collect();
        let masses = survival.windows(2).map(|w| (w[0] - w[1]).max(0.0)).collect();
        Ok(Some(SeverityModel::gridded(step, normalized(masses))?))
    };
    let sev1_perp = perp(&tail1, lam1_perp, true, lam2)?;
    let sev2_perp = perp(&tail2, lam2_perp, false, lam1)?;

    let joint = JointSeverity::from_levy_copula(step, tail1, tail2, copula, lam_par)?;
    let (m1, m2) = joint.marginals()?;
    let sum = sum_distribution(&joint)?;

    Ok(Decomposition {
        lambda1_perp: lam1_perp,
        lambda2_perp: lam2_perp,
        lambda_par: lam_par,
        sev1_perp,
        sev2_perp,
        sev1_par: Some(SeverityModel::Gridded(m1)),
        sev2_par: Some(SeverityModel::Gridded(m2)),
        sum_par: Some(SeverityModel::Gridded(sum)),
        joint_par: Some(joint),
        marginal1,
        marginal2,
        intensity1: lam1,
        intensity2: lam2,
        step: Some(step),
    })
}

// Smallest x (to bisection accuracy) with F̄(x) < TAIL_CUTOFF.
fn tail_cap(sev: &SeverityModel) -> f64 {
    let mut hi = sev.mean().max(1e-300);
    let mut guard = 0;
    while sev.survival(hi) >= TAIL_CUTOFF && guard < 200 {
        hi *= 2.0;
        guard += 1;
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if sev.survival(mid) >= TAIL_CUTOFF {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

impl Decomposition {
    /// Component severities in the fixed order 1⊥, 2⊥, 1∥, 2∥, 1∥+2∥.
    pub fn components(&self) -> [Option<&SeverityModel>; 5] {
        [
            self.sev1_perp.as_ref(),
            self.sev2_perp.as_ref(),
            self.sev1_par.as_ref(),
            self.sev2_par.as_ref(),
            self.sum_par.as_ref(),
        ]
    }

    /// `λᵢ⊥ P(Y^{i⊥} ≥ x) + λ∥ P(Y^{i∥} ≥ x)` for risk `i ∈ {1, 2}`.
    pub fn recomposed_tail_integral(&self, risk: usize, x: f64) -> f64 {
        let (lp, perp, par) = match risk {
            1 => (self.lambda1_perp, &self.sev1_perp, &self.sev1_par),
            _ => (self.lambda2_perp, &self.sev2_perp, &self.sev2_par),
        };
        let a = perp.as_ref().map_or(0.0, |s| lp * s.survival(x));
        let b = par.as_ref().map_or(0.0, |s| self.lambda_par * s.survival(x));
        a + b
    }

    /// Tabulates every component's integrated tails on `0, h, …, nodes·h`.
    pub fn tables(&self, step: f64, nodes: usize) -> ComponentTables {
        let table = |s: Option<&SeverityModel>| s.map(|m| m.tail_table(step, nodes));
        let [a, b, c, d, e] = self.components();
        ComponentTables {
            components: [table(a), table(b), table(c), table(d), table(e)],
            marginals: [self.marginal1.tail_table(step, nodes), self.marginal2.tail_table(step, nodes)],
        }
    }
}

/// Integrated-tail tables of the decomposition components, reusable across loadings.
#[derive(Clone, Debug)]
pub struct ComponentTables {
    components: [Option<TailTable>; 5],
    marginals: [TailTable; 2],
}

/// The claim process an insurer faces after acquiring shares of the two markets.
#[derive(Clone, Debug)]
pub struct CompanyExposure {
    /// `λ̃ = p₁λ₁ + p₂λ₂ − p¹¹λ∥`.
    pub intensity: f64,
    /// `F̃`, the five-part mixture.
    pub severity: SeverityModel,
    /// Mixture weights of 1⊥, 2⊥, 1∥, 2∥, 1∥+2∥ (zero for absent components).
    pub weights: [f64; 5],
    pub premium: f64,
    pub reserve: f64,
    /// `λ̂ = p₁λ₁ + p₂λ₂`.
    pub intensity_hat: f64,
    /// `F̂ = (p₁λ₁F₁ + p₂λ₂F₂)/λ̂`.
    pub severity_hat: SeverityModel,
    pub weights_hat: [f64; 2],
    pub shares: AcquisitionShares,
    pub parallel_intensity: f64,
}

/// Builds the company exposure from acquisition shares and the premium rate `c`.
pub fn exposure_from_shares(
    decomposition: &Decomposition,
    shares: &AcquisitionShares,
    premium: f64,
    reserve: f64,
) -> Result<CompanyExposure> {
    let d = decomposition;
    let s = shares;
    let lam_tilde = s.p1 * d.intensity1 + s.p2 * d.intensity2 - s.p11 * d.lambda_par;
    if !(lam_tilde > 0.0) {
        return validation(format!("company claim intensity must be positive, got {lam_tilde}"));
    }
    let raw = [
        s.p1 * d.lambda1_perp,
        s.p2 * d.lambda2_perp,
        s.p10 * d.lambda_par,
        s.p01 * d.lambda_par,
        s.p11 * d.lambda_par,
    ];
    let comps = d.components();
    let mut weights = [0.0; 5];
    for i in 0..5 {
        if comps[i].is_some() {
            weights[i] = raw[i].max(0.0);
        }
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return validation("company exposure has no claim components");
    }
    for w in &mut weights {
        *w /= total;
    }
    let (ws, cs): (Vec<f64>, Vec<SeverityModel>) =
        weights.iter().zip(comps).filter_map(|(&w, c)| c.filter(|_| w > 0.0).map(|c| (w, c.clone()))).unzip();
    let severity = SeverityModel::mixture(normalized(ws), cs)?;

    let lam_hat = s.p1 * d.intensity1 + s.p2 * d.intensity2;
    let weights_hat = [s.p1 * d.intensity1 / lam_hat, s.p2 * d.intensity2 / lam_hat];
    let (ws, cs): (Vec<f64>, Vec<SeverityModel>) = weights_hat
        .iter()
        .zip([&d.marginal1, &d.marginal2])
        .filter(|(w, _)| **w > 0.0)
        .map(|(&w, c)| (w, c.clone()))
        .unzip();
    let severity_hat = SeverityModel::mixture(normalized(ws), cs)?;

    Ok(CompanyExposure {
        intensity: lam_tilde,
        severity,
        weights,
        premium,
        reserve,
        intensity_hat: lam_hat,
        severity_hat,
        weights_hat,
        shares: *shares,
        parallel_intensity: d.lambda_par,
    })
}

/// Company exposure with premiums from logit demand: `c = c⁽¹⁾(θ₁) + c⁽²⁾(θ₂)`, `u = u₁ + u₂`.
///
/// Premiums are priced on the market severity means.
pub fn company_exposure(
    market: &MarketSpec,
    decomposition: &Decomposition,
    shares: &AcquisitionShares,
    loadings: (f64, f64),
    demands: (&DemandSpec, &DemandSpec),
    reserves: (f64, f64),
) -> Result<CompanyExposure> {
    let c1 = demands.0.premium_rate(market.risk1.intensity, market.risk1.severity.mean(), loadings.0);
    let c2 = demands.1.premium_rate(market.risk2.intensity, market.risk2.severity.mean(), loadings.1);
    exposure_from_shares(decomposition, shares, c1 + c2, reserves.0 + reserves.1)
}

impl CompanyExposure {
    pub fn surplus_model(&self) -> SurplusModel {
        SurplusModel::new(self.intensity, self.severity.clone(), self.premium)
    }

    /// The approximation that ignores simultaneous claims.
    pub fn independent_surplus_model(&self) -> SurplusModel {
        SurplusModel::new(self.intensity_hat, self.severity_hat.clone(), self.premium)
    }

    /// `S̄`, `S̄̄` of `F̃` from precomputed component tables.
    pub fn tail_table(&self, tables: &ComponentTables) -> TailTable {
        let parts: Vec<(f64, &TailTable)> = self
            .weights
            .iter()
            .zip(&tables.components)
            .filter_map(|(&w, t)| t.as_ref().filter(|_| w > 0.0).map(|t| (w, t)))
            .collect();
        TailTable::combine(&parts)
    }

    /// `S̄`, `S̄̄` of `F̂` from precomputed component tables.
    pub fn independent_tail_table(&self, tables: &ComponentTables) -> TailTable {
        let parts: Vec<(f64, &TailTable)> =
            self.weights_hat.iter().copied().zip(tables.marginals.iter()).filter(|(w, _)| *w > 0.0).collect();
        TailTable::combine(&parts)
    }
}
