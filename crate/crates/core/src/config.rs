//! JSON model configuration and the built-in figure presets.
//!
//! A config describes one risk or two. A single risk is priced either through
//! its demand curve at a given loading or by an explicit premium rate. Two
//! risks are always priced through demand, since their acquisition shares
//! depend on it.

use serde::{Deserialize, Serialize};

use crate::copulas::{Family, LevyCopula, OrdinaryCopula};
use crate::demand::DemandSpec;
use crate::distributions::SeverityModel;
use crate::error::{validation, Result};
use crate::market::{CompoundPoissonSpec, MarketSpec, SurplusModel};
use crate::optimize::{JointProblem, SearchConfig, SingleRisk};
use crate::simulate::SimConfig;

/// Default reference reserve.
pub const DEFAULT_RESERVE: f64 = 5000.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub risks: Vec<RiskConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levy_copula: Option<CopulaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acquisition_copula: Option<CopulaConfig>,
    /// Reference reserve for optimization.
    #[serde(default = "default_reserve")]
    pub reserve: f64,
    /// Reserve levels reported by solve and simulate.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reserves: Vec<f64>,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub simulation: SimConfig,
    #[serde(default)]
    pub search: SearchConfig,
}

fn default_reserve() -> f64 {
    DEFAULT_RESERVE
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskConfig {
    pub intensity: f64,
    pub severity: SeverityModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand: Option<DemandSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loading: Option<f64>,
    /// Explicit premium rate; replaces demand-based pricing for a single risk.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub premium: Option<f64>,
}

/// A copula given by family and either Kendall's τ or the parameter ω.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CopulaConfig {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
}

/// Solver overrides; unset fields fall back to `E[Y]/500` and the largest reserve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series_terms: Option<usize>,
}

impl CopulaConfig {
    pub fn omega(family: Family, omega: f64) -> Self {
        CopulaConfig { family, tau: None, omega: Some(omega) }
    }

    pub fn tau(family: Family, tau: f64) -> Self {
        CopulaConfig { family, tau: Some(tau), omega: None }
    }

    pub fn to_ordinary(&self) -> Result<OrdinaryCopula> {
        match (self.family, self.tau, self.omega) {
            (Family::Independence, None, None) => Ok(OrdinaryCopula::Independence),
            (Family::Independence, _, _) => validation("the independence copula takes no parameter"),
            (_, Some(_), Some(_)) => validation("give either tau or omega for a copula, not both"),
            (f, Some(t), None) => OrdinaryCopula::from_tau(f, t),
            (f, None, Some(w)) => OrdinaryCopula::new(f, w),
            (f, None, None) => validation(format!("the {f} copula needs tau or omega")),
        }
    }

    /// `None` for independence.
    pub fn to_levy(&self) -> Result<Option<LevyCopula>> {
        match (self.family, self.tau, self.omega) {
            (Family::Independence, None, None) => Ok(None),
            (Family::Clayton, None, Some(w)) => Ok(Some(LevyCopula::clayton(w)?)),
            (Family::Clayton, Some(_), _) => validation("the Lévy copula is parameterized by omega only"),
            (Family::Clayton, None, None) => validation("the Clayton Lévy copula needs omega"),
            (f, _, _) => validation(format!("unsupported Lévy copula family {f}; use clayton or independence")),
        }
    }
}

/// A config resolved into model objects.
#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Single(SingleModel),
    Joint(JointModel),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SingleModel {
    pub risk: CompoundPoissonSpec,
    pub demand: Option<DemandSpec>,
    pub loading: Option<f64>,
    pub premium: Option<f64>,
}

impl SingleModel {
    /// The surplus process at the configured loading or premium.
    pub fn surplus(&self) -> Result<SurplusModel> {
        match (self.premium, self.demand, self.loading) {
            (Some(c), _, _) => Ok(SurplusModel::new(self.risk.intensity, self.risk.severity.clone(), c)),
            (None, Some(d), Some(t)) => Ok(SingleRisk { risk: self.risk.clone(), demand: d }.surplus(t)),
            _ => validation("a single risk needs a premium, or a demand curve with a loading"),
        }
    }

    pub fn priced(&self) -> Option<SingleRisk> {
        self.demand.map(|demand| SingleRisk { risk: self.risk.clone(), demand })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointModel {
    pub problem: JointProblem,
    pub loadings: Option<(f64, f64)>,
}

impl JointModel {
    pub fn loadings(&self) -> Result<(f64, f64)> {
        self.loadings.ok_or_else(|| crate::Error::Validation("both risks need a loading".into()))
    }
}

impl ModelConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.inner();
            // serde_json appends the position; it is reported separately.
            let mut message = inner.to_string();
            if let Some(k) = message.rfind(" at line ") {
                message.truncate(k);
            }
            ConfigError { path, line: inner.line(), column: inner.column(), message }
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Reserve levels to report: the configured list, else the reference reserve.
    pub fn report_reserves(&self) -> Vec<f64> {
        if self.reserves.is_empty() {
            vec![self.reserve]
        } else {
            self.reserves.clone()
        }
    }

    pub fn build(&self) -> Result<Model> {
        if !(self.reserve.is_finite() && self.reserve >= 0.0) {
            return validation(format!("reserve must be nonnegative, got {}", self.reserve));
        }
        if let Some(u) = self.reserves.iter().find(|u| !(u.is_finite() && **u >= 0.0)) {
            return validation(format!("reserves must be nonnegative, got {u}"));
        }
        self.simulation.validate()?;
        let risks = self
            .risks
            .iter()
            .map(|r| {
                if let Some(d) = &r.demand {
                    d.validate()?;
                }
                if let Some(t) = r.loading {
                    if !t.is_finite() {
                        return validation(format!("loading must be finite, got {t}"));
                    }
                }
                CompoundPoissonSpec::new(r.intensity, r.severity.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        match self.risks.as_slice() {
            [r] => {
                if self.levy_copula.is_some() || self.acquisition_copula.is_some() {
                    return validation("copulas need two risks");
                }
                if let Some(c) = r.premium {
                    if !c.is_finite() {
                        return validation(format!("premium must be finite, got {c}"));
                    }
                }
                let m =
                    SingleModel { risk: risks[0].clone(), demand: r.demand, loading: r.loading, premium: r.premium };
                m.surplus()?;
                Ok(Model::Single(m))
            }
            [a, b] => {
                let (Some(d1), Some(d2)) = (a.demand, b.demand) else {
                    return validation("with two risks both need a demand curve");
                };
                if a.premium.is_some() || b.premium.is_some() {
                    return validation("with two risks premiums come from demand; drop the premium fields");
                }
                let loadings = match (a.loading, b.loading) {
                    (Some(x), Some(y)) => Some((x, y)),
                    (None, None) => None,
                    _ => return validation("give a loading for both risks or for neither"),
                };
                let levy = match &self.levy_copula {
                    Some(c) => c.to_levy()?,
                    None => None,
                };
                let acquisition = match &self.acquisition_copula {
                    Some(c) => c.to_ordinary()?,
                    None => OrdinaryCopula::Independence,
                };
                let market = MarketSpec { risk1: risks[0].clone(), risk2: risks[1].clone(), levy };
                market.validate()?;
                let grid_step = self
                    .solver
                    .grid_step
                    .unwrap_or_else(|| market.risk1.severity.mean().min(market.risk2.severity.mean()) / 500.0);
                let problem = JointProblem { market, demands: (d1, d2), acquisition, reserve: self.reserve, grid_step };
                Ok(Model::Joint(JointModel { problem, loadings }))
            }
            _ => validation(format!("a config holds one or two risks, got {}", self.risks.len())),
        }
    }
}

/// Schema violation with its location in the document.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("config error at `{path}` (line {line}, column {column}): {message}")]
pub struct ConfigError {
    pub path: String,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 6] = ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6"];

const MARKET_INTENSITY: f64 = 800.0;
const BETA0: f64 = -0.6;
const BETAS: [f64; 2] = [4.0, 4.5];
const GAMMA_SHAPE: f64 = 2.0;
const GAMMA_SCALE: f64 = 500.0;
/// `0.4·0.2·λE[Y]`, written out so it is exact.
const FIXED_COST: f64 = 64_000.0;

/// The experiment risk: gamma(2, 500) claims at rate 800 with logit demand.
pub fn preset_risk(beta1: f64, loading: f64) -> RiskConfig {
    RiskConfig {
        intensity: MARKET_INTENSITY,
        severity: SeverityModel::Gamma { shape: GAMMA_SHAPE, scale: GAMMA_SCALE },
        demand: Some(DemandSpec { beta0: BETA0, beta1, fixed_cost: FIXED_COST }),
        loading: Some(loading),
        premium: None,
    }
}

/// Reserve levels of the single-risk figures.
pub const FIGURE_RESERVES: [f64; 5] = [100.0, 1000.0, 5000.0, 10000.0, 20000.0];

/// The built-in experiment configs.
pub fn preset(name: &str) -> Option<ModelConfig> {
    let solver = SolverSettings { grid_step: Some(2.0), x_max: None, series_terms: None };
    let single = |beta1: f64, loading: f64| ModelConfig {
        preset: Some(name.to_string()),
        risks: vec![preset_risk(beta1, loading)],
        levy_copula: None,
        acquisition_copula: None,
        reserve: DEFAULT_RESERVE,
        reserves: FIGURE_RESERVES.to_vec(),
        solver,
        simulation: SimConfig::default(),
        search: SearchConfig::default(),
    };
    let joint = |levy: Option<CopulaConfig>, acquisition: Option<CopulaConfig>, loadings: (f64, f64)| ModelConfig {
        preset: Some(name.to_string()),
        risks: vec![preset_risk(BETAS[0], loadings.0), preset_risk(BETAS[1], loadings.1)],
        levy_copula: levy,
        acquisition_copula: acquisition,
        reserve: DEFAULT_RESERVE,
        reserves: Vec::new(),
        solver,
        simulation: SimConfig::default(),
        search: SearchConfig::default(),
    };
    let clayton = Some(CopulaConfig::omega(Family::Clayton, 1.0));
    // The contour plots only need the region around the optimum.
    let contour = SearchConfig { lower: 0.2, upper: 0.7, ..SearchConfig::default() };
    let cfg = match name {
        "fig1" => single(BETAS[0], 0.435),
        "fig2" => single(BETAS[1], 0.358),
        "fig3" => joint(clayton, None, (0.4, 0.4)),
        "fig4" => ModelConfig { search: contour, ..joint(None, None, (0.42, 0.38)) },
        "fig5" => ModelConfig { search: contour, ..joint(clayton, None, (0.42, 0.38)) },
        "fig6" => joint(clayton, Some(CopulaConfig::tau(Family::Gumbel, 0.5)), (0.4, 0.4)),
        _ => return None,
    };
    Some(cfg)
}
