//! Loading-sensitive demand and policy-acquisition shares.

use serde::{Deserialize, Serialize};

use crate::copulas::OrdinaryCopula;
use crate::error::{validation, Result};

/// Logit take rate `p(θ) = 1/(1 + e^{β₀+β₁θ})` with a fixed cost per unit time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandSpec {
    pub beta0: f64,
    pub beta1: f64,
    #[serde(default)]
    pub fixed_cost: f64,
}

impl DemandSpec {
    pub fn new(beta0: f64, beta1: f64, fixed_cost: f64) -> Result<Self> {
        let d = DemandSpec { beta0, beta1, fixed_cost };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.beta0.is_finite() {
            return validation(format!("beta0 must be finite, got {}", self.beta0));
        }
        if !(self.beta1.is_finite() && self.beta1 > 0.0) {
            return validation(format!("beta1 must be positive, got {}", self.beta1));
        }
        if !(self.fixed_cost.is_finite() && self.fixed_cost >= 0.0) {
            return validation(format!("fixed cost must be nonnegative, got {}", self.fixed_cost));
        }
        Ok(())
    }

    /// Share of the market that buys at loading `θ`.
    pub fn take_rate(&self, theta: f64) -> f64 {
        logistic_complement(self.beta0 + self.beta1 * theta)
    }

    /// `c(θ) = (1+θ)·λ·p(θ)·E[Y] − r`. May be negative.
    pub fn premium_rate(&self, intensity: f64, mean_claim: f64, theta: f64) -> f64 {
        (1.0 + theta) * intensity * self.take_rate(theta) * mean_claim - self.fixed_cost
    }

    /// Expected profit per unit time `θ·λ·p(θ)·E[Y] − r`.
    pub fn expected_profit(&self, intensity: f64, mean_claim: f64, theta: f64) -> f64 {
        theta * intensity * self.take_rate(theta) * mean_claim - self.fixed_cost
    }
}

// 1/(1+e^z) without overflow.
fn logistic_complement(z: f64) -> f64 {
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// Fractions of the client population holding policy 1 only, 2 only, or both.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionShares {
    pub p1: f64,
    pub p2: f64,
    pub p10: f64,
    pub p01: f64,
    pub p11: f64,
}

impl AcquisitionShares {
    /// Builds shares from the two margins and the joint share, checking consistency.
    pub fn from_margins(p1: f64, p2: f64, p11: f64) -> Result<Self> {
        for (name, p) in [("p1", p1), ("p2", p2), ("p11", p11)] {
            if !(0.0..=1.0).contains(&p) {
                return validation(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        let lower = (p1 + p2 - 1.0).max(0.0);
        let upper = p1.min(p2);
        if p11 < lower - 1e-12 || p11 > upper + 1e-12 {
            return validation(format!("joint share {p11} outside the Fréchet bounds [{lower}, {upper}]"));
        }
        let p11 = p11.clamp(lower, upper);
        Ok(AcquisitionShares { p1, p2, p10: p1 - p11, p01: p2 - p11, p11 })
    }

    /// Every client holds both policies.
    pub fn monopoly() -> Self {
        AcquisitionShares { p1: 1.0, p2: 1.0, p10: 0.0, p01: 0.0, p11: 1.0 }
    }
}

/// Shares implied by logit demand under an acquisition copula over bid prices.
///
/// With bid-price CDFs `F_Bᵢ = 1 − pᵢ`, the joint share is the survival-copula
/// expression `p¹¹ = 1 − F_B₁ − F_B₂ + C(F_B₁, F_B₂)`; the single-policy shares
/// follow from the margins.
pub fn acquisition_shares(
    copula: &OrdinaryCopula,
    d1: &DemandSpec,
    d2: &DemandSpec,
    theta1: f64,
    theta2: f64,
) -> Result<AcquisitionShares> {
    let p1 = d1.take_rate(theta1);
    let p2 = d2.take_rate(theta2);
    shares_from_take_rates(copula, p1, p2)
}

/// As [`acquisition_shares`], starting from the take rates directly.
pub fn shares_from_take_rates(copula: &OrdinaryCopula, p1: f64, p2: f64) -> Result<AcquisitionShares> {
    let p11 = match copula {
        OrdinaryCopula::Independence => p1 * p2,
        c => {
            let (f1, f2) = (1.0 - p1, 1.0 - p2);
            1.0 - f1 - f2 + c.eval(f1, f2)?
        }
    };
    let lower = (p1 + p2 - 1.0).max(0.0);
    AcquisitionShares::from_margins(p1, p2, p11.clamp(lower, p1.min(p2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copulas::Family;

    fn preset() -> DemandSpec {
        DemandSpec::new(-0.6, 4.0, 64_000.0).unwrap()
    }

    #[test]
    fn take_rate_values() {
        let d = preset();
        assert!((d.take_rate(0.0) - 1.0 / (1.0 + (-0.6_f64).exp())).abs() < 1e-15);
        assert!((d.take_rate(0.0) - 0.6457).abs() < 1e-4);
        assert!((d.take_rate(0.4) - 1.0 / (1.0 + 1.0_f64.exp())).abs() < 1e-15);
        assert!(d.take_rate(1e6) < 1e-300);
    }

    #[test]
    fn premium_rate_regression() {
        let d = preset();
        let c = d.premium_rate(800.0, 1000.0, 0.435);
        let expected = 1.435 * 800.0 * 1000.0 / (1.0 + 1.14_f64.exp()) - 64_000.0;
        assert!((c - expected).abs() < 1e-8);
        assert!((c - 214_183.774_423_746_9).abs() < 1e-6, "c = {c}");
        let free = DemandSpec::new(-0.6, 4.0, 0.0).unwrap();
        assert!((free.premium_rate(800.0, 1000.0, 0.0) - 800.0 * 1000.0 * free.take_rate(0.0)).abs() < 1e-9);
    }

    #[test]
    fn independent_shares() {
        let d1 = preset();
        let d2 = DemandSpec::new(-0.6, 4.5, 64_000.0).unwrap();
        let s = acquisition_shares(&OrdinaryCopula::Independence, &d1, &d2, 0.4, 0.3).unwrap();
        assert!((s.p11 - s.p1 * s.p2).abs() < 1e-16);
        assert!((s.p10 - s.p1 * (1.0 - s.p2)).abs() < 1e-15);
    }

    #[test]
    fn comonotone_limit() {
        let d1 = preset();
        let d2 = DemandSpec::new(-0.6, 4.5, 64_000.0).unwrap();
        let c = OrdinaryCopula::from_tau(Family::Gumbel, 0.999).unwrap();
        let s = acquisition_shares(&c, &d1, &d2, 0.4, 0.4).unwrap();
        assert!((s.p11 - s.p1.min(s.p2)).abs() < 1e-3);
    }

    #[test]
    fn bad_demand_rejected() {
        assert!(DemandSpec::new(0.0, 0.0, 1.0).is_err());
        assert!(DemandSpec::new(0.0, 1.0, -1.0).is_err());
    }
}
