//! Ordinary copulas for policy-acquisition dependence and the Clayton Lévy
//! copula for simultaneous claims.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::special::debye1;

/// Parametric families of bivariate copulas.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Independence,
    Clayton,
    Gumbel,
    Frank,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Family::Independence => "independence",
            Family::Clayton => "clayton",
            Family::Gumbel => "gumbel",
            Family::Frank => "frank",
        };
        f.write_str(s)
    }
}

/// A bivariate copula `C: [0,1]² → [0,1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OrdinaryCopula {
    Independence,
    /// `(u^{-ω} + v^{-ω} - 1)^{-1/ω}`, `ω > 0`.
    Clayton {
        omega: f64,
    },
    /// `exp(-((-ln u)^ω + (-ln v)^ω)^{1/ω})`, `ω ≥ 1`.
    Gumbel {
        omega: f64,
    },
    /// `-(1/ω) ln(1 + (e^{-ωu}-1)(e^{-ωv}-1)/(e^{-ω}-1))`, `ω ≠ 0`.
    Frank {
        omega: f64,
    },
}

const FRANK_OMEGA_MAX: f64 = 50.0;

impl OrdinaryCopula {
    pub fn new(family: Family, omega: f64) -> Result<Self> {
        let ok = omega.is_finite();
        let c = match family {
            Family::Independence => OrdinaryCopula::Independence,
            Family::Clayton if ok && omega > 0.0 => OrdinaryCopula::Clayton { omega },
            Family::Gumbel if ok && omega >= 1.0 => OrdinaryCopula::Gumbel { omega },
            Family::Frank if ok && omega != 0.0 => OrdinaryCopula::Frank { omega },
            Family::Clayton => return validation(format!("clayton copula needs omega > 0, got {omega}")),
            Family::Gumbel => return validation(format!("gumbel copula needs omega >= 1, got {omega}")),
            Family::Frank => return validation("frank copula needs a finite omega != 0"),
        };
        Ok(c)
    }

    /// Copula of the given family with Kendall's tau `τ ∈ [0, 1)`.
    ///
    /// Clayton uses `ω = 2τ/(1-τ)` and Gumbel `ω = 1/(1-τ)`; Frank inverts its
    /// Debye-function relation by bisection. `τ = 0` gives independence for
    /// Clayton and Frank, and the (equivalent) Gumbel copula with `ω = 1`.
    pub fn from_tau(family: Family, tau: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&tau) {
            return validation(format!("Kendall's tau must lie in [0, 1), got {tau}"));
        }
        match family {
            Family::Independence => Ok(OrdinaryCopula::Independence),
            Family::Clayton if tau == 0.0 => Ok(OrdinaryCopula::Independence),
            Family::Clayton => Self::new(family, 2.0 * tau / (1.0 - tau)),
            Family::Gumbel => Self::new(family, 1.0 / (1.0 - tau)),
            Family::Frank if tau == 0.0 => Ok(OrdinaryCopula::Independence),
            Family::Frank => Self::new(family, frank_omega_for_tau(tau)?),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            OrdinaryCopula::Independence => Family::Independence,
            OrdinaryCopula::Clayton { .. } => Family::Clayton,
            OrdinaryCopula::Gumbel { .. } => Family::Gumbel,
            OrdinaryCopula::Frank { .. } => Family::Frank,
        }
    }

    /// The dependence parameter, `None` for the independence copula.
    pub fn omega(&self) -> Option<f64> {
        match *self {
            OrdinaryCopula::Independence => None,
            OrdinaryCopula::Clayton { omega } | OrdinaryCopula::Gumbel { omega } | OrdinaryCopula::Frank { omega } => {
                Some(omega)
            }
        }
    }

    /// Theoretical Kendall's tau.
    pub fn kendall_tau(&self) -> f64 {
        match *self {
            OrdinaryCopula::Independence => 0.0,
            OrdinaryCopula::Clayton { omega } => omega / (omega + 2.0),
            OrdinaryCopula::Gumbel { omega } => 1.0 - 1.0 / omega,
            OrdinaryCopula::Frank { omega } => frank_tau(omega),
        }
    }

    /// `C(u, v)`; inputs outside `[0, 1]` are rejected.
    pub fn eval(&self, u: f64, v: f64) -> Result<f64> {
        if !((0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v)) {
            return validation(format!("copula arguments must lie in [0, 1], got ({u}, {v})"));
        }
        Ok(self.cdf(u, v))
    }

    // Unchecked evaluation, clamped into the Fréchet bounds against roundoff.
    pub(crate) fn cdf(&self, u: f64, v: f64) -> f64 {
        if u == 0.0 || v == 0.0 {
            return 0.0;
        }
        if u == 1.0 {
            return v;
        }
        if v == 1.0 {
            return u;
        }
        let raw = match *self {
            OrdinaryCopula::Independence => u * v,
            OrdinaryCopula::Clayton { omega } => (u.powf(-omega) + v.powf(-omega) - 1.0).powf(-1.0 / omega),
            OrdinaryCopula::Gumbel { omega } => {
                let s = (-u.ln()).powf(omega) + (-v.ln()).powf(omega);
                (-s.powf(1.0 / omega)).exp()
            }
            OrdinaryCopula::Frank { omega } => {
                let num = (-omega * u).exp_m1() * (-omega * v).exp_m1();
                -(num / (-omega).exp_m1()).ln_1p() / omega
            }
        };
        raw.clamp((u + v - 1.0).max(0.0), u.min(v))
    }

    /// Draws `(U, V)` with this copula as joint distribution.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let u: f64 = open_unit(rng);
        match *self {
            OrdinaryCopula::Independence => (u, open_unit(rng)),
            OrdinaryCopula::Clayton { omega } => {
                // Conditional inversion of ∂C/∂u.
                let w: f64 = open_unit(rng);
                let v = ((w.powf(-omega / (1.0 + omega)) - 1.0) * u.powf(-omega) + 1.0).powf(-1.0 / omega);
                (u, v)
            }
            OrdinaryCopula::Frank { omega } => {
                let w: f64 = open_unit(rng);
                let em = (-omega).exp_m1();
                let v = -(w * em / (w + (1.0 - w) * (-omega * u).exp())).ln_1p() / omega;
                (u, v.clamp(0.0, 1.0))
            }
            OrdinaryCopula::Gumbel { omega } => {
                // Marshall–Olkin with a positive stable frailty of index 1/ω.
                let alpha = 1.0 / omega;
                let frailty = positive_stable(alpha, rng);
                let e1 = -open_unit(rng).ln();
                let e2 = -open_unit(rng).ln();
                let g = |e: f64| (-(e / frailty).powf(alpha)).exp();
                (g(e1), g(e2))
            }
        }
    }
}

fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

// Chambers–Mallows–Stuck for a totally skewed stable law with Laplace transform e^{-s^α}.
fn positive_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    if alpha >= 1.0 {
        return 1.0;
    }
    let theta = std::f64::consts::PI * open_unit(rng);
    let w = -open_unit(rng).ln();
    let a = (alpha * theta).sin() / theta.sin().powf(1.0 / alpha);
    let b = (((1.0 - alpha) * theta).sin() / w).powf((1.0 - alpha) / alpha);
    a * b
}

fn frank_tau(omega: f64) -> f64 {
    if omega == 0.0 {
        return 0.0;
    }
    1.0 - 4.0 / omega + 4.0 * debye1(omega) / omega
}

fn frank_omega_for_tau(tau: f64) -> Result<f64> {
    let (mut lo, mut hi) = (1e-8, FRANK_OMEGA_MAX);
    if frank_tau(hi) < tau {
        return validation(format!(
            "Kendall's tau {tau} exceeds the frank range supported (omega <= {FRANK_OMEGA_MAX})"
        ));
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if frank_tau(mid) < tau {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Clayton Lévy copula `𝒞(x, y) = (x^{-ω} + y^{-ω})^{-1/ω}` on `[0, ∞]²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevyCopula {
    omega: f64,
}

impl LevyCopula {
    pub fn clayton(omega: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return validation(format!("clayton Lévy copula needs omega > 0, got {omega}"));
        }
        Ok(LevyCopula { omega })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        if x == 0.0 || y == 0.0 {
            return 0.0;
        }
        if x.is_infinite() {
            return y;
        }
        if y.is_infinite() {
            return x;
        }
        let (m, big) = if x < y { (x, y) } else { (y, x) };
        if self.omega == 1.0 {
            return m / (1.0 + m / big);
        }
        // m·(1 + (m/M)^ω)^{-1/ω}, stable for large ω.
        m * (-(m / big).powf(self.omega).ln_1p() / self.omega).exp()
    }

    /// `t^{-ω}`, the additive coordinate of the Clayton generator.
    pub(crate) fn power(&self, t: f64) -> f64 {
        if self.omega == 1.0 {
            1.0 / t
        } else {
            t.powf(-self.omega)
        }
    }

    /// `𝒞(x, y)` from precomputed powers `a = x^{-ω}`, `b = y^{-ω}`.
    pub(crate) fn eval_prepared(&self, x: f64, a: f64, y: f64, b: f64) -> f64 {
        let s = a + b;
        if s.is_infinite() {
            // Either an argument is zero or the power overflowed.
            return if x > 0.0 && y > 0.0 { self.eval(x, y) } else { 0.0 };
        }
        if self.omega == 1.0 {
            1.0 / s
        } else {
            s.powf(-1.0 / self.omega)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independence_product() {
        assert!((OrdinaryCopula::Independence.eval(0.3, 0.5).unwrap() - 0.15).abs() < 1e-16);
    }

    #[test]
    fn clayton_direct_value() {
        let c = OrdinaryCopula::new(Family::Clayton, 2.0).unwrap();
        assert!((c.eval(0.5, 0.5).unwrap() - 7.0_f64.powf(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(OrdinaryCopula::Independence.eval(1.2, 0.5).is_err());
        assert!(OrdinaryCopula::Independence.eval(0.2, -0.1).is_err());
    }

    #[test]
    fn tau_conversions() {
        assert_eq!(OrdinaryCopula::from_tau(Family::Clayton, 0.5).unwrap().omega(), Some(2.0));
        assert_eq!(OrdinaryCopula::from_tau(Family::Gumbel, 0.5).unwrap().omega(), Some(2.0));
        assert_eq!(OrdinaryCopula::from_tau(Family::Clayton, 0.0).unwrap(), OrdinaryCopula::Independence);
        assert!(OrdinaryCopula::from_tau(Family::Clayton, 1.0).is_err());
        let f = OrdinaryCopula::from_tau(Family::Frank, 0.3).unwrap();
        assert!((f.kendall_tau() - 0.3).abs() < 1e-9);
    }

    #[test]
    fn levy_clayton_values() {
        let c = LevyCopula::clayton(1.0).unwrap();
        assert!((c.eval(800.0, 800.0) - 400.0).abs() < 1e-12);
        assert_eq!(c.eval(5.0, f64::INFINITY), 5.0);
        assert_eq!(c.eval(5.0, 0.0), 0.0);
        let c2 = LevyCopula::clayton(2.5).unwrap();
        let (a, b) = (c2.power(3.0), c2.power(7.0));
        assert!((c2.eval_prepared(3.0, a, 7.0, b) - c2.eval(3.0, 7.0)).abs() < 1e-13);
    }

    #[test]
    fn levy_prepared_handles_overflow() {
        let c = LevyCopula::clayton(50.0).unwrap();
        let (x, y) = (1e-9, 2e-9);
        let v = c.eval_prepared(x, c.power(x), y, c.power(y));
        assert!((v - c.eval(x, y)).abs() < 1e-24);
        assert!((v - x).abs() < 0.01 * x);
    }
}
