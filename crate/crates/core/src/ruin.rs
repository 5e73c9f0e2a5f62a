//! Infinite-horizon survival and ruin probabilities.
//!
//! The survival function solves
//!
//! ```text
//! V̄(x) = V̄(0) + α ∫₀ˣ V̄(x−y) F̄(y) dy,   V̄(0) = 1 − αE[Y],   α = λ/c.
//! ```
//!
//! [`solve_survival`] discretizes it with a piecewise-linear `V̄` on a uniform
//! grid; each cell integral is evaluated exactly from the integrated tails, so
//! every node value follows from the previous ones by one linear solve.
//! [`solve_series`] sums the Neumann series of the same equation and serves as
//! an independent check.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::distributions::{SeverityModel, TailTable};
use crate::error::{validation, Error, Result};
use crate::market::SurplusModel;
use crate::special::ln_gamma;

const UPPER_LIMIT: f64 = 1.01;
const NEGATIVE_LIMIT: f64 = -1e-9;
const SERIES_TAIL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub grid_step: f64,
    pub x_max: f64,
    #[serde(default = "default_series_terms")]
    pub series_terms: usize,
}

fn default_series_terms() -> usize {
    600
}

impl SolverConfig {
    pub fn new(grid_step: f64, x_max: f64) -> Self {
        SolverConfig { grid_step, x_max, series_terms: default_series_terms() }
    }

    /// Step `E[Y]/500`, reaching far enough for `V̄(x_max) ≥ 0.999` or `cap`, whichever is smaller.
    pub fn default_for(model: &SurplusModel, cap: f64) -> Self {
        let mean = model.severity.mean();
        let step = mean / 500.0;
        let mut x_max = cap;
        let eta = model.relative_loading();
        if eta > 0.0 {
            // Lundberg-type decay e^{-Rx} with R ≈ η/((1+η)E[Y]) for light tails.
            let decay = eta / ((1.0 + eta) * mean);
            let reach = (1000.0_f64).ln() / decay;
            x_max = x_max.min(reach.max(step));
        }
        SolverConfig::new(step, x_max)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grid_step.is_finite() && self.grid_step > 0.0) {
            return validation(format!("grid step must be positive, got {}", self.grid_step));
        }
        if !(self.x_max.is_finite() && self.x_max >= self.grid_step) {
            return validation(format!(
                "x_max must be at least one grid step, got x_max={} with step {}",
                self.x_max, self.grid_step
            ));
        }
        if self.series_terms < 1 {
            return validation("series_terms must be at least 1");
        }
        Ok(())
    }

    /// Index of the last node; the grid is `0, h, …, n·h` with `n·h ≥ x_max`.
    pub fn nodes(&self) -> usize {
        ((self.x_max / self.grid_step) - 1e-9).ceil().max(1.0) as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    Recursion,
    Series,
}

/// Survival probabilities on the grid `xᵢ = i·h`.
#[derive(Clone, Debug, PartialEq)]
pub struct RuinCurve {
    pub x: Vec<f64>,
    pub survival: Vec<f64>,
    pub grid_step: f64,
    pub method: SolverMethod,
    /// Advertised bound on the discretization error of each value.
    pub error_estimate: f64,
}

impl RuinCurve {
    pub fn ruin(&self) -> Vec<f64> {
        self.survival.iter().map(|v| 1.0 - v).collect()
    }

    /// `V̄(x)` by linear interpolation; `x` beyond the grid end is an error.
    pub fn survival_at(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Ok(0.0);
        }
        let pos = x / self.grid_step;
        let n = self.survival.len() - 1;
        if pos > n as f64 + 1e-9 {
            return validation(format!("reserve {x} lies beyond the solved grid (x_max = {})", self.x[n]));
        }
        let k = (pos.floor() as usize).min(n);
        if k == n {
            return Ok(self.survival[n]);
        }
        let t = pos - k as f64;
        Ok(self.survival[k] + t * (self.survival[k + 1] - self.survival[k]))
    }

    pub fn ruin_at(&self, x: f64) -> Result<f64> {
        Ok(1.0 - self.survival_at(x)?)
    }
}

fn check_net_profit(model: &SurplusModel) -> Result<()> {
    let margin = model.net_profit_margin();
    if !(margin > 0.0) {
        return Err(Error::NetProfit { margin });
    }
    Ok(())
}

/// Solves the survival equation by the piecewise-linear grid recursion.
pub fn solve_survival(model: &SurplusModel, cfg: &SolverConfig) -> Result<RuinCurve> {
    cfg.validate()?;
    model.severity.validate()?;
    let n = cfg.nodes();
    if model.intensity == 0.0 {
        return Ok(trivial_curve(cfg.grid_step, n));
    }
    check_net_profit(model)?;
    let table = model.severity.tail_table(cfg.grid_step, n);
    solve_with_table(model.intensity, model.severity.mean(), model.premium, &table)
}

fn trivial_curve(step: f64, n: usize) -> RuinCurve {
    RuinCurve {
        x: (0..=n).map(|i| i as f64 * step).collect(),
        survival: vec![1.0; n + 1],
        grid_step: step,
        method: SolverMethod::Recursion,
        error_estimate: 0.0,
    }
}

/// [`solve_survival`] with precomputed integrated tails; the grid is the table's grid.
pub fn solve_with_table(intensity: f64, mean: f64, premium: f64, table: &TailTable) -> Result<RuinCurve> {
    let h = table.step;
    let n = table.nodes();
    if intensity == 0.0 {
        return Ok(trivial_curve(h, n));
    }
    let margin = premium - intensity * mean;
    if !(margin > 0.0) {
        return Err(Error::NetProfit { margin });
    }
    let alpha = intensity / premium;
    let v0 = 1.0 - alpha * mean;

    // Cell j = [x_{j-1}, x_j] contributes w0_j·V̄(x_i − x_j) + w1_j·V̄(x_i − x_{j−1}).
    let s1 = &table.first;
    let s2 = &table.second;
    let mut w0 = vec![0.0; n + 2];
    let mut w1 = vec![0.0; n + 2];
    for j in 1..=n {
        let a1 = s1[j] - s1[j - 1];
        let a2 = s2[j] - s2[j - 1] - h * s1[j - 1];
        w0[j] = a1 - a2 / h;
        w1[j] = a2 / h;
    }
    // q_m multiplies V̄_{i−m} for 1 ≤ m ≤ i−1.
    let q: Vec<f64> = (0..=n).map(|m| if m == 0 { 0.0 } else { w0[m] + w1[m + 1] }).collect();
    let diag = 1.0 - alpha * w1[1];

    let mut v = vec![0.0; n + 1];
    v[0] = v0;
    for i in 1..=n {
        let conv = reversed_dot(&v[1..i], &q[1..i]);
        let value = (v0 + alpha * (w0[i] * v0 + conv)) / diag;
        if !(NEGATIVE_LIMIT..=UPPER_LIMIT).contains(&value) || !value.is_finite() {
            return Err(Error::Instability { index: i, x: i as f64 * h, value });
        }
        v[i] = value;
    }
    Ok(RuinCurve {
        x: (0..=n).map(|i| i as f64 * h).collect(),
        survival: v,
        grid_step: h,
        method: SolverMethod::Recursion,
        error_estimate: alpha * h / v0,
    })
}

// Σ_k a[k]·b[len−1−k] with independent accumulators.
fn reversed_dot(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len();
    let mut acc = [0.0; 4];
    let chunks = len / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[len - 1 - k];
        acc[1] += a[k + 1] * b[len - 2 - k];
        acc[2] += a[k + 2] * b[len - 3 - k];
        acc[3] += a[k + 3] * b[len - 4 - k];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..len {
        s += a[k] * b[len - 1 - k];
    }
    s
}

/// `(Ψh)(x) = ∫₀ˣ h(z) F̄(x−z) dz` on the grid `0, step, …` by the trapezoid rule.
pub fn apply_psi(h: &[f64], severity: &SeverityModel, step: f64) -> Vec<f64> {
    let tail: Vec<f64> = (0..h.len()).map(|i| severity.survival(i as f64 * step)).collect();
    Convolver::new(&tail, step).apply(h)
}

// Trapezoid convolution with a fixed kernel, FFT based.
struct Convolver {
    kernel_hat: Vec<Complex<f64>>,
    kernel0: f64,
    kernel: Vec<f64>,
    len: usize,
    size: usize,
    step: f64,
    planner: FftPlanner<f64>,
}

impl Convolver {
    fn new(kernel: &[f64], step: f64) -> Self {
        let len = kernel.len();
        let size = (2 * len).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(size);
        let mut kernel_hat: Vec<Complex<f64>> = kernel.iter().map(|&f| Complex::new(f, 0.0)).collect();
        kernel_hat.resize(size, Complex::new(0.0, 0.0));
        fft.process(&mut kernel_hat);
        Convolver { kernel_hat, kernel0: kernel[0], kernel: kernel.to_vec(), len, size, step, planner }
    }

    fn apply(&mut self, h: &[f64]) -> Vec<f64> {
        debug_assert_eq!(h.len(), self.len);
        let fft = self.planner.plan_fft_forward(self.size);
        let ifft = self.planner.plan_fft_inverse(self.size);
        let mut buf: Vec<Complex<f64>> = h.iter().map(|&v| Complex::new(v, 0.0)).collect();
        buf.resize(self.size, Complex::new(0.0, 0.0));
        fft.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        ifft.process(&mut buf);
        let scale = 1.0 / self.size as f64;
        (0..self.len)
            .map(|i| {
                if i == 0 {
                    return 0.0;
                }
                let full = buf[i].re * scale;
                self.step * (full - 0.5 * (h[0] * self.kernel[i] + h[i] * self.kernel0))
            })
            .collect()
    }
}

/// Number of series terms `n` for which the tail bound `(2·x_max·α)ⁿ/n!` drops below 1e-10.
pub fn series_terms_needed(alpha: f64, x_max: f64) -> usize {
    let r = 2.0 * x_max * alpha;
    if r <= 0.0 {
        return 1;
    }
    let target = SERIES_TAIL_TOL.ln();
    let mut n = 1usize;
    while (n as f64) * r.ln() - ln_gamma(n as f64 + 1.0) >= target {
        n += 1;
    }
    n
}

/// Ruin probabilities `Σ_{k<terms} α^{k+1}(Ψᵏg)(xᵢ)` with `g = E[Y] − S̄`, without a tail check.
pub fn series_partial_sum(model: &SurplusModel, cfg: &SolverConfig, terms: usize) -> Vec<f64> {
    let n = cfg.nodes();
    let h = cfg.grid_step;
    let alpha = model.intensity / model.premium;
    let mean = model.severity.mean();
    let tails = model.severity.integrated_tails();
    let g: Vec<f64> = (0..=n).map(|i| mean - tails.first(i as f64 * h)).collect();
    let kernel: Vec<f64> = (0..=n).map(|i| model.severity.survival(i as f64 * h)).collect();
    let mut conv = Convolver::new(&kernel, h);
    let mut term: Vec<f64> = g.iter().map(|v| alpha * v).collect();
    let mut total = term.clone();
    for _ in 1..terms {
        term = conv.apply(&term);
        for t in &mut term {
            *t *= alpha;
        }
        for (acc, t) in total.iter_mut().zip(&term) {
            *acc += t;
        }
    }
    total
}

/// Solves the survival equation through its operator series.
pub fn solve_series(model: &SurplusModel, cfg: &SolverConfig) -> Result<RuinCurve> {
    cfg.validate()?;
    model.severity.validate()?;
    let n = cfg.nodes();
    if model.intensity == 0.0 {
        let mut c = trivial_curve(cfg.grid_step, n);
        c.method = SolverMethod::Series;
        return Ok(c);
    }
    check_net_profit(model)?;
    let alpha = model.intensity / model.premium;
    let x_end = n as f64 * cfg.grid_step;
    let needed = series_terms_needed(alpha, x_end);
    if needed > cfg.series_terms {
        return Err(Error::Accuracy(format!(
            "series needs {needed} terms for a tail bound of {SERIES_TAIL_TOL:e}, only {} allowed",
            cfg.series_terms
        )));
    }
    let ruin = series_partial_sum(model, cfg, needed);
    Ok(RuinCurve {
        x: (0..=n).map(|i| i as f64 * cfg.grid_step).collect(),
        survival: ruin.iter().map(|v| 1.0 - v).collect(),
        grid_step: cfg.grid_step,
        method: SolverMethod::Series,
        error_estimate: alpha * cfg.grid_step * cfg.grid_step,
    })
}

/// Grönwall bound on `|V − V_ind|`: `p¹¹·λ∥·(e^{2λ̃x/c} − 1)/λ̃`.
pub fn dependency_error_bound(p11: f64, lambda_par: f64, lambda_tilde: f64, premium: f64, x: f64) -> f64 {
    if p11 == 0.0 || lambda_par == 0.0 || x == 0.0 {
        return 0.0;
    }
    if lambda_tilde == 0.0 {
        return p11 * lambda_par * 2.0 * x / premium;
    }
    p11 * lambda_par * (2.0 * lambda_tilde * x / premium).exp_m1() / lambda_tilde
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exponential_model(mu: f64, lam: f64, eta: f64) -> SurplusModel {
        SurplusModel::new(lam, SeverityModel::exponential(mu).unwrap(), (1.0 + eta) * lam * mu)
    }

    #[test]
    fn boundary_value() {
        let m = exponential_model(1000.0, 1.0, 0.25);
        let curve = solve_survival(&m, &SolverConfig::new(5.0, 5000.0)).unwrap();
        assert!((curve.survival[0] - (1.0 - 1.0 / 1.25)).abs() < 1e-15);
    }

    #[test]
    fn exponential_closed_form() {
        let (mu, eta) = (1000.0, 0.25);
        let m = exponential_model(mu, 2.0, eta);
        let curve = solve_survival(&m, &SolverConfig::new(mu / 200.0, 20_000.0)).unwrap();
        for (x, v) in curve.x.iter().zip(&curve.survival) {
            let ruin = (-eta * x / ((1.0 + eta) * mu)).exp() / (1.0 + eta);
            assert!((1.0 - v - ruin).abs() < 1e-6, "x = {x}");
        }
    }

    #[test]
    fn zero_intensity_never_ruins() {
        let m = SurplusModel::new(0.0, SeverityModel::exponential(1.0).unwrap(), 0.0);
        let curve = solve_survival(&m, &SolverConfig::new(0.5, 10.0)).unwrap();
        assert!(curve.survival.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn net_profit_violation_reports_margin() {
        let m = SurplusModel::new(1.0, SeverityModel::exponential(10.0).unwrap(), 8.0);
        match solve_survival(&m, &SolverConfig::new(0.5, 10.0)) {
            Err(Error::NetProfit { margin }) => assert!((margin + 2.0).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn psi_of_constant_is_first_tail() {
        let sev = SeverityModel::gamma(2.0, 500.0).unwrap();
        let step = 1.0;
        let ones = vec![1.0; 4001];
        let out = apply_psi(&ones, &sev, step);
        let t = sev.integrated_tails();
        for i in (0..=4000).step_by(250) {
            // trapezoid error is O(h²)
            assert!((out[i] - t.first(i as f64)).abs() <= 1e-6 * t.first(i as f64), "i = {i}");
        }
        assert!(apply_psi(&[0.0; 16], &sev, step).iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn series_first_term() {
        let m = exponential_model(100.0, 1.0, 0.5);
        let cfg = SolverConfig::new(1.0, 200.0);
        let v = series_partial_sum(&m, &cfg, 1);
        let alpha = 1.0 / m.premium;
        let t = m.severity.integrated_tails();
        for (i, val) in v.iter().enumerate() {
            assert!((val - alpha * (100.0 - t.first(i as f64))).abs() < 1e-14);
        }
    }

    #[test]
    fn series_matches_recursion() {
        let m = exponential_model(1000.0, 1.0, 0.3);
        let cfg = SolverConfig::new(5.0, 10_000.0);
        let a = solve_survival(&m, &cfg).unwrap();
        let b = solve_series(&m, &cfg).unwrap();
        for (x, y) in a.survival.iter().zip(&b.survival) {
            assert!((x - y).abs() < 1e-4);
        }
    }

    #[test]
    fn bound_edge_cases() {
        assert_eq!(dependency_error_bound(0.0, 400.0, 1000.0, 1e6, 5000.0), 0.0);
        assert_eq!(dependency_error_bound(0.5, 400.0, 1000.0, 1e6, 0.0), 0.0);
        let b = dependency_error_bound(0.5, 400.0, 1000.0, 1e6, 5000.0);
        assert!((b - 0.5 * 400.0 * (10.0_f64.exp() - 1.0) / 1000.0).abs() < 1e-9);
    }

    #[test]
    fn interpolation() {
        let m = exponential_model(10.0, 1.0, 0.5);
        let c = solve_survival(&m, &SolverConfig::new(1.0, 20.0)).unwrap();
        let mid = c.survival_at(2.5).unwrap();
        assert!((mid - 0.5 * (c.survival[2] + c.survival[3])).abs() < 1e-15);
        assert!(c.survival_at(25.0).is_err());
    }
}
