//! Monte Carlo estimation of ruin probabilities.
//!
//! Claims arrive on one or more independent Poisson streams. Each path tracks
//! the loss process `L_t = S_t − ct` at claim epochs; ruin at reserve `u`
//! happens once `L_t ≥ u`, so a single path serves every reserve level.
//!
//! Path `k` draws from its own ChaCha8 stream (`seed`, stream id `k`), or
//! `k / 2` under antithetic sampling with odd paths using `1 − U`, so results
//! depend only on the seed and the path index.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::demand::AcquisitionShares;
use crate::distributions::SeverityModel;
use crate::error::{validation, Result};
use crate::market::{Decomposition, SurplusModel};

/// Two-sided 99% standard normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_901;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub paths: usize,
    /// Time horizon; `None` picks `50/η` from the relative loading `η`.
    pub horizon: Option<f64>,
    pub seed: u64,
    pub antithetic: bool,
    /// Paths stop once the Lundberg bound on their remaining ruin probability falls below this.
    pub retire_tolerance: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { paths: 100_000, horizon: None, seed: 1, antithetic: false, retire_tolerance: 1e-7 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.paths < 1 {
            return validation("simulation needs at least one path");
        }
        if let Some(t) = self.horizon {
            if !(t.is_finite() && t > 0.0) {
                return validation(format!("horizon must be positive, got {t}"));
            }
        }
        if !(self.retire_tolerance >= 0.0 && self.retire_tolerance < 1.0) {
            return validation("retire_tolerance must lie in [0, 1)");
        }
        Ok(())
    }
}

/// Ruin frequency with its 99% Wilson interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuinEstimate {
    pub reserve: f64,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub ruined: u64,
    pub paths: u64,
    pub horizon: f64,
}

impl RuinEstimate {
    pub fn contains(&self, p: f64) -> bool {
        self.lower <= p && p <= self.upper
    }
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// One Poisson stream of claims.
#[derive(Clone, Debug, PartialEq)]
pub struct ClaimStream {
    pub intensity: f64,
    pub severity: SeverityModel,
}

/// Estimates plus per-stream bookkeeping for distributional checks.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationReport {
    pub estimates: Vec<RuinEstimate>,
    pub claim_counts: Vec<u64>,
    pub claim_totals: Vec<f64>,
    /// Total simulated time over all paths.
    pub exposure_time: f64,
    /// Ruin time per path for the recorded reserve, `None` if the path survived.
    pub ruin_times: Option<Vec<Option<f64>>>,
}

/// Adjustment coefficient `R > 0` solving `Σλₖ(Mₖ(R) − 1) = cR`, if it exists.
pub fn lundberg_coefficient(streams: &[ClaimStream], premium: f64) -> Option<f64> {
    let drift: f64 = premium - streams.iter().map(|s| s.intensity * s.severity.mean()).sum::<f64>();
    if !(drift > 0.0) {
        return None;
    }
    let active: Vec<&ClaimStream> = streams.iter().filter(|s| s.intensity > 0.0).collect();
    if active.is_empty() {
        return None;
    }
    let h =
        |r: f64| -> f64 { active.iter().map(|s| s.intensity * (s.severity.mgf(r) - 1.0)).sum::<f64>() - premium * r };
    let abscissa = active.iter().map(|s| s.severity.mgf_abscissa()).fold(f64::INFINITY, f64::min);
    let mut hi = if abscissa.is_finite() {
        abscissa * (1.0 - 1e-12)
    } else {
        1.0 / active.iter().map(|s| s.severity.mean()).fold(0.0, f64::max)
    };
    let mut guard = 0;
    while h(hi) <= 0.0 {
        if abscissa.is_finite() || guard > 200 {
            return None;
        }
        hi *= 2.0;
        guard += 1;
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // The root from below keeps the bound conservative.
    (lo > 0.0).then_some(lo)
}

fn default_horizon(streams: &[ClaimStream], premium: f64) -> f64 {
    let pure: f64 = streams.iter().map(|s| s.intensity * s.severity.mean()).sum();
    let rate: f64 = streams.iter().map(|s| s.intensity).sum();
    let eta = premium / pure - 1.0;
    if eta > 0.0 && eta.is_finite() {
        50.0 / eta
    } else {
        1000.0 / rate
    }
}

struct Draws<'a> {
    rng: &'a mut ChaCha8Rng,
    flip: bool,
}

impl Draws<'_> {
    // Uniform on (0, 1), symmetric so 1 − u is exact.
    fn uniform(&mut self) -> f64 {
        let u = ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
        if self.flip {
            1.0 - u
        } else {
            u
        }
    }

    fn interarrival(&mut self, rate: f64) -> f64 {
        -self.uniform().ln() / rate
    }

    fn severity(&mut self, model: &SeverityModel, antithetic: bool) -> f64 {
        if antithetic {
            let u = self.uniform();
            model.draw_from_uniform(u)
        } else {
            model.sample(&mut *self.rng)
        }
    }
}

/// Simulates the surplus `u + ct − Σ claims` driven by independent claim streams.
///
/// With no reserves the paths run to the horizon and only the bookkeeping is filled.
pub fn simulate_streams(
    streams: &[ClaimStream],
    premium: f64,
    reserves: &[f64],
    cfg: &SimConfig,
    record_times_for: Option<usize>,
) -> Result<SimulationReport> {
    cfg.validate()?;
    for s in streams {
        if !(s.intensity.is_finite() && s.intensity >= 0.0) {
            return validation(format!("claim intensity must be nonnegative, got {}", s.intensity));
        }
        s.severity.validate()?;
    }
    if let Some(u) = reserves.iter().find(|u| !(u.is_finite() && **u >= 0.0)) {
        return validation(format!("reserves must be nonnegative, got {u}"));
    }
    if record_times_for.is_some_and(|i| i >= reserves.len()) {
        return validation("recorded reserve index out of range");
    }
    let total_rate: f64 = streams.iter().map(|s| s.intensity).sum();
    let horizon = match cfg.horizon {
        Some(t) => t,
        None if total_rate > 0.0 => default_horizon(streams, premium),
        None => 1.0,
    };
    let paths = cfg.paths as u64;
    let mut order: Vec<usize> = (0..reserves.len()).collect();
    order.sort_by(|&a, &b| reserves[a].total_cmp(&reserves[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| reserves[i]).collect();

    let mut ruined = vec![0u64; reserves.len()];
    let mut counts = vec![0u64; streams.len()];
    let mut totals = vec![0.0; streams.len()];
    let mut exposure = 0.0;
    let mut times = record_times_for.map(|_| Vec::with_capacity(cfg.paths));
    let recorded = record_times_for.map(|i| reserves[i]);

    if total_rate == 0.0 {
        // The surplus is deterministic: u + ct reaches 0 at u/(−c) when c < 0.
        let hits = |u: f64| premium < 0.0 && u <= -premium * horizon;
        for (r, &u) in ruined.iter_mut().zip(reserves) {
            if hits(u) {
                *r = paths;
            }
        }
        if let Some(t) = times.as_mut() {
            let time = recorded.filter(|&u| hits(u)).map(|u| u / -premium);
            t.resize(cfg.paths, time);
        }
        return Ok(report(reserves, &ruined, paths, horizon, counts, totals, horizon * paths as f64, times));
    }

    let retire_gap = if reserves.is_empty() || cfg.retire_tolerance == 0.0 {
        f64::INFINITY
    } else {
        lundberg_coefficient(streams, premium).map_or(f64::INFINITY, |r| -cfg.retire_tolerance.ln() / r)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut next = vec![0.0; streams.len()];
    for path in 0..paths {
        let (stream_id, flip) = if cfg.antithetic { (path / 2, path % 2 == 1) } else { (path, false) };
        rng.set_stream(stream_id);
        rng.set_word_pos(0);
        let mut d = Draws { rng: &mut rng, flip };
        for (n, s) in next.iter_mut().zip(streams) {
            *n = if s.intensity > 0.0 { d.interarrival(s.intensity) } else { f64::INFINITY };
        }
        let mut t = 0.0;
        let mut loss = 0.0_f64;
        let mut first_alive = 0;
        let mut ruin_time = None;
        loop {
            let (k, &tn) = next.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("at least one stream");
            if tn > horizon {
                if premium < 0.0 {
                    let end = loss - premium * (horizon - t);
                    while first_alive < sorted.len() && end >= sorted[first_alive] {
                        first_alive += 1;
                    }
                    if ruin_time.is_none() {
                        if let Some(u) = recorded {
                            if end >= u {
                                ruin_time = Some(t + (u - loss) / -premium);
                            }
                        }
                    }
                }
                t = horizon;
                break;
            }
            let before = loss - premium * (tn - t);
            if premium < 0.0 && ruin_time.is_none() {
                if let Some(u) = recorded {
                    if before >= u {
                        ruin_time = Some(t + (u - loss) / -premium);
                    }
                }
            }
            let y = d.severity(&streams[k].severity, cfg.antithetic);
            counts[k] += 1;
            totals[k] += y;
            loss = before + y;
            t = tn;
            if ruin_time.is_none() {
                if let Some(u) = recorded {
                    if loss >= u {
                        ruin_time = Some(t);
                    }
                }
            }
            while first_alive < sorted.len() && loss.max(before) >= sorted[first_alive] {
                first_alive += 1;
            }
            next[k] = t + d.interarrival(streams[k].intensity);
            if reserves.is_empty() {
                continue;
            }
            if first_alive == sorted.len() || sorted[first_alive] - loss > retire_gap {
                break;
            }
        }
        exposure += t;
        for &i in &order[..first_alive] {
            ruined[i] += 1;
        }
        if let Some(v) = times.as_mut() {
            v.push(ruin_time);
        }
    }
    Ok(report(reserves, &ruined, paths, horizon, counts, totals, exposure, times))
}

#[allow(clippy::too_many_arguments)]
fn report(
    reserves: &[f64],
    ruined: &[u64],
    paths: u64,
    horizon: f64,
    claim_counts: Vec<u64>,
    claim_totals: Vec<f64>,
    exposure_time: f64,
    ruin_times: Option<Vec<Option<f64>>>,
) -> SimulationReport {
    let estimates = reserves
        .iter()
        .zip(ruined)
        .map(|(&u, &k)| {
            let (lower, upper) = wilson_interval(k, paths, Z_99);
            RuinEstimate { reserve: u, estimate: k as f64 / paths as f64, lower, upper, ruined: k, paths, horizon }
        })
        .collect();
    SimulationReport { estimates, claim_counts, claim_totals, exposure_time, ruin_times }
}

/// Ruin estimate for one surplus process at one reserve.
pub fn simulate_ruin(model: &SurplusModel, reserve: f64, cfg: &SimConfig) -> Result<RuinEstimate> {
    let report = simulate_ruin_levels(model, &[reserve], cfg)?;
    Ok(report.estimates[0])
}

/// Ruin estimates at several reserves from one set of paths.
pub fn simulate_ruin_levels(model: &SurplusModel, reserves: &[f64], cfg: &SimConfig) -> Result<SimulationReport> {
    let stream = ClaimStream { intensity: model.intensity, severity: model.severity.clone() };
    simulate_streams(std::slice::from_ref(&stream), model.premium, reserves, cfg, None)
}

/// The company's three claim streams: risk 1 only, risk 2 only, and simultaneous claims.
///
/// Single-risk streams mix the exclusive component with the matching marginal
/// of simultaneous claims from clients holding only that policy; the
/// simultaneous stream pays `Y¹∥ + Y²∥`, drawn from its lattice distribution.
pub fn company_streams(decomposition: &Decomposition, shares: &AcquisitionShares) -> Result<Vec<ClaimStream>> {
    let d = decomposition;
    let s = shares;
    let single = |lam_perp: f64, perp: &Option<SeverityModel>, p: f64, p_only: f64, par: &Option<SeverityModel>| {
        let parts: Vec<(f64, SeverityModel)> = [(p * lam_perp, perp), (p_only * d.lambda_par, par)]
            .into_iter()
            .filter_map(|(w, m)| m.as_ref().filter(|_| w > 0.0).map(|m| (w, m.clone())))
            .collect();
        let rate: f64 = parts.iter().map(|(w, _)| w).sum();
        if parts.is_empty() {
            return Ok(None);
        }
        let (w, m): (Vec<f64>, Vec<SeverityModel>) = parts.into_iter().map(|(w, m)| (w / rate, m)).unzip();
        let sum: f64 = w.iter().sum();
        let w = w.into_iter().map(|x| x / sum).collect();
        Ok::<_, crate::Error>(Some(ClaimStream { intensity: rate, severity: SeverityModel::mixture(w, m)? }))
    };
    let mut out = Vec::with_capacity(3);
    let placeholder = || ClaimStream { intensity: 0.0, severity: d.marginal1.clone() };
    out.push(single(d.lambda1_perp, &d.sev1_perp, s.p1, s.p10, &d.sev1_par)?.unwrap_or_else(placeholder));
    out.push(single(d.lambda2_perp, &d.sev2_perp, s.p2, s.p01, &d.sev2_par)?.unwrap_or_else(placeholder));
    match &d.sum_par {
        Some(sum) if s.p11 * d.lambda_par > 0.0 => {
            out.push(ClaimStream { intensity: s.p11 * d.lambda_par, severity: sum.clone() })
        }
        _ => out.push(placeholder()),
    }
    Ok(out)
}

/// Ruin estimates for the company facing three independent claim streams.
pub fn simulate_bivariate_market(
    decomposition: &Decomposition,
    shares: &AcquisitionShares,
    premium: f64,
    reserves: &[f64],
    cfg: &SimConfig,
) -> Result<SimulationReport> {
    let streams = company_streams(decomposition, shares)?;
    simulate_streams(&streams, premium, reserves, cfg, None)
}

/// Draws `n` claim sizes; used to check sampled means against the model.
pub fn sample_severities(model: &SeverityModel, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| model.sample(&mut rng)).collect()
}

/// Uniform draws from the path generator for path `index`; exposed for tests of stream splitting.
pub fn path_uniforms(seed: u64, index: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    (0..n).map(|_| rng.random::<f64>()).collect()
}
