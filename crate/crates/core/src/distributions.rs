//! Claim-size (severity) distributions.
//!
//! Every model exposes its CDF and survival function together with the two
//! integrated tails used by the survival recursion:
//!
//! ```text
//! S̄(x) = ∫₀ˣ F̄(y) dy        S̄̄(x) = ∫₀ˣ S̄(y) dy
//! ```
//!
//! Gamma and exponential models evaluate both through incomplete-gamma
//! identities; gridded (lattice) models have piecewise-polynomial tails that
//! are exact; mixtures are linear in their components.

use std::sync::{Arc, OnceLock};

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::copulas::LevyCopula;
use crate::error::{validation, Error, Result};
use crate::special::{gamma_p, gamma_p_inv, gamma_pq, gamma_q};

const WEIGHT_SUM_TOL: f64 = 1e-12;
const GRID_MASS_TOL: f64 = 1e-9;

/// A severity distribution on `[0, ∞)` with `F(0) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeverityModel {
    /// Gamma with shape `a` and scale `k` (mean `a·k`).
    Gamma {
        shape: f64,
        scale: f64,
    },
    Exponential {
        mean: f64,
    },
    Mixture {
        weights: Vec<f64>,
        components: Vec<SeverityModel>,
    },
    /// Lattice distribution; see [`GriddedSeverity`].
    Gridded(GriddedSeverity),
}

impl SeverityModel {
    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        let m = SeverityModel::Gamma { shape, scale };
        m.validate()?;
        Ok(m)
    }

    pub fn exponential(mean: f64) -> Result<Self> {
        let m = SeverityModel::Exponential { mean };
        m.validate()?;
        Ok(m)
    }

    /// Finite mixture `Σ wᵢ Fᵢ`. A single component is returned unchanged.
    pub fn mixture(weights: Vec<f64>, components: Vec<SeverityModel>) -> Result<Self> {
        let m = SeverityModel::Mixture { weights, components };
        m.validate()?;
        match m {
            SeverityModel::Mixture { mut components, .. } if components.len() == 1 => {
                Ok(components.pop().expect("one component"))
            }
            other => Ok(other),
        }
    }

    pub fn gridded(step: f64, masses: Vec<f64>) -> Result<Self> {
        Ok(SeverityModel::Gridded(GriddedSeverity::new(step, masses)?))
    }

    /// Checks parameter domains; deserialized models must pass this before use.
    pub fn validate(&self) -> Result<()> {
        match self {
            SeverityModel::Gamma { shape, scale } => {
                if !(shape.is_finite() && *shape > 0.0 && scale.is_finite() && *scale > 0.0) {
                    return validation(format!(
                        "gamma severity needs positive finite shape and scale, got shape={shape}, scale={scale}"
                    ));
                }
            }
            SeverityModel::Exponential { mean } => {
                if !(mean.is_finite() && *mean > 0.0) {
                    return validation(format!("exponential severity needs a positive mean, got {mean}"));
                }
            }
            SeverityModel::Mixture { weights, components } => {
                if components.is_empty() || weights.len() != components.len() {
                    return validation(format!(
                        "mixture needs one weight per component, got {} weights and {} components",
                        weights.len(),
                        components.len()
                    ));
                }
                if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
                    return validation(format!("mixture weights must be nonnegative, got {w}"));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > WEIGHT_SUM_TOL {
                    return validation(format!("mixture weights must sum to 1, got {total}"));
                }
                for c in components {
                    c.validate()?;
                }
            }
            SeverityModel::Gridded(_) => {}
        }
        Ok(())
    }

    /// `F(x) = P(Y ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            SeverityModel::Gamma { shape, scale } => gamma_p(*shape, x / scale),
            SeverityModel::Exponential { mean } => -(-x / mean).exp_m1(),
            SeverityModel::Mixture { weights, components } => {
                weights.iter().zip(components).map(|(w, c)| w * c.cdf(x)).sum()
            }
            SeverityModel::Gridded(g) => g.cdf(x),
        }
    }

    /// `F̄(x) = P(Y > x)`.
    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        match self {
            SeverityModel::Gamma { shape, scale } => gamma_pq(*shape, x / scale).1,
            SeverityModel::Exponential { mean } => (-x / mean).exp(),
            SeverityModel::Mixture { weights, components } => {
                weights.iter().zip(components).map(|(w, c)| w * c.survival(x)).sum()
            }
            SeverityModel::Gridded(g) => g.survival(x),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            SeverityModel::Gamma { shape, scale } => shape * scale,
            SeverityModel::Exponential { mean } => *mean,
            SeverityModel::Mixture { weights, components } => {
                weights.iter().zip(components).map(|(w, c)| w * c.mean()).sum()
            }
            SeverityModel::Gridded(g) => g.mean(),
        }
    }

    pub fn integrated_tails(&self) -> IntegratedTails<'_> {
        IntegratedTails { model: self }
    }

    fn first_tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            SeverityModel::Gamma { shape, scale } => {
                let z = x / scale;
                let q = gamma_pq(*shape, z).1;
                if z > shape + 1.0 {
                    // E[Y] minus the remaining tail, so S̄ rounds monotonically onto E[Y].
                    let rest = shape * scale * gamma_q(shape + 1.0, z) - x * q;
                    shape * scale - rest.max(0.0)
                } else {
                    x * q + shape * scale * gamma_p(shape + 1.0, z)
                }
            }
            SeverityModel::Exponential { mean } => -mean * (-x / mean).exp_m1(),
            SeverityModel::Mixture { weights, components } => {
                weights.iter().zip(components).map(|(w, c)| w * c.first_tail(x)).sum()
            }
            SeverityModel::Gridded(g) => g.first_tail(x),
        }
    }

    fn second_tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            SeverityModel::Gamma { shape, scale } => {
                // ½[x²Q(a,z) + 2x·ak·P(a+1,z) − a(a+1)k²·P(a+2,z)]
                let (a, k) = (*shape, *scale);
                let z = x / k;
                let q = gamma_pq(a, z).1;
                0.5 * (x * x * q + 2.0 * x * a * k * gamma_p(a + 1.0, z) - a * (a + 1.0) * k * k * gamma_p(a + 2.0, z))
            }
            SeverityModel::Exponential { mean } => mean * x + mean * mean * (-x / mean).exp_m1(),
            SeverityModel::Mixture { weights, components } => {
                weights.iter().zip(components).map(|(w, c)| w * c.second_tail(x)).sum()
            }
            SeverityModel::Gridded(g) => g.second_tail(x),
        }
    }

    /// Both integrated tails tabulated on the nodes `0, h, …, n·h`.
    pub fn tail_table(&self, step: f64, nodes: usize) -> TailTable {
        match self {
            SeverityModel::Mixture { weights, components } => {
                let tables: Vec<TailTable> = components.iter().map(|c| c.tail_table(step, nodes)).collect();
                let parts: Vec<(f64, &TailTable)> = weights.iter().copied().zip(tables.iter()).collect();
                TailTable::combine(&parts)
            }
            _ => {
                let xs = (0..=nodes).map(|i| i as f64 * step);
                let (first, second) = xs.map(|x| (self.first_tail(x), self.second_tail(x))).unzip();
                TailTable { step, first, second }
            }
        }
    }

    /// Moment generating function `E[e^{rY}]`; infinite outside the domain.
    pub fn mgf(&self, r: f64) -> f64 {
        match self {
            SeverityModel::Gamma { shape, scale } => {
                if r * scale >= 1.0 {
                    f64::INFINITY
                } else {
                    (1.0 - r * scale).powf(-shape)
                }
            }
            SeverityModel::Exponential { mean } => {
                if r * mean >= 1.0 {
                    f64::INFINITY
                } else {
                    1.0 / (1.0 - r * mean)
                }
            }
            SeverityModel::Mixture { weights, components } => {
                weights.iter().zip(components).filter(|(w, _)| **w > 0.0).map(|(w, c)| w * c.mgf(r)).sum()
            }
            SeverityModel::Gridded(g) => g.mgf(r),
        }
    }

    /// Right end of the interval on which the MGF is finite.
    pub fn mgf_abscissa(&self) -> f64 {
        match self {
            SeverityModel::Gamma { scale, .. } => 1.0 / scale,
            SeverityModel::Exponential { mean } => 1.0 / mean,
            SeverityModel::Mixture { weights, components } => weights
                .iter()
                .zip(components)
                .filter(|(w, _)| **w > 0.0)
                .map(|(_, c)| c.mgf_abscissa())
                .fold(f64::INFINITY, f64::min),
            SeverityModel::Gridded(_) => f64::INFINITY,
        }
    }

    /// Draws one claim size.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            SeverityModel::Gamma { shape, scale } => {
                rand_distr::Gamma::new(*shape, *scale).expect("validated gamma parameters").sample(rng)
            }
            SeverityModel::Exponential { mean } => {
                rand_distr::Exp::new(1.0 / mean).expect("validated mean").sample(rng)
            }
            SeverityModel::Mixture { weights, components } => {
                let u: f64 = rng.random();
                let idx = pick_component(weights, u).0;
                components[idx].sample(rng)
            }
            SeverityModel::Gridded(g) => g.sample(rng),
        }
    }

    /// Monotone transform of a single uniform into a claim size.
    ///
    /// For non-mixtures this is the quantile function. A mixture selects its
    /// component from `u` and rescales the remainder of `u` for that component.
    pub fn draw_from_uniform(&self, u: f64) -> f64 {
        match self {
            SeverityModel::Gamma { shape, scale } => scale * gamma_p_inv(*shape, u),
            SeverityModel::Exponential { mean } => -mean * (-u).ln_1p(),
            SeverityModel::Mixture { weights, components } => {
                let (idx, rescaled) = pick_component(weights, u);
                components[idx].draw_from_uniform(rescaled)
            }
            SeverityModel::Gridded(g) => g.quantile(u),
        }
    }
}

fn pick_component(weights: &[f64], u: f64) -> (usize, f64) {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        last = i;
        if u < acc + w {
            return (i, ((u - acc) / w).clamp(0.0, 1.0 - f64::EPSILON));
        }
        acc += w;
    }
    (last, 1.0 - f64::EPSILON)
}

/// Evaluators for `S̄` and `S̄̄` of one severity model.
#[derive(Clone, Copy, Debug)]
pub struct IntegratedTails<'a> {
    model: &'a SeverityModel,
}

impl IntegratedTails<'_> {
    /// `S̄(x) = ∫₀ˣ F̄(y) dy`.
    pub fn first(&self, x: f64) -> f64 {
        self.model.first_tail(x)
    }

    /// `S̄̄(x) = ∫₀ˣ S̄(y) dy`.
    pub fn second(&self, x: f64) -> f64 {
        self.model.second_tail(x)
    }
}

/// `S̄` and `S̄̄` sampled on an equally spaced grid starting at 0.
#[derive(Clone, Debug, PartialEq)]
pub struct TailTable {
    pub step: f64,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl TailTable {
    pub fn nodes(&self) -> usize {
        self.first.len() - 1
    }

    /// Weighted sum of tables that share a grid.
    pub fn combine(parts: &[(f64, &TailTable)]) -> TailTable {
        let (_, head) = parts[0];
        let len = head.first.len();
        let mut first = vec![0.0; len];
        let mut second = vec![0.0; len];
        for &(w, t) in parts {
            debug_assert_eq!(t.first.len(), len);
            if w == 0.0 {
                continue;
            }
            for (acc, v) in first.iter_mut().zip(&t.first) {
                *acc += w * v;
            }
            for (acc, v) in second.iter_mut().zip(&t.second) {
                *acc += w * v;
            }
        }
        TailTable { step: head.step, first, second }
    }
}

/// Distribution on the lattice `{h, 2h, …, m·h}`.
///
/// Mass at node `x_k` stands for the cell `[x_{k-1}, x_k)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "GriddedRepr", into = "GriddedRepr")]
pub struct GriddedSeverity {
    inner: Arc<GridInner>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GriddedRepr {
    step: f64,
    /// Masses at nodes `h, 2h, …`.
    masses: Vec<f64>,
}

#[derive(Debug)]
struct GridInner {
    step: f64,
    // Masses as supplied, kept so serialization round-trips exactly.
    given: Vec<f64>,
    // Node-indexed and normalized; mass[0] == 0.
    mass: Vec<f64>,
    // tail[k] = P(Y ≥ x_k), tail[m+1] = 0.
    tail: Vec<f64>,
    first: Vec<f64>,
    second: Vec<f64>,
    cumulative: Vec<f64>,
    mean: f64,
    alias: OnceLock<WeightedAliasIndex<f64>>,
}

impl PartialEq for GriddedSeverity {
    fn eq(&self, other: &Self) -> bool {
        self.inner.step == other.inner.step && self.inner.mass == other.inner.mass
    }
}

impl TryFrom<GriddedRepr> for GriddedSeverity {
    type Error = Error;
    fn try_from(r: GriddedRepr) -> Result<Self> {
        GriddedSeverity::new(r.step, r.masses)
    }
}

impl From<GriddedSeverity> for GriddedRepr {
    fn from(g: GriddedSeverity) -> Self {
        GriddedRepr { step: g.inner.step, masses: g.inner.given.clone() }
    }
}

impl GriddedSeverity {
    /// Builds a lattice distribution from masses at `h, 2h, …`; masses must sum to 1 within 1e-9.
    pub fn new(step: f64, masses: Vec<f64>) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return validation(format!("grid step must be positive, got {step}"));
        }
        if masses.is_empty() {
            return validation("gridded severity needs at least one cell");
        }
        if let Some(m) = masses.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return validation(format!("cell masses must be nonnegative, got {m}"));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > GRID_MASS_TOL {
            return validation(format!("cell masses must sum to 1, got {total}"));
        }
        let mut mass = Vec::with_capacity(masses.len() + 1);
        mass.push(0.0);
        mass.extend(masses.iter().map(|m| m / total));
        let m = mass.len() - 1;

        let mut tail = vec![0.0; m + 2];
        for k in (0..=m).rev() {
            tail[k] = tail[k + 1] + mass[k];
        }
        let mut first = vec![0.0; m + 1];
        let mut second = vec![0.0; m + 1];
        for k in 1..=m {
            first[k] = first[k - 1] + step * tail[k];
            second[k] = second[k - 1] + step * first[k - 1] + 0.5 * step * step * tail[k];
        }
        let mut cumulative = vec![0.0; m + 1];
        for k in 1..=m {
            cumulative[k] = cumulative[k - 1] + mass[k];
        }
        let mean = first[m];
        Ok(GriddedSeverity {
            inner: Arc::new(GridInner {
                step,
                given: masses,
                mass,
                tail,
                first,
                second,
                cumulative,
                mean,
                alias: OnceLock::new(),
            }),
        })
    }

    pub fn step(&self) -> f64 {
        self.inner.step
    }

    /// Number of lattice cells (largest node index).
    pub fn cells(&self) -> usize {
        self.inner.mass.len() - 1
    }

    /// Mass at node `k·h`; zero outside the support.
    pub fn mass(&self, k: usize) -> f64 {
        self.inner.mass.get(k).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.inner.mean
    }

    // Index of the cell holding x: x ∈ [x_k, x_{k+1}).
    fn cell_of(&self, x: f64) -> usize {
        let step = self.inner.step;
        let mut k = (x / step).floor() as usize;
        if ((k + 1) as f64) * step <= x {
            k += 1;
        } else if k > 0 && (k as f64) * step > x {
            k -= 1;
        }
        k
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        1.0 - self.survival(x)
    }

    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        let k = self.cell_of(x);
        self.inner.tail.get(k + 1).copied().unwrap_or(0.0)
    }

    fn first_tail(&self, x: f64) -> f64 {
        let g = &*self.inner;
        let m = g.mass.len() - 1;
        let k = self.cell_of(x);
        if k >= m {
            return g.mean;
        }
        g.first[k] + (x - k as f64 * g.step) * g.tail[k + 1]
    }

    fn second_tail(&self, x: f64) -> f64 {
        let g = &*self.inner;
        let m = g.mass.len() - 1;
        let k = self.cell_of(x);
        if k >= m {
            return g.second[m] + (x - m as f64 * g.step) * g.mean;
        }
        let d = x - k as f64 * g.step;
        g.second[k] + d * g.first[k] + 0.5 * d * d * g.tail[k + 1]
    }

    fn mgf(&self, r: f64) -> f64 {
        let g = &*self.inner;
        g.mass.iter().enumerate().filter(|(_, m)| **m > 0.0).map(|(k, m)| m * (r * k as f64 * g.step).exp()).sum()
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let g = &*self.inner;
        let idx = g.cumulative.partition_point(|&c| c <= u);
        let idx = idx.min(g.mass.len() - 1).max(1);
        idx as f64 * g.step
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let alias = self
            .inner
            .alias
            .get_or_init(|| WeightedAliasIndex::new(self.inner.mass.clone()).expect("masses sum to one"));
        alias.sample(rng) as f64 * self.inner.step
    }
}

/// Joint distribution of a pair of lattice claim sizes `(Y¹, Y²)` on cells `(i, j)`, `i, j ≥ 1`.
#[derive(Clone, Debug)]
pub struct JointSeverity {
    step: f64,
    kind: JointKind,
}

#[derive(Clone, Debug)]
enum JointKind {
    /// Row-major masses for `i ∈ 1..=n1`, `j ∈ 1..=n2`.
    Dense { n1: usize, n2: usize, masses: Vec<f64> },
    /// Cell masses generated on demand from the copula-composed tail integral
    /// `𝒞(U₁(x₁), U₂(x₂)) / λ∥`. `tail*[k] = U(x_k)`, with the last entry 0.
    Levy { tail1: Vec<f64>, tail2: Vec<f64>, copula: LevyCopula, parallel_intensity: f64 },
}

const NEGATIVE_MASS_TOL: f64 = -1e-12;

impl JointSeverity {
    pub fn dense(step: f64, n1: usize, n2: usize, masses: Vec<f64>) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return validation(format!("grid step must be positive, got {step}"));
        }
        if masses.len() != n1 * n2 || n1 == 0 || n2 == 0 {
            return validation(format!("expected {}x{} cell masses, got {}", n1, n2, masses.len()));
        }
        if masses.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return validation("joint cell masses must be nonnegative");
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > GRID_MASS_TOL {
            return validation(format!("joint cell masses must sum to 1, got {total}"));
        }
        Ok(JointSeverity { step, kind: JointKind::Dense { n1, n2, masses } })
    }

    /// Joint of the simultaneous-claim sizes implied by a Lévy copula.
    ///
    /// `tail1`, `tail2` hold the marginal tail integrals at nodes `0, h, …`;
    /// the final entry of each must be 0 so all mass beyond the cap lands in the last cell.
    pub fn from_levy_copula(
        step: f64,
        tail1: Vec<f64>,
        tail2: Vec<f64>,
        copula: LevyCopula,
        parallel_intensity: f64,
    ) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return validation(format!("grid step must be positive, got {step}"));
        }
        if tail1.len() < 2 || tail2.len() < 2 {
            return validation("tail integrals need at least two nodes");
        }
        if *tail1.last().unwrap() != 0.0 || *tail2.last().unwrap() != 0.0 {
            return validation("tail integrals must vanish at the last node");
        }
        if !(parallel_intensity > 0.0) {
            return validation("simultaneous-claim intensity must be positive");
        }
        Ok(JointSeverity { step, kind: JointKind::Levy { tail1, tail2, copula, parallel_intensity } })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of cells along each axis.
    pub fn shape(&self) -> (usize, usize) {
        match &self.kind {
            JointKind::Dense { n1, n2, .. } => (*n1, *n2),
            JointKind::Levy { tail1, tail2, .. } => (tail1.len() - 1, tail2.len() - 1),
        }
    }

    /// Visits every row `i = 1..=n1` with the masses of cells `(i, 1..=n2)`.
    pub fn for_each_row<F: FnMut(usize, &[f64]) -> Result<()>>(&self, mut visit: F) -> Result<()> {
        match &self.kind {
            JointKind::Dense { n1, n2, masses } => {
                for i in 1..=*n1 {
                    visit(i, &masses[(i - 1) * n2..i * n2])?;
                }
            }
            JointKind::Levy { tail1, tail2, copula, parallel_intensity } => {
                let powers2: Vec<f64> = tail2.iter().map(|&t| copula.power(t)).collect();
                let a0 = copula.power(tail1[0]);
                let mut prev: Vec<f64> =
                    tail2.iter().zip(&powers2).map(|(&y, &b)| copula.eval_prepared(tail1[0], a0, y, b)).collect();
                let mut cur = vec![0.0; powers2.len()];
                let n2 = powers2.len() - 1;
                let mut row = vec![0.0; n2];
                let scale = 1.0 / parallel_intensity;
                for i in 1..tail1.len() {
                    let x = tail1[i];
                    let a = copula.power(x);
                    for ((c, &y), &b) in cur.iter_mut().zip(tail2).zip(&powers2) {
                        *c = copula.eval_prepared(x, a, y, b);
                    }
                    for j in 1..=n2 {
                        let m = (prev[j - 1] - cur[j - 1] - prev[j] + cur[j]) * scale;
                        row[j - 1] = if m < 0.0 {
                            if m < NEGATIVE_MASS_TOL {
                                return Err(Error::Validation(format!(
                                    "negative joint cell mass {m} at ({i}, {j}); copula is not 2-increasing"
                                )));
                            }
                            0.0
                        } else {
                            m
                        };
                    }
                    visit(i, &row)?;
                    std::mem::swap(&mut prev, &mut cur);
                }
            }
        }
        Ok(())
    }

    /// Lattice marginals of `Y¹` and `Y²`.
    pub fn marginals(&self) -> Result<(GriddedSeverity, GriddedSeverity)> {
        match &self.kind {
            JointKind::Levy { tail1, tail2, copula, parallel_intensity } => {
                // Row sums telescope to differences of 𝒞(U₁(x), λ₂).
                let lam1 = tail1[0];
                let lam2 = tail2[0];
                let m1: Vec<f64> = tail1
                    .windows(2)
                    .map(|w| ((copula.eval(w[0], lam2) - copula.eval(w[1], lam2)) / parallel_intensity).max(0.0))
                    .collect();
                let m2: Vec<f64> = tail2
                    .windows(2)
                    .map(|w| ((copula.eval(lam1, w[0]) - copula.eval(lam1, w[1])) / parallel_intensity).max(0.0))
                    .collect();
                Ok((GriddedSeverity::new(self.step, m1)?, GriddedSeverity::new(self.step, m2)?))
            }
            JointKind::Dense { n2, .. } => {
                let (n1, n2) = (self.shape().0, *n2);
                let mut m1 = vec![0.0; n1];
                let mut m2 = vec![0.0; n2];
                self.for_each_row(|i, row| {
                    m1[i - 1] = row.iter().sum();
                    for (acc, v) in m2.iter_mut().zip(row) {
                        *acc += v;
                    }
                    Ok(())
                })?;
                Ok((GriddedSeverity::new(self.step, m1)?, GriddedSeverity::new(self.step, m2)?))
            }
        }
    }

    pub fn total_mass(&self) -> Result<f64> {
        let mut total = 0.0;
        self.for_each_row(|_, row| {
            total += row.iter().sum::<f64>();
            Ok(())
        })?;
        Ok(total)
    }
}

/// Distribution of `Y¹ + Y²` on the same lattice: cell `(i, j)` contributes its mass to node `i + j`.
pub fn sum_distribution(joint: &JointSeverity) -> Result<GriddedSeverity> {
    let (n1, n2) = joint.shape();
    let mut out = vec![0.0; n1 + n2 + 1];
    joint.for_each_row(|i, row| {
        for (acc, m) in out[i + 1..].iter_mut().zip(row) {
            *acc += m;
        }
        Ok(())
    })?;
    GriddedSeverity::new(joint.step(), out.split_off(1))
}
