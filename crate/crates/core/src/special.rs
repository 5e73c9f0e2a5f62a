//! Special functions and scalar quadrature used by the severity models.
//!
//! The regularized incomplete gamma pair follows the classical split: a power
//! series for `x < a + 1` and a modified-Lentz continued fraction otherwise,
//! so the complement is never formed by subtraction.

const MAX_ITER: usize = 500;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural logarithm of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection keeps the Lanczos sum in its accurate range.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma function `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    gamma_pq(a, x).0
}

/// Regularized upper incomplete gamma function `Q(a, x) = 1 - P(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    gamma_pq(a, x).1
}

/// `(P(a, x), Q(a, x))` for `a > 0`; `x <= 0` maps to `(0, 1)` and `x = ∞` to `(1, 0)`.
pub fn gamma_pq(a: f64, x: f64) -> (f64, f64) {
    debug_assert!(a > 0.0, "shape must be positive");
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if x.is_infinite() {
        return (1.0, 0.0);
    }
    let log_prefactor = -x + a * x.ln() - ln_gamma(a);
    if x < a + 1.0 {
        let p = series_p(a, x) * log_prefactor.exp();
        (p, 1.0 - p)
    } else {
        let q = continued_fraction_q(a, x) * log_prefactor.exp();
        (1.0 - q, q)
    }
}

fn series_p(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum
}

fn continued_fraction_q(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Inverse of `P(a, ·)`: the `x >= 0` with `P(a, x) = p`.
///
/// Newton steps on the log-density, safeguarded by a shrinking bracket.
pub fn gamma_p_inv(a: f64, p: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    // Wilson–Hilferty starting point.
    let z = standard_normal_quantile(p);
    let t = 1.0 / (9.0 * a);
    let mut x = (a * (1.0 - t + z * t.sqrt()).powi(3)).max(1e-3 * a.min(1.0));
    let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
    let lg = ln_gamma(a);
    for _ in 0..200 {
        let (pp, qq) = gamma_pq(a, x);
        let err = if p < 0.5 { pp - p } else { (1.0 - p) - qq };
        if err > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let density = ((a - 1.0) * x.ln() - x - lg).exp();
        let mut next = if density > 0.0 { x - err / density } else { f64::NAN };
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * x.max(1e-300) };
        }
        if (next - x).abs() <= 1e-14 * x.max(1e-300) {
            return next;
        }
        x = next;
    }
    x
}

/// Acklam's rational approximation to the standard normal quantile (relative error < 1.2e-9).
pub fn standard_normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] =
        [7.784_695_709_041_462e-3, 3.224_671_290_700_398e-1, 2.445_134_137_142_996, 3.754_408_661_907_416];
    let low = 0.02425;
    if p < low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -standard_normal_quantile(1.0 - p)
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Returns `None` when the recursion depth is exhausted before the tolerance is met.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Option<f64> {
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Option<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Some(left + right + delta / 15.0);
        }
        if depth == 0 {
            return None;
        }
        let l = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
        let r = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
        Some(l + r)
    }
    if a == b {
        return Some(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(&f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Debye function `D₁(x) = (1/x) ∫₀ˣ t/(eᵗ − 1) dt`, extended evenly through `D₁(−x) = D₁(x) + x/2`.
pub fn debye1(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    if x < 0.0 {
        return debye1(-x) - x / 2.0;
    }
    let integrand = |t: f64| if t == 0.0 { 1.0 } else { t / t.exp_m1() };
    let integral = adaptive_simpson(integrand, 0.0, x, 1e-14).unwrap_or(f64::NAN);
    integral / x
}
