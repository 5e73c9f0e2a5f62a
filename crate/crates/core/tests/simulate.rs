use lundberg::copulas::LevyCopula;
use lundberg::demand::AcquisitionShares;
use lundberg::distributions::SeverityModel;
use lundberg::market::{
    aggregate_independent, decompose, exposure_from_shares, CompoundPoissonSpec, MarketSpec, SurplusModel,
};
use lundberg::simulate::{
    company_streams, path_uniforms, simulate_ruin, simulate_ruin_levels, simulate_streams, wilson_interval,
    ClaimStream, SimConfig, Z_99,
};

fn gamma_risk(lam: f64) -> CompoundPoissonSpec {
    CompoundPoissonSpec::new(lam, SeverityModel::gamma(2.0, 500.0).unwrap()).unwrap()
}

fn cfg(paths: usize, seed: u64) -> SimConfig {
    SimConfig { paths, seed, ..SimConfig::default() }
}

#[test]
fn wilson_interval_basics() {
    let (lo, hi) = wilson_interval(0, 100, Z_99);
    assert_eq!(lo, 0.0);
    assert!(hi > 0.0 && hi < 0.1);
    let (lo, hi) = wilson_interval(50, 100, Z_99);
    assert!((0.5 - lo - (hi - 0.5)).abs() < 1e-12);
}

#[test]
fn exponential_model_inside_interval() {
    let (mu, eta, u) = (1000.0, 0.5, 1000.0);
    let m = SurplusModel::new(1.0, SeverityModel::exponential(mu).unwrap(), (1.0 + eta) * mu);
    let exact = (-eta * u / ((1.0 + eta) * mu)).exp() / (1.0 + eta);
    let c = SimConfig { horizon: Some(5000.0), ..cfg(100_000, 1) };
    let est = simulate_ruin(&m, u, &c).unwrap();
    assert!(est.contains(exact), "{est:?} vs {exact}");
    let anti = simulate_ruin(&m, u, &SimConfig { antithetic: true, ..c }).unwrap();
    assert!(anti.contains(exact), "{anti:?} vs {exact}");
}

#[test]
fn no_premium_is_certain_ruin() {
    let m = SurplusModel::new(1.0, SeverityModel::exponential(1000.0).unwrap(), 0.0);
    let est = simulate_ruin(&m, 1000.0, &SimConfig { horizon: Some(100.0), ..cfg(2000, 1) }).unwrap();
    assert!(est.estimate > 0.99, "{est:?}");
    let negative = SurplusModel::new(0.0, SeverityModel::exponential(1000.0).unwrap(), -10.0);
    let est = simulate_ruin(&negative, 50.0, &SimConfig { horizon: Some(10.0), ..cfg(100, 1) }).unwrap();
    assert_eq!(est.estimate, 1.0);
}

#[test]
fn no_claims_no_ruin() {
    let m = SurplusModel::new(0.0, SeverityModel::exponential(1000.0).unwrap(), 1.0);
    let est = simulate_ruin(&m, 0.0, &cfg(1000, 1)).unwrap();
    assert_eq!(est.estimate, 0.0);
}

#[test]
fn results_are_deterministic() {
    let m = SurplusModel::new(800.0, SeverityModel::gamma(2.0, 500.0).unwrap(), 1.2e6);
    for anti in [false, true] {
        let c = SimConfig { antithetic: anti, horizon: Some(5.0), ..cfg(500, 42) };
        let a = simulate_ruin_levels(&m, &[100.0, 5000.0], &c).unwrap();
        let b = simulate_ruin_levels(&m, &[100.0, 5000.0], &c).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn paths_use_separate_streams() {
    assert_eq!(path_uniforms(7, 3, 5), path_uniforms(7, 3, 5));
    assert_ne!(path_uniforms(7, 3, 5), path_uniforms(7, 4, 5));
    assert_ne!(path_uniforms(7, 3, 5), path_uniforms(8, 3, 5));
    // Adding paths leaves earlier paths unchanged.
    let stream = ClaimStream { intensity: 800.0, severity: SeverityModel::gamma(2.0, 500.0).unwrap() };
    let run = |paths| {
        let c = SimConfig { horizon: Some(2.0), ..cfg(paths, 9) };
        simulate_streams(std::slice::from_ref(&stream), 1.2e6, &[2000.0], &c, Some(0)).unwrap().ruin_times.unwrap()
    };
    let short = run(100);
    let long = run(200);
    assert_eq!(short[..], long[..100]);
}

#[test]
fn doubling_the_horizon_only_adds_ruin() {
    let m = SurplusModel::new(800.0, SeverityModel::gamma(2.0, 500.0).unwrap(), 8.2e5);
    let at = |t: f64| {
        let c = SimConfig { horizon: Some(t), retire_tolerance: 0.0, ..cfg(2000, 3) };
        simulate_ruin_levels(&m, &[1000.0, 5000.0], &c).unwrap().estimates
    };
    let (short, long) = (at(0.5), at(1.0));
    for (a, b) in short.iter().zip(&long) {
        assert!(a.ruined <= b.ruined, "{a:?} vs {b:?}");
    }
    assert!(long.iter().zip(&short).any(|(b, a)| b.ruined > a.ruined));
}

#[test]
fn claim_sizes_and_counts() {
    let stream = ClaimStream { intensity: 800.0, severity: SeverityModel::gamma(2.0, 500.0).unwrap() };
    let c = SimConfig { horizon: Some(10.0), ..cfg(200, 11) };
    let r = simulate_streams(std::slice::from_ref(&stream), 1.0, &[], &c, None).unwrap();
    let n = r.claim_counts[0] as f64;
    let expected = 800.0 * r.exposure_time;
    assert!((n - expected).abs() < 3.0 * expected.sqrt(), "{n} vs {expected}");
    let mean = r.claim_totals[0] / n;
    let sd = 500.0 * 2.0_f64.sqrt();
    assert!((mean - 1000.0).abs() < 3.0 * sd / n.sqrt(), "mean {mean}");
}

fn market(omega: Option<f64>) -> MarketSpec {
    MarketSpec {
        risk1: gamma_risk(800.0),
        risk2: gamma_risk(800.0),
        levy: omega.map(|w| LevyCopula::clayton(w).unwrap()),
    }
}

#[test]
fn monopoly_claim_rate() {
    let d = decompose(&market(Some(1.0)), 10.0).unwrap();
    let streams = company_streams(&d, &AcquisitionShares::monopoly()).unwrap();
    let c = SimConfig { horizon: Some(5.0), ..cfg(200, 2) };
    let r = simulate_streams(&streams, 1.0, &[], &c, None).unwrap();
    let n: u64 = r.claim_counts.iter().sum();
    let expected = 1200.0 * r.exposure_time;
    assert!((n as f64 - expected).abs() < 3.0 * expected.sqrt(), "{n} vs {expected}");
}

#[test]
fn independent_market_matches_aggregation() {
    let m = market(None);
    let d = decompose(&m, 10.0).unwrap();
    let shares = AcquisitionShares::from_margins(0.5, 0.4, 0.2).unwrap();
    let streams = company_streams(&d, &shares).unwrap();
    let thin = |s: &CompoundPoissonSpec, p: f64| CompoundPoissonSpec::new(p * s.intensity, s.severity.clone()).unwrap();
    let agg = aggregate_independent(&[thin(&m.risk1, 0.5), thin(&m.risk2, 0.4)]).unwrap();
    let total: f64 = streams.iter().map(|s| s.intensity).sum();
    assert!((total - agg.intensity).abs() < 1e-9);

    let premium = 1.3 * agg.intensity * agg.severity.mean();
    let c = cfg(20_000, 4);
    let a = simulate_streams(&streams, premium, &[3000.0], &c, None).unwrap().estimates[0];
    let single = SurplusModel::new(agg.intensity, agg.severity, premium);
    let b = simulate_ruin(&single, 3000.0, &SimConfig { seed: 99, ..c }).unwrap();
    assert!(a.lower <= b.upper && b.lower <= a.upper, "{a:?} vs {b:?}");
}

// Two-sample Kolmogorov–Smirnov statistic.
fn ks_two_sample(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j, mut d) = (0, 0, 0.0_f64);
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

#[test]
fn ruin_times_without_joint_holders_match_independent_model() {
    let d = decompose(&market(Some(1.0)), 10.0).unwrap();
    let shares = AcquisitionShares::from_margins(0.4, 0.5, 0.0).unwrap();
    let probe = exposure_from_shares(&d, &shares, 1.0, 0.0).unwrap();
    let premium = 1.2 * probe.intensity * probe.severity.mean();
    let e = exposure_from_shares(&d, &shares, premium, 0.0).unwrap();
    let c = SimConfig { horizon: Some(20.0), ..cfg(6000, 21) };
    let times = |streams: &[ClaimStream], seed: u64| -> Vec<f64> {
        simulate_streams(streams, premium, &[2000.0], &SimConfig { seed, ..c }, Some(0))
            .unwrap()
            .ruin_times
            .unwrap()
            .into_iter()
            .flatten()
            .collect()
    };
    let company = times(&company_streams(&d, &shares).unwrap(), 21);
    let hat = ClaimStream { intensity: e.intensity_hat, severity: e.severity_hat.clone() };
    let independent = times(std::slice::from_ref(&hat), 22);
    let (n, m) = (company.len() as f64, independent.len() as f64);
    assert!(n > 500.0 && m > 500.0);
    let critical = 1.63 * ((n + m) / (n * m)).sqrt();
    let stat = ks_two_sample(company, independent);
    assert!(stat < critical, "KS {stat} vs critical {critical}");
}

#[test]
fn invalid_configs() {
    let m = SurplusModel::new(1.0, SeverityModel::exponential(1.0).unwrap(), 2.0);
    assert!(simulate_ruin(&m, 1.0, &cfg(0, 1)).is_err());
    assert!(simulate_ruin(&m, -1.0, &cfg(10, 1)).is_err());
    assert!(simulate_ruin(&m, 1.0, &SimConfig { horizon: Some(0.0), ..cfg(10, 1) }).is_err());
}
