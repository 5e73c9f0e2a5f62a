use proptest::prelude::*;

use lundberg::copulas::{Family, OrdinaryCopula};
use lundberg::demand::{acquisition_shares, shares_from_take_rates, AcquisitionShares, DemandSpec};

fn preset(beta1: f64) -> DemandSpec {
    DemandSpec::new(-0.6, beta1, 64_000.0).unwrap()
}

#[test]
fn take_rate_examples() {
    assert!((preset(4.0).take_rate(0.0) - 0.645_656).abs() < 1e-6);
    let d = DemandSpec::new(0.0, 1.0, 0.0).unwrap();
    assert!((d.take_rate(1.0) - 0.268_941).abs() < 1e-6);
    assert!((d.take_rate(0.0) - 0.5).abs() < 1e-15);
    assert!(DemandSpec::new(0.0, 0.0, 0.0).is_err());
    assert!(DemandSpec::new(0.0, 1.0, -1.0).is_err());
}

#[test]
fn premium_and_profit_differ_by_expected_claims() {
    let d = preset(4.0);
    let (lam, mean, t) = (800.0, 1000.0, 0.4);
    let gap = d.premium_rate(lam, mean, t) - d.expected_profit(lam, mean, t);
    assert!((gap - lam * d.take_rate(t) * mean).abs() < 1e-6);
}

#[test]
fn monopoly_shares() {
    let m = AcquisitionShares::monopoly();
    assert_eq!((m.p10, m.p01, m.p11), (0.0, 0.0, 1.0));
    assert!(AcquisitionShares::from_margins(0.5, 0.5, 0.6).is_err());
    assert!(AcquisitionShares::from_margins(0.8, 0.8, 0.5).is_err());
}

fn copulas() -> impl Strategy<Value = OrdinaryCopula> {
    (0usize..4, 0.0f64..0.9).prop_map(|(k, tau)| {
        let family = [Family::Independence, Family::Clayton, Family::Gumbel, Family::Frank][k];
        OrdinaryCopula::from_tau(family, tau).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn take_rate_decreases(b0 in -5.0f64..5.0, b1 in 0.01f64..20.0, t in 0.0f64..2.0, dt in 1e-6f64..1.0) {
        let d = DemandSpec::new(b0, b1, 0.0).unwrap();
        let (a, b) = (d.take_rate(t), d.take_rate(t + dt));
        prop_assert!(b <= a && b > 0.0 && a < 1.0);
    }

    #[test]
    fn share_identities(c in copulas(), t1 in 0.0f64..1.5, t2 in 0.0f64..1.5) {
        let (d1, d2) = (preset(4.0), preset(4.5));
        let s = acquisition_shares(&c, &d1, &d2, t1, t2).unwrap();
        prop_assert!((s.p1 - d1.take_rate(t1)).abs() < 1e-15);
        prop_assert!((s.p10 + s.p11 - s.p1).abs() < 1e-15);
        prop_assert!((s.p01 + s.p11 - s.p2).abs() < 1e-15);
        prop_assert!(s.p10 >= 0.0 && s.p01 >= 0.0 && s.p11 >= 0.0);
        prop_assert!(s.p11 >= (s.p1 + s.p2 - 1.0).max(0.0) - 1e-15 && s.p11 <= s.p1.min(s.p2) + 1e-15);
    }

    #[test]
    fn positive_dependence_raises_joint_share(c in copulas(), p1 in 0.01f64..0.99, p2 in 0.01f64..0.99) {
        let s = shares_from_take_rates(&c, p1, p2).unwrap();
        prop_assert!(s.p11 >= p1 * p2 - 1e-12);
    }
}

#[test]
fn weak_clayton_matches_independence() {
    let c = OrdinaryCopula::new(Family::Clayton, 1e-7).unwrap();
    for (p1, p2) in [(0.1, 0.2), (0.4, 0.6), (0.9, 0.5)] {
        let s = shares_from_take_rates(&c, p1, p2).unwrap();
        assert!((s.p11 - p1 * p2).abs() < 1e-6);
    }
}

// Without upper tail dependence of the bid prices, a small company's two
// client bases become disjoint: p¹¹/p → 0. Gumbel keeps p¹¹/p near 2 − 2^{1/ω}.
#[test]
fn small_company_joint_share() {
    let ratio = |c: &OrdinaryCopula, p: f64| shares_from_take_rates(c, p, p).unwrap().p11 / p;
    let p = 1e-4;
    for family in [Family::Clayton, Family::Frank] {
        let c = OrdinaryCopula::from_tau(family, 0.5).unwrap();
        assert!(ratio(&c, p) < 0.01, "{family}: {}", ratio(&c, p));
        assert!(ratio(&c, p) < ratio(&c, 0.1));
    }
    let g = OrdinaryCopula::from_tau(Family::Gumbel, 0.5).unwrap();
    let lambda_u = 2.0 - 2.0_f64.sqrt();
    assert!((ratio(&g, p) - lambda_u).abs() < 0.01, "gumbel: {}", ratio(&g, p));
}
