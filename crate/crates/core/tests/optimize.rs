use lundberg::copulas::{LevyCopula, OrdinaryCopula};
use lundberg::demand::DemandSpec;
use lundberg::distributions::SeverityModel;
use lundberg::market::{decompose, CompoundPoissonSpec, MarketSpec};
use lundberg::optimize::{
    alpha, optimal_loading_profit_single, optimal_loading_ruin_single, optimize_joint_profit, optimize_joint_ruin,
    size_scaling_experiment, weighted_average_loading, JointProblem, Mode, PreparedProblem, SearchConfig, SingleRisk,
};
use lundberg::Error;

fn demand(beta1: f64) -> DemandSpec {
    DemandSpec::new(-0.6, beta1, 64_000.0).unwrap()
}

fn gamma_risk() -> CompoundPoissonSpec {
    CompoundPoissonSpec::new(800.0, SeverityModel::gamma(2.0, 500.0).unwrap()).unwrap()
}

fn joint(levy: Option<f64>, beta: (f64, f64), grid_step: f64) -> JointProblem {
    JointProblem {
        market: MarketSpec {
            risk1: gamma_risk(),
            risk2: gamma_risk(),
            levy: levy.map(|w| LevyCopula::clayton(w).unwrap()),
        },
        demands: (demand(beta.0), demand(beta.1)),
        acquisition: OrdinaryCopula::Independence,
        reserve: 5000.0,
        grid_step,
    }
}

#[test]
fn closed_form_matches_alpha_sweep() {
    for b in [4.0, 4.5] {
        let d = demand(b);
        let r = optimal_loading_ruin_single(&d, 800.0, 1000.0).unwrap();
        let (theta, _) = (0..=10_000)
            .map(|k| 0.05 + k as f64 * 1e-4)
            .map(|t| (t, alpha(&d, 800.0, 1000.0, t)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert!((r.loadings[0] - theta).abs() < 1e-3, "β₁ = {b}: {} vs sweep {theta}", r.loadings[0]);
        assert!((r.value - alpha(&d, 800.0, 1000.0, r.loadings[0])).abs() < 1e-15);
    }
}

#[test]
fn ruin_argmin_does_not_depend_on_reserve() {
    let d = demand(4.0);
    let single = SingleRisk { risk: gamma_risk(), demand: d };
    let thetas: Vec<f64> = (0..=60).map(|k| 0.3 + k as f64 * 0.005).collect();
    let reserves = [100.0, 5000.0, 20_000.0];
    let sweep = single.ruin_sweep(&thetas, &reserves, 10.0).unwrap();
    let argmins: Vec<usize> =
        sweep.iter().map(|row| (0..row.len()).min_by(|&i, &j| row[i].total_cmp(&row[j])).unwrap()).collect();
    assert!(argmins.iter().all(|&k| k == argmins[0]), "{argmins:?}");
    let closed = optimal_loading_ruin_single(&d, 800.0, 1000.0).unwrap().loadings[0];
    assert!((thetas[argmins[0]] - closed).abs() <= 0.005);
}

#[test]
fn profit_optimum_below_ruin_optimum() {
    for b in [4.0, 4.5] {
        let d = demand(b);
        let p = optimal_loading_profit_single(&d, 800.0, 1000.0).unwrap();
        let r = optimal_loading_ruin_single(&d, 800.0, 1000.0).unwrap();
        assert!(p.loadings[0] < r.loadings[0]);
        // Any other loading earns less.
        for t in [p.loadings[0] - 0.01, p.loadings[0] + 0.01] {
            assert!(d.expected_profit(800.0, 1000.0, t) < p.value);
        }
    }
}

#[test]
fn no_interior_optimum_when_market_is_small() {
    let d = DemandSpec::new(-0.6, 4.0, 1e9).unwrap();
    assert!(matches!(optimal_loading_ruin_single(&d, 800.0, 1000.0), Err(Error::NoInteriorOptimum(_))));
}

#[test]
fn weighted_average() {
    assert_eq!(weighted_average_loading(0.4, 0.4, 0.2, 0.9), 0.4);
    assert!((weighted_average_loading(0.3, 0.5, 1.0, 3.0) - 0.45).abs() < 1e-15);
}

#[test]
fn joint_profit_separates() {
    let prepared = PreparedProblem::new(&joint(Some(1.0), (4.0, 4.5), 10.0)).unwrap();
    let out = optimize_joint_profit(&prepared, Mode::Separate, &SearchConfig::default()).unwrap();
    let a = optimal_loading_profit_single(&demand(4.0), 800.0, 1000.0).unwrap();
    let b = optimal_loading_profit_single(&demand(4.5), 800.0, 1000.0).unwrap();
    assert_eq!(out.result.loadings, vec![a.loadings[0], b.loadings[0]]);
    // The joint objective leaves out the fixed costs.
    let fixed = 2.0 * 64_000.0;
    assert!((out.result.value - (a.value + b.value + fixed)).abs() < 1e-6);
    assert!((a.loadings[0] - 0.359).abs() < 1e-3 && (b.loadings[0] - 0.319).abs() < 1e-3);

    let common = optimize_joint_profit(&prepared, Mode::Common, &SearchConfig::default()).unwrap();
    let t = common.result.loadings[0];
    assert!(t > b.loadings[0] && t < a.loadings[0]);
    assert!(common.result.value <= out.result.value);
}

#[test]
fn symmetric_risks_get_equal_loadings() {
    let prepared = PreparedProblem::new(&joint(Some(1.0), (4.0, 4.0), 10.0)).unwrap();
    let cfg = SearchConfig { lower: 0.35, upper: 0.5, ..SearchConfig::default() };
    let out = optimize_joint_ruin(&prepared, Mode::Separate, &cfg).unwrap();
    let l = &out.result.loadings;
    assert!((l[0] - l[1]).abs() < 2e-3, "{l:?}");
    let common = optimize_joint_ruin(&prepared, Mode::Common, &cfg).unwrap();
    assert!((common.result.loadings[0] - l[0]).abs() < 2e-3);
    assert!(out.result.value <= common.result.value + 1e-9);
    assert!(matches!(optimize_joint_ruin(&prepared, Mode::Single, &cfg), Err(Error::Validation(_))));
}

#[test]
fn dependent_claims_raise_ruin() {
    let dep = PreparedProblem::new(&joint(Some(1.0), (4.0, 4.5), 10.0)).unwrap();
    let ind = PreparedProblem::new(&joint(None, (4.0, 4.5), 10.0)).unwrap();
    for t in [0.3, 0.4, 0.5] {
        assert!(dep.ruin(t, t).unwrap().unwrap() > ind.ruin(t, t).unwrap().unwrap());
    }
}

#[test]
fn size_scaling_gap_shrinks() {
    let m = joint(Some(1.0), (4.0, 4.0), 10.0).market;
    let d = decompose(&m, 10.0).unwrap();
    let shares = [(1.0, 1.0), (0.5, 0.5), (0.1, 0.1), (0.01, 0.01)];
    let rows = size_scaling_experiment(&d, &OrdinaryCopula::Independence, 0.002, 0.4, &shares, 500).unwrap();
    assert!(rows.windows(2).all(|w| w[1].gap < w[0].gap), "{rows:?}");
    for r in &rows {
        assert!(r.gap <= r.bound, "{r:?}");
        assert!(r.ruin >= r.ruin_independent);
    }
}
