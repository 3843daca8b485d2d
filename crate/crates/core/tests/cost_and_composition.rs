use parisk::composition::{advanced_composition, compare, par_composition, CompositionLedger};
use parisk::cost::{
    budget, dp_budget, dp_cost, epsilon_bounds, epsilon_min, epsilon_min_stationary_k1,
    mixture_cost, par_cost, CostModelParams,
};
use parisk::Error;

fn example() -> CostModelParams {
    CostModelParams::new(5500.0, 0.0, 1.0, 100).unwrap()
}

#[test]
fn par_cost_is_convex_on_a_grid() {
    let p = example();
    for k in [1, 3] {
        let eps0 = 0.8;
        let h = eps0 / 200.0;
        let vals: Vec<f64> = (1..=200)
            .map(|i| par_cost(i as f64 * h, eps0, &p, k).unwrap())
            .collect();
        for w in vals.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-9, "k={k}");
        }
    }
}

#[test]
fn dp_cost_shape() {
    let p = CostModelParams::new(1000.0, 25.0, 0.7, 10).unwrap();
    let mut prev = p.e_min;
    for i in 1..=500 {
        let v = dp_cost(i as f64 * 0.02, &p).unwrap();
        assert!(v >= prev && v <= p.e_min + p.e);
        prev = v;
    }
    assert!((dp_cost(1e-4, &p).unwrap() - p.e_min).abs() < 1e-9);
    assert!((dp_cost(1e9, &p).unwrap() - p.e_min - p.e).abs() < 1e-5);
}

#[test]
fn optimum_matches_stationarity_condition() {
    let p = example();
    for eps0 in [0.1, 0.5, 1.0] {
        let opt = epsilon_min(eps0, &p, 1).unwrap();
        assert!((opt.eps_min - epsilon_min_stationary_k1(eps0).unwrap()).abs() <= 1e-4);
        assert!(budget(opt.eps_min, eps0, &p, 1).unwrap() <= dp_budget(eps0, &p).unwrap());
    }
}

#[test]
fn optimum_for_other_dimensions_and_floors() {
    let p = CostModelParams::new(5500.0, 100.0, 1.5, 1).unwrap();
    let opt = epsilon_min(0.7, &p, 3).unwrap();
    let h = 1e-3;
    let at = |e: f64| par_cost(e, 0.7, &p, 3).unwrap();
    if opt.eps_min > h && opt.eps_min < 0.7 - h {
        assert!(at(opt.eps_min) <= at(opt.eps_min - h) + 1e-9);
        assert!(at(opt.eps_min) <= at(opt.eps_min + h) + 1e-9);
    }
    let scan = (1..=700)
        .map(|i| at((i as f64 * 1e-3).min(0.7)))
        .fold(f64::INFINITY, f64::min);
    assert!(opt.cost <= scan + 1e-6);
}

#[test]
fn feasible_interval_by_forward_evaluation() {
    let p = example();
    // 60000 total at gamma 0.61: the budget binds below the utility floor
    match epsilon_bounds(2.0, 60000.0, 0.61, 0.5, &p) {
        Err(Error::Infeasible { lower, upper }) => {
            assert_eq!(lower, 0.5);
            assert!((mixture_cost(upper, 0.5, 0.61, &p).unwrap() - 600.0).abs() < 1e-6);
        }
        other => panic!("expected an infeasible interval, got {other:?}"),
    }
    let b = epsilon_bounds(2.0, 90000.0, 0.61, 0.5, &p).unwrap();
    let upper = b.upper.unwrap();
    assert!((mixture_cost(upper, 0.5, 0.61, &p).unwrap() - 900.0).abs() < 1e-6);
    assert!(mixture_cost(upper * 0.99, 0.5, 0.61, &p).unwrap() < 900.0);
}

#[test]
fn composition_monotonicity() {
    let mut prev = 0.0;
    for n in 1..200 {
        let v = par_composition(0.4, 0.2, 0.7, n, 1e-6).unwrap();
        assert!(v > prev);
        prev = v;
    }
    let mut prev = f64::INFINITY;
    for d in [1e-9, 1e-7, 1e-5, 1e-3, 1e-1] {
        let v = par_composition(0.4, 0.2, 0.7, 30, d).unwrap();
        assert!(v < prev);
        prev = v;
    }
}

#[test]
fn heterogeneous_ledger_is_bounded_by_its_worst_entry() {
    let mut mixed = CompositionLedger::new(1e-5).unwrap();
    let mut worst = CompositionLedger::new(1e-5).unwrap();
    for i in 0..20 {
        let eps0 = 0.1 + 0.02 * (i % 5) as f64;
        mixed.push(eps0, 0.5 * eps0, 0.6).unwrap();
        worst.push(0.18, 0.09, 0.6).unwrap();
    }
    assert!(mixed.compose().unwrap() <= worst.compose().unwrap());
    assert_eq!(mixed.len(), 20);
}

#[test]
fn comparison_crossover_against_basic() {
    let rows = compare(0.1, 1e-5, 2000, 0.08, 0.80).unwrap();
    let first = rows
        .iter()
        .find(|r| r.par < r.basic)
        .expect("a crossover exists");
    assert!(first.n > 1);
    assert!(rows.iter().all(|r| r.par <= r.advanced));
    assert_eq!(
        rows[9].advanced,
        advanced_composition(0.1, 10, 1e-5).unwrap()
    );
}
