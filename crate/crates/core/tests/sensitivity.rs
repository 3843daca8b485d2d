use rand::Rng;

use parisk::mechanism::synthetic_regression;
use parisk::montecarlo::{mc_case2_validation, McConfig};
use parisk::rng::stream_rng;
use parisk::sensitivity::{
    eta_estimate, normalize, read_csv, sampled_sensitivity, sensitivity_samples, DataSource,
    EmpiricalCdf, QueryKind, QuerySpec,
};

fn unit_pool(n: usize, seed: u64) -> DataSource {
    let mut rng = stream_rng(seed, 0);
    DataSource::new(
        (0..n)
            .map(|_| vec![rng.random::<f64>(), rng.random::<f64>()])
            .collect(),
    )
    .unwrap()
}

#[test]
fn uniform_quantile_within_dkw_scale() {
    let mut rng = stream_rng(10, 0);
    let cdf =
        EmpiricalCdf::from_samples((0..10_000).map(|_| rng.random::<f64>()).collect()).unwrap();
    assert!((cdf.quantile(0.9).unwrap() - 0.9).abs() < 0.02);
    assert_eq!(cdf.quantile(1.0).unwrap(), cdf.max());
}

#[test]
fn samples_are_reproducible_and_bounded() {
    let src = unit_pool(300, 1);
    let sum = QuerySpec::new(QueryKind::Sum { column: 1 }, 2).unwrap();
    let a = sensitivity_samples(&src, &sum, 20, 2000, 5).unwrap();
    let b = sensitivity_samples(&src, &sum, 20, 2000, 5).unwrap();
    assert_eq!(a, b);
    assert!(a.iter().all(|s| *s <= 1.0));
    let mean = QuerySpec::new(QueryKind::Mean { column: 0 }, 2).unwrap();
    let m = sensitivity_samples(&src, &mean, 100, 2000, 6).unwrap();
    assert!(m.iter().all(|s| *s <= 1.0 / 100.0 + 1e-12));
}

#[test]
fn ridge_sampled_sensitivity_is_monotone_in_confidence() {
    let src = synthetic_regression(2000, 3, 4).unwrap();
    let ridge = QuerySpec::new(
        QueryKind::Ridge {
            lambda: 0.01,
            target: 3,
        },
        4,
    )
    .unwrap();
    assert_eq!(ridge.dimension(), 3);
    let s = sensitivity_samples(&src, &ridge, 50, 1000, 8).unwrap();
    let cdf = EmpiricalCdf::from_samples(s).unwrap();
    let low = sampled_sensitivity(&cdf, 0.4).unwrap();
    let high = sampled_sensitivity(&cdf, 0.85).unwrap();
    assert!(0.0 < low && low <= high && high <= cdf.max());
    let mut prev = 0.0;
    for i in 1..=100 {
        let v = sampled_sensitivity(&cdf, i as f64 / 100.0).unwrap();
        assert!(v >= prev);
        prev = v;
    }
}

#[test]
fn case2_event_frequencies() {
    let src = unit_pool(400, 2);
    let sum = QuerySpec::new(QueryKind::Sum { column: 0 }, 2).unwrap();
    let cfg = McConfig::new(4000, 77);
    assert_eq!(
        mc_case2_validation(&src, &sum, 10, 1.0, &cfg)
            .unwrap()
            .estimate,
        1.0
    );

    let build = sensitivity_samples(&src, &sum, 10, 4000, 3).unwrap();
    let median = sampled_sensitivity(&EmpiricalCdf::from_samples(build).unwrap(), 0.5).unwrap();
    let fresh = mc_case2_validation(&src, &sum, 10, median, &cfg).unwrap();
    assert!((fresh.estimate - 0.5).abs() < 4.0 * fresh.stderr + 4.0 * (0.25f64 / 4000.0).sqrt());

    let count = QuerySpec::new(QueryKind::Count { predicate: None }, 2).unwrap();
    assert_eq!(
        mc_case2_validation(&src, &count, 10, 0.0, &cfg)
            .unwrap()
            .estimate,
        1.0
    );
}

#[test]
fn eta_from_samples() {
    let src = unit_pool(200, 3);
    let sum = QuerySpec::new(QueryKind::Sum { column: 0 }, 2).unwrap();
    let cdf =
        EmpiricalCdf::from_samples(sensitivity_samples(&src, &sum, 5, 500, 1).unwrap()).unwrap();
    let s = sampled_sensitivity(&cdf, 0.9).unwrap();
    assert!((eta_estimate(Some(2.0 * s), &cdf, 0.9, 0.01).unwrap() - 2.0).abs() < 1e-12);
    let default = eta_estimate(None, &cdf, 0.9, 0.01).unwrap();
    assert!((default - (1.0 + 0.01 / cdf.max())).abs() < 1e-15);
}

#[test]
fn csv_ingestion_and_output_round_trip() {
    let text = "# income survey\nage, hours, income\n30, 40, 100\n50, 20, 0\n# trailing note\n20, 10, 50\n";
    let (header, rows) = read_csv(text.as_bytes()).unwrap();
    assert_eq!(header, vec!["age", "hours", "income"]);
    let src = normalize(rows, 2).unwrap();
    let target: Vec<f64> = src.records().iter().map(|r| r[2]).collect();
    assert_eq!(target, vec![1.0, 0.0, 0.5]);
    for r in src.records() {
        assert!((r[0].hypot(r[1]) - 1.0).abs() < 1e-12);
    }
    assert!(read_csv("a,b\n1,x\n".as_bytes()).is_err());

    let cdf = EmpiricalCdf::from_samples(vec![0.5, 0.125, 0.25]).unwrap();
    let mut buf = Vec::new();
    cdf.write_samples_csv(&mut buf).unwrap();
    let (h, back) = read_csv(buf.as_slice()).unwrap();
    assert_eq!(h, vec!["sensitivity"]);
    let back: Vec<f64> = back.into_iter().map(|r| r[0]).collect();
    assert_eq!(EmpiricalCdf::from_samples(back).unwrap(), cdf);
}
