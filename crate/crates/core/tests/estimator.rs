mod common;

use fdrthresh::{
    fdr_threshold_estimate, fdr_threshold_estimate_with, fixed_threshold_estimate,
    sample_mean_estimate, soft, universal_level, FdrConfig, Theory, ThresholdFamily,
};
use rand::Rng;

fn families() -> [ThresholdFamily; 3] {
    [
        ThresholdFamily::Soft,
        ThresholdFamily::firm(1.5).unwrap(),
        ThresholdFamily::interpolated(0.4, 1.8).unwrap(),
    ]
}

#[test]
fn four_point_composition() {
    let x = [3.0, -1.7, 1.5, 0.2];
    let config = FdrConfig::with_levels(0.2, 0.1, 0.3, 0.05).unwrap();
    let r = fdr_threshold_estimate(&x, ThresholdFamily::Soft, &config).unwrap();
    assert!((r.lambda_used - 1.4395314709).abs() < 1e-9);
    for (e, v) in r.estimate.iter().zip(x) {
        assert_eq!(*e, soft(v, r.lambda_used).unwrap());
    }
    let trace = r.selector_trace.as_ref().unwrap();
    assert_eq!(trace.exceed_counts, vec![1, 2, 3, 3]);
}

#[test]
fn dead_zone_and_shrinkage() {
    let mut rng = common::rng(71);
    let config = FdrConfig::default();
    for _ in 0..400 {
        let n = rng.random_range(1..=150);
        let theta = common::random_theta(&mut rng, n, 0.7, 7.0);
        let x: Vec<f64> = theta.iter().map(|t| t + common::normal(&mut rng)).collect();
        for family in families() {
            let r = fdr_threshold_estimate(&x, family, &config).unwrap();
            assert_eq!(r.estimate.len(), n);
            for (e, v) in r.estimate.iter().zip(&x) {
                assert!(e.abs() <= v.abs());
                assert!(e * v >= 0.0);
                if v.abs() <= r.lambda_used {
                    assert_eq!(*e, 0.0);
                }
            }
            if r.lambda_used.is_infinite() {
                assert!(r.estimate.iter().all(|e| *e == 0.0));
            }
        }
    }
}

#[test]
fn zero_input_and_empty_input() {
    let r =
        fdr_threshold_estimate(&[0.0; 7], ThresholdFamily::Soft, &FdrConfig::default()).unwrap();
    assert_eq!(r.lambda_used, f64::INFINITY);
    assert_eq!(r.estimate, vec![0.0; 7]);
    assert_eq!(r.selector_trace.unwrap().rejections, 0);
    assert!(fdr_threshold_estimate(&[], ThresholdFamily::Soft, &FdrConfig::default()).is_err());
}

#[test]
fn hard_rule_needs_opt_in() {
    let x = [4.0, 0.1, -3.5];
    let c = FdrConfig::default();
    assert!(fdr_threshold_estimate(&x, ThresholdFamily::Hard, &c).is_err());
    let r =
        fdr_threshold_estimate_with(&x, ThresholdFamily::Hard, &c, Theory::AllowNonSmooth).unwrap();
    for (e, v) in r.estimate.iter().zip(x) {
        assert!(*e == 0.0 || *e == v);
    }
}

#[test]
fn fixed_and_universal_levels() {
    let x = [2.0, -0.5, 1.0, 7.0];
    assert_eq!(
        fixed_threshold_estimate(&x, ThresholdFamily::Soft, 0.0)
            .unwrap()
            .estimate,
        x.to_vec()
    );
    assert_eq!(
        fixed_threshold_estimate(&x, ThresholdFamily::Soft, f64::INFINITY)
            .unwrap()
            .estimate,
        vec![0.0; 4]
    );
    let u = universal_level(4);
    let r = fixed_threshold_estimate(&x, ThresholdFamily::Soft, u).unwrap();
    assert_eq!(r.lambda_used, u);
    assert!(r.selector_trace.is_none());
    assert_eq!(r.estimate, vec![2.0 - u, 0.0, 0.0, 7.0 - u]);
    assert!((universal_level(1000) - (2.0 * 1000f64.ln()).sqrt()).abs() < 1e-15);
}

#[test]
fn sample_mean() {
    assert_eq!(
        sample_mean_estimate(&[1.0, 3.0]).unwrap().estimate,
        vec![2.0, 2.0]
    );
    assert_eq!(
        sample_mean_estimate(&[-1.5; 4]).unwrap().estimate,
        vec![-1.5; 4]
    );
    let r = sample_mean_estimate(&[0.0, 1.0]).unwrap();
    assert!(r.lambda_used.is_nan());
    assert!(r.family.is_none());
    let json = serde_json::to_value(&r).unwrap();
    assert_eq!(json["lambda_used"], "nan");
}

#[test]
fn level_monotone_in_nominal_rate() {
    let mut rng = common::rng(72);
    for _ in 0..300 {
        let n = rng.random_range(5..=100);
        let theta = common::random_theta(&mut rng, n, 0.5, 6.0);
        let x: Vec<f64> = theta.iter().map(|t| t + common::normal(&mut rng)).collect();
        let strict = FdrConfig::with_levels(0.05, 0.05, 0.1, 0.02).unwrap();
        let loose = FdrConfig::with_levels(0.4, 0.05, 0.6, 0.02).unwrap();
        let a = fdr_threshold_estimate(&x, ThresholdFamily::Soft, &strict)
            .unwrap()
            .lambda_used;
        let b = fdr_threshold_estimate(&x, ThresholdFamily::Soft, &loose)
            .unwrap()
            .lambda_used;
        assert!(b <= a);
    }
}
