use super::*;
use crate::exec::Sequential;
use crate::rng::substream;
use crate::tensoralg::path_signature;

fn area(path: &PiecewiseLinearPath) -> f64 {
    let s = path_signature(path, 2);
    0.5 * (s.coeff(&[1, 2]) - s.coeff(&[2, 1]))
}

#[test]
fn config_validation() {
    assert!(SamplerConfig::new(8, 0.05, 1).validate().is_ok());
    assert!(SamplerConfig::new(1, 0.05, 1).validate().is_err());
    assert!(SamplerConfig::new(8, 0.0, 1).validate().is_err());
    let mut c = SamplerConfig::new(8, 0.05, 1);
    c.mcmc.proposal_scale = 1.0;
    assert!(c.validate().is_err());
}

#[test]
fn bridge_is_pinned_exactly() {
    let mut rng = substream(3, 0, 0);
    for m in [2, 3, 7, 64] {
        let s = sample_bridge(3, 2.5, m, &mut rng).unwrap();
        assert!(s.path.start().iter().all(|&x| x == 0.0));
        assert!(s.path.end().iter().all(|&x| x == 0.0));
        assert_eq!(s.path.times()[m], 2.5);
        let ls = loop_logsig(&s, 2).unwrap();
        assert!(ls.coeffs()[..3].iter().all(|&x| x == 0.0));
    }
    assert!(sample_bridge(2, 1.0, 1, &mut rng).is_err());
}

#[test]
fn bridge_covariance() {
    let m = 10;
    let n = 40_000;
    let mut cfg = SamplerConfig::new(m, 1.0, 11);
    cfg.mcmc.chains = 1;
    let batch = sample_batch(SamplerKind::Bridge, 1, 1, 1.0, &cfg, n, &Sequential).unwrap();
    let at = |k: usize| -> Vec<f64> { batch.samples().iter().map(|s| s.path.knot(k)[0]).collect() };
    for (k, l) in [(2, 2), (5, 5), (3, 7), (1, 9)] {
        let (s, t) = (k as f64 / m as f64, l as f64 / m as f64);
        let prods: Vec<f64> = at(k).iter().zip(at(l)).map(|(a, b)| a * b).collect();
        let est = mean_stderr(&prods);
        assert!((est.mean - s * (1.0 - t)).abs() < 4.0 * est.stderr, "{k} {l} {est:?}");
        let mean = mean_stderr(&at(k));
        assert!(mean.mean.abs() < 4.0 * mean.stderr);
    }
}

#[test]
fn residual_is_homogeneous() {
    let alg = FreeLieAlgebra::new(2, 3).unwrap();
    let ls = alg.from_coeffs(vec![0.0, 0.0, 0.04, 0.008, -0.001]).unwrap();
    assert!((residual(&alg, &ls, 3, 1.0) - 0.2).abs() < 1e-15);
    assert!((residual(&alg, &ls, 2, 1.0) - 0.2).abs() < 1e-15);
    assert_eq!(residual(&alg, &ls, 1, 1.0), 0.0);
    // scaling the loop by sqrt(T) leaves the residual unchanged
    let scaled = alg.from_coeffs(vec![0.0, 0.0, 0.16, 0.064, -0.008]).unwrap();
    assert!((residual(&alg, &scaled, 3, 4.0) - 0.2).abs() < 1e-15);
}

#[test]
fn rejection_respects_window() {
    let cfg = SamplerConfig::new(8, 0.05, 5);
    let batch = sample_batch(SamplerKind::Rejection, 2, 2, 1.0, &cfg, 200, &Sequential).unwrap();
    let mut total = 0.0;
    for s in batch.samples() {
        assert!(s.residual <= 0.05);
        assert!(s.path.end().iter().all(|&x| x == 0.0));
        let a = area(&s.path).abs();
        assert!(a <= 0.05 * 0.05 + 1e-15);
        total += a;
    }
    assert!(total / 200.0 <= 0.05);
    assert!(batch.acceptance_rate > 0.002 && batch.acceptance_rate < 0.03);
}

#[test]
fn rejection_cap() {
    let mut cfg = SamplerConfig::new(8, 1e-4, 5);
    cfg.max_proposals = 50;
    let err = sample_loop_rejection(2, 2, 1.0, &cfg, &mut substream(0, 0, 0)).unwrap_err();
    assert!(matches!(err, Error::IterationCap { proposals: 50, .. }));
}

#[test]
fn mcmc_emits_valid_loops() {
    let mut cfg = SamplerConfig::new(8, 0.05, 9);
    cfg.mcmc.chains = 2;
    cfg.mcmc.burn_in = 500;
    cfg.mcmc.adapt = 500;
    let batch = sample_batch(SamplerKind::Mcmc, 2, 2, 1.0, &cfg, 100, &Sequential).unwrap();
    assert_eq!(batch.values.len(), 100);
    assert_eq!(batch.group_sizes, vec![50, 50]);
    assert!((0.1..=0.6).contains(&batch.acceptance_rate), "{}", batch.acceptance_rate);
    for s in batch.samples() {
        assert!(s.residual <= 0.05);
        assert!(s.path.start().iter().chain(s.path.end()).all(|&x| x == 0.0));
    }
}

#[test]
fn sampling_is_deterministic() {
    let mut cfg = SamplerConfig::new(6, 0.1, 77);
    cfg.mcmc.chains = 3;
    cfg.mcmc.burn_in = 200;
    cfg.mcmc.adapt = 200;
    for kind in [SamplerKind::Rejection, SamplerKind::Mcmc] {
        let a = sample_batch(kind, 2, 2, 1.0, &cfg, 9, &Sequential).unwrap();
        let b = sample_batch(kind, 2, 2, 1.0, &cfg, 9, &Sequential).unwrap();
        assert_eq!(a.values, b.values);
    }
}

#[test]
fn bridge_sampler_needs_step_one() {
    let cfg = SamplerConfig::new(6, 0.1, 1);
    assert!(sample_batch(SamplerKind::Bridge, 2, 2, 1.0, &cfg, 3, &Sequential).is_err());
}

#[test]
fn rejection_scaling_in_time() {
    // loops on [0, 4] are twice the loops on [0, 1] in law
    let n = 4000;
    let c1 = SamplerConfig::new(6, 0.1, 21);
    let c4 = SamplerConfig::new(6, 0.1, 22);
    let a = sample_batch(SamplerKind::Rejection, 2, 2, 1.0, &c1, n, &Sequential).unwrap();
    let b = sample_batch(SamplerKind::Rejection, 2, 2, 4.0, &c4, n, &Sequential).unwrap();
    let mid = |batch: &LoopBatch, scale: f64| -> Vec<f64> {
        batch.samples().iter().map(|s| s.path.knot(3)[0] * scale).collect()
    };
    let sq = |v: Vec<f64>| -> Vec<f64> { v.iter().map(|x| x * x).collect() };
    let (m1, m4) = (mean_stderr(&mid(&a, 2.0)), mean_stderr(&mid(&b, 1.0)));
    assert!(crate::stats::within_sigma(m1.mean, m4.mean, m1.stderr, m4.stderr, 4.0));
    let (s1, s4) = (mean_stderr(&sq(mid(&a, 2.0))), mean_stderr(&sq(mid(&b, 1.0))));
    assert!(crate::stats::within_sigma(s1.mean, s4.mean, s1.stderr, s4.stderr, 4.0));
}

#[test]
fn logsig_of_square_and_level_check() {
    let sq = PiecewiseLinearPath::from_points(&[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0], &[0.0, 1.0], &[0.0, 0.0]])
        .unwrap();
    let s = LoopSample { path: sq, step: 2, residual: 1.0, weight: 1.0 };
    let ls = loop_logsig(&s, 3).unwrap();
    assert!((ls.coeffs()[2] - 1.0).abs() < 1e-15);
    assert!(loop_logsig(&s, 1).is_err());
}
