mod common;

use actcluster::clustering::{
    build_transitions, forward_backward, gmm_fit, hmm_fit_and_decode, Gaussian, GmmConfig, GmmModel, HmmConfig,
    TransitionSemantics,
};
use actcluster::seed::SeedStream;
use rand::Rng;

#[test]
fn forward_backward_matches_path_enumeration() {
    for trial in 0..100u64 {
        let mut rng = SeedStream::new(21).index(trial).rng();
        let k = rng.gen_range(1..=3);
        let t = rng.gen_range(1..=8);
        let log_emit: Vec<f64> = (0..t * k).map(|_| rng.gen_range(-20.0..2.0)).collect();
        let mut trans = vec![0.0; k * k];
        for row in trans.chunks_mut(k) {
            let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
            let s: f64 = raw.iter().sum();
            row.iter_mut().zip(raw).for_each(|(d, r)| *d = r / s);
        }
        let init: Vec<f64> = vec![1.0 / k as f64; k];
        let (post, ll) = forward_backward(&log_emit, k, &trans, &init);
        let (post_o, ll_o) = common::hmm_enumerate(&log_emit, k, &trans, &init);
        assert!((ll - ll_o).abs() < 1e-10, "trial {trial}: {ll} vs {ll_o}");
        for (a, b) in post.iter().zip(&post_o) {
            assert!((a - b).abs() < 1e-10, "trial {trial}");
        }
    }
}

#[test]
fn complement_diagonal_is_one_minus_p() {
    let a = build_transitions(3, 0.95, TransitionSemantics::Complement).unwrap();
    assert!((a[0] - 0.05).abs() < 1e-12);
    assert!((a[1] - 0.475).abs() < 1e-12);
}

#[test]
fn sticky_transitions_smooth_isolated_outliers() {
    // one chain: 20 points near 0, one point near 5, 20 points near 0, then
    // 20 near 10
    let mut pts = vec![0.0; 20];
    pts.push(5.2);
    pts.extend(vec![0.1; 20]);
    pts.extend(vec![10.0; 20]);
    let mut rng = SeedStream::new(4).rng();
    pts.iter_mut().for_each(|p| *p += rng.gen_range(-0.3..0.3));
    let gmm = GmmModel {
        weights: vec![0.5, 0.5],
        components: vec![
            Gaussian::new(vec![0.0], vec![1.0]),
            Gaussian::new(vec![10.0], vec![1.0]),
        ],
        log_likelihood: 0.0,
        history: vec![],
        converged: true,
    };
    let trans = build_transitions(2, 0.999, TransitionSemantics::SelfProb).unwrap();
    let cfg = HmmConfig {
        max_epochs: 0,
        ..HmmConfig::default()
    };
    let (_, a) = hmm_fit_and_decode(
        &pts,
        1,
        &[0..pts.len()],
        2,
        &trans,
        &cfg,
        Some(&gmm),
        SeedStream::new(0),
    )
    .unwrap();
    assert_eq!(a.labels[20], 0);
    assert!(a.labels[41..].iter().all(|&l| l == 1));
}

#[test]
fn gmm_separates_far_blobs() {
    let mut rng = SeedStream::new(5).rng();
    let mut pts = Vec::new();
    for i in 0..200 {
        let c = if i < 100 { 0.0 } else { 8.0 };
        pts.push(c + rng.gen_range(-1.0..1.0));
        pts.push(-c + rng.gen_range(-1.0..1.0));
    }
    let m = gmm_fit(&pts, 2, 2, &GmmConfig::default(), SeedStream::new(6)).unwrap();
    let a = m.predict(&pts);
    assert!(a.labels[..100].iter().all(|&l| l == a.labels[0]));
    assert!(a.labels[100..].iter().all(|&l| l != a.labels[0]));
}
