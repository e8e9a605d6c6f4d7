mod common;

use common::checks;

const TOL: f64 = 1e-4;

#[test]
fn conv1d_matches_finite_differences() {
    let e = checks::conv(20, 11);
    assert!(e < TOL, "relative error {e}");
}

#[test]
fn maxpool_matches_finite_differences() {
    let e = checks::pool(20, 12);
    assert!(e < TOL, "relative error {e}");
}

#[test]
fn batchnorm_matches_finite_differences() {
    let e = checks::batchnorm(20, 13);
    assert!(e < TOL, "relative error {e}");
}

#[test]
fn dense_matches_finite_differences() {
    let e = checks::dense(20, 14);
    assert!(e < TOL, "relative error {e}");
}

#[test]
fn relu_matches_finite_differences() {
    let e = checks::relu(20, 15);
    assert!(e < TOL, "relative error {e}");
}

#[test]
fn cross_entropy_matches_finite_differences() {
    let e = checks::cross_entropy(20, 16);
    assert!(e < TOL, "relative error {e}");
}

#[test]
fn encoder_and_head_match_finite_differences() {
    let e = checks::end_to_end(5, 20, 17);
    assert!(e < TOL, "relative error {e}");
}
