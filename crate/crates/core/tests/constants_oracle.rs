//! Constants checked against closed forms computed independently of the
//! library's quadrature.

use std::f64::consts::PI;

use approx::assert_relative_eq;
use proptest::prelude::*;
use sweepout_core::constants::*;

// cosh(x) - 1 without cancellation
fn cosh_m1(x: f64) -> f64 {
    2.0 * (0.5 * x).sinh().powi(2)
}

fn vol2(r: f64) -> f64 {
    2.0 * PI * cosh_m1(r)
}

fn vol3(r: f64) -> f64 {
    PI * ((2.0 * r).sinh() - 2.0 * r)
}

// Two-dimensional covering oracle: the ratio is increasing in t, so the
// maximum over t <= r sits at t = r.
fn covering2(r: f64) -> u64 {
    1 + (cosh_m1(4.5 * r) / cosh_m1(0.5 * r)).floor() as u64
}

#[test]
fn volumes_match_closed_forms() {
    assert_eq!(hyperbolic_ball_volume(0.0, 3).unwrap(), 0.0);
    assert_relative_eq!(hyperbolic_ball_volume(1.0, 2).unwrap(), 3.412_276_265_284_902, max_relative = 1e-12);
    assert_relative_eq!(hyperbolic_ball_volume(1.0, 3).unwrap(), 5.110_932_705_708_289, max_relative = 1e-12);
    for r in [0.1, 1.0, 5.0, 9.9] {
        assert_relative_eq!(hyperbolic_ball_volume(r, 2).unwrap(), vol2(r), max_relative = 1e-10);
        assert_relative_eq!(hyperbolic_ball_volume(r, 3).unwrap(), vol3(r), max_relative = 1e-10);
    }
}

#[test]
fn small_balls_are_euclidean() {
    let r = 1e-4;
    assert_relative_eq!(hyperbolic_ball_volume(r, 2).unwrap() / (r * r), PI, max_relative = 1e-6);
    assert_relative_eq!(hyperbolic_ball_volume(r, 3).unwrap() / r.powi(3), 4.0 * PI / 3.0, max_relative = 1e-6);
}

#[test]
fn covering_constants() {
    assert_eq!(covering_constant(1.0, 2).unwrap(), 345);
    assert_eq!(covering_constant(0.5, 2).unwrap(), 121);
    assert_eq!(covering_constant(0.1, 2).unwrap(), 83);
    assert_eq!(covering_constant(0.025, 2).unwrap(), 82);
    assert_eq!(covering_constant(1e-3, 2).unwrap(), 82);
    for r in [0.02, 0.05, 0.2, 2.0] {
        assert_eq!(covering_constant(r, 2).unwrap(), covering2(r), "r = {r}");
    }
    let e = covering_evaluation(1.0, 2).unwrap();
    assert!(e.monotone && !e.near_integer);
    assert_relative_eq!(e.max_ratio, 344.868_068_792_709, max_relative = 1e-10);
    assert_eq!(covering_constant(1.0, 3).unwrap(), 23074);
}

#[test]
fn c0_values() {
    assert_relative_eq!(c0_constant(2).unwrap(), 691.919_000_828_325_5, max_relative = 1e-10);
    assert_relative_eq!(c0_constant(3).unwrap(), 762_095.644_006_573_7, max_relative = 1e-10);
    assert!(c0_evaluation(2).unwrap().1);
    for n in [2, 3, 4] {
        assert!(c0_constant(n).unwrap() >= hyperbolic_ball_volume(1.0, n).unwrap());
    }
}

#[test]
fn lambda_tilde_values() {
    assert_relative_eq!(lambda_tilde(0.5, 2).unwrap(), 2f64.sqrt() + 1.0, max_relative = 1e-12);
    assert_relative_eq!(lambda_tilde(0.25, 2).unwrap(), 3f64.sqrt() + 1.0, max_relative = 1e-12);
    assert_relative_eq!(lambda_tilde(1.0 / 2500.0, 2).unwrap(), 50.505_101_530_510_18, max_relative = 1e-10);
}

#[test]
fn paper_bundle_n2() {
    let b = ConstantBundle::paper(2, 1.0, 1.0).unwrap();
    assert_relative_eq!(b.k1, 103.010_203_061_020_36, max_relative = 1e-10);
    assert_relative_eq!(b.c2, 2603.010_203_061_020_4, max_relative = 1e-10);
    assert_relative_eq!(b.c4, 145_614_353.724_321_1, max_relative = 1e-9);
    assert_relative_eq!(b.c3, 451_878_721_546_759.94, max_relative = 1e-9);
    assert_relative_eq!(b.c1(1.0).unwrap(), 996_938.221_143_089_2, max_relative = 1e-9);
    assert!(b.chain_certificates().unwrap().iter().all(|c| c.pass));

    let s = schedule_parameters(1.0, 10_000, &b).unwrap();
    assert_eq!(s.alpha_k, 1e-4);
    assert_relative_eq!(s.r_k, 3.618_160_556_354_626e-6, max_relative = 1e-9);
    assert_eq!(s.k_bar, 1);
}

#[test]
fn paper_bundle_n3() {
    let b = ConstantBundle::paper(3, 1.0, 1.0).unwrap();
    assert_relative_eq!(b.k1, 5069.567_658_875_418, max_relative = 1e-10);
    assert_relative_eq!(b.c3, 3.863_060_192_141_06e25, max_relative = 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lambda_tilde_endpoint_minimum(lambda in 1e-4f64..=0.5, t in 0.0f64..=1.0, n in 2usize..5) {
        let lt = lambda_tilde(lambda, n).unwrap();
        let a = (n as f64 - 1.0) / n as f64;
        let s = lambda + t * (1.0 - 2.0 * lambda);
        let g = |x: f64| x.powf(a) + (1.0 - x).powf(a) - 1.0;
        prop_assert!(lt * g(s) >= 1.0 - 1e-9);
    }

    #[test]
    fn volume_increases(r in 0.0f64..8.0, dr in 1e-3f64..1.0) {
        prop_assert!(hyperbolic_ball_volume(r + dr, 2).unwrap() > hyperbolic_ball_volume(r, 2).unwrap());
    }
}
