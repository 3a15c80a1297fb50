mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use nodalsl::basis::{integrate_on, StageTable};
use nodalsl::{asymptotic_c, asymptotic_s, integrate_basis, parse_expression, BasisGrid, Potential, Resolution};
use proptest::prelude::*;
use rand::SeedableRng;

fn pot(s: &str) -> Potential {
    Potential::from_expr(parse_expression(s).unwrap())
}

/// Sup error of `C`, `S` against the `q = 0` closed form on a grid of step `h`.
fn free_error(k: f64, h: f64) -> f64 {
    let grid = BasisGrid::with_step(h, &[]);
    let table = StageTable::new(&Potential::zero(), &grid).unwrap();
    let loose = Resolution { wronskian_tol: 1.0, ..Resolution::default() };
    let b = integrate_on(Arc::new(grid), &table, k, &loose).unwrap();
    let mut err = 0.0f64;
    for (i, &x) in b.grid().points().iter().enumerate() {
        err = err.max((b.c()[i] - (k * x).cos()).abs());
        err = err.max((b.s()[i] - (k * x).sin() / k).abs());
    }
    err
}

#[test]
fn halving_the_step_gains_at_least_order_four() {
    for (k, h) in [(20.0, 0.05), (40.0, 0.04), (7.0, 0.2)] {
        let (e1, e2) = (free_error(k, h), free_error(k, h / 2.0));
        assert!(e1 > 1e-13, "coarse error {e1} too small to measure");
        assert!(e1 / e2 >= 12.0, "k={k}: ratio {}", e1 / e2);
    }
}

#[test]
fn matches_asymptotics_at_high_frequency() {
    let q = pot("cos(pi*x)");
    let res = Resolution::default();
    let k = 20.0 * PI;
    let b = integrate_basis(&q, k, &[], &res).unwrap();
    for (i, &x) in b.grid().points().iter().enumerate().step_by(97) {
        assert!((b.c()[i] - asymptotic_c(&q, x, k).unwrap()).abs() < 2.0 / (k * k));
        assert!((b.s()[i] - asymptotic_s(&q, x, k).unwrap()).abs() < 2.0 / (k * k));
    }
}

#[test]
fn asymptotic_remainder_scales_like_inverse_cube() {
    let q = pot("cos(pi*x)");
    let res = Resolution::default();
    let scaled: Vec<f64> = [10.0, 20.0, 40.0, 80.0]
        .iter()
        .map(|m| {
            let k = m * PI;
            let b = integrate_basis(&q, k, &[], &res).unwrap();
            let c1 = *b.c().last().unwrap();
            k * k * (c1 - asymptotic_c(&q, 1.0, k).unwrap()).abs()
        })
        .collect();
    assert!(scaled.iter().all(|&v| v < 1.0), "{scaled:?}");
    assert!(scaled[3] < scaled[0], "{scaled:?}");
}

#[test]
fn wronskian_on_random_potentials_and_frequencies() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let res = Resolution::default();
    for _ in 0..50 {
        let text = common::random_potential(&mut rng);
        let k = rand::Rng::gen_range(&mut rng, 0.0..600.0);
        let b = integrate_basis(&pot(&text), k, &[0.4, 0.75], &res).unwrap();
        assert!(b.wronskian_drift() <= 1e-8, "{text} k={k}: {}", b.wronskian_drift());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn wronskian_is_conserved(a in -30.0..30.0f64, b in 0.0..3.0f64, c in -5.0..5.0f64, k in 0.0..400.0f64) {
        let q = pot(&format!("{a}*cos({b}*pi*x) + {c}*x^2"));
        let sol = integrate_basis(&q, k, &[1.0 / 3.0], &Resolution::default()).unwrap();
        prop_assert!(sol.wronskian_drift() <= 1e-8);
        prop_assert_eq!(sol.at(0), [1.0, 0.0, 0.0, 1.0]);
    }
}
