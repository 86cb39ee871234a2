use std::f64::consts::PI;

use muhs_core::grid::{derivative, mean};
use muhs_core::mollifier::mollify_field;
use muhs_core::operator::{apply_a, check_identity_2_2, invert_a_spectral};
use muhs_core::{make_grid, Field};
use proptest::prelude::*;

fn trig_field(n_points: usize, coeffs: &[(f64, f64)], c0: f64) -> Field {
    let grid = make_grid(n_points).unwrap();
    Field::from_fn(&grid, |x| {
        coeffs.iter().enumerate().fold(c0, |acc, (k, (a, b))| {
            let w = 2.0 * PI * (k + 1) as f64 * x;
            acc + a * w.cos() + b * w.sin()
        })
    })
    .unwrap()
}

fn coeffs() -> impl Strategy<Value = (Vec<(f64, f64)>, f64)> {
    (prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 0..12), -2.0..2.0f64)
}

proptest! {
    #[test]
    fn a_and_its_inverse_cancel((c, c0) in coeffs(), p in 5u32..8) {
        let w = trig_field(1 << p, &c, c0);
        let back = invert_a_spectral(&apply_a(&w));
        prop_assert!(back.sup_distance(&w) < 1e-11, "{:e}", back.sup_distance(&w));
    }

    #[test]
    fn inverse_preserves_mean((c, c0) in coeffs()) {
        let w = trig_field(64, &c, c0);
        prop_assert!((mean(&invert_a_spectral(&w)) - mean(&w)).abs() < 1e-13);
        prop_assert!(check_identity_2_2(&w) < 1e-10);
    }

    #[test]
    fn inverse_is_monotone_on_nonnegative_input(c in prop::collection::vec(0.0..1.0f64, 64)) {
        // g > 0, so A^{-1} maps nonnegative data to nonnegative data.
        let grid = make_grid(64).unwrap();
        let w = Field::new(&grid, c).unwrap();
        prop_assert!(invert_a_spectral(&w).min() >= -1e-12);
    }

    #[test]
    fn mollification_commutes_with_derivative((c, c0) in coeffs(), n in 3usize..16) {
        let w = trig_field(128, &c, c0);
        let a = derivative(&mollify_field(&w, n).unwrap());
        let b = mollify_field(&derivative(&w), n).unwrap();
        prop_assert!(a.sup_distance(&b) < 1e-10);
        prop_assert!((mean(&mollify_field(&w, n).unwrap()) - mean(&w)).abs() < 1e-13);
    }

    #[test]
    fn mollification_does_not_increase_sup(c in prop::collection::vec(-1.0..1.0f64, 64), n in 3usize..12) {
        let grid = make_grid(64).unwrap();
        let w = Field::new(&grid, c).unwrap();
        let m = mollify_field(&w, n).unwrap();
        prop_assert!(m.sup_norm() <= w.sup_norm() + 1e-12);
    }
}
