//! Shared inputs for the benchmarks.

use muhs_core::pipeline::random_trig_polynomial;
use muhs_core::{make_grid, Field};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SIZES: [usize; 4] = [64, 256, 1024, 4096];

/// Degree-20 random trigonometric polynomial sampled on `n_points` nodes.
pub fn sample_field(n_points: usize, seed: u64) -> Field {
    let grid = make_grid(n_points).expect("benchmark sizes are valid");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_trig_polynomial(&grid, 20.min(n_points / 2 - 1), &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_is_deterministic() {
        assert_eq!(sample_field(64, 3).values(), sample_field(64, 3).values());
        assert_eq!(sample_field(64, 3).len(), 64);
    }
}
