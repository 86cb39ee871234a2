//! Friedrichs mollifiers `phi_n(x) = n phi(n x) / int phi` built from the bump
//! `phi(x) = exp(1/(x^2 - 1))`, and their periodic action on fields and on
//! finite atomic measures.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, PeriodicGrid};

/// Smallest admissible index: the support `(-1/n, 1/n)` must fit in one period
/// without overlapping itself.
pub const MIN_INDEX: usize = 3;

/// Unnormalized bump, `C^inf`, even, supported in `(-1, 1)`.
pub fn bump(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (1.0 / (x * x - 1.0)).exp()
    } else {
        0.0
    }
}

/// `(int_R phi)^{-1}`, computed once by double-exponential quadrature.
pub fn normalization_constant() -> f64 {
    static CONSTANT: OnceLock<f64> = OnceLock::new();
    *CONSTANT.get_or_init(|| {
        let out = quadrature::integrate(bump, -1.0, 1.0, 1e-15);
        1.0 / out.integral
    })
}

/// Continuum kernel `phi_n(x)` on the real line.
pub fn kernel_value(n: usize, x: f64) -> f64 {
    let n = n as f64;
    normalization_constant() * n * bump(n * x)
}

/// Periodization of [`kernel_value`]; exact for `n >= 3` since the support
/// then meets at most one of the translates `x` and `x - 1`.
pub fn periodic_kernel_value(n: usize, x: f64) -> f64 {
    let x = x.rem_euclid(1.0);
    kernel_value(n, x) + kernel_value(n, x - 1.0)
}

/// Discrete mollifier on a grid: node samples of the periodized kernel,
/// renormalized to unit rectangle-rule mass, applied as a Fourier multiplier.
#[derive(Clone, Debug)]
pub struct MollifierKernel {
    n: usize,
    grid: PeriodicGrid,
    /// Real, even symbol; `multipliers[0] == 1` exactly.
    multipliers: Vec<f64>,
}

impl MollifierKernel {
    pub fn new(n: usize, grid: &PeriodicGrid) -> Result<Self> {
        if n < MIN_INDEX {
            return Err(Error::MollifierIndex(n));
        }
        let samples: Vec<f64> = grid
            .nodes()
            .into_iter()
            .map(|x| periodic_kernel_value(n, x))
            .collect();
        let total: f64 = samples.iter().sum();
        if total <= 0.0 {
            return Err(Error::UnresolvedMollifier {
                n,
                n_points: grid.n_points(),
            });
        }
        let weights: Vec<f64> = samples.iter().map(|s| s / total).collect();
        // weights are even on the grid, so the symbol is real
        let spectrum = grid.forward(&weights);
        let scale = grid.n_points() as f64;
        let mut multipliers: Vec<f64> = spectrum.iter().map(|c| c.re * scale).collect();
        multipliers[0] = 1.0;
        Ok(Self {
            n,
            grid: grid.clone(),
            multipliers,
        })
    }

    pub fn index(&self) -> usize {
        self.n
    }

    pub fn support_radius(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Discrete symbol at FFT slot `j`.
    pub fn multiplier(&self, j: usize) -> f64 {
        self.multipliers[j]
    }

    pub fn apply(&self, f: &Field) -> Field {
        debug_assert_eq!(f.grid(), &self.grid);
        let grid = f.grid();
        Field::from_raw(
            grid,
            grid.apply_symbol(f.values(), |j| Complex64::new(self.multipliers[j], 0.0)),
        )
    }

    pub(crate) fn apply_coefficients(&self, coeffs: &mut [Complex64]) {
        for (c, m) in coeffs.iter_mut().zip(&self.multipliers) {
            *c *= *m;
        }
    }
}

/// `phi_n * u0` on the circle.
pub fn mollify_field(u0: &Field, n: usize) -> Result<Field> {
    Ok(MollifierKernel::new(n, u0.grid())?.apply(u0))
}

/// Continuum Fourier coefficient `int phi_n(x) cos(2 pi k x) dx`.
pub fn fourier_coefficient(n: usize, k: i64) -> f64 {
    let n = n as f64;
    let omega = 2.0 * PI * k as f64 / n;
    let out = quadrature::integrate(|s| bump(s) * (omega * s).cos(), -1.0, 1.0, 1e-15);
    normalization_constant() * out.integral
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub position: f64,
    pub mass: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureSign {
    Positive,
    Negative,
    Mixed,
}

/// Finite signed sum of point masses on the circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
}

impl AtomicMeasure {
    /// Positions are wrapped into `[0, 1)`.
    pub fn new(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let atoms = atoms
            .into_iter()
            .map(|(position, mass)| {
                if !position.is_finite() || !mass.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "atom ({position}, {mass}) is not finite"
                    )));
                }
                Ok(Atom {
                    position: position.rem_euclid(1.0),
                    mass,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { atoms })
    }

    pub fn empty() -> Self {
        Self { atoms: Vec::new() }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Empty and zero-mass measures count as positive.
    pub fn sign(&self) -> MeasureSign {
        let pos = self.atoms.iter().any(|a| a.mass > 0.0);
        let neg = self.atoms.iter().any(|a| a.mass < 0.0);
        match (pos, neg) {
            (true, true) => MeasureSign::Mixed,
            (false, true) => MeasureSign::Negative,
            _ => MeasureSign::Positive,
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass.abs()).sum()
    }
}

/// `sum_i m_i phi_n(x - x_i)` sampled on the grid. Each atom's samples are
/// rescaled to carry exactly its mass under the rectangle rule, so the node
/// mean equals the total mass and the field is nonnegative for positive
/// measures.
pub fn mollify_measure(y0: &AtomicMeasure, n: usize, grid: &PeriodicGrid) -> Result<Field> {
    if n < MIN_INDEX {
        return Err(Error::MollifierIndex(n));
    }
    let nodes = grid.nodes();
    let mut values = vec![0.0; grid.n_points()];
    let mut samples = vec![0.0; grid.n_points()];
    for atom in y0.atoms() {
        for (s, &x) in samples.iter_mut().zip(&nodes) {
            *s = periodic_kernel_value(n, x - atom.position);
        }
        let total: f64 = samples.iter().sum();
        if total <= 0.0 {
            return Err(Error::UnresolvedMollifier {
                n,
                n_points: grid.n_points(),
            });
        }
        let scale = atom.mass * grid.n_points() as f64 / total;
        for (v, s) in values.iter_mut().zip(&samples) {
            *v += scale * s;
        }
    }
    Ok(Field::from_raw(grid, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, mean};

    #[test]
    fn discrete_symbol_matches_continuum_coefficients() {
        let g = make_grid(1024).unwrap();
        // 64 nodes across the support still leave a 1e-7 sampling gap
        for (n, tol) in [(4usize, 1e-12), (8, 1e-12), (32, 1e-6)] {
            let k = MollifierKernel::new(n, &g).unwrap();
            for m in [1i64, 2, 5, 20] {
                let d = (k.multiplier(m as usize) - fourier_coefficient(n, m)).abs();
                assert!(d < tol, "n={n} k={m}: {d:e}");
            }
        }
    }

    #[test]
    fn bump_values() {
        assert!((bump(0.0) - (-1.0_f64).exp()).abs() < 1e-16);
        assert!((bump(0.0) - 0.367_879_441).abs() < 1e-9);
        assert_eq!(bump(1.0), 0.0);
        assert_eq!(bump(-1.0), 0.0);
        assert_eq!(bump(3.0), 0.0);
        assert!((bump(0.5) - (-4.0_f64 / 3.0).exp()).abs() < 1e-16);
        assert_eq!(bump(0.3), bump(-0.3));
    }

    #[test]
    fn kernel_integrates_to_one() {
        let half = quadrature::integrate(|x| kernel_value(8, x), 0.0, 1.0 / 8.0, 1e-15).integral;
        let other = quadrature::integrate(|x| kernel_value(8, x), -1.0 / 8.0, 0.0, 1e-15).integral;
        assert!((half + other - 1.0).abs() < 1e-10);
        assert!((half - other).abs() < 1e-12);
    }

    #[test]
    fn rejects_small_index() {
        let g = make_grid(64).unwrap();
        let f = Field::constant(&g, 1.0);
        assert!(matches!(mollify_field(&f, 2), Err(Error::MollifierIndex(2))));
        assert!(mollify_measure(&AtomicMeasure::empty(), 1, &g).is_err());
    }

    #[test]
    fn unresolved_kernel_is_reported() {
        let g = make_grid(8).unwrap();
        // support (-1/64, 1/64) holds only the node x = 0, where the bump is positive
        assert!(MollifierKernel::new(64, &g).is_ok());
        let m = AtomicMeasure::new([(0.06, 1.0)]).unwrap();
        assert!(matches!(
            mollify_measure(&m, 64, &g),
            Err(Error::UnresolvedMollifier { .. })
        ));
    }

    #[test]
    fn constants_are_fixed() {
        let g = make_grid(128).unwrap();
        for n in [3, 8, 32] {
            let out = mollify_field(&Field::constant(&g, -0.4), n).unwrap();
            assert!(out.values().iter().all(|v| (v + 0.4).abs() < 1e-10));
        }
    }

    #[test]
    fn measure_examples() {
        let g = make_grid(256).unwrap();
        let single = AtomicMeasure::new([(0.5, 1.0)]).unwrap();
        let y = mollify_measure(&single, 16, &g).unwrap();
        assert!((mean(&y) - 1.0).abs() < 1e-8);
        let peak = y.values().iter().copied().enumerate().fold((0, 0.0), |m, (j, v)| {
            if v > m.1 {
                (j, v)
            } else {
                m
            }
        });
        assert_eq!(peak.0, 128);

        let empty = mollify_measure(&AtomicMeasure::empty(), 16, &g).unwrap();
        assert_eq!(empty.sup_norm(), 0.0);

        let pair = AtomicMeasure::new([(0.25, 1.0), (0.75, 1.0)]).unwrap();
        let y = mollify_measure(&pair, 16, &g).unwrap();
        assert!(y.min() >= 0.0);
        assert!((mean(&y) - 2.0).abs() < 1e-8);
    }

    #[test]
    fn measure_sign_and_wrapping() {
        let m = AtomicMeasure::new([(1.25, 2.0), (-0.5, -1.0)]).unwrap();
        assert_eq!(m.atoms()[0].position, 0.25);
        assert_eq!(m.atoms()[1].position, 0.5);
        assert_eq!(m.sign(), MeasureSign::Mixed);
        assert_eq!(m.total_mass(), 1.0);
        assert_eq!(m.total_variation(), 3.0);
        assert_eq!(AtomicMeasure::new([(0.1, -2.0)]).unwrap().sign(), MeasureSign::Negative);
        assert!(AtomicMeasure::new([(f64::NAN, 1.0)]).is_err());
    }
}
