//! Initial data: smooth cosine profiles, peakon (Green's-function) profiles
//! with atomic momentum, and sign classification of `y0 = A u0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{derivative, mean, Field, PeriodicGrid};
use crate::mollifier::{mollify_field, mollify_measure, AtomicMeasure, MeasureSign};
use crate::operator::{apply_a, green, invert_a_spectral};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignClass {
    YNonneg,
    YNonpos,
    Mixed,
}

impl SignClass {
    pub fn is_definite(self) -> bool {
        self != SignClass::Mixed
    }

    /// `+1` for nonnegative, `-1` for nonpositive momentum.
    pub fn orientation(self) -> Option<f64> {
        match self {
            SignClass::YNonneg => Some(1.0),
            SignClass::YNonpos => Some(-1.0),
            SignClass::Mixed => None,
        }
    }
}

/// Initial profile `u0` with its cached invariants `mu0 = mean(u0)` and
/// `mu1 = ||u0_x||_{L^2}`.
#[derive(Clone, Debug)]
pub struct InitialCondition {
    pub u0: Field,
    /// Present for measure-type data, where `y0` is a sum of point masses.
    pub y0_atoms: Option<AtomicMeasure>,
    pub sign_class: SignClass,
    pub mu0: f64,
    pub mu1: f64,
    /// Mollifier index applied before evolution.
    pub mollify_n: Option<usize>,
}

fn invariants(u0: &Field) -> (f64, f64) {
    (mean(u0), derivative(u0).l2_norm())
}

/// `u0 = a + b cos(2 pi x)`, so `y0 = a + 4 pi^2 b cos(2 pi x)`.
pub fn cosine_data(grid: &PeriodicGrid, a: f64, b: f64) -> Result<InitialCondition> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument("cosine parameters must be finite".into()));
    }
    let u0 = Field::from_fn(grid, |x| a + b * (2.0 * PI * x).cos())?;
    let swing = 4.0 * PI * PI * b.abs();
    let sign_class = if a >= swing {
        SignClass::YNonneg
    } else if -a >= swing {
        SignClass::YNonpos
    } else {
        SignClass::Mixed
    };
    let (mu0, mu1) = invariants(&u0);
    Ok(InitialCondition {
        u0,
        y0_atoms: None,
        sign_class,
        mu0,
        mu1,
        mollify_n: None,
    })
}

/// `u0(x) = p g(x - x0)`, i.e. `y0 = p delta_{x0}`. The profile has a
/// derivative kink at `x0`, so evolution requires mollification.
pub fn peakon_data(grid: &PeriodicGrid, p: f64, x0: f64) -> Result<InitialCondition> {
    if p == 0.0 || !p.is_finite() {
        return Err(Error::ZeroPeakon);
    }
    let atoms = AtomicMeasure::new([(x0, p)])?;
    let x0 = atoms.atoms()[0].position;
    let u0 = Field::from_fn(grid, |x| p * green(x - x0))?;
    let sign_class = match atoms.sign() {
        MeasureSign::Negative => SignClass::YNonpos,
        _ => SignClass::YNonneg,
    };
    let (mu0, mu1) = invariants(&u0);
    Ok(InitialCondition {
        u0,
        y0_atoms: Some(atoms),
        sign_class,
        mu0,
        mu1,
        mollify_n: None,
    })
}

/// `int_S g'(x) g'(x + d) dx = 1/12 - d (1 - d) / 2` for `d` in `[0, 1)`.
fn sawtooth_correlation(d: f64) -> f64 {
    let d = d.rem_euclid(1.0);
    1.0 / 12.0 - 0.5 * d * (1.0 - d)
}

/// Smooth data from node values; the sign class is read off `A u0`.
pub fn from_field(u0: Field, tol: f64) -> InitialCondition {
    let sign_class = classify_sign(&u0, tol);
    let (mu0, mu1) = invariants(&u0);
    InitialCondition {
        u0,
        y0_atoms: None,
        sign_class,
        mu0,
        mu1,
        mollify_n: None,
    }
}

/// Classify `y0 = A u0` by its node values with tolerance `tol`.
pub fn classify_sign(u0: &Field, tol: f64) -> SignClass {
    let y0 = apply_a(u0);
    if y0.min() >= -tol {
        SignClass::YNonneg
    } else if y0.max() <= tol {
        SignClass::YNonpos
    } else {
        SignClass::Mixed
    }
}

impl InitialCondition {
    pub fn with_mollification(mut self, n: Option<usize>) -> Self {
        self.mollify_n = n;
        self
    }

    pub fn grid(&self) -> &PeriodicGrid {
        self.u0.grid()
    }

    pub fn is_measure(&self) -> bool {
        self.y0_atoms.is_some()
    }

    /// `(mu0, mu1)` of the continuum profile. For measure data `u0 = g * y0`
    /// these follow from the atoms: `mu0 = sum p_i` and
    /// `mu1^2 = sum_ij p_i p_j c(x_i - x_j)`, where `c` is the autocorrelation
    /// of `g'(x) = x - 1/2`. Smooth data returns the cached grid values.
    pub fn continuum_invariants(&self) -> (f64, f64) {
        match &self.y0_atoms {
            Some(atoms) => {
                let a = atoms.atoms();
                let mut sq = 0.0;
                for i in a {
                    for j in a {
                        sq += i.mass * j.mass * sawtooth_correlation(i.position - j.position);
                    }
                }
                (atoms.total_mass(), sq.max(0.0).sqrt())
            }
            None => (self.mu0, self.mu1),
        }
    }

    /// The field the solver starts from. Measure data is rebuilt as
    /// `A^{-1}(phi_n * y0)`; smooth data is mollified only when requested.
    pub fn evolution_data(&self) -> Result<Field> {
        match (&self.y0_atoms, self.mollify_n) {
            (Some(atoms), Some(n)) => Ok(invert_a_spectral(&mollify_measure(atoms, n, self.grid())?)),
            (Some(_), None) => Err(Error::MissingMollification),
            (None, Some(n)) => mollify_field(&self.u0, n),
            (None, None) => Ok(self.u0.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::operator::GreenKernel;

    #[test]
    fn cosine_examples() {
        let g = make_grid(64).unwrap();
        let ic = cosine_data(&g, 1.0, 0.02).unwrap();
        assert_eq!(ic.sign_class, SignClass::YNonneg);
        assert!((ic.mu0 - 1.0).abs() < 1e-14);
        assert!((ic.mu1 - 0.02 * 2f64.sqrt() * PI).abs() < 1e-14);

        assert_eq!(cosine_data(&g, 0.0, 0.1).unwrap().sign_class, SignClass::Mixed);
        assert_eq!(cosine_data(&g, 2.0, 0.0).unwrap().sign_class, SignClass::YNonneg);
        assert_eq!(cosine_data(&g, -2.0, 0.0).unwrap().sign_class, SignClass::YNonpos);
        assert!(ic.u0.sup_distance(&Field::constant(&g, 1.0)) > 0.0);
    }

    #[test]
    fn mu1_does_not_depend_on_offset() {
        let g = make_grid(32).unwrap();
        let a = cosine_data(&g, 0.0, 0.3).unwrap().mu1;
        let b = cosine_data(&g, 7.5, 0.3).unwrap().mu1;
        assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn peakon_examples() {
        let g = make_grid(256).unwrap();
        let ic = peakon_data(&g, 1.0, 0.5).unwrap();
        assert!((ic.mu0 - GreenKernel::node_mean_exact(256)).abs() < 1e-14);
        assert_eq!(ic.y0_atoms.as_ref().unwrap().atoms()[0].position, 0.5);
        assert_eq!(ic.sign_class, SignClass::YNonneg);

        let neg = peakon_data(&g, -2.0, 0.25).unwrap();
        assert_eq!(neg.sign_class, SignClass::YNonpos);
        assert_eq!(neg.y0_atoms.as_ref().unwrap().atoms()[0].mass, -2.0);

        let at0 = peakon_data(&g, 1.0, 0.0).unwrap();
        assert_eq!(at0.u0.max(), 13.0 / 12.0);
        assert_eq!(at0.u0.values()[0], 13.0 / 12.0);

        assert!(matches!(peakon_data(&g, 0.0, 0.5), Err(Error::ZeroPeakon)));
    }

    #[test]
    fn peakon_needs_mollification() {
        let g = make_grid(64).unwrap();
        let ic = peakon_data(&g, 1.0, 0.5).unwrap();
        assert!(matches!(ic.evolution_data(), Err(Error::MissingMollification)));
        let smooth = ic.with_mollification(Some(8)).evolution_data().unwrap();
        assert!((mean(&smooth) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn continuum_invariants_of_atoms() {
        let g = make_grid(64).unwrap();
        let ic = peakon_data(&g, -2.0, 0.3).unwrap();
        let (mu0, mu1) = ic.continuum_invariants();
        assert_eq!(mu0, -2.0);
        assert!((mu1 - 2.0 / 12f64.sqrt()).abs() < 1e-15);
        // two unit atoms half a period apart: u0_x is a sawtooth of period 1/2
        let pair = InitialCondition {
            y0_atoms: Some(AtomicMeasure::new([(0.0, 1.0), (0.5, 1.0)]).unwrap()),
            ..ic
        };
        let (mu0, mu1) = pair.continuum_invariants();
        assert_eq!(mu0, 2.0);
        assert!((mu1 * mu1 - 4.0 / 48.0).abs() < 1e-15);
        let smooth = cosine_data(&g, 1.0, 0.02).unwrap();
        assert_eq!(smooth.continuum_invariants(), (smooth.mu0, smooth.mu1));
    }

    #[test]
    fn classify_examples() {
        let g = make_grid(128).unwrap();
        let u = Field::from_fn(&g, |x| 1.0 + 0.02 * (2.0 * PI * x).cos()).unwrap();
        assert_eq!(classify_sign(&u, 1e-10), SignClass::YNonneg);
        let u = Field::from_fn(&g, |x| (2.0 * PI * x).cos()).unwrap();
        assert_eq!(classify_sign(&u, 1e-10), SignClass::Mixed);
        assert_eq!(classify_sign(&Field::constant(&g, -3.0), 1e-10), SignClass::YNonpos);
    }

    #[test]
    fn peakon_momentum_concentrates() {
        // off-peak values of A u0 vanish as the grid is refined
        let mut previous = f64::INFINITY;
        for n in [64, 128, 256] {
            let g = make_grid(n).unwrap();
            let ic = peakon_data(&g, 1.0, 0.5).unwrap();
            let y = apply_a(&ic.u0);
            assert!((mean(&y) - GreenKernel::node_mean_exact(n)).abs() < 1e-10);
            let far = y.values()[..n / 4].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            assert!(far < previous);
            previous = far;
        }
    }
}
