//! Uniform periodic grid on the unit circle with Fourier differentiation,
//! rectangle-rule quadrature and trigonometric interpolation.
//!
//! Spectral coefficients are stored in FFT order and normalized so that
//! `values[j] = sum_k c_k exp(2 pi i k x_j)`; the coefficient of mode zero is
//! therefore the node mean. The Nyquist coefficient is interpreted as the real
//! mode `c cos(pi N x)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform grid `x_j = j / N`, `j = 0..N`, on `S = R/Z`.
#[derive(Clone)]
pub struct PeriodicGrid {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid").field("n_points", &self.n).finish()
    }
}

impl PartialEq for PeriodicGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl Eq for PeriodicGrid {}

/// Build a grid with `n_points` nodes. `n_points` must be even and at least 8.
pub fn make_grid(n_points: usize) -> Result<PeriodicGrid> {
    PeriodicGrid::new(n_points)
}

impl PeriodicGrid {
    pub const MIN_POINTS: usize = 8;

    pub fn new(n_points: usize) -> Result<Self> {
        if n_points < Self::MIN_POINTS || n_points % 2 != 0 {
            return Err(Error::InvalidGridSize(n_points));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n: n_points,
            forward: planner.plan_fft_forward(n_points),
            inverse: planner.plan_fft_inverse(n_points),
        })
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Signed wavenumber of FFT slot `j`; the Nyquist slot maps to `+N/2`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        if j <= self.n / 2 {
            j as f64
        } else {
            j as f64 - self.n as f64
        }
    }

    pub fn nyquist(&self) -> usize {
        self.n / 2
    }

    /// Largest wavenumber kept by the 2/3 rule. Quadratic products of fields
    /// band-limited to this cutoff alias only into modes above it.
    pub fn dealias_cutoff(&self) -> usize {
        self.n / 3
    }

    /// Normalized forward transform of node values.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.n);
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        for c in &mut buf {
            *c *= scale;
        }
        buf
    }

    /// Inverse of [`PeriodicGrid::forward`], keeping the real part.
    pub fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.inverse_in_place(&mut buf);
        buf.iter().map(|c| c.re).collect()
    }

    pub(crate) fn inverse_in_place(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n);
        self.inverse.process(buf);
    }

    pub(crate) fn forward_in_place(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n);
        self.forward.process(buf);
        let scale = 1.0 / self.n as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
    }

    /// Multiply the spectrum of `values` slot-wise by `symbol(j)` and return
    /// node values.
    pub fn apply_symbol(&self, values: &[f64], symbol: impl Fn(usize) -> Complex64) -> Vec<f64> {
        let mut coeffs = self.forward(values);
        for (j, c) in coeffs.iter_mut().enumerate() {
            *c *= symbol(j);
        }
        self.inverse(&coeffs)
    }

    /// Fourier symbol of `d/dx` with the Nyquist slot zeroed.
    pub fn derivative_symbol(&self, j: usize) -> Complex64 {
        if j == self.nyquist() {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, 2.0 * PI * self.wavenumber(j))
        }
    }
}

/// Real samples of a 1-periodic function on a [`PeriodicGrid`].
#[derive(Clone, Debug)]
pub struct Field {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.values == other.values
    }
}

impl Field {
    pub fn new(grid: &PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::LengthMismatch {
                expected: grid.n_points(),
                found: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn from_fn(grid: &PeriodicGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().into_iter().map(f).collect())
    }

    pub fn constant(grid: &PeriodicGrid, c: f64) -> Self {
        Self::from_raw(grid, vec![c; grid.n_points()])
    }

    pub fn zeros(grid: &PeriodicGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Build from node values produced by trusted spectral code paths.
    pub(crate) fn from_raw(grid: &PeriodicGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_points());
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_coefficients(grid: &PeriodicGrid, coeffs: &[Complex64]) -> Self {
        Self::from_raw(grid, grid.inverse(coeffs))
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn coefficients(&self) -> Vec<Complex64> {
        self.grid.forward(&self.values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self::from_raw(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Rectangle-rule `L^1(S)` norm.
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() / self.len() as f64
    }

    /// Rectangle-rule `L^2(S)` norm.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.len() as f64).sqrt()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `sup_j |self_j - other_j|`.
    pub fn sup_distance(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Spectral derivative, exact for trigonometric polynomials of degree `< N/2`.
pub fn derivative(f: &Field) -> Field {
    let grid = f.grid();
    Field::from_raw(grid, grid.apply_symbol(f.values(), |j| grid.derivative_symbol(j)))
}

/// Spectral second derivative with symbol `-(2 pi k)^2`, Nyquist included, so
/// that `A = mu - d^2/dx^2` is invertible on every grid mode.
pub fn second_derivative(f: &Field) -> Field {
    let grid = f.grid();
    Field::from_raw(
        grid,
        grid.apply_symbol(f.values(), |j| {
            let w = 2.0 * PI * grid.wavenumber(j);
            Complex64::new(-w * w, 0.0)
        }),
    )
}

/// Node average, equal to the integral over `S` for resolved trigonometric
/// polynomials.
pub fn mean(f: &Field) -> f64 {
    f.values().iter().sum::<f64>() / f.len() as f64
}

/// Trigonometric interpolant of `f` evaluated at `x` (wrapped mod 1).
pub fn interpolate(f: &Field, x: f64) -> f64 {
    interpolate_coefficients(&f.coefficients(), x)
}

/// Evaluate the real trigonometric polynomial with Hermitian coefficients
/// `coeffs` at `x`.
pub fn interpolate_coefficients(coeffs: &[Complex64], x: f64) -> f64 {
    interpolate_with_slope(coeffs, x).0
}

/// Value and first derivative of the trigonometric interpolant at `x`. The
/// derivative drops the Nyquist mode, as [`derivative`] does.
pub fn interpolate_with_slope(coeffs: &[Complex64], x: f64) -> (f64, f64) {
    const RESEED: usize = 32;
    let n = coeffs.len();
    let x = x.rem_euclid(1.0);
    let theta = 2.0 * PI * x;
    let step = Complex64::from_polar(1.0, theta);
    let mut rot = Complex64::new(1.0, 0.0);
    let (mut value, mut slope) = (0.0, 0.0);
    // pair k with -k: c_k e^{ikx} + conj(c_k) e^{-ikx} = 2 Re(c_k e^{ikx})
    for k in 1..n / 2 {
        rot = if k % RESEED == 0 {
            Complex64::from_polar(1.0, theta * k as f64)
        } else {
            rot * step
        };
        let ck = 0.5 * (coeffs[k] + coeffs[n - k].conj());
        let term = ck * rot;
        value += term.re;
        slope -= k as f64 * term.im;
    }
    let nyq = coeffs[n / 2].re * (PI * n as f64 * x).cos();
    (coeffs[0].re + 2.0 * value + nyq, 4.0 * PI * slope)
}

/// Zero every coefficient whose magnitude is below `f64::EPSILON` times the
/// largest one. Such coefficients are rounding noise; left in place they are
/// amplified by `k^2` whenever a second derivative is formed.
pub fn denoise(coeffs: &mut [Complex64]) {
    let largest = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.norm()));
    let floor = f64::EPSILON * largest;
    for c in coeffs.iter_mut() {
        if c.norm() < floor {
            *c = Complex64::new(0.0, 0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> PeriodicGrid {
        make_grid(n).unwrap()
    }

    #[test]
    fn nodes_of_small_grid() {
        let g = grid(8);
        assert_eq!(g.nodes(), vec![0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875]);
        assert_eq!(grid(256).spacing(), 1.0 / 256.0);
    }

    #[test]
    fn rejects_odd_or_small_sizes() {
        assert!(matches!(make_grid(7), Err(Error::InvalidGridSize(7))));
        assert!(make_grid(6).is_err());
        assert!(make_grid(255).is_err());
    }

    #[test]
    fn derivative_of_cosines() {
        let g = grid(64);
        let f = Field::from_fn(&g, |x| (2.0 * PI * x).cos()).unwrap();
        let exact = Field::from_fn(&g, |x| -2.0 * PI * (2.0 * PI * x).sin()).unwrap();
        assert!(derivative(&f).sup_distance(&exact) <= 1e-12);

        let f = Field::from_fn(&g, |x| (4.0 * PI * x).sin()).unwrap();
        let exact = Field::from_fn(&g, |x| 4.0 * PI * (4.0 * PI * x).cos()).unwrap();
        assert!(derivative(&f).sup_distance(&exact) <= 1e-12);
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let g = grid(32);
        assert!(derivative(&Field::constant(&g, 5.0)).sup_norm() < 1e-14);
    }

    #[test]
    fn nyquist_mode_has_zero_derivative() {
        let g = grid(16);
        let f = Field::from_fn(&g, |x| (16.0 * PI * x).cos()).unwrap();
        assert!(derivative(&f).sup_norm() < 1e-12);
        let d2 = second_derivative(&f);
        let w2 = (16.0 * PI).powi(2);
        assert!(d2.zip_map(&f, |a, b| a + w2 * b).sup_norm() < 1e-9);
    }

    #[test]
    fn means() {
        let g = grid(64);
        assert_eq!(mean(&Field::constant(&g, 3.25)), 3.25);
        let f = Field::from_fn(&g, |x| (2.0 * PI * x).cos()).unwrap();
        assert!(mean(&f).abs() <= 1e-15);
    }

    #[test]
    fn interpolation() {
        let g = grid(64);
        let f = Field::from_fn(&g, |x| (2.0 * PI * x).cos()).unwrap();
        assert!((interpolate(&f, 0.3) - (0.6 * PI).cos()).abs() <= 1e-12);
        assert!((interpolate(&f, 1.3) - (0.6 * PI).cos()).abs() <= 1e-12);
        let c = Field::constant(&g, -1.5);
        assert!((interpolate(&c, 0.123) + 1.5).abs() <= 1e-14);
    }

    #[test]
    fn interpolated_slope_matches_derivative() {
        let g = make_grid(128).unwrap();
        let f = Field::from_fn(&g, |x| (2.0 * PI * x).sin() + 0.3 * (40.0 * PI * x).cos()).unwrap();
        let coeffs = f.coefficients();
        for x in [0.0, 0.137, 0.5, 0.9] {
            let (v, s) = interpolate_with_slope(&coeffs, x);
            let exact = 2.0 * PI * (2.0 * PI * x).cos() - 12.0 * PI * (40.0 * PI * x).sin();
            assert!((v - (2.0 * PI * x).sin() - 0.3 * (40.0 * PI * x).cos()).abs() < 1e-12);
            assert!((s - exact).abs() < 1e-10, "{x}: {s} vs {exact}");
        }
    }

    #[test]
    fn interpolation_reproduces_nodes_with_nyquist_content() {
        let g = grid(16);
        let values: Vec<f64> = (0..16).map(|j| ((j * 7919) % 13) as f64 - 6.0).collect();
        let f = Field::new(&g, values).unwrap();
        for j in 0..16 {
            assert!((interpolate(&f, g.node(j)) - f.values()[j]).abs() <= 1e-12);
        }
    }

    #[test]
    fn rejects_bad_fields() {
        let g = grid(8);
        assert!(matches!(
            Field::new(&g, vec![0.0; 7]),
            Err(Error::LengthMismatch { expected: 8, found: 7 })
        ));
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(matches!(Field::new(&g, v), Err(Error::NonFinite { index: 3, .. })));
    }

    #[test]
    fn denoise_keeps_signal() {
        let mut c = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(1e-10, 0.0),
            Complex64::new(1e-18, 1e-18),
        ];
        denoise(&mut c);
        assert_eq!(c[1].re, 1e-10);
        assert_eq!(c[2], Complex64::new(0.0, 0.0));
    }
}
