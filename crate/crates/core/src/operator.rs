//! The operator `A = mu - d^2/dx^2` on the circle and three independent
//! realizations of its inverse.
//!
//! * [`invert_a_spectral`]: Fourier multiplier `1` on the mean and
//!   `1/(4 pi^2 k^2)` elsewhere. This is the solver's production path.
//! * [`invert_a_explicit`]: the closed-form nested-integral formula anchored
//!   at `x = 0`, assembled from cumulative integrals.
//! * [`convolve_green`]: periodic convolution with node samples of the
//!   Green's function `g(x) = x(x-1)/2 + 13/12`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::grid::{mean, second_derivative, Field, PeriodicGrid};

/// Green's function of `A` on `[0, 1)`, extended periodically.
pub fn green(x: f64) -> f64 {
    let x = x.rem_euclid(1.0);
    0.5 * x * (x - 1.0) + 13.0 / 12.0
}

/// Node samples of [`green`] together with their normalized spectrum.
#[derive(Clone, Debug)]
pub struct GreenKernel {
    field: Field,
    spectrum: Vec<Complex64>,
}

impl GreenKernel {
    pub const MAX_VALUE: f64 = 13.0 / 12.0;
    pub const MIN_VALUE: f64 = 23.0 / 24.0;

    pub fn new(grid: &PeriodicGrid) -> Self {
        let field = Field::from_raw(grid, grid.nodes().into_iter().map(green).collect());
        let spectrum = field.coefficients();
        Self { field, spectrum }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn values(&self) -> &[f64] {
        self.field.values()
    }

    /// Exact node mean `1 + 1/(12 N^2)`: the rectangle rule overshoots the
    /// continuum mean `1` because of the derivative kink at `x = 0`.
    pub fn node_mean_exact(n_points: usize) -> f64 {
        1.0 + 1.0 / (12.0 * (n_points as f64).powi(2))
    }
}

/// Symbol of `A`: `1` on the mean, `(2 pi k)^2` elsewhere.
pub(crate) fn a_symbol(grid: &PeriodicGrid, j: usize) -> f64 {
    if j == 0 {
        1.0
    } else {
        let w = 2.0 * PI * grid.wavenumber(j);
        w * w
    }
}

fn inverse_symbol(grid: &PeriodicGrid, j: usize) -> f64 {
    if j == 0 {
        1.0
    } else {
        let w = 2.0 * PI * grid.wavenumber(j);
        1.0 / (w * w)
    }
}

/// `A w = mean(w) - w_xx`.
pub fn apply_a(w: &Field) -> Field {
    let grid = w.grid();
    Field::from_raw(
        grid,
        grid.apply_symbol(w.values(), |j| Complex64::new(a_symbol(grid, j), 0.0)),
    )
}

/// `A^{-1} w` by Fourier multiplier.
pub fn invert_a_spectral(w: &Field) -> Field {
    let grid = w.grid();
    Field::from_raw(
        grid,
        grid.apply_symbol(w.values(), |j| Complex64::new(inverse_symbol(grid, j), 0.0)),
    )
}

/// `A^{-1} d/dx w = d/dx A^{-1} w` by Fourier multiplier; the output has zero
/// mean and the Nyquist slot is zeroed as for [`crate::grid::derivative`].
pub fn dx_ainv(w: &Field) -> Field {
    let grid = w.grid();
    Field::from_raw(grid, grid.apply_symbol(w.values(), |j| dx_ainv_symbol(grid, j)))
}

pub(crate) fn dx_ainv_symbol(grid: &PeriodicGrid, j: usize) -> Complex64 {
    if j == 0 || j == grid.nyquist() {
        Complex64::new(0.0, 0.0)
    } else {
        // (2 pi i k) / (2 pi k)^2
        Complex64::new(0.0, 1.0 / (2.0 * PI * grid.wavenumber(j)))
    }
}

/// How the nested integrals `int_0^x` of the explicit formula are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CumulativeRule {
    /// Cumulative trapezoid sums anchored at node 0. Second order.
    Trapezoid,
    /// Exact integration of the trigonometric interpolant of the node values.
    /// Exact for resolved trigonometric polynomials.
    Interpolant,
}

/// Nested integrals of `w` from the base point `x = 0`.
struct NestedIntegrals {
    mean: f64,
    /// `W1(x_j) = int_0^{x_j} w`
    first: Vec<f64>,
    /// `W2(x_j) = int_0^{x_j} W1`
    second: Vec<f64>,
    /// `int_0^1 W1`
    first_total: f64,
    /// `int_0^1 W2`
    second_total: f64,
}

impl NestedIntegrals {
    fn compute(w: &Field, rule: CumulativeRule) -> Self {
        match rule {
            CumulativeRule::Trapezoid => Self::trapezoid(w),
            CumulativeRule::Interpolant => Self::interpolant(w),
        }
    }

    fn trapezoid(w: &Field) -> Self {
        let h = w.grid().spacing();
        let v = w.values();
        let n = v.len();
        let mean = mean(w);

        let cumulate = |f: &[f64], end: f64| -> (Vec<f64>, f64) {
            let mut out = Vec::with_capacity(n);
            let mut acc = 0.0;
            out.push(0.0);
            for j in 1..n {
                acc += 0.5 * h * (f[j - 1] + f[j]);
                out.push(acc);
            }
            acc += 0.5 * h * (f[n - 1] + end);
            (out, acc)
        };

        let (first, first_total_end) = cumulate(v, v[0]);
        debug_assert!((first_total_end - mean).abs() <= 1e-12 * (1.0 + mean.abs()));
        // W1 at x = 1 is the mean of w.
        let (second, first_total) = cumulate(&first, mean);
        let (_, second_total) = cumulate(&second, first_total);
        Self {
            mean,
            first,
            second,
            first_total,
            second_total,
        }
    }

    fn interpolant(w: &Field) -> Self {
        let grid = w.grid();
        let n = grid.n_points();
        let coeffs = w.coefficients();
        let c0 = coeffs[0].re;

        // F: zero-mean periodic antiderivative of w - c0; G: that of F.
        let mut f_hat = vec![Complex64::new(0.0, 0.0); n];
        let mut g_hat = vec![Complex64::new(0.0, 0.0); n];
        for j in 1..n {
            let omega = 2.0 * PI * grid.wavenumber(j);
            if j == grid.nyquist() {
                // c cos(pi N x): sin(pi N x)/(pi N) vanishes on the nodes.
                g_hat[j] = coeffs[j] * (-1.0 / (omega * omega));
            } else {
                f_hat[j] = coeffs[j] / Complex64::new(0.0, omega);
                g_hat[j] = coeffs[j] * (-1.0 / (omega * omega));
            }
        }
        let f = grid.inverse(&f_hat);
        let g = grid.inverse(&g_hat);
        let (f0, g0) = (f[0], g[0]);

        let nodes = grid.nodes();
        let first = nodes.iter().zip(&f).map(|(&x, &fx)| c0 * x + fx - f0).collect();
        let second = nodes
            .iter()
            .zip(&g)
            .map(|(&x, &gx)| 0.5 * c0 * x * x + gx - g0 - f0 * x)
            .collect();
        Self {
            mean: c0,
            first,
            second,
            first_total: 0.5 * c0 - f0,
            second_total: c0 / 6.0 - g0 - 0.5 * f0,
        }
    }
}

/// `A^{-1} w` from the closed-form formula
/// `v(x) = (x^2/2 - x/2 + 13/12) mu(w) + (x - 1/2) int_0^1 W1 - W2(x) + int_0^1 W2`.
pub fn invert_a_explicit(w: &Field, rule: CumulativeRule) -> Field {
    let ints = NestedIntegrals::compute(w, rule);
    let values = w
        .grid()
        .nodes()
        .iter()
        .zip(&ints.second)
        .map(|(&x, &w2)| {
            (0.5 * x * x - 0.5 * x + 13.0 / 12.0) * ints.mean + (x - 0.5) * ints.first_total - w2
                + ints.second_total
        })
        .collect();
    Field::from_raw(w.grid(), values)
}

/// `A^{-1} d/dx w = (x - 1/2) mu(w) - W1(x) + int_0^1 W1`.
pub fn dx_ainv_explicit(w: &Field, rule: CumulativeRule) -> Field {
    let ints = NestedIntegrals::compute(w, rule);
    let values = w
        .grid()
        .nodes()
        .iter()
        .zip(&ints.first)
        .map(|(&x, &w1)| (x - 0.5) * ints.mean - w1 + ints.first_total)
        .collect();
    Field::from_raw(w.grid(), values)
}

/// Rectangle-rule convolution `h sum_j g(x_i - x_j) w_j` with the node-sampled
/// kernel. Carries the `O(N^-2)` bias of the kernel's derivative kink: a
/// constant `c` maps to `c (1 + 1/(12 N^2))`.
pub fn convolve_green(kernel: &GreenKernel, w: &Field) -> Field {
    let grid = w.grid();
    debug_assert_eq!(grid, kernel.field.grid());
    let mut coeffs = w.coefficients();
    for (c, g) in coeffs.iter_mut().zip(&kernel.spectrum) {
        *c *= g;
    }
    Field::from_coefficients(grid, &coeffs)
}

/// [`convolve_green`] with Euler-Maclaurin corrections for the kink of `g` at
/// the diagonal. On a mode with `s = 4 sin^2(pi k h)` the rectangle rule
/// overshoots by `h^2 (1/12 + s/240 + 31 s^2/60480 + ...)`; the first three
/// terms are removed with the periodic difference operators `1`, `-d2`, `d2^2`
/// (`d2 w_j = w_{j+1} - 2 w_j + w_{j-1}` has symbol `-s`).
pub fn convolve_green_corrected(kernel: &GreenKernel, w: &Field) -> Field {
    let raw = convolve_green(kernel, w);
    let h2 = w.grid().spacing().powi(2);
    let d2 = second_difference(w.values());
    let d4 = second_difference(&d2);
    let values = raw
        .values()
        .iter()
        .zip(w.values())
        .zip(d2.iter().zip(&d4))
        .map(|((&r, &wv), (&a, &b))| r - h2 * (wv / 12.0 - a / 240.0 + 31.0 * b / 60480.0))
        .collect();
    Field::from_raw(w.grid(), values)
}

fn second_difference(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|j| v[(j + 1) % n] - 2.0 * v[j] + v[(j + n - 1) % n])
        .collect()
}

/// Sup-norm residual of `A^{-1} w_xx = -w + mean(w)`.
pub fn check_identity_2_2(w: &Field) -> f64 {
    let lhs = invert_a_spectral(&second_derivative(w));
    let mu = mean(w);
    lhs.zip_map(w, |l, wv| l - (mu - wv)).sup_norm()
}
