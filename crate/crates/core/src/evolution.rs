//! Method-of-lines integration of
//!
//! ```text
//! u_t + u u_x = -d/dx A^{-1}(2 mu0 e^{-lambda t} u + u_x^2 / 2) - lambda u
//! ```
//!
//! with classical RK4 on the Fourier coefficients of `u`. The mean is carried
//! in closed form inside the nonlocal term, and the quadratic products
//! `u u_x`, `u_x^2` are optionally truncated by the 2/3 rule.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{derivative, mean, Field, PeriodicGrid};
use crate::initial::InitialCondition;
use crate::operator::dx_ainv_symbol;

/// Upper limit on the number of time steps of a single run.
pub const MAX_STEPS: u64 = 50_000_000;

/// Guards the CFL step against a vanishing velocity.
pub const CFL_EPSILON: f64 = 1e-12;

pub const DEFAULT_SNAPSHOT_STRIDE: usize = 10;

/// Reporting threshold on `sup |u_x|`, not a blow-up criterion.
pub fn default_blowup_guard(mu0: f64, mu1: f64) -> f64 {
    1e3 * (mu0.abs() + mu1 + 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeStepping {
    /// Constant step; shortened uniformly so that an integer number of steps
    /// lands on `t_end`.
    Fixed { dt: f64 },
    /// `dt = safety * dx / (sup|u| + eps)`, re-evaluated every step.
    Cfl { safety: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub lambda: f64,
    pub n_points: usize,
    pub t_end: f64,
    pub stepping: TimeStepping,
    pub dealias: bool,
    pub snapshot_stride: usize,
    /// `None` selects [`default_blowup_guard`].
    pub blowup_guard: Option<f64>,
}

impl SolverConfig {
    pub fn fixed(n_points: usize, lambda: f64, t_end: f64, dt: f64) -> Self {
        Self {
            lambda,
            n_points,
            t_end,
            stepping: TimeStepping::Fixed { dt },
            dealias: true,
            snapshot_stride: DEFAULT_SNAPSHOT_STRIDE,
            blowup_guard: None,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn with_dealias(mut self, dealias: bool) -> Self {
        self.dealias = dealias;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::config("equation.lambda", "must be finite and >= 0"));
        }
        if self.n_points < PeriodicGrid::MIN_POINTS || self.n_points % 2 != 0 {
            return Err(Error::config("grid.n_points", "must be even and >= 8"));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::config("time.t_end", "must be finite and > 0"));
        }
        match self.stepping {
            TimeStepping::Fixed { dt } => {
                if !(dt.is_finite() && dt > 0.0) {
                    return Err(Error::config("time.dt", "must be finite and > 0"));
                }
                let steps = (self.t_end / dt).ceil();
                if steps > MAX_STEPS as f64 {
                    return Err(Error::StepBudget {
                        steps: steps as u64,
                        limit: MAX_STEPS,
                    });
                }
            }
            TimeStepping::Cfl { safety } => {
                if !(safety > 0.0 && safety <= 1.0) {
                    return Err(Error::config("time.cfl_safety", "must lie in (0, 1]"));
                }
            }
        }
        if self.snapshot_stride == 0 {
            return Err(Error::config("time.snapshot_stride", "must be positive"));
        }
        if let Some(guard) = self.blowup_guard {
            if !(guard.is_finite() && guard > 0.0) {
                return Err(Error::config("solver.blowup_guard", "must be finite and > 0"));
            }
        }
        Ok(())
    }

    /// Number of steps and the uniform step for fixed stepping.
    pub fn fixed_schedule(&self) -> Option<(u64, f64)> {
        match self.stepping {
            TimeStepping::Fixed { dt } => {
                let steps = ((self.t_end / dt) - 1e-9).ceil().max(1.0) as u64;
                Some((steps, self.t_end / steps as f64))
            }
            TimeStepping::Cfl { .. } => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverState {
    pub t: f64,
    pub u: Field,
    /// Mean at `t = 0`; the rhs uses `mu0 e^{-lambda t}`.
    pub mu0: f64,
    /// `||u_x||_{L^2}` at `t = 0`.
    pub mu1: f64,
}

impl SolverState {
    pub fn initial(u0: Field) -> Self {
        let mu0 = mean(&u0);
        let mu1 = derivative(&u0).l2_norm();
        Self { t: 0.0, u: u0, mu0, mu1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    BlowupGuardTriggered { t: f64, sup_ux: f64 },
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub config: SolverConfig,
    pub times: Vec<f64>,
    /// Step index of each snapshot.
    pub steps: Vec<u64>,
    pub snapshots: Vec<Field>,
    pub status: RunStatus,
    pub mu0: f64,
    pub mu1: f64,
}

impl Trajectory {
    pub fn grid(&self) -> &PeriodicGrid {
        self.snapshots[0].grid()
    }

    pub fn final_field(&self) -> &Field {
        self.snapshots.last().expect("trajectory has an initial snapshot")
    }

    pub fn completed(&self) -> bool {
        self.status == RunStatus::Completed
    }

    pub fn states(&self) -> impl Iterator<Item = SolverState> + '_ {
        self.times.iter().zip(&self.snapshots).map(|(&t, u)| SolverState {
            t,
            u: u.clone(),
            mu0: self.mu0,
            mu1: self.mu1,
        })
    }
}

/// Spectral right-hand side with preallocated work buffers.
pub(crate) struct Rhs {
    grid: PeriodicGrid,
    derivative: Vec<Complex64>,
    nonlocal: Vec<Complex64>,
    keep: Vec<bool>,
    mu0: f64,
    lambda: f64,
    u: Vec<Complex64>,
    ux: Vec<Complex64>,
    prod: Vec<Complex64>,
    square: Vec<Complex64>,
}

impl Rhs {
    pub(crate) fn new(grid: &PeriodicGrid, mu0: f64, lambda: f64, dealias: bool) -> Self {
        let n = grid.n_points();
        let cutoff = grid.dealias_cutoff() as f64;
        let zero = Complex64::new(0.0, 0.0);
        Self {
            grid: grid.clone(),
            derivative: (0..n).map(|j| grid.derivative_symbol(j)).collect(),
            nonlocal: (0..n).map(|j| dx_ainv_symbol(grid, j)).collect(),
            keep: (0..n)
                .map(|j| !dealias || grid.wavenumber(j).abs() <= cutoff)
                .collect(),
            mu0,
            lambda,
            u: vec![zero; n],
            ux: vec![zero; n],
            prod: vec![zero; n],
            square: vec![zero; n],
        }
    }

    pub(crate) fn derivative_symbol(&self) -> &[Complex64] {
        &self.derivative
    }

    pub(crate) fn eval(&mut self, t: f64, coeffs: &[Complex64], out: &mut [Complex64]) {
        let zero = Complex64::new(0.0, 0.0);
        self.u.copy_from_slice(coeffs);
        for ((d, c), s) in self.ux.iter_mut().zip(coeffs).zip(&self.derivative) {
            *d = c * s;
        }
        self.grid.inverse_in_place(&mut self.u);
        self.grid.inverse_in_place(&mut self.ux);
        for j in 0..coeffs.len() {
            let (u, ux) = (self.u[j].re, self.ux[j].re);
            self.prod[j] = Complex64::new(u * ux, 0.0);
            self.square[j] = Complex64::new(ux * ux, 0.0);
        }
        self.grid.forward_in_place(&mut self.prod);
        self.grid.forward_in_place(&mut self.square);

        let drive = 2.0 * self.mu0 * (-self.lambda * t).exp();
        for j in 0..coeffs.len() {
            let (p, q) = if self.keep[j] {
                (self.prod[j], self.square[j])
            } else {
                (zero, zero)
            };
            out[j] = -p - self.nonlocal[j] * (drive * coeffs[j] + 0.5 * q) - self.lambda * coeffs[j];
        }
    }
}

/// Evaluate the right-hand side at node values `u`.
pub fn rhs(t: f64, u: &Field, mu0: f64, lambda: f64, dealias: bool) -> Field {
    let grid = u.grid();
    let mut op = Rhs::new(grid, mu0, lambda, dealias);
    let coeffs = u.coefficients();
    let mut out = vec![Complex64::new(0.0, 0.0); coeffs.len()];
    op.eval(t, &coeffs, &mut out);
    Field::from_coefficients(grid, &out)
}

/// Hook into the RK4 stages, used to integrate quantities along with `u`.
pub trait StageObserver {
    fn begin_step(&mut self, _t: f64, _dt: f64) {}
    /// `coeffs` is the stage state; stage `i` sits at `t + c_i dt` with
    /// `c = [0, 1/2, 1/2, 1]`.
    fn stage(&mut self, _index: usize, _coeffs: &[Complex64]) {}
    fn end_step(&mut self) -> Result<()> {
        Ok(())
    }
    fn snapshot(&mut self, _t: f64, _coeffs: &[Complex64]) {}
}

impl StageObserver for () {}

/// RK4 stage offsets.
pub const RK4_NODES: [f64; 4] = [0.0, 0.5, 0.5, 1.0];
/// RK4 weights.
pub const RK4_WEIGHTS: [f64; 4] = [1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0];

/// Classical RK4 on spectral coefficients.
pub struct Integrator {
    rhs: Rhs,
    coeffs: Vec<Complex64>,
    t: f64,
    k: [Vec<Complex64>; 4],
    stage: Vec<Complex64>,
}

impl Integrator {
    pub fn new(u0: &Field, t0: f64, mu0: f64, lambda: f64, dealias: bool) -> Self {
        let grid = u0.grid();
        let n = grid.n_points();
        let zero = Complex64::new(0.0, 0.0);
        Self {
            rhs: Rhs::new(grid, mu0, lambda, dealias),
            coeffs: u0.coefficients(),
            t: t0,
            k: std::array::from_fn(|_| vec![zero; n]),
            stage: vec![zero; n],
        }
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn field(&self) -> Field {
        Field::from_coefficients(&self.rhs.grid, &self.coeffs)
    }

    /// `sup |u|` and `sup |u_x|` at the nodes.
    pub fn sup_norms(&self) -> (f64, f64) {
        let grid = &self.rhs.grid;
        let u = grid.inverse(&self.coeffs);
        let ux_hat: Vec<Complex64> = self
            .coeffs
            .iter()
            .zip(self.rhs.derivative_symbol())
            .map(|(c, d)| c * d)
            .collect();
        let ux = grid.inverse(&ux_hat);
        let sup = |v: &[f64]| {
            v.iter().fold(0.0_f64, |m, x| {
                if x.is_finite() {
                    m.max(x.abs())
                } else {
                    f64::INFINITY
                }
            })
        };
        (sup(&u), sup(&ux))
    }

    pub fn step(&mut self, dt: f64, observer: &mut dyn StageObserver) -> Result<()> {
        let t = self.t;
        observer.begin_step(t, dt);
        for i in 0..4 {
            if i == 0 {
                self.stage.copy_from_slice(&self.coeffs);
            } else {
                let a = RK4_NODES[i] * dt;
                for ((s, c), k) in self.stage.iter_mut().zip(&self.coeffs).zip(&self.k[i - 1]) {
                    *s = c + a * k;
                }
            }
            observer.stage(i, &self.stage);
            let (stage, k) = (&self.stage, &mut self.k[i]);
            self.rhs.eval(t + RK4_NODES[i] * dt, stage, k);
        }
        for j in 0..self.coeffs.len() {
            let incr = RK4_WEIGHTS[0] * self.k[0][j]
                + RK4_WEIGHTS[1] * self.k[1][j]
                + RK4_WEIGHTS[2] * self.k[2][j]
                + RK4_WEIGHTS[3] * self.k[3][j];
            self.coeffs[j] += dt * incr;
        }
        self.t = t + dt;
        observer.end_step()
    }

    pub(crate) fn set_time(&mut self, t: f64) {
        self.t = t;
    }
}

/// One RK4 step of a single state. Fails with [`Error::BlowupGuard`] when
/// `sup |u_x|` exceeds `guard` afterwards.
pub fn step_rk4(
    state: &SolverState,
    dt: f64,
    lambda: f64,
    dealias: bool,
    guard: Option<f64>,
) -> Result<SolverState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidArgument(format!("time step {dt} must be positive")));
    }
    let mut integ = Integrator::new(&state.u, state.t, state.mu0, lambda, dealias);
    integ.step(dt, &mut ())?;
    let threshold = guard.unwrap_or_else(|| default_blowup_guard(state.mu0, state.mu1));
    let (_, sup_ux) = integ.sup_norms();
    if !(sup_ux <= threshold) {
        return Err(Error::BlowupGuard {
            t: integ.time(),
            sup_ux,
            threshold,
        });
    }
    Ok(SolverState {
        t: integ.time(),
        u: integ.field(),
        mu0: state.mu0,
        mu1: state.mu1,
    })
}

/// Integrate `ic` up to `config.t_end`.
pub fn simulate(config: &SolverConfig, ic: &InitialCondition) -> Result<Trajectory> {
    simulate_observed(config, ic, &mut ())
}

pub fn simulate_observed(
    config: &SolverConfig,
    ic: &InitialCondition,
    observer: &mut dyn StageObserver,
) -> Result<Trajectory> {
    config.validate()?;
    if ic.grid().n_points() != config.n_points {
        return Err(Error::SamplingMismatch(format!(
            "initial data has {} points, config asks for {}",
            ic.grid().n_points(),
            config.n_points
        )));
    }
    let u0 = ic.evolution_data()?;
    let start = SolverState::initial(u0);
    simulate_from(config, start, observer)
}

/// Integrate from an explicit starting state at `t = 0`.
pub fn simulate_from(
    config: &SolverConfig,
    start: SolverState,
    observer: &mut dyn StageObserver,
) -> Result<Trajectory> {
    config.validate()?;
    let (mu0, mu1) = (start.mu0, start.mu1);
    let guard = config
        .blowup_guard
        .unwrap_or_else(|| default_blowup_guard(mu0, mu1));
    let grid = start.u.grid().clone();
    let dx = grid.spacing();
    let mut integ = Integrator::new(&start.u, 0.0, mu0, config.lambda, config.dealias);

    let mut traj = Trajectory {
        config: config.clone(),
        times: vec![0.0],
        steps: vec![0],
        snapshots: vec![start.u],
        status: RunStatus::Completed,
        mu0,
        mu1,
    };
    observer.snapshot(0.0, integ.coefficients());

    let schedule = config.fixed_schedule();
    let mut step: u64 = 0;
    loop {
        let (dt, t_next, last) = match (schedule, config.stepping) {
            (Some((n, h)), _) => {
                let t_next = if step + 1 == n {
                    config.t_end
                } else {
                    (step + 1) as f64 * h
                };
                (t_next - integ.time(), t_next, step + 1 == n)
            }
            (None, TimeStepping::Cfl { safety }) => {
                let (sup_u, _) = integ.sup_norms();
                let dt = safety * dx / (sup_u + CFL_EPSILON);
                let remaining = config.t_end - integ.time();
                if dt >= remaining * (1.0 - 1e-12) {
                    (remaining, config.t_end, true)
                } else {
                    (dt, integ.time() + dt, false)
                }
            }
            (None, TimeStepping::Fixed { .. }) => unreachable!("fixed stepping has a schedule"),
        };
        if step + 1 > MAX_STEPS {
            return Err(Error::StepBudget {
                steps: step + 1,
                limit: MAX_STEPS,
            });
        }
        integ.step(dt, observer)?;
        integ.set_time(t_next);
        step += 1;

        let (_, sup_ux) = integ.sup_norms();
        let tripped = !(sup_ux <= guard);
        if tripped || last || step % config.snapshot_stride as u64 == 0 {
            traj.times.push(integ.time());
            traj.steps.push(step);
            traj.snapshots.push(Field::from_coefficients(&grid, integ.coefficients()));
            observer.snapshot(integ.time(), integ.coefficients());
        }
        if tripped {
            traj.status = RunStatus::BlowupGuardTriggered {
                t: integ.time(),
                sup_ux,
            };
            break;
        }
        if last {
            break;
        }
    }
    Ok(traj)
}
