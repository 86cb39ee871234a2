//! Flow map `q_t = u(t, q)`, `q(0, x) = x`, integrated inside the solver's RK4
//! stages, with the stretch `q_x = exp(int_0^t u_x(s, q) ds)` and the momentum
//! transported along each path.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evolution::{simulate_observed, SolverConfig, StageObserver, Trajectory, RK4_NODES, RK4_WEIGHTS};
use crate::grid::{denoise, interpolate_with_slope, interpolate_coefficients, PeriodicGrid};
use crate::initial::InitialCondition;
use crate::operator::a_symbol;

pub const DEFAULT_SEEDS: usize = 16;

/// `k` equispaced seeds `j / k`.
pub fn equispaced_seeds(k: usize) -> Vec<f64> {
    (0..k).map(|j| j as f64 / k as f64).collect()
}

/// Per-(time, seed) tables; outer index is the snapshot.
#[derive(Clone, Debug)]
pub struct CharacteristicsTrack {
    pub seeds: Vec<f64>,
    pub times: Vec<f64>,
    /// Lifted positions: `q(t, x) - x` is continuous in `t`, not reduced mod 1.
    pub q: Vec<Vec<f64>>,
    pub qx: Vec<Vec<f64>>,
    /// `y(t, q(t, x))` with `y = A u`.
    pub y_along: Vec<Vec<f64>>,
    /// `y0` at the seeds.
    pub y0: Vec<f64>,
    pub lambda: f64,
}

impl CharacteristicsTrack {
    pub fn wrapped_q(&self, time: usize, seed: usize) -> f64 {
        self.q[time][seed].rem_euclid(1.0)
    }

    /// `y(t, q) q_x^2 - y0 e^{-lambda t}` from the quantities recorded in-flight.
    pub fn residuals(&self) -> Vec<Vec<f64>> {
        self.times
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let decay = (-self.lambda * t).exp();
                (0..self.seeds.len())
                    .map(|s| self.y_along[i][s] * self.qx[i][s].powi(2) - self.y0[s] * decay)
                    .collect()
            })
            .collect()
    }

    pub fn min_qx(&self) -> f64 {
        self.qx.iter().flatten().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    /// Whether the cyclic order of the seeds survives at every recorded time:
    /// sorted by seed, lifted positions increase and span less than one period.
    pub fn order_preserved(&self) -> bool {
        let mut order: Vec<usize> = (0..self.seeds.len()).collect();
        order.sort_by(|&a, &b| self.seeds[a].total_cmp(&self.seeds[b]));
        self.q.iter().all(|row| {
            let lifted: Vec<f64> = order.iter().map(|&s| row[s]).collect();
            let increasing = lifted.windows(2).all(|w| w[1] > w[0]);
            let span = match (lifted.first(), lifted.last()) {
                (Some(a), Some(b)) => b - a,
                _ => 0.0,
            };
            increasing && span < 1.0
        })
    }

    /// Central differences of `q` across neighbouring seeds at snapshot `time`,
    /// for equispaced seeds. Uses `q(t, x + 1) = q(t, x) + 1` at the ends.
    pub fn qx_finite_difference(&self, time: usize) -> Vec<f64> {
        let k = self.seeds.len();
        let h = 1.0 / k as f64;
        let row = &self.q[time];
        (0..k)
            .map(|s| {
                let next = if s + 1 == k { row[0] + 1.0 } else { row[s + 1] };
                let prev = if s == 0 { row[k - 1] - 1.0 } else { row[s - 1] };
                (next - prev) / (2.0 * h)
            })
            .collect()
    }
}

/// Sup over all entries of a residual table.
pub fn sup_abs(table: &[Vec<f64>]) -> f64 {
    table.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()))
}

fn momentum_coefficients(grid: &PeriodicGrid, coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut y = coeffs.to_vec();
    // rounding noise in high modes is amplified by k^2
    denoise(&mut y);
    for (j, c) in y.iter_mut().enumerate() {
        *c *= a_symbol(grid, j);
    }
    y
}

struct FlowObserver {
    grid: PeriodicGrid,
    q: Vec<f64>,
    log_qx: Vec<f64>,
    kq: [Vec<f64>; 4],
    kl: [Vec<f64>; 4],
    t: f64,
    dt: f64,
    times: Vec<f64>,
    q_rows: Vec<Vec<f64>>,
    qx_rows: Vec<Vec<f64>>,
    y_rows: Vec<Vec<f64>>,
}

impl FlowObserver {
    fn new(grid: &PeriodicGrid, seeds: &[f64]) -> Self {
        let k = seeds.len();
        Self {
            grid: grid.clone(),
            q: seeds.to_vec(),
            log_qx: vec![0.0; k],
            kq: std::array::from_fn(|_| vec![0.0; k]),
            kl: std::array::from_fn(|_| vec![0.0; k]),
            t: 0.0,
            dt: 0.0,
            times: Vec::new(),
            q_rows: Vec::new(),
            qx_rows: Vec::new(),
            y_rows: Vec::new(),
        }
    }
}

impl StageObserver for FlowObserver {
    fn begin_step(&mut self, t: f64, dt: f64) {
        self.t = t;
        self.dt = dt;
    }

    fn stage(&mut self, index: usize, coeffs: &[Complex64]) {
        let a = RK4_NODES[index] * self.dt;
        for s in 0..self.q.len() {
            let q = if index == 0 {
                self.q[s]
            } else {
                self.q[s] + a * self.kq[index - 1][s]
            };
            let (u, ux) = interpolate_with_slope(coeffs, q);
            self.kq[index][s] = u;
            self.kl[index][s] = ux;
        }
    }

    fn end_step(&mut self) -> Result<()> {
        let dt = self.dt;
        for s in 0..self.q.len() {
            let (mut dq, mut dl) = (0.0, 0.0);
            for i in 0..4 {
                dq += RK4_WEIGHTS[i] * self.kq[i][s];
                dl += RK4_WEIGHTS[i] * self.kl[i][s];
            }
            self.q[s] += dt * dq;
            self.log_qx[s] += dt * dl;
            let qx = self.log_qx[s].exp();
            if !(qx > 0.0 && qx.is_finite()) {
                return Err(Error::CharacteristicCollapse {
                    seed: s as f64,
                    t: self.t + dt,
                });
            }
        }
        Ok(())
    }

    fn snapshot(&mut self, t: f64, coeffs: &[Complex64]) {
        let y = momentum_coefficients(&self.grid, coeffs);
        self.times.push(t);
        self.q_rows.push(self.q.clone());
        self.qx_rows.push(self.log_qx.iter().map(|l| l.exp()).collect());
        self.y_rows
            .push(self.q.iter().map(|&q| interpolate_coefficients(&y, q)).collect());
    }
}

fn check_seeds(seeds: &[f64]) -> Result<()> {
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("at least one seed is required".into()));
    }
    if let Some(bad) = seeds.iter().find(|s| !(0.0..1.0).contains(*s)) {
        return Err(Error::InvalidArgument(format!("seed {bad} is outside [0, 1)")));
    }
    Ok(())
}

/// Run the solver and carry the characteristics from `seeds` along with it.
pub fn advect(
    config: &SolverConfig,
    ic: &InitialCondition,
    seeds: &[f64],
) -> Result<(Trajectory, CharacteristicsTrack)> {
    check_seeds(seeds)?;
    let mut obs = FlowObserver::new(ic.grid(), seeds);
    let traj = simulate_observed(config, ic, &mut obs).map_err(|e| match e {
        Error::CharacteristicCollapse { seed, t } => Error::CharacteristicCollapse {
            seed: seeds[seed as usize],
            t,
        },
        other => other,
    })?;
    let y0 = obs.y_rows[0].clone();
    let track = CharacteristicsTrack {
        seeds: seeds.to_vec(),
        times: obs.times,
        q: obs.q_rows,
        qx: obs.qx_rows,
        y_along: obs.y_rows,
        y0,
        lambda: config.lambda,
    };
    Ok((traj, track))
}

/// `y(t, q(t, x)) q_x^2 - y0(x) e^{-lambda t}` with `y = A u` re-derived from
/// the trajectory snapshots.
pub fn conserved_density_residual(
    track: &CharacteristicsTrack,
    trajectory: &Trajectory,
) -> Result<Vec<Vec<f64>>> {
    if track.times != trajectory.times {
        return Err(Error::SamplingMismatch(format!(
            "track has {} times, trajectory has {}",
            track.times.len(),
            trajectory.times.len()
        )));
    }
    let grid = trajectory.grid();
    let y_initial = momentum_coefficients(grid, &trajectory.snapshots[0].coefficients());
    let y0: Vec<f64> = track
        .seeds
        .iter()
        .map(|&x| interpolate_coefficients(&y_initial, x))
        .collect();
    let lambda = trajectory.config.lambda;
    Ok(trajectory
        .snapshots
        .iter()
        .enumerate()
        .map(|(i, snap)| {
            let y = momentum_coefficients(grid, &snap.coefficients());
            let decay = (-lambda * track.times[i]).exp();
            (0..track.seeds.len())
                .map(|s| {
                    interpolate_coefficients(&y, track.q[i][s]) * track.qx[i][s].powi(2)
                        - y0[s] * decay
                })
                .collect()
        })
        .collect())
}
