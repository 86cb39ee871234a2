//! Families of mollified runs `u^n`: uniform-in-`n` bounds, space-time
//! bounds, Helly hypotheses and sup-norm convergence.

use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::{trajectory_records, DiagnosticsRecord, SUP_CONSTANT};
use crate::error::{Error, Result};
use crate::evolution::{rhs, simulate, RunStatus, SolverConfig, Trajectory};
use crate::grid::{derivative, Field};
use crate::initial::InitialCondition;
use crate::operator::dx_ainv;

/// Tolerance on equalities and slack on inequalities of the per-member checks.
pub const BOUND_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: &'static str,
    /// Largest excess over the bound (inequalities) or largest absolute
    /// defect (equalities); passing values are at most `tolerance`.
    pub max_excess: f64,
    pub tolerance: f64,
    pub worst_t: f64,
    pub passed: bool,
}

impl BoundCheck {
    fn over(
        name: &'static str,
        tolerance: f64,
        records: &[DiagnosticsRecord],
        excess: impl Fn(&DiagnosticsRecord) -> f64,
    ) -> Self {
        let (worst_t, max_excess) = records
            .iter()
            .map(|r| (r.t, excess(r)))
            .fold((0.0, f64::NEG_INFINITY), |a, b| if !(b.1 <= a.1) { b } else { a });
        Self {
            name,
            max_excess,
            tolerance,
            worst_t,
            passed: max_excess <= tolerance,
        }
    }
}

/// Space-time norms over `[0, T] x S` and the bounds they are held against.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpaceTimeReport {
    /// `||u||^2_{L^2}` and its bound `(|mu0| + c mu1)^2 T`.
    pub u_sq: f64,
    pub u_sq_bound: f64,
    /// `||u_x||^2_{L^2}` and its bound `mu1^2 T`.
    pub ux_sq: f64,
    pub ux_sq_bound: f64,
    /// `||u u_x||_{L^2}` against `sqrt(T) (|mu0| + c mu1) |mu0|`.
    pub uux: f64,
    pub uux_bound: f64,
    /// The same norm against `(|mu0| + c mu1) |mu0|` with no time factor.
    pub uux_bound_literal: f64,
    pub uux_literal_holds: bool,
    /// `||d/dx g * (2 mu0 e^{-lambda t} u + u_x^2 / 2)||_{L^2}` against
    /// `T^2/12 (mu0^2 + (|mu0| + c mu1)^2 + mu1^2)`.
    pub nonlocal: f64,
    pub nonlocal_bound: f64,
    /// `int int u^2 + u_x^2 + u_t^2`, with `u_t` from the right-hand side.
    pub h1: f64,
    /// Explicit constant assembled from the bounds above and
    /// `||u_t|| <= ||u u_x|| + ||nonlocal|| + lambda ||u||`.
    pub k_bound: f64,
}

impl SpaceTimeReport {
    /// All bounds except the literal mixed-norm form.
    pub fn holds(&self, slack: f64) -> bool {
        self.u_sq <= self.u_sq_bound + slack
            && self.ux_sq <= self.ux_sq_bound + slack
            && self.uux <= self.uux_bound + slack
            && self.nonlocal <= self.nonlocal_bound + slack
            && self.h1 <= self.k_bound + slack
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MemberReport {
    pub n: usize,
    pub status: RunStatus,
    pub bounds: Vec<BoundCheck>,
    pub spacetime: SpaceTimeReport,
    pub max_tv_ux: f64,
    pub max_sup_ux: f64,
    #[serde(skip)]
    pub records: Vec<DiagnosticsRecord>,
    #[serde(skip)]
    pub trajectory: Trajectory,
}

impl MemberReport {
    pub fn bounds_hold(&self) -> bool {
        self.bounds.iter().all(|b| b.passed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// The member with the largest index.
    FinestMember,
    /// A run from the unmollified data.
    Unmollified,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub ns: Vec<usize>,
    pub lambda: f64,
    pub t_end: f64,
    pub mu0: f64,
    pub mu1: f64,
    pub reference: Reference,
    pub members: Vec<MemberReport>,
    /// `sup |u^n - u^ref|` over recorded times and nodes, one per member;
    /// `None` when the sampling differs (a guard stopped one of the runs).
    pub sup_distances: Vec<Option<f64>>,
    /// Distances between consecutive members.
    pub consecutive_distances: Vec<Option<f64>>,
}

impl ConvergenceReport {
    pub fn uniform_bounds_hold(&self) -> bool {
        self.members.iter().all(MemberReport::bounds_hold)
    }

    pub fn consecutive_strictly_decreasing(&self) -> bool {
        let d: Option<Vec<f64>> = self.consecutive_distances.iter().copied().collect();
        d.is_some_and(|d| d.windows(2).all(|w| w[1] < w[0]))
    }

    /// `2 |mu0| + (sqrt 3 / 6) mu1`.
    pub fn helly_constant(&self) -> f64 {
        2.0 * self.mu0.abs() + SUP_CONSTANT * self.mu1
    }
}

/// Max of `|u_a - u_b|` over all recorded times and nodes.
pub fn sup_distance(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(Error::SamplingMismatch(format!(
            "grids of {} and {} points",
            a.grid().n_points(),
            b.grid().n_points()
        )));
    }
    if a.times != b.times {
        return Err(Error::SamplingMismatch(format!(
            "{} and {} recorded times",
            a.times.len(),
            b.times.len()
        )));
    }
    Ok(a.snapshots
        .iter()
        .zip(&b.snapshots)
        .map(|(u, v)| u.sup_distance(v))
        .fold(0.0, f64::max))
}

fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

fn mean_square(f: &Field) -> f64 {
    f.values().iter().map(|v| v * v).sum::<f64>() / f.len() as f64
}

fn spacetime(traj: &Trajectory, mu0: f64, mu1: f64) -> SpaceTimeReport {
    let lambda = traj.config.lambda;
    let t = *traj.times.last().unwrap_or(&0.0);
    let mut u_sq = Vec::new();
    let mut ux_sq = Vec::new();
    let mut ut_sq = Vec::new();
    let mut uux_sq = Vec::new();
    let mut nl_sq = Vec::new();
    for (&s, u) in traj.times.iter().zip(&traj.snapshots) {
        let ux = derivative(u);
        let ut = rhs(s, u, traj.mu0, lambda, traj.config.dealias);
        let drive = 2.0 * traj.mu0 * (-lambda * s).exp();
        let source = u.zip_map(&ux, |a, b| drive * a + 0.5 * b * b);
        u_sq.push(mean_square(u));
        ux_sq.push(mean_square(&ux));
        ut_sq.push(mean_square(&ut));
        uux_sq.push(mean_square(&u.zip_map(&ux, |a, b| a * b)));
        nl_sq.push(mean_square(&dx_ainv(&source)));
    }
    let times = &traj.times;
    let sup = mu0.abs() + SUP_CONSTANT * mu1;
    let u_sq_int = trapezoid(times, &u_sq);
    let uux = trapezoid(times, &uux_sq).sqrt();
    let nonlocal = trapezoid(times, &nl_sq).sqrt();
    let uux_bound = t.sqrt() * sup * mu0.abs();
    let nonlocal_bound = t * t / 12.0 * (mu0 * mu0 + sup * sup + mu1 * mu1);
    let ut_bound = uux_bound + nonlocal_bound + lambda * sup * t.sqrt();
    let u_sq_bound = sup * sup * t;
    let ux_sq_bound = mu1 * mu1 * t;
    let uux_bound_literal = sup * mu0.abs();
    SpaceTimeReport {
        u_sq: u_sq_int,
        u_sq_bound,
        ux_sq: trapezoid(times, &ux_sq),
        ux_sq_bound,
        uux,
        uux_bound,
        uux_bound_literal,
        uux_literal_holds: uux <= uux_bound_literal + BOUND_TOLERANCE,
        nonlocal,
        nonlocal_bound,
        h1: u_sq_int + trapezoid(times, &ux_sq) + trapezoid(times, &ut_sq),
        k_bound: u_sq_bound + ux_sq_bound + ut_bound * ut_bound,
    }
}

fn member_report(n: usize, traj: Trajectory, mu0: f64, mu1: f64) -> MemberReport {
    let records = trajectory_records(&traj);
    let lambda = traj.config.lambda;
    let tol = BOUND_TOLERANCE;
    let own_energy = traj.mu1 * traj.mu1;
    let energy_scale = if own_energy > 0.0 { own_energy } else { 1.0 };
    let decay = |t: f64| (-lambda * t).exp();
    let bounds = vec![
        BoundCheck::over("mean_decay", tol, &records, |r| (r.mean_u - mu0 * decay(r.t)).abs()),
        BoundCheck::over("gradient_energy_decay", tol, &records, |r| {
            (r.grad_l2_sq - own_energy * decay(r.t).powi(2)).abs() / energy_scale
        }),
        BoundCheck::over("gradient_energy_bound", tol, &records, |r| r.grad_l2_sq - mu1 * mu1),
        BoundCheck::over("sup_u_bound", tol, &records, |r| {
            r.sup_u - (mu0.abs() + SUP_CONSTANT * mu1)
        }),
        BoundCheck::over("sup_ux_bound", tol, &records, |r| r.sup_ux - mu0.abs()),
        BoundCheck::over("l1_y_identity", tol, &records, |r| {
            (r.l1_y - mu0.abs() * decay(r.t)).abs()
        }),
        BoundCheck::over("l1_u_identity", tol, &records, |r| {
            (r.l1_u - mu0.abs() * decay(r.t)).abs()
        }),
    ];
    let max_tv_ux = records.iter().fold(0.0_f64, |m, r| m.max(r.tv_ux));
    let max_sup_ux = records.iter().fold(0.0_f64, |m, r| m.max(r.sup_ux));
    MemberReport {
        n,
        status: traj.status,
        bounds,
        spacetime: spacetime(&traj, mu0, mu1),
        max_tv_ux,
        max_sup_ux,
        records,
        trajectory: traj,
    }
}

fn check_ns(ns: &[usize]) -> Result<()> {
    if ns.is_empty() {
        return Err(Error::InvalidArgument("ns must not be empty".into()));
    }
    if let Some(&n) = ns.iter().find(|&&n| n < crate::mollifier::MIN_INDEX) {
        return Err(Error::MollifierIndex(n));
    }
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(format!("ns must be strictly increasing, got {ns:?}")));
    }
    Ok(())
}

/// Run the family on all available cores.
pub fn family_run(config: &SolverConfig, ic: &InitialCondition, ns: &[usize]) -> Result<ConvergenceReport> {
    family_run_with_jobs(config, ic, ns, None)
}

/// Run one simulation per `n` (plus an unmollified reference for smooth
/// data) on at most `jobs` threads.
pub fn family_run_with_jobs(
    config: &SolverConfig,
    ic: &InitialCondition,
    ns: &[usize],
    jobs: Option<usize>,
) -> Result<ConvergenceReport> {
    check_ns(ns)?;
    config.validate()?;
    if jobs == Some(0) {
        return Err(Error::InvalidArgument("jobs must be positive".into()));
    }
    let (mu0, mu1) = ic.continuum_invariants();
    let reference = if ic.is_measure() {
        Reference::FinestMember
    } else {
        Reference::Unmollified
    };

    let mut variants: Vec<Option<usize>> = ns.iter().map(|&n| Some(n)).collect();
    if reference == Reference::Unmollified {
        variants.push(None);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let runs: Vec<Result<Trajectory>> = pool.install(|| {
        variants
            .par_iter()
            .map(|&n| simulate(config, &ic.clone().with_mollification(n)))
            .collect()
    });
    let mut runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let raw = match reference {
        Reference::Unmollified => runs.pop(),
        Reference::FinestMember => None,
    };

    let members: Vec<MemberReport> = pool.install(|| {
        ns.par_iter()
            .zip(runs.into_par_iter())
            .map(|(&n, traj)| member_report(n, traj, mu0, mu1))
            .collect()
    });
    let reference_traj = raw
        .as_ref()
        .unwrap_or_else(|| &members.last().expect("ns is not empty").trajectory);
    let sup_distances = members
        .iter()
        .map(|m| sup_distance(&m.trajectory, reference_traj).ok())
        .collect();
    let consecutive_distances = members
        .windows(2)
        .map(|w| sup_distance(&w[0].trajectory, &w[1].trajectory).ok())
        .collect();
    Ok(ConvergenceReport {
        ns: ns.to_vec(),
        lambda: config.lambda,
        t_end: config.t_end,
        mu0,
        mu1,
        reference,
        members,
        sup_distances,
        consecutive_distances,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HellyViolation {
    pub n: usize,
    pub t: f64,
    /// `"total_variation"` or `"sup"`.
    pub hypothesis: &'static str,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HellyVerdict {
    pub constant: f64,
    pub slack: f64,
    pub max_tv_ux: f64,
    pub max_sup_ux: f64,
    pub passed: bool,
    pub violations: Vec<HellyViolation>,
}

/// Check `V(u_x^n(t)) <= C` and `||u_x^n(t)||_inf <= C` for every member and
/// recorded time, with `C = 2 |mu0| + (sqrt 3 / 6) mu1` plus `slack`.
pub fn helly_report(report: &ConvergenceReport, slack: f64) -> HellyVerdict {
    let constant = report.helly_constant();
    let limit = constant + slack;
    let mut violations = Vec::new();
    let (mut max_tv_ux, mut max_sup_ux) = (0.0_f64, 0.0_f64);
    for m in &report.members {
        for r in &m.records {
            max_tv_ux = max_tv_ux.max(r.tv_ux);
            max_sup_ux = max_sup_ux.max(r.sup_ux);
            if !(r.tv_ux <= limit) {
                violations.push(HellyViolation {
                    n: m.n,
                    t: r.t,
                    hypothesis: "total_variation",
                    value: r.tv_ux,
                });
            }
            if !(r.sup_ux <= limit) {
                violations.push(HellyViolation {
                    n: m.n,
                    t: r.t,
                    hypothesis: "sup",
                    value: r.sup_ux,
                });
            }
        }
    }
    HellyVerdict {
        constant,
        slack,
        max_tv_ux,
        max_sup_ux,
        passed: violations.is_empty(),
        violations,
    }
}
