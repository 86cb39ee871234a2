//! Run orchestration: one function per command, each writing its artifacts
//! and a `manifest.json` into the output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::characteristics::{advect, conserved_density_residual, equispaced_seeds, sup_abs, DEFAULT_SEEDS};
use crate::config::{parse_config, RunConfig};
use crate::convergence::{family_run_with_jobs, helly_report, BoundCheck, HellyVerdict, Reference, SpaceTimeReport};
use crate::diagnostics::{
    energy_balance, expected, trajectory_records, verify_decay, DecayReport, DecayTolerances, DiagnosticsRecord,
};
use crate::error::{Error, Result};
use crate::evolution::{simulate, RunStatus, Trajectory};
use crate::grid::{make_grid, Field, PeriodicGrid};
use crate::operator::{
    check_identity_2_2, convolve_green, convolve_green_corrected, invert_a_explicit, invert_a_spectral,
    CumulativeRule, GreenKernel,
};

/// Slack on the Helly constant used by `converge`.
pub const HELLY_SLACK: f64 = 0.01;
/// Pass threshold of `energy-balance`.
pub const ENERGY_BALANCE_TOLERANCE: f64 = 1e-4;
/// Pairwise agreement required of the three inverse routes.
pub const KERNEL_ROUTE_TOLERANCE: f64 = 1e-8;
pub const KERNEL_IDENTITY_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    KernelCheck,
    Characteristics,
    Converge,
    EnergyBalance,
    Invariants,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::KernelCheck => "kernel-check",
            Command::Characteristics => "characteristics",
            Command::Converge => "converge",
            Command::EnergyBalance => "energy-balance",
            Command::Invariants => "invariants",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOptions {
    /// Overrides the configured output directory.
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub seeds: Option<usize>,
    pub ns: Option<Vec<usize>>,
    pub mollify_n: Option<usize>,
    /// Grid size for `kernel-check`.
    pub n: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifestStatus {
    Completed,
    BlowupGuardTriggered,
    VerificationFailed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: Command,
    /// SHA-256 of the configuration file bytes.
    pub config_hash: Option<String>,
    pub output_dir: PathBuf,
    /// Wall clock, seconds since the Unix epoch.
    pub started_at: f64,
    pub finished_at: f64,
    pub status: ManifestStatus,
    /// Files written, relative to `output_dir`.
    pub files: Vec<String>,
}

/// Every float in CSV output carries 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, files: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), contents)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }
}

fn csv_rows<I>(header: &str, rows: I) -> String
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.into_iter().map(format_float).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub const DIAGNOSTICS_HEADER: &str = "t,mean_u,mean_expected,grad_l2_sq,grad_l2_sq_expected,sup_u,sup_ux,l1_u,l1_y,l1_expected,tv_ux,tv_bound,min_y,max_y";
pub const CHARACTERISTICS_HEADER: &str = "t,seed,q,qx,y_along,residual";
pub const ENERGY_BALANCE_HEADER: &str = "t,f_n,g_n,residual";

pub fn diagnostics_csv(records: &[DiagnosticsRecord], mu0: f64, mu1: f64, lambda: f64) -> String {
    csv_rows(
        DIAGNOSTICS_HEADER,
        records.iter().map(|r| {
            let e = expected(r.t, mu0, mu1, lambda);
            vec![
                r.t,
                r.mean_u,
                e.mean,
                r.grad_l2_sq,
                e.grad_l2_sq,
                r.sup_u,
                r.sup_ux,
                r.l1_u,
                r.l1_y,
                e.l1,
                r.tv_ux,
                e.tv_bound,
                r.min_y,
                r.max_y,
            ]
        }),
    )
}

fn field_csv(field: &Field) -> String {
    let mut out = String::with_capacity(field.len() * 24);
    for v in field.values() {
        out.push_str(&format_float(*v));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct TrajectoryIndex<'a> {
    n_points: usize,
    lambda: f64,
    mu0: f64,
    mu1: f64,
    status: RunStatus,
    times: &'a [f64],
    steps: &'a [u64],
    files: Vec<String>,
}

#[derive(Serialize)]
struct VerifyFile<'a> {
    passed: bool,
    #[serde(flatten)]
    report: &'a DecayReport,
}

fn status_of(traj: &Trajectory, verified: bool) -> ManifestStatus {
    if !traj.completed() {
        ManifestStatus::BlowupGuardTriggered
    } else if verified {
        ManifestStatus::Completed
    } else {
        ManifestStatus::VerificationFailed
    }
}

/// Write `diagnostics.csv` and `verify.json` for a trajectory.
fn write_verification(out: &mut Outputs, traj: &Trajectory, cfg: &RunConfig, sign_class: crate::initial::SignClass) -> Result<bool> {
    let records = trajectory_records(traj);
    let lambda = cfg.solver.lambda;
    out.write("diagnostics.csv", diagnostics_csv(&records, traj.mu0, traj.mu1, lambda).as_bytes())?;
    let report = verify_decay(&records, traj.mu0, traj.mu1, lambda, sign_class, &DecayTolerances::default());
    let passed = report.passed();
    out.json("verify.json", &VerifyFile { passed, report: &report })?;
    Ok(passed)
}

fn run_simulate(cfg: &RunConfig, out: &mut Outputs, snapshots: bool) -> Result<ManifestStatus> {
    let ic = cfg.initial_condition()?;
    let traj = simulate(&cfg.solver, &ic)?;
    if snapshots {
        let mut files = Vec::with_capacity(traj.snapshots.len());
        for (step, u) in traj.steps.iter().zip(&traj.snapshots) {
            let name = format!("u_{step}.csv");
            out.write(&name, field_csv(u).as_bytes())?;
            files.push(name);
        }
        out.json(
            "trajectory.json",
            &TrajectoryIndex {
                n_points: cfg.solver.n_points,
                lambda: cfg.solver.lambda,
                mu0: traj.mu0,
                mu1: traj.mu1,
                status: traj.status,
                times: &traj.times,
                steps: &traj.steps,
                files,
            },
        )?;
    }
    let passed = write_verification(out, &traj, cfg, ic.sign_class)?;
    Ok(status_of(&traj, passed))
}

#[derive(Serialize)]
struct CharacteristicsSummary {
    seeds: usize,
    min_qx: f64,
    order_preserved: bool,
    sup_residual: f64,
    status: RunStatus,
    passed: bool,
}

fn run_characteristics(cfg: &RunConfig, out: &mut Outputs, seeds: usize) -> Result<ManifestStatus> {
    if seeds == 0 {
        return Err(Error::InvalidArgument("--seeds must be positive".into()));
    }
    let ic = cfg.initial_condition()?;
    let (traj, track) = advect(&cfg.solver, &ic, &equispaced_seeds(seeds))?;
    let residual = conserved_density_residual(&track, &traj)?;
    let mut rows = Vec::with_capacity(track.times.len() * seeds);
    for (i, &t) in track.times.iter().enumerate() {
        for s in 0..seeds {
            rows.push(vec![
                t,
                track.seeds[s],
                track.wrapped_q(i, s),
                track.qx[i][s],
                track.y_along[i][s],
                residual[i][s],
            ]);
        }
    }
    out.write("characteristics.csv", csv_rows(CHARACTERISTICS_HEADER, rows).as_bytes())?;
    let min_qx = track.min_qx();
    let order_preserved = track.order_preserved();
    let passed = min_qx > 0.0 && order_preserved;
    out.json(
        "characteristics.json",
        &CharacteristicsSummary {
            seeds,
            min_qx,
            order_preserved,
            sup_residual: sup_abs(&residual),
            status: traj.status,
            passed,
        },
    )?;
    Ok(status_of(&traj, passed))
}

#[derive(Serialize)]
struct MemberSummary<'a> {
    n: usize,
    status: RunStatus,
    bounds_hold: bool,
    bounds: &'a [BoundCheck],
    spacetime: &'a SpaceTimeReport,
    max_tv_ux: f64,
    max_sup_ux: f64,
    diagnostics: String,
}

#[derive(Serialize)]
struct ConvergenceFile<'a> {
    ns: &'a [usize],
    lambda: f64,
    t_end: f64,
    mu0: f64,
    mu1: f64,
    reference: Reference,
    sup_distances: &'a [Option<f64>],
    consecutive_distances: &'a [Option<f64>],
    consecutive_strictly_decreasing: bool,
    uniform_bounds_hold: bool,
    helly: &'a HellyVerdict,
    k_values: Vec<f64>,
    members: Vec<MemberSummary<'a>>,
}

fn run_converge(cfg: &RunConfig, out: &mut Outputs, ns: &[usize], jobs: Option<usize>) -> Result<ManifestStatus> {
    let ic = cfg.initial_condition()?;
    let report = family_run_with_jobs(&cfg.solver, &ic, ns, jobs)?;
    let helly = helly_report(&report, HELLY_SLACK);
    let mut members = Vec::with_capacity(report.members.len());
    for m in &report.members {
        let name = format!("diagnostics_n{}.csv", m.n);
        out.write(
            &name,
            diagnostics_csv(&m.records, m.trajectory.mu0, report.mu1, report.lambda).as_bytes(),
        )?;
        members.push(MemberSummary {
            n: m.n,
            status: m.status,
            bounds_hold: m.bounds_hold(),
            bounds: &m.bounds,
            spacetime: &m.spacetime,
            max_tv_ux: m.max_tv_ux,
            max_sup_ux: m.max_sup_ux,
            diagnostics: name,
        });
    }
    let uniform = report.uniform_bounds_hold();
    out.json(
        "convergence.json",
        &ConvergenceFile {
            ns: &report.ns,
            lambda: report.lambda,
            t_end: report.t_end,
            mu0: report.mu0,
            mu1: report.mu1,
            reference: report.reference,
            sup_distances: &report.sup_distances,
            consecutive_distances: &report.consecutive_distances,
            consecutive_strictly_decreasing: report.consecutive_strictly_decreasing(),
            uniform_bounds_hold: uniform,
            helly: &helly,
            k_values: report.members.iter().map(|m| m.spacetime.h1).collect(),
            members,
        },
    )?;
    let guard = report.members.iter().any(|m| m.status != RunStatus::Completed);
    Ok(if guard {
        ManifestStatus::BlowupGuardTriggered
    } else if uniform && helly.passed {
        ManifestStatus::Completed
    } else {
        ManifestStatus::VerificationFailed
    })
}

#[derive(Serialize)]
struct EnergyBalanceSummary {
    n: usize,
    sup_residual: f64,
    tolerance: f64,
    min_f_n: f64,
    passed: bool,
}

fn run_energy_balance(cfg: &RunConfig, out: &mut Outputs, n: usize) -> Result<ManifestStatus> {
    let ic = cfg.initial_condition()?;
    let traj = simulate(&cfg.solver, &ic)?;
    let eb = energy_balance(&traj, n)?;
    let rows = (0..eb.times.len()).map(|i| vec![eb.times[i], eb.f_n[i], eb.g_n[i], eb.residual[i]]);
    out.write("energy_balance.csv", csv_rows(ENERGY_BALANCE_HEADER, rows).as_bytes())?;
    let sup_residual = eb.sup_residual();
    let min_f_n = eb.f_n.iter().copied().fold(f64::INFINITY, f64::min);
    let passed = sup_residual <= ENERGY_BALANCE_TOLERANCE && min_f_n >= 0.0;
    out.json(
        "energy_balance.json",
        &EnergyBalanceSummary {
            n,
            sup_residual,
            tolerance: ENERGY_BALANCE_TOLERANCE,
            min_f_n,
            passed,
        },
    )?;
    Ok(status_of(&traj, passed))
}

/// Agreement of the three `A^{-1}` routes on random trigonometric polynomials.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelCheckReport {
    pub n_points: usize,
    pub samples: usize,
    pub max_degree: usize,
    pub spectral_vs_explicit: f64,
    pub spectral_vs_convolution: f64,
    pub explicit_vs_convolution: f64,
    pub identity_2_2: f64,
    /// Same comparisons with the second-order variants: cumulative
    /// trapezoid sums and the uncorrected node-sampled convolution.
    pub spectral_vs_explicit_trapezoid: f64,
    pub spectral_vs_convolution_raw: f64,
    pub passed: bool,
}

/// Random real trigonometric polynomial of degree `degree` with coefficients
/// uniform in `[-1, 1]`.
pub fn random_trig_polynomial(grid: &PeriodicGrid, degree: usize, rng: &mut impl Rng) -> Field {
    let c0: f64 = rng.gen_range(-1.0..1.0);
    let terms: Vec<(f64, f64)> = (1..=degree)
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let values = grid
        .nodes()
        .iter()
        .map(|&x| {
            terms.iter().enumerate().fold(c0, |acc, (k, (a, b))| {
                let w = 2.0 * std::f64::consts::PI * (k + 1) as f64 * x;
                acc + a * w.cos() + b * w.sin()
            })
        })
        .collect();
    Field::new(grid, values).expect("finite samples")
}

pub fn kernel_check(n_points: usize, samples: usize, seed: u64) -> Result<KernelCheckReport> {
    let grid = make_grid(n_points)?;
    let kernel = GreenKernel::new(&grid);
    let max_degree = 20.min(n_points / 2 - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = KernelCheckReport {
        n_points,
        samples,
        max_degree,
        spectral_vs_explicit: 0.0,
        spectral_vs_convolution: 0.0,
        explicit_vs_convolution: 0.0,
        identity_2_2: 0.0,
        spectral_vs_explicit_trapezoid: 0.0,
        spectral_vs_convolution_raw: 0.0,
        passed: false,
    };
    for _ in 0..samples {
        let degree = rng.gen_range(0..=max_degree);
        let w = random_trig_polynomial(&grid, degree, &mut rng);
        let spectral = invert_a_spectral(&w);
        let explicit = invert_a_explicit(&w, CumulativeRule::Interpolant);
        let conv = convolve_green_corrected(&kernel, &w);
        r.spectral_vs_explicit = r.spectral_vs_explicit.max(spectral.sup_distance(&explicit));
        r.spectral_vs_convolution = r.spectral_vs_convolution.max(spectral.sup_distance(&conv));
        r.explicit_vs_convolution = r.explicit_vs_convolution.max(explicit.sup_distance(&conv));
        r.identity_2_2 = r.identity_2_2.max(check_identity_2_2(&w));
        let trap = invert_a_explicit(&w, CumulativeRule::Trapezoid);
        let raw = convolve_green(&kernel, &w);
        r.spectral_vs_explicit_trapezoid = r.spectral_vs_explicit_trapezoid.max(spectral.sup_distance(&trap));
        r.spectral_vs_convolution_raw = r.spectral_vs_convolution_raw.max(spectral.sup_distance(&raw));
    }
    r.passed = r.spectral_vs_explicit <= KERNEL_ROUTE_TOLERANCE
        && r.spectral_vs_convolution <= KERNEL_ROUTE_TOLERANCE
        && r.explicit_vs_convolution <= KERNEL_ROUTE_TOLERANCE
        && r.identity_2_2 <= KERNEL_IDENTITY_TOLERANCE;
    Ok(r)
}

/// Samples and seed used by the `kernel-check` command.
pub const KERNEL_CHECK_SAMPLES: usize = 20;
pub const KERNEL_CHECK_SEED: u64 = 20_240_601;

/// Run `command`, writing artifacts and `manifest.json`. `config_path` may
/// be omitted only for `kernel-check`.
pub fn run(command: Command, config_path: Option<&Path>, opts: &RunOptions) -> Result<RunManifest> {
    let started_at = now();
    let (cfg, config_hash) = match config_path {
        Some(p) => {
            let bytes = fs::read(p)?;
            (Some(parse_config(p)?), Some(sha256_hex(&bytes)))
        }
        None => (None, None),
    };
    let output_dir = opts
        .out
        .clone()
        .or_else(|| cfg.as_ref().map(|c| c.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from(crate::config::DEFAULT_OUTPUT_DIR));
    let needs_config = || {
        cfg.as_ref()
            .ok_or_else(|| Error::InvalidArgument(format!("{} requires --config", command.name())))
    };
    let mut out = Outputs::new(output_dir.clone())?;

    let status = match command {
        Command::Simulate => run_simulate(needs_config()?, &mut out, true)?,
        Command::Invariants => run_simulate(needs_config()?, &mut out, false)?,
        Command::Characteristics => {
            run_characteristics(needs_config()?, &mut out, opts.seeds.unwrap_or(DEFAULT_SEEDS))?
        }
        Command::Converge => {
            let ns = opts
                .ns
                .as_deref()
                .ok_or_else(|| Error::InvalidArgument("converge requires --ns".into()))?;
            run_converge(needs_config()?, &mut out, ns, opts.jobs)?
        }
        Command::EnergyBalance => {
            let cfg = needs_config()?;
            let n = opts
                .mollify_n
                .or(cfg.mollify_n)
                .ok_or_else(|| Error::InvalidArgument("energy-balance requires --mollify-n".into()))?;
            run_energy_balance(cfg, &mut out, n)?
        }
        Command::KernelCheck => {
            let n = opts
                .n
                .or(cfg.as_ref().map(|c| c.solver.n_points))
                .ok_or_else(|| Error::InvalidArgument("kernel-check requires --n".into()))?;
            let report = kernel_check(n, KERNEL_CHECK_SAMPLES, KERNEL_CHECK_SEED)?;
            out.json("kernel_check.json", &report)?;
            if report.passed {
                ManifestStatus::Completed
            } else {
                ManifestStatus::VerificationFailed
            }
        }
    };

    let mut manifest = RunManifest {
        command,
        config_hash,
        output_dir,
        started_at,
        finished_at: 0.0,
        status,
        files: out.files.clone(),
    };
    manifest.files.push("manifest.json".into());
    manifest.finished_at = now();
    out.json("manifest.json", &manifest)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_float(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn kernel_check_small_grid() {
        let r = kernel_check(256, 5, 7).unwrap();
        assert_eq!(r.max_degree, 20);
        assert!(r.passed, "{r:?}");
        assert_eq!(kernel_check(16, 1, 0).unwrap().max_degree, 7);
        assert!(r.spectral_vs_convolution_raw > 1e-6);
        assert!(kernel_check(63, 1, 0).is_err());
    }

    #[test]
    fn constant_simulation_writes_expected_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("cfg.json");
        fs::write(
            &cfg_path,
            r#"{"grid": {"n_points": 16}, "equation": {"lambda": 0.3},
                "time": {"t_end": 0.05, "dt": 0.01, "snapshot_stride": 2},
                "initial": {"kind": "cosine", "params": {"a": 0.7, "b": 0.0}}}"#,
        )
        .unwrap();
        let opts = RunOptions {
            out: Some(dir.path().join("run")),
            ..Default::default()
        };
        let m = run(Command::Simulate, Some(&cfg_path), &opts).unwrap();
        assert_eq!(m.status, ManifestStatus::Completed);
        for f in &m.files {
            assert!(dir.path().join("run").join(f).exists(), "{f}");
        }
        for f in ["u_0.csv", "u_2.csv", "u_4.csv", "u_5.csv", "trajectory.json", "diagnostics.csv", "verify.json"] {
            assert!(m.files.iter().any(|x| x == f), "{f}");
        }
        let diag = fs::read_to_string(dir.path().join("run/diagnostics.csv")).unwrap();
        assert_eq!(diag.lines().next().unwrap(), DIAGNOSTICS_HEADER);
    }

    #[test]
    fn commands_without_required_inputs_fail() {
        let dir = tempfile::tempdir().unwrap();
        let opts = RunOptions {
            out: Some(dir.path().to_path_buf()),
            ..Default::default()
        };
        assert!(run(Command::Simulate, None, &opts).is_err());
        assert!(run(Command::KernelCheck, None, &opts).is_err());
    }
}
