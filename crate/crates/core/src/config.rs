//! JSON run configuration.
//!
//! ```json
//! {
//!   "grid": {"n_points": 256},
//!   "equation": {"lambda": 0.5},
//!   "time": {"t_end": 1.0, "dt": 0.001, "cfl_safety": null, "snapshot_stride": 10},
//!   "initial": {"kind": "cosine", "params": {"a": 1.0, "b": 0.02}, "mollify_n": null},
//!   "solver": {"dealias": true, "blowup_guard": null},
//!   "output": {"dir": "out"}
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{SolverConfig, TimeStepping, DEFAULT_SNAPSHOT_STRIDE};
use crate::grid::{make_grid, Field};
use crate::initial::{cosine_data, from_field, peakon_data, InitialCondition};

pub const DEFAULT_OUTPUT_DIR: &str = "out";

/// Tolerance of the sign classification of file data.
pub const FILE_SIGN_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridBlock {
    n_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EquationBlock {
    lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TimeBlock {
    t_end: f64,
    #[serde(default)]
    dt: Option<f64>,
    #[serde(default)]
    cfl_safety: Option<f64>,
    #[serde(default = "default_stride")]
    snapshot_stride: usize,
}

fn default_stride() -> usize {
    DEFAULT_SNAPSHOT_STRIDE
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverBlock {
    #[serde(default = "default_true")]
    dealias: bool,
    #[serde(default)]
    blowup_guard: Option<f64>,
}

impl Default for SolverBlock {
    fn default() -> Self {
        Self {
            dealias: true,
            blowup_guard: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputBlock {
    #[serde(default = "default_dir")]
    dir: PathBuf,
}

fn default_dir() -> PathBuf {
    PathBuf::from(DEFAULT_OUTPUT_DIR)
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum InitialKind {
    Cosine,
    Peakon,
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialBlock {
    kind: InitialKind,
    params: serde_json::Value,
    #[serde(default)]
    mollify_n: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    grid: GridBlock,
    equation: EquationBlock,
    time: TimeBlock,
    initial: InitialBlock,
    #[serde(default)]
    solver: SolverBlock,
    #[serde(default)]
    output: OutputBlock,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct CosineParams {
    a: f64,
    b: f64,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct PeakonParams {
    p: f64,
    x0: f64,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileParams {
    path: PathBuf,
}

/// Initial data as configured.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialSpec {
    Cosine { a: f64, b: f64 },
    Peakon { p: f64, x0: f64 },
    /// Node values, one per line; relative paths resolve against the config file.
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub initial: InitialSpec,
    pub mollify_n: Option<usize>,
    pub output_dir: PathBuf,
}

fn parse_params<T: for<'de> Deserialize<'de>>(value: &serde_json::Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner == "." {
            "initial.params".to_string()
        } else {
            format!("initial.params.{inner}")
        };
        Error::config(path, e.into_inner().to_string())
    })
}

/// Parse and validate a configuration document.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de)
        .map_err(|e| Error::config(e.path().to_string(), e.into_inner().to_string()))?;

    if !(raw.equation.lambda.is_finite() && raw.equation.lambda >= 0.0) {
        return Err(Error::config("equation.lambda", "must be finite and >= 0"));
    }
    let n = raw.grid.n_points;
    if n < 8 || n % 2 != 0 {
        return Err(Error::config("grid.n_points", format!("{n} must be even and >= 8")));
    }
    let stepping = match (raw.time.dt, raw.time.cfl_safety) {
        (Some(dt), None) => TimeStepping::Fixed { dt },
        (None, Some(safety)) => TimeStepping::Cfl { safety },
        _ => {
            return Err(Error::config(
                "time.dt",
                "exactly one of time.dt and time.cfl_safety must be set",
            ))
        }
    };
    let solver = SolverConfig {
        lambda: raw.equation.lambda,
        n_points: n,
        t_end: raw.time.t_end,
        stepping,
        dealias: raw.solver.dealias,
        snapshot_stride: raw.time.snapshot_stride,
        blowup_guard: raw.solver.blowup_guard,
    };
    solver.validate()?;

    let initial = match raw.initial.kind {
        InitialKind::Cosine => {
            let p: CosineParams = parse_params(&raw.initial.params)?;
            InitialSpec::Cosine { a: p.a, b: p.b }
        }
        InitialKind::Peakon => {
            let p: PeakonParams = parse_params(&raw.initial.params)?;
            if p.p == 0.0 {
                return Err(Error::config("initial.params.p", "peakon amplitude must be nonzero"));
            }
            if !(0.0..1.0).contains(&p.x0) {
                return Err(Error::config("initial.params.x0", "must lie in [0, 1)"));
            }
            InitialSpec::Peakon { p: p.p, x0: p.x0 }
        }
        InitialKind::File => {
            let p: FileParams = parse_params(&raw.initial.params)?;
            InitialSpec::File { path: p.path }
        }
    };
    if let Some(m) = raw.initial.mollify_n {
        if m < crate::mollifier::MIN_INDEX {
            return Err(Error::config("initial.mollify_n", "must be at least 3"));
        }
    }
    Ok(RunConfig {
        solver,
        initial,
        mollify_n: raw.initial.mollify_n,
        output_dir: raw.output.dir,
    })
}

/// Read, parse and validate a configuration file. A relative `file` path is
/// resolved against the directory of `path`.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let mut cfg = parse_config_str(&text)?;
    if let InitialSpec::File { path: data } = &mut cfg.initial {
        if data.is_relative() {
            if let Some(dir) = path.parent() {
                *data = dir.join(&*data);
            }
        }
    }
    Ok(cfg)
}

/// Parse a column of node values.
pub fn read_node_values(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, l)| {
            l.parse::<f64>().map_err(|e| {
                Error::config("initial.params.path", format!("line {}: {e}", i + 1))
            })
        })
        .collect()
}

impl RunConfig {
    pub fn initial_condition(&self) -> Result<InitialCondition> {
        let grid = make_grid(self.solver.n_points)?;
        let ic = match &self.initial {
            InitialSpec::Cosine { a, b } => cosine_data(&grid, *a, *b)?,
            InitialSpec::Peakon { p, x0 } => peakon_data(&grid, *p, *x0)?,
            InitialSpec::File { path } => {
                let values = read_node_values(path)?;
                if values.len() != grid.n_points() {
                    return Err(Error::config(
                        "initial.params.path",
                        format!("{} values for a grid of {} points", values.len(), grid.n_points()),
                    ));
                }
                from_field(Field::new(&grid, values)?, FILE_SIGN_TOLERANCE)
            }
        };
        Ok(ic.with_mollification(self.mollify_n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::SignClass;

    const MINIMAL: &str = r#"{
        "grid": {"n_points": 64},
        "equation": {"lambda": 0.5},
        "time": {"t_end": 1.0, "dt": 0.001},
        "initial": {"kind": "cosine", "params": {"a": 1.0, "b": 0.02}}
    }"#;

    fn path_of(err: Error) -> String {
        match err {
            Error::Config { path, .. } => path,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config_str(MINIMAL).unwrap();
        assert!(cfg.solver.dealias);
        assert_eq!(cfg.solver.snapshot_stride, 10);
        assert_eq!(cfg.solver.blowup_guard, None);
        assert_eq!(cfg.solver.stepping, TimeStepping::Fixed { dt: 0.001 });
        assert_eq!(cfg.output_dir, PathBuf::from("out"));
        assert_eq!(cfg.mollify_n, None);
        let ic = cfg.initial_condition().unwrap();
        assert_eq!(ic.sign_class, SignClass::YNonneg);
    }

    #[test]
    fn rejections_name_the_field() {
        let neg = MINIMAL.replace("\"lambda\": 0.5", "\"lambda\": -1");
        assert_eq!(path_of(parse_config_str(&neg).unwrap_err()), "equation.lambda");
        let odd = MINIMAL.replace("\"n_points\": 64", "\"n_points\": 255");
        assert_eq!(path_of(parse_config_str(&odd).unwrap_err()), "grid.n_points");
        let both = MINIMAL.replace("\"dt\": 0.001", "\"dt\": 0.001, \"cfl_safety\": 0.5");
        assert_eq!(path_of(parse_config_str(&both).unwrap_err()), "time.dt");
        let typo = MINIMAL.replace("\"a\": 1.0", "\"aa\": 1.0");
        assert!(path_of(parse_config_str(&typo).unwrap_err()).starts_with("initial.params"));
        let wrong_type = MINIMAL.replace("\"n_points\": 64", "\"n_points\": \"many\"");
        assert_eq!(path_of(parse_config_str(&wrong_type).unwrap_err()), "grid.n_points");
        let bad_n = MINIMAL.replace("\"b\": 0.02}", "\"b\": 0.02}, \"mollify_n\": 2");
        assert_eq!(path_of(parse_config_str(&bad_n).unwrap_err()), "initial.mollify_n");
    }

    #[test]
    fn peakon_and_file_kinds() {
        let peakon = MINIMAL.replace(
            "\"kind\": \"cosine\", \"params\": {\"a\": 1.0, \"b\": 0.02}",
            "\"kind\": \"peakon\", \"params\": {\"p\": 1.0, \"x0\": 0.5}, \"mollify_n\": 8",
        );
        let cfg = parse_config_str(&peakon).unwrap();
        assert_eq!(cfg.initial, InitialSpec::Peakon { p: 1.0, x0: 0.5 });
        assert!(cfg.initial_condition().unwrap().is_measure());

        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("u0.csv");
        let values: Vec<String> = (0..64).map(|j| format!("{}", 2.0 + (j as f64 * 0.1).sin() * 1e-3)).collect();
        std::fs::write(&data, values.join("\n")).unwrap();
        let text = MINIMAL.replace(
            "\"kind\": \"cosine\", \"params\": {\"a\": 1.0, \"b\": 0.02}",
            "\"kind\": \"file\", \"params\": {\"path\": \"u0.csv\"}",
        );
        let cfg_path = dir.path().join("cfg.json");
        std::fs::write(&cfg_path, text).unwrap();
        let cfg = parse_config(&cfg_path).unwrap();
        let ic = cfg.initial_condition().unwrap();
        assert!((ic.mu0 - 2.0).abs() < 1e-2);

        std::fs::write(&data, "1.0\n2.0\n").unwrap();
        assert!(parse_config(&cfg_path).unwrap().initial_condition().is_err());
    }
}
