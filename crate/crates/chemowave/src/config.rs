//! Flat `key = value` configuration files with bracketed section headers.
//!
//! ```text
//! [model]
//! tau = 1.0
//! chi1 = 0.02
//! ...
//!
//! [grid]
//! x_lo = -20.0
//! x_hi = 40.0
//! n = 8193
//! ```
//!
//! Unknown sections and keys are rejected so typos fail loudly.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::grid::{Grid1D, GridError};
use crate::params::{ModelParams, ParamError};
use crate::sim::{Boundary, ChemMode};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: expected `key = value` or `[section]`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown section `[{section}]`")]
    UnknownSection { line: usize, section: String },
    #[error("unknown key `{key}` in section [{section}]")]
    UnknownKey { section: String, key: String },
    #[error("missing required key `{key}` in section [{section}]")]
    MissingKey { section: String, key: String },
    #[error("key `{key}` in [{section}]: cannot parse `{value}` as {wanted}")]
    BadValue {
        section: String,
        key: String,
        value: String,
        wanted: &'static str,
    },
    #[error("missing required section [{0}]")]
    MissingSection(&'static str),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

const SECTIONS: &[(&str, &[&str])] = &[
    (
        "model",
        &["tau", "chi1", "chi2", "lambda1", "lambda2", "mu1", "mu2", "a", "b"],
    ),
    ("window", &["resolution", "tol"]),
    ("grid", &["x_lo", "x_hi", "n"]),
    (
        "wave",
        &[
            "mu",
            "c",
            "n",
            "dt",
            "inner_tol",
            "outer_tol",
            "max_inner_steps",
            "max_outer_iters",
        ],
    ),
    (
        "sim",
        &[
            "dt",
            "t_end",
            "frame_speed",
            "chem_mode",
            "boundary_mu",
            "initial",
            "initial_value",
            "ramp_x0",
            "ramp_cells",
            "perturb_amp",
            "front_level",
            "sample_every",
            "target",
        ],
    ),
    ("limits", &["scales"]),
    ("output", &["dir"]),
];

type Sections = BTreeMap<String, BTreeMap<String, String>>;

fn parse_sections(text: &str) -> Result<Sections, ConfigError> {
    let mut out: Sections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(name) = trimmed.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim().to_string();
            if !SECTIONS.iter().any(|(s, _)| *s == name) {
                return Err(ConfigError::UnknownSection {
                    line,
                    section: name,
                });
            }
            out.entry(name.clone()).or_default();
            current = Some(name);
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                text: trimmed.to_string(),
            });
        };
        let Some(section) = current.clone() else {
            return Err(ConfigError::Syntax {
                line,
                text: trimmed.to_string(),
            });
        };
        let key = key.trim().to_string();
        let allowed = SECTIONS
            .iter()
            .find(|(s, _)| *s == section)
            .map(|(_, keys)| *keys)
            .unwrap_or(&[]);
        if !allowed.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey { section, key });
        }
        out.entry(section)
            .or_default()
            .insert(key, value.trim().to_string());
    }
    Ok(out)
}

fn get_f64(sec: &BTreeMap<String, String>, section: &str, key: &str) -> Result<f64, ConfigError> {
    let raw = sec.get(key).ok_or_else(|| ConfigError::MissingKey {
        section: section.to_string(),
        key: key.to_string(),
    })?;
    raw.parse().map_err(|_| ConfigError::BadValue {
        section: section.to_string(),
        key: key.to_string(),
        value: raw.clone(),
        wanted: "a float",
    })
}

fn opt_f64(sec: &BTreeMap<String, String>, section: &str, key: &str) -> Result<Option<f64>, ConfigError> {
    match sec.get(key) {
        None => Ok(None),
        Some(raw) => raw.parse().map(Some).map_err(|_| ConfigError::BadValue {
            section: section.to_string(),
            key: key.to_string(),
            value: raw.clone(),
            wanted: "a float",
        }),
    }
}

fn opt_usize(
    sec: &BTreeMap<String, String>,
    section: &str,
    key: &str,
) -> Result<Option<usize>, ConfigError> {
    match sec.get(key) {
        None => Ok(None),
        Some(raw) => raw.parse().map(Some).map_err(|_| ConfigError::BadValue {
            section: section.to_string(),
            key: key.to_string(),
            value: raw.clone(),
            wanted: "an integer",
        }),
    }
}

/// Window-scan settings.
#[derive(Debug, Clone, Copy)]
pub struct WindowConfig {
    pub resolution: usize,
    pub tol: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            resolution: 2048,
            tol: 1e-6,
        }
    }
}

/// Wave-construction settings; `mu` and `c` are alternatives.
#[derive(Debug, Clone, Copy, Default)]
pub struct WaveConfig {
    pub mu: Option<f64>,
    pub c: Option<f64>,
    pub n: Option<usize>,
    pub dt: Option<f64>,
    pub inner_tol: Option<f64>,
    pub outer_tol: Option<f64>,
    pub max_inner_steps: Option<usize>,
    pub max_outer_iters: Option<usize>,
}

/// Simulation settings; `initial` selects the starting density.
#[derive(Debug, Clone)]
pub struct SimSection {
    pub dt: f64,
    pub t_end: f64,
    pub frame_speed: f64,
    pub chem_mode: ChemMode,
    pub boundary_mu: f64,
    pub initial: InitialData,
    pub front_level: Option<f64>,
    pub sample_every: f64,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Equilibrium,
    Constant(f64),
    Ramp { height: f64, x0: f64, cells: usize },
    Perturbed { amplitude: f64 },
}

/// Fully parsed configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: ModelParams,
    pub window: WindowConfig,
    pub grid: Option<Grid1D>,
    pub wave: WaveConfig,
    pub sim: Option<SimSection>,
    pub scales: Vec<f64>,
    pub out_dir: Option<String>,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let sections = parse_sections(text)?;
        let model = sections
            .get("model")
            .ok_or(ConfigError::MissingSection("model"))?;
        let params = ModelParams::new(
            get_f64(model, "model", "tau")?,
            get_f64(model, "model", "chi1")?,
            get_f64(model, "model", "chi2")?,
            get_f64(model, "model", "lambda1")?,
            get_f64(model, "model", "lambda2")?,
            get_f64(model, "model", "mu1")?,
            get_f64(model, "model", "mu2")?,
            get_f64(model, "model", "a")?,
            get_f64(model, "model", "b")?,
        )?;

        let mut window = WindowConfig::default();
        if let Some(sec) = sections.get("window") {
            if let Some(r) = opt_usize(sec, "window", "resolution")? {
                window.resolution = r;
            }
            if let Some(t) = opt_f64(sec, "window", "tol")? {
                window.tol = t;
            }
        }

        let grid = match sections.get("grid") {
            None => None,
            Some(sec) => {
                let x_lo = get_f64(sec, "grid", "x_lo")?;
                let x_hi = get_f64(sec, "grid", "x_hi")?;
                let n = opt_usize(sec, "grid", "n")?.ok_or(ConfigError::MissingKey {
                    section: "grid".to_string(),
                    key: "n".to_string(),
                })?;
                Some(Grid1D::new(x_lo, x_hi, n)?)
            }
        };

        let mut wave = WaveConfig::default();
        if let Some(sec) = sections.get("wave") {
            wave.mu = opt_f64(sec, "wave", "mu")?;
            wave.c = opt_f64(sec, "wave", "c")?;
            wave.n = opt_usize(sec, "wave", "n")?;
            wave.dt = opt_f64(sec, "wave", "dt")?;
            wave.inner_tol = opt_f64(sec, "wave", "inner_tol")?;
            wave.outer_tol = opt_f64(sec, "wave", "outer_tol")?;
            wave.max_inner_steps = opt_usize(sec, "wave", "max_inner_steps")?;
            wave.max_outer_iters = opt_usize(sec, "wave", "max_outer_iters")?;
        }

        let sim = match sections.get("sim") {
            None => None,
            Some(sec) => {
                let chem_mode = match sec.get("chem_mode").map(String::as_str) {
                    None | Some("elliptic") => ChemMode::Elliptic,
                    Some("parabolic") => ChemMode::Parabolic,
                    Some(other) => {
                        return Err(ConfigError::BadValue {
                            section: "sim".to_string(),
                            key: "chem_mode".to_string(),
                            value: other.to_string(),
                            wanted: "`elliptic` or `parabolic`",
                        })
                    }
                };
                let initial = match sec.get("initial").map(String::as_str) {
                    None | Some("equilibrium") => InitialData::Equilibrium,
                    Some("constant") => InitialData::Constant(
                        opt_f64(sec, "sim", "initial_value")?.unwrap_or(params.a / params.b),
                    ),
                    Some("ramp") => InitialData::Ramp {
                        height: opt_f64(sec, "sim", "initial_value")?.unwrap_or(params.a / params.b),
                        x0: opt_f64(sec, "sim", "ramp_x0")?.unwrap_or(0.0),
                        cells: opt_usize(sec, "sim", "ramp_cells")?.unwrap_or(10),
                    },
                    Some("perturbed") => InitialData::Perturbed {
                        amplitude: opt_f64(sec, "sim", "perturb_amp")?.unwrap_or(0.5),
                    },
                    Some(other) => {
                        return Err(ConfigError::BadValue {
                            section: "sim".to_string(),
                            key: "initial".to_string(),
                            value: other.to_string(),
                            wanted: "`equilibrium`, `constant`, `ramp`, or `perturbed`",
                        })
                    }
                };
                Some(SimSection {
                    dt: get_f64(sec, "sim", "dt")?,
                    t_end: get_f64(sec, "sim", "t_end")?,
                    frame_speed: opt_f64(sec, "sim", "frame_speed")?.unwrap_or(0.0),
                    chem_mode,
                    boundary_mu: opt_f64(sec, "sim", "boundary_mu")?.unwrap_or(0.0),
                    initial,
                    front_level: opt_f64(sec, "sim", "front_level")?,
                    sample_every: opt_f64(sec, "sim", "sample_every")?.unwrap_or(0.5),
                    target: opt_f64(sec, "sim", "target")?.unwrap_or(1e-3),
                })
            }
        };

        let scales = match sections.get("limits") {
            None => vec![1e-1, 1e-2, 1e-3],
            Some(sec) => {
                let raw = sec.get("scales").ok_or(ConfigError::MissingKey {
                    section: "limits".to_string(),
                    key: "scales".to_string(),
                })?;
                let mut out = Vec::new();
                for part in raw.split(',') {
                    out.push(part.trim().parse().map_err(|_| ConfigError::BadValue {
                        section: "limits".to_string(),
                        key: "scales".to_string(),
                        value: raw.clone(),
                        wanted: "comma-separated floats",
                    })?);
                }
                out
            }
        };

        let out_dir = sections
            .get("output")
            .and_then(|sec| sec.get("dir"))
            .cloned();

        Ok(RunConfig {
            params,
            window,
            grid,
            wave,
            sim,
            scales,
            out_dir,
        })
    }

    /// Sim boundary descriptor from the parsed section.
    pub fn sim_boundary(sim: &SimSection) -> Boundary {
        if sim.boundary_mu > 0.0 {
            Boundary::WaveFrame {
                mu: sim.boundary_mu,
            }
        } else {
            Boundary::NeumannBoth
        }
    }
}
