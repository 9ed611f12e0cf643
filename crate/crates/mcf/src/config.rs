//! Flat `key = value` run configuration with `#` comments.
//!
//! Unknown keys are rejected with their line number. Every key has a
//! documented default except the perturbation descriptors, which become
//! required once `perturbation` names a class.

use crate::error::{Error, Result};
use crate::initial_data::{FarPerturbation, NearPerturbation, Perturbation};
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub gamma: f64,
    pub c: f64,
    pub tau0: f64,
    /// Rescaled matching radius override; `None` selects `exp(gamma tau0/2)`.
    pub big_r1: Option<f64>,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub ntheta: usize,
    pub safety: f64,
    /// Far-end override for the cylindrical patch.
    pub z_max: Option<f64>,
    pub perturbation: Perturbation,
    /// Stop floor for the minimum radius; `None` derives `1e-3 * r0`.
    pub r_min_floor: Option<f64>,
    pub curvature_ceiling: f64,
    pub t_max: f64,
    pub max_steps: u64,
    /// Steps between snapshot writes; 0 disables intermediate snapshots.
    pub snapshot_stride: u64,
    /// Steps between diagnostics rows.
    pub series_stride: u64,
    /// Highest angular mode recorded in the series.
    pub mode_max: usize,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            gamma: 0.75,
            c: 1.0,
            tau0: 4.0,
            big_r1: None,
            nx: 129,
            ny: 129,
            nz: 129,
            ntheta: 64,
            safety: 0.1,
            z_max: None,
            perturbation: Perturbation::None,
            r_min_floor: None,
            curvature_ceiling: f64::INFINITY,
            t_max: f64::INFINITY,
            max_steps: 10_000_000,
            snapshot_stride: 0,
            series_stride: 10,
            mode_max: 8,
            output_dir: PathBuf::from("out"),
        }
    }
}

struct RawEntry {
    line: usize,
    value: String,
}

/// Parse configuration text into a validated [`RunConfig`].
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut entries: BTreeMap<String, RawEntry> = BTreeMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            msg: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if value.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("key `{key}` has no value"),
            });
        }
        if entries.insert(key.clone(), RawEntry { line: line_no, value }).is_some() {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("key `{key}` given twice"),
            });
        }
    }

    const KNOWN: &[&str] = &[
        "gamma",
        "c",
        "tau0",
        "R1",
        "nx",
        "ny",
        "nz",
        "ntheta",
        "safety",
        "z_max",
        "perturbation",
        "a0",
        "a1",
        "r_m",
        "z_a",
        "z_b",
        "n",
        "r_min_floor",
        "curvature_ceiling",
        "t_max",
        "max_steps",
        "snapshot_stride",
        "series_stride",
        "mode_max",
        "output_dir",
    ];
    for (key, entry) in &entries {
        if !KNOWN.contains(&key.as_str()) {
            return Err(Error::Parse {
                line: entry.line,
                msg: format!("unknown key `{key}`"),
            });
        }
    }

    let f64_at = |entries: &BTreeMap<String, RawEntry>, key: &str| -> Result<Option<f64>> {
        match entries.get(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<f64>().map(Some).map_err(|_| Error::Parse {
                line: e.line,
                msg: format!("key `{key}`: `{}` is not a number", e.value),
            }),
        }
    };
    let usize_at = |entries: &BTreeMap<String, RawEntry>, key: &str| -> Result<Option<usize>> {
        match entries.get(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<usize>().map(Some).map_err(|_| Error::Parse {
                line: e.line,
                msg: format!("key `{key}`: `{}` is not a nonnegative integer", e.value),
            }),
        }
    };

    let mut cfg = RunConfig::default();
    if let Some(v) = f64_at(&entries, "gamma")? {
        cfg.gamma = v;
    }
    if let Some(v) = f64_at(&entries, "c")? {
        cfg.c = v;
    }
    if let Some(v) = f64_at(&entries, "tau0")? {
        cfg.tau0 = v;
    }
    cfg.big_r1 = f64_at(&entries, "R1")?;
    if let Some(v) = usize_at(&entries, "nx")? {
        cfg.nx = v;
    }
    if let Some(v) = usize_at(&entries, "ny")? {
        cfg.ny = v;
    }
    if let Some(v) = usize_at(&entries, "nz")? {
        cfg.nz = v;
    }
    if let Some(v) = usize_at(&entries, "ntheta")? {
        cfg.ntheta = v;
    }
    if let Some(v) = f64_at(&entries, "safety")? {
        cfg.safety = v;
    }
    cfg.z_max = f64_at(&entries, "z_max")?;
    cfg.r_min_floor = f64_at(&entries, "r_min_floor")?;
    if let Some(v) = f64_at(&entries, "curvature_ceiling")? {
        cfg.curvature_ceiling = v;
    }
    if let Some(v) = f64_at(&entries, "t_max")? {
        cfg.t_max = v;
    }
    if let Some(v) = usize_at(&entries, "max_steps")? {
        cfg.max_steps = v as u64;
    }
    if let Some(v) = usize_at(&entries, "snapshot_stride")? {
        cfg.snapshot_stride = v as u64;
    }
    if let Some(v) = usize_at(&entries, "series_stride")? {
        cfg.series_stride = v as u64;
    }
    if let Some(v) = usize_at(&entries, "mode_max")? {
        cfg.mode_max = v;
    }
    if let Some(e) = entries.get("output_dir") {
        cfg.output_dir = PathBuf::from(&e.value);
    }

    let pert_entry = entries.get("perturbation");
    let pert_kind = pert_entry.map(|e| e.value.as_str()).unwrap_or("none");
    let pert_line = pert_entry.map(|e| e.line).unwrap_or(0);
    let require = |key: &str| -> Result<f64> {
        match entries.get(key) {
            Some(e) => e.value.parse::<f64>().map_err(|_| Error::Parse {
                line: e.line,
                msg: format!("key `{key}`: `{}` is not a number", e.value),
            }),
            None => Err(Error::Parse {
                line: pert_line,
                msg: format!("perturbation = {pert_kind} requires key `{key}`"),
            }),
        }
    };
    cfg.perturbation = match pert_kind {
        "none" => {
            for key in ["a0", "a1", "r_m", "z_a", "z_b", "n"] {
                if let Some(e) = entries.get(key) {
                    return Err(Error::Parse {
                        line: e.line,
                        msg: format!("key `{key}` needs `perturbation = near` or `far`"),
                    });
                }
            }
            Perturbation::None
        }
        "near" => {
            let a0 = require("a0")?;
            let a1 = f64_at(&entries, "a1")?.unwrap_or(0.0);
            let r_m = require("r_m")?;
            for key in ["z_a", "z_b", "n"] {
                if let Some(e) = entries.get(key) {
                    return Err(Error::Parse {
                        line: e.line,
                        msg: format!("key `{key}` belongs to the far class"),
                    });
                }
            }
            Perturbation::Near(NearPerturbation::new(a0, a1, r_m).map_err(|e| Error::Parse {
                line: pert_line,
                msg: e.to_string(),
            })?)
        }
        "far" => {
            let a0 = require("a0")?;
            let z_a = require("z_a")?;
            let z_b = require("z_b")?;
            let n_entry = entries.get("n").ok_or_else(|| Error::Parse {
                line: pert_line,
                msg: "perturbation = far requires key `n`".into(),
            })?;
            let n: u32 = n_entry.value.parse().map_err(|_| Error::Parse {
                line: n_entry.line,
                msg: format!("key `n`: `{}` is not a positive integer", n_entry.value),
            })?;
            for key in ["a1", "r_m"] {
                if let Some(e) = entries.get(key) {
                    return Err(Error::Parse {
                        line: e.line,
                        msg: format!("key `{key}` belongs to the near class"),
                    });
                }
            }
            Perturbation::Far(FarPerturbation::new(a0, z_a, z_b, n).map_err(|e| Error::Parse {
                line: n_entry.line,
                msg: e.to_string(),
            })?)
        }
        other => {
            return Err(Error::Parse {
                line: pert_line,
                msg: format!("perturbation must be none, near, or far; got `{other}`"),
            })
        }
    };

    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig) -> Result<()> {
    crate::initial_data::derive_params(cfg.gamma, cfg.c, cfg.tau0, cfg.big_r1)?;
    if cfg.nx < 5 || cfg.ny < 5 || cfg.nz < 5 {
        return Err(Error::Config(format!(
            "grid counts must be at least 5, got nx = {}, ny = {}, nz = {}",
            cfg.nx, cfg.ny, cfg.nz
        )));
    }
    if cfg.ntheta < 4 || cfg.ntheta % 2 != 0 {
        return Err(Error::Config(format!("ntheta must be even and >= 4, got {}", cfg.ntheta)));
    }
    if !(cfg.safety > 0.0 && cfg.safety <= 1.0) {
        return Err(Error::Config(format!("safety must lie in (0, 1], got {}", cfg.safety)));
    }
    if cfg.ntheta < 2 * cfg.mode_max + 2 {
        return Err(Error::Config(format!(
            "mode_max = {} needs ntheta >= {}, got {}",
            cfg.mode_max,
            2 * cfg.mode_max + 2,
            cfg.ntheta
        )));
    }
    if let Some(floor) = cfg.r_min_floor {
        if !(floor > 0.0) {
            return Err(Error::Config(format!("r_min_floor must be positive, got {floor}")));
        }
    }
    if !(cfg.curvature_ceiling > 0.0) || !(cfg.t_max > 0.0) {
        return Err(Error::Config(
            "curvature_ceiling and t_max must be positive (use inf to disable)".into(),
        ));
    }
    Ok(())
}
