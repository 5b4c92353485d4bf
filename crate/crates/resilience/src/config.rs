//! Flat key-value run configuration: a text file of `key = value` lines plus
//! command-line `--set key=value` overrides on top of per-system defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::attractors::RecurrenceConfig;
use crate::dynsys::IntegratorConfig;
use crate::systems::{self, SweepSpec, SystemSpec};

/// A configuration error names the offending key so the CLI can exit 1 with
/// a useful message.
#[derive(Debug, Clone, thiserror::Error)]
#[error("config key `{key}`: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

fn err(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { key: key.into(), message: message.into() }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub system: SystemSpec,
    pub param_overrides: Vec<(usize, f64)>,
    pub sweep: SweepSpec,
    pub grid: Vec<(f64, f64, usize)>,
    pub sample_box: Vec<(f64, f64)>,
    pub n_samples: usize,
    pub seeds_per_step: usize,
    pub epsilon: f64,
    pub finite_time: f64,
    pub seed: u64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub dt_observe: f64,
    pub max_time: f64,
    pub find_max_time: f64,
    pub max_steps: usize,
    pub recurrence: RecurrenceConfig,
    pub match_threshold: f64,
    pub lyap_transient: f64,
    pub lyap_total: f64,
    pub out_dir: PathBuf,
    pub workers: usize,
    pub dump_accumulators: bool,
    pub convergence_ns: Vec<usize>,
    pub convergence_seeds: usize,
}

impl RunConfig {
    /// Integrator configuration for the measure (proximity) pass.
    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            dt_observe: self.dt_observe,
            max_time: self.max_time,
            max_steps: self.max_steps,
        }
    }

    /// Integrator configuration for the finding (recurrence) pass.
    pub fn find_integrator(&self) -> IntegratorConfig {
        IntegratorConfig { max_time: self.find_max_time, ..self.integrator() }
    }

    /// The system's field with all parameter overrides applied.
    pub fn field(&self) -> crate::dynsys::VectorField {
        let mut f = self.system.field.clone();
        for &(idx, v) in &self.param_overrides {
            f.set_param(idx, v);
        }
        f
    }

    /// Loads defaults for `system`, then file entries, then `--set` pairs.
    pub fn load(path: Option<&Path>, sets: &[(String, String)]) -> Result<RunConfig, ConfigError> {
        let mut entries: BTreeMap<String, String> = BTreeMap::new();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p)
                .map_err(|e| err("config", format!("cannot read {}: {e}", p.display())))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| err("config", format!("line {}: expected `key = value`", lineno + 1)))?;
                entries.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        for (k, v) in sets {
            entries.insert(k.trim().to_string(), v.trim().to_string());
        }
        Self::from_entries(entries)
    }

    fn from_entries(mut entries: BTreeMap<String, String>) -> Result<RunConfig, ConfigError> {
        let sys_name = entries
            .remove("system")
            .ok_or_else(|| err("system", "missing (choose one of: oracle, predator-prey, amoc, lorenz84)"))?;
        let spec = systems::by_name(&sys_name)
            .ok_or_else(|| err("system", format!("unknown system `{sys_name}`")))?;

        let mut cfg = RunConfig {
            grid: spec.grid.clone(),
            sample_box: spec.sample_box.clone(),
            n_samples: 100_000,
            seeds_per_step: 100,
            epsilon: spec.epsilon,
            finite_time: spec.finite_time,
            seed: 12345,
            abs_tol: 1e-8,
            rel_tol: 1e-8,
            dt_observe: spec.dt_observe,
            max_time: spec.max_time,
            find_max_time: spec.find_max_time,
            max_steps: 100_000_000,
            recurrence: spec.recurrence.clone(),
            match_threshold: f64::INFINITY,
            lyap_transient: spec.lyap_transient,
            lyap_total: spec.lyap_total,
            out_dir: PathBuf::from("."),
            workers: 0,
            dump_accumulators: false,
            convergence_ns: vec![100, 1000, 10_000, 100_000],
            convergence_seeds: 20,
            sweep: spec.sweep.clone(),
            param_overrides: Vec::new(),
            system: spec,
        };

        for (key, value) in entries {
            cfg.apply(&key, &value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if let Some(pname) = key.strip_prefix("param.") {
            let idx = self
                .system
                .param_index(pname)
                .ok_or_else(|| err(key, format!("system `{}` has no parameter `{pname}`", self.system.name)))?;
            let v = parse_f64(key, value)?;
            self.param_overrides.retain(|(i, _)| *i != idx);
            self.param_overrides.push((idx, v));
            return Ok(());
        }
        match key {
            "seed" => self.seed = parse_u64(key, value)?,
            "n_samples" => self.n_samples = parse_usize_pos(key, value)?,
            "seeds_per_step" => self.seeds_per_step = parse_usize_pos(key, value)?,
            "epsilon" => self.epsilon = parse_f64_pos(key, value)?,
            "finite_time" => self.finite_time = parse_f64_pos(key, value)?,
            "dt_observe" => self.dt_observe = parse_f64_pos(key, value)?,
            "abs_tol" => self.abs_tol = parse_f64_pos(key, value)?,
            "rel_tol" => self.rel_tol = parse_f64_pos(key, value)?,
            "max_time" => self.max_time = parse_f64_pos(key, value)?,
            "find_max_time" => self.find_max_time = parse_f64_pos(key, value)?,
            "max_steps" => self.max_steps = parse_usize_pos(key, value)?,
            "consecutive_recurrences" => self.recurrence.consecutive_recurrences = parse_usize_pos(key, value)?,
            "attractor_locate_steps" => self.recurrence.attractor_locate_steps = parse_usize_pos(key, value)?,
            "consecutive_lost_steps" => self.recurrence.consecutive_lost_steps = parse_usize_pos(key, value)?,
            "match_threshold" => {
                self.match_threshold = if value == "inf" { f64::INFINITY } else { parse_f64_pos(key, value)? }
            }
            "lyap_transient" => self.lyap_transient = parse_f64_pos(key, value)?,
            "lyap_total" => self.lyap_total = parse_f64_pos(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "workers" => self.workers = parse_u64(key, value)? as usize,
            "dump_accumulators" => {
                self.dump_accumulators = match value {
                    "true" | "1" => true,
                    "false" | "0" => false,
                    _ => return Err(err(key, format!("expected true/false, got `{value}`"))),
                }
            }
            "sweep" => self.sweep = parse_sweep(key, value, &self.system)?,
            "grid" => self.grid = parse_grid(key, value, self.system.dim)?,
            "sample_box" => self.sample_box = parse_box(key, value, self.system.dim)?,
            "convergence_ns" => {
                self.convergence_ns = value
                    .split(',')
                    .map(|s| parse_usize_pos(key, s.trim()))
                    .collect::<Result<_, _>>()?;
            }
            "convergence_seeds" => self.convergence_seeds = parse_usize_pos(key, value)?,
            _ => return Err(err(key, "unknown key")),
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.dt_observe > self.max_time {
            return Err(err("dt_observe", "must not exceed max_time"));
        }
        if self.sweep.step <= 0.0 {
            return Err(err("sweep", "step must be positive"));
        }
        if self.sweep.stop < self.sweep.start {
            return Err(err("sweep", "stop must be >= start"));
        }
        if self.system.param_index(&self.sweep.param).is_none() {
            return Err(err("sweep", format!("system has no parameter `{}`", self.sweep.param)));
        }
        for (lo, hi) in &self.sample_box {
            if !(lo < hi) {
                return Err(err("sample_box", format!("range {lo}:{hi} is empty")));
            }
        }
        for (lo, hi, cells) in &self.grid {
            if !(lo < hi) || *cells < 2 {
                return Err(err("grid", format!("range {lo}:{hi}:{cells} invalid (need min < max, cells >= 2)")));
            }
        }
        Ok(())
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    v.parse::<f64>().map_err(|_| err(key, format!("expected a number, got `{v}`")))
}

fn parse_f64_pos(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x = parse_f64(key, v)?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(err(key, format!("must be positive and finite, got `{v}`")))
    }
}

fn parse_u64(key: &str, v: &str) -> Result<u64, ConfigError> {
    v.parse::<u64>().map_err(|_| err(key, format!("expected a nonnegative integer, got `{v}`")))
}

fn parse_usize_pos(key: &str, v: &str) -> Result<usize, ConfigError> {
    let x = v.parse::<usize>().map_err(|_| err(key, format!("expected a positive integer, got `{v}`")))?;
    if x == 0 {
        return Err(err(key, "must be positive"));
    }
    Ok(x)
}

/// `name:start:step:stop`
fn parse_sweep(key: &str, v: &str, spec: &SystemSpec) -> Result<SweepSpec, ConfigError> {
    let parts: Vec<&str> = v.split(':').collect();
    if parts.len() != 4 {
        return Err(err(key, format!("expected `name:start:step:stop`, got `{v}`")));
    }
    if spec.param_index(parts[0]).is_none() {
        return Err(err(key, format!("system `{}` has no parameter `{}`", spec.name, parts[0])));
    }
    Ok(SweepSpec {
        param: parts[0].to_string(),
        start: parse_f64(key, parts[1])?,
        step: parse_f64(key, parts[2])?,
        stop: parse_f64(key, parts[3])?,
    })
}

/// comma-separated `min:max:cells` per dimension
fn parse_grid(key: &str, v: &str, dim: usize) -> Result<Vec<(f64, f64, usize)>, ConfigError> {
    let dims: Vec<&str> = v.split(',').collect();
    if dims.len() != dim {
        return Err(err(key, format!("expected {dim} comma-separated ranges, got {}", dims.len())));
    }
    dims.iter()
        .map(|d| {
            let p: Vec<&str> = d.trim().split(':').collect();
            if p.len() != 3 {
                return Err(err(key, format!("expected `min:max:cells`, got `{d}`")));
            }
            Ok((parse_f64(key, p[0])?, parse_f64(key, p[1])?, parse_usize_pos(key, p[2])?))
        })
        .collect()
}

/// comma-separated `min:max` per dimension
fn parse_box(key: &str, v: &str, dim: usize) -> Result<Vec<(f64, f64)>, ConfigError> {
    let dims: Vec<&str> = v.split(',').collect();
    if dims.len() != dim {
        return Err(err(key, format!("expected {dim} comma-separated ranges, got {}", dims.len())));
    }
    dims.iter()
        .map(|d| {
            let p: Vec<&str> = d.trim().split(':').collect();
            if p.len() != 2 {
                return Err(err(key, format!("expected `min:max`, got `{d}`")));
            }
            Ok((parse_f64(key, p[0])?, parse_f64(key, p[1])?))
        })
        .collect()
}
