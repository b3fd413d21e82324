//! JSON run configurations. Numbers are decimal strings and unknown keys
//! are rejected.

use serde::Deserialize;
use thiserror::Error;

use crate::controller::ControllerConfig;
use crate::fixed::Fixed;
use crate::sim::{default_dt, Scenario, SimError, SweepRequest, WeightSchedule};

const MAX_RANGE_POINTS: usize = 100_000;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid range {0:?}: {1}")]
    Range(String, &'static str),
    #[error(transparent)]
    Invalid(#[from] SimError),
}

/// A scenario plus where to write its artifacts.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub controller_cfg: ControllerConfig,
    pub initial_ratio: Fixed,
    #[serde(default = "default_debt")]
    pub initial_debt: Fixed,
    #[serde(default = "default_dt")]
    pub dt: Fixed,
    pub duration: Fixed,
    pub weight_schedule: WeightSchedule,
    #[serde(default)]
    pub out_csv: Option<String>,
    #[serde(default)]
    pub plot_svg: Option<String>,
}

fn default_debt() -> Fixed {
    Fixed::from_int(1_000_000)
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.scenario().validate()?;
        Ok(cfg)
    }

    pub fn scenario(&self) -> Scenario {
        Scenario {
            controller_cfg: self.controller_cfg.clone(),
            initial_ratio: self.initial_ratio,
            initial_debt: self.initial_debt,
            dt: self.dt,
            duration: self.duration,
            weight_schedule: self.weight_schedule.clone(),
        }
    }
}

fn default_tol() -> Fixed {
    Fixed::from_raw(5_000_000_000_000_000)
}

fn default_held_weight() -> Fixed {
    Fixed::from_raw(700_000_000_000_000_000)
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub controller_cfg: ControllerConfig,
    /// `start:stop:step`
    pub ratios: String,
    pub target_years: Fixed,
    #[serde(default = "default_tol")]
    pub tol: Fixed,
    #[serde(default = "default_held_weight")]
    pub held_weight: Fixed,
    #[serde(default = "default_dt")]
    pub dt: Fixed,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub out_csv: Option<String>,
    #[serde(default)]
    pub plot_svg: Option<String>,
}

impl SweepConfig {
    /// A sweep over `ratios` with every other field at its default.
    pub fn new(ratios: impl Into<String>, target_years: Fixed) -> Self {
        SweepConfig {
            controller_cfg: ControllerConfig::default(),
            ratios: ratios.into(),
            target_years,
            tol: default_tol(),
            held_weight: default_held_weight(),
            dt: default_dt(),
            workers: default_workers(),
            out_csv: None,
            plot_svg: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: SweepConfig = serde_json::from_str(text)?;
        cfg.request()?.validate()?;
        Ok(cfg)
    }

    pub fn request(&self) -> Result<SweepRequest, ConfigError> {
        Ok(SweepRequest {
            ratios: parse_range(&self.ratios)?,
            target: self.target_years,
            held_weight: self.held_weight,
            cfg: self.controller_cfg.clone(),
            dt: self.dt,
            tol: self.tol,
        })
    }
}

/// Expands `start:stop:step` into `start, start + step, ...` up to and
/// including `stop`. Stepping is exact decimal arithmetic.
pub fn parse_range(spec: &str) -> Result<Vec<Fixed>, ConfigError> {
    let bad = |why| ConfigError::Range(spec.to_owned(), why);
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(bad("expected start:stop:step"));
    };
    let parse = |s: &str| s.trim().parse::<Fixed>().map_err(|_| bad("not a decimal"));
    let (start, stop, step) = (parse(start)?, parse(stop)?, parse(step)?);
    if !step.is_positive() {
        return Err(bad("step must be positive"));
    }
    if stop < start {
        return Err(bad("stop precedes start"));
    }
    let mut values = Vec::new();
    let mut v = start;
    while v <= stop {
        if values.len() == MAX_RANGE_POINTS {
            return Err(bad("too many points"));
        }
        values.push(v);
        v = v.checked_add(step).map_err(|_| bad("overflow"))?;
    }
    Ok(values)
}
