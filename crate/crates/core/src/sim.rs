//! Discrete-time scenario engine: pool weight -> controller -> CDP accrual.
//!
//! Step `k` happens at `t = k * dt`. Each step first accrues the previous
//! step's rate over `dt`, then feeds the schedule weight and the resulting
//! TCR/MCR to the controller, so every row holds contemporaneous values.
//! A run ends at `duration` or on the first row with TCR/MCR <= 1.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cdp::{CdpError, CdpSystemState};
use crate::controller::{ControllerConfig, ControllerError, ControllerState, RateUpdate};
use crate::fixed::{Fixed, FixedError};

/// Search horizon for time-to-full-leverage, years.
pub const HORIZON_YEARS: i64 = 10;
/// Upper bound on the phi bracket.
pub const PHI_CAP: i64 = 10_000;
/// Below this ratio the base rate alone reaches full leverage within a year.
pub const MIN_SWEEP_RATIO: Fixed = Fixed::from_raw(1_100_000_000_000_000_000);

const MAX_BISECTIONS: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error(transparent)]
    Cdp(#[from] CdpError),
    #[error(transparent)]
    Arithmetic(#[from] FixedError),
    #[error("ratio {ratio}: time to full leverage exceeds target even at phi = {PHI_CAP}")]
    Bracketing { ratio: Fixed },
    #[error("ratio {ratio}: base rate alone reaches full leverage at {t_base} years, before the target")]
    TargetBelowBase { ratio: Fixed, t_base: Fixed },
    #[error("ratio {ratio}: bisection could not land within tolerance of the target")]
    Bisection { ratio: Fixed },
}

impl SimError {
    /// True when the failure comes from invalid input rather than from the computation.
    pub fn is_config_error(&self) -> bool {
        matches!(self, SimError::InvalidScenario(_) | SimError::Controller(ControllerError::InvalidConfig(_)))
    }
}

pub type SimResult<T> = Result<T, SimError>;

fn invalid(msg: impl Into<String>) -> SimError {
    SimError::InvalidScenario(msg.into())
}

/// Twelve hours in years (0.5 / 365.25).
pub fn default_dt() -> Fixed {
    Fixed::from_ratio(2, 1461).expect("non-zero denominator")
}

fn default_debt() -> Fixed {
    Fixed::from_int(1_000_000)
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightPoint {
    pub t: Fixed,
    pub w: Fixed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSchedule {
    Constant(Fixed),
    /// Moves by `step_increment` every `steps_per_increment` steps until it
    /// reaches `w_end`, then holds.
    RampHold {
        w_start: Fixed,
        w_end: Fixed,
        step_increment: Fixed,
        #[serde(default = "one")]
        steps_per_increment: u32,
    },
    /// Piecewise constant: each point's weight holds until the next point.
    Points(Vec<WeightPoint>),
}

fn in_unit_interval(w: Fixed) -> bool {
    w.is_positive() && w < Fixed::ONE
}

impl WeightSchedule {
    pub fn validate(&self) -> SimResult<()> {
        let check = |w: Fixed| {
            if in_unit_interval(w) {
                Ok(())
            } else {
                Err(invalid(format!("scheduled weight {w} is outside (0, 1)")))
            }
        };
        match self {
            WeightSchedule::Constant(w) => check(*w),
            WeightSchedule::RampHold { w_start, w_end, step_increment, steps_per_increment } => {
                check(*w_start)?;
                check(*w_end)?;
                if *steps_per_increment == 0 {
                    return Err(invalid("steps_per_increment must be at least 1"));
                }
                let span = w_end.checked_sub(*w_start)?;
                if !span.is_zero() && (step_increment.is_zero() || span.is_negative() != step_increment.is_negative()) {
                    return Err(invalid("step_increment must move w_start toward w_end"));
                }
                Ok(())
            }
            WeightSchedule::Points(points) => {
                if points.is_empty() {
                    return Err(invalid("weight schedule has no points"));
                }
                if points.windows(2).any(|p| p[1].t <= p[0].t) {
                    return Err(invalid("weight points must have strictly increasing t"));
                }
                points.iter().try_for_each(|p| check(p.w))
            }
        }
    }

    pub fn weight_at(&self, step: u64, t: Fixed) -> SimResult<Fixed> {
        match self {
            WeightSchedule::Constant(w) => Ok(*w),
            WeightSchedule::RampHold { w_start, w_end, step_increment, steps_per_increment } => {
                let increments = step / u64::from(*steps_per_increment);
                let span = w_end.checked_sub(*w_start)?;
                if span.is_zero() {
                    return Ok(*w_end);
                }
                // Cap the increment count first so the product cannot overflow.
                let needed = span.checked_div(*step_increment)?.raw() / Fixed::ONE.raw() + 1;
                let n = (increments as i128).min(needed) as i64;
                let w = w_start.checked_add(step_increment.mul_int(n)?)?;
                Ok(if step_increment.is_positive() { w.min(*w_end) } else { w.max(*w_end) })
            }
            WeightSchedule::Points(points) => {
                let idx = points.partition_point(|p| p.t <= t);
                Ok(points[idx.saturating_sub(1)].w)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub controller_cfg: ControllerConfig,
    pub initial_ratio: Fixed,
    #[serde(default = "default_debt")]
    pub initial_debt: Fixed,
    /// Timestep, years.
    #[serde(default = "default_dt")]
    pub dt: Fixed,
    /// Years.
    pub duration: Fixed,
    pub weight_schedule: WeightSchedule,
}

impl Scenario {
    pub fn validate(&self) -> SimResult<()> {
        self.controller_cfg.validate()?;
        if !self.dt.is_positive() {
            return Err(invalid("dt must be positive"));
        }
        if self.duration < self.dt {
            return Err(invalid("duration must be at least dt"));
        }
        if self.initial_ratio.is_negative() {
            return Err(invalid("initial_ratio must be non-negative"));
        }
        if !self.initial_debt.is_positive() {
            return Err(invalid("initial_debt must be positive"));
        }
        self.weight_schedule.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimRow {
    pub step: u64,
    pub t_years: Fixed,
    pub weight: Fixed,
    pub update: RateUpdate,
    pub tcr_mcr: Fixed,
    pub debt: Fixed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimOutput {
    pub rows: Vec<SimRow>,
    pub terminated_early: bool,
    pub t_terminal: Option<Fixed>,
}

/// Steps a scenario one controller update at a time.
struct Stepper<'a> {
    scenario: &'a Scenario,
    controller: ControllerState,
    cdp: CdpSystemState,
    step: u64,
    last_rate: Option<Fixed>,
    finished: bool,
}

impl<'a> Stepper<'a> {
    fn new(scenario: &'a Scenario) -> SimResult<Self> {
        scenario.validate()?;
        Ok(Stepper {
            scenario,
            controller: ControllerState::new(),
            cdp: CdpSystemState::new(scenario.initial_ratio, scenario.initial_debt)?,
            step: 0,
            last_rate: None,
            finished: false,
        })
    }

    fn next_row(&mut self) -> SimResult<Option<SimRow>> {
        if self.finished {
            return Ok(None);
        }
        let sc = self.scenario;
        let t = sc.dt.mul_int(self.step as i64)?;
        if t > sc.duration {
            self.finished = true;
            return Ok(None);
        }
        if let Some(rate) = self.last_rate {
            self.cdp = self.cdp.accrue(rate, sc.dt)?;
        }
        let weight = sc.weight_schedule.weight_at(self.step, t)?;
        let update = self.controller.update(&sc.controller_cfg, weight, t, self.cdp.tcr_mcr())?;
        let row =
            SimRow { step: self.step, t_years: t, weight, update, tcr_mcr: self.cdp.tcr_mcr(), debt: self.cdp.debt() };
        self.last_rate = Some(update.rate);
        self.step += 1;
        if self.cdp.is_fully_levered() {
            self.finished = true;
        }
        Ok(Some(row))
    }
}

pub fn run(scenario: &Scenario) -> SimResult<SimOutput> {
    let mut stepper = Stepper::new(scenario)?;
    let mut rows = Vec::new();
    while let Some(row) = stepper.next_row()? {
        rows.push(row);
    }
    let t_terminal = rows.last().filter(|r| r.tcr_mcr <= Fixed::ONE).map(|r| r.t_years);
    Ok(SimOutput { rows, terminated_early: t_terminal.is_some(), t_terminal })
}

/// Time until TCR/MCR first reaches 1 under the phi-strategy at a constant
/// weight, or `None` if that does not happen within [`HORIZON_YEARS`].
pub fn time_to_full_leverage(
    phi: Fixed,
    initial_ratio: Fixed,
    held_weight: Fixed,
    cfg: &ControllerConfig,
    dt: Fixed,
) -> SimResult<Option<Fixed>> {
    let scenario = Scenario {
        controller_cfg: ControllerConfig { phi, k_i_fixed: None, ..cfg.clone() },
        initial_ratio,
        initial_debt: Fixed::ONE,
        dt,
        duration: Fixed::from_int(HORIZON_YEARS),
        weight_schedule: WeightSchedule::Constant(held_weight),
    };
    let mut stepper = Stepper::new(&scenario)?;
    while let Some(row) = stepper.next_row()? {
        if row.tcr_mcr <= Fixed::ONE {
            return Ok(Some(row.t_years));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepRequest {
    pub ratios: Vec<Fixed>,
    /// Recovery target, years.
    pub target: Fixed,
    pub held_weight: Fixed,
    pub cfg: ControllerConfig,
    pub dt: Fixed,
    pub tol: Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepPoint {
    pub ratio: Fixed,
    pub phi_star: Fixed,
}

impl SweepRequest {
    pub fn validate(&self) -> SimResult<()> {
        self.cfg.validate()?;
        if self.ratios.is_empty() {
            return Err(invalid("no ratios to sweep"));
        }
        if let Some(r) = self.ratios.iter().find(|r| **r <= MIN_SWEEP_RATIO) {
            return Err(invalid(format!(
                "ratio {r}: ratios must exceed {MIN_SWEEP_RATIO}; the base rate alone meets the target there"
            )));
        }
        if !self.target.is_positive() || !self.tol.is_positive() || !self.dt.is_positive() {
            return Err(invalid("target, tol and dt must be positive"));
        }
        if !in_unit_interval(self.held_weight) {
            return Err(invalid("held_weight must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Finds phi such that the constant-weight run reaches full leverage within
/// `tol` of `target`. Relies on the time to full leverage being
/// non-increasing in phi.
pub fn solve_phi(req: &SweepRequest, ratio: Fixed) -> SimResult<Fixed> {
    let t_of = |phi: Fixed| time_to_full_leverage(phi, ratio, req.held_weight, &req.cfg, req.dt);
    let within_tol = |t: Fixed| -> SimResult<bool> { Ok(t.checked_sub(req.target)?.checked_abs()? <= req.tol) };
    // `None` (not reached within the horizon) counts as later than any target.
    let later_than_target = |t: Option<Fixed>| t.is_none_or(|t| t > req.target);

    let t_base = t_of(Fixed::ZERO)?;
    if let Some(t) = t_base {
        if within_tol(t)? {
            return Ok(Fixed::ZERO);
        }
        if t < req.target {
            return Err(SimError::TargetBelowBase { ratio, t_base: t });
        }
    }

    let cap = Fixed::from_int(PHI_CAP);
    let mut lo = Fixed::ZERO;
    let mut hi = Fixed::ONE;
    loop {
        let t = t_of(hi)?;
        if !later_than_target(t) {
            break;
        }
        if hi >= cap {
            return Err(SimError::Bracketing { ratio });
        }
        lo = hi;
        hi = hi.mul_int(2)?.min(cap);
    }

    for _ in 0..MAX_BISECTIONS {
        let mid = Fixed::from_raw(lo.raw() + (hi.raw() - lo.raw()) / 2);
        if mid == lo || mid == hi {
            break;
        }
        let t = t_of(mid)?;
        if let Some(t) = t {
            if within_tol(t)? {
                return Ok(mid);
            }
        }
        if later_than_target(t) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    match t_of(hi)? {
        Some(t) if within_tol(t)? => Ok(hi),
        _ => Err(SimError::Bisection { ratio }),
    }
}

/// Solves phi for every ratio, on `workers` threads. Output order follows
/// the input and does not depend on `workers`.
pub fn sweep_phi(req: &SweepRequest, workers: usize) -> SimResult<Vec<SweepPoint>> {
    req.validate()?;
    let solve = |&ratio: &Fixed| solve_phi(req, ratio).map(|phi_star| SweepPoint { ratio, phi_star });
    let results: Vec<SimResult<SweepPoint>> = if workers <= 1 {
        req.ratios.iter().map(solve).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
        pool.install(|| req.ratios.par_iter().map(solve).collect())
    };
    // first failure in input order, independent of scheduling
    results.into_iter().collect()
}
