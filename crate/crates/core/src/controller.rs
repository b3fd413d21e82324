//! PID money-supply controller.
//!
//! The controller turns the stablecoin's pool weight into an annualized
//! interest rate. The proportional path has unit gain and its strength is
//! set by `alpha` in the transfer function; the integral path accumulates
//! time-weighted normalized error scaled by `K_I` (fixed, or derived from
//! TCR/MCR); the derivative path measures the slope of the cumulative error
//! across two lookback buckets. Time is measured in years.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fixed::{Fixed, FixedError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ControllerError {
    #[error("invalid controller config: {0}")]
    InvalidConfig(&'static str),
    #[error("weight must lie strictly between 0 and 1, got {0}")]
    WeightOutOfRange(Fixed),
    #[error("TCR/MCR must be non-negative, got {0}")]
    NegativeRatio(Fixed),
    #[error("update at t={t} precedes the previous update at t={last}")]
    TimeRegression { t: Fixed, last: Fixed },
    #[error(transparent)]
    Arithmetic(#[from] FixedError),
}

pub type ControllerResult<T> = Result<T, ControllerError>;

fn default_w_r() -> Fixed {
    Fixed::from_raw(500_000_000_000_000_000)
}

fn default_alpha() -> Fixed {
    Fixed::from_raw(150_000_000_000_000_000)
}

fn default_phi() -> Fixed {
    Fixed::from_int(4)
}

/// 7/365 years.
pub fn default_period() -> Fixed {
    Fixed::from_ratio(7, 365).expect("non-zero denominator")
}

fn default_e_i_floor() -> Fixed {
    Fixed::from_raw(-500_000_000_000_000_000)
}

/// 1 - 10^-6
fn default_e_ctrl_max() -> Fixed {
    Fixed::from_raw(999_999_000_000_000_000)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    /// Reference (target) stablecoin weight.
    #[serde(default = "default_w_r")]
    pub w_r: Fixed,
    /// Transfer-function scale, in annualized rate units.
    #[serde(default = "default_alpha")]
    pub alpha: Fixed,
    /// Phi-strategy scale: `K_I = phi * (TCR/MCR - 1)`.
    #[serde(default = "default_phi")]
    pub phi: Fixed,
    /// Constant integral gain; overrides the phi-strategy when set.
    #[serde(default)]
    pub k_i_fixed: Option<Fixed>,
    #[serde(default)]
    pub k_d: Fixed,
    /// Derivative lookback, years.
    #[serde(default = "default_period")]
    pub period: Fixed,
    /// Lower bound on the integral accumulator.
    #[serde(default = "default_e_i_floor")]
    pub e_i_floor: Fixed,
    /// Upper clamp on the controller error; the transfer function is singular at 1.
    #[serde(default = "default_e_ctrl_max")]
    pub e_ctrl_max: Fixed,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            w_r: default_w_r(),
            alpha: default_alpha(),
            phi: default_phi(),
            k_i_fixed: None,
            k_d: Fixed::ZERO,
            period: default_period(),
            e_i_floor: default_e_i_floor(),
            e_ctrl_max: default_e_ctrl_max(),
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> ControllerResult<()> {
        let unit_open = |v: Fixed| v.is_positive() && v < Fixed::ONE;
        if !unit_open(self.w_r) {
            return Err(ControllerError::InvalidConfig("w_r must lie in (0, 1)"));
        }
        if !self.alpha.is_positive() {
            return Err(ControllerError::InvalidConfig("alpha must be positive"));
        }
        if self.phi.is_negative() {
            return Err(ControllerError::InvalidConfig("phi must be non-negative"));
        }
        if self.k_i_fixed.is_some_and(Fixed::is_negative) {
            return Err(ControllerError::InvalidConfig("k_i_fixed must be non-negative"));
        }
        if !self.period.is_positive() {
            return Err(ControllerError::InvalidConfig("period must be positive"));
        }
        if self.e_i_floor.is_positive() {
            return Err(ControllerError::InvalidConfig("e_i_floor must not be positive"));
        }
        if !unit_open(self.e_ctrl_max) {
            return Err(ControllerError::InvalidConfig("e_ctrl_max must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// `w - w_r`
pub fn weight_error(w: Fixed, w_r: Fixed) -> ControllerResult<Fixed> {
    if !w.is_positive() || w >= Fixed::ONE {
        return Err(ControllerError::WeightOutOfRange(w));
    }
    Ok(w.checked_sub(w_r)?)
}

/// Maps `(-w_r, 1 - w_r)` onto `(-1, 1)`, scaling each side of the reference separately.
pub fn normalize_error(e: Fixed, w_r: Fixed) -> ControllerResult<Fixed> {
    let span = if e.is_positive() { Fixed::ONE.checked_sub(w_r)? } else { w_r };
    Ok(e.checked_div(span)?)
}

/// Phi-strategy integral gain, floored at zero below full leverage.
pub fn k_i_from_phi(phi: Fixed, tcr_mcr: Fixed) -> ControllerResult<Fixed> {
    let k = phi.checked_mul(tcr_mcr.checked_sub(Fixed::ONE)?)?;
    Ok(k.max(Fixed::ZERO))
}

/// `alpha * e / (1 - e)`: zero at the origin, `-alpha` asymptote below,
/// unbounded as `e -> 1`.
pub fn transfer(e_ctrl: Fixed, alpha: Fixed) -> ControllerResult<Fixed> {
    let gap = Fixed::ONE.checked_sub(e_ctrl)?;
    if !gap.is_positive() {
        return Err(ControllerError::InvalidConfig("controller error must be below 1"));
    }
    Ok(alpha.checked_mul(e_ctrl)?.checked_div(gap)?)
}

/// One snapshot of the cumulative error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwceSample {
    pub twce: Fixed,
    pub t: Fixed,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ControllerState {
    /// Time-weighted cumulative normalized error, error-years.
    pub twce: Fixed,
    /// `K_I`-weighted integral, floored at `e_i_floor`.
    pub e_i_acc: Fixed,
    /// None before the first update.
    pub last_t: Option<Fixed>,
    pub delayed: Option<TwceSample>,
    pub previous: Option<TwceSample>,
}

impl ControllerState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bucket_count(&self) -> u8 {
        self.delayed.is_some() as u8 + self.previous.is_some() as u8
    }

    /// Advances the controller to time `t` with the current pool weight and
    /// leverage, returning every intermediate signal.
    pub fn update(
        &mut self,
        cfg: &ControllerConfig,
        w: Fixed,
        t: Fixed,
        tcr_mcr: Fixed,
    ) -> ControllerResult<RateUpdate> {
        if tcr_mcr.is_negative() {
            return Err(ControllerError::NegativeRatio(tcr_mcr));
        }
        let dt = match self.last_t {
            Some(last) if t < last => return Err(ControllerError::TimeRegression { t, last }),
            Some(last) => t.checked_sub(last)?,
            None => Fixed::ZERO,
        };
        let e_raw = weight_error(w, cfg.w_r)?;
        let e_norm = normalize_error(e_raw, cfg.w_r)?;

        // Work on a copy so an arithmetic failure leaves `self` untouched.
        let mut next = self.clone();
        let weighted = e_norm.checked_mul(dt)?;
        next.twce = next.twce.checked_add(weighted)?;
        let k_i = match cfg.k_i_fixed {
            Some(k) => k,
            None => k_i_from_phi(cfg.phi, tcr_mcr)?,
        };
        next.e_i_acc = next.e_i_acc.checked_add(k_i.checked_mul(weighted)?)?.max(cfg.e_i_floor);

        let now = TwceSample { twce: next.twce, t };
        match next.delayed {
            None => next.delayed = Some(now),
            Some(delayed) if t.checked_sub(delayed.t)? >= cfg.period => {
                next.previous = Some(delayed);
                next.delayed = Some(now);
            }
            Some(_) => {}
        }
        let e_d = match (next.delayed, next.previous) {
            (Some(delayed), Some(previous)) => {
                cfg.k_d.mul_div(delayed.twce.checked_sub(previous.twce)?, delayed.t.checked_sub(previous.t)?)?
            }
            _ => Fixed::ZERO,
        };
        next.last_t = Some(t);

        let e_p = e_norm;
        let e_i = next.e_i_acc;
        let e_ctrl = e_p.checked_add(e_i)?.checked_add(e_d)?.min(cfg.e_ctrl_max);
        let rate = transfer(e_ctrl, cfg.alpha)?;

        *self = next;
        Ok(RateUpdate { e_raw, e_norm, e_p, e_i, e_d, e_ctrl, rate })
    }
}

/// Every signal produced by one controller update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RateUpdate {
    pub e_raw: Fixed,
    pub e_norm: Fixed,
    pub e_p: Fixed,
    pub e_i: Fixed,
    pub e_d: Fixed,
    pub e_ctrl: Fixed,
    /// Annualized interest rate.
    pub rate: Fixed,
}
