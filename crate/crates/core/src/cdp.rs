//! Aggregate CDP leverage under interest accrual.
//!
//! Collateral value is held constant, so accrual grows debt and shrinks
//! TCR/MCR by the same factor.

use thiserror::Error;

use crate::fixed::{Fixed, FixedError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CdpError {
    #[error("debt must be positive, got {0}")]
    NonPositiveDebt(Fixed),
    #[error("TCR/MCR must be non-negative, got {0}")]
    NegativeRatio(Fixed),
    #[error("rate {rate} over dt {dt} would extinguish the debt")]
    DebtExtinguished { rate: Fixed, dt: Fixed },
    #[error(transparent)]
    Arithmetic(#[from] FixedError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CdpSystemState {
    tcr_mcr: Fixed,
    debt: Fixed,
}

impl CdpSystemState {
    pub fn new(tcr_mcr: Fixed, debt: Fixed) -> Result<Self, CdpError> {
        if tcr_mcr.is_negative() {
            return Err(CdpError::NegativeRatio(tcr_mcr));
        }
        if !debt.is_positive() {
            return Err(CdpError::NonPositiveDebt(debt));
        }
        Ok(CdpSystemState { tcr_mcr, debt })
    }

    pub fn tcr_mcr(&self) -> Fixed {
        self.tcr_mcr
    }

    pub fn debt(&self) -> Fixed {
        self.debt
    }

    /// Simple compounding over one step: both quantities move by `1 + rate * dt`.
    pub fn accrue(&self, rate: Fixed, dt: Fixed) -> Result<Self, CdpError> {
        let factor = Fixed::ONE.checked_add(rate.checked_mul(dt)?)?;
        if !factor.is_positive() {
            return Err(CdpError::DebtExtinguished { rate, dt });
        }
        Ok(CdpSystemState { tcr_mcr: self.tcr_mcr.checked_div(factor)?, debt: self.debt.checked_mul(factor)? })
    }

    pub fn is_fully_levered(&self) -> bool {
        self.tcr_mcr <= Fixed::ONE
    }
}
