//! Two-token StableSwap pool.
//!
//! `amp` follows the deployed Curve contract convention, where the invariant
//! coefficient is `Ann = A * n`:
//!
//! ```text
//! Ann * (x + y) + D = Ann * D + D^3 / (4 * x * y)
//! ```
//!
//! `x` is the system stablecoin balance and `y` the counterasset. Swaps carry
//! no fee.

use thiserror::Error;

use crate::fixed::{Fixed, FixedError};

pub const N_COINS: i64 = 2;
pub const MAX_ITERATIONS: usize = 255;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PoolError {
    #[error("amplification must be positive, got {0}")]
    InvalidAmp(Fixed),
    #[error("pool balances must be positive, got ({0}, {1})")]
    InvalidBalance(Fixed, Fixed),
    #[error("swap amount must be positive, got {0}")]
    InvalidAmount(Fixed),
    #[error("weight must lie strictly between 0 and 1, got {0}")]
    InvalidWeight(Fixed),
    #[error("{0} solver did not converge in {MAX_ITERATIONS} iterations")]
    NoConvergence(&'static str),
    #[error("swap would drain the output side of the pool")]
    Drained,
    #[error(transparent)]
    Arithmetic(#[from] FixedError),
}

pub type PoolResult<T> = Result<T, PoolError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Stablecoin in, counterasset out.
    StableIn,
    /// Counterasset in, stablecoin out.
    StableOut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolState {
    amp: Fixed,
    bal_stable: Fixed,
    bal_counter: Fixed,
}

impl PoolState {
    pub fn new(amp: Fixed, bal_stable: Fixed, bal_counter: Fixed) -> PoolResult<Self> {
        if !amp.is_positive() {
            return Err(PoolError::InvalidAmp(amp));
        }
        if !bal_stable.is_positive() || !bal_counter.is_positive() {
            return Err(PoolError::InvalidBalance(bal_stable, bal_counter));
        }
        Ok(PoolState { amp, bal_stable, bal_counter })
    }

    pub fn amp(&self) -> Fixed {
        self.amp
    }

    pub fn bal_stable(&self) -> Fixed {
        self.bal_stable
    }

    pub fn bal_counter(&self) -> Fixed {
        self.bal_counter
    }

    fn ann(&self) -> PoolResult<Fixed> {
        Ok(self.amp.mul_int(N_COINS)?)
    }

    /// Solves the invariant for D by Newton iteration starting at the balance sum.
    pub fn invariant_d(&self) -> PoolResult<Fixed> {
        let ann = self.ann()?;
        let (x, y) = (self.bal_stable, self.bal_counter);
        let sum = x.checked_add(y)?;
        let ann_sum = ann.checked_mul(sum)?;
        let ann_minus_one = ann.checked_sub(Fixed::ONE)?;

        let mut d = sum;
        for _ in 0..MAX_ITERATIONS {
            // d_p = D^3 / (4xy)
            let d_p = d.mul_div(d, x.mul_int(2)?)?.mul_div(d, y.mul_int(2)?)?;
            let numerator = ann_sum.checked_add(d_p.mul_int(2)?)?;
            let denominator = ann_minus_one.checked_mul(d)?.checked_add(d_p.mul_int(3)?)?;
            let next = numerator.mul_div(d, denominator)?;
            if (next.raw() - d.raw()).abs() <= 1 {
                return Ok(next);
            }
            d = next;
        }
        Err(PoolError::NoConvergence("invariant D"))
    }

    /// Balance of the other token that keeps `d` fixed when one side holds `x_new`.
    fn solve_other_balance(&self, x_new: Fixed, d: Fixed) -> PoolResult<Fixed> {
        let ann = self.ann()?;
        // c = D^3 / (4 * x_new * Ann), b = x_new + D / Ann
        let c = d.mul_div(d, x_new.mul_int(2)?)?.mul_div(d, ann.mul_int(2)?)?;
        let b = x_new.checked_add(d.checked_div(ann)?)?;

        let mut y = d;
        for _ in 0..MAX_ITERATIONS {
            let denominator = y.mul_int(2)?.checked_add(b)?.checked_sub(d)?;
            if !denominator.is_positive() {
                return Err(PoolError::NoConvergence("output balance"));
            }
            let next = y.mul_div(y, denominator)?.checked_add(c.checked_div(denominator)?)?;
            if (next.raw() - y.raw()).abs() <= 1 {
                return Ok(next);
            }
            y = next;
        }
        Err(PoolError::NoConvergence("output balance"))
    }

    /// Output amount for `dx` in, at unchanged D.
    pub fn get_dy(&self, dx: Fixed, direction: Direction) -> PoolResult<Fixed> {
        self.swap_balances(dx, direction).map(|(_, dy)| dy)
    }

    fn swap_balances(&self, dx: Fixed, direction: Direction) -> PoolResult<(PoolState, Fixed)> {
        if !dx.is_positive() {
            return Err(PoolError::InvalidAmount(dx));
        }
        let d = self.invariant_d()?;
        let (x_in, y_out) = match direction {
            Direction::StableIn => (self.bal_stable, self.bal_counter),
            Direction::StableOut => (self.bal_counter, self.bal_stable),
        };
        let x_new = x_in.checked_add(dx)?;
        let y_new = self.solve_other_balance(x_new, d)?;
        if !y_new.is_positive() || y_new >= y_out {
            return Err(PoolError::Drained);
        }
        let dy = y_out.checked_sub(y_new)?;
        let next = match direction {
            Direction::StableIn => PoolState { bal_stable: x_new, bal_counter: y_new, ..*self },
            Direction::StableOut => PoolState { bal_stable: y_new, bal_counter: x_new, ..*self },
        };
        Ok((next, dy))
    }

    pub fn apply_swap(&self, dx: Fixed, direction: Direction) -> PoolResult<PoolState> {
        self.swap_balances(dx, direction).map(|(pool, _)| pool)
    }

    /// Marginal price of the stablecoin in counterasset units, `|dy/dx|`.
    pub fn spot_price(&self) -> PoolResult<Fixed> {
        let ann = self.ann()?;
        let d = self.invariant_d()?;
        let dx_ratio = d.checked_div(self.bal_stable)?;
        let dy_ratio = d.checked_div(self.bal_counter)?;
        // D^3/(4x^2y) and D^3/(4xy^2) written in ratios to stay in range
        let stable_term = dx_ratio.checked_mul(dx_ratio)?.mul_div(dy_ratio, Fixed::from_int(4))?;
        let counter_term = dx_ratio.checked_mul(dy_ratio)?.mul_div(dy_ratio, Fixed::from_int(4))?;
        Ok(ann.checked_add(stable_term)?.checked_div(ann.checked_add(counter_term)?)?)
    }

    /// Share of the pool held in the stablecoin.
    pub fn weight(&self) -> PoolResult<Fixed> {
        let total = self.bal_stable.checked_add(self.bal_counter)?;
        Ok(self.bal_stable.checked_div(total)?)
    }

    /// Pool on the invariant surface for `d` whose stablecoin share is `weight`.
    pub fn at_weight(amp: Fixed, d: Fixed, weight: Fixed) -> PoolResult<PoolState> {
        if !amp.is_positive() {
            return Err(PoolError::InvalidAmp(amp));
        }
        if !weight.is_positive() || weight >= Fixed::ONE {
            return Err(PoolError::InvalidWeight(weight));
        }
        let ann = amp.mul_int(N_COINS)?;
        let counter_weight = Fixed::ONE.checked_sub(weight)?;
        // With x = w*u*D, y = (1-w)*u*D the invariant reduces to
        //   g(u) = Ann*u + 1 - Ann - k/u^2 = 0,  k = 1/(4w(1-w)),
        // which is increasing and concave, so Newton from u = 1 climbs monotonically.
        let k = Fixed::ONE.checked_div(weight.checked_mul(counter_weight)?.mul_int(4)?)?;
        let mut u = Fixed::ONE;
        let mut converged = false;
        for _ in 0..MAX_ITERATIONS {
            let u_sq = u.checked_mul(u)?;
            let k_over_u_sq = k.checked_div(u_sq)?;
            let g = ann.checked_mul(u)?.checked_add(Fixed::ONE)?.checked_sub(ann)?.checked_sub(k_over_u_sq)?;
            let slope = ann.checked_add(k_over_u_sq.mul_int(2)?.checked_div(u)?)?;
            let next = u.checked_sub(g.checked_div(slope)?)?;
            if (next.raw() - u.raw()).abs() <= 1 {
                u = next;
                converged = true;
                break;
            }
            u = next;
        }
        if !converged {
            return Err(PoolError::NoConvergence("weight curve"));
        }
        let scaled = u.checked_mul(d)?;
        PoolState::new(amp, weight.checked_mul(scaled)?, counter_weight.checked_mul(scaled)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CurvePoint {
    pub weight: Fixed,
    pub price: Fixed,
}

/// Spot price along the invariant surface for each requested weight at fixed `d`.
pub fn price_curve(amp: Fixed, d: Fixed, weights: &[Fixed]) -> PoolResult<Vec<CurvePoint>> {
    weights
        .iter()
        .map(|&weight| {
            let pool = PoolState::at_weight(amp, d, weight)?;
            Ok(CurvePoint { weight, price: pool.spot_price()? })
        })
        .collect()
}
