//! Deterministic PID interest-rate control for CDP stablecoins.
//!
//! The controller reads the stablecoin's weight in a StableSwap pool and
//! sets an annualized borrow rate; the scenario engine couples it to an
//! aggregate CDP leverage model. All arithmetic is 18-decimal fixed point.

pub mod cdp;
pub mod config;
pub mod controller;
pub mod fixed;
pub mod report;
pub mod sim;
pub mod stableswap;

pub use cdp::CdpSystemState;
pub use controller::{ControllerConfig, ControllerState, RateUpdate};
pub use fixed::Fixed;
pub use sim::{Scenario, SimOutput, SweepPoint, SweepRequest, WeightSchedule};
pub use stableswap::{Direction, PoolState};
