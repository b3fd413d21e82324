//! CSV rendering. Every value goes through `Fixed`'s decimal text, so output
//! is byte-stable.

use std::fmt::Write;

use crate::sim::{SimOutput, SweepPoint};
use crate::stableswap::CurvePoint;

pub const SIM_HEADER: &str = "step,t_years,weight,e_norm,e_p,e_i,e_d,e_ctrl,rate,tcr_mcr,debt";
pub const SWEEP_HEADER: &str = "ratio,phi_star";
pub const CURVE_HEADER: &str = "weight,price";

pub fn sim_csv(out: &SimOutput) -> String {
    let mut csv = String::with_capacity(64 * (out.rows.len() + 1));
    csv.push_str(SIM_HEADER);
    csv.push('\n');
    for r in &out.rows {
        let u = &r.update;
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.step, r.t_years, r.weight, u.e_norm, u.e_p, u.e_i, u.e_d, u.e_ctrl, u.rate, r.tcr_mcr, r.debt
        )
        .expect("writing to a String cannot fail");
    }
    csv
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut csv = format!("{SWEEP_HEADER}\n");
    for p in points {
        writeln!(csv, "{},{}", p.ratio, p.phi_star).expect("writing to a String cannot fail");
    }
    csv
}

pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut csv = format!("{CURVE_HEADER}\n");
    for p in points {
        writeln!(csv, "{},{}", p.weight, p.price).expect("writing to a String cannot fail");
    }
    csv
}

/// One-line run summary printed by the CLI.
pub fn sim_summary(out: &SimOutput) -> String {
    let t_terminal = out.t_terminal.map_or_else(|| "none".to_owned(), |t| t.to_string());
    format!("steps={} terminated_early={} t_terminal={}", out.rows.len(), out.terminated_early, t_terminal)
}
