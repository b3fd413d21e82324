//! Shared test support: an f64 reference simulator written independently of
//! the fixed-point kernel, and a seeded random scenario generator.

#![allow(dead_code)]

use rand::Rng;
use supplyctl::sim::{default_dt, WeightPoint};
use supplyctl::{ControllerConfig, Fixed, Scenario, WeightSchedule};

pub fn fx(s: &str) -> Fixed {
    s.parse().unwrap()
}

pub fn f(v: Fixed) -> f64 {
    v.to_string().parse().unwrap()
}

/// Rows of the f64 reference run: (t, rate, tcr_mcr).
pub struct FloatRun {
    pub rows: Vec<(f64, f64, f64)>,
    pub terminated: bool,
}

/// Straight f64 transcription of the controller loop: normalize the weight
/// error, accumulate TWCE and the gain-weighted integral with its floor,
/// rotate derivative buckets, clamp and map through `alpha*e/(1-e)`, then
/// accrue with simple compounding.
pub fn float_run(sc: &Scenario) -> FloatRun {
    let c = &sc.controller_cfg;
    let (w_r, alpha, phi, k_d, period) = (f(c.w_r), f(c.alpha), f(c.phi), f(c.k_d), f(c.period));
    let (floor, e_max) = (f(c.e_i_floor), f(c.e_ctrl_max));
    let k_fixed = c.k_i_fixed.map(f);
    let (dt, duration) = (f(sc.dt), f(sc.duration));

    let mut tcr = f(sc.initial_ratio);
    let mut twce = 0.0_f64;
    let mut e_i = 0.0_f64;
    let mut last_t: Option<f64> = None;
    let mut delayed: Option<(f64, f64)> = None;
    let mut previous: Option<(f64, f64)> = None;
    let mut rate_prev: Option<f64> = None;
    let mut rows = Vec::new();

    for k in 0u64.. {
        let t = k as f64 * dt;
        if t > duration {
            return FloatRun { rows, terminated: false };
        }
        if let Some(r) = rate_prev {
            tcr /= 1.0 + r * dt;
        }
        let w = float_weight(&sc.weight_schedule, k, t);
        let e = w - w_r;
        let e_norm = if e <= 0.0 { e / w_r } else { e / (1.0 - w_r) };
        let step = last_t.map_or(0.0, |lt| t - lt);
        twce += e_norm * step;
        let k_i = k_fixed.unwrap_or_else(|| (phi * (tcr - 1.0)).max(0.0));
        e_i = (e_i + k_i * e_norm * step).max(floor);
        match delayed {
            None => delayed = Some((twce, t)),
            Some((_, td)) if t - td >= period => {
                previous = delayed;
                delayed = Some((twce, t));
            }
            _ => {}
        }
        let e_d = match (delayed, previous) {
            (Some((a, ta)), Some((b, tb))) => k_d * (a - b) / (ta - tb),
            _ => 0.0,
        };
        last_t = Some(t);
        let e_ctrl = (e_norm + e_i + e_d).min(e_max);
        let rate = alpha * e_ctrl / (1.0 - e_ctrl);
        rows.push((t, rate, tcr));
        rate_prev = Some(rate);
        if tcr <= 1.0 {
            return FloatRun { rows, terminated: true };
        }
    }
    unreachable!()
}

fn float_weight(s: &WeightSchedule, k: u64, t: f64) -> f64 {
    match s {
        WeightSchedule::Constant(w) => f(*w),
        WeightSchedule::RampHold { w_start, w_end, step_increment, steps_per_increment } => {
            let (a, b, inc) = (f(*w_start), f(*w_end), f(*step_increment));
            let w = a + (k / u64::from(*steps_per_increment)) as f64 * inc;
            if inc > 0.0 {
                w.min(b)
            } else {
                w.max(b)
            }
        }
        WeightSchedule::Points(points) => {
            let mut w = f(points[0].w);
            for p in points {
                if f(p.t) <= t {
                    w = f(p.w);
                }
            }
            w
        }
    }
}

/// Decimal text with `digits` fractional places, drawn uniformly from [lo, hi).
fn dec(rng: &mut impl Rng, lo: f64, hi: f64, digits: usize) -> Fixed {
    let v = rng.gen_range(lo..hi);
    format!("{v:.digits$}").parse().unwrap()
}

/// Random scenario whose discrete boundaries (bucket rotation, schedule
/// breakpoints, horizon) sit at least a fifth of a step away from any update
/// time, so fixed-point and f64 make the same branch decisions.
pub fn random_scenario(rng: &mut impl Rng) -> Scenario {
    let dt = match rng.gen_range(0..3) {
        0 => default_dt(),
        1 => Fixed::from_ratio(1, 365).unwrap(),
        _ => Fixed::from_ratio(1, 8766).unwrap(),
    };
    let dt_f = f(dt);
    let off_grid = |rng: &mut dyn rand::RngCore, steps: u64| -> Fixed {
        let frac = rng.gen_range(0.2..0.8);
        format!("{:.15}", (steps as f64 + frac) * dt_f).parse().unwrap()
    };

    let w_r = dec(rng, 0.3, 0.7, 4);
    let k_i_fixed = if rng.gen_bool(0.3) { Some(dec(rng, 0.0, 3.0, 3)) } else { None };
    let k_d = if rng.gen_bool(0.5) { dec(rng, 0.0, 2.0, 3) } else { Fixed::ZERO };
    let period_steps = rng.gen_range(1..40);
    let cfg = ControllerConfig {
        w_r,
        alpha: dec(rng, 0.05, 0.3, 4),
        phi: dec(rng, 0.0, 10.0, 3),
        k_i_fixed,
        k_d,
        period: off_grid(rng, period_steps),
        e_i_floor: dec(rng, -1.0, 0.0, 3),
        ..ControllerConfig::default()
    };

    let steps = rng.gen_range(20..600);
    let schedule = match rng.gen_range(0..3) {
        0 => WeightSchedule::Constant(dec(rng, 0.05, 0.95, 3)),
        1 => {
            let w_start = dec(rng, 0.2, 0.8, 2);
            let w_end = dec(rng, 0.05, 0.95, 2);
            let mag = dec(rng, 0.001, 0.05, 3);
            let step_increment = if w_end < w_start { -mag } else { mag };
            WeightSchedule::RampHold { w_start, w_end, step_increment, steps_per_increment: rng.gen_range(1..4) }
        }
        _ => {
            let n = rng.gen_range(1..8);
            let mut at = 0u64;
            let mut points = vec![WeightPoint { t: Fixed::ZERO, w: dec(rng, 0.05, 0.95, 3) }];
            for _ in 1..n {
                at += rng.gen_range(1..(steps / n as u64).max(2));
                points.push(WeightPoint { t: off_grid(rng, at), w: dec(rng, 0.05, 0.95, 3) });
            }
            WeightSchedule::Points(points)
        }
    };

    Scenario {
        controller_cfg: cfg,
        initial_ratio: dec(rng, 1.05, 2.0, 3),
        initial_debt: dec(rng, 1.0, 1_000_000.0, 2),
        dt,
        duration: off_grid(rng, steps),
        weight_schedule: schedule,
    }
}

pub fn rel_close(a: f64, b: f64, rel: f64, abs_floor: f64) -> bool {
    (a - b).abs() <= (rel * b.abs()).max(abs_floor)
}
