mod svg;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use supplyctl::config::{parse_range, ConfigError, RunConfig, SweepConfig};
use supplyctl::report;
use supplyctl::sim::{self, SimError};
use supplyctl::stableswap::{price_curve, PoolError};
use supplyctl::Fixed;

use svg::Series;

#[derive(Debug, Parser)]
#[command(name = "supplyctl", version, about = "Stablecoin interest-rate controller simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario and write its per-step CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// CSV destination; overrides `out_csv` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// SVG chart of rate and TCR/MCR against time.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Solve the integrator strength that reaches full leverage at a target time.
    SweepPhi {
        #[arg(long)]
        config: Option<PathBuf>,
        /// `start:stop:step`, inclusive.
        #[arg(long)]
        ratios: Option<String>,
        #[arg(long)]
        target_years: Option<Fixed>,
        #[arg(long)]
        tol: Option<Fixed>,
        #[arg(long)]
        held_weight: Option<Fixed>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Spot price against pool weight for a fixed invariant.
    PoolCurve {
        #[arg(long, default_value = "100")]
        amp: Fixed,
        #[arg(long, default_value = "2000000")]
        d: Fixed,
        /// `start:stop:step`, inclusive.
        #[arg(long, default_value = "0.05:0.95:0.01")]
        weights: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Compute(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Compute(_) => 2,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Invalid(e) => e.into(),
            e => Failure::Usage(e.to_string()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        if e.is_config_error() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Compute(e.to_string())
        }
    }
}

impl From<PoolError> for Failure {
    fn from(e: PoolError) -> Self {
        match e {
            PoolError::InvalidAmp(_)
            | PoolError::InvalidBalance(..)
            | PoolError::InvalidAmount(_)
            | PoolError::InvalidWeight(_) => Failure::Usage(e.to_string()),
            _ => Failure::Compute(e.to_string()),
        }
    }
}

/// Artifacts are only written once every computation has succeeded.
struct Artifact {
    path: PathBuf,
    body: String,
}

fn write_atomic(a: &Artifact) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Usage(format!("cannot write {}: {e}", a.path.display()));
    let dir = match a.path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(a.body.as_bytes()).map_err(io)?;
    tmp.persist(&a.path).map_err(|e| io(e.error))?;
    Ok(())
}

fn read_config(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn out_path(flag: Option<PathBuf>, from_config: Option<String>) -> Result<PathBuf, Failure> {
    flag.or(from_config.map(PathBuf::from))
        .ok_or_else(|| Failure::Usage("no output path: pass --out or set out_csv".into()))
}

fn simulate(config: &Path, out: Option<PathBuf>, plot: Option<PathBuf>) -> Result<Vec<Artifact>, Failure> {
    let cfg = RunConfig::from_json(&read_config(config)?)?;
    let out_csv = out_path(out, cfg.out_csv.clone())?;
    let plot = plot.or(cfg.plot_svg.clone().map(PathBuf::from));
    let result = sim::run(&cfg.scenario())?;
    println!("{}", report::sim_summary(&result));

    let mut artifacts = vec![Artifact { path: out_csv, body: report::sim_csv(&result) }];
    if let Some(path) = plot {
        let t: Vec<f64> = result.rows.iter().map(|r| r.t_years.to_f64()).collect();
        let rate = t.iter().zip(&result.rows).map(|(t, r)| (*t, r.update.rate.to_f64())).collect();
        let tcr = t.iter().zip(&result.rows).map(|(t, r)| (*t, r.tcr_mcr.to_f64())).collect();
        let body = svg::chart("t (years)", &[Series::new("rate", rate), Series::new("TCR/MCR", tcr)]);
        artifacts.push(Artifact { path, body });
    }
    Ok(artifacts)
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    config: Option<PathBuf>,
    ratios: Option<String>,
    target_years: Option<Fixed>,
    tol: Option<Fixed>,
    held_weight: Option<Fixed>,
    workers: Option<usize>,
    out: Option<PathBuf>,
    plot: Option<PathBuf>,
) -> Result<Vec<Artifact>, Failure> {
    let mut cfg = match (&config, &ratios) {
        (Some(path), _) => SweepConfig::from_json(&read_config(path)?)?,
        (None, Some(r)) => SweepConfig::new(r.clone(), target_years.unwrap_or(Fixed::ONE)),
        (None, None) => return Err(Failure::Usage("pass --config or --ratios".into())),
    };
    if let Some(r) = ratios {
        cfg.ratios = r;
    }
    cfg.target_years = target_years.unwrap_or(cfg.target_years);
    cfg.tol = tol.unwrap_or(cfg.tol);
    cfg.held_weight = held_weight.unwrap_or(cfg.held_weight);
    cfg.workers = workers.unwrap_or(cfg.workers);
    let out_csv = out_path(out, cfg.out_csv.clone())?;
    let plot = plot.or(cfg.plot_svg.clone().map(PathBuf::from));

    let req = cfg.request()?;
    let points = sim::sweep_phi(&req, cfg.workers)?;
    println!("ratios={} target_years={} tol={}", points.len(), req.target, req.tol);

    let mut artifacts = vec![Artifact { path: out_csv, body: report::sweep_csv(&points) }];
    if let Some(path) = plot {
        let series = points.iter().map(|p| (p.ratio.to_f64(), p.phi_star.to_f64())).collect();
        artifacts.push(Artifact { path, body: svg::chart("TCR/MCR", &[Series::new("phi*", series)]) });
    }
    Ok(artifacts)
}

fn pool_curve(
    amp: Fixed,
    d: Fixed,
    weights: &str,
    out: PathBuf,
    plot: Option<PathBuf>,
) -> Result<Vec<Artifact>, Failure> {
    let weights = parse_range(weights)?;
    let curve = price_curve(amp, d, &weights)?;
    println!("points={} amp={amp} d={d}", curve.len());

    let mut artifacts = vec![Artifact { path: out, body: report::curve_csv(&curve) }];
    if let Some(path) = plot {
        let series = curve.iter().map(|p| (p.weight.to_f64(), p.price.to_f64())).collect();
        artifacts.push(Artifact { path, body: svg::chart("weight", &[Series::new("price", series)]) });
    }
    Ok(artifacts)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let artifacts = match cli.cmd {
        Command::Simulate { config, out, plot } => simulate(&config, out, plot)?,
        Command::SweepPhi { config, ratios, target_years, tol, held_weight, workers, out, plot } => {
            sweep(config, ratios, target_years, tol, held_weight, workers, out, plot)?
        }
        Command::PoolCurve { amp, d, weights, out, plot } => pool_curve(amp, d, &weights, out, plot)?,
    };
    artifacts.iter().try_for_each(write_atomic)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(msg) => eprintln!("error: {msg}"),
                Failure::Compute(msg) => eprintln!("computation failed: {msg}"),
            }
            ExitCode::from(f.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_debug_assert() {
        Cli::command().debug_assert();
    }

    #[test]
    fn pool_curve_defaults() {
        let cli = Cli::try_parse_from(["supplyctl", "pool-curve", "--out", "c.csv"]).unwrap();
        match cli.cmd {
            Command::PoolCurve { amp, d, weights, .. } => {
                assert_eq!(amp, Fixed::from_int(100));
                assert_eq!(d, Fixed::from_int(2_000_000));
                assert_eq!(weights, "0.05:0.95:0.01");
            }
            _ => panic!("expected pool-curve"),
        }
    }

    #[test]
    fn decimal_flags_reject_garbage() {
        let err = Cli::try_parse_from(["supplyctl", "pool-curve", "--amp", "1e2", "--out", "c.csv"]).unwrap_err();
        assert!(err.use_stderr());
    }
}
