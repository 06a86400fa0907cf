//! `spinframe` — solve, sweep, and simulate the direction- and frame-
//! transmission protocols from the command line.
//!
//! Exit codes: 0 success, 2 usage error, 3 numerical failure
//! (non-convergence), 4 unsupported model (unequal x/y weights).

mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use output::{emit, Cell, OutputFormat, RunManifest, Table};
use spinframe::direction::{
    mp_baseline, povm_completeness_check, solve_optimal, DirectionError, BESSEL_J0_FIRST_ZERO,
};
use spinframe::frame::{
    alternating_optimize, split_strategy_compare, weighted_merit_reduction, FrameError,
    MeritKind, OptimizeOptions,
};
use spinframe::numerics::NumericsError;
use spinframe::simulate::{
    estimate_direction_fidelity, estimate_frame_merit, sample_direction_outcomes,
    sample_frame_outcomes, SimConfig,
};
use spinframe::spinmath::HalfInt;

#[derive(Parser)]
#[command(name = "spinframe", version, about = "Quantum transmission of directions and Cartesian frames")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format for the result table.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: OutputFormat,
    /// Write the table to this file (with a `<out>.manifest.json` sidecar)
    /// instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Direction transmission with N spins.
    Direction {
        #[command(subcommand)]
        command: DirectionCommand,
    },
    /// Cartesian-frame transmission with one n-level system.
    Frame {
        #[command(subcommand)]
        command: FrameCommand,
    },
    /// Monte Carlo simulation of either protocol.
    Simulate {
        #[command(subcommand)]
        command: SimulateCommand,
    },
}

fn parse_half_int(s: &str) -> Result<HalfInt, String> {
    s.parse::<HalfInt>().map_err(|e| e.to_string())
}

#[derive(Subcommand)]
enum DirectionCommand {
    /// Solve the optimal signal for one (N, m).
    Solve {
        #[arg(long = "N")]
        n_spins: u32,
        /// Magnetic index (e.g. `0`, `1/2`); defaults to 0 for even N and
        /// 1/2 for odd N.
        #[arg(long = "m", value_parser = parse_half_int)]
        m: Option<HalfInt>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Solve a range of N (even N by default; see --include-odd).
    Sweep {
        #[arg(long = "N-min")]
        n_min: u32,
        #[arg(long = "N-max")]
        n_max: u32,
        /// Step between successive N (default 2, or 1 with --include-odd).
        #[arg(long)]
        step: Option<u32>,
        /// Include odd N (solved at m = 1/2).
        #[arg(long, default_value_t = false)]
        include_odd: bool,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Numerically verify the POVM resolution of identity.
    PovmCheck {
        #[arg(long = "N")]
        n_spins: u32,
        #[arg(long = "m", value_parser = parse_half_int)]
        m: Option<HalfInt>,
        #[arg(long, default_value_t = 40)]
        quad_order: usize,
        #[arg(long, default_value_t = 64)]
        phi_points: usize,
    },
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long, default_value_t = 5)]
    restarts: u32,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum FrameCommand {
    /// Alternating optimization of Alice's signal and Bob's fiducial.
    Optimize {
        #[arg(long)]
        n: u32,
        /// Merit to maximize: z, xy, or xyz.
        #[arg(long)]
        merit: String,
        #[command(flatten)]
        opt: OptimizeArgs,
    },
    /// Split strategy (half the spins per axis) vs the collective optimum.
    CompareSplit {
        #[arg(long = "N")]
        n_spins: u32,
    },
    /// Reduce a weighted set of directions to principal axes; with --n,
    /// also optimize the reduced merit.
    Weighted {
        /// File of directions: one `x y z weight` (or comma-separated)
        /// row per line, `#` comments allowed.
        #[arg(long)]
        dirs: PathBuf,
        #[arg(long)]
        n: Option<u32>,
        #[command(flatten)]
        opt: OptimizeArgs,
    },
}

#[derive(Subcommand)]
enum SimulateCommand {
    /// Sample direction-measurement outcomes and estimate the fidelity.
    Direction {
        #[arg(long = "N")]
        n_spins: u32,
        #[arg(long)]
        shots: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long = "m", value_parser = parse_half_int)]
        m: Option<HalfInt>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Sample frame-measurement error angles and estimate the merit.
    Frame {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        merit: String,
        #[arg(long)]
        shots: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

enum CliError {
    Usage(String),
    Numerical(String),
    Unsupported(String),
    Io(std::io::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<DirectionError> for CliError {
    fn from(e: DirectionError) -> Self {
        match e {
            DirectionError::InvalidIndex(_) => CliError::Usage(e.to_string()),
            DirectionError::Numerics(inner) => CliError::from(inner),
        }
    }
}

impl From<NumericsError> for CliError {
    fn from(e: NumericsError) -> Self {
        match e {
            NumericsError::NonConvergence { .. } => CliError::Numerical(e.to_string()),
            NumericsError::InvalidInput(_) => CliError::Usage(e.to_string()),
        }
    }
}

impl From<FrameError> for CliError {
    fn from(e: FrameError) -> Self {
        match e {
            FrameError::UnsupportedWeights(_) => CliError::Unsupported(e.to_string()),
            FrameError::InvalidIndex(_) | FrameError::InvalidInput(_) => {
                CliError::Usage(e.to_string())
            }
            FrameError::DegenerateBlock { .. } => CliError::Numerical(e.to_string()),
            FrameError::Numerics(inner) => CliError::from(inner),
            FrameError::Direction(inner) => CliError::from(inner),
        }
    }
}

fn thread_cap() -> Option<usize> {
    std::env::var("SPINFRAME_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v >= 1)
}

fn capped_workers(requested: usize) -> usize {
    match thread_cap() {
        Some(cap) => requested.clamp(1, cap),
        None => requested.max(1),
    }
}

fn default_m(n_spins: u32) -> HalfInt {
    if n_spins.is_multiple_of(2) {
        HalfInt::ZERO
    } else {
        HalfInt::HALF
    }
}

fn parse_merit(name: &str) -> Result<MeritKind, CliError> {
    match name {
        "z" => Ok(MeritKind::ZAxis),
        "xy" => Ok(MeritKind::XYAxes),
        "xyz" => Ok(MeritKind::AllAxes),
        other => Err(CliError::Usage(format!(
            "invalid value {other:?} for --merit (expected z, xy, or xyz)"
        ))),
    }
}

const DIRECTION_COLUMNS: [&str; 7] = [
    "N",
    "m",
    "fidelity",
    "one_minus_F",
    "mp_baseline",
    "eq22_limit",
    "ratio",
];

fn direction_row(n_spins: u32, m: HalfInt, tol: f64) -> Result<Vec<Cell>, CliError> {
    let sol = solve_optimal(n_spins, m, tol)?;
    let one_minus_f = 1.0 - sol.fidelity;
    let limit = (BESSEL_J0_FIRST_ZERO / (f64::from(n_spins) + 3.0)).powi(2);
    Ok(vec![
        Cell::UInt(u64::from(n_spins)),
        Cell::Str(m.to_string()),
        Cell::Float(sol.fidelity),
        Cell::Float(one_minus_f),
        Cell::Float(mp_baseline(n_spins)),
        Cell::Float(limit),
        Cell::Float(one_minus_f / limit),
    ])
}

const OPTIMIZE_COLUMNS: [&str; 10] = [
    "n",
    "merit_kind",
    "merit",
    "cos_wx",
    "cos_wy",
    "cos_wz",
    "mse_total",
    "iters",
    "converged",
    "restarts_used",
];

fn optimize_row(n: u32, kind_name: &str, sol: &spinframe::frame::FrameSolution) -> Vec<Cell> {
    vec![
        Cell::UInt(u64::from(n)),
        Cell::Str(kind_name.to_string()),
        Cell::Float(sol.merit),
        Cell::Float(sol.per_axis[0]),
        Cell::Float(sol.per_axis[1]),
        Cell::Float(sol.per_axis[2]),
        Cell::Float(sol.mse_total),
        Cell::UInt(u64::from(sol.iters)),
        Cell::Bool(sol.converged),
        Cell::UInt(u64::from(sol.restarts_used)),
    ]
}

const SIMULATE_COLUMNS: [&str; 7] = [
    "mean",
    "stderr",
    "analytic",
    "sigma_distance",
    "shots",
    "seed",
    "flag",
];

fn simulate_row(report: &spinframe::simulate::EstimateReport, seed: u64) -> Vec<Cell> {
    let flag = if report.sigma_distance > 4.0 {
        "high-sigma"
    } else {
        ""
    };
    vec![
        Cell::Float(report.mean),
        Cell::Float(report.stderr),
        Cell::Float(report.analytic),
        Cell::Float(report.sigma_distance),
        Cell::UInt(report.shots),
        Cell::UInt(seed),
        Cell::Str(flag.to_string()),
    ]
}

fn read_directions(path: &PathBuf) -> Result<(Vec<[f64; 3]>, Vec<f64>), CliError> {
    let text = std::fs::read_to_string(path)?;
    let mut dirs = Vec::new();
    let mut weights = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() != 4 {
            return Err(CliError::Usage(format!(
                "--dirs file line {}: expected `x y z weight`, got {line:?}",
                lineno + 1
            )));
        }
        let parse = |s: &str| -> Result<f64, CliError> {
            s.parse::<f64>().map_err(|_| {
                CliError::Usage(format!(
                    "--dirs file line {}: cannot parse {s:?} as a number",
                    lineno + 1
                ))
            })
        };
        dirs.push([parse(fields[0])?, parse(fields[1])?, parse(fields[2])?]);
        weights.push(parse(fields[3])?);
    }
    if dirs.is_empty() {
        return Err(CliError::Usage(
            "--dirs file contains no direction rows".into(),
        ));
    }
    Ok((dirs, weights))
}

struct CommandOutput {
    table: Table,
    manifest: RunManifest,
    /// Set when the table should still be emitted before a nonzero exit.
    failure: Option<CliError>,
}

fn run(cli: &Cli) -> Result<CommandOutput, CliError> {
    match &cli.command {
        Command::Direction { command } => run_direction(command),
        Command::Frame { command } => run_frame(command),
        Command::Simulate { command } => run_simulate(command),
    }
}

fn run_direction(command: &DirectionCommand) -> Result<CommandOutput, CliError> {
    match command {
        DirectionCommand::Solve { n_spins, m, tol } => {
            let m = m.unwrap_or(default_m(*n_spins));
            let mut table = Table::new(DIRECTION_COLUMNS.to_vec());
            table.push(direction_row(*n_spins, m, *tol)?);
            let params = BTreeMap::from([
                ("N".to_string(), n_spins.to_string()),
                ("m".to_string(), m.to_string()),
                ("tol".to_string(), tol.to_string()),
            ]);
            Ok(CommandOutput {
                table,
                manifest: RunManifest::new("direction solve", params, 0),
                failure: None,
            })
        }
        DirectionCommand::Sweep {
            n_min,
            n_max,
            step,
            include_odd,
            tol,
        } => {
            if n_min > n_max {
                return Err(CliError::Usage(
                    "--N-min must not exceed --N-max".into(),
                ));
            }
            let step = step.unwrap_or(if *include_odd { 1 } else { 2 });
            if step == 0 {
                return Err(CliError::Usage("--step must be positive".into()));
            }
            let mut table = Table::new(DIRECTION_COLUMNS.to_vec());
            let mut n = *n_min;
            while n <= *n_max {
                table.push(direction_row(n, default_m(n), *tol)?);
                n += step;
            }
            let params = BTreeMap::from([
                ("N-min".to_string(), n_min.to_string()),
                ("N-max".to_string(), n_max.to_string()),
                ("step".to_string(), step.to_string()),
                ("include-odd".to_string(), include_odd.to_string()),
                ("tol".to_string(), tol.to_string()),
            ]);
            Ok(CommandOutput {
                table,
                manifest: RunManifest::new("direction sweep", params, 0),
                failure: None,
            })
        }
        DirectionCommand::PovmCheck {
            n_spins,
            m,
            quad_order,
            phi_points,
        } => {
            let m = m.unwrap_or(default_m(*n_spins));
            let deviation = povm_completeness_check(*n_spins, m, *quad_order, *phi_points)?;
            let mut table = Table::new(vec![
                "N",
                "m",
                "quad_order",
                "phi_points",
                "max_abs_deviation",
            ]);
            table.push(vec![
                Cell::UInt(u64::from(*n_spins)),
                Cell::Str(m.to_string()),
                Cell::UInt(*quad_order as u64),
                Cell::UInt(*phi_points as u64),
                Cell::Float(deviation),
            ]);
            let params = BTreeMap::from([
                ("N".to_string(), n_spins.to_string()),
                ("m".to_string(), m.to_string()),
                ("quad-order".to_string(), quad_order.to_string()),
                ("phi-points".to_string(), phi_points.to_string()),
            ]);
            Ok(CommandOutput {
                table,
                manifest: RunManifest::new("direction povm-check", params, 0),
                failure: None,
            })
        }
    }
}

fn optimize_options(opt: &OptimizeArgs) -> OptimizeOptions {
    OptimizeOptions {
        tol: opt.tol,
        max_iters: opt.max_iters,
        restarts: opt.restarts,
        seed: opt.seed,
        workers: capped_workers(
            std::thread::available_parallelism().map_or(1, |v| v.get()),
        ),
        init: None,
    }
}

fn run_frame(command: &FrameCommand) -> Result<CommandOutput, CliError> {
    match command {
        FrameCommand::Optimize { n, merit, opt } => {
            let kind = parse_merit(merit)?;
            let sol = alternating_optimize(*n, kind, &optimize_options(opt))?;
            let mut table = Table::new(OPTIMIZE_COLUMNS.to_vec());
            table.push(optimize_row(*n, merit, &sol));
            let params = BTreeMap::from([
                ("n".to_string(), n.to_string()),
                ("merit".to_string(), merit.clone()),
                ("restarts".to_string(), opt.restarts.to_string()),
                ("tol".to_string(), opt.tol.to_string()),
                ("max-iters".to_string(), opt.max_iters.to_string()),
                ("seed".to_string(), opt.seed.to_string()),
            ]);
            let failure = if sol.converged {
                None
            } else {
                Some(CliError::Numerical(format!(
                    "alternating optimization did not converge within {} iterations",
                    opt.max_iters
                )))
            };
            Ok(CommandOutput {
                table,
                manifest: RunManifest::new("frame optimize", params, opt.seed),
                failure,
            })
        }
        FrameCommand::CompareSplit { n_spins } => {
            let cmp = split_strategy_compare(*n_spins)?;
            let mut table = Table::new(vec![
                "N",
                "split_per_axis_mse",
                "collective_per_axis_mse",
                "bbm_reference",
            ]);
            table.push(vec![
                Cell::UInt(u64::from(*n_spins)),
                Cell::Float(cmp.split_per_axis_mse),
                Cell::Float(cmp.collective_per_axis_mse),
                Cell::Float(cmp.bbm_reference),
            ]);
            let params = BTreeMap::from([("N".to_string(), n_spins.to_string())]);
            Ok(CommandOutput {
                table,
                manifest: RunManifest::new("frame compare-split", params, 0),
                failure: None,
            })
        }
        FrameCommand::Weighted { dirs, n, opt } => {
            let (directions, weights) = read_directions(dirs)?;
            let (principal, axes) = weighted_merit_reduction(&directions, &weights)?;
            let scale = principal[0].abs().max(1.0);
            // which principal axis plays z: the odd one out of the equal pair
            let (xy_weight, z_weight, reducible) = if (principal[0] - principal[1]).abs()
                <= 1e-9 * scale
            {
                ((principal[0] + principal[1]) / 2.0, principal[2], true)
            } else if (principal[1] - principal[2]).abs() <= 1e-9 * scale {
                ((principal[1] + principal[2]) / 2.0, principal[0], true)
            } else {
                (0.0, 0.0, false)
            };
            match n {
                None => {
                    let mut table = Table::new(vec![
                        "w1", "w2", "w3", "e1x", "e1y", "e1z", "e2x", "e2y", "e2z", "e3x",
                        "e3y", "e3z", "reducible",
                    ]);
                    let mut row = vec![
                        Cell::Float(principal[0]),
                        Cell::Float(principal[1]),
                        Cell::Float(principal[2]),
                    ];
                    for col in 0..3 {
                        for row_idx in 0..3 {
                            row.push(Cell::Float(axes.entry(row_idx, col)));
                        }
                    }
                    row.push(Cell::Bool(reducible));
                    table.push(row);
                    let params = BTreeMap::from([(
                        "dirs".to_string(),
                        dirs.display().to_string(),
                    )]);
                    Ok(CommandOutput {
                        table,
                        manifest: RunManifest::new("frame weighted", params, 0),
                        failure: None,
                    })
                }
                Some(n) => {
                    if !reducible {
                        return Err(CliError::Unsupported(format!(
                            "principal weights {principal:?} have no equal pair; the \
                             weighted merit tensor needs equal x and y weights"
                        )));
                    }
                    let kind = MeritKind::Weighted([xy_weight, xy_weight, z_weight]);
                    let sol = alternating_optimize(*n, kind, &optimize_options(opt))?;
                    let mut table = Table::new(vec![
                        "n",
                        "w_xy",
                        "w_z",
                        "merit",
                        "cos_wx",
                        "cos_wy",
                        "cos_wz",
                        "mse_total",
                        "iters",
                        "converged",
                    ]);
                    table.push(vec![
                        Cell::UInt(u64::from(*n)),
                        Cell::Float(xy_weight),
                        Cell::Float(z_weight),
                        Cell::Float(sol.merit),
                        Cell::Float(sol.per_axis[0]),
                        Cell::Float(sol.per_axis[1]),
                        Cell::Float(sol.per_axis[2]),
                        Cell::Float(sol.mse_total),
                        Cell::UInt(u64::from(sol.iters)),
                        Cell::Bool(sol.converged),
                    ]);
                    let params = BTreeMap::from([
                        ("dirs".to_string(), dirs.display().to_string()),
                        ("n".to_string(), n.to_string()),
                        ("seed".to_string(), opt.seed.to_string()),
                    ]);
                    let failure = if sol.converged {
                        None
                    } else {
                        Some(CliError::Numerical(
                            "weighted optimization did not converge".into(),
                        ))
                    };
                    Ok(CommandOutput {
                        table,
                        manifest: RunManifest::new("frame weighted", params, opt.seed),
                        failure,
                    })
                }
            }
        }
    }
}

fn run_simulate(command: &SimulateCommand) -> Result<CommandOutput, CliError> {
    match command {
        SimulateCommand::Direction {
            n_spins,
            shots,
            seed,
            m,
            workers,
        } => {
            let m = m.unwrap_or(default_m(*n_spins));
            let sol = solve_optimal(*n_spins, m, 1e-12)?;
            let config = SimConfig::new(*shots, *seed).with_workers(capped_workers(*workers));
            let samples = sample_direction_outcomes(&sol.signal, &config);
            let report = estimate_direction_fidelity(&samples, sol.fidelity)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let mut table = Table::new(SIMULATE_COLUMNS.to_vec());
            table.push(simulate_row(&report, *seed));
            let params = BTreeMap::from([
                ("N".to_string(), n_spins.to_string()),
                ("m".to_string(), m.to_string()),
                ("shots".to_string(), shots.to_string()),
                ("seed".to_string(), seed.to_string()),
                ("workers".to_string(), config.workers.to_string()),
            ]);
            Ok(CommandOutput {
                table,
                manifest: RunManifest::new("simulate direction", params, *seed),
                failure: None,
            })
        }
        SimulateCommand::Frame {
            n,
            merit,
            shots,
            seed,
            workers,
        } => {
            let kind = parse_merit(merit)?;
            let options = OptimizeOptions {
                restarts: 2,
                ..OptimizeOptions::default()
            };
            let sol = alternating_optimize(*n, kind, &options)?;
            let config = SimConfig::new(*shots, *seed).with_workers(capped_workers(*workers));
            let samples = sample_frame_outcomes(&sol.alice, &sol.bob, &config)
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            let report = estimate_frame_merit(&samples, kind, sol.merit)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let mut table = Table::new(SIMULATE_COLUMNS.to_vec());
            table.push(simulate_row(&report, *seed));
            let params = BTreeMap::from([
                ("n".to_string(), n.to_string()),
                ("merit".to_string(), merit.clone()),
                ("shots".to_string(), shots.to_string()),
                ("seed".to_string(), seed.to_string()),
                ("workers".to_string(), config.workers.to_string()),
            ]);
            Ok(CommandOutput {
                table,
                manifest: RunManifest::new("simulate frame", params, *seed),
                failure: None,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(output) => {
            if let Err(e) = emit(
                &output.table,
                cli.format,
                cli.out.as_deref(),
                &output.manifest,
            ) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            match output.failure {
                None => ExitCode::SUCCESS,
                Some(err) => report_error(err),
            }
        }
        Err(err) => report_error(err),
    }
}

fn report_error(err: CliError) -> ExitCode {
    match err {
        CliError::Usage(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        CliError::Numerical(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        CliError::Unsupported(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(4)
        }
        CliError::Io(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
