use std::f64::consts::PI;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use scissorkin::io::{
    read_mechanism, read_trajectory_file, stats_to_json, write_mechanism, write_trajectory, DesignOutput,
};
use scissorkin::mobility::{assemble_constraints, dof, joint_screws, loop_basis};
use scissorkin::model::{build_unit, default_height, design_report, link_lengths, DesignParams, MechanismModel};
use scissorkin::sim::{node_stats, ring_assembly, simulate, DriveProfile, ProfileKind};
use scissorkin::validate::{run_checks, ValidateOptions};
use scissorkin::Error;

#[derive(Parser)]
#[command(name = "scissorkin", version, about = "Kinematics of triple-scissors deployable antenna units")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Link lengths and envelope report for a ring design.
    Design(DesignCmd),
    /// Degrees of freedom from the screw constraint matrix.
    Dof(DofCmd),
    /// Simulate a deployment and write the trajectory CSV.
    Simulate(SimulateCmd),
    /// Run closure, mobility, finite-difference and symmetry checks.
    Validate(ValidateCmd),
    /// Max/min/avg table of a trajectory CSV.
    Stats(StatsCmd),
}

#[derive(Args)]
struct DesignFlags {
    /// Aperture diameter (m).
    #[arg(long, default_value_t = 25.0)]
    diameter: f64,
    /// Number of modular units in the ring.
    #[arg(long)]
    units: Option<usize>,
    /// Deployed unit height (m); defaults per unit count.
    #[arg(long)]
    height: Option<f64>,
    /// Deployed opening angle (deg).
    #[arg(long, default_value_t = 80.0)]
    deployed_angle: f64,
    /// Stowed opening angle (deg).
    #[arg(long, default_value_t = 12.54)]
    stowed_angle: f64,
}

impl DesignFlags {
    fn params(&self) -> Result<DesignParams, Error> {
        let units = self.units.unwrap_or(12);
        let theta1 = self.deployed_angle.to_radians();
        let height = match self.height {
            Some(h) => h,
            None => default_height(self.diameter, units, theta1)?,
        };
        DesignParams::new(self.diameter, units, height, theta1, self.stowed_angle.to_radians())
    }
}

#[derive(Args)]
struct ModelSource {
    /// Mechanism description (JSON); the reference unit is built from the design flags otherwise.
    #[arg(long, short = 'm')]
    mechanism: Option<PathBuf>,
    #[command(flatten)]
    design: DesignFlags,
}

impl ModelSource {
    fn load(&self) -> Result<MechanismModel, Error> {
        match &self.mechanism {
            Some(path) => read_mechanism(path),
            None => build_unit(&self.design.params()?),
        }
    }
}

#[derive(Args)]
struct DesignCmd {
    /// Aperture diameter (m).
    #[arg(long)]
    diameter: f64,
    #[arg(long, default_value_t = 12)]
    units: usize,
    #[arg(long)]
    height: Option<f64>,
    #[arg(long, default_value_t = 80.0)]
    deployed_angle: f64,
    #[arg(long, default_value_t = 12.54)]
    stowed_angle: f64,
    /// Report destination (stdout when omitted).
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
    /// Also write the unit's mechanism description here.
    #[arg(long)]
    mechanism_out: Option<PathBuf>,
}

#[derive(Args)]
struct DofCmd {
    #[command(flatten)]
    source: ModelSource,
    /// Opening angle (deg); the middle of the working range when omitted.
    #[arg(long)]
    theta: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Linear,
    Smoothstep,
}

#[derive(Args)]
struct SimulateCmd {
    #[command(flatten)]
    source: ModelSource,
    #[arg(long, value_enum, default_value_t = Profile::Linear)]
    profile: Profile,
    /// Deploy-leg duration (s).
    #[arg(long, default_value_t = 53.0)]
    deploy_time: f64,
    /// Fold back after deploying.
    #[arg(long)]
    cycle: bool,
    /// Full cycle duration (s).
    #[arg(long, default_value_t = 102.0)]
    cycle_time: f64,
    /// Sample spacing (s).
    #[arg(long, default_value_t = 0.05)]
    dt: f64,
    /// Trajectory CSV destination (stdout when omitted).
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
    /// Also write node statistics (JSON) here.
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateCmd {
    #[command(flatten)]
    source: ModelSource,
    /// Deployment rate dθ/dt (rad/s) used by the rate checks.
    #[arg(long)]
    drive_rate: Option<f64>,
    /// Number of θ samples across the working range.
    #[arg(long, default_value_t = 25)]
    samples: usize,
}

#[derive(Args)]
struct StatsCmd {
    /// Trajectory CSV.
    #[arg(long, short = 'i')]
    input: PathBuf,
    /// Stats JSON destination (stdout when omitted).
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
}

enum Failure {
    Check(String),
    Error(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Error(Error::Io(e))
    }
}

fn emit(text: &str, dest: &Option<PathBuf>) -> Result<(), Failure> {
    match dest {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run_design(cmd: &DesignCmd) -> Result<(), Failure> {
    let theta1 = cmd.deployed_angle.to_radians();
    let height = match cmd.height {
        Some(h) => h,
        None => default_height(cmd.diameter, cmd.units, theta1)?,
    };
    let params = DesignParams::new(cmd.diameter, cmd.units, height, theta1, cmd.stowed_angle.to_radians())?;
    let links = link_lengths(params.height, params.theta_deployed)?;
    let report = design_report(&params)?;
    let out = DesignOutput::new(&params, &links, report);
    emit(&(serde_json::to_string_pretty(&out).map_err(Error::from)? + "\n"), &cmd.output)?;
    if let Some(path) = &cmd.mechanism_out {
        write_mechanism(&build_unit(&params)?, path)?;
    }
    Ok(())
}

fn working_mid(model: &MechanismModel) -> f64 {
    model.working_range.map_or(PI / 2.0, |(a, b)| 0.5 * (a + b))
}

fn run_dof(cmd: &DofCmd) -> Result<(), Failure> {
    let model = cmd.source.load()?;
    let theta = cmd.theta.map_or_else(|| working_mid(&model), f64::to_radians);
    let report = dof(&model, theta)?;
    let basis = loop_basis(&model)?;
    let c = assemble_constraints(&basis, &joint_screws(&model, &model.node_positions(theta)?.positions));
    println!("DoF: {}, loops: {}", report.dof, report.loops);
    println!("theta: {:.4} deg", theta.to_degrees());
    println!("constraint matrix: {} x {} (rank {})", c.nrows(), c.ncols(), report.rank);
    println!("smallest nonzero singular value (relative): {:.6e}", report.smallest_kept);
    Ok(())
}

fn run_simulate(cmd: &SimulateCmd) -> Result<(), Failure> {
    let model = cmd.source.load()?;
    let defaults = DriveProfile::default();
    let (theta_start, theta_end) = match (&cmd.source.mechanism, model.working_range) {
        (Some(_), Some((lo, hi))) => (lo, hi),
        (Some(_), None) => (defaults.theta_start, defaults.theta_end),
        (None, _) => (
            cmd.source.design.stowed_angle.to_radians(),
            cmd.source.design.deployed_angle.to_radians(),
        ),
    };
    let profile = DriveProfile {
        kind: match cmd.profile {
            Profile::Linear => ProfileKind::Linear,
            Profile::Smoothstep => ProfileKind::Smoothstep,
        },
        theta_start,
        theta_end,
        t_deploy: cmd.deploy_time,
        cycle: cmd.cycle,
        t_cycle: cmd.cycle_time,
    };
    let mut log = simulate(&model, &profile, cmd.dt)?;
    if let Some(units) = cmd.source.design.units {
        log = ring_assembly(&log, units, 2.0 * PI / units as f64)?;
    }
    match &cmd.output {
        Some(path) => write_trajectory(&log, io::BufWriter::new(fs::File::create(path)?))?,
        None => write_trajectory(&log, io::stdout().lock())?,
    }
    if let Some(path) = &cmd.stats {
        fs::write(path, stats_to_json(&node_stats(&log)?)? + "\n")?;
    }
    eprintln!(
        "{} samples x {} nodes, theta {:.2} -> {:.2} deg over {} s",
        log.samples.len(),
        log.nodes.len(),
        profile.theta_start.to_degrees(),
        profile.theta_end.to_degrees(),
        profile.duration()
    );
    Ok(())
}

fn run_validate(cmd: &ValidateCmd) -> Result<(), Failure> {
    let model = cmd.source.load()?;
    let mut opts = ValidateOptions::for_model(&model);
    opts.samples = cmd.samples;
    if let Some(units) = cmd.source.design.units {
        opts.units = units;
    }
    if let Some(rate) = cmd.drive_rate {
        opts.theta_dot = rate;
    }
    let report = run_checks(&model, &opts);
    let mut failed = vec![];
    for c in &report.checks {
        let mark = if c.passed { "PASS" } else { "FAIL" };
        println!("{mark}  {:<32} {:>12.3e}  (limit {:.0e})", c.name, c.value, c.limit);
        if !c.detail.is_empty() {
            println!("      {}", c.detail);
        }
        if !c.passed {
            failed.push(c.name.clone());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("failing checks: {}", failed.join(", "))))
    }
}

fn run_stats(cmd: &StatsCmd) -> Result<(), Failure> {
    let log = read_trajectory_file(&cmd.input)?;
    emit(&(stats_to_json(&node_stats(&log)?)? + "\n"), &cmd.output)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Design(c) => run_design(c),
        Command::Dof(c) => run_dof(c),
        Command::Simulate(c) => run_simulate(c),
        Command::Validate(c) => run_validate(c),
        Command::Stats(c) => run_stats(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Parse(_) | Error::Json(_) | Error::Csv(_) | Error::Io(_) | Error::EmptyLog => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
