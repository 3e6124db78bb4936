use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gvop::experiment::{run_experiment, write_outputs, ExperimentConfig, Mode};
use gvop::generator::{generate_planted_instance, GeneratorParams};
use gvop::io::{load_requests, load_substrate, parse_topology, read_file, serialize_requests, serialize_substrate};
use gvop::verify::verify;
use gvop_core::oracles::SteinerMode;

#[derive(Parser)]
#[command(name = "gvop", version, about = "Online virtual network embedding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stream a request sequence through the engine and write the run log,
    /// report and congestion table.
    Run(RunArgs),
    /// Replay a sequence and check the accounting invariants.
    Verify(VerifyArgs),
    /// Emit a planted instance for a topology.
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CliMode {
    Plain,
    Scaled,
    Fractional,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliSteiner {
    Auto,
    Exact,
    Approximate,
}

impl From<CliSteiner> for SteinerMode {
    fn from(s: CliSteiner) -> Self {
        match s {
            CliSteiner::Auto => SteinerMode::Auto,
            CliSteiner::Exact => SteinerMode::Exact,
            CliSteiner::Approximate => SteinerMode::Approximate,
        }
    }
}

#[derive(Args)]
struct EngineArgs {
    /// Smallest admissible nonzero reservation.
    #[arg(long, default_value_t = 1.0)]
    floor: f64,
    #[arg(long, value_enum, default_value = "auto")]
    steiner: CliSteiner,
    /// Maximum usable links for exhaustive tree enumeration.
    #[arg(long, default_value_t = 16)]
    budget: usize,
}

impl EngineArgs {
    fn config(&self, mode: Mode, scale: Option<f64>) -> ExperimentConfig {
        ExperimentConfig {
            mode,
            scale,
            floor: self.floor,
            steiner: self.steiner.into(),
            enumeration_budget: self.budget,
            ..ExperimentConfig::default()
        }
    }
}

#[derive(Args)]
struct GeneratorArgs {
    #[arg(long, default_value_t = 20)]
    count: usize,
    #[arg(long, default_value_t = 3)]
    terminals: usize,
    #[arg(long, default_value_t = 2)]
    stride: usize,
    #[arg(long, default_value_t = 1.0)]
    ingress: f64,
    /// Upper end of the ingress range (defaults to --ingress).
    #[arg(long)]
    ingress_max: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    benefit_min: f64,
    #[arg(long, default_value_t = 10.0)]
    benefit_max: f64,
    #[arg(long, default_value_t = 1)]
    arrival_slots: u32,
    #[arg(long, default_value_t = 1)]
    max_duration: u32,
    #[arg(long, default_value_t = 1.0)]
    capacity_factor: f64,
}

impl GeneratorArgs {
    fn params(&self) -> GeneratorParams {
        GeneratorParams {
            requests: self.count,
            terminals: self.terminals,
            stride: self.stride,
            ingress_min: self.ingress,
            ingress_max: self.ingress_max.unwrap_or(self.ingress),
            benefit_min: self.benefit_min,
            benefit_max: self.benefit_max,
            arrival_slots: self.arrival_slots,
            max_duration: self.max_duration,
            capacity_factor: self.capacity_factor,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Instance document (or, with --generate, a topology).
    #[arg(long)]
    substrate: PathBuf,
    #[arg(long, conflicts_with = "generate", required_unless_present = "generate")]
    requests: Option<PathBuf>,
    /// Draw a planted request sequence on the substrate instead.
    #[arg(long)]
    generate: bool,
    #[command(flatten)]
    generator: GeneratorArgs,
    #[arg(long, value_enum, default_value = "plain")]
    mode: CliMode,
    /// Capacity divisor in scaled mode (default: bound from the instance).
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    substrate: PathBuf,
    #[arg(long)]
    requests: PathBuf,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Args)]
struct GenArgs {
    /// Edge list (`u v [capacity]` per line) or instance document.
    #[arg(long)]
    topology: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    generator: GeneratorArgs,
    #[arg(long, default_value = "instance")]
    out: PathBuf,
}

fn load_instance(substrate: &Path, requests: &Path) -> Result<(gvop_core::SubstrateNetwork, Vec<gvop_core::VNetRequest>)> {
    let net = load_substrate(&read_file(substrate)?).with_context(|| format!("loading {}", substrate.display()))?;
    let reqs = load_requests(&read_file(requests)?, &net).with_context(|| format!("loading {}", requests.display()))?;
    Ok((net, reqs))
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let (net, requests) = if args.generate {
        let topology = parse_topology(&read_file(&args.substrate)?)?;
        let inst = generate_planted_instance(&topology, args.seed, &args.generator.params())?;
        (inst.network, inst.requests)
    } else {
        let Some(path) = &args.requests else {
            bail!("either --requests or --generate is required");
        };
        load_instance(&args.substrate, path)?
    };
    let mode = match args.mode {
        CliMode::Plain => Mode::Plain,
        CliMode::Scaled => Mode::Scaled,
        CliMode::Fractional => Mode::Fractional,
    };
    let outcome = run_experiment(&net, &requests, &args.engine.config(mode, args.scale))?;
    write_outputs(&args.out, &net, &outcome)?;
    let r = &outcome.report;
    println!(
        "accepted {}/{}  benefit {}  max congestion {}  beta {}",
        r.accepted, r.requests, r.benefit, r.max_congestion, r.beta_applicable
    );
    Ok(ExitCode::SUCCESS)
}

fn check(args: VerifyArgs) -> Result<ExitCode> {
    let (net, requests) = load_instance(&args.substrate, &args.requests)?;
    let outcome = verify(&net, &requests, &args.engine.config(Mode::Plain, None))?;
    for c in &outcome.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(if outcome.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn generate(args: GenArgs) -> Result<ExitCode> {
    let topology = parse_topology(&read_file(&args.topology)?)?;
    let inst = generate_planted_instance(&topology, args.seed, &args.generator.params())?;
    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("substrate.json"), serialize_substrate(&inst.network) + "\n")?;
    fs::write(
        args.out.join("requests.json"),
        serialize_requests(&inst.requests, &inst.network) + "\n",
    )?;
    println!(
        "{} requests, planted optimum {}",
        inst.requests.len(),
        inst.planted_optimum
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Verify(args) => check(args),
        Command::Gen(args) => generate(args),
    }
}
