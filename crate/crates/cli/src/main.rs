//! `weylqw`: exact propagators and evolutions of the Weyl quantum walk on the
//! BCC lattice.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use weylqw_core::{Chirality, Engine, Site, StepIndex, Suite, DEFAULT_BUDGET};

use commands::CliError;

#[derive(Parser, Debug)]
#[command(name = "weylqw", version, about = "Exact propagators of the Weyl quantum walk on the BCC lattice")]
struct Cli {
    /// Worker threads for table fills and verification (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Propagator P(from, to, t) as an exact 2×2 matrix.
    Propagate(PropagateArgs),
    /// Evolve an initial state read from a JSON file.
    Evolve(EvolveArgs),
    /// Every propagator into one site from its time-t past cone.
    Cone(ConeArgs),
    /// Run the verification suites.
    Verify(VerifyArgs),
    /// Time the engines against t.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    ClosedForm,
    BruteForce,
    Step,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Engine {
        match e {
            EngineArg::ClosedForm => Engine::ClosedForm,
            EngineArg::BruteForce => Engine::BruteForce,
            EngineArg::Step => Engine::Step,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EvolveEngine {
    Step,
    Convolve,
}

#[derive(Args, Debug)]
struct Output {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_site(s: &str) -> Result<Site, String> {
    s.parse::<Site>().map_err(|e| e.to_string())
}

fn parse_chirality(s: &str) -> Result<Chirality, String> {
    s.parse()
}

fn parse_step(s: &str) -> Result<StepIndex, String> {
    let l: i8 = s.parse().map_err(|_| format!("{s:?} is not a step index"))?;
    StepIndex::new(l).map_err(|e| e.to_string())
}

#[derive(Args, Debug)]
struct PropagateArgs {
    #[arg(long, value_parser = parse_site, allow_hyphen_values = true)]
    from: Site,
    #[arg(long, value_parser = parse_site, allow_hyphen_values = true)]
    to: Site,
    #[arg(long)]
    t: u64,
    /// Chirality, "+" or "-".
    #[arg(long, value_parser = parse_chirality, allow_hyphen_values = true, default_value = "+")]
    chi: Chirality,
    #[arg(long, value_enum, default_value_t = EngineArg::ClosedForm)]
    engine: EngineArg,
    /// Largest number of string triples the brute-force engine may enumerate.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u128,
    /// Exit with status 2 when `to` is unreachable from `from` in t steps.
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct EvolveArgs {
    /// JSON array of {x, up, down} entries with exact amplitudes.
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    t: u64,
    #[arg(long, value_parser = parse_chirality, allow_hyphen_values = true, default_value = "+")]
    chi: Chirality,
    #[arg(long, value_enum, default_value_t = EvolveEngine::Step)]
    engine: EvolveEngine,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct ConeArgs {
    #[arg(long, value_parser = parse_site, allow_hyphen_values = true, default_value = "0,0,0")]
    at: Site,
    #[arg(long)]
    t: u64,
    #[arg(long, value_parser = parse_chirality, allow_hyphen_values = true, default_value = "+")]
    chi: Chirality,
    #[arg(long, value_enum, default_value_t = EngineArg::ClosedForm)]
    engine: EngineArg,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u128,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Suites to run (repeatable); all when omitted.
    #[arg(long = "suite")]
    suites: Vec<Suite>,
    /// Reduced sizes for a fast smoke run.
    #[arg(long)]
    quick: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, hide = true, value_parser = parse_step, allow_hyphen_values = true)]
    inject_fault: Option<StepIndex>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value_t = 20)]
    t_max: u64,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u128,
    /// Seeds the choice of target site at each t.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match cli.command {
        Command::Propagate(a) => commands::propagate(a),
        Command::Evolve(a) => commands::evolve(a),
        Command::Cone(a) => commands::cone(a),
        Command::Verify(a) => commands::verify(a),
        Command::Bench(a) => commands::bench(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(64) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("weylqw: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
