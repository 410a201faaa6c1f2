//! Command-line front end for the MVL P-system simulator.
//!
//! Subcommands: `generate` (sample an MVL population), `run` (execute a
//! `.psys` scenario), `validate` (parse + lower without running), `stats`
//! (summarize a population file). Every subcommand is deterministic given
//! its flags; seeds are echoed into output metadata so artifacts are
//! reproducible from their own headers.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 validation failure, 3 runtime
//! failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::Digest;

use mvlsim::engine::{self, DiffusionSolver, RunConfig};
use mvlsim::model::Mvl;
use mvlsim::population::{population_stats, sample_population_item, DistFamily, GeneratorParams};
use mvlsim::speclang::{self, GeneratorDecl};

const EXIT_IO: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "mvlsim", version, about = "Simulator for P-systems built from multivesicular liposomes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample an MVL population matching the measured statistics
    Generate(GenerateArgs),
    /// Execute a .psys scenario and write its trace
    Run(RunArgs),
    /// Parse and lower a .psys scenario without running it
    Validate(ValidateArgs),
    /// Summarize a population JSON file
    Stats(StatsArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of MVLs to sample
    #[arg(short = 'n', long = "n", value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// RNG seed; item i derives its own stream from (seed, i)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Generator parameter overrides (JSON-encoded generator declaration)
    #[arg(long)]
    params: Option<PathBuf>,
    /// Distribution family for the fitted size/count distributions
    #[arg(long, value_enum, default_value_t = FamilyArg::Normal)]
    family: FamilyArg,
    /// Output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results are identical to sequential generation
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Normal,
    Lognormal,
}

impl From<FamilyArg> for DistFamily {
    fn from(f: FamilyArg) -> DistFamily {
        match f {
            FamilyArg::Normal => DistFamily::Normal,
            FamilyArg::Lognormal => DistFamily::LogNormal,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (.psys)
    scenario: PathBuf,
    /// Override the scenario's seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the scenario's dt (seconds)
    #[arg(long)]
    dt: Option<f64>,
    /// Override the scenario's step cap
    #[arg(long)]
    steps: Option<usize>,
    /// Override the scenario's sampling stride
    #[arg(long)]
    sample_every: Option<usize>,
    /// Override the scenario's diffusion solver
    #[arg(long, value_enum)]
    solver: Option<SolverArg>,
    /// Trace format
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Euler,
    Analytic,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct ValidateArgs {
    /// Scenario file (.psys)
    scenario: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    /// Population JSON (as written by `generate`), or a bare array of MVLs
    population: PathBuf,
    /// Report format
    #[arg(long, value_enum, default_value_t = StatsFormat::Text)]
    format: StatsFormat,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum StatsFormat {
    Text,
    Json,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn io(e: impl std::fmt::Display) -> Failure {
        Failure { code: EXIT_IO, message: format!("i/o error: {e}") }
    }
    fn validation(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_VALIDATION, message: message.into() }
    }
    fn runtime(e: impl std::fmt::Display) -> Failure {
        Failure { code: EXIT_RUNTIME, message: format!("runtime error: {e}") }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Run(args) => cmd_run(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Stats(args) => cmd_stats(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = sha2::Sha256::new();
    hasher.update(bytes);
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn write_output(out: &Option<PathBuf>, bytes: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(Failure::io),
        None => {
            print!("{bytes}");
            Ok(())
        }
    }
}

/// Metadata header embedded in JSON artifacts (and written as a sidecar for
/// CSV traces): tool version, seed, and the hash of the input the artifact
/// came from.
fn metadata(seed: u64, input_hash: Option<String>) -> serde_json::Value {
    let mut meta = serde_json::json!({
        "tool": "mvlsim",
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
    });
    if let Some(h) = input_hash {
        meta["input_sha256"] = serde_json::Value::String(h);
    }
    meta
}

// ---------------------------------------------------------------------
// generate

fn cmd_generate(args: GenerateArgs) -> Result<(), Failure> {
    let (params, input_hash) = match &args.params {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(Failure::io)?;
            let decl: GeneratorDecl = serde_json::from_slice(&bytes)
                .map_err(|e| Failure::validation(format!("bad params file: {e}")))?;
            let params =
                speclang::generator_params(&decl, args.seed).map_err(Failure::validation)?;
            (params, Some(sha256_hex(&bytes)))
        }
        None => {
            let params = GeneratorParams::with_family(args.family.into(), args.seed)
                .map_err(|e| Failure::validation(e.to_string()))?;
            (params, None)
        }
    };

    let n = args.n as usize;
    let sample = |i: usize| sample_population_item(&params, args.seed, i);
    let mvls: Result<Vec<Mvl>, _> = if args.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.jobs as usize)
            .build()
            .map_err(Failure::runtime)?;
        pool.install(|| {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(sample).collect()
        })
    } else {
        (0..n).map(sample).collect()
    };
    let mvls = mvls.map_err(Failure::runtime)?;

    let stats = population_stats(&mvls).map_err(Failure::runtime)?;
    let doc = serde_json::json!({
        "meta": metadata(args.seed, input_hash),
        "mvls": mvls,
    });
    let text = serde_json::to_string_pretty(&doc).expect("population serializes");
    write_output(&args.out, &format!("{text}\n"))?;

    let counts: Vec<String> = stats
        .morphology_counts
        .iter()
        .map(|(name, count)| format!("{name} {count}"))
        .collect();
    eprintln!("generated {} MVLs (seed {}): {}", n, args.seed, counts.join(", "));
    Ok(())
}

// ---------------------------------------------------------------------
// run / validate

fn load_scenario(path: &Path) -> Result<(speclang::LowerOutput, String), Failure> {
    let bytes = std::fs::read(path).map_err(Failure::io)?;
    let text = String::from_utf8_lossy(&bytes).into_owned();
    let ast = speclang::parse(&text).map_err(|diags| Failure {
        code: EXIT_VALIDATION,
        message: render_diags(&diags),
    })?;
    let lowered = speclang::lower(&ast).map_err(|diags| Failure {
        code: EXIT_VALIDATION,
        message: render_diags(&diags),
    })?;
    Ok((lowered, sha256_hex(&bytes)))
}

fn render_diags(diags: &[speclang::Diagnostic]) -> String {
    diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let (mut lowered, input_hash) = load_scenario(&args.scenario)?;
    for w in &lowered.warnings {
        eprintln!("{w}");
    }

    if let Some(seed) = args.seed {
        lowered.state.rng_seed = seed;
    }
    match &mut lowered.config {
        RunConfig::Abstract(cfg) => {
            if let Some(seed) = args.seed {
                cfg.rng_seed = seed;
            }
            if let Some(steps) = args.steps {
                cfg.max_steps = steps;
            }
            if let Some(se) = args.sample_every {
                cfg.sample_every = se;
            }
            if args.dt.is_some() || args.solver.is_some() {
                return Err(Failure::validation(
                    "--dt and --solver only apply to kinetic scenarios",
                ));
            }
        }
        RunConfig::Kinetic(cfg) => {
            if let Some(dt) = args.dt {
                cfg.dt = dt;
            }
            if let Some(steps) = args.steps {
                cfg.max_steps = steps;
            }
            if let Some(se) = args.sample_every {
                cfg.sample_every = se;
            }
            if let Some(solver) = args.solver {
                cfg.diffusion_solver = match solver {
                    SolverArg::Euler => DiffusionSolver::ForwardEuler,
                    SolverArg::Analytic => DiffusionSolver::AnalyticPairwise,
                };
            }
        }
    }

    let seed = lowered.state.rng_seed;
    let trace = engine::run(&mut lowered.state, &lowered.config, &lowered.schedule)
        .map_err(Failure::runtime)?;

    let meta = metadata(seed, Some(input_hash));
    match args.format {
        FormatArg::Csv => {
            write_output(&args.out, &trace.to_csv())?;
            if let Some(out) = &args.out {
                let sidecar = out.with_extension("meta.json");
                std::fs::write(&sidecar, format!("{meta:#}\n")).map_err(Failure::io)?;
            }
        }
        FormatArg::Json => {
            let doc = serde_json::json!({ "meta": meta, "trace": trace });
            write_output(&args.out, &format!("{doc:#}\n"))?;
        }
    }

    let mut summary = format!(
        "halt: {} after {} steps, {} events",
        trace.halt,
        trace.steps_run,
        trace.events.len()
    );
    if trace.mode == mvlsim::model::Mode::Abstract {
        let total = trace.final_sample().total_objects();
        summary.push_str(&format!(", final total objects: {total}"));
    }
    eprintln!("{summary}");
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Result<(), Failure> {
    let (lowered, _) = load_scenario(&args.scenario)?;
    for w in &lowered.warnings {
        eprintln!("{w}");
    }
    eprintln!(
        "ok: {} species, {} MVLs, {} rules, {} scheduled interventions",
        lowered.state.species.len(),
        lowered.state.mvls.len(),
        lowered.state.rules.len(),
        lowered.schedule.len()
    );
    Ok(())
}

// ---------------------------------------------------------------------
// stats

#[derive(serde::Deserialize)]
#[serde(untagged)]
enum PopulationDoc {
    Wrapped { mvls: Vec<Mvl> },
    Bare(Vec<Mvl>),
}

fn cmd_stats(args: StatsArgs) -> Result<(), Failure> {
    let bytes = std::fs::read(&args.population).map_err(Failure::io)?;
    let doc: PopulationDoc = serde_json::from_slice(&bytes)
        .map_err(|e| Failure::validation(format!("malformed population JSON: {e}")))?;
    let mvls = match doc {
        PopulationDoc::Wrapped { mvls } => mvls,
        PopulationDoc::Bare(mvls) => mvls,
    };
    let stats = population_stats(&mvls).map_err(|e| Failure::validation(e.to_string()))?;
    match args.format {
        StatsFormat::Text => print!("{}", stats.text_table()),
        StatsFormat::Json => {
            println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"))
        }
    }
    Ok(())
}
