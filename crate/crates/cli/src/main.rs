use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use warpcurv_cli::config::{Category, ScenarioConfig};
use warpcurv_cli::report::write_outcome;
use warpcurv_cli::{run, CliError, Overrides};

#[derive(Parser)]
#[command(name = "warpcurv", version, about = "Audit suites for hypersurfaces of warped products")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Identity suites: algebra, slice exactness, refinement studies, curvature tensor.
    Verify(Shared),
    /// Theorem audits and curvature estimates.
    Scenario(Shared),
    /// Omori-Yau sequences on radial models.
    Probe(Shared),
    /// Comparison ODEs, barrier identity and growth conditions.
    Comparison(Shared),
}

#[derive(Args)]
struct Shared {
    /// Scenario config (TOML). Without it the subcommand's defaults run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; defaults to `[output] dir`, then $WARPCURV_OUT.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Refinement levels for identity studies.
    #[arg(long, value_name = "N")]
    refine: Option<usize>,
    /// Tolerance for analytic identities and slice exactness.
    #[arg(long, value_name = "X")]
    tol: Option<f64>,
}

fn execute(cat: Category, args: Shared) -> Result<i32, CliError> {
    let cfg = match &args.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::defaults_for(cat),
    };
    let ov = Overrides { seed: args.seed, refine: args.refine, tol: args.tol, out: args.out };
    let outcome = run(cfg, cat, &ov)?;
    write_outcome(&outcome)?;
    for r in &outcome.summary.operations {
        println!("{:02} {:<20} {:?}", r.index, r.op, r.status);
    }
    if outcome.summary.not_applicable_only {
        println!("note: every audit had a failing hypothesis (not applicable)");
    }
    println!("reports: {}", outcome.out_dir.display());
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cat, args) = match cli.command {
        Command::Verify(a) => (Category::Verify, a),
        Command::Scenario(a) => (Category::Scenario, a),
        Command::Probe(a) => (Category::Probe, a),
        Command::Comparison(a) => (Category::Comparison, a),
    };
    let code = execute(cat, args).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
