//! `boostybe`: batch verification and reporting for two-state integrable
//! spin chains. Every command prints JSON; exit code 0 means all checks
//! passed, 1 means a check failed and 2 means a usage or input error.

mod commands;
mod model;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use model::ModelArgs;

#[derive(Parser)]
#[command(name = "boostybe", version, about = "Integrable two-state spin chain toolkit")]
struct Cli {
    /// Write the JSON result to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the fourteen families or show one of them.
    #[command(subcommand)]
    Catalog(CatalogCmd),
    /// Yang-Baxter, regularity, unitarity, extraction and charge commutators.
    Verify(VerifyArgs),
    /// The cubic system [Q2, Q3] = 0.
    #[command(subcommand)]
    Reshetikhin(ReshetikhinCmd),
    /// Perturbative R-matrix of a density and its Cayley-Hamilton fit.
    Series(SeriesArgs),
    /// The graded C^{1|1} image of an eight-vertex model.
    #[command(subcommand)]
    Graded(GradedCmd),
    /// Jordan structure and nilpotency of a density and its periodic chain.
    Spectra(SpectraArgs),
}

#[derive(Subcommand)]
enum CatalogCmd {
    List,
    Show {
        family: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 20)]
    samples: usize,
    /// Tolerance for the YBE and unitarity residuals.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    regularity_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    extraction_tol: f64,
    #[arg(long, default_value_t = 1e-9)]
    commutator_tol: f64,
    /// Periodic chain length for the charge commutators.
    #[arg(long, default_value_t = 7)]
    length: usize,
    /// Series order for families without a closed-form R-matrix.
    #[arg(long, default_value_t = 8)]
    order: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum ReshetikhinCmd {
    /// Residual of the 121 equations at a density.
    Check {
        density: PathBuf,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// The 121 equations with exact coefficients.
    Export,
    /// Newton search from random starts, each hit classified against the catalog.
    Search {
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-8)]
        commutator_tol: f64,
        #[arg(long, default_value_t = 6)]
        length: usize,
    },
}

#[derive(Args)]
struct SeriesArgs {
    density: PathBuf,
    #[arg(long, default_value_t = 8)]
    order: usize,
}

#[derive(Subcommand)]
enum GradedCmd {
    /// Maps a model to the graded sector and writes a descriptor with its
    /// graded Hamiltonian.
    Map(GradedArgs),
    /// Graded YBE and transfer-matrix commutation of the image.
    Verify(GradedArgs),
}

#[derive(Args)]
struct GradedArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Sign choice `eps1,eps2` applied after the bijection.
    #[arg(long, value_parser = model::parse_twist)]
    twist: Option<(i8, i8)>,
    #[arg(long, default_value_t = 10)]
    samples: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 3)]
    length: usize,
    #[arg(long, default_value_t = 8)]
    order: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SpectraArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 4)]
    length: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("BOOSTYBE_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| anyhow::anyhow!("BOOSTYBE_THREADS must be a positive integer, got '{v}'"))?;
        anyhow::ensure!(n > 0, "BOOSTYBE_THREADS must be positive");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<commands::Outcome> {
    configure_threads()?;
    match cli.command {
        Command::Catalog(CatalogCmd::List) => commands::catalog_list(),
        Command::Catalog(CatalogCmd::Show { family, seed }) => commands::catalog_show(&family, seed),
        Command::Verify(a) => commands::verify(&a),
        Command::Reshetikhin(ReshetikhinCmd::Check { density, tol }) => commands::reshetikhin_check(&density, tol),
        Command::Reshetikhin(ReshetikhinCmd::Export) => commands::reshetikhin_export(),
        Command::Reshetikhin(ReshetikhinCmd::Search { seeds, seed, commutator_tol, length }) => {
            commands::reshetikhin_search(seeds, seed, commutator_tol, length)
        }
        Command::Series(a) => commands::series(&a.density, a.order),
        Command::Graded(GradedCmd::Map(a)) => commands::graded_map(&a),
        Command::Graded(GradedCmd::Verify(a)) => commands::graded_verify(&a),
        Command::Spectra(a) => commands::spectra(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.out.clone();
    let outcome = match run(cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let text = serde_json::to_string_pretty(&outcome.value).expect("JSON values serialize") + "\n";
    let written = match &out {
        Some(path) => std::fs::write(path, &text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match outcome.failed {
        Some(check) => {
            eprintln!("check failed: {check}");
            ExitCode::from(1)
        }
        None => ExitCode::SUCCESS,
    }
}
