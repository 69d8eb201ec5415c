//! `cch`: run coupled or transport-only experiments, convergence studies,
//! and inspect mesh files.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cch_core::harness::config::ExperimentConfig;
use cch_core::harness::run::{
    options_for, run_convergence_experiment, run_experiment, run_transport_experiment, RunOptions, RunSummary,
};
use cch_core::harness::HarnessError;
use cch_core::mesh::read_mesh;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cch", version, about = "Convective Cahn-Hilliard solver with upwind DG transport")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coupled Cahn-Hilliard run with diagnostics and snapshots.
    Run(RunArgs),
    /// Pure upwind transport of the initial field.
    Transport(RunArgs),
    /// Self-convergence study on a nested mesh family.
    Converge(RunArgs),
    /// Print summary statistics of a mesh file.
    MeshInfo {
        meshfile: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// Directory for CSV and VTK output.
    #[arg(long, default_value = "output")]
    output_dir: PathBuf,
    /// Overrides the seed of the configuration file.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
}

impl RunArgs {
    fn load(&self) -> Result<(ExperimentConfig, RunOptions), HarnessError> {
        let cfg = ExperimentConfig::load(&self.config).map_err(HarnessError::Config)?;
        Ok((cfg, options_for(&self.config, self.output_dir.clone(), self.seed, self.quiet)))
    }
}

fn summarize(s: &RunSummary, quiet: bool) {
    if quiet {
        return;
    }
    if let (Some(first), Some(last)) = (s.records.first(), s.records.last()) {
        println!(
            "{} steps to t = {:e}; u in [{:e}, {:e}]; mass drift {:e}; energy {:e} -> {:e}",
            last.step,
            last.time,
            s.records.iter().map(|r| r.min_u).fold(f64::INFINITY, f64::min),
            s.records.iter().map(|r| r.max_u).fold(f64::NEG_INFINITY, f64::max),
            (last.mass - first.mass).abs(),
            first.energy,
            last.energy
        );
    }
    println!("diagnostics: {}", s.csv.display());
    println!("snapshots: {}", s.snapshots.len());
}

fn mesh_info(path: &Path) -> Result<(), HarnessError> {
    let m = read_mesh(path)?;
    let (min_a, max_a) = m
        .cell_areas()
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &a| (lo.min(a), hi.max(a)));
    println!("vertices        {}", m.n_vertices());
    println!("cells           {}", m.n_cells());
    println!("interior edges  {}", m.interior_edges().len());
    println!("boundary edges  {}", m.boundary_edges().len());
    println!("h               {:e}", m.h());
    println!("area            {:e}", m.total_area());
    println!("cell area range [{min_a:e}, {max_a:e}]");
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run(a) => {
            let (cfg, opts) = a.load()?;
            summarize(&run_experiment(&cfg, &opts)?, a.quiet);
        }
        Command::Transport(a) => {
            let (cfg, opts) = a.load()?;
            summarize(&run_transport_experiment(&cfg, &opts)?, a.quiet);
        }
        Command::Converge(a) => {
            let (cfg, opts) = a.load()?;
            let (table, path) = run_convergence_experiment(&cfg, &opts)?;
            if !a.quiet {
                print!("{}", table.to_markdown());
                println!("table: {}", path.display());
            }
        }
        Command::MeshInfo { meshfile } => mesh_info(&meshfile)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
