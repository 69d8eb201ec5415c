//! Experiment drivers: build everything from a configuration, step, and
//! write the diagnostics CSV, VTK snapshots and convergence tables.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::config::{ExperimentConfig, Purpose};
use super::convergence::{convergence_study, refinement_family, ConvergenceTable};
use super::diagnostics::{CsvSink, DiagnosticsRecord};
use super::presets::InitialCondition;
use super::vtk::{snapshot_name, VtkSnapshot};
use super::HarnessError;
use crate::cch::{run_cch, CCHState};
use crate::exec::Exec;
use crate::fespace::P0Field;
use crate::mesh::TriMesh;
use crate::transport::{run_transport, step_count};
use crate::upwind::velocity_edge_flux;

/// Command-line overrides and locations.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub output_dir: PathBuf,
    /// Directory relative mesh paths are resolved against.
    pub base_dir: PathBuf,
    pub seed: Option<u64>,
    pub quiet: bool,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    /// One record per accepted step, the initial state included.
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<PathBuf>,
    pub csv: PathBuf,
}

struct Output<'a> {
    mesh: &'a TriMesh,
    dir: PathBuf,
    csv: CsvSink<BufWriter<File>>,
    every: usize,
    write_vtk: bool,
    last_step: usize,
    quiet: bool,
    records: Vec<DiagnosticsRecord>,
    snapshots: Vec<PathBuf>,
}

impl<'a> Output<'a> {
    fn new(mesh: &'a TriMesh, cfg: &ExperimentConfig, opts: &RunOptions, last_step: usize) -> Result<Self, HarnessError> {
        std::fs::create_dir_all(&opts.output_dir)?;
        let csv = CsvSink::new(BufWriter::new(File::create(opts.output_dir.join(&cfg.output.csv))?))?;
        Ok(Self {
            mesh,
            dir: opts.output_dir.clone(),
            csv,
            every: cfg.output.vtk_every,
            write_vtk: cfg.output.write_vtk,
            last_step,
            quiet: opts.quiet,
            records: Vec::new(),
            snapshots: Vec::new(),
        })
    }

    fn due(&self, step: usize) -> bool {
        self.write_vtk && (step % self.every == 0 || step == self.last_step)
    }

    fn snapshot(&mut self, step: usize, u: &[f64], p1: &[(&str, &[f64])]) -> Result<(), HarnessError> {
        let path = self.dir.join(snapshot_name(step));
        if self.snapshots.last() == Some(&path) {
            return Ok(());
        }
        let mut snap = VtkSnapshot::new(self.mesh, format!("step {step}")).with_cell_data("u", u);
        for (name, vals) in p1 {
            snap = snap.with_point_data(name, vals);
        }
        snap.write(&path)?;
        self.snapshots.push(path);
        Ok(())
    }

    fn record(&mut self, r: &DiagnosticsRecord) -> Result<(), HarnessError> {
        self.csv.write(r)?;
        if !self.quiet && (r.step % self.every == 0 || r.step == self.last_step) {
            eprintln!(
                "step {:>6}/{} t={:.4e} u∈[{:.3e}, {:.3e}] mass={:.10e} energy={:.6e}",
                r.step, self.last_step, r.time, r.min_u, r.max_u, r.mass, r.energy
            );
        }
        self.records.push(*r);
        Ok(())
    }

    fn finish(mut self, csv_name: &str) -> Result<RunSummary, HarnessError> {
        self.csv.flush()?;
        Ok(RunSummary {
            csv: self.dir.join(csv_name),
            records: self.records,
            snapshots: self.snapshots,
        })
    }

    /// Attach the failing step to a solver error after dumping what exists.
    fn fail(mut self, err: HarnessError, dump: impl FnOnce(&mut Self) -> Result<(), HarnessError>) -> HarnessError {
        let failing = self.records.last().map_or(0, |r| r.step + 1);
        let _ = self.csv.flush();
        if self.write_vtk {
            let _ = dump(&mut self);
        }
        match err {
            HarnessError::Solver { step: None, source } => HarnessError::Solver {
                step: Some(failing),
                source,
            },
            other => other,
        }
    }
}

fn exec_for(cfg: &ExperimentConfig) -> Exec {
    if cfg.parallel {
        Exec::Parallel
    } else {
        Exec::Sequential
    }
}

fn prepare(cfg: &ExperimentConfig, opts: &RunOptions, purpose: Purpose) -> Result<TriMesh, HarnessError> {
    cfg.validate(purpose, &opts.base_dir).map_err(HarnessError::Config)?;
    Ok(cfg.mesh.build(&opts.base_dir)?)
}

fn initial(cfg: &ExperimentConfig, opts: &RunOptions, mesh: &TriMesh, eps: Option<f64>) -> Result<P0Field, HarnessError> {
    cfg.initial
        .build(mesh, opts.seed.unwrap_or(cfg.seed), eps)
        .map_err(HarnessError::Config)
}

/// Coupled convective Cahn–Hilliard run.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunSummary, HarnessError> {
    let mesh = prepare(cfg, opts, Purpose::Run)?;
    let cch = cfg.cch.expect("validated");
    let n = step_count(cfg.t_final, cch.dt)?;
    let u0 = initial(cfg, opts, &mesh, Some(cch.eps))?;
    let flux = velocity_edge_flux(&mesh, cfg.velocity.field());
    let mut out = Output::new(&mesh, cfg, opts, n)?;
    let mut last: Option<(usize, CCHState)> = None;
    let result = run_cch::<HarnessError>(&mesh, u0, &flux, cfg.t_final, &cch, exec_for(cfg), |r, s| {
        out.record(r)?;
        if out.due(r.step) {
            out.snapshot(r.step, &s.u, &[("mu", &s.mu), ("w", &s.w)])?;
        }
        last = Some((r.step, s.clone()));
        Ok(())
    });
    match result {
        Ok(_) => out.finish(&cfg.output.csv),
        Err(e) => Err(out.fail(e, |o| match &last {
            Some((step, s)) => o.snapshot(*step, &s.u, &[("mu", &s.mu), ("w", &s.w)]),
            None => Ok(()),
        })),
    }
}

/// Pure transport run with the upwind scheme.
pub fn run_transport_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunSummary, HarnessError> {
    let mesh = prepare(cfg, opts, Purpose::Transport)?;
    let section = cfg.transport.expect("validated");
    let solver = section.solver();
    let n = step_count(cfg.t_final, solver.dt)?;
    let u0 = initial(cfg, opts, &mesh, None)?;
    let flux = velocity_edge_flux(&mesh, cfg.velocity.field());
    let mut out = Output::new(&mesh, cfg, opts, n)?;
    let mut last: Option<(usize, P0Field)> = None;
    let result = run_transport::<HarnessError>(&mesh, &u0, &flux, cfg.t_final, &solver, section.scheme.into(), |r, u| {
        out.record(r)?;
        if out.due(r.step) {
            out.snapshot(r.step, u, &[])?;
        }
        last = Some((r.step, u.clone()));
        Ok(())
    });
    match result {
        Ok(_) => out.finish(&cfg.output.csv),
        Err(e) => Err(out.fail(e, |o| match &last {
            Some((step, u)) => o.snapshot(*step, u, &[]),
            None => Ok(()),
        })),
    }
}

/// Self-convergence study on `levels` successive refinements of the
/// configured mesh plus one more as the reference. Writes the table CSV and
/// returns it.
pub fn run_convergence_experiment(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
) -> Result<(ConvergenceTable, PathBuf), HarnessError> {
    let base = prepare(cfg, opts, Purpose::Converge)?;
    if matches!(cfg.initial, InitialCondition::RandomSpinodal { .. }) {
        return Err(HarnessError::Config(
            "random initial data differs between meshes; pick a resolved initial condition".into(),
        ));
    }
    let cch = cfg.cch.expect("validated");
    let levels = cfg.convergence.expect("validated").levels;
    let family = refinement_family(base, levels);
    if !opts.quiet {
        for m in &family {
            eprintln!("level: {} cells, h = {:.4e}", m.n_cells(), m.h());
        }
    }
    let table = convergence_study(
        &family,
        |m| initial(cfg, opts, m, Some(cch.eps)),
        cfg.velocity.field(),
        cfg.t_final,
        &cch,
        exec_for(cfg),
    )?;
    std::fs::create_dir_all(&opts.output_dir)?;
    let path = opts.output_dir.join(&cfg.output.table);
    std::fs::write(&path, table.to_csv())?;
    Ok((table, path))
}

/// Resolve `base_dir` as the directory holding `config_path`.
pub fn options_for(config_path: &Path, output_dir: PathBuf, seed: Option<u64>, quiet: bool) -> RunOptions {
    RunOptions {
        output_dir,
        base_dir: config_path.parent().map(Path::to_path_buf).unwrap_or_default(),
        seed,
        quiet,
    }
}
