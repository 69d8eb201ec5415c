//! Newton iteration for one time step and the time-stepping driver.

use log::debug;

use super::system::CchSystem;
use super::{energy, CCHConfig, CCHState};
use crate::error::SolverError;
use crate::exec::Exec;
use crate::fespace::{integrate_p0, P0Field};
use crate::harness::diagnostics::{dynamics, DiagnosticsRecord};
use crate::mesh::TriMesh;
use crate::sparse::{check_residual, norm2, SparseLu};
use crate::transport::step_count;
use crate::upwind::EdgeFlux;

/// Outcome of one accepted step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepStats {
    pub newton_iters: usize,
    pub initial_residual: f64,
    pub residual: f64,
    /// The step needed the lagged-mobility retry.
    pub used_fallback: bool,
}

/// Owns the assembled system and the reusable factorization.
pub struct CchSolver<'m> {
    mesh: &'m TriMesh,
    system: CchSystem,
    lu: SparseLu,
}

impl<'m> CchSolver<'m> {
    pub fn new(mesh: &'m TriMesh, flux_v: &EdgeFlux, cfg: CCHConfig, exec: Exec) -> Result<Self, SolverError> {
        Ok(Self {
            mesh,
            system: CchSystem::new(mesh, flux_v, cfg, exec)?,
            lu: SparseLu::new(),
        })
    }

    pub fn config(&self) -> &CCHConfig {
        self.system.config()
    }

    pub fn system(&self) -> &CchSystem {
        &self.system
    }

    /// Advance `prev` by one step of size `dt`, starting Newton from `prev`.
    pub fn solve_timestep(&mut self, prev: &CCHState) -> Result<(CCHState, StepStats), SolverError> {
        let cfg = *self.system.config();
        let lo = -cfg.bound_tol();
        let hi = 1.0 + cfg.bound_tol();
        let (umin, umax) = (prev.u.min(), prev.u.max());
        if umin < lo || umax > hi {
            return Err(SolverError::BoundViolation {
                lower: lo,
                upper: hi,
                min: umin,
                max: umax,
            });
        }
        let x0 = prev.to_vector();
        let (x, stats) = match self.newton(&x0, &prev.u, false, cfg.newton_max_iter) {
            Ok(out) => out,
            Err(e) if cfg.frozen_mobility_fallback => {
                debug!("newton failed ({e}); retrying with lagged mobility");
                let (x, mut stats) = self.newton(&x0, &prev.u, true, 4 * cfg.newton_max_iter)?;
                stats.used_fallback = true;
                (x, stats)
            }
            Err(e) => return Err(e),
        };
        let (nc, nv) = self.system.sizes();
        let next = CCHState::from_vector(&x, nc, nv, prev.time + cfg.dt);
        let mut bounds = vec![(next.u.min(), next.u.max())];
        if cfg.lump_w {
            bounds.push((next.w.min(), next.w.max()));
        }
        for (min, max) in bounds {
            if min < lo || max > hi {
                return Err(SolverError::BoundViolation {
                    lower: lo,
                    upper: hi,
                    min,
                    max,
                });
            }
        }
        Ok((next, stats))
    }

    fn newton(
        &mut self,
        x0: &[f64],
        u_old: &[f64],
        frozen: bool,
        max_iter: usize,
    ) -> Result<(Vec<f64>, StepStats), SolverError> {
        let cfg = *self.system.config();
        let mut x = x0.to_vec();
        let mut r = self.system.residual(&x, u_old)?;
        let r0 = norm2(&r);
        let mut rn = r0;
        let converged = |rn: f64| rn <= cfg.newton_abs_tol || rn <= cfg.newton_rel_tol * r0;
        let mut iters = 0;
        // switched evolution relaxation: the shift follows the residual
        // ratio between iterations, capped at its initial value
        let mut shift = cfg.pseudo_transient;
        let mut rn_prev = rn;
        while !converged(rn) {
            if iters == max_iter {
                return Err(SolverError::NewtonDiverged {
                    iterations: iters,
                    residual: rn,
                });
            }
            if rn_prev > 0.0 {
                shift = (shift * rn / rn_prev).min(cfg.pseudo_transient);
            }
            rn_prev = rn;
            let jac = self.system.jacobian_shifted(&x, u_old, frozen, shift)?;
            self.lu.factor(jac)?;
            let neg_r: Vec<f64> = r.iter().map(|v| -v).collect();
            let delta = self.lu.solve(&neg_r)?;
            check_residual(self.system.current_jacobian(), &delta, &neg_r, cfg.linear_tol).map_err(|e| match e {
                SolverError::LinearSolveFailed { reason, .. } => SolverError::LinearSolveFailed { reason, residual: rn },
                other => other,
            })?;
            let mut step = 1.0;
            loop {
                let trial: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + step * d).collect();
                let rt = self.system.residual(&trial, u_old)?;
                let rtn = norm2(&rt);
                if !cfg.line_search || rtn < rn || step < 1e-3 {
                    x = trial;
                    r = rt;
                    rn = rtn;
                    break;
                }
                step *= 0.5;
            }
            iters += 1;
            if !rn.is_finite() {
                return Err(SolverError::NewtonDiverged {
                    iterations: iters,
                    residual: rn,
                });
            }
        }
        Ok((
            x,
            StepStats {
                newton_iters: iters,
                initial_residual: r0,
                residual: rn,
                used_fallback: false,
            },
        ))
    }

    /// Diagnostics row for `state`, given the previous state's `u`.
    pub fn record(&self, step: usize, state: &CCHState, prev_u: &[f64], stats: Option<&StepStats>) -> DiagnosticsRecord {
        DiagnosticsRecord {
            step,
            time: state.time,
            min_u: state.u.min(),
            max_u: state.u.max(),
            mass: integrate_p0(self.mesh, &state.u),
            energy: energy(self.mesh, &state.w, self.config().eps),
            dynamics: dynamics(&state.u, prev_u),
            newton_iters: stats.map_or(0, |s| s.newton_iters),
            residual: stats.map_or(0.0, |s| s.residual),
            min_w: Some(state.w.min()),
            max_w: Some(state.w.max()),
        }
    }
}

/// Step from `u0` to `t_final`, calling `sink` with each record and state
/// (the initial state included). Returns the final state.
pub fn run_cch<E: From<SolverError>>(
    mesh: &TriMesh,
    u0: P0Field,
    flux_v: &EdgeFlux,
    t_final: f64,
    cfg: &CCHConfig,
    exec: Exec,
    mut sink: impl FnMut(&DiagnosticsRecord, &CCHState) -> Result<(), E>,
) -> Result<CCHState, E> {
    cfg.validate()?;
    let n = step_count(t_final, cfg.dt)?;
    let mut solver = CchSolver::new(mesh, flux_v, *cfg, exec)?;
    let mut state = CCHState::initial(mesh, u0, cfg)?;
    sink(&solver.record(0, &state, &state.u, None), &state)?;
    for m in 1..=n {
        let (mut next, stats) = solver.solve_timestep(&state)?;
        // avoid drift of the time stamp over many steps
        next.time = m as f64 * cfg.dt;
        sink(&solver.record(m, &next, &state.u, Some(&stats)), &next)?;
        state = next;
    }
    Ok(state)
}
