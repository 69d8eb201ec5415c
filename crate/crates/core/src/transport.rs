//! Backward-Euler P0 upwind transport: `(u^{m+1} − u^m)/dt + a(β; u^{m+1}, ·) = 0`.

use crate::error::SolverError;
use crate::fespace::{integrate_p0, P0Field};
use crate::harness::diagnostics::{dynamics, DiagnosticsRecord};
use crate::mesh::TriMesh;
use crate::sparse::{check_residual, CsrMatrix, SparseLu, TripletBuilder};
use crate::upwind::EdgeFlux;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransportConfig {
    pub dt: f64,
    /// Relative residual accepted from each linear solve.
    pub linear_tol: f64,
    /// L∞ distance between successive Picard iterates of the truncated scheme.
    pub picard_tol: f64,
    pub picard_max: usize,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            linear_tol: 1e-10,
            picard_tol: 1e-13,
            picard_max: 50,
        }
    }
}

impl TransportConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidConfig(m.into()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.linear_tol > 0.0 && self.linear_tol < 1.0) {
            return bad("linear_tol must lie in (0, 1)");
        }
        if !(self.picard_tol > 0.0 && self.picard_tol < 1.0) {
            return bad("picard_tol must lie in (0, 1)");
        }
        if self.picard_max == 0 {
            return bad("picard_max must be at least 1");
        }
        Ok(())
    }
}

/// Number of steps of size `dt` that reach `t_final`.
pub(crate) fn step_count(t_final: f64, dt: f64) -> Result<usize, SolverError> {
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(SolverError::InvalidConfig("final time must be nonnegative".into()));
    }
    let n = (t_final / dt).round();
    if (n * dt - t_final).abs() > 1e-9 * t_final.max(dt) {
        return Err(SolverError::InvalidConfig(format!(
            "final time {t_final} is not a multiple of dt {dt}"
        )));
    }
    Ok(n as usize)
}

/// `I + (dt/|K|) A_upw D`, the scheme with each row divided by `|K|/dt`,
/// where `D` scales the columns of the upwind operator (`None` means the
/// identity). With zero velocity the matrix is exactly the identity.
fn system_matrix(mesh: &TriMesh, flux: &EdgeFlux, dt: f64, active: Option<&[bool]>) -> CsrMatrix {
    let nc = mesh.n_cells();
    let s: Vec<f64> = mesh.cell_areas().iter().map(|a| dt / a).collect();
    let mut b = TripletBuilder::with_capacity(nc, nc, nc + 4 * flux.n_edges());
    for c in 0..nc {
        b.push(c, c, 1.0);
    }
    for (i, e) in mesh.interior_edges().iter().enumerate() {
        let (ap, am) = flux.coefficients(i);
        let (ck, cl) = match active {
            None => (1.0, 1.0),
            Some(act) => (act[e.k] as u8 as f64, act[e.l] as u8 as f64),
        };
        b.push(e.k, e.k, s[e.k] * ap * ck);
        b.push(e.k, e.l, -s[e.k] * am * cl);
        b.push(e.l, e.k, -s[e.l] * ap * ck);
        b.push(e.l, e.l, s[e.l] * am * cl);
    }
    b.build()
}

fn check_input(mesh: &TriMesh, flux: &EdgeFlux, u: &[f64]) -> Result<(), SolverError> {
    if u.len() != mesh.n_cells() {
        return Err(SolverError::DimensionMismatch {
            expected: mesh.n_cells(),
            got: u.len(),
        });
    }
    if flux.n_edges() != mesh.interior_edges().len() {
        return Err(SolverError::DimensionMismatch {
            expected: mesh.interior_edges().len(),
            got: flux.n_edges(),
        });
    }
    Ok(())
}

/// Linear scheme with the factorization kept across steps (the velocity
/// does not depend on time).
pub struct LinearTransport {
    matrix: CsrMatrix,
    lu: SparseLu,
    cfg: TransportConfig,
}

impl LinearTransport {
    pub fn new(mesh: &TriMesh, flux: &EdgeFlux, cfg: TransportConfig) -> Result<Self, SolverError> {
        cfg.validate()?;
        check_input(mesh, flux, &vec![0.0; mesh.n_cells()])?;
        let matrix = system_matrix(mesh, flux, cfg.dt, None);
        let mut lu = SparseLu::new();
        lu.factor(&matrix)?;
        Ok(Self { matrix, lu, cfg })
    }

    /// One step; also returns the relative linear residual.
    pub fn step(&self, u: &[f64]) -> Result<(P0Field, f64), SolverError> {
        let b = u.to_vec();
        let x = self.lu.solve(&b)?;
        check_residual(&self.matrix, &x, &b, self.cfg.linear_tol)?;
        let res = crate::sparse::relative_residual(&self.matrix, &x, &b);
        Ok((P0Field(x), res))
    }
}

/// Solve `(M/dt + A_upw) u^{m+1} = M u^m / dt`, with rows scaled by `dt/|K|`.
pub fn step_linear(mesh: &TriMesh, u_m: &[f64], flux: &EdgeFlux, cfg: &TransportConfig) -> Result<P0Field, SolverError> {
    check_input(mesh, flux, u_m)?;
    Ok(LinearTransport::new(mesh, flux, *cfg)?.step(u_m)?.0)
}

/// Truncated scheme `(u^{m+1} − u^m)/dt + a(β; u^{m+1}_⊕, ·) = 0` solved by
/// Picard iteration on the truncation set. Returns the solution and the
/// number of linear solves.
pub fn step_truncated(
    mesh: &TriMesh,
    u_m: &[f64],
    flux: &EdgeFlux,
    cfg: &TransportConfig,
) -> Result<(P0Field, usize), SolverError> {
    cfg.validate()?;
    check_input(mesh, flux, u_m)?;
    if let Some(c) = u_m.iter().position(|&v| v < 0.0) {
        return Err(SolverError::InvalidConfig(format!(
            "truncated transport needs nonnegative data (cell {c} holds {:e})",
            u_m[c]
        )));
    }
    let b = u_m.to_vec();
    let mut lu = SparseLu::new();
    let mut u = u_m.to_vec();
    let mut increment = f64::INFINITY;
    for it in 1..=cfg.picard_max {
        let active: Vec<bool> = u.iter().map(|&v| v >= 0.0).collect();
        let a = system_matrix(mesh, flux, cfg.dt, Some(&active));
        lu.factor(&a)?;
        let next = lu.solve(&b)?;
        check_residual(&a, &next, &b, cfg.linear_tol)?;
        increment = next.iter().zip(&u).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
        u = next;
        if increment <= cfg.picard_tol {
            return Ok((P0Field(u), it));
        }
    }
    Err(SolverError::PicardDiverged {
        iterations: cfg.picard_max,
        increment,
    })
}

/// `½ Σ |K| u_K²`, the quadratic energy reported by transport runs.
pub fn quadratic_energy(mesh: &TriMesh, u: &[f64]) -> f64 {
    0.5 * mesh.cell_areas().iter().zip(u).map(|(a, v)| a * v * v).sum::<f64>()
}

fn record(mesh: &TriMesh, step: usize, time: f64, u: &[f64], prev: &[f64], iters: usize, residual: f64) -> DiagnosticsRecord {
    let f = P0Field(u.to_vec());
    DiagnosticsRecord {
        step,
        time,
        min_u: f.min(),
        max_u: f.max(),
        mass: integrate_p0(mesh, u),
        energy: quadratic_energy(mesh, u),
        dynamics: dynamics(u, prev),
        newton_iters: iters,
        residual,
        min_w: None,
        max_w: None,
    }
}

/// Which transport scheme `run_transport` steps with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TransportScheme {
    #[default]
    Linear,
    Truncated,
}

/// Step from `u0` to `t_final`, calling `sink` with each record and state
/// (the initial state included). Returns the final state.
pub fn run_transport<E: From<SolverError>>(
    mesh: &TriMesh,
    u0: &P0Field,
    flux: &EdgeFlux,
    t_final: f64,
    cfg: &TransportConfig,
    scheme: TransportScheme,
    mut sink: impl FnMut(&DiagnosticsRecord, &P0Field) -> Result<(), E>,
) -> Result<P0Field, E> {
    cfg.validate()?;
    check_input(mesh, flux, u0)?;
    let n = step_count(t_final, cfg.dt)?;
    sink(&record(mesh, 0, 0.0, u0, u0, 0, 0.0), u0)?;
    let linear = match scheme {
        TransportScheme::Linear => Some(LinearTransport::new(mesh, flux, *cfg)?),
        TransportScheme::Truncated => None,
    };
    let mut u = u0.clone();
    for m in 1..=n {
        let (next, iters, res) = match &linear {
            Some(lin) => {
                let (next, res) = lin.step(&u)?;
                (next, 1, res)
            }
            None => {
                let (next, iters) = step_truncated(mesh, &u, flux, cfg)?;
                (next, iters, 0.0)
            }
        };
        sink(&record(mesh, m, m as f64 * cfg.dt, &next, &u, iters, res), &next)?;
        u = next;
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fespace::project_p0;
    use crate::mesh::build_disk_mesh;
    use crate::upwind::velocity_edge_flux;

    fn two_cells() -> TriMesh {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, -1.0]];
        TriMesh::new(v, vec![[0, 1, 2], [1, 0, 3]]).unwrap()
    }

    fn cfg(dt: f64) -> TransportConfig {
        TransportConfig {
            dt,
            linear_tol: 1e-12,
            ..Default::default()
        }
    }

    #[test]
    fn two_cell_hand_solve() {
        let m = two_cells();
        let f = EdgeFlux::constant(&m, &[2.0]).unwrap();
        let u = step_linear(&m, &[1.0, 0.0], &f, &cfg(0.1)).unwrap();
        assert!((u[0] - 5.0 / 7.0).abs() < 1e-15 && (u[1] - 2.0 / 7.0).abs() < 1e-15);
        let (t, _) = step_truncated(&m, &[1.0, 0.0], &f, &cfg(0.1)).unwrap();
        assert!((t[0] - u[0]).abs() < 1e-15 && (t[1] - u[1]).abs() < 1e-15);
    }

    #[test]
    fn zero_velocity_is_identity_and_zero_stays_zero() {
        let m = build_disk_mesh(4, 6).unwrap();
        let u0: Vec<f64> = (0..m.n_cells()).map(|c| (c % 5) as f64 * 0.2).collect();
        let u = step_linear(&m, &u0, &EdgeFlux::zero(&m), &cfg(0.1)).unwrap();
        assert_eq!(u.0, u0);
        let f = velocity_edge_flux(&m, |p| [p[1], -p[0]]);
        let (z, _) = step_truncated(&m, &vec![0.0; m.n_cells()], &f, &cfg(0.1)).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_preserved_under_rotation() {
        let m = build_disk_mesh(6, 6).unwrap();
        let f = velocity_edge_flux(&m, |p| [100.0 * p[1], -100.0 * p[0]]);
        let u = step_linear(&m, &vec![0.3; m.n_cells()], &f, &cfg(1e-3)).unwrap();
        assert!(u.iter().all(|v| (v - 0.3).abs() < 1e-12));
    }

    #[test]
    fn rotation_run_keeps_bounds_and_mass() {
        let m = build_disk_mesh(8, 6).unwrap();
        let f = velocity_edge_flux(&m, |p| [p[1], -p[0]]);
        let u0 = project_p0(&m, |p| (1.0 - 16.0 * ((p[0] - 0.4).powi(2) + p[1].powi(2))).max(0.0));
        let (lo, hi) = (u0.min(), u0.max());
        let mass0 = integrate_p0(&m, &u0);
        let mut rows = Vec::new();
        for scheme in [TransportScheme::Linear, TransportScheme::Truncated] {
            rows.clear();
            run_transport::<SolverError>(&m, &u0, &f, 0.5, &cfg(0.01), scheme, |r, _| {
                rows.push(*r);
                Ok(())
            })
            .unwrap();
            assert_eq!(rows.len(), 51);
            for r in &rows {
                assert!(r.min_u >= lo - 1e-12 && r.max_u <= hi + 1e-12);
                assert!((r.mass - mass0).abs() <= 1e-12 * mass0);
            }
        }
    }

    #[test]
    fn zero_final_time_emits_initial_state_only() {
        let m = two_cells();
        let mut n = 0;
        let u = run_transport::<SolverError>(&m, &P0Field(vec![1.0, 0.0]), &EdgeFlux::zero(&m), 0.0, &cfg(0.1), TransportScheme::Linear, |_, _| {
            n += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!((n, u.0), (1, vec![1.0, 0.0]));
    }

    #[test]
    fn rejects_bad_input() {
        let m = two_cells();
        let f = EdgeFlux::zero(&m);
        assert!(step_linear(&m, &[1.0], &f, &cfg(0.1)).is_err());
        assert!(step_linear(&m, &[1.0, 0.0], &f, &cfg(-1.0)).is_err());
        assert!(step_truncated(&m, &[-1.0, 0.0], &f, &cfg(0.1)).is_err());
        assert!(step_count(0.15, 0.1).is_err());
        assert_eq!(step_count(1e-3, 1e-6).unwrap(), 1000);
    }
}
