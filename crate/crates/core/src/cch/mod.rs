//! Fully discrete convective Cahn–Hilliard scheme on `(u, μ, w)`:
//!
//! ```text
//! |K|(u − u_old)/dt + (1/Pe)·G(−∇μ; u) + L(v; u) = 0   per cell K
//! M μ − ε² A w − (f(u, u_old), φ)                 = 0   per vertex
//! M_w w − B u                                      = 0   per vertex
//! ```
//!
//! `u` is P0, `μ` and `w` are P1, `G` is the generalized upwind form with
//! the split mobility, `L` the linear upwind form of the velocity and `f`
//! the convex–concave split derivative of the truncated potential.

mod potential;
mod solver;
mod system;

use serde::{Deserialize, Serialize};

pub use potential::{
    potential_df, potential_dfe, potential_f, potential_fe, potential_fi, splitting_f, PotentialEval,
    SPLITTING_F_DNEW,
};
pub use solver::{run_cch, CchSolver, StepStats};
pub use system::CchSystem;

use crate::error::SolverError;
use crate::fespace::{cell_quadrature, P0Field, P1Field};
use crate::mesh::TriMesh;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CCHConfig {
    /// Interface width.
    pub eps: f64,
    /// Péclet number; the mobility flux is scaled by `1/pe`.
    pub pe: f64,
    pub dt: f64,
    pub newton_abs_tol: f64,
    pub newton_rel_tol: f64,
    pub newton_max_iter: usize,
    /// Lumped mass in the `w` equation.
    pub lump_w: bool,
    /// Relative residual accepted from each linear solve.
    pub linear_tol: f64,
    /// Halve the Newton update while the residual norm grows.
    pub line_search: bool,
    /// On Newton failure, retry the step with the mobility derivatives
    /// dropped from the Jacobian (lagged mobility).
    pub frozen_mobility_fallback: bool,
    /// Pseudo-transient continuation: the `u` diagonal of the Newton matrix
    /// is scaled by `1 + σ_k`, starting from `σ_0` = this value and updated
    /// by `σ_k = min(σ_0, σ_{k−1} ‖r_k‖/‖r_{k−1}‖)`. The shift vanishes
    /// with the residual, so converged states solve the unmodified step.
    /// Zero disables it. Cannot be combined with `line_search`.
    pub pseudo_transient: f64,
}

impl Default for CCHConfig {
    fn default() -> Self {
        Self {
            eps: 0.01,
            pe: 1.0,
            dt: 1e-6,
            newton_abs_tol: 1e-10,
            newton_rel_tol: 1e-8,
            newton_max_iter: 30,
            lump_w: true,
            linear_tol: 1e-8,
            line_search: false,
            frozen_mobility_fallback: false,
            pseudo_transient: 0.0,
        }
    }
}

impl CCHConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(SolverError::InvalidConfig(format!("{name} must be positive, got {v}")))
            }
        };
        positive("eps", self.eps)?;
        positive("pe", self.pe)?;
        positive("dt", self.dt)?;
        positive("newton_abs_tol", self.newton_abs_tol)?;
        positive("newton_rel_tol", self.newton_rel_tol)?;
        positive("linear_tol", self.linear_tol)?;
        if !(self.pseudo_transient >= 0.0 && self.pseudo_transient.is_finite()) {
            return Err(SolverError::InvalidConfig(format!(
                "pseudo_transient must be nonnegative, got {}",
                self.pseudo_transient
            )));
        }
        if self.pseudo_transient > 0.0 && self.line_search {
            return Err(SolverError::InvalidConfig(
                "pseudo_transient and line_search cannot both be enabled".into(),
            ));
        }
        if self.newton_max_iter == 0 {
            return Err(SolverError::InvalidConfig("newton_max_iter must be at least 1".into()));
        }
        Ok(())
    }

    /// Half-width of the accepted band around `[0, 1]`.
    pub fn bound_tol(&self) -> f64 {
        10.0 * self.newton_abs_tol
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CCHState {
    pub u: P0Field,
    pub mu: P1Field,
    pub w: P1Field,
    pub time: f64,
}

impl CCHState {
    /// State at `t = 0`: `μ = 0` and `w` solving the `w` equation for `u0`.
    pub fn initial(mesh: &TriMesh, u0: P0Field, cfg: &CCHConfig) -> Result<Self, SolverError> {
        if u0.len() != mesh.n_cells() {
            return Err(SolverError::DimensionMismatch {
                expected: mesh.n_cells(),
                got: u0.len(),
            });
        }
        let w = CchSystem::project_w(mesh, &u0, cfg)?;
        Ok(Self {
            u: u0,
            mu: P1Field::zeros(mesh.n_vertices()),
            w,
            time: 0.0,
        })
    }

    pub fn n_unknowns(&self) -> usize {
        self.u.len() + self.mu.len() + self.w.len()
    }

    /// Stacked unknown vector `[u, μ, w]`.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.n_unknowns());
        x.extend_from_slice(&self.u);
        x.extend_from_slice(&self.mu);
        x.extend_from_slice(&self.w);
        x
    }

    pub fn from_vector(x: &[f64], nc: usize, nv: usize, time: f64) -> Self {
        assert_eq!(x.len(), nc + 2 * nv, "stacked vector length");
        Self {
            u: P0Field(x[..nc].to_vec()),
            mu: P1Field(x[nc..nc + nv].to_vec()),
            w: P1Field(x[nc + nv..].to_vec()),
            time,
        }
    }
}

/// `(ε²/2) wᵀ A w + ∫ F(w)`, the integral by the edge-midpoint rule.
pub fn energy(mesh: &TriMesh, w: &[f64], eps: f64) -> f64 {
    let mut grad = 0.0;
    let mut bulk = 0.0;
    for c in 0..mesh.n_cells() {
        let g = crate::fespace::cell_gradient(mesh, w, c);
        grad += mesh.cell_areas()[c] * (g[0] * g[0] + g[1] * g[1]);
        let [a, b, d] = mesh.cells()[c].map(|i| w[i]);
        let mids = [0.5 * (a + b), 0.5 * (b + d), 0.5 * (d + a)];
        let q = cell_quadrature(mesh, c);
        for (m, (_, wt)) in mids.iter().zip(q) {
            bulk += wt * potential_f(*m);
        }
    }
    0.5 * eps * eps * grad + bulk
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_rect_mesh;

    #[test]
    fn energy_examples() {
        let m = build_rect_mesh(4, 4, [0.0, 0.0], [1.0, 1.0]).unwrap();
        assert_eq!(energy(&m, &vec![0.0; m.n_vertices()], 0.01), 0.0);
        let e = energy(&m, &vec![0.5; m.n_vertices()], 0.01);
        assert!((e - 0.015625).abs() < 1e-15);
        // pure gradient term: w = x gives ε²/2 · 1 + ∫F(x) = ε²/2 + 1/120
        let w: Vec<f64> = m.vertices().iter().map(|p| p[0]).collect();
        let e = energy(&m, &w, 0.1);
        assert!((e - (0.005 + 1.0 / 120.0)).abs() < 2e-4);
    }

    #[test]
    fn config_validation_and_serde() {
        assert!(CCHConfig::default().validate().is_ok());
        let bad = CCHConfig { eps: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let c: CCHConfig = serde_json::from_str(r#"{"eps": 0.001, "dt": 1e-3}"#).unwrap();
        assert_eq!((c.eps, c.dt, c.newton_max_iter), (0.001, 1e-3, 30));
        assert!(serde_json::from_str::<CCHConfig>(r#"{"epsilon": 1}"#).is_err());
    }

    #[test]
    fn stacked_vector_round_trip() {
        let m = build_rect_mesh(2, 2, [0.0, 0.0], [1.0, 1.0]).unwrap();
        let s = CCHState::initial(&m, P0Field(vec![0.25; m.n_cells()]), &CCHConfig::default()).unwrap();
        assert!(s.w.iter().all(|v| (v - 0.25).abs() < 1e-15));
        let x = s.to_vector();
        assert_eq!(CCHState::from_vector(&x, m.n_cells(), m.n_vertices(), 0.0), s);
    }
}
