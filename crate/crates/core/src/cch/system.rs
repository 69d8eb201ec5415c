//! Residual and Jacobian of the coupled `(u, μ, w)` system.
//!
//! Unknowns are stacked as `[u (nc), μ (nv), w (nv)]`. The Jacobian keeps
//! one sparsity pattern for the lifetime of the system: every structural
//! entry is pushed on every assembly, zeros included, so the symbolic LU
//! can be reused.

use super::potential::{splitting_f, SPLITTING_F_DNEW};
use super::CCHConfig;
use crate::error::SolverError;
use crate::exec::Exec;
use crate::fespace::{p1_mass, p1_stiffness, P0Field, P1Field};
use crate::mesh::TriMesh;
use crate::sparse::{solve, AssemblyPattern, CsrMatrix, TripletBuilder};
use crate::upwind::{d_pos_part, generalized_edge_flux, mobility_split, mobility_split_derivative, neg_part, pos_part, EdgeFlux};

/// Sign of `β = −∇μ` in the mobility flux.
const MOBILITY_SIGN: f64 = -1.0;

/// Per-edge geometry for the averaged gradient trace `{∇μ}·n_e`.
#[derive(Clone, Copy, Debug)]
struct EdgeGeom {
    k: usize,
    l: usize,
    length: f64,
    /// `∇φ_i·n_e` on `K` and on `L` for the three cell vertices.
    dk: [f64; 3],
    dl: [f64; 3],
    vk: [usize; 3],
    vl: [usize; 3],
    /// Linear upwind coefficients `∫(v·n)⊕`, `∫(v·n)⊖`.
    a_plus: f64,
    a_minus: f64,
}

/// Number of Jacobian entries pushed per interior edge: 4 `u`–`u` and
/// 2 rows × 6 `u`–`μ`.
const EDGE_ENTRIES: usize = 16;

pub struct CchSystem {
    nc: usize,
    nv: usize,
    cfg: CCHConfig,
    exec: Exec,
    areas: Vec<f64>,
    cells: Vec<[usize; 3]>,
    edges: Vec<EdgeGeom>,
    mass: CsrMatrix,
    stiffness: CsrMatrix,
    /// Consistent or lumped mass of the `w` equation.
    mass_w: CsrMatrix,
    /// Values of the state-independent entries, in push order.
    static_values: Vec<f64>,
    pattern: AssemblyPattern,
    jacobian: CsrMatrix,
    values: Vec<f64>,
}

impl CchSystem {
    pub fn new(mesh: &TriMesh, flux_v: &EdgeFlux, cfg: CCHConfig, exec: Exec) -> Result<Self, SolverError> {
        cfg.validate()?;
        if flux_v.n_edges() != mesh.interior_edges().len() {
            return Err(SolverError::DimensionMismatch {
                expected: mesh.interior_edges().len(),
                got: flux_v.n_edges(),
            });
        }
        let (nc, nv) = (mesh.n_cells(), mesh.n_vertices());
        let edges = mesh
            .interior_edges()
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let (gk, gl) = (mesh.barycentric_gradients(e.k), mesh.barycentric_gradients(e.l));
                let dot = |g: [f64; 2]| g[0] * e.normal[0] + g[1] * e.normal[1];
                let (a_plus, a_minus) = flux_v.coefficients(i);
                EdgeGeom {
                    k: e.k,
                    l: e.l,
                    length: e.length,
                    dk: gk.map(dot),
                    dl: gl.map(dot),
                    vk: mesh.cells()[e.k],
                    vl: mesh.cells()[e.l],
                    a_plus,
                    a_minus,
                }
            })
            .collect();
        let mass = p1_mass(mesh, false);
        let stiffness = p1_stiffness(mesh);
        let mass_w = p1_mass(mesh, cfg.lump_w);
        let mut sys = Self {
            nc,
            nv,
            cfg,
            exec,
            areas: mesh.cell_areas().to_vec(),
            cells: mesh.cells().to_vec(),
            edges,
            mass,
            stiffness,
            mass_w,
            static_values: Vec::new(),
            pattern: AssemblyPattern::default(),
            jacobian: CsrMatrix::from_diagonal(&[]),
            values: Vec::new(),
        };
        sys.build_pattern();
        Ok(sys)
    }

    pub fn n_unknowns(&self) -> usize {
        self.nc + 2 * self.nv
    }

    pub fn config(&self) -> &CCHConfig {
        &self.cfg
    }

    pub fn sizes(&self) -> (usize, usize) {
        (self.nc, self.nv)
    }

    /// `w` solving the `w` equation for a given `u`.
    pub fn project_w(mesh: &TriMesh, u: &P0Field, cfg: &CCHConfig) -> Result<P1Field, SolverError> {
        if cfg.lump_w {
            return Ok(crate::fespace::lumped_projection(mesh, u));
        }
        let load = crate::fespace::mixed_mass(mesh).mul_vec(u);
        Ok(P1Field(solve(&p1_mass(mesh, false), &load, 1e-12)?))
    }

    fn check_shapes(&self, x: &[f64], u_old: &[f64]) -> Result<(), SolverError> {
        if x.len() != self.n_unknowns() {
            return Err(SolverError::DimensionMismatch {
                expected: self.n_unknowns(),
                got: x.len(),
            });
        }
        if u_old.len() != self.nc {
            return Err(SolverError::DimensionMismatch {
                expected: self.nc,
                got: u_old.len(),
            });
        }
        Ok(())
    }

    fn split<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64], &'a [f64]) {
        let (u, rest) = x.split_at(self.nc);
        let (mu, w) = rest.split_at(self.nv);
        (u, mu, w)
    }

    /// `b_e = −{∇μ}·n_e`.
    fn trace(g: &EdgeGeom, mu: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            s += mu[g.vk[i]] * g.dk[i] + mu[g.vl[i]] * g.dl[i];
        }
        MOBILITY_SIGN * 0.5 * s
    }

    /// Residual of the coupled system at `x = [u, μ, w]`.
    pub fn residual(&self, x: &[f64], u_old: &[f64]) -> Result<Vec<f64>, SolverError> {
        self.check_shapes(x, u_old)?;
        let (u, mu, w) = self.split(x);
        let dt = self.cfg.dt;
        let inv_pe = 1.0 / self.cfg.pe;
        let mut r = vec![0.0; self.n_unknowns()];

        let per_edge = self.exec.map_slice(&self.edges, |g| {
            let b = Self::trace(g, mu);
            inv_pe * generalized_edge_flux(b, g.length, u[g.k], u[g.l]) + g.a_plus * u[g.k] - g.a_minus * u[g.l]
        });
        for c in 0..self.nc {
            r[c] = self.areas[c] * (u[c] - u_old[c]) / dt;
        }
        for (g, flux) in self.edges.iter().zip(&per_edge) {
            r[g.k] += flux;
            r[g.l] -= flux;
        }

        let eps2 = self.cfg.eps * self.cfg.eps;
        let m_mu = self.mass.mul_vec(mu);
        let a_w = self.stiffness.mul_vec(w);
        let rmu = &mut r[self.nc..self.nc + self.nv];
        for i in 0..self.nv {
            rmu[i] = m_mu[i] - eps2 * a_w[i];
        }
        for (c, cell) in self.cells.iter().enumerate() {
            let load = splitting_f(u[c], u_old[c]) * self.areas[c] / 3.0;
            for &v in cell {
                rmu[v] -= load;
            }
        }

        let mw = self.mass_w.mul_vec(w);
        let rw = &mut r[self.nc + self.nv..];
        rw.copy_from_slice(&mw);
        for (c, cell) in self.cells.iter().enumerate() {
            let bu = self.areas[c] / 3.0 * u[c];
            for &v in cell {
                rw[v] -= bu;
            }
        }
        Ok(r)
    }

    /// Push every structural entry once (values for the state-independent
    /// blocks, zeros elsewhere) and record the scatter pattern.
    fn build_pattern(&mut self) {
        let n = self.n_unknowns();
        let mut b = TripletBuilder::with_capacity(n, n, self.nc + EDGE_ENTRIES * self.edges.len());
        self.push_dynamic_structure(&mut b);
        let n_dynamic = b.len();
        self.push_static(&mut b);
        self.static_values = b.values()[n_dynamic..].to_vec();
        let (jac, pattern) = b.build_with_pattern();
        self.values = vec![0.0; pattern.len()];
        self.jacobian = jac;
        self.pattern = pattern;
    }

    fn push_dynamic_structure(&self, b: &mut TripletBuilder) {
        let nc = self.nc;
        for c in 0..nc {
            b.push(c, c, 0.0);
        }
        for g in &self.edges {
            for row in [g.k, g.l] {
                b.push(row, g.k, 0.0);
                b.push(row, g.l, 0.0);
            }
            for row in [g.k, g.l] {
                for i in 0..3 {
                    b.push(row, nc + g.vk[i], 0.0);
                    b.push(row, nc + g.vl[i], 0.0);
                }
            }
        }
    }

    fn push_static(&self, b: &mut TripletBuilder) {
        let (nc, nv) = (self.nc, self.nv);
        let eps2 = self.cfg.eps * self.cfg.eps;
        let (mu0, w0) = (nc, nc + nv);
        // μ rows
        for (c, cell) in self.cells.iter().enumerate() {
            for &v in cell {
                b.push(mu0 + v, c, -SPLITTING_F_DNEW * self.areas[c] / 3.0);
            }
        }
        for i in 0..nv {
            for (j, m) in self.mass.row(i) {
                b.push(mu0 + i, mu0 + j, m);
            }
            for (j, a) in self.stiffness.row(i) {
                b.push(mu0 + i, w0 + j, -eps2 * a);
            }
        }
        // w rows
        for (c, cell) in self.cells.iter().enumerate() {
            for &v in cell {
                b.push(w0 + v, c, -self.areas[c] / 3.0);
            }
        }
        for i in 0..nv {
            for (j, m) in self.mass_w.row(i) {
                b.push(w0 + i, w0 + j, m);
            }
        }
    }

    /// Jacobian at `x`. With `frozen_mobility` the derivatives of the split
    /// mobility with respect to `u` are dropped (the pattern is kept).
    pub fn jacobian(&mut self, x: &[f64], u_old: &[f64], frozen_mobility: bool) -> Result<&CsrMatrix, SolverError> {
        self.jacobian_shifted(x, u_old, frozen_mobility, 0.0)
    }

    /// Jacobian with the `u` time-derivative diagonal scaled by `1 + shift`.
    pub fn jacobian_shifted(
        &mut self,
        x: &[f64],
        u_old: &[f64],
        frozen_mobility: bool,
        shift: f64,
    ) -> Result<&CsrMatrix, SolverError> {
        self.check_shapes(x, u_old)?;
        let (u, mu, _) = self.split(x);
        let nc = self.nc;
        let inv_pe = 1.0 / self.cfg.pe;
        let dt = self.cfg.dt;

        let per_edge: Vec<[f64; EDGE_ENTRIES]> = self.exec.map_slice(&self.edges, |g| {
            let b = Self::trace(g, mu);
            let (bp, bm) = (pos_part(b), neg_part(b));
            let (sk, sl) = (mobility_split(u[g.k]), mobility_split(u[g.l]));
            let (dk, dl) = if frozen_mobility {
                (0.0, 0.0)
            } else {
                let (tk, tl) = (mobility_split_derivative(u[g.k]), mobility_split_derivative(u[g.l]));
                (
                    g.length * (bp * tk.m_up - bm * tk.m_down),
                    g.length * (bp * tl.m_down - bm * tl.m_up),
                )
            };
            // d(b⊕)/db = H(b), d(b⊖)/db = −H(−b), with H(0) = 0
            let dg_db = g.length * (d_pos_part(b) * (sk.m_up + sl.m_down) + d_pos_part(-b) * (sl.m_up + sk.m_down));
            let (duk, dul) = (inv_pe * dk + g.a_plus, inv_pe * dl - g.a_minus);
            let mut out = [0.0; EDGE_ENTRIES];
            out[..4].copy_from_slice(&[duk, dul, -duk, -dul]);
            let s = inv_pe * dg_db * MOBILITY_SIGN * 0.5;
            for i in 0..3 {
                out[4 + 2 * i] = s * g.dk[i];
                out[4 + 2 * i + 1] = s * g.dl[i];
                out[10 + 2 * i] = -s * g.dk[i];
                out[10 + 2 * i + 1] = -s * g.dl[i];
            }
            out
        });

        let vals = &mut self.values;
        for c in 0..nc {
            vals[c] = (1.0 + shift) * self.areas[c] / dt;
        }
        for (i, e) in per_edge.iter().enumerate() {
            vals[nc + EDGE_ENTRIES * i..nc + EDGE_ENTRIES * (i + 1)].copy_from_slice(e);
        }
        let n_dyn = nc + EDGE_ENTRIES * self.edges.len();
        vals[n_dyn..].copy_from_slice(&self.static_values);
        self.pattern.scatter(vals, &mut self.jacobian);
        Ok(&self.jacobian)
    }

    /// Last assembled Jacobian.
    pub fn current_jacobian(&self) -> &CsrMatrix {
        &self.jacobian
    }
}
