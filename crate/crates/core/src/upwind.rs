//! Upwind edge fluxes for P0 test functions: positive/negative parts, the
//! degenerate mobility and its monotone split, and the linear and
//! generalized upwind forms.
//!
//! Every interior edge `e` has a normal `n_e` pointing from cell `K` to cell
//! `L`. An edge contributes `+g_e` to `r_K` and `-g_e` to `r_L`, so all
//! assembled residuals sum to zero. Boundary edges contribute nothing.

use crate::error::SolverError;
use crate::exec::Exec;
use crate::fespace::{cell_gradient, GAUSS2_EDGE};
use crate::mesh::{Point, TriMesh};
use crate::sparse::{CsrMatrix, TripletBuilder};

#[inline]
pub fn pos_part(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

#[inline]
pub fn neg_part(x: f64) -> f64 {
    if x < 0.0 {
        -x
    } else {
        0.0
    }
}

/// `d(x⊕)/dx`, taken as 0 at the kink.
#[inline]
pub fn d_pos_part(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// `d(x⊖)/dx`, taken as 0 at the kink.
#[inline]
pub fn d_neg_part(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[inline]
pub fn mobility(v: f64) -> f64 {
    v * (1.0 - v)
}

#[inline]
pub fn mobility_pos(v: f64) -> f64 {
    pos_part(mobility(v))
}

/// Nondecreasing (`m_up`) and nonincreasing (`m_down`) parts of `M(v)⊕`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MobilitySplit {
    pub m_up: f64,
    pub m_down: f64,
}

pub fn mobility_split(v: f64) -> MobilitySplit {
    if v <= 0.5 {
        MobilitySplit {
            m_up: mobility_pos(v),
            m_down: 0.0,
        }
    } else {
        MobilitySplit {
            m_up: 0.25,
            m_down: mobility_pos(v) - 0.25,
        }
    }
}

/// Derivatives of both parts, using the left-limit branch at the kinks
/// `v ∈ {0, 1/2, 1}`.
pub fn mobility_split_derivative(v: f64) -> MobilitySplit {
    let slope = 1.0 - 2.0 * v;
    MobilitySplit {
        m_up: if v > 0.0 && v <= 0.5 { slope } else { 0.0 },
        m_down: if v > 0.5 && v <= 1.0 { slope } else { 0.0 },
    }
}

/// Quadrature values of `β·n_e` on every interior edge.
///
/// Edge `e` owns the slots `e*npts .. (e+1)*npts` of `values` and `weights`;
/// the weights of one edge sum to its length.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeFlux {
    npts: usize,
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl EdgeFlux {
    /// One constant trace per interior edge.
    pub fn constant(mesh: &TriMesh, traces: &[f64]) -> Result<Self, SolverError> {
        let ne = mesh.interior_edges().len();
        if traces.len() != ne {
            return Err(SolverError::DimensionMismatch {
                expected: ne,
                got: traces.len(),
            });
        }
        Ok(Self {
            npts: 1,
            values: traces.to_vec(),
            weights: mesh.interior_edges().iter().map(|e| e.length).collect(),
        })
    }

    pub fn zero(mesh: &TriMesh) -> Self {
        let ne = mesh.interior_edges().len();
        Self {
            npts: 1,
            values: vec![0.0; ne],
            weights: mesh.interior_edges().iter().map(|e| e.length).collect(),
        }
    }

    pub fn n_edges(&self) -> usize {
        self.values.len() / self.npts
    }

    pub fn points_per_edge(&self) -> usize {
        self.npts
    }

    pub fn values(&self, e: usize) -> &[f64] {
        &self.values[e * self.npts..(e + 1) * self.npts]
    }

    pub fn weights(&self, e: usize) -> &[f64] {
        &self.weights[e * self.npts..(e + 1) * self.npts]
    }

    /// `(∫_e (β·n)⊕, ∫_e (β·n)⊖)` by the edge quadrature.
    pub fn coefficients(&self, e: usize) -> (f64, f64) {
        let (mut ap, mut am) = (0.0, 0.0);
        for (v, w) in self.values(e).iter().zip(self.weights(e)) {
            ap += w * pos_part(*v);
            am += w * neg_part(*v);
        }
        (ap, am)
    }

    /// `∫_e β·n_e` by the edge quadrature.
    pub fn integral(&self, e: usize) -> f64 {
        self.values(e).iter().zip(self.weights(e)).map(|(v, w)| v * w).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

fn gauss_points(a: Point, b: Point) -> [Point; 2] {
    GAUSS2_EDGE.map(|(t, _)| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])])
}

/// Traces `v·n_e` of an analytic velocity at the two Gauss nodes of every
/// interior edge.
pub fn velocity_edge_flux(mesh: &TriMesh, v: impl Fn(Point) -> [f64; 2]) -> EdgeFlux {
    let edges = mesh.interior_edges();
    let mut values = Vec::with_capacity(2 * edges.len());
    let mut weights = Vec::with_capacity(2 * edges.len());
    for e in edges {
        let [a, b] = e.vertices.map(|i| mesh.vertices()[i]);
        for (p, (_, w)) in gauss_points(a, b).iter().zip(GAUSS2_EDGE) {
            let vp = v(*p);
            values.push(vp[0] * e.normal[0] + vp[1] * e.normal[1]);
            weights.push(w * e.length);
        }
    }
    EdgeFlux {
        npts: 2,
        values,
        weights,
    }
}

/// `Σ_{e⊂∂K} ∫_e v·n_K` for every cell, boundary edges included, by
/// two-point Gauss quadrature. Vanishes for divergence-free velocities that
/// the rule integrates exactly.
pub fn cell_flux_sums(mesh: &TriMesh, v: impl Fn(Point) -> [f64; 2]) -> Vec<f64> {
    let mut sums = vec![0.0; mesh.n_cells()];
    let edge_integral = |verts: [usize; 2], n: [f64; 2], len: f64| {
        let [a, b] = verts.map(|i| mesh.vertices()[i]);
        gauss_points(a, b)
            .iter()
            .zip(GAUSS2_EDGE)
            .map(|(p, (_, w))| {
                let vp = v(*p);
                w * len * (vp[0] * n[0] + vp[1] * n[1])
            })
            .sum::<f64>()
    };
    for e in mesh.interior_edges() {
        let f = edge_integral(e.vertices, e.normal, e.length);
        sums[e.k] += f;
        sums[e.l] -= f;
    }
    for e in mesh.boundary_edges() {
        sums[e.k] += edge_integral(e.vertices, e.normal, e.length);
    }
    sums
}

/// Cellwise-constant gradients of a P1 field.
pub fn cell_gradients(exec: Exec, mesh: &TriMesh, mu: &[f64]) -> Vec<[f64; 2]> {
    exec.map(mesh.n_cells(), |c| cell_gradient(mesh, mu, c))
}

/// `b_e = sign·{∇μ}·n_e` per interior edge, with `{·}` the arithmetic mean
/// of the two adjacent cell gradients.
pub fn gradient_traces(exec: Exec, mesh: &TriMesh, mu: &[f64], sign: f64) -> Vec<f64> {
    let grads = cell_gradients(exec, mesh, mu);
    exec.map_slice(mesh.interior_edges(), |e| {
        let (gk, gl) = (grads[e.k], grads[e.l]);
        sign * 0.5 * ((gk[0] + gl[0]) * e.normal[0] + (gk[1] + gl[1]) * e.normal[1])
    })
}

fn check_len(expected: usize, got: usize) -> Result<(), SolverError> {
    if expected == got {
        Ok(())
    } else {
        Err(SolverError::DimensionMismatch { expected, got })
    }
}

fn scatter_edges(mesh: &TriMesh, per_edge: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; mesh.n_cells()];
    for (e, g) in mesh.interior_edges().iter().zip(per_edge) {
        r[e.k] += g;
        r[e.l] -= g;
    }
    r
}

/// Linear upwind residual: edge flux `a⁺u_K − a⁻u_L` with
/// `a^± = ∫_e (β·n_e)^±`.
pub fn assemble_upwind_linear(mesh: &TriMesh, flux: &EdgeFlux, u: &[f64]) -> Result<Vec<f64>, SolverError> {
    assemble_upwind_linear_with(Exec::default(), mesh, flux, u)
}

pub fn assemble_upwind_linear_with(
    exec: Exec,
    mesh: &TriMesh,
    flux: &EdgeFlux,
    u: &[f64],
) -> Result<Vec<f64>, SolverError> {
    check_len(mesh.n_cells(), u.len())?;
    check_len(mesh.interior_edges().len(), flux.n_edges())?;
    let edges = mesh.interior_edges();
    let per_edge = exec.map(edges.len(), |i| {
        let (ap, am) = flux.coefficients(i);
        ap * u[edges[i].k] - am * u[edges[i].l]
    });
    Ok(scatter_edges(mesh, &per_edge))
}

/// Push the linear upwind operator into `b`, shifted by `offset` in both
/// rows and columns. Always pushes the four entries of every edge so the
/// sparsity pattern does not depend on the flux signs.
pub fn push_upwind_linear(mesh: &TriMesh, flux: &EdgeFlux, b: &mut TripletBuilder, offset: usize) {
    for (i, e) in mesh.interior_edges().iter().enumerate() {
        let (ap, am) = flux.coefficients(i);
        let (k, l) = (e.k + offset, e.l + offset);
        b.push(k, k, ap);
        b.push(k, l, -am);
        b.push(l, k, -ap);
        b.push(l, l, am);
    }
}

/// Matrix of the linear upwind form on P0 (`nc × nc`).
pub fn upwind_linear_matrix(mesh: &TriMesh, flux: &EdgeFlux) -> CsrMatrix {
    let mut b = TripletBuilder::with_capacity(mesh.n_cells(), mesh.n_cells(), 4 * flux.n_edges());
    push_upwind_linear(mesh, flux, &mut b, 0);
    b.build()
}

/// Generalized upwind flux on one edge with trace `b` and length `len`.
#[inline]
pub fn generalized_edge_flux(b: f64, len: f64, uk: f64, ul: f64) -> f64 {
    let (sk, sl) = (mobility_split(uk), mobility_split(ul));
    len * (pos_part(b) * (sk.m_up + sl.m_down) - neg_part(b) * (sl.m_up + sk.m_down))
}

/// Generalized upwind residual with `β = sign·∇μ`: per edge
/// `|e|·[b⊕(M↑(u_K)+M↓(u_L)) − b⊖(M↑(u_L)+M↓(u_K))]`.
pub fn assemble_upwind_generalized(mesh: &TriMesh, mu: &[f64], u: &[f64], sign: f64) -> Result<Vec<f64>, SolverError> {
    assemble_upwind_generalized_with(Exec::default(), mesh, mu, u, sign)
}

pub fn assemble_upwind_generalized_with(
    exec: Exec,
    mesh: &TriMesh,
    mu: &[f64],
    u: &[f64],
    sign: f64,
) -> Result<Vec<f64>, SolverError> {
    check_len(mesh.n_cells(), u.len())?;
    check_len(mesh.n_vertices(), mu.len())?;
    let traces = gradient_traces(exec, mesh, mu, sign);
    let edges = mesh.interior_edges();
    let per_edge = exec.map(edges.len(), |i| {
        let e = &edges[i];
        generalized_edge_flux(traces[i], e.length, u[e.k], u[e.l])
    });
    Ok(scatter_edges(mesh, &per_edge))
}
