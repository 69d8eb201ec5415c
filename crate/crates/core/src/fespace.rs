//! Piecewise-constant (P0, discontinuous) and continuous piecewise-linear
//! (P1) spaces on a [`TriMesh`].

use std::ops::{Deref, DerefMut};

use crate::error::MeshError;
use crate::mesh::{Point, TriMesh};
use crate::sparse::{CsrMatrix, TripletBuilder};

/// One value per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct P0Field(pub Vec<f64>);

/// One value per vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct P1Field(pub Vec<f64>);

macro_rules! field_impls {
    ($t:ident) => {
        impl $t {
            pub fn constant(n: usize, c: f64) -> Self {
                Self(vec![c; n])
            }

            pub fn zeros(n: usize) -> Self {
                Self(vec![0.0; n])
            }

            pub fn min(&self) -> f64 {
                self.0.iter().copied().fold(f64::INFINITY, f64::min)
            }

            pub fn max(&self) -> f64 {
                self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }
        }

        impl Deref for $t {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl DerefMut for $t {
            fn deref_mut(&mut self) -> &mut [f64] {
                &mut self.0
            }
        }

        impl From<Vec<f64>> for $t {
            fn from(v: Vec<f64>) -> Self {
                Self(v)
            }
        }
    };
}

field_impls!(P0Field);
field_impls!(P1Field);

/// Gauss–Legendre nodes on `[0, 1]` (two points, exact for cubics) with
/// weights that sum to one.
pub const GAUSS2_EDGE: [(f64, f64); 2] = [
    (0.211_324_865_405_187_1, 0.5), // 1/2 - sqrt(3)/6
    (0.788_675_134_594_812_9, 0.5), // 1/2 + sqrt(3)/6
];

/// Edge-midpoint rule on cell `c`: three points with weight `|K|/3` each,
/// exact for quadratics.
pub fn cell_quadrature(mesh: &TriMesh, c: usize) -> [(Point, f64); 3] {
    let [a, b, d] = mesh.cell_points(c);
    let w = mesh.cell_areas()[c] / 3.0;
    let mid = |p: Point, q: Point| [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0];
    [(mid(a, b), w), (mid(b, d), w), (mid(d, a), w)]
}

/// Diagonal P0 mass matrix, `diag(|K|)`.
pub fn p0_mass(mesh: &TriMesh) -> CsrMatrix {
    CsrMatrix::from_diagonal(mesh.cell_areas())
}

/// P1 mass matrix, consistent (`|K|/12 (1 + δ_ij)` per cell) or row-sum
/// lumped (`|K|/3` per cell vertex).
pub fn p1_mass(mesh: &TriMesh, lumped: bool) -> CsrMatrix {
    if lumped {
        return CsrMatrix::from_diagonal(&p1_lumped_mass_diagonal(mesh));
    }
    let mut b = TripletBuilder::with_capacity(mesh.n_vertices(), mesh.n_vertices(), 9 * mesh.n_cells());
    for (c, cell) in mesh.cells().iter().enumerate() {
        let a12 = mesh.cell_areas()[c] / 12.0;
        for i in 0..3 {
            for j in 0..3 {
                b.push(cell[i], cell[j], if i == j { 2.0 * a12 } else { a12 });
            }
        }
    }
    b.build().with_symmetric(true)
}

pub fn p1_lumped_mass_diagonal(mesh: &TriMesh) -> Vec<f64> {
    let mut d = vec![0.0; mesh.n_vertices()];
    for (c, cell) in mesh.cells().iter().enumerate() {
        let a3 = mesh.cell_areas()[c] / 3.0;
        for &v in cell {
            d[v] += a3;
        }
    }
    d
}

/// P1 stiffness matrix `∫ ∇φ_i · ∇φ_j`.
pub fn p1_stiffness(mesh: &TriMesh) -> CsrMatrix {
    let mut b = TripletBuilder::with_capacity(mesh.n_vertices(), mesh.n_vertices(), 9 * mesh.n_cells());
    for (c, cell) in mesh.cells().iter().enumerate() {
        let g = mesh.barycentric_gradients(c);
        let area = mesh.cell_areas()[c];
        for i in 0..3 {
            for j in 0..3 {
                b.push(cell[i], cell[j], area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]));
            }
        }
    }
    b.build().with_symmetric(true)
}

/// Mixed mass `B_{iK} = ∫_K φ_i = |K|/3`, mapping P0 coefficients to P1
/// load vectors (`nv × nc`).
pub fn mixed_mass(mesh: &TriMesh) -> CsrMatrix {
    let mut b = TripletBuilder::with_capacity(mesh.n_vertices(), mesh.n_cells(), 3 * mesh.n_cells());
    for (c, cell) in mesh.cells().iter().enumerate() {
        let a3 = mesh.cell_areas()[c] / 3.0;
        for &v in cell {
            b.push(v, c, a3);
        }
    }
    b.build()
}

/// Cell averages of `f` computed with the edge-midpoint rule.
pub fn project_p0(mesh: &TriMesh, f: impl Fn(Point) -> f64) -> P0Field {
    P0Field(
        (0..mesh.n_cells())
            .map(|c| cell_quadrature(mesh, c).iter().map(|&(p, _)| f(p)).sum::<f64>() / 3.0)
            .collect(),
    )
}

/// P1 interpolant of `f` (vertex values).
pub fn interpolate_p1(mesh: &TriMesh, f: impl Fn(Point) -> f64) -> P1Field {
    P1Field(mesh.vertices().iter().map(|&p| f(p)).collect())
}

/// Lumped L² projection of a P0 field onto P1: `w = D⁻¹ B u`. Each vertex
/// value is an area-weighted average of the surrounding cells, so bounds
/// on `u` carry over to `w`.
pub fn lumped_projection(mesh: &TriMesh, u: &P0Field) -> P1Field {
    let mut num = vec![0.0; mesh.n_vertices()];
    let mut den = vec![0.0; mesh.n_vertices()];
    for (c, cell) in mesh.cells().iter().enumerate() {
        let a3 = mesh.cell_areas()[c] / 3.0;
        for &v in cell {
            num[v] += a3 * u[c];
            den[v] += a3;
        }
    }
    P1Field(num.iter().zip(&den).map(|(n, d)| n / d).collect())
}

/// Gradient of a P1 field on cell `c` (constant per cell).
pub fn cell_gradient(mesh: &TriMesh, v: &[f64], c: usize) -> [f64; 2] {
    let g = mesh.barycentric_gradients(c);
    let cell = mesh.cells()[c];
    let mut out = [0.0; 2];
    for i in 0..3 {
        out[0] += v[cell[i]] * g[i][0];
        out[1] += v[cell[i]] * g[i][1];
    }
    out
}

pub fn integrate_p0(mesh: &TriMesh, u: &[f64]) -> f64 {
    mesh.cell_areas().iter().zip(u).map(|(a, v)| a * v).sum()
}

pub fn integrate_p1(mesh: &TriMesh, w: &[f64]) -> f64 {
    mesh.cells()
        .iter()
        .zip(mesh.cell_areas())
        .map(|(cell, a)| a * (w[cell[0]] + w[cell[1]] + w[cell[2]]) / 3.0)
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    pub l2: f64,
    /// Only defined for P1 fields.
    pub h1_semi: Option<f64>,
    pub linf: f64,
}

impl Norms {
    /// Full H¹ norm, when the seminorm is available.
    pub fn h1(&self) -> Option<f64> {
        self.h1_semi.map(|s| (self.l2 * self.l2 + s * s).sqrt())
    }
}

pub fn p0_norms(mesh: &TriMesh, u: &[f64]) -> Norms {
    assert_eq!(u.len(), mesh.n_cells(), "P0 field length");
    let l2 = mesh.cell_areas().iter().zip(u).map(|(a, v)| a * v * v).sum::<f64>();
    Norms {
        l2: l2.sqrt(),
        h1_semi: None,
        linf: u.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
    }
}

/// L² (exact elementwise consistent-mass form), H¹ seminorm and max-dof norm.
pub fn p1_norms(mesh: &TriMesh, w: &[f64]) -> Norms {
    assert_eq!(w.len(), mesh.n_vertices(), "P1 field length");
    let (mut l2, mut semi) = (0.0, 0.0);
    for (c, cell) in mesh.cells().iter().enumerate() {
        let a = mesh.cell_areas()[c];
        let v = cell.map(|i| w[i]);
        let s: f64 = v.iter().sum();
        let sq: f64 = v.iter().map(|x| x * x).sum();
        l2 += a / 12.0 * (sq + s * s);
        let g = cell_gradient(mesh, w, c);
        semi += a * (g[0] * g[0] + g[1] * g[1]);
    }
    Norms {
        l2: l2.max(0.0).sqrt(),
        h1_semi: Some(semi.max(0.0).sqrt()),
        linf: w.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
    }
}

/// Evaluate a P1 field at arbitrary points by barycentric interpolation in
/// the containing cell.
pub fn p1_eval_at(mesh: &TriMesh, w: &[f64], points: &[Point]) -> Result<Vec<f64>, MeshError> {
    points
        .iter()
        .map(|&p| {
            let c = mesh.locate(p).ok_or(MeshError::PointOutside(p[0], p[1]))?;
            let lam = mesh.barycentric(c, p);
            let cell = mesh.cells()[c];
            Ok(lam[0] * w[cell[0]] + lam[1] * w[cell[1]] + lam[2] * w[cell[2]])
        })
        .collect()
}
