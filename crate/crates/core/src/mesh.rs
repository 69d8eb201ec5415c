//! Conforming triangulations with the oriented edge structure used by the
//! upwind forms.
//!
//! Every interior edge `e = ∂K ∩ ∂L` stores a unit normal `n_e` exterior to
//! `K` and pointing into `L`; `K` is the lower cell index and the normal is
//! flipped so that `n_e · (centroid(L) - centroid(K)) > 0`. Boundary edges
//! carry the outward normal of the domain.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::MeshError;

pub type Point = [f64; 2];

#[derive(Clone, Debug, PartialEq)]
pub struct InteriorEdge {
    pub k: usize,
    pub l: usize,
    pub vertices: [usize; 2],
    pub normal: [f64; 2],
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub k: usize,
    pub vertices: [usize; 2],
    pub normal: [f64; 2],
    pub length: f64,
}

/// Immutable triangulation. Cells are stored counterclockwise.
#[derive(Clone, Debug)]
pub struct TriMesh {
    vertices: Vec<Point>,
    cells: Vec<[usize; 3]>,
    interior_edges: Vec<InteriorEdge>,
    boundary_edges: Vec<BoundaryEdge>,
    cell_areas: Vec<f64>,
    h: f64,
    locator: OnceLock<CellLocator>,
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn dist(a: Point, b: Point) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

impl TriMesh {
    /// Build a mesh from raw vertex and cell arrays, reorienting clockwise
    /// cells and deriving the edge topology.
    pub fn new(vertices: Vec<Point>, mut cells: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let nv = vertices.len();
        let mut used = vec![false; nv];
        for (c, cell) in cells.iter().enumerate() {
            for &v in cell {
                if v >= nv {
                    return Err(MeshError::VertexOutOfRange { cell: c, index: v });
                }
                used[v] = true;
            }
            if cell[0] == cell[1] || cell[1] == cell[2] || cell[0] == cell[2] {
                return Err(MeshError::ZeroArea(c));
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(MeshError::OrphanVertex(v));
        }

        let mut cell_areas = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter_mut().enumerate() {
            let [a, b, d] = cell.map(|i| vertices[i]);
            let mut area = signed_area(a, b, d);
            let scale = dist(a, b).max(dist(b, d)).max(dist(a, d));
            if area.abs() <= 1e-14 * scale * scale {
                return Err(MeshError::ZeroArea(c));
            }
            if area < 0.0 {
                cell.swap(1, 2);
                area = -area;
            }
            cell_areas.push(area);
        }

        let mut seen_cells: HashMap<[usize; 3], usize> = HashMap::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let mut key = *cell;
            key.sort_unstable();
            if let Some(prev) = seen_cells.insert(key, c) {
                return Err(MeshError::NonConforming(format!(
                    "cells {prev} and {c} are the same triangle"
                )));
            }
        }

        // edge key (sorted vertex pair) -> incident cells, in cell order
        let mut edge_cells: HashMap<[usize; 2], Vec<usize>> = HashMap::with_capacity(cells.len() * 2);
        let mut edge_order: Vec<[usize; 2]> = Vec::with_capacity(cells.len() * 2);
        for (c, cell) in cells.iter().enumerate() {
            for i in 0..3 {
                let (a, b) = (cell[i], cell[(i + 1) % 3]);
                let key = [a.min(b), a.max(b)];
                let entry = edge_cells.entry(key).or_insert_with(|| {
                    edge_order.push(key);
                    Vec::with_capacity(2)
                });
                entry.push(c);
            }
        }

        let centroid = |c: usize| -> Point {
            let [a, b, d] = cells[c].map(|i| vertices[i]);
            [(a[0] + b[0] + d[0]) / 3.0, (a[1] + b[1] + d[1]) / 3.0]
        };

        let mut interior_edges = Vec::new();
        let mut boundary_edges = Vec::new();
        for key in &edge_order {
            let inc = &edge_cells[key];
            let (pa, pb) = (vertices[key[0]], vertices[key[1]]);
            let length = dist(pa, pb);
            let mut normal = [(pb[1] - pa[1]) / length, -(pb[0] - pa[0]) / length];
            match inc.as_slice() {
                [k] => {
                    let ck = centroid(*k);
                    let mid = [(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0];
                    if normal[0] * (mid[0] - ck[0]) + normal[1] * (mid[1] - ck[1]) < 0.0 {
                        normal = [-normal[0], -normal[1]];
                    }
                    boundary_edges.push(BoundaryEdge {
                        k: *k,
                        vertices: *key,
                        normal,
                        length,
                    });
                }
                [c0, c1] => {
                    let (k, l) = ((*c0).min(*c1), (*c0).max(*c1));
                    let (ck, cl) = (centroid(k), centroid(l));
                    if normal[0] * (cl[0] - ck[0]) + normal[1] * (cl[1] - ck[1]) < 0.0 {
                        normal = [-normal[0], -normal[1]];
                    }
                    interior_edges.push(InteriorEdge {
                        k,
                        l,
                        vertices: *key,
                        normal,
                        length,
                    });
                }
                _ => {
                    return Err(MeshError::NonConforming(format!(
                        "edge ({}, {}) is shared by {} cells",
                        key[0],
                        key[1],
                        inc.len()
                    )))
                }
            }
        }

        let h = cells
            .iter()
            .map(|cell| {
                let [a, b, d] = cell.map(|i| vertices[i]);
                dist(a, b).max(dist(b, d)).max(dist(a, d))
            })
            .fold(0.0, f64::max);

        let mesh = Self {
            vertices,
            cells,
            interior_edges,
            boundary_edges,
            cell_areas,
            h,
            locator: OnceLock::new(),
        };
        mesh.check_hanging_nodes(&edge_order)?;
        Ok(mesh)
    }

    /// A vertex strictly inside some edge means a T-junction.
    fn check_hanging_nodes(&self, edges: &[[usize; 2]]) -> Result<(), MeshError> {
        let grid = PointGrid::new(&self.vertices, self.h);
        for e in edges {
            let (a, b) = (self.vertices[e[0]], self.vertices[e[1]]);
            let len = dist(a, b);
            for v in grid.candidates(a, b) {
                if v == e[0] || v == e[1] {
                    continue;
                }
                let p = self.vertices[v];
                let t = ((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) / (len * len);
                if t <= 1e-12 || t >= 1.0 - 1e-12 {
                    continue;
                }
                let off = 2.0 * signed_area(a, b, p).abs() / len;
                if off <= 1e-10 * len {
                    return Err(MeshError::NonConforming(format!(
                        "hanging vertex {v} on edge ({}, {})",
                        e[0], e[1]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn interior_edges(&self) -> &[InteriorEdge] {
        &self.interior_edges
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn cell_areas(&self) -> &[f64] {
        &self.cell_areas
    }

    /// Longest edge over all cells.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_edges(&self) -> usize {
        self.interior_edges.len() + self.boundary_edges.len()
    }

    pub fn total_area(&self) -> f64 {
        self.cell_areas.iter().sum()
    }

    pub fn cell_points(&self, c: usize) -> [Point; 3] {
        self.cells[c].map(|i| self.vertices[i])
    }

    pub fn centroid(&self, c: usize) -> Point {
        let [a, b, d] = self.cell_points(c);
        [(a[0] + b[0] + d[0]) / 3.0, (a[1] + b[1] + d[1]) / 3.0]
    }

    /// Gradients of the three barycentric coordinates on cell `c`, in the
    /// cell's local vertex order.
    pub fn barycentric_gradients(&self, c: usize) -> [[f64; 2]; 3] {
        let [p0, p1, p2] = self.cell_points(c);
        let twice = 2.0 * self.cell_areas[c];
        [
            [(p1[1] - p2[1]) / twice, (p2[0] - p1[0]) / twice],
            [(p2[1] - p0[1]) / twice, (p0[0] - p2[0]) / twice],
            [(p0[1] - p1[1]) / twice, (p1[0] - p0[0]) / twice],
        ]
    }

    /// Barycentric coordinates of `p` with respect to cell `c`.
    pub fn barycentric(&self, c: usize, p: Point) -> [f64; 3] {
        let [a, b, d] = self.cell_points(c);
        let area = self.cell_areas[c];
        [
            signed_area(p, b, d) / area,
            signed_area(a, p, d) / area,
            signed_area(a, b, p) / area,
        ]
    }

    /// Cell containing `p`, allowing a relative tolerance of `1e-10` on the
    /// barycentric coordinates so points on the boundary are found.
    pub fn locate(&self, p: Point) -> Option<usize> {
        let loc = self.locator.get_or_init(|| CellLocator::new(self));
        loc.locate(self, p, 1e-10)
    }

    /// Uniform red refinement: every triangle is split into four by its edge
    /// midpoints. Children of cell `c` are `4c..4c+4`, the first three at
    /// the parent's corners.
    pub fn refine_uniform(&self) -> TriMesh {
        let mut vertices = self.vertices.clone();
        let mut midpoint: HashMap<[usize; 2], usize> = HashMap::with_capacity(self.n_edges());
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
            let key = [a.min(b), a.max(b)];
            *midpoint.entry(key).or_insert_with(|| {
                let (pa, pb) = (vertices[a], vertices[b]);
                vertices.push([(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0]);
                vertices.len() - 1
            })
        };
        let mut cells = Vec::with_capacity(4 * self.n_cells());
        for &[a, b, c] in &self.cells {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            cells.push([a, ab, ca]);
            cells.push([ab, b, bc]);
            cells.push([ca, bc, c]);
            cells.push([ab, bc, ca]);
        }
        TriMesh::new(vertices, cells).expect("red refinement of a valid mesh is valid")
    }

    /// If every cell of `self` lies inside a single cell of `coarse`, return
    /// the parent index of each cell.
    pub fn parents_in(&self, coarse: &TriMesh) -> Option<Vec<usize>> {
        let mut parents = Vec::with_capacity(self.n_cells());
        for c in 0..self.n_cells() {
            let parent = coarse.locate(self.centroid(c))?;
            for p in self.cell_points(c) {
                if coarse.barycentric(parent, p).iter().any(|&l| l < -1e-9) {
                    return None;
                }
            }
            parents.push(parent);
        }
        Some(parents)
    }

    pub fn is_nested_in(&self, coarse: &TriMesh) -> bool {
        self.parents_in(coarse).is_some()
    }

    /// Serialize in the whitespace-delimited `nv nc / x y / i j k` format.
    pub fn to_mesh_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.n_vertices(), self.n_cells());
        for p in &self.vertices {
            let _ = writeln!(s, "{:e} {:e}", p[0], p[1]);
        }
        for c in &self.cells {
            let _ = writeln!(s, "{} {} {}", c[0], c[1], c[2]);
        }
        s
    }
}

/// Structured triangulation of a rectangle: `nx × ny` quads, each split
/// along its lower-left to upper-right diagonal.
pub fn build_rect_mesh(nx: usize, ny: usize, lower: Point, upper: Point) -> Result<TriMesh, MeshError> {
    if nx == 0 || ny == 0 {
        return Err(MeshError::InvalidParameters(format!(
            "nx and ny must be positive, got {nx} x {ny}"
        )));
    }
    let (x0, y0, x1, y1) = (lower[0], lower[1], upper[0], upper[1]);
    if !(x1 > x0 && y1 > y0) || ![x0, y0, x1, y1].iter().all(|v| v.is_finite()) {
        return Err(MeshError::DegenerateRectangle { x0, y0, x1, y1 });
    }
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        // interpolate from both ends so the far edge is hit exactly
        let y = if j == ny { y1 } else { y0 + (y1 - y0) * j as f64 / ny as f64 };
        for i in 0..=nx {
            let x = if i == nx { x1 } else { x0 + (x1 - x0) * i as f64 / nx as f64 };
            vertices.push([x, y]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10, v11, v01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            cells.push([v00, v10, v11]);
            cells.push([v00, v11, v01]);
        }
    }
    TriMesh::new(vertices, cells)
}

/// Polar structured triangulation of the unit disk: ring `k` (radius
/// `k / n_rings`) carries `k * n_sectors` equally spaced vertices, and
/// consecutive rings are stitched by merging their vertices by angle.
pub fn build_disk_mesh(n_rings: usize, n_sectors: usize) -> Result<TriMesh, MeshError> {
    if n_rings == 0 || n_sectors < 3 {
        return Err(MeshError::InvalidParameters(format!(
            "need n_rings >= 1 and n_sectors >= 3, got {n_rings} and {n_sectors}"
        )));
    }
    let mut vertices = vec![[0.0, 0.0]];
    let mut ring_start = vec![0usize];
    for k in 1..=n_rings {
        ring_start.push(vertices.len());
        let r = k as f64 / n_rings as f64;
        let m = k * n_sectors;
        for j in 0..m {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
            vertices.push([r * theta.cos(), r * theta.sin()]);
        }
    }
    let mut cells = Vec::with_capacity(n_sectors * n_rings * n_rings);
    for j in 0..n_sectors {
        cells.push([0, 1 + j, 1 + (j + 1) % n_sectors]);
    }
    for k in 2..=n_rings {
        let (a, b) = ((k - 1) * n_sectors, k * n_sectors);
        let inner = |i: usize| ring_start[k - 1] + i % a;
        let outer = |j: usize| ring_start[k] + j % b;
        let (mut i, mut j) = (0usize, 0usize);
        while i < a || j < b {
            // advance whichever ring has the smaller next angle:
            // (j+1)/b versus (i+1)/a, compared exactly in integers
            let advance_outer = i == a || (j < b && (j + 1) * a <= (i + 1) * b);
            if advance_outer {
                cells.push([inner(i), outer(j), outer(j + 1)]);
                j += 1;
            } else {
                cells.push([inner(i), outer(j), inner(i + 1)]);
                i += 1;
            }
        }
    }
    TriMesh::new(vertices, cells)
}

/// Parse a mesh from the text format: a header `nv nc`, then `nv` lines
/// `x y`, then `nc` lines `i j k` (0-based). `#` starts a comment.
pub fn parse_mesh(text: &str) -> Result<TriMesh, MeshError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    fn fields<T: std::str::FromStr>(line: usize, s: &str, expect: usize) -> Result<Vec<T>, MeshError> {
        let toks: Vec<&str> = s.split_whitespace().collect();
        if toks.len() != expect {
            return Err(MeshError::Parse {
                line,
                msg: format!("expected {expect} fields, found {}", toks.len()),
            });
        }
        toks.iter()
            .map(|t| {
                t.parse::<T>().map_err(|_| MeshError::Parse {
                    line,
                    msg: format!("cannot parse '{t}'"),
                })
            })
            .collect()
    }

    let (hl, header) = lines.next().ok_or(MeshError::Parse {
        line: 1,
        msg: "empty mesh file".into(),
    })?;
    let counts: Vec<usize> = fields(hl, header, 2)?;
    let (nv, nc) = (counts[0], counts[1]);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, l) = lines.next().ok_or(MeshError::Parse {
            line: hl,
            msg: format!("expected {nv} vertices"),
        })?;
        let xy: Vec<f64> = fields(n, l, 2)?;
        if !xy.iter().all(|v| v.is_finite()) {
            return Err(MeshError::Parse {
                line: n,
                msg: "non-finite coordinate".into(),
            });
        }
        vertices.push([xy[0], xy[1]]);
    }
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (n, l) = lines.next().ok_or(MeshError::Parse {
            line: hl,
            msg: format!("expected {nc} cells"),
        })?;
        let ijk: Vec<usize> = fields(n, l, 3)?;
        cells.push([ijk[0], ijk[1], ijk[2]]);
    }
    if let Some((n, _)) = lines.next() {
        return Err(MeshError::Parse {
            line: n,
            msg: "trailing data after cells".into(),
        });
    }
    TriMesh::new(vertices, cells)
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<TriMesh, MeshError> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

pub fn write_mesh(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    std::fs::write(path, mesh.to_mesh_string())?;
    Ok(())
}

/// Uniform bucket grid over a bounding box.
#[derive(Clone, Debug)]
struct Grid {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
}

impl Grid {
    fn new(points: impl Iterator<Item = Point>, target: usize, spacing_hint: f64) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in points {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE);
        let by_count = span / (target.max(1) as f64).sqrt();
        let cell = spacing_hint.max(by_count).max(span * 1e-6);
        let nx = (((hi[0] - lo[0]) / cell).floor() as usize + 1).max(1);
        let ny = (((hi[1] - lo[1]) / cell).floor() as usize + 1).max(1);
        Self { origin: lo, cell, nx, ny }
    }

    fn index(&self, p: Point) -> (usize, usize) {
        let fx = ((p[0] - self.origin[0]) / self.cell).floor();
        let fy = ((p[1] - self.origin[1]) / self.cell).floor();
        (
            (fx.max(0.0) as usize).min(self.nx - 1),
            (fy.max(0.0) as usize).min(self.ny - 1),
        )
    }

    fn range(&self, lo: Point, hi: Point) -> impl Iterator<Item = usize> + '_ {
        let (i0, j0) = self.index(lo);
        let (i1, j1) = self.index(hi);
        (j0..=j1).flat_map(move |j| (i0..=i1).map(move |i| j * self.nx + i))
    }
}

struct PointGrid {
    grid: Grid,
    buckets: Vec<Vec<usize>>,
}

impl PointGrid {
    fn new(points: &[Point], h: f64) -> Self {
        let grid = Grid::new(points.iter().copied(), points.len(), h);
        let mut buckets = vec![Vec::new(); grid.nx * grid.ny];
        for (v, &p) in points.iter().enumerate() {
            let (i, j) = grid.index(p);
            buckets[j * grid.nx + i].push(v);
        }
        Self { grid, buckets }
    }

    fn candidates(&self, a: Point, b: Point) -> impl Iterator<Item = usize> + '_ {
        let lo = [a[0].min(b[0]), a[1].min(b[1])];
        let hi = [a[0].max(b[0]), a[1].max(b[1])];
        self.grid
            .range(lo, hi)
            .flat_map(move |k| self.buckets[k].iter().copied())
    }
}

/// Bucket grid over cell bounding boxes for point location.
#[derive(Clone, Debug)]
struct CellLocator {
    grid: Grid,
    buckets: Vec<Vec<usize>>,
}

impl CellLocator {
    fn new(mesh: &TriMesh) -> Self {
        let grid = Grid::new(mesh.vertices.iter().copied(), mesh.n_cells(), mesh.h);
        let mut buckets = vec![Vec::new(); grid.nx * grid.ny];
        for c in 0..mesh.n_cells() {
            let pts = mesh.cell_points(c);
            let lo = [
                pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min),
                pts.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min),
            ];
            let hi = [
                pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max),
                pts.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max),
            ];
            for k in grid.range(lo, hi) {
                buckets[k].push(c);
            }
        }
        Self { grid, buckets }
    }

    fn locate(&self, mesh: &TriMesh, p: Point, tol: f64) -> Option<usize> {
        let (i, j) = self.grid.index(p);
        // best candidate = largest minimum barycentric coordinate
        let mut best: Option<(usize, f64)> = None;
        for &c in &self.buckets[j * self.grid.nx + i] {
            let lam = mesh.barycentric(c, p);
            let worst = lam[0].min(lam[1]).min(lam[2]);
            if worst >= -tol && best.is_none_or(|(_, w)| worst > w) {
                best = Some((c, worst));
            }
        }
        best.map(|(c, _)| c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square(n: usize) -> TriMesh {
        build_rect_mesh(n, n, [0.0, 0.0], [1.0, 1.0]).unwrap()
    }

    fn check_invariants(m: &TriMesh) {
        assert!(m.cell_areas().iter().all(|&a| a > 0.0));
        for e in m.interior_edges() {
            let (ck, cl) = (m.centroid(e.k), m.centroid(e.l));
            let s = e.normal[0] * (cl[0] - ck[0]) + e.normal[1] * (cl[1] - ck[1]);
            assert!(s > 0.0, "edge normal must point from K into L");
            assert!(e.k < e.l);
        }
        // closed polygon: sum of |e| n_K over the cell boundary vanishes
        let mut acc = vec![[0.0f64; 2]; m.n_cells()];
        for e in m.interior_edges() {
            for d in 0..2 {
                acc[e.k][d] += e.length * e.normal[d];
                acc[e.l][d] -= e.length * e.normal[d];
            }
        }
        for e in m.boundary_edges() {
            for d in 0..2 {
                acc[e.k][d] += e.length * e.normal[d];
            }
        }
        for a in acc {
            assert!(a[0].abs() < 1e-12 && a[1].abs() < 1e-12, "{a:?}");
        }
        // Euler characteristic of a simply connected triangulation
        let euler = m.n_vertices() as i64 - m.n_edges() as i64 + m.n_cells() as i64;
        assert_eq!(euler, 1);
    }

    #[test]
    fn single_quad_split() {
        let m = unit_square(1);
        assert_eq!(m.n_cells(), 2);
        assert_eq!(m.interior_edges().len(), 1);
        assert_eq!(m.boundary_edges().len(), 4);
        assert!((m.total_area() - 1.0).abs() < 1e-15);
        check_invariants(&m);
    }

    #[test]
    fn rect_counts_and_h() {
        let m = unit_square(2);
        assert_eq!(m.n_cells(), 8);
        assert!((m.total_area() - 1.0).abs() < 1e-14);
        let m = unit_square(50);
        assert!((m.h() - 2.8284e-2).abs() < 1e-6);
        assert!((m.total_area() - 1.0).abs() < 1e-12);
        check_invariants(&m);
        let r = build_rect_mesh(3, 5, [-1.0, 2.0], [2.0, 2.5]).unwrap();
        assert!((r.total_area() - 1.5).abs() < 1e-13);
        check_invariants(&r);
    }

    #[test]
    fn degenerate_rectangle_rejected() {
        assert!(matches!(
            build_rect_mesh(2, 2, [0.0, 0.0], [0.0, 1.0]),
            Err(MeshError::DegenerateRectangle { .. })
        ));
        assert!(build_rect_mesh(0, 2, [0.0, 0.0], [1.0, 1.0]).is_err());
    }

    #[test]
    fn rect_refinement_is_nested() {
        let coarse = unit_square(3);
        let fine = unit_square(6);
        let parents = fine.parents_in(&coarse).expect("nested");
        assert_eq!(parents.len(), 72);
        // every coarse cell has exactly four children
        let mut count = vec![0; coarse.n_cells()];
        parents.iter().for_each(|&p| count[p] += 1);
        assert!(count.iter().all(|&c| c == 4));
        assert!(!unit_square(4).is_nested_in(&coarse));
    }

    #[test]
    fn red_refinement_reproduces_structured_mesh_geometry() {
        let red = unit_square(2).refine_uniform();
        let fine = unit_square(4);
        assert_eq!(red.n_cells(), fine.n_cells());
        assert!((red.h() - fine.h()).abs() < 1e-15);
        assert!(red.is_nested_in(&fine) && fine.is_nested_in(&red));
        check_invariants(&red);
    }

    #[test]
    fn disk_fan() {
        let m = build_disk_mesh(1, 3).unwrap();
        assert_eq!(m.n_cells(), 3);
        assert_eq!(m.n_vertices(), 4);
        assert!(m.cells().iter().all(|c| c.contains(&0)));
        check_invariants(&m);
    }

    #[test]
    fn disk_boundary_normals_point_outward() {
        let m = build_disk_mesh(6, 6).unwrap();
        assert_eq!(m.n_cells(), 6 * 36);
        check_invariants(&m);
        assert_eq!(m.boundary_edges().len(), 36);
        for e in m.boundary_edges() {
            assert!(e.k < m.n_cells());
            let p = m.vertices()[e.vertices[0]];
            let q = m.vertices()[e.vertices[1]];
            let mid = [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0];
            assert!(e.normal[0] * mid[0] + e.normal[1] * mid[1] > 0.0);
        }
    }

    #[test]
    fn disk_area_converges_quadratically() {
        let pi = std::f64::consts::PI;
        let e1 = pi - build_disk_mesh(8, 6).unwrap().total_area();
        let e2 = pi - build_disk_mesh(16, 6).unwrap().total_area();
        // inscribed polygon with 6n sides: pi - (3n) sin(2 pi / 6n) ~ C / n^2
        assert!(e1 > 0.0 && e2 > 0.0);
        let rate = (e1 / e2).log2();
        assert!((rate - 2.0).abs() < 0.05, "rate {rate}");
    }

    #[test]
    fn parse_two_triangle_square() {
        let text = "# unit square\n4 2\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\n";
        let m = parse_mesh(text).unwrap();
        let r = unit_square(1);
        assert_eq!(m.n_cells(), r.n_cells());
        assert_eq!(m.interior_edges().len(), r.interior_edges().len());
        assert_eq!(m.boundary_edges().len(), r.boundary_edges().len());
    }

    #[test]
    fn parse_rejects_repeated_triangle() {
        let text = "4 3\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\n2 1 0\n";
        let err = parse_mesh(text).unwrap_err();
        assert!(err.to_string().contains("non-conforming"), "{err}");
    }

    #[test]
    fn parse_reorients_clockwise_cell() {
        let text = "3 1\n0 0\n0 1\n1 0\n0 1 2\n";
        let m = parse_mesh(text).unwrap();
        assert!((m.cell_areas()[0] - 0.5).abs() < 1e-15);
        let [a, b, c] = m.cell_points(0);
        assert!(signed_area(a, b, c) > 0.0);
    }

    #[test]
    fn parse_rejects_hanging_node_and_zero_area() {
        // vertex 4 sits in the middle of edge (0,1) of the big triangle
        let hanging = "5 3\n0 0\n2 0\n0 2\n2 2\n1 0\n0 1 2\n4 1 3\n0 4 3\n";
        assert!(matches!(parse_mesh(hanging), Err(MeshError::NonConforming(_))));
        let flat = "3 1\n0 0\n1 0\n2 0\n0 1 2\n";
        assert!(matches!(parse_mesh(flat), Err(MeshError::ZeroArea(0))));
        assert!(matches!(parse_mesh("2 1\n0 0\n1 x\n"), Err(MeshError::Parse { line: 3, .. })));
    }

    #[test]
    fn round_trip_through_text() {
        let m = build_disk_mesh(3, 5).unwrap();
        let back = parse_mesh(&m.to_mesh_string()).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.cells(), m.cells());
    }

    #[test]
    fn locate_points() {
        let m = unit_square(4);
        for c in 0..m.n_cells() {
            assert_eq!(m.locate(m.centroid(c)), Some(c));
        }
        assert!(m.locate([1.0, 1.0]).is_some());
        assert!(m.locate([1.0 + 1e-6, 0.5]).is_none());
    }
}
