//! Self-convergence studies on nested meshes.
//!
//! Every test resolution is compared with the solution on the finest mesh
//! of the family. Nesting makes the comparison exact: each fine cell lies in
//! one coarse cell, so the P0 error is a sum over fine cells, and a coarse
//! P1 field is itself a fine P1 field (its values at the fine vertices).

use std::fmt::Write as _;

use super::HarnessError;
use crate::cch::{run_cch, CCHConfig, CCHState};
use crate::error::SolverError;
use crate::exec::Exec;
use crate::fespace::{p1_eval_at, p1_norms, P0Field};
use crate::mesh::{Point, TriMesh};
use crate::upwind::velocity_edge_flux;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelErrors {
    /// `‖u_h − u_ref‖_{L²}` of the P0 phase.
    pub l2_u: f64,
    /// `‖w_h − w_ref‖_{L²}` of the P1 regularization.
    pub l2_w: f64,
    /// Full `H¹` norm of `w_h − w_ref`.
    pub h1_w: f64,
}

/// Errors of a coarse solution against a solution on a nested finer mesh.
pub fn errors_against_reference(
    coarse: &TriMesh,
    coarse_state: &CCHState,
    fine: &TriMesh,
    fine_state: &CCHState,
) -> Result<LevelErrors, HarnessError> {
    let parents = fine
        .parents_in(coarse)
        .ok_or_else(|| HarnessError::Config("reference mesh is not nested in the test mesh".into()))?;
    let l2_u = parents
        .iter()
        .enumerate()
        .map(|(c, &p)| fine.cell_areas()[c] * (fine_state.u[c] - coarse_state.u[p]).powi(2))
        .sum::<f64>()
        .sqrt();
    let w_on_fine = p1_eval_at(coarse, &coarse_state.w, fine.vertices())?;
    let diff: Vec<f64> = fine_state.w.iter().zip(&w_on_fine).map(|(a, b)| a - b).collect();
    let n = p1_norms(fine, &diff);
    Ok(LevelErrors {
        l2_u,
        l2_w: n.l2,
        h1_w: n.h1().expect("P1 norms carry the seminorm"),
    })
}

/// `log(e_i/e_j) / log(h_i/h_j)`, undefined for equal resolutions or
/// vanishing errors.
pub fn order(e_i: f64, e_j: f64, h_i: f64, h_j: f64) -> Option<f64> {
    let ok = |x: f64| x > 0.0 && x.is_finite();
    if !(ok(e_i) && ok(e_j) && ok(h_i) && ok(h_j)) || h_i == h_j {
        return None;
    }
    Some((e_i / e_j).ln() / (h_i / h_j).ln())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub n_cells: usize,
    pub errors: LevelErrors,
    /// Orders against the previous (coarser) row; `None` on the first row.
    pub order_l2_u: Option<f64>,
    pub order_l2_w: Option<f64>,
    pub order_h1_w: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub reference_h: f64,
    pub reference_cells: usize,
}

impl ConvergenceTable {
    pub fn from_errors(levels: &[(f64, usize, LevelErrors)], reference_h: f64, reference_cells: usize) -> Self {
        let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels.len());
        for (i, &(h, n_cells, errors)) in levels.iter().enumerate() {
            let prev = i.checked_sub(1).map(|j| levels[j]);
            let ord = |f: fn(&LevelErrors) -> f64| prev.and_then(|(hp, _, ep)| order(f(&ep), f(&errors), hp, h));
            rows.push(ConvergenceRow {
                h,
                n_cells,
                errors,
                order_l2_u: ord(|e| e.l2_u),
                order_l2_w: ord(|e| e.l2_w),
                order_h1_w: ord(|e| e.h1_w),
            });
        }
        Self {
            rows,
            reference_h,
            reference_cells,
        }
    }

    pub fn to_csv(&self) -> String {
        let fmt = |o: Option<f64>| o.map_or(String::new(), |v| format!("{v:.4}"));
        let mut s = String::from("h,n_cells,l2_u,order_l2_u,l2_w,order_l2_w,h1_w,order_h1_w\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:.6e},{},{:.6e},{},{:.6e},{},{:.6e},{}",
                r.h,
                r.n_cells,
                r.errors.l2_u,
                fmt(r.order_l2_u),
                r.errors.l2_w,
                fmt(r.order_l2_w),
                r.errors.h1_w,
                fmt(r.order_h1_w)
            );
        }
        s
    }

    pub fn to_markdown(&self) -> String {
        let fmt = |o: Option<f64>| o.map_or("-".to_string(), |v| format!("{v:.2}"));
        let mut s = String::from("| h | cells | L2(u) | order | L2(w) | order | H1(w) | order |\n|---|---|---|---|---|---|---|---|\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "| {:.4e} | {} | {:.4e} | {} | {:.4e} | {} | {:.4e} | {} |",
                r.h,
                r.n_cells,
                r.errors.l2_u,
                fmt(r.order_l2_u),
                r.errors.l2_w,
                fmt(r.order_l2_w),
                r.errors.h1_w,
                fmt(r.order_h1_w)
            );
        }
        let _ = writeln!(s, "\nreference: h = {:.4e}, {} cells", self.reference_h, self.reference_cells);
        s
    }
}

/// `levels + 1` meshes: `base` and its successive red refinements, the last
/// one serving as the reference.
pub fn refinement_family(base: TriMesh, levels: usize) -> Vec<TriMesh> {
    let mut out = vec![base];
    for _ in 0..levels {
        let next = out.last().expect("non-empty").refine_uniform();
        out.push(next);
    }
    out
}

/// Run the coupled solver to `t_final` on every mesh of a nested family
/// (coarsest first, reference last) and tabulate errors and orders.
pub fn convergence_study(
    meshes: &[TriMesh],
    initial: impl Fn(&TriMesh) -> Result<P0Field, HarnessError> + Sync,
    velocity: impl Fn(Point) -> [f64; 2] + Sync,
    t_final: f64,
    cfg: &CCHConfig,
    exec: Exec,
) -> Result<ConvergenceTable, HarnessError> {
    if meshes.len() < 4 {
        return Err(HarnessError::Config(format!(
            "a convergence study needs at least 3 test meshes and a reference, got {} meshes",
            meshes.len()
        )));
    }
    for pair in meshes.windows(2) {
        if !pair[1].is_nested_in(&pair[0]) {
            return Err(HarnessError::Config("mesh family is not nested".into()));
        }
    }
    let states = exec.tasks(meshes.len(), |i| -> Result<CCHState, HarnessError> {
        let m = &meshes[i];
        let flux = velocity_edge_flux(m, &velocity);
        let u0 = initial(m)?;
        run_cch::<SolverError>(m, u0, &flux, t_final, cfg, exec, |_, _| Ok(())).map_err(|e| HarnessError::Level {
            level: i,
            cells: m.n_cells(),
            source: Box::new(e.into()),
        })
    });
    let states = states.into_iter().collect::<Result<Vec<_>, _>>()?;
    let (fine, fine_state) = (meshes.last().expect("checked length"), states.last().expect("checked length"));
    let levels = exec.tasks(meshes.len() - 1, |i| {
        errors_against_reference(&meshes[i], &states[i], fine, fine_state).map(|e| (meshes[i].h(), meshes[i].n_cells(), e))
    });
    let levels = levels.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(ConvergenceTable::from_errors(&levels, fine.h(), fine.n_cells()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fespace::{interpolate_p1, project_p0, P1Field};
    use crate::mesh::build_rect_mesh;

    fn state(u: P0Field, w: P1Field) -> CCHState {
        let nv = w.len();
        CCHState {
            u,
            mu: P1Field::zeros(nv),
            w,
            time: 0.0,
        }
    }

    #[test]
    fn identical_resolution_gives_zero_error_and_no_order() {
        let m = build_rect_mesh(4, 4, [0.0, 0.0], [1.0, 1.0]).unwrap();
        let s = state(project_p0(&m, |p| p[0]), interpolate_p1(&m, |p| p[1]));
        let e = errors_against_reference(&m, &s, &m, &s).unwrap();
        assert_eq!((e.l2_u, e.l2_w, e.h1_w), (0.0, 0.0, 0.0));
        assert_eq!(order(e.l2_u, e.l2_u, m.h(), m.h()), None);
        let t = ConvergenceTable::from_errors(&[(m.h(), 32, e), (m.h(), 32, e)], m.h(), 32);
        assert!(t.rows.iter().all(|r| r.order_l2_u.is_none()));
        assert!(t.to_csv().lines().nth(2).unwrap().contains(",,"));
    }

    #[test]
    fn exact_errors_of_known_fields() {
        // u = x projected on a coarse mesh against u = x projected on a fine one
        let coarse = build_rect_mesh(2, 2, [0.0, 0.0], [1.0, 1.0]).unwrap();
        let fine = coarse.refine_uniform().refine_uniform();
        let f = |p: Point| p[0] * p[0];
        let cs = state(project_p0(&coarse, f), interpolate_p1(&coarse, f));
        let fs = state(project_p0(&fine, f), interpolate_p1(&fine, f));
        let e = errors_against_reference(&coarse, &cs, &fine, &fs).unwrap();
        // oracle for the P0 part: subdivide each fine cell once more
        let finer = fine.refine_uniform();
        let pf = finer.parents_in(&fine).unwrap();
        let pc = finer.parents_in(&coarse).unwrap();
        let mut sum = 0.0;
        for c in 0..finer.n_cells() {
            sum += finer.cell_areas()[c] * (fs.u[pf[c]] - cs.u[pc[c]]).powi(2);
        }
        assert!((e.l2_u - sum.sqrt()).abs() < 1e-14);
        // P1 part: prolongation of a coarse P1 field is exact, so the error
        // of the quadratic interpolants is positive and ≤ its sup bound
        assert!(e.l2_w > 0.0 && e.l2_w < 0.25);
        assert!(e.h1_w > e.l2_w);
    }

    #[test]
    fn orders_are_scale_invariant() {
        let lv = [
            (0.1, 10, LevelErrors { l2_u: 4e-2, l2_w: 1e-2, h1_w: 0.5 }),
            (0.05, 40, LevelErrors { l2_u: 2e-2, l2_w: 2.5e-3, h1_w: 0.25 }),
        ];
        let t = ConvergenceTable::from_errors(&lv, 0.025, 160);
        let scaled: Vec<_> = lv.iter().map(|&(h, n, e)| (h * 7.3, n, e)).collect();
        let s = ConvergenceTable::from_errors(&scaled, 0.1, 160);
        for (a, b) in t.rows.iter().zip(&s.rows) {
            assert_eq!(a.order_l2_u.map(|v| (v * 1e12).round()), b.order_l2_u.map(|v| (v * 1e12).round()));
        }
        assert!((t.rows[1].order_l2_u.unwrap() - 1.0).abs() < 1e-12);
        assert!((t.rows[1].order_l2_w.unwrap() - 2.0).abs() < 1e-12);
        assert!(t.to_markdown().contains("| 2.00 |"));
    }

    #[test]
    fn rejects_short_or_non_nested_families() {
        let base = build_rect_mesh(2, 2, [0.0, 0.0], [1.0, 1.0]).unwrap();
        let fam = refinement_family(base.clone(), 2);
        let init = |m: &TriMesh| Ok(P0Field::zeros(m.n_cells()));
        let cfg = CCHConfig::default();
        assert!(convergence_study(&fam, init, |_| [0.0, 0.0], 0.0, &cfg, Exec::Sequential).is_err());
        let odd = vec![base.clone(), build_rect_mesh(3, 3, [0.0, 0.0], [1.0, 1.0]).unwrap(), base.clone(), base];
        assert!(convergence_study(&odd, init, |_| [0.0, 0.0], 0.0, &cfg, Exec::Sequential).is_err());
    }
}
