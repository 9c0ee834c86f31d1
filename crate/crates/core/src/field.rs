//! Two-dimensional assembly of the stream function over the flattened strip
//! and reconstruction of the physical velocity, pressure, and vorticity on
//! the curvilinear nozzle grid.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::NozzleGeometry;
use crate::lagrange::LagrangeSlice;
use crate::numerics::simpson_table;
use crate::profiles::VorticitySource;
use crate::slice::{picard_solve, shooting_solve, uniform_grid, SliceSolution};

/// Tolerances shared by the slice solvers.
#[derive(Debug, Clone, Copy)]
pub struct SolverTolerances {
    pub picard: f64,
    pub beta: f64,
    pub shooting: f64,
    pub picard_max_iter: usize,
}

impl Default for SolverTolerances {
    fn default() -> Self {
        Self {
            picard: 1e-12,
            beta: 1e-12,
            shooting: 1e-12,
            picard_max_iter: 20_000,
        }
    }
}

/// Which slice solver to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    Lagrange,
    Picard,
    Shooting,
}

/// Solves one slice with the requested method. The fixed-point route falls
/// back to shooting when it fails to converge.
pub fn solve_slice(
    alpha1: f64,
    src: &VorticitySource,
    ny2: usize,
    choice: SolverChoice,
    tols: &SolverTolerances,
) -> Result<SliceSolution> {
    match choice {
        SolverChoice::Lagrange => {
            LagrangeSlice::build(alpha1, src, tols.beta)?.invert_to_slice(src, 0.0, ny2)
        }
        SolverChoice::Picard => {
            match picard_solve(alpha1, src, ny2, None, tols.picard, tols.picard_max_iter) {
                Ok((sol, _)) => Ok(sol),
                Err(Error::NoConvergence { .. }) => {
                    Ok(shooting_solve(alpha1, src, ny2, tols.shooting)?.solution)
                }
                Err(e) => Err(e),
            }
        }
        SolverChoice::Shooting => Ok(shooting_solve(alpha1, src, ny2, tols.shooting)?.solution),
    }
}

/// Assembled stream function on the flattened strip.
#[derive(Debug, Clone)]
pub struct StreamFunctionField {
    /// Uniform abscissae on `[-X, X]`.
    pub y1_grid: Vec<f64>,
    /// Uniform vertical grid on `[0, 1]`.
    pub y2_grid: Vec<f64>,
    /// One slice per abscissa, always from the direct quadrature route.
    pub slices: Vec<SliceSolution>,
    /// Horizontal derivative `dphi/dy1` via the height-map identity.
    pub dphi_dy1: Vec<Vec<f64>>,
    /// Mixed derivative `d2phi/(dy1 dy2)`, used by the C^1 field sampler.
    pub dphi_dy1_dy2: Vec<Vec<f64>>,
    /// Global positive lower bound of `dphi/dy2` over the grid.
    pub gamma_bar: f64,
    pub c: f64,
    /// False when the incoming profile violated the endpoint sign condition;
    /// the stream-function bounds are then not certified.
    pub bounds_certified: bool,
}

/// Assembles the field with the direct quadrature route for every slice.
pub fn assemble(
    g: &NozzleGeometry,
    src: &VorticitySource,
    ny1: usize,
    ny2: usize,
    tols: &SolverTolerances,
) -> Result<StreamFunctionField> {
    assemble_with(g, src, ny1, ny2, tols, SolverChoice::Lagrange)
}

/// Assembles the field: one slice per `y1` node (computed in parallel) with
/// the requested solver, and `dphi/dy1 = -(dphi/dy2) * dPhi/dz1` from the
/// height-map sensitivity evaluated at the slice's own stream values.
pub fn assemble_with(
    g: &NozzleGeometry,
    src: &VorticitySource,
    ny1: usize,
    ny2: usize,
    tols: &SolverTolerances,
    choice: SolverChoice,
) -> Result<StreamFunctionField> {
    assert!(ny1 >= 2 && ny2 >= 50, "grid too coarse");
    let x = g.x_cutoff;
    let y1_grid: Vec<f64> = (0..=ny1)
        .map(|i| -x + 2.0 * x * i as f64 / ny1 as f64)
        .collect();

    let rows: Result<Vec<_>> = y1_grid
        .par_iter()
        .map(|&y1| -> Result<(SliceSolution, Vec<f64>, Vec<f64>)> {
            let alpha1 = g.alpha1(y1);
            let dalpha1 = g.dalpha1(y1);
            let ls = LagrangeSlice::build(alpha1, src, tols.beta)?;
            let mut sol = match choice {
                SolverChoice::Lagrange => ls.invert_to_slice(src, y1, ny2)?,
                other => solve_slice(alpha1, src, ny2, other, tols)?,
            };
            sol.y1 = y1;
            let mut dy1 = Vec::with_capacity(ny2 + 1);
            let mut cross = Vec::with_capacity(ny2 + 1);
            for j in 0..=ny2 {
                let z = sol.phi[j];
                let height_dz1 = ls.sensitivity_at(z) * dalpha1;
                let height_dz1_dz2 = ls.sensitivity_deriv_at(z) * dalpha1;
                dy1.push(-sol.dphi[j] * height_dz1);
                cross.push(-sol.d2phi[j] * height_dz1 - sol.dphi[j].powi(2) * height_dz1_dz2);
            }
            Ok((sol, dy1, cross))
        })
        .collect();
    let rows = rows?;

    let mut slices = Vec::with_capacity(ny1 + 1);
    let mut dphi_dy1 = Vec::with_capacity(ny1 + 1);
    let mut dphi_dy1_dy2 = Vec::with_capacity(ny1 + 1);
    let mut gamma_bar = f64::INFINITY;
    for (sol, dy1, cross) in rows {
        gamma_bar = gamma_bar.min(sol.min_dphi());
        slices.push(sol);
        dphi_dy1.push(dy1);
        dphi_dy1_dy2.push(cross);
    }

    Ok(StreamFunctionField {
        y1_grid,
        y2_grid: uniform_grid(ny2),
        slices,
        dphi_dy1,
        dphi_dy1_dy2,
        gamma_bar,
        c: src.c,
        bounds_certified: src.sign_condition_ok(),
    })
}

/// Physical-coordinate flow samples on the curvilinear grid.
#[derive(Debug, Clone)]
pub struct FlowField {
    /// Column abscissae (same as the flattened `y1` grid).
    pub x1: Vec<f64>,
    pub y2_grid: Vec<f64>,
    /// Physical heights per column and row.
    pub x2: Vec<Vec<f64>>,
    pub v1: Vec<Vec<f64>>,
    pub v2: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    pub omega: Vec<Vec<f64>>,
    pub phi: Vec<Vec<f64>>,
    pub mass_flux_per_column: Vec<f64>,
    pub c: f64,
    pub gamma_bar: f64,
}

/// Reconstructs velocity, pressure, and vorticity from the assembled field:
/// `v1 = (dphi/dy2)/s`, `v2 = -dphi/dy1 + ((s0' + y2 s') / s) dphi/dy2`,
/// `p = -v1^2/2 + F(phi)`, `omega = f(phi)`.
pub fn reconstruct(
    field: &StreamFunctionField,
    g: &NozzleGeometry,
    src: &VorticitySource,
) -> Result<FlowField> {
    let ny2 = field.y2_grid.len() - 1;
    let mut x2 = Vec::with_capacity(field.y1_grid.len());
    let mut v1 = Vec::with_capacity(field.y1_grid.len());
    let mut v2 = Vec::with_capacity(field.y1_grid.len());
    let mut p = Vec::with_capacity(field.y1_grid.len());
    let mut omega = Vec::with_capacity(field.y1_grid.len());
    let mut phi = Vec::with_capacity(field.y1_grid.len());
    let mut flux = Vec::with_capacity(field.y1_grid.len());
    let mut min_v1 = f64::INFINITY;

    for (i, &y1) in field.y1_grid.iter().enumerate() {
        let s0 = g.s0(y1);
        let s1 = g.s1(y1);
        let s = s1 - s0;
        let ds0 = g.ds0(y1);
        let ds = g.ds1(y1) - ds0;
        let sol = &field.slices[i];
        let mut cx2 = Vec::with_capacity(ny2 + 1);
        let mut cv1 = Vec::with_capacity(ny2 + 1);
        let mut cv2 = Vec::with_capacity(ny2 + 1);
        let mut cp = Vec::with_capacity(ny2 + 1);
        let mut cw = Vec::with_capacity(ny2 + 1);
        let mut cphi = Vec::with_capacity(ny2 + 1);
        for (j, &y2) in field.y2_grid.iter().enumerate() {
            let vel1 = sol.dphi[j] / s;
            let vel2 = -field.dphi_dy1[i][j] + (ds0 + y2 * ds) / s * sol.dphi[j];
            min_v1 = min_v1.min(vel1);
            cx2.push((1.0 - y2) * s0 + y2 * s1);
            cv1.push(vel1);
            cv2.push(vel2);
            cp.push(-0.5 * vel1 * vel1 + src.pressure_primitive(sol.phi[j]));
            cw.push(src.fhat(sol.phi[j]));
            cphi.push(sol.phi[j]);
        }
        flux.push(simpson_table(&cv1, s / ny2 as f64));
        x2.push(cx2);
        v1.push(cv1);
        v2.push(cv2);
        p.push(cp);
        omega.push(cw);
        phi.push(cphi);
    }

    if min_v1 <= 0.0 {
        return Err(Error::NonPositiveV1 { min_v1 });
    }

    Ok(FlowField {
        x1: field.y1_grid.clone(),
        y2_grid: field.y2_grid.clone(),
        x2,
        v1,
        v2,
        p,
        omega,
        phi,
        mass_flux_per_column: flux,
        c: field.c,
        gamma_bar: field.gamma_bar,
    })
}

/// Mass flux through one column, by Simpson over the column's height extent.
pub fn mass_flux_at(flow: &FlowField, column: usize) -> f64 {
    let ny2 = flow.y2_grid.len() - 1;
    let span = flow.x2[column][ny2] - flow.x2[column][0];
    simpson_table(&flow.v1[column], span / ny2 as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::IncomingProfile;

    fn quartic_source() -> VorticitySource {
        let p = IncomingProfile::quartic_bump(0.2).unwrap();
        VorticitySource::from_profile(&p).unwrap()
    }

    #[test]
    fn strip_with_constant_profile_is_uniform_flow() {
        let g = NozzleGeometry::strip(10.0).unwrap();
        let p = IncomingProfile::constant().unwrap();
        let src = VorticitySource::from_profile(&p).unwrap();
        let field = assemble(&g, &src, 20, 60, &SolverTolerances::default()).unwrap();
        let flow = reconstruct(&field, &g, &src).unwrap();
        for i in 0..flow.x1.len() {
            for j in 0..flow.y2_grid.len() {
                assert!((flow.v1[i][j] - 1.0).abs() < 1e-11);
                assert!(flow.v2[i][j].abs() < 1e-14);
                assert!((flow.p[i][j] + 0.5).abs() < 1e-11);
            }
            assert!((mass_flux_at(&flow, i) - 1.0).abs() < 1e-11);
        }
        assert!((flow.gamma_bar - 1.0).abs() < 1e-11);
    }

    #[test]
    fn strip_slices_are_identical_across_abscissae() {
        let g = NozzleGeometry::strip(10.0).unwrap();
        let src = quartic_source();
        let field = assemble(&g, &src, 16, 60, &SolverTolerances::default()).unwrap();
        let reference = &field.slices[0];
        for sol in &field.slices[1..] {
            for j in 0..=60 {
                assert_eq!(sol.phi[j], reference.phi[j]);
                assert_eq!(sol.dphi[j], reference.dphi[j]);
            }
        }
        for row in &field.dphi_dy1 {
            assert!(row.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn zero_vorticity_in_tanh_nozzle_is_pure_widening() {
        let g = NozzleGeometry::tanh_transition(0.0, 2.0, 1.0, 15.0).unwrap();
        let p = IncomingProfile::constant().unwrap();
        let src = VorticitySource::from_profile(&p).unwrap();
        let field = assemble(&g, &src, 30, 60, &SolverTolerances::default()).unwrap();
        let flow = reconstruct(&field, &g, &src).unwrap();
        for (i, &x1) in flow.x1.iter().enumerate() {
            let s = g.width(x1);
            for j in 0..flow.y2_grid.len() {
                assert!(
                    (flow.v1[i][j] - 1.0 / s).abs() < 1e-10,
                    "v1 != c/s at column {i}"
                );
            }
            // phi stays linear: dphi/dy1 vanishes even though walls move
            assert!(field.dphi_dy1[i].iter().all(|&v| v.abs() < 1e-15));
        }
        // downstream v1 -> c / 2
        let last = flow.v1.last().unwrap();
        assert!((last[30] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn horizontal_derivative_matches_differenced_slices() {
        let g = NozzleGeometry::compact_bump(0.0, 1.3, 3.0, -0.05, 0.1, 8.0).unwrap();
        let src = quartic_source();
        let tols = SolverTolerances::default();
        let field = assemble(&g, &src, 40, 80, &tols).unwrap();

        let delta = 1e-3;
        let mut worst = 0.0f64;
        for &i in &[10, 20, 25] {
            let y1 = field.y1_grid[i];
            let mk = |x: f64| -> SliceSolution {
                LagrangeSlice::build(g.alpha1(x), &src, tols.beta)
                    .unwrap()
                    .invert_to_slice(&src, x, 80)
                    .unwrap()
            };
            let plus = mk(y1 + delta);
            let minus = mk(y1 - delta);
            for j in 0..=80 {
                let fd = (plus.phi[j] - minus.phi[j]) / (2.0 * delta);
                worst = worst.max((field.dphi_dy1[i][j] - fd).abs());
            }
        }
        assert!(worst <= 1e-5, "dphi/dy1 mismatch {worst}");
    }

    #[test]
    fn flux_is_constant_across_columns() {
        let g = NozzleGeometry::compact_bump(0.0, 1.4, 4.0, -0.1, 0.15, 10.0).unwrap();
        let src = quartic_source();
        let field = assemble(&g, &src, 50, 200, &SolverTolerances::default()).unwrap();
        let flow = reconstruct(&field, &g, &src).unwrap();
        for i in 0..flow.x1.len() {
            let rel = (flow.mass_flux_per_column[i] - flow.c).abs() / flow.c;
            assert!(rel <= 1e-8, "flux deviation {rel:.3e} at column {i}");
        }
    }

    #[test]
    fn pressure_is_constant_along_each_column() {
        let g = NozzleGeometry::tanh_transition(0.1, 1.6, 1.0, 12.0).unwrap();
        let src = quartic_source();
        let field = assemble(&g, &src, 40, 120, &SolverTolerances::default()).unwrap();
        let flow = reconstruct(&field, &g, &src).unwrap();
        for i in 0..flow.x1.len() {
            let p0 = flow.p[i][0];
            for j in 0..flow.y2_grid.len() {
                assert!(
                    (flow.p[i][j] - p0).abs() <= 1e-10 * (1.0 + p0.abs()),
                    "pressure varies along column {i}"
                );
            }
        }
    }

    #[test]
    fn corrupted_slice_shows_up_in_the_flux() {
        let g = NozzleGeometry::strip(5.0).unwrap();
        let src = quartic_source();
        let field = assemble(&g, &src, 10, 60, &SolverTolerances::default()).unwrap();
        let mut flow = reconstruct(&field, &g, &src).unwrap();
        for v in flow.v1[3].iter_mut() {
            *v *= 1.01;
        }
        let flux = mass_flux_at(&flow, 3);
        assert!((flux - flow.c).abs() / flow.c > 1e-3);
    }

    #[test]
    fn non_positive_velocity_is_rejected() {
        let g = NozzleGeometry::strip(5.0).unwrap();
        let src = quartic_source();
        let mut field = assemble(&g, &src, 10, 60, &SolverTolerances::default()).unwrap();
        field.slices[2].dphi[10] = -0.1;
        assert!(matches!(
            reconstruct(&field, &g, &src),
            Err(Error::NonPositiveV1 { .. })
        ));
    }

    #[test]
    fn sign_violated_profile_still_solves_without_certification() {
        // decreasing profile: f(c) < 0, so the stream-function bounds are
        // not guaranteed; the extended solver must still produce a flow
        let p = crate::profiles::IncomingProfile::from_closures(
            std::sync::Arc::new(|x| 1.0 - 0.1 * x),
            std::sync::Arc::new(|_| -0.1),
            Some(std::sync::Arc::new(|_| 0.0)),
        )
        .unwrap();
        assert!(!p.sign_condition_ok);
        let src = VorticitySource::from_profile(&p).unwrap();
        let g = NozzleGeometry::strip(5.0).unwrap();
        let field = assemble(&g, &src, 10, 60, &SolverTolerances::default()).unwrap();
        assert!(!field.bounds_certified);
        let flow = reconstruct(&field, &g, &src).unwrap();
        assert!(flow.gamma_bar > 0.0);
        for i in 0..flow.x1.len() {
            assert!((mass_flux_at(&flow, i) - flow.c).abs() <= 1e-8 * flow.c);
        }
    }

    #[test]
    fn slanted_downstream_velocity_aligns_with_the_walls() {
        let g = NozzleGeometry::slanted(0.0, 1.0, 1.0, 12.0).unwrap();
        let p = IncomingProfile::constant().unwrap();
        let src = VorticitySource::from_profile(&p).unwrap();
        let field = assemble(&g, &src, 60, 60, &SolverTolerances::default()).unwrap();
        let flow = reconstruct(&field, &g, &src).unwrap();
        // at the downstream boundary the flow follows the wall slope
        let i = flow.x1.len() - 1;
        for j in 0..flow.y2_grid.len() {
            let ratio = flow.v2[i][j] / flow.v1[i][j];
            assert!(
                (ratio - 1.0).abs() < 1e-8,
                "v2/v1 = {ratio} should approach the wall slope"
            );
        }
    }

    #[test]
    fn picard_choice_falls_back_to_shooting_when_starved() {
        let src = quartic_source();
        let tols = SolverTolerances {
            picard_max_iter: 1,
            ..Default::default()
        };
        // one iteration cannot converge; the fallback must still produce a slice
        let sol = solve_slice(1.0, &src, 60, SolverChoice::Picard, &tols).unwrap();
        assert_eq!(sol.method, crate::slice::SliceMethod::Shooting);
    }
}
