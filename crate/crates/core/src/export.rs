//! Plot-ready artifact writers: CSV tables and JSON summaries.
//!
//! All numbers are written with 17 significant digits and fixed row order,
//! so identical inputs produce byte-identical artifacts.

use std::io::{self, Write};

use serde::Serialize;

use crate::analysis::{DecayTable, ResidualNorms, ShearReport};
use crate::field::FlowField;
use crate::kinematics::PathTrace;
use crate::slice::SliceSolution;

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Field table: one row per grid node, columns
/// `x1,x2,y2,phi,v1,v2,p,omega`.
pub fn write_field_csv<W: Write>(flow: &FlowField, w: &mut W) -> io::Result<()> {
    writeln!(w, "x1,x2,y2,phi,v1,v2,p,omega")?;
    for i in 0..flow.x1.len() {
        for j in 0..flow.y2_grid.len() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                num(flow.x1[i]),
                num(flow.x2[i][j]),
                num(flow.y2_grid[j]),
                num(flow.phi[i][j]),
                num(flow.v1[i][j]),
                num(flow.v2[i][j]),
                num(flow.p[i][j]),
                num(flow.omega[i][j]),
            )?;
        }
    }
    Ok(())
}

/// Slice table: `y2,phi,dphi,d2phi`.
pub fn write_slice_csv<W: Write>(slice: &SliceSolution, w: &mut W) -> io::Result<()> {
    writeln!(w, "y2,phi,dphi,d2phi")?;
    for j in 0..slice.grid.len() {
        writeln!(
            w,
            "{},{},{},{}",
            num(slice.grid[j]),
            num(slice.phi[j]),
            num(slice.dphi[j]),
            num(slice.d2phi[j]),
        )?;
    }
    Ok(())
}

/// Path table: `t,x1,x2,phi,omega`.
pub fn write_trace_csv<W: Write>(trace: &PathTrace, w: &mut W) -> io::Result<()> {
    writeln!(w, "t,x1,x2,phi,omega")?;
    for (k, &(t, x1, x2)) in trace.points.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{}",
            num(t),
            num(x1),
            num(x2),
            num(trace.phi_along[k]),
            num(trace.omega_along[k]),
        )?;
    }
    Ok(())
}

/// Far-field profile table: `height,v1,v2,phi`.
pub fn write_farfield_csv<W: Write>(
    state: &crate::analysis::FarFieldState,
    w: &mut W,
) -> io::Result<()> {
    writeln!(w, "height,v1,v2,phi")?;
    let (lo, hi) = state.interval;
    for (j, &y) in state.y2_grid.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{}",
            num(lo + y * (hi - lo)),
            num(state.v1[j]),
            num(state.v2[j]),
            num(state.phi[j]),
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FluxSummary {
    pub min: f64,
    pub max: f64,
    pub max_rel_deviation: f64,
}

impl FluxSummary {
    pub fn from_flow(flow: &FlowField) -> Self {
        let min = flow
            .mass_flux_per_column
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let max = flow
            .mass_flux_per_column
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let dev = (max - flow.c).abs().max((min - flow.c).abs()) / flow.c.abs().max(1e-300);
        Self {
            min,
            max,
            max_rel_deviation: dev,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FarFieldErrors {
    pub upstream_err: f64,
    pub downstream_err: f64,
}

impl FarFieldErrors {
    pub fn from_table(table: &DecayTable) -> Self {
        Self {
            upstream_err: table.upstream_end_err,
            downstream_err: table.downstream_end_err,
        }
    }
}

/// Solve summary serialized to `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct FlowSummary {
    pub c: f64,
    pub gamma_bar: f64,
    pub flux: FluxSummary,
    pub residuals: ResidualNorms,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shear: Option<ShearReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub farfield: Option<FarFieldErrors>,
    pub bounds_certified: bool,
}

/// Pretty JSON with a trailing newline; serde's f64 output is the shortest
/// round-trip representation, stable across runs.
pub fn write_json_pretty<T: Serialize, W: Write>(value: &T, w: &mut W) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{assemble, reconstruct, SolverTolerances};
    use crate::geometry::NozzleGeometry;
    use crate::profiles::{IncomingProfile, VorticitySource};

    #[test]
    fn field_csv_is_deterministic() {
        let g = NozzleGeometry::tanh_transition(0.0, 1.5, 1.0, 8.0).unwrap();
        let p = IncomingProfile::quartic_bump(0.2).unwrap();
        let src = VorticitySource::from_profile(&p).unwrap();
        let mk = || {
            let field = assemble(&g, &src, 12, 60, &SolverTolerances::default()).unwrap();
            let flow = reconstruct(&field, &g, &src).unwrap();
            let mut buf = Vec::new();
            write_field_csv(&flow, &mut buf).unwrap();
            buf
        };
        assert_eq!(mk(), mk());
    }

    #[test]
    fn csv_numbers_carry_17_significant_digits() {
        assert_eq!(super::num(1.0), "1.0000000000000000e0");
        assert_eq!(super::num(-0.1), "-1.0000000000000001e-1");
    }
}
