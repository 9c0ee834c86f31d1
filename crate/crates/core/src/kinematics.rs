//! Streamline tracing and the gradient-flow curve.
//!
//! Paths are integrated with fixed-step RK4 through a continuously sampled
//! flow. The solver-produced field is sampled with a C^1 bicubic Hermite
//! patch built from the stream function and its derivative tables; the
//! velocity is the exact mapped gradient of that same patch, so the sampled
//! stream function is a first integral of the sampled velocity field and the
//! recorded drift measures integrator error alone. Wall rows of the patch
//! are constant (0 and c), which keeps the velocity exactly wall-tangent.

use crate::error::{Error, Result};
use crate::field::StreamFunctionField;
use crate::geometry::NozzleGeometry;
use crate::numerics::{rk4_step, BicubicHermite};
use crate::profiles::VorticitySource;

/// A flow that can be sampled continuously for path tracing.
pub trait SampledFlow: Sync {
    /// Velocity `(v1, v2)` at a physical point.
    fn velocity(&self, x1: f64, x2: f64) -> (f64, f64);
    /// Stream function at a physical point.
    fn stream_function(&self, x1: f64, x2: f64) -> f64;
    /// Vorticity at a physical point.
    fn vorticity(&self, x1: f64, x2: f64) -> f64;
    /// Relative height in the cross-section: 0 on the bottom wall, 1 on top.
    fn relative_height(&self, x1: f64, x2: f64) -> f64;
    fn x1_range(&self) -> (f64, f64);

    /// Physical gradient of the stream function, `(-v2, v1)`.
    fn grad_phi(&self, x1: f64, x2: f64) -> (f64, f64) {
        let (v1, v2) = self.velocity(x1, x2);
        (-v2, v1)
    }

    fn contains(&self, x1: f64, x2: f64) -> bool {
        let (lo, hi) = self.x1_range();
        let eta = self.relative_height(x1, x2);
        x1 >= lo && x1 <= hi && (0.0..=1.0).contains(&eta)
    }
}

/// C^1 sampler over a solved field.
pub struct FieldSampler<'a> {
    patch: BicubicHermite,
    geom: &'a NozzleGeometry,
    src: &'a VorticitySource,
    x_range: (f64, f64),
}

impl<'a> FieldSampler<'a> {
    pub fn new(
        field: &StreamFunctionField,
        geom: &'a NozzleGeometry,
        src: &'a VorticitySource,
    ) -> Self {
        let nx = field.y1_grid.len();
        let ny = field.y2_grid.len();
        let mut u = vec![vec![0.0; ny]; nx];
        let mut ux = vec![vec![0.0; ny]; nx];
        let mut uy = vec![vec![0.0; ny]; nx];
        let mut uxy = vec![vec![0.0; ny]; nx];
        for i in 0..nx {
            for j in 0..ny {
                u[i][j] = field.slices[i].phi[j];
                ux[i][j] = field.dphi_dy1[i][j];
                uy[i][j] = field.slices[i].dphi[j];
                uxy[i][j] = field.dphi_dy1_dy2[i][j];
            }
        }
        let patch = BicubicHermite {
            x0: field.y1_grid[0],
            hx: field.y1_grid[1] - field.y1_grid[0],
            y0: 0.0,
            hy: field.y2_grid[1] - field.y2_grid[0],
            u,
            ux,
            uy,
            uxy,
        };
        let x_range = (field.y1_grid[0], *field.y1_grid.last().unwrap());
        Self {
            patch,
            geom,
            src,
            x_range,
        }
    }
}

impl SampledFlow for FieldSampler<'_> {
    fn velocity(&self, x1: f64, x2: f64) -> (f64, f64) {
        let s0 = self.geom.s0(x1);
        let s = self.geom.width(x1);
        let y2 = (x2 - s0) / s;
        let (_, phi_y1, phi_y2) = self.patch.eval_grad(x1, y2);
        let ds0 = self.geom.ds0(x1);
        let ds = self.geom.dwidth(x1);
        let v1 = phi_y2 / s;
        let v2 = -phi_y1 + (ds0 + y2 * ds) / s * phi_y2;
        (v1, v2)
    }

    fn stream_function(&self, x1: f64, x2: f64) -> f64 {
        let s0 = self.geom.s0(x1);
        let s = self.geom.width(x1);
        self.patch.eval(x1, (x2 - s0) / s)
    }

    fn vorticity(&self, x1: f64, x2: f64) -> f64 {
        self.src.fhat(self.stream_function(x1, x2))
    }

    fn relative_height(&self, x1: f64, x2: f64) -> f64 {
        (x2 - self.geom.s0(x1)) / self.geom.width(x1)
    }

    fn x1_range(&self) -> (f64, f64) {
        self.x_range
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum TraceKind {
    Streamline,
    GradientFlow,
}

/// Why a trace stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum StopReason {
    /// Hit the horizontal truncation boundary (expected for `v1 > 0` flows).
    LeftDomain,
    /// Exhausted the step budget.
    StepCap,
    /// Touched a wall; streamlines of a valid flow never do, so this flags
    /// an invariant violation.
    WallContact,
    /// Gradient-flow curve reached the top-wall offset.
    ReachedTop,
}

#[derive(Debug, Clone)]
pub struct PathTrace {
    pub kind: TraceKind,
    /// `(t, x1, x2)` along the path.
    pub points: Vec<(f64, f64, f64)>,
    pub phi_along: Vec<f64>,
    pub omega_along: Vec<f64>,
    pub stop: StopReason,
}

impl PathTrace {
    /// Largest deviation of the stream function from its starting value.
    pub fn phi_drift(&self) -> f64 {
        let start = self.phi_along[0];
        self.phi_along
            .iter()
            .fold(0.0f64, |m, &p| m.max((p - start).abs()))
    }

    /// Largest deviation of the vorticity from its starting value.
    pub fn omega_drift(&self) -> f64 {
        let start = self.omega_along[0];
        self.omega_along
            .iter()
            .fold(0.0f64, |m, &w| m.max((w - start).abs()))
    }

    /// Whether the stream function increases strictly along the path.
    pub fn phi_strictly_increasing(&self) -> bool {
        self.phi_along.windows(2).all(|w| w[1] > w[0])
    }

    pub fn end(&self) -> (f64, f64, f64) {
        *self.points.last().unwrap()
    }
}

/// Traces a streamline `X' = v(X)` from `start` over `t_span` (negative to
/// integrate upstream) with step size `h > 0`.
pub fn trace_streamline(
    flow: &impl SampledFlow,
    start: (f64, f64),
    t_span: f64,
    h: f64,
) -> Result<PathTrace> {
    assert!(h > 0.0 && t_span != 0.0);
    let (x1, x2) = start;
    let eta = flow.relative_height(x1, x2);
    let (lo, hi) = flow.x1_range();
    if !(eta > 0.0 && eta < 1.0 && x1 > lo && x1 < hi) {
        return Err(Error::OutsideInterior { x1, x2 });
    }
    let steps = (t_span.abs() / h).ceil() as usize;
    let dt = t_span.signum() * h;
    let rhs = |_t: f64, s: [f64; 2]| {
        let (v1, v2) = flow.velocity(s[0], s[1]);
        [v1, v2]
    };

    let mut points = Vec::with_capacity(steps + 1);
    let mut phi_along = Vec::with_capacity(steps + 1);
    let mut omega_along = Vec::with_capacity(steps + 1);
    let mut state = [x1, x2];
    let mut record = |t: f64, s: [f64; 2]| {
        points.push((t, s[0], s[1]));
        phi_along.push(flow.stream_function(s[0], s[1]));
        omega_along.push(flow.vorticity(s[0], s[1]));
    };
    record(0.0, state);

    let mut stop = StopReason::StepCap;
    for k in 0..steps {
        let t = k as f64 * dt;
        let next = rk4_step(&rhs, t, state, dt);
        if next[0] <= lo || next[0] >= hi {
            stop = StopReason::LeftDomain;
            break;
        }
        let eta = flow.relative_height(next[0], next[1]);
        if !(0.0..=1.0).contains(&eta) {
            stop = StopReason::WallContact;
            break;
        }
        state = next;
        record((k + 1) as f64 * dt, state);
    }
    Ok(PathTrace {
        kind: TraceKind::Streamline,
        points,
        phi_along,
        omega_along,
        stop,
    })
}

/// Integrates the gradient-flow curve `sigma' = grad phi` from a point at
/// relative height `wall_offset` above the bottom wall until the trajectory
/// reaches relative height `1 - wall_offset`.
///
/// The non-stagnation hypothesis is checked up front on a coarse sample of
/// the domain and en route; a speed below `speed_floor` aborts the trace.
pub fn gradient_flow_curve(
    flow: &impl SampledFlow,
    x1_start: f64,
    wall_offset: f64,
    speed_floor: f64,
    h: f64,
    max_steps: usize,
) -> Result<PathTrace> {
    // hypothesis check first: min |v| over a coarse sample grid
    let (lo, hi) = flow.x1_range();
    let mut min_speed = f64::INFINITY;
    for i in 0..=100 {
        let x1 = lo + (hi - lo) * i as f64 / 100.0;
        for j in 1..20 {
            let eta = j as f64 / 20.0;
            // invert the relative height at this abscissa by linear probe
            let x2 = probe_height(flow, x1, eta);
            let (v1, v2) = flow.velocity(x1, x2);
            min_speed = min_speed.min((v1 * v1 + v2 * v2).sqrt());
        }
    }
    if min_speed < speed_floor {
        return Err(Error::Stagnation {
            speed: min_speed,
            floor: speed_floor,
        });
    }

    let x2_start = probe_height(flow, x1_start, wall_offset);
    let rhs = |_t: f64, s: [f64; 2]| {
        let (gx, gy) = flow.grad_phi(s[0], s[1]);
        [gx, gy]
    };
    let mut points = Vec::new();
    let mut phi_along = Vec::new();
    let mut omega_along = Vec::new();
    let mut state = [x1_start, x2_start];
    let mut record = |t: f64, s: [f64; 2]| {
        points.push((t, s[0], s[1]));
        phi_along.push(flow.stream_function(s[0], s[1]));
        omega_along.push(flow.vorticity(s[0], s[1]));
    };
    record(0.0, state);

    let mut stop = StopReason::StepCap;
    for k in 0..max_steps {
        let (gx, gy) = flow.grad_phi(state[0], state[1]);
        let speed = (gx * gx + gy * gy).sqrt();
        if speed < speed_floor {
            return Err(Error::Stagnation {
                speed,
                floor: speed_floor,
            });
        }
        let next = rk4_step(&rhs, k as f64 * h, state, h);
        if next[0] <= lo || next[0] >= hi {
            stop = StopReason::LeftDomain;
            break;
        }
        state = next;
        record((k + 1) as f64 * h, state);
        if flow.relative_height(state[0], state[1]) >= 1.0 - wall_offset {
            stop = StopReason::ReachedTop;
            break;
        }
    }
    Ok(PathTrace {
        kind: TraceKind::GradientFlow,
        points,
        phi_along,
        omega_along,
        stop,
    })
}

/// Physical height at relative height `eta` in the cross-section at `x1`.
fn probe_height(flow: &impl SampledFlow, x1: f64, eta: f64) -> f64 {
    // relative_height is affine in x2; two probes pin the walls
    let r0 = flow.relative_height(x1, 0.0);
    let r1 = flow.relative_height(x1, 1.0);
    let slope = r1 - r0;
    (eta - r0) / slope
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{assemble, SolverTolerances};
    use crate::profiles::IncomingProfile;

    fn strip_constant() -> (NozzleGeometry, VorticitySource, StreamFunctionField) {
        let g = NozzleGeometry::strip(10.0).unwrap();
        let p = IncomingProfile::constant().unwrap();
        let src = VorticitySource::from_profile(&p).unwrap();
        let field = assemble(&g, &src, 40, 60, &SolverTolerances::default()).unwrap();
        (g, src, field)
    }

    fn bump_quartic() -> (NozzleGeometry, VorticitySource, StreamFunctionField) {
        let g = NozzleGeometry::compact_bump(0.0, 1.3, 3.0, -0.05, 0.1, 8.0).unwrap();
        let p = IncomingProfile::quartic_bump(0.2).unwrap();
        let src = VorticitySource::from_profile(&p).unwrap();
        let field = assemble(&g, &src, 80, 120, &SolverTolerances::default()).unwrap();
        (g, src, field)
    }

    #[test]
    fn uniform_flow_streamline_is_horizontal() {
        let (g, src, field) = strip_constant();
        let flow = FieldSampler::new(&field, &g, &src);
        let trace = trace_streamline(&flow, (0.0, 0.5), 15.0, 1e-3).unwrap();
        assert_eq!(trace.stop, StopReason::LeftDomain);
        for &(_, _, x2) in &trace.points {
            assert!((x2 - 0.5).abs() < 1e-12);
        }
        assert!(trace.phi_drift() < 1e-13);
    }

    #[test]
    fn wall_seed_is_rejected() {
        let (g, src, field) = strip_constant();
        let flow = FieldSampler::new(&field, &g, &src);
        assert!(matches!(
            trace_streamline(&flow, (0.0, 0.0), 1.0, 1e-3),
            Err(Error::OutsideInterior { .. })
        ));
        assert!(matches!(
            trace_streamline(&flow, (0.0, 1.0), 1.0, 1e-3),
            Err(Error::OutsideInterior { .. })
        ));
    }

    #[test]
    fn stream_function_and_vorticity_are_conserved_along_paths() {
        let (g, src, field) = bump_quartic();
        let flow = FieldSampler::new(&field, &g, &src);
        for &eta in &[0.2, 0.5, 0.8] {
            let start = (-6.0, eta);
            let trace = trace_streamline(&flow, start, 20.0, 1e-3).unwrap();
            assert_eq!(trace.stop, StopReason::LeftDomain);
            assert!(
                trace.phi_drift() <= 1e-6,
                "phi drift {} at eta = {eta}",
                trace.phi_drift()
            );
            assert!(
                trace.omega_drift() <= 1e-5,
                "omega drift {} at eta = {eta}",
                trace.omega_drift()
            );
        }
    }

    #[test]
    fn step_halving_confirms_integrator_convergence() {
        let (g, src, field) = bump_quartic();
        let flow = FieldSampler::new(&field, &g, &src);
        let endpoint = |h: f64| {
            let t = trace_streamline(&flow, (-2.0, 0.4), 3.0, h).unwrap();
            let (_, x1, x2) = t.end();
            (x1, x2)
        };
        let (a1, a2) = endpoint(2e-3);
        let (b1, b2) = endpoint(1e-3);
        let (c1, c2) = endpoint(5e-4);
        let dev_coarse = ((a1 - b1).powi(2) + (a2 - b2).powi(2)).sqrt();
        let dev_fine = ((b1 - c1).powi(2) + (b2 - c2).powi(2)).sqrt();
        assert!(dev_coarse < 1e-8, "coarse deviation {dev_coarse}");
        // deviation must shrink fast under halving (better than second order)
        assert!(
            dev_fine < dev_coarse / 4.0 || dev_coarse < 1e-13,
            "halving ratio too weak: {dev_coarse:.3e} -> {dev_fine:.3e}"
        );
    }

    #[test]
    fn backward_trace_exits_at_the_upstream_height() {
        let (g, src, field) = bump_quartic();
        let p = IncomingProfile::quartic_bump(0.2).unwrap();
        let flow = FieldSampler::new(&field, &g, &src);
        let start = (1.0, 0.62);
        let phi0 = flow.stream_function(start.0, start.1);
        let trace = trace_streamline(&flow, start, -40.0, 1e-3).unwrap();
        assert_eq!(trace.stop, StopReason::LeftDomain);
        let (_, x1_end, x2_end) = trace.end();
        assert!(x1_end < -7.5, "did not reach the upstream boundary");
        let expected = p.kappa(phi0).unwrap();
        assert!(
            (x2_end - expected).abs() <= 1e-5,
            "upstream exit height {x2_end} != kappa(phi) = {expected}"
        );
    }

    #[test]
    fn gradient_flow_in_uniform_strip_is_vertical() {
        let (g, src, field) = strip_constant();
        let flow = FieldSampler::new(&field, &g, &src);
        let trace = gradient_flow_curve(&flow, 0.0, 1e-3, 1e-6, 1e-3, 100_000).unwrap();
        assert_eq!(trace.stop, StopReason::ReachedTop);
        for &(_, x1, _) in &trace.points {
            assert!(x1.abs() < 1e-12, "curve drifted horizontally");
        }
        assert!(trace.phi_strictly_increasing());
    }

    #[test]
    fn gradient_flow_spans_the_stream_interval() {
        let g = NozzleGeometry::strip(10.0).unwrap();
        let p = IncomingProfile::quartic_bump(0.2).unwrap();
        let src = VorticitySource::from_profile(&p).unwrap();
        let field = assemble(&g, &src, 40, 120, &SolverTolerances::default()).unwrap();
        let flow = FieldSampler::new(&field, &g, &src);
        let trace = gradient_flow_curve(&flow, 0.0, 1e-3, 1e-6, 1e-3, 200_000).unwrap();
        assert_eq!(trace.stop, StopReason::ReachedTop);
        assert!(trace.phi_strictly_increasing());
        let first = trace.phi_along[0];
        let last = *trace.phi_along.last().unwrap();
        assert!(first < 0.01 * src.c);
        assert!(last > 0.99 * src.c);
    }
}
