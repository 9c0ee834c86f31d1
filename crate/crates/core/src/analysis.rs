//! Verification: finite-difference residuals of the governing equations,
//! Liouville/shear checking on straight strips, far-field limit states, and
//! decay tables toward them.

use std::sync::Arc;

use serde::Serialize;

use crate::error::Result;
use crate::field::FlowField;
use crate::geometry::{DownstreamKind, NozzleGeometry};
use crate::kinematics::SampledFlow;
use crate::lagrange::LagrangeSlice;
use crate::numerics::simpson_table;
use crate::profiles::VorticitySource;

/// Sup- and L2-norm of one residual family.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResidualPair {
    pub sup: f64,
    pub l2: f64,
}

/// Residual norms of the four governing relations: horizontal momentum,
/// hydrostatic balance, incompressibility, and vorticity transport.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResidualNorms {
    pub momentum: ResidualPair,
    pub hydrostatic: ResidualPair,
    pub divergence: ResidualPair,
    pub vorticity_transport: ResidualPair,
}

struct Accumulator {
    sup: f64,
    sum_sq: f64,
    count: usize,
}

impl Accumulator {
    fn new() -> Self {
        Self {
            sup: 0.0,
            sum_sq: 0.0,
            count: 0,
        }
    }

    fn push(&mut self, r: f64) {
        self.sup = self.sup.max(r.abs());
        self.sum_sq += r * r;
        self.count += 1;
    }

    fn finish(&self) -> ResidualPair {
        ResidualPair {
            sup: self.sup,
            l2: (self.sum_sq / self.count.max(1) as f64).sqrt(),
        }
    }
}

/// Finite-difference residuals of the flow on its own curvilinear grid.
///
/// Derivatives are centered differences in the flattened coordinates mapped
/// back through the chain rule, so the residuals measure the discrete
/// truncation error (second order in the grid spacing) of the sampled flow.
pub fn residuals(flow: &FlowField, g: &NozzleGeometry) -> ResidualNorms {
    let n1 = flow.x1.len() - 1;
    let n2 = flow.y2_grid.len() - 1;
    let h1 = flow.x1[1] - flow.x1[0];
    let h2 = flow.y2_grid[1] - flow.y2_grid[0];

    let mut momentum = Accumulator::new();
    let mut hydrostatic = Accumulator::new();
    let mut divergence = Accumulator::new();
    let mut transport = Accumulator::new();

    for i in 1..n1 {
        let x1 = flow.x1[i];
        let s = g.width(x1);
        let ds0 = g.ds0(x1);
        let ds = g.dwidth(x1);
        for j in 1..n2 {
            let y2 = flow.y2_grid[j];
            // chain rule: d/dx1 = d/dy1 + (dy2/dx1) d/dy2, d/dx2 = (1/s) d/dy2
            let dy2_dx1 = -(ds0 + y2 * ds) / s;
            let dx1 = |u: &Vec<Vec<f64>>| {
                let u_y1 = (u[i + 1][j] - u[i - 1][j]) / (2.0 * h1);
                let u_y2 = (u[i][j + 1] - u[i][j - 1]) / (2.0 * h2);
                u_y1 + u_y2 * dy2_dx1
            };
            let dx2 = |u: &Vec<Vec<f64>>| (u[i][j + 1] - u[i][j - 1]) / (2.0 * h2) / s;

            let v1 = flow.v1[i][j];
            let v2 = flow.v2[i][j];
            momentum.push(v1 * dx1(&flow.v1) + v2 * dx2(&flow.v1) + dx1(&flow.p));
            hydrostatic.push(dx2(&flow.p));
            divergence.push(dx1(&flow.v1) + dx2(&flow.v2));
            transport.push(v1 * dx1(&flow.omega) + v2 * dx2(&flow.omega));
        }
    }

    ResidualNorms {
        momentum: momentum.finish(),
        hydrostatic: hydrostatic.finish(),
        divergence: divergence.finish(),
        vorticity_transport: transport.finish(),
    }
}

type Evaluator2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Analytic flow on a strip window, with exact partial derivatives; used as
/// a grid-free residual fixture and as a traceable counterexample.
pub struct AnalyticField {
    pub window: (f64, f64),
    v1: Evaluator2,
    v2: Evaluator2,
    p: Evaluator2,
    omega: Evaluator2,
    phi: Evaluator2,
    d1_v1: Evaluator2,
    d2_v1: Evaluator2,
    d2_v2: Evaluator2,
    d1_p: Evaluator2,
    d2_p: Evaluator2,
    d1_omega: Evaluator2,
    d2_omega: Evaluator2,
}

impl AnalyticField {
    /// The non-shear stagnating flow on the strip:
    /// `v = (-pi e^{x1} cos(pi x2), e^{x1} sin(pi x2))`,
    /// `p = -(pi^2 / 2) e^{2 x1}`. A solution of the governing system whose
    /// speed decays to zero upstream.
    pub fn counterexample(window: (f64, f64)) -> Self {
        use std::f64::consts::PI;
        Self {
            window,
            v1: Arc::new(|x1, x2| -PI * x1.exp() * (PI * x2).cos()),
            v2: Arc::new(|x1, x2| x1.exp() * (PI * x2).sin()),
            p: Arc::new(|x1, _| -0.5 * PI * PI * (2.0 * x1).exp()),
            omega: Arc::new(|x1, x2| PI * PI * x1.exp() * (PI * x2).sin()),
            phi: Arc::new(|x1, x2| x1.exp() * (PI * x2).sin()),
            d1_v1: Arc::new(|x1, x2| -PI * x1.exp() * (PI * x2).cos()),
            d2_v1: Arc::new(|x1, x2| PI * PI * x1.exp() * (PI * x2).sin()),
            d2_v2: Arc::new(|x1, x2| PI * x1.exp() * (PI * x2).cos()),
            d1_p: Arc::new(|x1, _| -PI * PI * (2.0 * x1).exp()),
            d2_p: Arc::new(|_, _| 0.0),
            d1_omega: Arc::new(|x1, x2| PI * PI * x1.exp() * (PI * x2).sin()),
            d2_omega: Arc::new(|x1, x2| PI * PI * PI * x1.exp() * (PI * x2).cos()),
        }
    }

    /// Pointwise residuals of the governing equations from the exact
    /// partial derivatives (no grid).
    pub fn residuals_at(&self, points: &[(f64, f64)]) -> ResidualNorms {
        let mut momentum = Accumulator::new();
        let mut hydrostatic = Accumulator::new();
        let mut divergence = Accumulator::new();
        let mut transport = Accumulator::new();
        for &(x1, x2) in points {
            let v1 = (self.v1)(x1, x2);
            let v2 = (self.v2)(x1, x2);
            momentum
                .push(v1 * (self.d1_v1)(x1, x2) + v2 * (self.d2_v1)(x1, x2) + (self.d1_p)(x1, x2));
            hydrostatic.push((self.d2_p)(x1, x2));
            divergence.push((self.d1_v1)(x1, x2) + (self.d2_v2)(x1, x2));
            transport.push(v1 * (self.d1_omega)(x1, x2) + v2 * (self.d2_omega)(x1, x2));
        }
        ResidualNorms {
            momentum: momentum.finish(),
            hydrostatic: hydrostatic.finish(),
            divergence: divergence.finish(),
            vorticity_transport: transport.finish(),
        }
    }

    /// Samples the analytic field onto a strip grid in [`FlowField`] layout.
    pub fn sample_to_flow(&self, n1: usize, n2: usize) -> FlowField {
        let (lo, hi) = self.window;
        let x1: Vec<f64> = (0..=n1)
            .map(|i| lo + (hi - lo) * i as f64 / n1 as f64)
            .collect();
        let y2: Vec<f64> = (0..=n2).map(|j| j as f64 / n2 as f64).collect();
        let mut x2 = Vec::with_capacity(n1 + 1);
        let mut v1 = Vec::with_capacity(n1 + 1);
        let mut v2 = Vec::with_capacity(n1 + 1);
        let mut p = Vec::with_capacity(n1 + 1);
        let mut omega = Vec::with_capacity(n1 + 1);
        let mut phi = Vec::with_capacity(n1 + 1);
        let mut flux = Vec::with_capacity(n1 + 1);
        for &a in &x1 {
            let cx2: Vec<f64> = y2.clone();
            let cv1: Vec<f64> = y2.iter().map(|&b| (self.v1)(a, b)).collect();
            flux.push(simpson_table(&cv1, 1.0 / n2 as f64));
            v1.push(cv1);
            v2.push(y2.iter().map(|&b| (self.v2)(a, b)).collect());
            p.push(y2.iter().map(|&b| (self.p)(a, b)).collect());
            omega.push(y2.iter().map(|&b| (self.omega)(a, b)).collect());
            phi.push(y2.iter().map(|&b| (self.phi)(a, b)).collect());
            x2.push(cx2);
        }
        let gamma_bar = v1.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
        FlowField {
            x1,
            y2_grid: y2,
            x2,
            v1,
            v2,
            p,
            omega,
            phi,
            mass_flux_per_column: flux,
            c: 0.0,
            gamma_bar,
        }
    }
}

impl SampledFlow for AnalyticField {
    fn velocity(&self, x1: f64, x2: f64) -> (f64, f64) {
        ((self.v1)(x1, x2), (self.v2)(x1, x2))
    }

    fn stream_function(&self, x1: f64, x2: f64) -> f64 {
        (self.phi)(x1, x2)
    }

    fn vorticity(&self, x1: f64, x2: f64) -> f64 {
        (self.omega)(x1, x2)
    }

    fn relative_height(&self, _x1: f64, x2: f64) -> f64 {
        x2
    }

    fn x1_range(&self) -> (f64, f64) {
        self.window
    }
}

/// What is known about the horizontal extent of the data under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainExtent {
    /// Solver-produced flow: the slice family extends over the whole line
    /// by construction, so an empirical shear assertion is meaningful.
    SolverStrip,
    /// A window sample of an externally given field: the theorem's
    /// whole-line hypothesis cannot be certified from the window.
    TruncatedWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ShearStatus {
    /// min |v| >= floor and the flow is a shear flow within tolerance.
    ConfirmedEmpirically,
    /// min |v| >= floor on the window but the flow deviates from shear.
    ShearViolation,
    /// The non-stagnation hypothesis fails on the data.
    HypothesisNotMet,
    /// Window data only: no theorem-grade statement is possible.
    NotApplicableTruncated,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShearReport {
    pub status: ShearStatus,
    pub min_speed: f64,
    pub v2_sup: f64,
    /// Largest column deviation from the reference column profile.
    pub profile_spread: f64,
    pub worst_column: usize,
    pub note: String,
}

/// Shear check on a strip flow: compares every column's horizontal velocity
/// against the first column and measures the vertical velocity.
pub fn liouville_check(
    flow: &FlowField,
    extent: DomainExtent,
    speed_floor: f64,
    tol: f64,
) -> ShearReport {
    let mut min_speed = f64::INFINITY;
    let mut v2_sup = 0.0f64;
    let mut spread = 0.0f64;
    let mut worst = 0usize;
    for i in 0..flow.x1.len() {
        let mut col_dev = 0.0f64;
        for j in 0..flow.y2_grid.len() {
            let speed = (flow.v1[i][j].powi(2) + flow.v2[i][j].powi(2)).sqrt();
            min_speed = min_speed.min(speed);
            v2_sup = v2_sup.max(flow.v2[i][j].abs());
            col_dev = col_dev.max((flow.v1[i][j] - flow.v1[0][j]).abs());
        }
        if col_dev > spread {
            spread = col_dev;
            worst = i;
        }
    }
    let is_shear = v2_sup <= tol && spread <= tol;
    let (status, note) = match extent {
        DomainExtent::TruncatedWindow => (
            ShearStatus::NotApplicableTruncated,
            "truncated domain - Liouville not applicable as theorem".to_string(),
        ),
        DomainExtent::SolverStrip => {
            if min_speed < speed_floor {
                (
                    ShearStatus::HypothesisNotMet,
                    format!("min |v| = {min_speed:.3e} below floor {speed_floor:.3e}"),
                )
            } else if is_shear {
                (
                    ShearStatus::ConfirmedEmpirically,
                    "empirical shear check on the truncated strip; not a theorem certificate"
                        .to_string(),
                )
            } else {
                (
                    ShearStatus::ShearViolation,
                    format!("column {worst} deviates from the reference profile"),
                )
            }
        }
    };
    ShearReport {
        status,
        min_speed,
        v2_sup,
        profile_spread: spread,
        worst_column: worst,
        note,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Upstream,
    Downstream,
}

/// Limit shear state on one end of the nozzle, from the limit slice
/// equation with the appropriate coefficient.
#[derive(Debug, Clone, Serialize)]
pub struct FarFieldState {
    pub side: Side,
    pub alpha1: f64,
    /// Height interval carrying the limit profile (relative to the lower
    /// asymptote for slanted ends).
    pub interval: (f64, f64),
    pub y2_grid: Vec<f64>,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub phi: Vec<f64>,
    pub flux: f64,
}

/// Computes the far-field state on one side: upstream recovers the incoming
/// profile; downstream solves the limit equation with `alpha1` equal to the
/// squared flat width, or `slope^2 + 1` for slanted ends (where the limit
/// velocity also carries a vertical component `slope * v1`).
pub fn farfield_state(
    src: &VorticitySource,
    g: &NozzleGeometry,
    side: Side,
    ny: usize,
    beta_tol: f64,
) -> Result<FarFieldState> {
    let (alpha1, interval, slope) = match side {
        Side::Upstream => (1.0, (0.0, 1.0), 0.0),
        Side::Downstream => {
            let alpha1 = g.downstream.limit_alpha1();
            match g.downstream {
                DownstreamKind::Flat { offset, width } => (alpha1, (offset, offset + width), 0.0),
                DownstreamKind::Slanted { slope, .. } => (alpha1, (0.0, alpha1.sqrt()), slope),
            }
        }
    };
    let width = interval.1 - interval.0;
    let slice = LagrangeSlice::build(alpha1, src, beta_tol)?.invert_to_slice(src, 0.0, ny)?;
    let v1: Vec<f64> = slice.dphi.iter().map(|&d| d / width).collect();
    let v2: Vec<f64> = v1.iter().map(|&v| slope * v).collect();
    let flux = simpson_table(&v1, width / ny as f64);
    Ok(FarFieldState {
        side,
        alpha1,
        interval,
        y2_grid: slice.grid,
        v1,
        v2,
        phi: slice.phi,
        flux,
    })
}

/// Column-wise deviation of the flow from the far-field states, measured on
/// the compact core (10%-90% of the height interval).
#[derive(Debug, Clone, Serialize)]
pub struct DecayTable {
    pub x1: Vec<f64>,
    pub upstream_err: Vec<f64>,
    pub downstream_err: Vec<f64>,
    /// Deviation at the upstream truncation boundary.
    pub upstream_end_err: f64,
    /// Deviation at the downstream truncation boundary.
    pub downstream_end_err: f64,
}

pub fn convergence_report(
    flow: &FlowField,
    upstream: &FarFieldState,
    downstream: &FarFieldState,
) -> DecayTable {
    assert_eq!(
        flow.y2_grid.len(),
        upstream.y2_grid.len(),
        "far-field states must share the flow's vertical grid"
    );
    let n2 = flow.y2_grid.len() - 1;
    let core = (n2 / 10).max(1)..=(9 * n2 / 10);
    let err_against = |col: usize, limit: &FarFieldState| -> f64 {
        let mut worst = 0.0f64;
        for j in core.clone() {
            worst = worst.max((flow.v1[col][j] - limit.v1[j]).abs());
        }
        worst
    };
    let mut upstream_err = Vec::with_capacity(flow.x1.len());
    let mut downstream_err = Vec::with_capacity(flow.x1.len());
    for i in 0..flow.x1.len() {
        upstream_err.push(err_against(i, upstream));
        downstream_err.push(err_against(i, downstream));
    }
    DecayTable {
        x1: flow.x1.clone(),
        upstream_end_err: upstream_err[0],
        downstream_end_err: *downstream_err.last().unwrap(),
        upstream_err,
        downstream_err,
    }
}
