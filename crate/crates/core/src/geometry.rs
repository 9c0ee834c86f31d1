//! Nozzle geometry: wall functions, the flattening change of variables, and
//! numerical checks of the structural assumptions (finite positive width,
//! straight upstream, flat or slanted downstream).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::MonotoneCubic;
use crate::profiles::Evaluator;

/// Downstream asymptote of the nozzle walls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DownstreamKind {
    /// Walls approach the horizontal lines `x2 = offset` and
    /// `x2 = offset + width`.
    Flat { offset: f64, width: f64 },
    /// Walls approach parallel straight lines of slope `slope`; the lower
    /// asymptote is `intercept + slope * x1` and the cross-section width
    /// tends to `sqrt(slope^2 + 1)`.
    Slanted { intercept: f64, slope: f64 },
}

impl DownstreamKind {
    /// Coefficient `alpha1` of the downstream limit equation: the square of
    /// the asymptotic width for flat ends, `slope^2 + 1` for slanted ends.
    pub fn limit_alpha1(&self) -> f64 {
        match *self {
            DownstreamKind::Flat { width, .. } => width * width,
            DownstreamKind::Slanted { slope, .. } => slope * slope + 1.0,
        }
    }
}

/// Nozzle walls and their derivatives; upstream is always the unit strip.
pub struct NozzleGeometry {
    s0: Evaluator,
    s1: Evaluator,
    ds0: Evaluator,
    ds1: Evaluator,
    pub downstream: DownstreamKind,
    /// Truncation abscissa: the numerical domain is `[-x_cutoff, x_cutoff]`.
    pub x_cutoff: f64,
}

impl std::fmt::Debug for NozzleGeometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NozzleGeometry")
            .field("downstream", &self.downstream)
            .field("x_cutoff", &self.x_cutoff)
            .finish_non_exhaustive()
    }
}

/// Quintic smoothstep: 0 for `t <= 0`, 1 for `t >= 1`, C^2 across the seams.
fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

fn smoothstep_deriv(t: f64) -> f64 {
    if !(0.0..=1.0).contains(&t) {
        0.0
    } else {
        30.0 * t * t * (1.0 - t) * (1.0 - t)
    }
}

/// Compactly supported C^2 bump on `[-1, 1]`, normalized to 1 at the origin.
fn wall_bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        let u = 1.0 - t * t;
        u * u * u
    }
}

fn wall_bump_deriv(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        let u = 1.0 - t * t;
        -6.0 * t * u * u
    }
}

impl NozzleGeometry {
    /// The straight unit strip.
    pub fn strip(x_cutoff: f64) -> Result<Self> {
        Self::from_closures(
            Arc::new(|_| 0.0),
            Arc::new(|_| 1.0),
            Arc::new(|_| 0.0),
            Arc::new(|_| 0.0),
            DownstreamKind::Flat {
                offset: 0.0,
                width: 1.0,
            },
            x_cutoff,
        )
    }

    /// Smooth (tanh-shaped) transition from the unit strip to the downstream
    /// segment `(offset, offset + width)`. `rate` controls the steepness.
    pub fn tanh_transition(offset: f64, width: f64, rate: f64, x_cutoff: f64) -> Result<Self> {
        let a = offset;
        let d1 = offset + width - 1.0;
        let t = move |x: f64| 0.5 * (1.0 + (rate * x).tanh());
        let dt = move |x: f64| {
            let sech = 1.0 / (rate * x).cosh();
            0.5 * rate * sech * sech
        };
        Self::from_closures(
            Arc::new(move |x| a * t(x)),
            Arc::new(move |x| 1.0 + d1 * t(x)),
            Arc::new(move |x| a * dt(x)),
            Arc::new(move |x| d1 * dt(x)),
            DownstreamKind::Flat { offset, width },
            x_cutoff,
        )
    }

    /// Nozzle that is exactly flat outside `|x1| <= support`: a C^2 smoothstep
    /// transition from `(0, 1)` to `(offset, offset + width)`, plus optional
    /// compactly supported bumps of amplitudes `amp0`, `amp1` on the walls.
    pub fn compact_bump(
        offset: f64,
        width: f64,
        support: f64,
        amp0: f64,
        amp1: f64,
        x_cutoff: f64,
    ) -> Result<Self> {
        assert!(support > 0.0, "bump support must be positive");
        let n = support;
        let a = offset;
        let d1 = offset + width - 1.0;
        let arg = move |x: f64| (x + n) / (2.0 * n);
        Self::from_closures(
            Arc::new(move |x| a * smoothstep(arg(x)) + amp0 * wall_bump(x / n)),
            Arc::new(move |x| 1.0 + d1 * smoothstep(arg(x)) + amp1 * wall_bump(x / n)),
            Arc::new(move |x| {
                a * smoothstep_deriv(arg(x)) / (2.0 * n) + amp0 * wall_bump_deriv(x / n) / n
            }),
            Arc::new(move |x| {
                d1 * smoothstep_deriv(arg(x)) / (2.0 * n) + amp1 * wall_bump_deriv(x / n) / n
            }),
            DownstreamKind::Flat { offset, width },
            x_cutoff,
        )
    }

    /// Walls approaching the straight lines `intercept + slope * x1` and
    /// `intercept + sqrt(slope^2 + 1) + slope * x1` downstream, the unit
    /// strip upstream.
    pub fn slanted(intercept: f64, slope: f64, rate: f64, x_cutoff: f64) -> Result<Self> {
        let b0 = intercept;
        let b1 = slope;
        let gap = (b1 * b1 + 1.0).sqrt();
        let t = move |x: f64| 0.5 * (1.0 + (rate * x).tanh());
        let dt = move |x: f64| {
            let sech = 1.0 / (rate * x).cosh();
            0.5 * rate * sech * sech
        };
        Self::from_closures(
            Arc::new(move |x| t(x) * (b0 + b1 * x)),
            Arc::new(move |x| 1.0 + t(x) * (b0 + gap - 1.0 + b1 * x)),
            Arc::new(move |x| dt(x) * (b0 + b1 * x) + t(x) * b1),
            Arc::new(move |x| dt(x) * (b0 + gap - 1.0 + b1 * x) + t(x) * b1),
            DownstreamKind::Slanted { intercept, slope },
            x_cutoff,
        )
    }

    /// Walls from sampled tables `(x1, s_i)`; shape-preserving cubic inside
    /// the sampled range, constant extension outside it.
    pub fn from_samples(
        x0: Vec<f64>,
        s0: Vec<f64>,
        x1: Vec<f64>,
        s1: Vec<f64>,
        downstream: DownstreamKind,
        x_cutoff: f64,
    ) -> Result<Self> {
        let lower = Arc::new(MonotoneCubic::new(x0, s0).map_err(Error::InvalidSamples)?);
        let upper = Arc::new(MonotoneCubic::new(x1, s1).map_err(Error::InvalidSamples)?);
        let (l0, l1) = (lower.clone(), lower.clone());
        let (u0, u1) = (upper.clone(), upper);
        let clamp_eval = |interp: &MonotoneCubic, x: f64| {
            let (lo, hi) = interp.domain();
            interp.eval(x.clamp(lo, hi))
        };
        let clamp_deriv = |interp: &MonotoneCubic, x: f64| {
            let (lo, hi) = interp.domain();
            if x < lo || x > hi {
                0.0
            } else {
                interp.deriv(x)
            }
        };
        Self::from_closures(
            Arc::new(move |x| clamp_eval(&l0, x)),
            Arc::new(move |x| clamp_eval(&u0, x)),
            Arc::new(move |x| clamp_deriv(&l1, x)),
            Arc::new(move |x| clamp_deriv(&u1, x)),
            downstream,
            x_cutoff,
        )
    }

    /// Assembles a geometry from wall evaluators, checking width positivity
    /// on a dense sample grid.
    pub fn from_closures(
        s0: Evaluator,
        s1: Evaluator,
        ds0: Evaluator,
        ds1: Evaluator,
        downstream: DownstreamKind,
        x_cutoff: f64,
    ) -> Result<Self> {
        assert!(x_cutoff > 0.0, "truncation abscissa must be positive");
        let g = Self {
            s0,
            s1,
            ds0,
            ds1,
            downstream,
            x_cutoff,
        };
        let mut min_width = f64::INFINITY;
        let mut min_at = 0.0;
        for i in 0..=10_000 {
            let x = -x_cutoff + 2.0 * x_cutoff * i as f64 / 10_000.0;
            let w = g.width(x);
            if w < min_width {
                min_width = w;
                min_at = x;
            }
        }
        if min_width <= 0.0 {
            return Err(Error::DegenerateWidth {
                min_width,
                at: min_at,
            });
        }
        Ok(g)
    }

    pub fn s0(&self, x1: f64) -> f64 {
        (self.s0)(x1)
    }

    pub fn s1(&self, x1: f64) -> f64 {
        (self.s1)(x1)
    }

    pub fn ds0(&self, x1: f64) -> f64 {
        (self.ds0)(x1)
    }

    pub fn ds1(&self, x1: f64) -> f64 {
        (self.ds1)(x1)
    }

    /// Cross-section width `s = s1 - s0`.
    pub fn width(&self, x1: f64) -> f64 {
        self.s1(x1) - self.s0(x1)
    }

    pub fn dwidth(&self, x1: f64) -> f64 {
        self.ds1(x1) - self.ds0(x1)
    }

    /// Coefficient `s^2` of the flattened equation.
    pub fn alpha1(&self, x1: f64) -> f64 {
        let w = self.width(x1);
        w * w
    }

    /// Derivative `(s^2)' = 2 s s'`.
    pub fn dalpha1(&self, x1: f64) -> f64 {
        2.0 * self.width(x1) * self.dwidth(x1)
    }

    /// Flattening map `(x1, x2) -> (y1, y2)` onto the unit strip.
    pub fn flatten(&self, x1: f64, x2: f64) -> Result<(f64, f64)> {
        let s0 = self.s0(x1);
        let s = self.width(x1);
        let y2 = (x2 - s0) / s;
        let slack = 1e-12;
        if !(-slack..=1.0 + slack).contains(&y2) {
            return Err(Error::OutsideNozzle { x1, x2 });
        }
        Ok((x1, y2))
    }

    /// Inverse of the flattening map.
    pub fn unflatten(&self, y1: f64, y2: f64) -> (f64, f64) {
        let s0 = self.s0(y1);
        let s1 = self.s1(y1);
        (y1, (1.0 - y2) * s0 + y2 * s1)
    }

    /// Residual of the downstream asymptote check at `x1 = +X` for a given
    /// (possibly hypothetical) downstream kind.
    pub fn downstream_residual(&self, kind: &DownstreamKind, x: f64) -> f64 {
        match *kind {
            DownstreamKind::Flat { offset, width } => {
                let r0 = (self.s0(x) - offset).abs();
                let r1 = (self.s1(x) - (offset + width)).abs();
                r0.max(r1)
            }
            DownstreamKind::Slanted { intercept, slope } => {
                let gap = (slope * slope + 1.0).sqrt();
                let r0 = (self.s0(x) - intercept - slope * x).abs();
                let r1 = (self.s1(x) - intercept - gap - slope * x).abs();
                let d0 = (self.ds0(x) - slope).abs();
                let d1 = (self.ds1(x) - slope).abs();
                r0.max(r1).max(d0).max(d1)
            }
        }
    }

    /// Numerical check of the structural assumptions on the truncated domain.
    pub fn validate_assumptions(&self, tol: f64) -> AssumptionReport {
        let x = self.x_cutoff;
        let mut min_width = f64::INFINITY;
        for i in 0..=10_000 {
            let t = -x + 2.0 * x * i as f64 / 10_000.0;
            min_width = min_width.min(self.width(t));
        }
        let upstream = (self.s0(-x).abs()).max((self.s1(-x) - 1.0).abs());
        let downstream = self.downstream_residual(&self.downstream, x);
        let upstream_decay = self.ds0(-x).abs().max(self.ds1(-x).abs());
        let clauses = vec![
            Clause {
                name: "width positive (A1)".into(),
                pass: min_width > 0.0,
                residual: min_width,
            },
            Clause {
                name: "upstream asymptote (A2)".into(),
                pass: upstream <= tol,
                residual: upstream,
            },
            Clause {
                name: "downstream asymptote (A3)".into(),
                pass: downstream <= tol,
                residual: downstream,
            },
            Clause {
                name: "upstream wall-derivative decay".into(),
                pass: upstream_decay <= tol,
                residual: upstream_decay,
            },
        ];
        let all_pass = clauses.iter().all(|c| c.pass);
        AssumptionReport { clauses, all_pass }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Clause {
    pub name: String,
    pub pass: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct AssumptionReport {
    pub clauses: Vec<Clause>,
    pub all_pass: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn strip_is_identity_under_flattening() {
        let g = NozzleGeometry::strip(20.0).unwrap();
        let (y1, y2) = g.flatten(3.7, 0.42).unwrap();
        assert_eq!(y1, 3.7);
        assert_eq!(y2, 0.42);
        assert_eq!(g.width(-5.0), 1.0);
        assert_eq!(g.ds0(2.0), 0.0);
        let report = g.validate_assumptions(1e-12);
        assert!(report.all_pass);
        assert_eq!(report.clauses[1].residual, 0.0);
        assert_eq!(report.clauses[2].residual, 0.0);
    }

    #[test]
    fn tanh_family_hits_its_asymptotes() {
        let g = NozzleGeometry::tanh_transition(0.0, 1.5, 1.0, 20.0).unwrap();
        assert!((g.width(-20.0) - 1.0).abs() < 1e-12);
        assert!((g.width(20.0) - 1.5).abs() < 1e-12);
        let report = g.validate_assumptions(1e-8);
        assert!(report.all_pass, "report: {report:?}");
    }

    #[test]
    fn tanh_midheight_flattens_to_half() {
        let g = NozzleGeometry::tanh_transition(0.5, 2.0, 1.0, 20.0).unwrap();
        // downstream walls are (0.5, 2.5); x2 = 1.5 sits at mid-height
        let (_, y2) = g.flatten(20.0, 1.5).unwrap();
        assert!((y2 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn slanted_width_tends_to_hypotenuse() {
        let g = NozzleGeometry::slanted(0.0, 1.0, 1.0, 20.0).unwrap();
        assert!((g.width(20.0) - 2.0_f64.sqrt()).abs() < 1e-10);
        assert!((g.width(-20.0) - 1.0).abs() < 1e-12);
        // passes its own downstream check, fails the flat one
        let report = g.validate_assumptions(1e-8);
        assert!(report.all_pass, "report: {report:?}");
        let flat_res = g.downstream_residual(
            &DownstreamKind::Flat {
                offset: 0.0,
                width: 2.0_f64.sqrt(),
            },
            20.0,
        );
        assert!(
            flat_res > 1.0,
            "flat check should fail badly, got {flat_res}"
        );
    }

    #[test]
    fn compact_bump_is_exactly_flat_outside_support() {
        let g = NozzleGeometry::compact_bump(0.0, 1.4, 5.0, -0.1, 0.15, 20.0).unwrap();
        assert_eq!(g.s0(-5.0), 0.0);
        assert_eq!(g.s1(-5.0), 1.0);
        assert_eq!(g.s0(7.3), 0.0);
        assert_eq!(g.s1(7.3), 1.4);
        assert_eq!(g.ds0(5.0), 0.0);
        assert_eq!(g.ds1(-6.1), 0.0);
        assert!(g.width(0.0) != 1.0);
        assert!(g.validate_assumptions(1e-12).all_pass);
    }

    #[test]
    fn degenerate_width_is_rejected() {
        let err = NozzleGeometry::compact_bump(0.0, 1.0, 5.0, 0.0, -1.2, 20.0).unwrap_err();
        assert!(matches!(err, Error::DegenerateWidth { .. }));
    }

    #[test]
    fn width_positive_on_dense_samples() {
        let g = NozzleGeometry::compact_bump(0.2, 1.3, 4.0, 0.1, -0.2, 20.0).unwrap();
        for i in 0..=10_000 {
            let x = -20.0 + 40.0 * i as f64 / 10_000.0;
            assert!(g.width(x) > 0.0);
        }
    }

    #[test]
    fn walls_flatten_to_zero_and_one() {
        let g = NozzleGeometry::tanh_transition(0.3, 1.7, 0.8, 20.0).unwrap();
        for i in 0..50 {
            let x1 = -20.0 + 40.0 * i as f64 / 49.0;
            let (_, y_bot) = g.flatten(x1, g.s0(x1)).unwrap();
            let (_, y_top) = g.flatten(x1, g.s1(x1)).unwrap();
            assert!(y_bot.abs() <= 1e-14);
            assert!((y_top - 1.0).abs() <= 1e-14);
        }
    }

    #[test]
    fn alpha1_derivative_matches_centered_difference() {
        let g = NozzleGeometry::tanh_transition(0.0, 1.5, 1.0, 20.0).unwrap();
        let h = 1e-4;
        for &x in &[-3.0, -0.5, 0.0, 1.2, 4.0] {
            let fd = (g.alpha1(x + h) - g.alpha1(x - h)) / (2.0 * h);
            assert!(
                (g.dalpha1(x) - fd).abs() < 1e-6,
                "(s^2)' mismatch at x = {x}"
            );
        }
    }

    #[test]
    fn sampled_walls_clamp_outside_range() {
        let xs: Vec<f64> = (0..=20).map(|i| -10.0 + i as f64).collect();
        let s0: Vec<f64> = xs.iter().map(|&x| 0.05 * (x / 10.0).tanh()).collect();
        let s1: Vec<f64> = xs.iter().map(|&x| 1.0 + 0.2 * (x / 10.0).tanh()).collect();
        let g = NozzleGeometry::from_samples(
            xs.clone(),
            s0,
            xs,
            s1,
            DownstreamKind::Flat {
                offset: 0.05 * 1.0_f64.tanh(),
                width: 1.0 + 0.15 * 1.0_f64.tanh(),
            },
            20.0,
        )
        .unwrap();
        assert_eq!(g.s0(-30.0), g.s0(-10.0));
        assert_eq!(g.ds1(15.0), 0.0);
        assert!(g.width(0.0) > 0.9);
    }

    proptest! {
        #[test]
        fn flatten_roundtrip_is_identity(
            x1 in -15.0..15.0f64,
            frac in 0.0..1.0f64,
        ) {
            let g = NozzleGeometry::tanh_transition(0.2, 1.8, 1.0, 20.0).unwrap();
            let x2 = g.s0(x1) + frac * g.width(x1);
            let (y1, y2) = g.flatten(x1, x2).unwrap();
            let (rx1, rx2) = g.unflatten(y1, y2);
            prop_assert!((rx1 - x1).abs() < 1e-14);
            prop_assert!((rx2 - x2).abs() < 1e-14);
        }
    }
}
