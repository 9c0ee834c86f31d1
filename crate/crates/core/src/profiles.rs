//! Incoming velocity profiles and the vorticity data derived from them.
//!
//! The upstream horizontal velocity `v1(x2)` on the unit interval determines
//! the cumulative stream function, the mass flux `c`, the monotone inverse
//! `kappa` mapping stream values back to heights, the local vorticity
//! function `f = v1' \circ kappa` with its constant Lipschitz extension, and
//! the pressure primitive `F` with `F(0) = 0`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{
    brent, cumulative_simpson_fn, locate_cell, partial_cell_simpson, simpson_fn, MonotoneCubic,
};

/// Shared pure evaluator; profiles and sources are immutable after
/// construction and safe to use from any thread.
pub type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Number of cells in the cumulative table of the incoming stream function.
const CUM_CELLS: usize = 1000;
/// Number of cells in the prefix-integral table of the vorticity function.
const SOURCE_CELLS: usize = 2000;
/// Height tolerance for the kappa root find.
const KAPPA_XTOL: f64 = 1e-12;

/// Prescribed upstream velocity profile with its cumulative stream function.
pub struct IncomingProfile {
    v1m: Evaluator,
    dv1m: Evaluator,
    d2v1m: Option<Evaluator>,
    /// Mass flux through any cross-section.
    pub c: f64,
    /// Richardson estimate of the quadrature error in `c`.
    pub c_error_estimate: f64,
    /// Whether `v1'(0) <= 0 <= v1'(1)` holds; when it does not, the solver
    /// still runs on the extended vorticity function but the stream-function
    /// bounds `0 <= phi <= c` are no longer guaranteed.
    pub sign_condition_ok: bool,
    pub warnings: Vec<String>,
    cum: Vec<f64>,
}

impl std::fmt::Debug for IncomingProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IncomingProfile")
            .field("c", &self.c)
            .field("sign_condition_ok", &self.sign_condition_ok)
            .field("c_error_estimate", &self.c_error_estimate)
            .finish_non_exhaustive()
    }
}

impl IncomingProfile {
    /// Uniform profile `v1 = 1`.
    pub fn constant() -> Result<Self> {
        Self::from_closures(
            Arc::new(|_| 1.0),
            Arc::new(|_| 0.0),
            Some(Arc::new(|_| 0.0)),
        )
    }

    /// Symmetric profile `v1(x2) = 1 + amplitude * (x2 - 1/2)^2`.
    pub fn quartic_bump(amplitude: f64) -> Result<Self> {
        let a = amplitude;
        Self::from_closures(
            Arc::new(move |x: f64| 1.0 + a * (x - 0.5) * (x - 0.5)),
            Arc::new(move |x: f64| 2.0 * a * (x - 0.5)),
            Some(Arc::new(move |_| 2.0 * a)),
        )
    }

    /// Profile from a sampled table `(x2, v1)`; interpolated with a
    /// shape-preserving cubic, derivatives taken from the interpolant.
    pub fn from_samples(x2: Vec<f64>, v1: Vec<f64>) -> Result<Self> {
        if x2.len() < 9 {
            return Err(Error::InvalidSamples(format!(
                "profile table needs at least 9 points, got {}",
                x2.len()
            )));
        }
        let (lo, hi) = (x2[0], *x2.last().unwrap());
        if lo.abs() > 1e-9 || (hi - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSamples(
                "profile samples must span [0, 1]".into(),
            ));
        }
        let interp = Arc::new(MonotoneCubic::new(x2, v1).map_err(Error::InvalidSamples)?);
        let i1 = interp.clone();
        let i2 = interp.clone();
        let i3 = interp;
        Self::from_closures(
            Arc::new(move |x| i1.eval(x)),
            Arc::new(move |x| i2.deriv(x)),
            Some(Arc::new(move |x| i3.second_deriv(x))),
        )
    }

    /// Profile from analytic closures for `v1`, `v1'`, and optionally `v1''`.
    pub fn from_closures(
        v1m: Evaluator,
        dv1m: Evaluator,
        d2v1m: Option<Evaluator>,
    ) -> Result<Self> {
        // positivity on a dense sample grid
        let mut min_v = f64::INFINITY;
        let mut min_at = 0.0;
        for i in 0..=4000 {
            let x = i as f64 / 4000.0;
            let v = v1m(x);
            if v < min_v {
                min_v = v;
                min_at = x;
            }
        }
        if min_v <= 0.0 {
            return Err(Error::NonPositiveProfile {
                min_v1: min_v,
                at: min_at,
            });
        }

        let mut warnings = Vec::new();
        let d_lo = dv1m(0.0);
        let d_hi = dv1m(1.0);
        let sign_condition_ok = d_lo <= 0.0 && d_hi >= 0.0;
        if !sign_condition_ok {
            warnings.push(format!(
                "sign condition violated: v1'(0) = {d_lo:.6e}, v1'(1) = {d_hi:.6e}; \
                 proceeding with the extended vorticity function, bounds 0 <= phi <= c \
                 are not guaranteed"
            ));
        }

        let cum = cumulative_simpson_fn(|x| v1m(x), 0.0, 1.0, CUM_CELLS);
        let c = *cum.last().unwrap();
        let coarse = simpson_fn(|x| v1m(x), 0.0, 1.0, CUM_CELLS / 2);
        let c_error_estimate = (c - coarse).abs() / 15.0;

        for w in cum.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidSamples(
                    "cumulative stream function is not strictly increasing".into(),
                ));
            }
        }

        Ok(Self {
            v1m,
            dv1m,
            d2v1m,
            c,
            c_error_estimate,
            sign_condition_ok,
            warnings,
            cum,
        })
    }

    pub fn v1(&self, x2: f64) -> f64 {
        (self.v1m)(x2)
    }

    pub fn dv1(&self, x2: f64) -> f64 {
        (self.dv1m)(x2)
    }

    pub fn d2v1(&self, x2: f64) -> Option<f64> {
        self.d2v1m.as_ref().map(|f| f(x2))
    }

    /// Cumulative stream function `phi^-(x2)`: table lookup plus a partial
    /// cell closing Simpson rule, accurate to the table's own order.
    pub fn cumulative(&self, x2: f64) -> f64 {
        let x2 = x2.clamp(0.0, 1.0);
        let h = 1.0 / CUM_CELLS as f64;
        let i = ((x2 * CUM_CELLS as f64).floor() as usize).min(CUM_CELLS - 1);
        let x0 = i as f64 * h;
        self.cum[i] + partial_cell_simpson(|x| (self.v1m)(x), x0, x2)
    }

    /// Monotone inverse of the cumulative stream function: the unique height
    /// `x2` with `phi^-(x2) = phi`. Bracketed root find to 1e-12 in `x2`.
    pub fn kappa(&self, phi: f64) -> Result<f64> {
        let c = self.c;
        let slack = 1e-12 * c.max(1.0);
        if phi < -slack || phi > c + slack {
            return Err(Error::OutOfRange { value: phi, c });
        }
        let phi = phi.clamp(0.0, c);
        if phi == 0.0 {
            return Ok(0.0);
        }
        if phi == c {
            return Ok(1.0);
        }
        // bracket by binary search on the table, then solve in the cell
        let i = locate_cell(&self.cum, phi);
        let h = 1.0 / CUM_CELLS as f64;
        let a = i as f64 * h;
        let b = a + h;
        let base = self.cum[i];
        let g = |x: f64| base + partial_cell_simpson(|t| (self.v1m)(t), a, x) - phi;
        let root = brent(g, a, b, KAPPA_XTOL, 0.0, 200).ok_or(Error::BracketFailure {
            context: "kappa cell bracket lost its sign change".into(),
        })?;
        Ok(root.x)
    }
}

/// Derivative of the vorticity function via `f' = v1''(kappa) / v1(kappa)`.
///
/// Cross-check quantity only; the solvers never differentiate `f`.
pub fn f_prime(profile: &IncomingProfile, phi: f64) -> Result<f64> {
    if profile.d2v1m.is_none() {
        return Err(Error::MissingSecondDerivative);
    }
    let x2 = profile.kappa(phi)?;
    let d2 = profile.d2v1(x2).unwrap();
    Ok(d2 / profile.v1(x2))
}

/// The local vorticity function, its constant Lipschitz extension, and the
/// pressure primitive, packaged for the slice solvers.
pub struct VorticitySource {
    f: Evaluator,
    /// Mass flux; `f` lives on `[0, c]`.
    pub c: f64,
    /// Lipschitz constant estimate of the extended function.
    pub lip: f64,
    /// Supremum of the extended function.
    pub sup: f64,
    f0: f64,
    fc: f64,
    fcum: Vec<f64>,
}

impl std::fmt::Debug for VorticitySource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VorticitySource")
            .field("c", &self.c)
            .field("lip", &self.lip)
            .field("sup", &self.sup)
            .field("f0", &self.f0)
            .field("fc", &self.fc)
            .finish_non_exhaustive()
    }
}

impl VorticitySource {
    /// Vorticity data of an incoming profile: `f = v1' \circ kappa`.
    pub fn from_profile(profile: &IncomingProfile) -> Result<Self> {
        let c = profile.c;
        // capture the pieces needed by the closure
        let cum = profile.cum.clone();
        let v1m = profile.v1m.clone();
        let dv1m = profile.dv1m.clone();
        let f: Evaluator = Arc::new(move |phi: f64| {
            let phi = phi.clamp(0.0, c);
            let x2 = kappa_raw(&cum, &v1m, c, phi);
            dv1m(x2)
        });

        // Lipschitz estimate from f' = v1''(kappa) / v1(kappa) where second
        // derivatives exist, otherwise from centered differences of f.
        let samples = 800;
        let mut lip: f64 = 0.0;
        if profile.d2v1m.is_some() {
            for i in 0..=samples {
                let phi = c * i as f64 / samples as f64;
                lip = lip.max(f_prime(profile, phi)?.abs());
            }
        } else {
            let h = c / 2000.0;
            for i in 1..2000 {
                let phi = c * i as f64 / 2000.0;
                lip = lip.max(((f(phi + h) - f(phi - h)) / (2.0 * h)).abs());
            }
        }
        Ok(Self::assemble(f, c, lip))
    }

    /// Source built directly from a closure on `[0, c]`; the Lipschitz
    /// constant is estimated by centered differences.
    pub fn from_fn<F>(f: F, c: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        assert!(c > 0.0, "mass flux must be positive");
        let f: Evaluator = Arc::new(f);
        let h = c / 4000.0;
        let mut lip: f64 = 0.0;
        for i in 1..4000 {
            let phi = c * i as f64 / 4000.0;
            lip = lip.max(((f(phi + h) - f(phi - h)) / (2.0 * h)).abs());
        }
        Self::assemble(f, c, lip)
    }

    fn assemble(f: Evaluator, c: f64, lip: f64) -> Self {
        let mut sup: f64 = 0.0;
        for i in 0..=2000 {
            let phi = c * i as f64 / 2000.0;
            sup = sup.max(f(phi).abs());
        }
        let fcum = cumulative_simpson_fn(|z| f(z), 0.0, c, SOURCE_CELLS);
        let f0 = f(0.0);
        let fc = f(c);
        Self {
            f,
            c,
            lip,
            sup,
            f0,
            fc,
            fcum,
        }
    }

    /// `f` restricted to `[0, c]` (argument clamped).
    pub fn f_at(&self, phi: f64) -> f64 {
        (self.f)(phi.clamp(0.0, self.c))
    }

    /// Constant Lipschitz extension of `f` to the whole line.
    pub fn fhat(&self, t: f64) -> f64 {
        if t <= 0.0 {
            self.f0
        } else if t >= self.c {
            self.fc
        } else {
            (self.f)(t)
        }
    }

    /// Whether `f(0) <= 0 <= f(c)` holds.
    pub fn sign_condition_ok(&self) -> bool {
        self.f0 <= 0.0 && self.fc >= 0.0
    }

    /// Pressure primitive `F(phi) = int_0^phi f`, normalized to `F(0) = 0`.
    pub fn pressure_primitive(&self, phi: f64) -> f64 {
        let phi = phi.clamp(0.0, self.c);
        let h = self.c / SOURCE_CELLS as f64;
        let i = ((phi / h).floor() as usize).min(SOURCE_CELLS - 1);
        let z0 = i as f64 * h;
        self.fcum[i] + partial_cell_simpson(|z| (self.f)(z), z0, phi)
    }

    /// Prefix-integral table of `f` on the uniform grid over `[0, c]`.
    pub fn fcum_table(&self) -> (&[f64], f64) {
        (&self.fcum, self.c / SOURCE_CELLS as f64)
    }
}

/// Table-based kappa used inside the vorticity closure (no error path: the
/// argument is already clamped to `[0, c]`).
fn kappa_raw(cum: &[f64], v1m: &Evaluator, c: f64, phi: f64) -> f64 {
    if phi <= 0.0 {
        return 0.0;
    }
    if phi >= c {
        return 1.0;
    }
    let cells = cum.len() - 1;
    let i = locate_cell(cum, phi);
    let h = 1.0 / cells as f64;
    let a = i as f64 * h;
    let b = a + h;
    let base = cum[i];
    let g = |x: f64| base + partial_cell_simpson(|t| v1m(t), a, x) - phi;
    match brent(g, a, b, KAPPA_XTOL, 0.0, 200) {
        Some(root) => root.x,
        None => a + h * (phi - base) / (cum[i + 1] - base),
    }
}
