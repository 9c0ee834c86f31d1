//! Per-slice solvers for the two-point boundary value problem
//! `rho'' = alpha1 * fhat(rho)`, `rho(0) = 0`, `rho(1) = c`.
//!
//! Two independent routes live here: fixed-point iteration on the Green's
//! kernel integral equation (with under-relaxation, since the operator is
//! not a contraction for large `alpha1 * lip`), and a shooting oracle that
//! integrates the ODE with RK4 and brackets the initial slope. The direct
//! quadrature route is in [`crate::lagrange`].

use crate::error::{Error, Result};
use crate::numerics::{brent, cumulative_simpson_table, rk4_step};
use crate::profiles::VorticitySource;

/// Which solver produced a slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum SliceMethod {
    Picard,
    Shooting,
    Lagrange,
}

/// One-dimensional solution on a uniform vertical grid.
#[derive(Debug, Clone)]
pub struct SliceSolution {
    pub y1: f64,
    /// Squared cross-section width at this abscissa.
    pub alpha1: f64,
    /// Uniform grid on `[0, 1]`, `n + 1` nodes.
    pub grid: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub d2phi: Vec<f64>,
    /// Normalization constant of the height-map route, when known.
    pub beta: Option<f64>,
    pub method: SliceMethod,
}

impl SliceSolution {
    pub fn n(&self) -> usize {
        self.grid.len() - 1
    }

    /// Smallest vertical derivative on the slice (the per-slice `gamma`).
    pub fn min_dphi(&self) -> f64 {
        self.dphi.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

pub fn uniform_grid(n: usize) -> Vec<f64> {
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

/// Green's kernel of `d^2/dy^2` with zero boundary data on `[0, 1]`:
/// `xi (y2 - 1)` below the diagonal, `y2 (xi - 1)` above.
pub fn green_kernel(xi: f64, y2: f64) -> f64 {
    if xi <= y2 {
        xi * (y2 - 1.0)
    } else {
        y2 * (xi - 1.0)
    }
}

/// Output of the integral operator: values together with the first and
/// second derivatives from the differentiated kernel formulas.
#[derive(Debug, Clone)]
pub struct OperatorOutput {
    pub value: Vec<f64>,
    pub deriv: Vec<f64>,
    pub second: Vec<f64>,
}

impl OperatorOutput {
    /// Discrete C^2 norm: `sup|T| + sup|T'| + sup|T''|` over the nodes.
    pub fn c2_norm(&self) -> f64 {
        sup_abs(&self.value) + sup_abs(&self.deriv) + sup_abs(&self.second)
    }
}

fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Applies `(T rho)(y2) = alpha1 * int_0^1 G(xi, y2) fhat(rho(xi)) dxi + c y2`
/// on the uniform grid carrying `rho`.
///
/// The integral is split at the kernel kink `xi = y2`: with prefix tables
/// `A(y) = int_0^y xi g` and `B(y) = int_y^1 (xi - 1) g` for `g = fhat(rho)`,
/// the two kernel branches integrate to `(y-1) A(y) + y B(y)`, each branch a
/// smooth integrand handled by cumulative Simpson. The same tables give
/// `(T rho)' = alpha1 (A + B) + c` and `(T rho)'' = alpha1 g` directly.
pub fn apply_integral_operator(rho: &[f64], alpha1: f64, src: &VorticitySource) -> OperatorOutput {
    let n = rho.len() - 1;
    let h = 1.0 / n as f64;
    let c = src.c;
    let g: Vec<f64> = rho.iter().map(|&r| src.fhat(r)).collect();
    let below: Vec<f64> = (0..=n).map(|i| i as f64 * h * g[i]).collect();
    let above: Vec<f64> = (0..=n).map(|i| (i as f64 * h - 1.0) * g[i]).collect();
    let a = cumulative_simpson_table(&below, h);
    let b_prefix = cumulative_simpson_table(&above, h);
    let b_total = *b_prefix.last().unwrap();

    let mut value = Vec::with_capacity(n + 1);
    let mut deriv = Vec::with_capacity(n + 1);
    let mut second = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let y = i as f64 * h;
        let b = b_total - b_prefix[i];
        value.push(alpha1 * ((y - 1.0) * a[i] + y * b) + c * y);
        deriv.push(alpha1 * (a[i] + b) + c);
        second.push(alpha1 * g[i]);
    }
    OperatorOutput {
        value,
        deriv,
        second,
    }
}

/// Default under-relaxation factor: full steps while the operator's C^2
/// Lipschitz factor `(13/8) alpha1 lip` stays below 0.9, damped otherwise.
pub fn default_relaxation(alpha1: f64, lip: f64) -> f64 {
    let l = 13.0 / 8.0 * alpha1 * lip;
    if l <= 0.9 {
        1.0
    } else {
        0.9 / l
    }
}

/// Diagnostics of a fixed-point solve.
#[derive(Debug, Clone, Copy)]
pub struct PicardDiagnostics {
    pub iterations: usize,
    /// Largest discrete C^2 norm over all iterates (membership in the
    /// invariant set `M`).
    pub max_iterate_c2: f64,
    /// Final sup-norm update between consecutive iterates.
    pub final_update: f64,
    pub relaxation: f64,
}

/// Solves the slice problem by relaxed fixed-point iteration starting from
/// the straight profile `c * y2`.
pub fn picard_solve(
    alpha1: f64,
    src: &VorticitySource,
    n: usize,
    relax: Option<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(SliceSolution, PicardDiagnostics)> {
    assert!(n >= 50, "grid too coarse for the slice solver");
    let r = relax.unwrap_or_else(|| default_relaxation(alpha1, src.lip));
    assert!(r > 0.0 && r <= 1.0, "relaxation factor must lie in (0, 1]");
    let c = src.c;
    let grid = uniform_grid(n);

    let mut rho: Vec<f64> = grid.iter().map(|&y| c * y).collect();
    let mut drho: Vec<f64> = vec![c; n + 1];
    let mut d2rho: Vec<f64> = vec![0.0; n + 1];
    let mut max_c2 = sup_abs(&rho) + sup_abs(&drho) + sup_abs(&d2rho);

    let mut update = f64::INFINITY;
    for iter in 1..=max_iter {
        let out = apply_integral_operator(&rho, alpha1, src);
        update = 0.0f64;
        for i in 0..=n {
            let next = (1.0 - r) * rho[i] + r * out.value[i];
            update = update.max((next - rho[i]).abs());
            rho[i] = next;
            drho[i] = (1.0 - r) * drho[i] + r * out.deriv[i];
            d2rho[i] = (1.0 - r) * d2rho[i] + r * out.second[i];
        }
        max_c2 = max_c2.max(sup_abs(&rho) + sup_abs(&drho) + sup_abs(&d2rho));
        if update <= tol {
            // settle on the operator image of the converged iterate so the
            // boundary values are exact and the derivatives consistent
            let out = apply_integral_operator(&rho, alpha1, src);
            let d2 = out
                .value
                .iter()
                .map(|&p| alpha1 * src.fhat(p))
                .collect::<Vec<_>>();
            let solution = SliceSolution {
                y1: 0.0,
                alpha1,
                grid,
                phi: out.value,
                dphi: out.deriv,
                d2phi: d2,
                beta: None,
                method: SliceMethod::Picard,
            };
            let diag = PicardDiagnostics {
                iterations: iter,
                max_iterate_c2: max_c2,
                final_update: update,
                relaxation: r,
            };
            return Ok((solution, diag));
        }
    }
    Err(Error::NoConvergence {
        max_iter,
        residual: update,
    })
}

/// Result of a shooting solve, with the converged initial slope.
#[derive(Debug, Clone)]
pub struct ShootingResult {
    pub solution: SliceSolution,
    /// Initial slope `rho'(0)`.
    pub slope: f64,
    /// Endpoint mismatch `|rho(1) - c|` before the boundary value is pinned.
    pub endpoint_residual: f64,
}

/// Minimum number of RK4 steps across the slice.
const MIN_SHOOTING_STEPS: usize = 2000;

/// Solves the slice problem by shooting: integrate from `(0, m)` with RK4
/// and bracket the slope `m` on the endpoint mismatch.
pub fn shooting_solve(
    alpha1: f64,
    src: &VorticitySource,
    n: usize,
    tol: f64,
) -> Result<ShootingResult> {
    let c = src.c;
    let per_cell = MIN_SHOOTING_STEPS.div_ceil(n);
    let endpoint = |m: f64| integrate(alpha1, src, n, per_cell, m, None) - c;

    // |rho(1) - m| <= alpha1 * sup / 2, so this bracket always straddles;
    // the doubling expansion is a guard for degenerate inputs.
    let margin = 0.5 * alpha1 * src.sup + 1.0;
    let mut lo = c - margin;
    let mut hi = c + margin;
    let mut flo = endpoint(lo);
    let fhi = endpoint(hi);
    if flo * fhi > 0.0 {
        let cap = (1 << 20) as f64 * c.max(1.0);
        let mut width = hi - lo;
        loop {
            width *= 2.0;
            if width > cap {
                return Err(Error::BracketFailure {
                    context: format!(
                        "shooting slope bracket expanded past {cap:.3e} without a sign change"
                    ),
                });
            }
            lo = c - width;
            hi = c + width;
            flo = endpoint(lo);
            if flo * endpoint(hi) <= 0.0 {
                break;
            }
        }
    }
    let _ = flo;
    let root = brent(endpoint, lo, hi, 1e-15, tol, 200).ok_or(Error::BracketFailure {
        context: "shooting bracket lost its sign change".into(),
    })?;
    let m = root.x;

    let mut phi = Vec::with_capacity(n + 1);
    let mut dphi = Vec::with_capacity(n + 1);
    let end = integrate(alpha1, src, n, per_cell, m, Some((&mut phi, &mut dphi)));
    let endpoint_residual = (end - c).abs();
    // the endpoint is the boundary condition; pin it exactly
    phi[n] = c;
    let d2phi = phi.iter().map(|&p| alpha1 * src.fhat(p)).collect();
    Ok(ShootingResult {
        solution: SliceSolution {
            y1: 0.0,
            alpha1,
            grid: uniform_grid(n),
            phi,
            dphi,
            d2phi,
            beta: None,
            method: SliceMethod::Shooting,
        },
        slope: m,
        endpoint_residual,
    })
}

/// RK4 sweep across the slice; optionally records node values. Returns the
/// terminal value `rho(1)`.
fn integrate(
    alpha1: f64,
    src: &VorticitySource,
    n: usize,
    per_cell: usize,
    m: f64,
    mut record: Option<(&mut Vec<f64>, &mut Vec<f64>)>,
) -> f64 {
    let rhs = |_t: f64, s: [f64; 2]| [s[1], alpha1 * src.fhat(s[0])];
    let h = 1.0 / (n * per_cell) as f64;
    let mut state = [0.0, m];
    if let Some((phi, dphi)) = record.as_mut() {
        phi.clear();
        dphi.clear();
        phi.push(state[0]);
        dphi.push(state[1]);
    }
    for i in 0..n {
        for k in 0..per_cell {
            let t = (i * per_cell + k) as f64 * h;
            state = rk4_step(&rhs, t, state, h);
        }
        if let Some((phi, dphi)) = record.as_mut() {
            phi.push(state[0]);
            dphi.push(state[1]);
        }
    }
    state[0]
}

/// Verification report of one slice against the structural properties of
/// the boundary value problem.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SliceReport {
    /// `phi(0) = 0` and `phi(1) = c`, bit-exact.
    pub boundary_exact: bool,
    /// `0 <= phi <= c` at all nodes (round-off slack).
    pub bounds_ok: bool,
    /// `0 < phi < c` strictly at interior nodes.
    pub interior_strict: bool,
    /// `dphi > 0` at all nodes.
    pub monotone: bool,
    /// `dphi(0) > 0` and `dphi(1) > 0`.
    pub endpoints_nondegenerate: bool,
    /// Smallest vertical derivative.
    pub gamma: f64,
    /// `max |d2phi - alpha1 fhat(phi)|`.
    pub residual_max: f64,
    pub residual_ok: bool,
    /// Discrete Lipschitz seminorm of `d2phi`.
    pub second_deriv_lipschitz: f64,
    /// Seminorm stays below `alpha1 lip ((13/8) alpha1 sup + 2c)`.
    pub lipschitz_bound_ok: bool,
    pub all_pass: bool,
}

/// Checks the slice invariants; `tol` scales the equation-residual gate
/// `residual_max <= tol * (1 + alpha1 * sup|fhat|)`.
pub fn check_slice(sol: &SliceSolution, src: &VorticitySource, tol: f64) -> SliceReport {
    let n = sol.n();
    let c = src.c;
    let slack = 1e-12 * c.max(1.0);

    let boundary_exact = sol.phi[0] == 0.0 && sol.phi[n] == c;
    let bounds_ok = sol.phi.iter().all(|&p| p >= -slack && p <= c + slack);
    let interior_strict = sol.phi[1..n].iter().all(|&p| p > 0.0 && p < c);
    let monotone = sol.dphi.iter().all(|&d| d > 0.0);
    let endpoints_nondegenerate = sol.dphi[0] > 0.0 && sol.dphi[n] > 0.0;
    let gamma = sol.min_dphi();

    let mut residual_max = 0.0f64;
    for i in 0..=n {
        residual_max = residual_max.max((sol.d2phi[i] - sol.alpha1 * src.fhat(sol.phi[i])).abs());
    }
    let residual_ok = residual_max <= tol * (1.0 + sol.alpha1 * src.sup);

    let h = 1.0 / n as f64;
    let mut lip_seminorm = 0.0f64;
    for i in 0..n {
        lip_seminorm = lip_seminorm.max((sol.d2phi[i + 1] - sol.d2phi[i]).abs() / h);
    }
    let lip_bound = sol.alpha1 * src.lip * (13.0 / 8.0 * sol.alpha1 * src.sup + 2.0 * c);
    let lipschitz_bound_ok = lip_seminorm <= lip_bound * (1.0 + 1e-9) + 1e-12;

    let all_pass = boundary_exact
        && bounds_ok
        && interior_strict
        && monotone
        && endpoints_nondegenerate
        && residual_ok
        && lipschitz_bound_ok;
    SliceReport {
        boundary_exact,
        bounds_ok,
        interior_strict,
        monotone,
        endpoints_nondegenerate,
        gamma,
        residual_max,
        residual_ok,
        second_deriv_lipschitz: lip_seminorm,
        lipschitz_bound_ok,
        all_pass,
    }
}

/// Closed-form slice for `fhat(phi) = phi - 1/2`, `alpha1 = 1`, `c = 1`:
/// `phi(y) = 1/2 + sinh(y - 1/2) / (2 sinh(1/2))`. Test oracle.
pub fn sinh_slice_exact(y: f64) -> f64 {
    0.5 + (y - 0.5).sinh() / (2.0 * 0.5f64.sinh())
}

/// Derivative of [`sinh_slice_exact`].
pub fn sinh_slice_exact_deriv(y: f64) -> f64 {
    (y - 0.5).cosh() / (2.0 * 0.5f64.sinh())
}
