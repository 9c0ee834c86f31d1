//! Direct slice solver through the height-map transform.
//!
//! Exchanging the roles of height and stream value turns the slice problem
//! into a first-integrable ODE for the inverse height map `Phi(z2)`:
//! its derivative is `psi = (2 alpha1 Fcum(z2) + beta)^(-1/2)` with a scalar
//! normalization constant `beta` fixed by `Phi(c) = 1`. One root find and two
//! one-dimensional quadratures therefore produce a slice directly, with no
//! iteration, and the implicit-function derivative of `beta` with respect to
//! `alpha1` yields the horizontal sensitivity `dPhi/dz1` in closed form.

use crate::error::{Error, Result};
use crate::numerics::{brent, cubic4_uniform, cumulative_simpson_table, locate_cell};
use crate::profiles::VorticitySource;
use crate::slice::{uniform_grid, SliceMethod, SliceSolution};

/// Inverse-height-map tables for one abscissa (one value of `alpha1`).
#[derive(Debug, Clone)]
pub struct LagrangeSlice {
    pub alpha1: f64,
    /// Normalization constant: the unique root of `G(alpha1, beta) = 1`.
    pub beta: f64,
    pub c: f64,
    /// Spacing of the uniform `z2` grid over `[0, c]`.
    h: f64,
    /// Prefix integral of the vorticity function on the `z2` grid.
    fcum: Vec<f64>,
    /// `psi = dPhi/dz2` at the grid nodes.
    pub psi: Vec<f64>,
    /// The height map `Phi` at the grid nodes (strictly increasing, 0 to 1).
    pub height: Vec<f64>,
    /// Implicit-function derivative `d beta / d alpha1`.
    pub dbeta_dalpha1: f64,
    /// Cumulative sensitivity `dPhi/d alpha1` at the grid nodes; multiply by
    /// `(s^2)'(z1)` to obtain `dPhi/dz1`.
    factor: Vec<f64>,
}

/// Normalization integral `G(alpha1, beta) = int_0^c (2 alpha1 Fcum + beta)^(-1/2)`
/// evaluated with the same cumulative weights used for the height map, so the
/// root of `G = 1` makes the tabulated `Phi(c)` hit 1 to the same tolerance.
fn normalization_integral(alpha1: f64, fcum: &[f64], h: f64, beta: f64) -> f64 {
    let integrand: Vec<f64> = fcum
        .iter()
        .map(|&fc| 1.0 / (2.0 * alpha1 * fc + beta).sqrt())
        .collect();
    *cumulative_simpson_table(&integrand, h).last().unwrap()
}

/// Solves `G(alpha1, beta) = 1` for the normalization constant.
///
/// `G` is strictly decreasing in `beta`; the lower bracket sits just above
/// the radicand-positivity threshold, the upper bracket is doubled until
/// `G < 1`.
pub fn solve_beta(alpha1: f64, src: &VorticitySource, tol: f64) -> Result<f64> {
    assert!(alpha1 > 0.0 && src.c > 0.0);
    let (fcum, h) = src.fcum_table();
    let min_fcum = fcum.iter().cloned().fold(f64::INFINITY, f64::min);
    let floor = -2.0 * alpha1 * min_fcum;
    let beta_lo = floor + 1e-12 * (1.0 + floor.abs());
    let g_lo = normalization_integral(alpha1, fcum, h, beta_lo);
    if g_lo < 1.0 {
        // cannot occur for bounded f: the integrand blows up at the radicand
        // floor; guarded anyway
        return Err(Error::BracketFailure {
            context: format!(
                "normalization integral already below 1 at the radicand floor (G = {g_lo:.6e})"
            ),
        });
    }
    let mut beta_hi = (src.c * src.c).max(beta_lo + 1.0);
    let mut guard = 0;
    while normalization_integral(alpha1, fcum, h, beta_hi) >= 1.0 {
        beta_hi = beta_lo + 2.0 * (beta_hi - beta_lo);
        guard += 1;
        if guard > 200 {
            return Err(Error::BracketFailure {
                context: "normalization upper bracket failed to push G below 1".into(),
            });
        }
    }
    let root = brent(
        |b| normalization_integral(alpha1, fcum, h, b) - 1.0,
        beta_lo,
        beta_hi,
        1e-15 * (1.0 + beta_hi.abs()),
        tol,
        200,
    )
    .ok_or(Error::BracketFailure {
        context: "normalization bracket lost its sign change".into(),
    })?;
    Ok(root.x)
}

impl LagrangeSlice {
    /// Builds the slice tables for a given `alpha1 = s^2(z1)`.
    pub fn build(alpha1: f64, src: &VorticitySource, beta_tol: f64) -> Result<Self> {
        let beta = solve_beta(alpha1, src, beta_tol)?;
        let (fcum_ref, h) = src.fcum_table();
        let fcum = fcum_ref.to_vec();

        let mut psi = Vec::with_capacity(fcum.len());
        for &fc in &fcum {
            let radicand = 2.0 * alpha1 * fc + beta;
            if radicand <= 0.0 {
                return Err(Error::InversionFailure);
            }
            psi.push(1.0 / radicand.sqrt());
        }
        let height = cumulative_simpson_table(&psi, h);

        // implicit-function derivative of beta:
        //   dG/dalpha1 = -int Fcum R^(-3/2),  dG/dbeta = -(1/2) int R^(-3/2)
        let r32: Vec<f64> = psi.iter().map(|&p| p * p * p).collect();
        let prod: Vec<f64> = fcum.iter().zip(&r32).map(|(&fc, &r)| fc * r).collect();
        let dg_dalpha1 = -*cumulative_simpson_table(&prod, h).last().unwrap();
        let dg_dbeta = -0.5 * *cumulative_simpson_table(&r32, h).last().unwrap();
        let dbeta_dalpha1 = -dg_dalpha1 / dg_dbeta;

        let integrand: Vec<f64> = fcum
            .iter()
            .zip(&r32)
            .map(|(&fc, &r)| -0.5 * (2.0 * fc + dbeta_dalpha1) * r)
            .collect();
        let factor = cumulative_simpson_table(&integrand, h);

        Ok(Self {
            alpha1,
            beta,
            c: src.c,
            h,
            fcum,
            psi,
            height,
            dbeta_dalpha1,
            factor,
        })
    }

    /// Prefix integral of `f` at an arbitrary stream value (interpolated).
    pub fn fcum_at(&self, z: f64) -> f64 {
        cubic4_uniform(&self.fcum, 0.0, self.h, z.clamp(0.0, self.c))
    }

    /// `psi(z2)` from the closed formula with the interpolated prefix table.
    pub fn psi_at(&self, z: f64) -> f64 {
        1.0 / (2.0 * self.alpha1 * self.fcum_at(z) + self.beta).sqrt()
    }

    /// Height map at an arbitrary stream value (interpolated).
    pub fn height_at(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        cubic4_uniform(&self.height, 0.0, self.h, z.min(self.c))
    }

    /// Sensitivity `dPhi/d alpha1` at an arbitrary stream value.
    pub fn sensitivity_at(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        cubic4_uniform(&self.factor, 0.0, self.h, z.min(self.c))
    }

    /// Integrand of the sensitivity: `d/dz2 (dPhi/d alpha1)`.
    pub fn sensitivity_deriv_at(&self, z: f64) -> f64 {
        let fc = self.fcum_at(z);
        let psi = 1.0 / (2.0 * self.alpha1 * fc + self.beta).sqrt();
        -0.5 * (2.0 * fc + self.dbeta_dalpha1) * psi * psi * psi
    }

    /// Horizontal derivative table `dPhi/dz1` for a given `(s^2)'` value.
    pub fn dphi_dz1(&self, dalpha1: f64) -> Vec<f64> {
        self.factor.iter().map(|&f| f * dalpha1).collect()
    }

    /// Number of cells in the `z2` tables.
    pub fn cells(&self) -> usize {
        self.height.len() - 1
    }

    /// Inverts the height map onto a uniform `y2` grid, producing a slice
    /// solution: `phi(y2) = z2` with `Phi(z2) = y2`, `dphi = 1/psi`, and the
    /// second derivative from the slice equation itself.
    pub fn invert_to_slice(
        &self,
        src: &VorticitySource,
        y1: f64,
        n_y: usize,
    ) -> Result<SliceSolution> {
        let m = self.cells();
        for j in 0..m {
            if self.height[j + 1] <= self.height[j] {
                return Err(Error::InversionFailure);
            }
        }
        let grid = uniform_grid(n_y);
        let mut phi = Vec::with_capacity(n_y + 1);
        let mut dphi = Vec::with_capacity(n_y + 1);
        let mut d2phi = Vec::with_capacity(n_y + 1);
        for (j, &y) in grid.iter().enumerate() {
            let z = if j == 0 {
                0.0
            } else if j == n_y {
                self.c
            } else {
                let k = locate_cell(&self.height, y);
                let lo = k as f64 * self.h;
                let hi = lo + self.h;
                let root = brent(
                    |z| self.height_at(z) - y,
                    lo,
                    hi,
                    1e-13 * self.c.max(1.0),
                    0.0,
                    200,
                )
                .ok_or(Error::InversionFailure)?;
                root.x
            };
            phi.push(z);
            dphi.push(1.0 / self.psi_at(z));
            d2phi.push(self.alpha1 * src.fhat(z));
        }
        Ok(SliceSolution {
            y1,
            alpha1: self.alpha1,
            grid,
            phi,
            dphi,
            d2phi,
            beta: Some(self.beta),
            method: SliceMethod::Lagrange,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slice::{shooting_solve, sinh_slice_exact, sinh_slice_exact_deriv};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sinh_source() -> VorticitySource {
        VorticitySource::from_fn(|phi| phi - 0.5, 1.0)
    }

    #[test]
    fn zero_vorticity_has_beta_c_squared() {
        for &c in &[0.5, 1.0, 1.7] {
            let src = VorticitySource::from_fn(|_| 0.0, c);
            let ls = LagrangeSlice::build(2.3, &src, 1e-12).unwrap();
            assert!((ls.beta - c * c).abs() < 1e-10 * c * c);
            // psi = 1/c, Phi(z) = z/c
            assert!((ls.psi_at(0.3 * c) - 1.0 / c).abs() < 1e-12);
            assert!((ls.height_at(0.5 * c) - 0.5).abs() < 1e-12);
            assert_eq!(ls.dbeta_dalpha1, 0.0);
            assert!(ls.dphi_dz1(3.0).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn sinh_case_recovers_slope_squared_normalization() {
        // psi(0) = 1/phi'(0) and Fcum(0) = 0 force beta = phi'(0)^2
        let src = sinh_source();
        let ls = LagrangeSlice::build(1.0, &src, 1e-13).unwrap();
        let expected = sinh_slice_exact_deriv(0.0).powi(2); // 1.170673594207792
        assert!(
            (ls.beta - expected).abs() < 1e-9,
            "beta = {}, expected {expected}",
            ls.beta
        );
    }

    #[test]
    fn normalization_integral_is_decreasing_in_beta() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let c: f64 = rng.gen_range(0.5..2.0);
            let a1: f64 = rng.gen_range(0.25..4.0);
            let p: f64 = rng.gen_range(0.1..0.5);
            let theta: f64 = rng.gen_range(0.3..0.7);
            let src = VorticitySource::from_fn(move |phi| p * (phi - theta * c), c);
            let (fcum, h) = src.fcum_table();
            let beta = solve_beta(a1, &src, 1e-12).unwrap();
            for &delta in &[1e-3, 1e-1, 1.0] {
                let g0 = normalization_integral(a1, fcum, h, beta);
                let g1 = normalization_integral(a1, fcum, h, beta + delta);
                assert!(g1 < g0, "G must decrease in beta");
            }
        }
    }

    #[test]
    fn height_map_is_normalized_for_random_sources() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let c: f64 = rng.gen_range(0.5..2.0);
            let a1: f64 = rng.gen_range(0.25..4.0);
            let p: f64 = rng.gen_range(0.1..0.5);
            let q: f64 = rng.gen_range(-0.15..0.15);
            let theta: f64 = rng.gen_range(0.3..0.7);
            let k: f64 = if rng.gen_bool(0.5) { 1.0 } else { 2.0 };
            let src = VorticitySource::from_fn(
                move |phi| {
                    let u = phi / c;
                    p * (phi - theta * c)
                        + q * c * (k * std::f64::consts::PI * u).sin() * u * (1.0 - u)
                },
                c,
            );
            let ls = LagrangeSlice::build(a1, &src, 1e-12).unwrap();
            assert!((ls.height.last().unwrap() - 1.0).abs() <= 1e-11);
            assert_eq!(ls.height[0], 0.0);
            // strictly increasing
            for j in 0..ls.cells() {
                assert!(ls.height[j + 1] > ls.height[j]);
            }
        }
    }

    #[test]
    fn inversion_matches_sinh_closed_form() {
        let src = sinh_source();
        let ls = LagrangeSlice::build(1.0, &src, 1e-13).unwrap();
        let sol = ls.invert_to_slice(&src, 0.0, 400).unwrap();
        let mut err = 0.0f64;
        let mut derr = 0.0f64;
        for (i, &y) in sol.grid.iter().enumerate() {
            err = err.max((sol.phi[i] - sinh_slice_exact(y)).abs());
            derr = derr.max((sol.dphi[i] - sinh_slice_exact_deriv(y)).abs());
        }
        assert!(err <= 1e-8, "max phi error {err}");
        assert!(derr <= 1e-7, "max dphi error {derr}");
        // mid-height symmetry: Phi(c/2) = 1/2
        assert!((ls.height_at(0.5) - 0.5).abs() < 1e-10);
    }

    #[test]
    fn inversion_round_trips_through_the_height_map() {
        let src = sinh_source();
        let ls = LagrangeSlice::build(1.0, &src, 1e-13).unwrap();
        let sol = ls.invert_to_slice(&src, 0.0, 200).unwrap();
        for (i, &y) in sol.grid.iter().enumerate() {
            assert!(
                (ls.height_at(sol.phi[i]) - y).abs() <= 1e-10,
                "round trip failed at node {i}"
            );
        }
    }

    #[test]
    fn psi_matches_inverse_slope_at_matched_points() {
        let src = sinh_source();
        let ls = LagrangeSlice::build(1.0, &src, 1e-13).unwrap();
        let sol = ls.invert_to_slice(&src, 0.0, 200).unwrap();
        for i in 0..=sol.n() {
            let z = sol.phi[i];
            let table_psi = cubic4_uniform(&ls.psi, 0.0, ls.h, z);
            assert!(
                (table_psi * sol.dphi[i] - 1.0).abs() <= 1e-10,
                "psi * dphi != 1 at node {i}"
            );
        }
    }

    #[test]
    fn transformed_equation_residual_is_small() {
        let src = sinh_source();
        let ls = LagrangeSlice::build(1.0, &src, 1e-13).unwrap();
        let m = ls.cells();
        let h = ls.h;
        let mut worst = 0.0f64;
        for j in 1..m {
            let z = j as f64 * h;
            let second = (ls.height[j + 1] - 2.0 * ls.height[j] + ls.height[j - 1]) / (h * h);
            let resid = second + ls.alpha1 * src.f_at(z) * ls.psi[j].powi(3);
            worst = worst.max(resid.abs());
        }
        assert!(worst <= 1e-7, "transformed residual {worst}");
    }

    #[test]
    fn sensitivity_matches_alpha1_finite_difference() {
        let src = sinh_source();
        let a1 = 1.3;
        let ls = LagrangeSlice::build(a1, &src, 1e-13).unwrap();
        let h = 1e-4 * a1;
        let plus = LagrangeSlice::build(a1 + h, &src, 1e-13).unwrap();
        let minus = LagrangeSlice::build(a1 - h, &src, 1e-13).unwrap();
        // dbeta/dalpha1 against the difference quotient
        let fd_beta = (plus.beta - minus.beta) / (2.0 * h);
        assert!(
            (ls.dbeta_dalpha1 - fd_beta).abs() <= 1e-6,
            "dbeta mismatch: {} vs {}",
            ls.dbeta_dalpha1,
            fd_beta
        );
        // dPhi/dalpha1 against differenced height maps
        let mut worst = 0.0f64;
        for j in 0..=ls.cells() {
            let fd = (plus.height[j] - minus.height[j]) / (2.0 * h);
            worst = worst.max((ls.factor[j] - fd).abs());
        }
        assert!(worst <= 1e-6, "sensitivity mismatch {worst}");
    }

    #[test]
    fn sensitivity_vanishes_for_zero_vorticity_and_flat_walls() {
        let src = sinh_source();
        let ls = LagrangeSlice::build(1.0, &src, 1e-12).unwrap();
        // flat wall region: (s^2)' = 0 kills dPhi/dz1 regardless of f
        assert!(ls.dphi_dz1(0.0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sensitivity_respects_the_decay_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10 {
            let c: f64 = rng.gen_range(0.5..2.0);
            let a1: f64 = rng.gen_range(0.25..4.0);
            let p: f64 = rng.gen_range(0.1..0.5);
            let theta: f64 = rng.gen_range(0.3..0.7);
            let src = VorticitySource::from_fn(move |phi| p * (phi - theta * c), c);
            let ls = LagrangeSlice::build(a1, &src, 1e-12).unwrap();
            let max_psi = ls.psi.iter().cloned().fold(0.0f64, f64::max);
            let bound = (c / 2.0) * (2.0 * c * src.sup + ls.dbeta_dalpha1.abs()) * max_psi.powi(3);
            let max_factor = ls.factor.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            assert!(
                max_factor <= bound * (1.0 + 1e-9) + 1e-15,
                "decay bound violated: {max_factor} > {bound}"
            );
        }
    }

    #[test]
    fn inversion_agrees_with_shooting() {
        let src = VorticitySource::from_fn(|phi| 0.4 * (phi - 0.3), 1.2);
        let a1 = 2.0;
        let ls = LagrangeSlice::build(a1, &src, 1e-13).unwrap();
        let direct = ls.invert_to_slice(&src, 0.0, 400).unwrap();
        let shot = shooting_solve(a1, &src, 400, 1e-12).unwrap().solution;
        let mut worst = 0.0f64;
        for i in 0..=400 {
            worst = worst.max((direct.phi[i] - shot.phi[i]).abs());
        }
        assert!(worst <= 1e-6, "cross-method deviation {worst}");
    }
}
