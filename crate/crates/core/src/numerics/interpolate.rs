//! Interpolation: monotone cubic (Fritsch–Carlson) for tabulated inputs,
//! four-point Lagrange on uniform tables, and a C¹ bicubic Hermite patch
//! for two-dimensional field sampling.

/// Index of the cell containing `x` in a sorted node array (clamped).
pub fn locate_cell(nodes: &[f64], x: f64) -> usize {
    let n = nodes.len();
    debug_assert!(n >= 2);
    if x <= nodes[0] {
        return 0;
    }
    if x >= nodes[n - 1] {
        return n - 2;
    }
    let mut lo = 0;
    let mut hi = n - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if nodes[mid] <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Shape-preserving piecewise-cubic interpolant of tabulated data.
///
/// Slopes follow the Fritsch–Carlson construction, so monotone data yields a
/// monotone interpolant and the curve never overshoots local extrema. The
/// first derivative is continuous; the second derivative is the piecewise
/// derivative of the local cubic (left limit at interior knots).
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self, String> {
        if x.len() != y.len() {
            return Err("coordinate and value arrays differ in length".into());
        }
        if x.len() < 3 {
            return Err("need at least three samples".into());
        }
        for w in x.windows(2) {
            if w[1] <= w[0] {
                return Err("sample abscissae must be strictly increasing".into());
            }
        }
        let n = x.len();
        let h: Vec<f64> = (0..n - 1).map(|i| x[i + 1] - x[i]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] <= 0.0 {
                d[i] = 0.0;
            } else {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        d[0] = edge_slope(h[0], h[1], delta[0], delta[1]);
        d[n - 1] = edge_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        Ok(Self { x, y, d })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().unwrap())
    }

    fn cell(&self, x: f64) -> (usize, f64, f64) {
        let i = locate_cell(&self.x, x);
        let h = self.x[i + 1] - self.x[i];
        let t = (x - self.x[i]) / h;
        (i, h, t)
    }

    /// Interpolant value; clamps to the data range outside the samples.
    pub fn eval(&self, x: f64) -> f64 {
        let (i, h, t) = self.cell(x);
        let (h00, h10, h01, h11) = hermite_basis(t);
        self.y[i] * h00 + h * self.d[i] * h10 + self.y[i + 1] * h01 + h * self.d[i + 1] * h11
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let (i, h, t) = self.cell(x);
        let (g00, g10, g01, g11) = hermite_basis_deriv(t);
        (self.y[i] * g00 + h * self.d[i] * g10 + self.y[i + 1] * g01 + h * self.d[i + 1] * g11) / h
    }

    pub fn second_deriv(&self, x: f64) -> f64 {
        let (i, h, t) = self.cell(x);
        let s00 = 12.0 * t - 6.0;
        let s10 = 6.0 * t - 4.0;
        let s01 = -12.0 * t + 6.0;
        let s11 = 6.0 * t - 2.0;
        (self.y[i] * s00 + h * self.d[i] * s10 + self.y[i + 1] * s01 + h * self.d[i + 1] * s11)
            / (h * h)
    }
}

fn edge_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    // one-sided three-point estimate with the usual shape clamps
    let mut s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if s * d0 <= 0.0 {
        s = 0.0;
    } else if d0 * d1 < 0.0 && s.abs() > 3.0 * d0.abs() {
        s = 3.0 * d0;
    }
    s
}

fn hermite_basis(t: f64) -> (f64, f64, f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    (
        2.0 * t3 - 3.0 * t2 + 1.0,
        t3 - 2.0 * t2 + t,
        -2.0 * t3 + 3.0 * t2,
        t3 - t2,
    )
}

fn hermite_basis_deriv(t: f64) -> (f64, f64, f64, f64) {
    let t2 = t * t;
    (
        6.0 * t2 - 6.0 * t,
        3.0 * t2 - 4.0 * t + 1.0,
        -6.0 * t2 + 6.0 * t,
        3.0 * t2 - 2.0 * t,
    )
}

/// Four-point Lagrange interpolation on a uniform table with origin `a` and
/// spacing `h`. Fourth-order accurate; the stencil is clamped at the ends.
pub fn cubic4_uniform(vals: &[f64], a: f64, h: f64, x: f64) -> f64 {
    let n = vals.len();
    debug_assert!(n >= 4);
    let u = (x - a) / h;
    let cell = (u.floor() as isize).clamp(0, n as isize - 2) as usize;
    let s = cell.saturating_sub(1).min(n - 4);
    let t = u - s as f64; // local coordinate in [0, 3]-ish
    let w0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
    let w1 = t * (t - 2.0) * (t - 3.0) / 2.0;
    let w2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
    let w3 = t * (t - 1.0) * (t - 2.0) / 6.0;
    w0 * vals[s] + w1 * vals[s + 1] + w2 * vals[s + 2] + w3 * vals[s + 3]
}

/// C¹ bicubic Hermite interpolant on a uniform tensor grid.
///
/// Holds the value and the three derivative tables (`u_x`, `u_y`, `u_xy`)
/// at every node; evaluation and gradient are exact derivatives of the same
/// patchwork, which is what makes stream-function values first integrals of
/// the interpolated velocity field.
#[derive(Debug, Clone)]
pub struct BicubicHermite {
    pub x0: f64,
    pub hx: f64,
    pub y0: f64,
    pub hy: f64,
    pub u: Vec<Vec<f64>>,
    pub ux: Vec<Vec<f64>>,
    pub uy: Vec<Vec<f64>>,
    pub uxy: Vec<Vec<f64>>,
}

impl BicubicHermite {
    fn cell(&self, x: f64, y: f64) -> (usize, usize, f64, f64) {
        let nx = self.u.len();
        let ny = self.u[0].len();
        let i = (((x - self.x0) / self.hx).floor() as isize).clamp(0, nx as isize - 2) as usize;
        let j = (((y - self.y0) / self.hy).floor() as isize).clamp(0, ny as isize - 2) as usize;
        let t = (x - (self.x0 + i as f64 * self.hx)) / self.hx;
        let s = (y - (self.y0 + j as f64 * self.hy)) / self.hy;
        (i, j, t, s)
    }

    /// Value and gradient `(u, du/dx, du/dy)` at `(x, y)`.
    pub fn eval_grad(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let (i, j, t, s) = self.cell(x, y);
        let (b0, b1, b2, b3) = hermite_basis(t);
        let (c0, c1, c2, c3) = hermite_basis(s);
        let (db0, db1, db2, db3) = hermite_basis_deriv(t);
        let (dc0, dc1, dc2, dc3) = hermite_basis_deriv(s);
        // weight index a: 0 value at i, 1 slope at i, 2 value at i+1, 3 slope at i+1
        let wt = [b0, b1 * self.hx, b2, b3 * self.hx];
        let wdt = [db0, db1 * self.hx, db2, db3 * self.hx];
        let ws = [c0, c1 * self.hy, c2, c3 * self.hy];
        let wds = [dc0, dc1 * self.hy, dc2, dc3 * self.hy];

        let mut v = 0.0;
        let mut vx = 0.0;
        let mut vy = 0.0;
        for a in 0..4 {
            let ii = i + a / 2;
            let slope_x = a % 2 == 1;
            for b in 0..4 {
                let jj = j + b / 2;
                let slope_y = b % 2 == 1;
                let val = match (slope_x, slope_y) {
                    (false, false) => self.u[ii][jj],
                    (true, false) => self.ux[ii][jj],
                    (false, true) => self.uy[ii][jj],
                    (true, true) => self.uxy[ii][jj],
                };
                v += val * wt[a] * ws[b];
                vx += val * wdt[a] * ws[b];
                vy += val * wt[a] * wds[b];
            }
        }
        (v, vx / self.hx, vy / self.hy)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.eval_grad(x, y).0
    }
}
