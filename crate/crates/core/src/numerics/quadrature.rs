//! Composite Simpson quadrature on closures and on sampled tables, plus
//! cumulative (prefix-integral) variants.
//!
//! Everything here is fixed-grid by design: the integrands we meet are at
//! worst Lipschitz, so adaptive schemes buy no extra order.

/// Composite Simpson over `[a, b]` with `cells` sub-intervals, evaluating
/// `f` at cell endpoints and midpoints. Fourth-order for smooth `f`.
pub fn simpson_fn<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cells: usize) -> f64 {
    assert!(cells >= 1, "need at least one cell");
    let h = (b - a) / cells as f64;
    let mut sum = 0.0;
    let mut fa = f(a);
    for i in 0..cells {
        let x0 = a + i as f64 * h;
        let x1 = a + (i + 1) as f64 * h;
        let fm = f(0.5 * (x0 + x1));
        let fb = f(x1);
        sum += (h / 6.0) * (fa + 4.0 * fm + fb);
        fa = fb;
    }
    sum
}

/// Prefix integrals of `f` over a uniform grid of `cells + 1` nodes on `[a, b]`.
///
/// Entry `k` holds the integral from `a` to node `k`; each cell is integrated
/// with a single Simpson rule using the cell midpoint, so every prefix value
/// carries the full fourth-order accuracy.
pub fn cumulative_simpson_fn<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cells: usize) -> Vec<f64> {
    assert!(cells >= 1, "need at least one cell");
    let h = (b - a) / cells as f64;
    let mut out = Vec::with_capacity(cells + 1);
    out.push(0.0);
    let mut acc = 0.0;
    let mut fa = f(a);
    for i in 0..cells {
        let x0 = a + i as f64 * h;
        let x1 = a + (i + 1) as f64 * h;
        let fm = f(0.5 * (x0 + x1));
        let fb = f(x1);
        acc += (h / 6.0) * (fa + 4.0 * fm + fb);
        out.push(acc);
        fa = fb;
    }
    out
}

/// Single-cell Simpson rule for a partial cell `[x0, x]`.
///
/// Used to extend a tabulated prefix integral to off-node arguments without
/// losing order: the sub-interval is short, so the local error is O(w^5).
pub fn partial_cell_simpson<F: Fn(f64) -> f64>(f: F, x0: f64, x: f64) -> f64 {
    let w = x - x0;
    (w / 6.0) * (f(x0) + 4.0 * f(x0 + 0.5 * w) + f(x))
}

/// Composite Simpson over equally spaced samples `y` with spacing `h`.
///
/// Handles an odd number of intervals with the standard three-point end
/// correction. Requires at least three samples.
pub fn simpson_table(y: &[f64], h: f64) -> f64 {
    let n = y.len() - 1;
    assert!(n >= 2, "need at least three samples");
    let mut sum = 0.0;
    let mut i = 0;
    while i + 2 <= n {
        sum += (h / 3.0) * (y[i] + 4.0 * y[i + 1] + y[i + 2]);
        i += 2;
    }
    if i < n {
        // one leftover interval: quadratic through the last three samples
        sum += (h / 12.0) * (-y[n - 2] + 8.0 * y[n - 1] + 5.0 * y[n]);
    }
    sum
}

/// Cumulative composite Simpson over equally spaced samples.
///
/// Each interval of a pair gets the half-pair weights of the quadratic fit
/// (the scipy convention), so the prefix values are fourth-order accurate
/// and the final entry telescopes to the composite Simpson total.
pub fn cumulative_simpson_table(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len() - 1;
    assert!(n >= 2, "need at least three samples");
    let mut out = vec![0.0; n + 1];
    let mut i = 0;
    while i + 2 <= n {
        out[i + 1] = out[i] + (h / 12.0) * (5.0 * y[i] + 8.0 * y[i + 1] - y[i + 2]);
        out[i + 2] = out[i + 1] + (h / 12.0) * (-y[i] + 8.0 * y[i + 1] + 5.0 * y[i + 2]);
        i += 2;
    }
    if i < n {
        out[n] = out[n - 1] + (h / 12.0) * (-y[n - 2] + 8.0 * y[n - 1] + 5.0 * y[n]);
    }
    out
}

/// Integral of `f` with a Richardson consistency estimate.
///
/// Computes composite Simpson at `cells` and `2 * cells` resolutions and
/// returns the finer value together with `|I_2h - I_h| / 15`, the usual
/// error estimate for a fourth-order rule.
pub fn simpson_fn_checked<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cells: usize) -> (f64, f64) {
    let coarse = simpson_fn(&f, a, b, cells);
    let fine = simpson_fn(&f, a, b, 2 * cells);
    (fine, (fine - coarse).abs() / 15.0)
}
