//! Fixed-step classical Runge–Kutta for the small systems used by the
//! shooting solver and path tracing.

/// One RK4 step of a planar system `state' = rhs(t, state)`.
pub fn rk4_step<F>(rhs: &F, t: f64, state: [f64; 2], h: f64) -> [f64; 2]
where
    F: Fn(f64, [f64; 2]) -> [f64; 2],
{
    let k1 = rhs(t, state);
    let k2 = rhs(
        t + 0.5 * h,
        [state[0] + 0.5 * h * k1[0], state[1] + 0.5 * h * k1[1]],
    );
    let k3 = rhs(
        t + 0.5 * h,
        [state[0] + 0.5 * h * k2[0], state[1] + 0.5 * h * k2[1]],
    );
    let k4 = rhs(t + h, [state[0] + h * k3[0], state[1] + h * k3[1]]);
    [
        state[0] + (h / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        state[1] + (h / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}
