//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

/// Dormand–Prince 5(4) with embedded error control, integrating `f` from
/// `t0` to `t1`. Accepts both directions.
pub fn dopri<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    t1: f64,
    y0: [f64; N],
    tol: f64,
) -> [f64; N] {
    const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    let span = t1 - t0;
    if span == 0.0 {
        return y0;
    }
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0;
    let mut h = dir * span.abs().min(1e-2);
    while dir * (t1 - t) > 0.0 {
        if dir * (t + h - t1) > 0.0 {
            h = t1 - t;
        }
        let mut k = [[0.0; N]; 7];
        for s in 0..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                for i in 0..N {
                    ys[i] += h * A[s][j] * kj[i];
                }
            }
            k[s] = f(t + C[s] * h, &ys);
        }
        let mut y_new = y;
        let mut err: f64 = 0.0;
        for i in 0..N {
            let mut inc = 0.0;
            let mut e = 0.0;
            for s in 0..7 {
                inc += B[s] * k[s][i];
                e += E[s] * k[s][i];
            }
            y_new[i] += h * inc;
            let scale = tol * (1.0 + y[i].abs().max(y_new[i].abs()));
            err = err.max((h * e).abs() / scale);
        }
        if err <= 1.0 {
            t += h;
            y = y_new;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    y
}

/// `(sn, cn, dn)(u | m)` by integrating `sn' = cn dn`, `cn' = −sn dn`,
/// `dn' = −m sn cn` from `u = 0`.
pub fn jacobi_ode(u: f64, m: f64) -> (f64, f64, f64) {
    let y = dopri(
        |_, y: &[f64; 3]| [y[1] * y[2], -y[0] * y[2], -m * y[0] * y[1]],
        0.0,
        u,
        [0.0, 1.0, 1.0],
        1e-15,
    );
    (y[0], y[1], y[2])
}

/// `K(m)` by the periodic trapezoid rule on `(1/4)∫₀^{2π} dθ / √(1 − m sin²θ)`.
pub fn k_trapezoid(m: f64) -> f64 {
    let n = 4096;
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let s: f64 = (0..n)
        .map(|j| {
            let th = j as f64 * h;
            1.0 / (1.0 - m * th.sin().powi(2)).sqrt()
        })
        .sum();
    0.25 * s * h
}
