//! Dormand-Prince 5(4) with step-size control, sampled at prescribed
//! output times.

use crate::error::{Error, Result};

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
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-14, max_steps: 1_000_000 }
    }
}

/// Integrates `y' = f(t, y)` from `times[0]` and returns the state at every
/// entry of `times` (ascending). `accept` may veto a step, which is then
/// retried with a smaller step.
pub fn integrate<const N: usize, F, V>(
    f: F,
    y0: [f64; N],
    times: &[f64],
    opts: OdeOptions,
    accept: V,
) -> Result<Vec<[f64; N]>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    V: Fn(f64, &[f64; N]) -> bool,
{
    let mut out = Vec::with_capacity(times.len());
    let Some(&t_start) = times.first() else {
        return Ok(out);
    };
    let mut t = t_start;
    let mut y = y0;
    out.push(y);
    let span = times.last().map_or(0.0, |&e| e - t_start);
    let mut h = (span * 1e-3).max(1e-8);
    let mut steps = 0;
    for &target in &times[1..] {
        while t < target {
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::Integration(format!("step limit reached at t = {t}")));
            }
            let last = t + h >= target;
            let step = if last { target - t } else { h };
            let (ynew, err) = dp_step(&f, t, &y, step);
            let mut norm = 0.0f64;
            for i in 0..N {
                let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
                norm = norm.max((err[i] / sc).abs());
            }
            let tnew = if last { target } else { t + step };
            if norm <= 1.0 && ynew.iter().all(|v| v.is_finite()) && accept(tnew, &ynew) {
                t = tnew;
                y = ynew;
                let grow = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
                if !last {
                    h = step * grow;
                }
            } else {
                let shrink =
                    if norm.is_finite() && norm > 1.0 { (0.9 * norm.powf(-0.25)).clamp(0.1, 0.9) } else { 0.25 };
                h = step * shrink;
                if h < 1e-14 * (1.0 + t.abs()) {
                    return Err(Error::Integration(format!("step size underflow at t = {t}")));
                }
            }
        }
        out.push(y);
    }
    Ok(out)
}

fn dp_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], h: f64) -> ([f64; N], [f64; N])
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut k = [[0.0; N]; 7];
    for s in 0..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            for i in 0..N {
                ys[i] += h * A[s][j] * kj[i];
            }
        }
        k[s] = f(t + C[s] * h, &ys);
    }
    let mut y5 = *y;
    let mut err = [0.0; N];
    for i in 0..N {
        for s in 0..7 {
            y5[i] += h * B5[s] * k[s][i];
            err[i] += h * (B5[s] - B4[s]) * k[s][i];
        }
    }
    (y5, err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let ts: Vec<f64> = (0..=10).map(|i| i as f64 * 0.5).collect();
        let ys = integrate(|_, y: &[f64; 1]| [-y[0]], [1.0], &ts, OdeOptions::default(), |_, _| true).unwrap();
        for (t, y) in ts.iter().zip(&ys) {
            assert!((y[0] - (-t).exp()).abs() < 1e-9 * (-t).exp());
        }
    }

    #[test]
    fn harmonic_oscillator() {
        let ts = [0.0, std::f64::consts::PI];
        let ys =
            integrate(|_, y: &[f64; 2]| [y[1], -y[0]], [0.0, 1.0], &ts, OdeOptions::default(), |_, _| true).unwrap();
        assert!(ys[1][0].abs() < 1e-9);
        assert!((ys[1][1] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn veto_forces_error() {
        let ts = [0.0, 1.0];
        let r = integrate(|_, y: &[f64; 1]| [-1.0 + 0.0 * y[0]], [0.5], &ts, OdeOptions::default(), |_, y| y[0] > 0.0);
        assert!(r.is_err());
    }
}
