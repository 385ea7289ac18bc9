//! Adaptive Simpson quadrature.

const MAX_DEPTH: u32 = 48;

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(&f, a, b, fa, fm, fb, whole, tol.max(1e-300), MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || (m - a).abs() < 4.0 * f64::EPSILON * m.abs() {
        return left + right + delta / 15.0;
    }
    step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Integral over `[a,b]` with a relative target, splitting the range into
/// `pieces` panels for resolution.
pub fn integrate_rel<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel: f64, pieces: usize) -> f64 {
    let pieces = pieces.max(1);
    let h = (b - a) / pieces as f64;
    let coarse: f64 = (0..pieces)
        .map(|i| {
            let x0 = a + i as f64 * h;
            let x1 = x0 + h;
            h / 6.0 * (f(x0) + 4.0 * f(0.5 * (x0 + x1)) + f(x1))
        })
        .sum();
    let tol = rel * coarse.abs().max(f64::MIN_POSITIVE) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let x0 = a + i as f64 * h;
            integrate(&f, x0, x0 + h, tol)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_exp() {
        assert!((integrate(|x| x * x, 0.0, 3.0, 1e-12) - 9.0).abs() < 1e-12);
        let v = integrate_rel(f64::exp, 0.0, 5.0, 1e-12, 8);
        assert!(((v - (5f64.exp() - 1.0)) / v).abs() < 1e-11);
    }

    #[test]
    fn reversed_limits() {
        let v = integrate(f64::cos, 1.0, 0.0, 1e-12);
        assert!((v + 1f64.sin()).abs() < 1e-12);
    }
}
