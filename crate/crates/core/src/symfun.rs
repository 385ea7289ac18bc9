//! Elementary symmetric functions of principal curvatures and the Newton
//! tensors built from a symmetric shape operator.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{binomial, frobenius, jacobi_eigen, max_abs, symmetrized, SymEigen};

/// Relative tolerance accepted for input asymmetry before symmetrizing.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Relative tolerance used to decide equality in the Garding chain.
pub const GARDING_EQUALITY_TOL: f64 = 1e-8;

/// `S_k`, `H_k = S_k / C(n,k)` and `c_k = (n-k) C(n,k)` for `k = 0..=n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetricPack {
    pub n: usize,
    pub s: Vec<f64>,
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl SymmetricPack {
    /// `H_k`, zero beyond `n`.
    pub fn hk(&self, k: usize) -> f64 {
        self.h.get(k).copied().unwrap_or(0.0)
    }

    pub fn sk(&self, k: usize) -> f64 {
        self.s.get(k).copied().unwrap_or(0.0)
    }

    pub fn ck(&self, k: usize) -> f64 {
        self.c.get(k).copied().unwrap_or(0.0)
    }

    /// The pack of `-A`.
    pub fn flipped(&self) -> Self {
        let sign = |k: usize| if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        Self {
            n: self.n,
            s: self.s.iter().enumerate().map(|(k, v)| sign(k) * v).collect(),
            h: self.h.iter().enumerate().map(|(k, v)| sign(k) * v).collect(),
            c: self.c.clone(),
        }
    }
}

pub fn normalization_constants(n: usize) -> Vec<f64> {
    (0..=n).map(|k| (n - k) as f64 * binomial(n, k)).collect()
}

/// Coefficients of `prod_i (1 + kappa_i t)`.
pub fn elementary_symmetric(kappa: &[f64]) -> SymmetricPack {
    let n = kappa.len();
    let mut s = vec![0.0; n + 1];
    s[0] = 1.0;
    for (i, &k) in kappa.iter().enumerate() {
        for j in (1..=i + 1).rev() {
            s[j] += k * s[j - 1];
        }
    }
    let h = s.iter().enumerate().map(|(k, v)| v / binomial(n, k)).collect();
    SymmetricPack { n, s, h, c: normalization_constants(n) }
}

/// `P_0 = I`, `P_k = S_k I - A P_{k-1}` for `k = 0..=n`.
#[derive(Debug, Clone)]
pub struct NewtonFamily {
    pub a: DMatrix<f64>,
    pub p: Vec<DMatrix<f64>>,
    pub pack: SymmetricPack,
    /// Principal curvatures, ascending.
    pub kappa: Vec<f64>,
    /// Principal directions as columns.
    pub directions: DMatrix<f64>,
}

impl NewtonFamily {
    pub fn n(&self) -> usize {
        self.pack.n
    }

    pub fn pk(&self, k: usize) -> &DMatrix<f64> {
        &self.p[k]
    }

    /// Family of `-A`: `S_k` and `P_k` pick up `(-1)^k`.
    pub fn flipped(&self) -> Self {
        let p = self.p.iter().enumerate().map(|(k, m)| if k % 2 == 0 { m.clone() } else { -m }).collect();
        let mut kappa: Vec<f64> = self.kappa.iter().map(|k| -k).collect();
        kappa.reverse();
        let n = self.n();
        let directions = DMatrix::from_fn(n, n, |r, c| self.directions[(r, n - 1 - c)]);
        Self { a: -&self.a, p, pack: self.pack.flipped(), kappa, directions }
    }

    /// Eigenvalues of `P_k` along the principal directions:
    /// `mu_{k,i} = S_k` of the curvatures with `kappa_i` removed.
    pub fn newton_eigenvalues(&self, k: usize) -> Vec<f64> {
        (0..self.kappa.len())
            .map(|i| {
                let rest: Vec<f64> = self.kappa.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v).collect();
                elementary_symmetric(&rest).sk(k)
            })
            .collect()
    }
}

pub fn newton_family(a: &DMatrix<f64>) -> Result<NewtonFamily> {
    let a = symmetrized(a, SYMMETRY_TOL)?;
    let SymEigen { values, vectors, .. } = jacobi_eigen(&a)?;
    Ok(newton_from_eigen(a, values, vectors))
}

pub(crate) fn newton_from_eigen(a: DMatrix<f64>, kappa: Vec<f64>, directions: DMatrix<f64>) -> NewtonFamily {
    let n = a.nrows();
    let pack = elementary_symmetric(&kappa);
    let mut p = Vec::with_capacity(n + 1);
    p.push(DMatrix::identity(n, n));
    for k in 1..=n {
        let next = DMatrix::identity(n, n) * pack.s[k] - &a * &p[k - 1];
        p.push(next);
    }
    NewtonFamily { a, p, pack, kappa, directions }
}

fn scale_of(a: &DMatrix<f64>) -> f64 {
    frobenius(a).max(1.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceIdentityReport {
    pub n: usize,
    /// `|Tr P_k - (n-k) S_k|` for `k = 0..=n`.
    pub trace_pk: Vec<f64>,
    /// `|Tr(A P_k) - (k+1) S_{k+1}|` for `k = 0..n`.
    pub trace_apk: Vec<f64>,
    /// `|Tr(A^2 P_k) - (S_1 S_{k+1} - (k+2) S_{k+2})|` for `k = 0..n`.
    pub trace_a2pk: Vec<f64>,
    /// `| |A|^2 - (n^2 H_1^2 - n(n-1) H_2) |`.
    pub norm: f64,
    /// `|P_n|_max`, which vanishes by Cayley-Hamilton.
    pub cayley_hamilton: f64,
    /// Largest residual divided by `max(1,|A|)^(k+1)`.
    pub max_relative: f64,
}

pub fn trace_and_norm_identities(a: &DMatrix<f64>) -> Result<TraceIdentityReport> {
    let fam = newton_family(a)?;
    let n = fam.n();
    let pk = &fam.pack;
    let sc = scale_of(&fam.a);
    let mut max_relative: f64 = 0.0;
    let mut rel = |r: f64, deg: usize| {
        max_relative = max_relative.max(r / sc.powi(deg as i32));
        r
    };
    let trace_pk = (0..=n).map(|k| rel((fam.p[k].trace() - (n - k) as f64 * pk.s[k]).abs(), k)).collect();
    let trace_apk =
        (0..n).map(|k| rel(((&fam.a * &fam.p[k]).trace() - (k + 1) as f64 * pk.s[k + 1]).abs(), k + 1)).collect();
    let a2 = &fam.a * &fam.a;
    let trace_a2pk = (0..n)
        .map(|k| {
            let expect = pk.s[1] * pk.s[k + 1] - (k + 2) as f64 * pk.sk(k + 2);
            rel(((&a2 * &fam.p[k]).trace() - expect).abs(), k + 2)
        })
        .collect();
    let nf = n as f64;
    let h2 = if n >= 2 { pk.h[2] } else { 0.0 };
    let norm_expect = nf * nf * pk.h[1] * pk.h[1] - nf * (nf - 1.0) * h2;
    let norm = rel((frobenius(&fam.a).powi(2) - norm_expect).abs(), 2);
    let cayley_hamilton = rel(max_abs(&fam.p[n]), n);
    Ok(TraceIdentityReport { n, trace_pk, trace_apk, trace_a2pk, norm, cayley_hamilton, max_relative })
}

#[derive(Debug, Clone, Serialize)]
pub struct TelescopeReport {
    pub k: usize,
    pub residual: f64,
    pub relative: f64,
}

/// `B_k = sum_{j<k} (-1)^{k-j-1} (P_j - c_j H_j I) A^{k-1-j}` against `-(n-k) P_{k-1}`.
pub fn bk_telescope(a: &DMatrix<f64>, k: usize) -> Result<TelescopeReport> {
    let fam = newton_family(a)?;
    let n = fam.n();
    if k == 0 || k > n {
        return Err(Error::OrderOutOfRange { k, max: n });
    }
    let b = telescope_sum(&fam, k);
    let expect = &fam.p[k - 1] * (-((n - k) as f64));
    let residual = max_abs(&(b - expect));
    let relative = residual / scale_of(&fam.a).powi(k as i32);
    Ok(TelescopeReport { k, residual, relative })
}

pub fn telescope_sum(fam: &NewtonFamily, k: usize) -> DMatrix<f64> {
    let n = fam.n();
    let mut powers = vec![DMatrix::identity(n, n)];
    for i in 1..k {
        powers.push(&powers[i - 1] * &fam.a);
    }
    let mut b = DMatrix::zeros(n, n);
    for j in 0..k {
        let sign = if (k - j - 1).is_multiple_of(2) { 1.0 } else { -1.0 };
        let coeff = fam.pack.c[j] * fam.pack.h[j];
        let term = (&fam.p[j] - DMatrix::identity(n, n) * coeff) * &powers[k - 1 - j];
        b += term * sign;
    }
    b
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Applicability {
    Applicable,
    NotApplicable(String),
}

impl Applicability {
    pub fn is_applicable(&self) -> bool {
        matches!(self, Applicability::Applicable)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GardingReport {
    pub k: usize,
    pub applicability: Applicability,
    /// `H_j^{1/j}` for `j = 1..=k`.
    pub chain: Vec<f64>,
    /// `H_j^{1/j} - H_{j+1}^{1/(j+1)}` for `j = 1..k`.
    pub margins: Vec<f64>,
    pub holds: bool,
    pub umbilical: bool,
    /// Some link of the chain is an equality while the point is not umbilical.
    pub equality_without_umbilicity: bool,
}

/// Checks `H_1 >= H_2^{1/2} >= ... >= H_k^{1/k} > 0`, which holds when
/// `H_1, ..., H_k` are all positive.
pub fn garding_chain(kappa: &[f64], k: usize) -> Result<GardingReport> {
    let n = kappa.len();
    if k == 0 || k > n {
        return Err(Error::OrderOutOfRange { k, max: n });
    }
    let pack = elementary_symmetric(kappa);
    let spread =
        kappa.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x)) - kappa.iter().fold(f64::INFINITY, |m, &x| m.min(x));
    let scale = kappa.iter().fold(0.0f64, |m, &x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let umbilical = spread <= GARDING_EQUALITY_TOL * scale;
    if let Some(j) = (1..=k).find(|&j| pack.h[j] <= 0.0) {
        return Ok(GardingReport {
            k,
            applicability: Applicability::NotApplicable(format!("H_{j} = {} is not positive", pack.h[j])),
            chain: Vec::new(),
            margins: Vec::new(),
            holds: false,
            umbilical,
            equality_without_umbilicity: false,
        });
    }
    let chain: Vec<f64> = (1..=k).map(|j| pack.h[j].powf(1.0 / j as f64)).collect();
    let margins: Vec<f64> = chain.windows(2).map(|w| w[0] - w[1]).collect();
    let holds = margins.iter().zip(chain.iter()).all(|(m, c)| *m >= -GARDING_EQUALITY_TOL * c);
    let equality_without_umbilicity =
        !umbilical && margins.iter().zip(chain.iter()).any(|(m, c)| m.abs() <= GARDING_EQUALITY_TOL * c);
    Ok(GardingReport {
        k,
        applicability: Applicability::Applicable,
        chain,
        margins,
        holds,
        umbilical,
        equality_without_umbilicity,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EllipticityReport {
    pub applicability: Applicability,
    /// The orientation was reversed so that `H_1 > 0`.
    pub flipped: bool,
    pub h1: f64,
    pub h2: f64,
    /// Eigenvalues of `P_1` computed from the matrix.
    pub p1_eigenvalues: Vec<f64>,
    /// `n H_1 - kappa_i`, the predicted eigenvalues.
    pub predicted: Vec<f64>,
    pub prediction_residual: f64,
    pub positive_definite: bool,
}

/// When `H_2 > 0`, `P_1` is positive definite for the orientation with `H_1 > 0`.
pub fn p1_ellipticity_check(a: &DMatrix<f64>) -> Result<EllipticityReport> {
    let mut fam = newton_family(a)?;
    let n = fam.n();
    if n < 2 {
        return Err(Error::Dimension { expected: 2, got: n });
    }
    let mut flipped = false;
    if fam.pack.h[1] < 0.0 {
        fam = fam.flipped();
        flipped = true;
    }
    let h1 = fam.pack.h[1];
    let h2 = fam.pack.h[2];
    let p1_eigenvalues = jacobi_eigen(&fam.p[1])?.values;
    let mut predicted: Vec<f64> = fam.kappa.iter().map(|k| n as f64 * h1 - k).collect();
    predicted.sort_by(f64::total_cmp);
    let prediction_residual =
        p1_eigenvalues.iter().zip(predicted.iter()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let positive_definite = p1_eigenvalues.iter().all(|&e| e > 0.0);
    let applicability = if h2 > 0.0 {
        Applicability::Applicable
    } else {
        Applicability::NotApplicable(format!("H_2 = {h2} is not positive"))
    };
    Ok(EllipticityReport {
        applicability,
        flipped,
        h1,
        h2,
        p1_eigenvalues,
        predicted,
        prediction_residual,
        positive_definite,
    })
}

/// `sum_{j<=m} (-1)^j (c_m / c_j) hcal^{m-j} theta^j P_j` for `m < n`.
pub fn calligraphic_newton(fam: &NewtonFamily, m: usize, hcal: f64, theta: f64) -> Result<DMatrix<f64>> {
    let n = fam.n();
    if m >= n {
        return Err(Error::OrderOutOfRange { k: m, max: n - 1 });
    }
    let c = &fam.pack.c;
    let mut out = DMatrix::zeros(n, n);
    for j in 0..=m {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let coeff = sign * c[m] / c[j] * hcal.powi((m - j) as i32) * theta.powi(j as i32);
        out += &fam.p[j] * coeff;
    }
    Ok(out)
}

/// Residual of the step `Q_m = (c_m / c_{m-1}) hcal Q_{m-1} + (-1)^m theta^m P_m`
/// where `Q_m` is [`calligraphic_newton`], `1 <= m < n`.
pub fn calligraphic_recursion_residual(fam: &NewtonFamily, m: usize, hcal: f64, theta: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::OrderOutOfRange { k: m, max: fam.n() - 1 });
    }
    let c = &fam.pack.c;
    let lhs = calligraphic_newton(fam, m, hcal, theta)?;
    let prev = calligraphic_newton(fam, m - 1, hcal, theta)?;
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let rhs = prev * (c[m] / c[m - 1] * hcal) + &fam.p[m] * (sign * theta.powi(m as i32));
    Ok(max_abs(&(lhs - rhs)))
}

/// Applies the Newton family to a vector: `<P_k v, v>`.
pub fn newton_quadratic(fam: &NewtonFamily, k: usize, v: &DVector<f64>) -> f64 {
    v.dot(&(&fam.p[k] * v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn one_two_three() {
        let p = elementary_symmetric(&[1.0, 2.0, 3.0]);
        assert_eq!(p.s, vec![1.0, 6.0, 11.0, 6.0]);
        assert_relative_eq!(p.h[1], 2.0);
        assert_relative_eq!(p.h[2], 11.0 / 3.0);
        assert_relative_eq!(p.h[3], 6.0);
        assert_eq!(p.c, vec![3.0, 6.0, 3.0, 0.0]);
    }

    #[test]
    fn diag_newton() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let f = newton_family(&a).unwrap();
        let expect = DMatrix::from_diagonal(&DVector::from_vec(vec![5.0, 4.0, 3.0]));
        assert!(max_abs(&(&f.p[1] - expect)) < 1e-14);
        assert_relative_eq!((&f.a * &f.p[1]).trace(), 22.0, epsilon = 1e-13);
        assert_relative_eq!(frobenius(&f.a).powi(2), 14.0, epsilon = 1e-13);
    }

    #[test]
    fn degenerate_h2() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, -0.5]));
        let r = p1_ellipticity_check(&a).unwrap();
        assert!(r.h2.abs() < 1e-15);
        assert!(!r.applicability.is_applicable());
    }

    #[test]
    fn garding_umbilic_and_strict() {
        let r = garding_chain(&[1.0, 1.0, 1.0], 3).unwrap();
        assert!(r.holds && r.umbilical);
        assert!(r.margins.iter().all(|m| m.abs() < 1e-15));
        let r = garding_chain(&[1.0, 2.0, 3.0], 3).unwrap();
        assert!(r.holds && !r.umbilical && !r.equality_without_umbilicity);
        assert_relative_eq!(r.chain[1], (11.0f64 / 3.0).sqrt(), epsilon = 1e-14);
        assert_relative_eq!(r.chain[2], 6.0f64.cbrt(), epsilon = 1e-14);
    }

    #[test]
    fn flip_is_involution() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.2, -0.5, 0.3, 0.0, 0.3, 2.0]);
        let f = newton_family(&a).unwrap();
        let g = newton_family(&(-&a)).unwrap();
        let ff = f.flipped();
        for k in 0..=3 {
            assert!(max_abs(&(&ff.p[k] - &g.p[k])) < 1e-13);
            assert!((ff.pack.s[k] - g.pack.s[k]).abs() < 1e-13);
        }
    }
}
