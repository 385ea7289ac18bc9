//! Small dense helpers shared by the pointwise geometry code.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const JACOBI_MAX_SWEEPS: usize = 64;

/// Eigen-decomposition of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Column `i` is the unit eigenvector for `values[i]`.
    pub vectors: DMatrix<f64>,
    pub sweeps: usize,
}

/// Cyclic Jacobi rotations. Intended for the small matrices met here (n <= 8).
pub fn jacobi_eigen(a: &DMatrix<f64>) -> Result<SymEigen> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension { expected: n, got: a.ncols() });
    }
    let mut m = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = frobenius(a).max(f64::MIN_POSITIVE);
    let mut sweeps = 0;
    loop {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale || n < 2 {
            break;
        }
        if sweeps >= JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymEigen { values, vectors, sweeps })
}

pub fn frobenius(a: &DMatrix<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn max_abs_vec(a: &DVector<f64>) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Returns the symmetric part of `a`, or an error when the asymmetry exceeds
/// `rel_tol * max(1, |a|_max)`.
pub fn symmetrized(a: &DMatrix<f64>, rel_tol: f64) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension { expected: n, got: a.ncols() });
    }
    let asym = max_abs(&(a - a.transpose()));
    let tol = rel_tol * max_abs(a).max(1.0);
    if asym > tol {
        return Err(Error::NotSymmetric { asymmetry: asym, tol });
    }
    Ok((a + a.transpose()) * 0.5)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut b = 1.0;
    for i in 0..k {
        b = b * (n - i) as f64 / (i + 1) as f64;
    }
    b.round()
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky_lower(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    nalgebra::linalg::Cholesky::new(g.clone())
        .map(|c| c.l())
        .ok_or_else(|| Error::Degenerate("metric is not positive definite".into()))
}

/// Solves `L X = B` for lower-triangular `L`.
pub fn lower_solve(l: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    l.solve_lower_triangular(b).expect("triangular factor with zero pivot")
}

pub fn lower_solve_vec(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    l.solve_lower_triangular(b).expect("triangular factor with zero pivot")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_diagonal_passthrough() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let e = jacobi_eigen(&a).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
        assert_eq!(e.sweeps, 0);
    }

    #[test]
    fn jacobi_matches_reconstruction() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.5, -1.0, 3.0, 0.25, 0.5, 0.25, -1.0]);
        let e = jacobi_eigen(&a).unwrap();
        let d = DMatrix::from_diagonal(&DVector::from_vec(e.values.clone()));
        let r = &e.vectors * d * e.vectors.transpose();
        assert!(max_abs(&(r - &a)) < 1e-13);
        let o = e.vectors.transpose() * &e.vectors;
        assert!(max_abs(&(o - DMatrix::identity(3, 3))) < 1e-13);
    }

    #[test]
    fn jacobi_agrees_with_nalgebra() {
        let a = DMatrix::from_fn(5, 5, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0 + ((i + j) as f64).sin());
        let a = (&a + a.transpose()) * 0.5;
        let mine = jacobi_eigen(&a).unwrap().values;
        let mut theirs: Vec<f64> = nalgebra::SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
        theirs.sort_by(f64::total_cmp);
        for (x, y) in mine.iter().zip(theirs.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(6, 0), 1.0);
        assert_eq!(binomial(3, 4), 0.0);
        assert_eq!(binomial(8, 4), 70.0);
    }

    #[test]
    fn asymmetry_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1e-6, 1.0]);
        assert!(symmetrized(&a, 1e-10).is_err());
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1e-12, 1.0]);
        assert!(symmetrized(&b, 1e-10).is_ok());
    }
}
