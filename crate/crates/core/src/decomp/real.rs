//! Real Cartan decomposition by one-sided Jacobi SVD, and Iwasawa
//! decomposition on top of nalgebra's Householder QR.

use nalgebra::DMatrix;

use super::{CartanParts, IwasawaParts};
use crate::error::{Error, Result};
use crate::projlin::Matrix;

fn to_na(m: &Matrix<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

fn from_na(m: &DMatrix<f64>) -> Matrix<f64> {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub(crate) fn largest_singular_value(m: &Matrix<f64>) -> f64 {
    if m.rows() == 2 && m.cols() == 2 {
        return largest_singular_value_2x2(m);
    }
    jacobi_svd(m).sigma.iter().copied().fold(0.0, f64::max)
}

/// `σ₁ = (√((a+d)²+(c−b)²) + √((a−d)²+(b+c)²)) / 2`.
fn largest_singular_value_2x2(m: &Matrix<f64>) -> f64 {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    0.5 * ((a + d).hypot(c - b) + (a - d).hypot(b + c))
}

pub(crate) fn cartan(m: &Matrix<f64>) -> Result<CartanParts<f64>> {
    if m.data().iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("non-finite matrix entry".into()));
    }
    let d = m.rows();
    let svd = jacobi_svd(m);
    let sv = &svd.sigma;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]).then(i.cmp(&j)));

    let mut k = Matrix::from_fn(d, d, |i, j| svd.left[(i, order[j])]);
    let mut u = Matrix::from_fn(d, d, |i, j| svd.right[(j, order[i])]);
    let a: Vec<f64> = order.iter().map(|&i| sv[i]).collect();

    // Both factors must lie in SO(d). For det(m) > 0 the two determinants
    // agree, and negating the last column of k together with the last row of
    // u leaves k·a·u unchanged.
    if crate::projlin::determinant(&crate::scalar::Real, &k) < 0.0 {
        k.scale_col(d - 1, &-1.0);
        u.scale_row(d - 1, &-1.0);
    }
    if crate::projlin::determinant(&crate::scalar::Real, &u) < 0.0 {
        // only reachable when det(m) ≤ 0 numerically; the flip then changes
        // the product by at most 2·σ_d
        if a[d - 1] > 1e-12 * a[0] {
            return Err(Error::Invariant("matrix has negative determinant".into()));
        }
        u.scale_row(d - 1, &-1.0);
    }
    let k_inv = k.transpose();
    let u_inv = u.transpose();
    Ok(CartanParts { k, k_inv, a, u, u_inv })
}

struct Svd {
    /// Orthonormal columns `U`.
    left: Matrix<f64>,
    sigma: Vec<f64>,
    /// Orthonormal columns `V`, with `m = U Σ Vᵀ`.
    right: Matrix<f64>,
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi: rotate column pairs of `m` until they are
/// mutually orthogonal. Small singular values come out with high relative
/// accuracy, which the contraction ratios depend on.
fn jacobi_svd(m: &Matrix<f64>) -> Svd {
    let d = m.cols();
    let rows = m.rows();
    let mut a = m.clone();
    let mut v = Matrix::<f64>::identity(d);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..d {
            for q in p + 1..d {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..rows {
                    let (x, y) = (a[(i, p)], a[(i, q)]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_cols(&mut a, p, q, c, s);
                rotate_cols(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma = vec![0.0; d];
    let mut left = Matrix::<f64>::zeros(rows, d);
    let mut missing = Vec::new();
    for j in 0..d {
        let n = (0..rows).map(|i| a[(i, j)]).fold(0.0f64, f64::hypot);
        sigma[j] = n;
        if n > 0.0 {
            for i in 0..rows {
                left[(i, j)] = a[(i, j)] / n;
            }
        } else {
            missing.push(j);
        }
    }
    // exactly singular input: complete U to an orthonormal basis
    for j in missing {
        for e in 0..rows {
            let mut x: Vec<f64> = (0..rows).map(|i| if i == e { 1.0 } else { 0.0 }).collect();
            for _ in 0..2 {
                for c in 0..d {
                    if c == j {
                        continue;
                    }
                    let proj: f64 = (0..rows).map(|i| left[(i, c)] * x[i]).sum();
                    for (i, xi) in x.iter_mut().enumerate() {
                        *xi -= proj * left[(i, c)];
                    }
                }
            }
            let n = x.iter().fold(0.0f64, |acc, &t| acc.hypot(t));
            if n > 0.5 {
                for (i, xi) in x.iter().enumerate() {
                    left[(i, j)] = xi / n;
                }
                break;
            }
        }
    }
    Svd { left, sigma, right: v }
}

fn rotate_cols(m: &mut Matrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..m.rows() {
        let (x, y) = (m[(i, p)], m[(i, q)]);
        m[(i, p)] = c * x - s * y;
        m[(i, q)] = s * x + c * y;
    }
}

pub(crate) fn iwasawa(m: &Matrix<f64>) -> Result<IwasawaParts<f64>> {
    let d = m.rows();
    let qr = to_na(m).qr();
    let mut q = from_na(&qr.q());
    let mut r = from_na(&qr.r());
    for i in 0..d {
        if r[(i, i)] < 0.0 {
            q.scale_col(i, &-1.0);
            r.scale_row(i, &-1.0);
        }
    }
    if crate::projlin::determinant(&crate::scalar::Real, &q) < 0.0 {
        return Err(Error::Invariant("matrix has negative determinant".into()));
    }
    let a: Vec<f64> = (0..d).map(|i| r[(i, i)]).collect();
    let mut n = r;
    for (i, ai) in a.iter().enumerate() {
        n.scale_row(i, &(1.0 / ai));
        n[(i, i)] = 1.0;
    }
    Ok(IwasawaParts { k: q, a, n })
}
