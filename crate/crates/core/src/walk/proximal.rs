//! Proximality tests and the search for a proximal element among short
//! products of a measure's atoms.

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::WalkMeasure;
use crate::projlin::Matrix;
use crate::scalar::{LocalField, PAdic, Valuation};

/// Relative gap below which two eigenvalue moduli count as equal.
const REAL_MODULUS_TOL: f64 = 1e-9;

pub(crate) fn real_is_proximal(m: &Matrix<f64>) -> bool {
    let scale = m.data().iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return false;
    }
    let na = DMatrix::from_row_slice(m.rows(), m.cols(), m.data()) / scale;
    let mut moduli: Vec<f64> = na.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    moduli.len() < 2 || moduli[0] > moduli[1] * (1.0 + REAL_MODULUS_TOL)
}

/// Coefficients `c_0, …, c_d` of `det(t·I − m)` by Faddeev–LeVerrier.
pub(crate) fn characteristic_polynomial(m: &Matrix<BigRational>) -> Vec<BigRational> {
    let d = m.rows();
    let mut c = vec![BigRational::zero(); d + 1];
    c[d] = BigRational::one();
    let mut mk = Matrix::<BigRational>::zeros(d, d);
    for k in 1..=d {
        let mut next = m * &mk;
        for i in 0..d {
            next[(i, i)] = &next[(i, i)] + &c[d - k + 1];
        }
        mk = next;
        let am = m * &mk;
        let trace = (0..d).fold(BigRational::zero(), |acc, i| acc + &am[(i, i)]);
        c[d - k] = -trace / BigRational::from_integer((k as i64).into());
    }
    c
}

/// The Newton polygon of the characteristic polynomial ends in a segment of
/// horizontal length one exactly when a single root has the largest
/// absolute value.
pub(crate) fn padic_is_proximal(field: &PAdic, m: &Matrix<BigRational>) -> bool {
    let c = characteristic_polynomial(m);
    let d = m.rows();
    let Valuation::Finite(top) = field.valuation(&c[d - 1]) else {
        return false;
    };
    (0..d - 1).all(|i| match field.valuation(&c[i]) {
        Valuation::Infinite => true,
        Valuation::Finite(v) => v > top * (d - i) as i64,
    })
}

/// Samples `per_length` random words of each length `1..=max_len` in the
/// atoms and returns the first (shortest) one whose product is proximal.
pub fn find_proximal_product<F: LocalField>(
    m: &WalkMeasure<F>,
    max_len: usize,
    per_length: usize,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<usize>> {
    let field = m.field();
    let k = m.atoms().len();
    for len in 1..=max_len {
        for _ in 0..per_length {
            let word: Vec<usize> = (0..len).map(|_| rng.gen_range(0..k)).collect();
            let mut prod = m.atoms()[word[0]].matrix().clone();
            for &i in &word[1..] {
                prod = &prod * m.atoms()[i].matrix();
            }
            if field.is_proximal(&prod) {
                return Some(word);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn real_examples() {
        let hyperbolic = Matrix::from_rows(vec![vec![2.0, 1.0], vec![1.0, 1.0]]);
        let rotation = Matrix::from_rows(vec![vec![0.0, -1.0], vec![1.0, 0.0]]);
        let unipotent = Matrix::from_rows(vec![vec![1.0, 1.0], vec![0.0, 1.0]]);
        assert!(real_is_proximal(&hyperbolic));
        assert!(!real_is_proximal(&rotation));
        assert!(!real_is_proximal(&unipotent));
        assert!(!real_is_proximal(&Matrix::identity(3)));
        let d3 = Matrix::diagonal(&[4.0, 0.5, 0.5]);
        assert!(real_is_proximal(&d3));
        assert!(!real_is_proximal(&Matrix::diagonal(&[2.0, -2.0, 0.25])));
    }

    #[test]
    fn characteristic_polynomial_of_companion() {
        // t³ − 2t² + 3t − 5
        let m = Matrix::from_rows(vec![
            vec![q(0, 1), q(0, 1), q(5, 1)],
            vec![q(1, 1), q(0, 1), q(-3, 1)],
            vec![q(0, 1), q(1, 1), q(2, 1)],
        ]);
        assert_eq!(characteristic_polynomial(&m), vec![q(-5, 1), q(3, 1), q(-2, 1), q(1, 1)]);
    }

    #[test]
    fn padic_examples() {
        let p2 = PAdic::new(2).unwrap();
        let p3 = PAdic::new(3).unwrap();
        let diag = Matrix::diagonal(&[q(4, 1), q(1, 4)]);
        assert!(padic_is_proximal(&p2, &diag));
        // |4|₃ = |1/4|₃ = 1
        assert!(!padic_is_proximal(&p3, &diag));
        let unipotent = Matrix::from_rows(vec![vec![q(1, 1), q(1, 1)], vec![q(0, 1), q(1, 1)]]);
        assert!(!padic_is_proximal(&p2, &unipotent));
        assert!(!padic_is_proximal(&p3, &unipotent));
        let d3 = Matrix::diagonal(&[q(1, 9), q(3, 1), q(3, 1)]);
        assert!(padic_is_proximal(&p3, &d3));
        let d3 = Matrix::diagonal(&[q(1, 3), q(1, 3), q(9, 1)]);
        assert!(!padic_is_proximal(&p3, &d3));
    }
}
