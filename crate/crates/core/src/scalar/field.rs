//! The `LocalField` abstraction that the linear-algebra, walk and statistics
//! layers are generic over, with its two instances [`Real`] and [`PAdic`].

use std::cmp::Ordering;
use std::fmt::Debug;
use std::ops::{Add, Div};

use num_rational::BigRational;
use num_traits::Zero;

use super::{
    padic_abs_from_valuation, prime_power, rational_valuation, FieldSpec, Magnitude,
    Scalar, Valuation,
};
use crate::decomp::{padic as padic_decomp, real as real_decomp, CartanParts, IwasawaParts};
use crate::error::{Error, Result};
use crate::projlin::{Matrix, Ring};

pub trait LocalField: Clone + Debug + Send + Sync + 'static {
    type Elem: Ring + Div<Output = Self::Elem>;
    /// Magnitude exponent carried by scaled products: natural log for the
    /// reals, power of `p` for the p-adics.
    type Scale: Copy + Debug + PartialEq + Default + Send + Sync + Add<Output = Self::Scale>;

    fn spec(&self) -> FieldSpec;

    /// True when arithmetic is exact (no rounding).
    fn is_exact(&self) -> bool;

    fn abs(&self, x: &Self::Elem) -> f64;

    fn log_abs(&self, x: &Self::Elem) -> f64 {
        self.abs(x).ln()
    }

    /// Orders by absolute value; used for pivot selection.
    fn cmp_abs(&self, a: &Self::Elem, b: &Self::Elem) -> Ordering;

    /// `|x|` in the most precise form the field offers.
    fn magnitude(&self, x: &Self::Elem) -> Magnitude;

    fn from_i64(&self, n: i64) -> Self::Elem;

    fn from_scalar(&self, s: &Scalar) -> Result<Self::Elem>;

    fn to_scalar(&self, x: &Self::Elem) -> Scalar;

    /// `log |c|` where `c` is the scale factor encoded by `s`.
    fn scale_log(&self, s: Self::Scale) -> f64;

    /// The scale factor `c` encoded by `s` as a field element.
    fn scale_factor(&self, s: Self::Scale) -> Self::Elem;

    /// Divides `xs` in place by a scale factor chosen so the largest entry has
    /// absolute value one, returning the factor's encoding.
    fn normalize_entries(&self, xs: &mut [Self::Elem]) -> Self::Scale;

    /// Euclidean norm (reals) or max norm (p-adics).
    fn vector_norm(&self, xs: &[Self::Elem]) -> f64;

    fn log_vector_norm(&self, xs: &[Self::Elem]) -> f64 {
        self.vector_norm(xs).ln()
    }

    /// Deterministic norm-one representative of the line through `xs`.
    fn canonical_representative(&self, xs: &[Self::Elem]) -> Vec<Self::Elem>;

    /// Operator norm of the canonical norm: largest singular value (reals), max entry (p-adics).
    fn operator_norm(&self, m: &Matrix<Self::Elem>) -> f64;

    fn cartan(&self, m: &Matrix<Self::Elem>) -> Result<CartanParts<Self::Elem>>;

    fn iwasawa(&self, m: &Matrix<Self::Elem>) -> Result<IwasawaParts<Self::Elem>>;

    /// Whether `k` preserves the canonical norm (orthogonal / in `GL_d` of the valuation ring).
    fn is_isometry(&self, k: &Matrix<Self::Elem>, tol: f64) -> bool;

    /// `det - 1` is within the field's unimodularity tolerance.
    fn is_unit_determinant(&self, det: &Self::Elem) -> bool;

    /// Whether `m` has a unique eigenvalue of maximal absolute value
    /// (counted with multiplicity), i.e. whether `m` is proximal.
    fn is_proximal(&self, m: &Matrix<Self::Elem>) -> bool;
}

/// The real numbers in `f64`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Real;

/// Unimodularity tolerance for real matrices.
pub const REAL_DET_TOL: f64 = 1e-9;

impl LocalField for Real {
    type Elem = f64;
    type Scale = f64;

    fn spec(&self) -> FieldSpec {
        FieldSpec::Archimedean
    }

    fn is_exact(&self) -> bool {
        false
    }

    fn abs(&self, x: &f64) -> f64 {
        x.abs()
    }

    fn cmp_abs(&self, a: &f64, b: &f64) -> Ordering {
        a.abs().total_cmp(&b.abs())
    }

    fn magnitude(&self, x: &f64) -> Magnitude {
        Magnitude::from_value(x.abs())
    }

    fn from_i64(&self, n: i64) -> f64 {
        n as f64
    }

    fn from_scalar(&self, s: &Scalar) -> Result<f64> {
        let x = s.to_f64();
        if x.is_finite() {
            Ok(x)
        } else {
            Err(Error::Parse(format!("non-finite real {s}")))
        }
    }

    fn to_scalar(&self, x: &f64) -> Scalar {
        Scalar::Real(*x)
    }

    fn scale_log(&self, s: f64) -> f64 {
        s
    }

    fn scale_factor(&self, s: f64) -> f64 {
        s.exp()
    }

    fn normalize_entries(&self, xs: &mut [f64]) -> f64 {
        let m = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if m == 0.0 || !m.is_finite() {
            return 0.0;
        }
        for x in xs.iter_mut() {
            *x /= m;
        }
        m.ln()
    }

    fn vector_norm(&self, xs: &[f64]) -> f64 {
        let m = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if m == 0.0 {
            return 0.0;
        }
        m * xs.iter().map(|x| (x / m) * (x / m)).sum::<f64>().sqrt()
    }

    fn canonical_representative(&self, xs: &[f64]) -> Vec<f64> {
        let n = self.vector_norm(xs);
        let mut out: Vec<f64> = xs.iter().map(|x| x / n).collect();
        if let Some(first) = out.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                out.iter_mut().for_each(|x| *x = -*x);
            }
        }
        out
    }

    fn operator_norm(&self, m: &Matrix<f64>) -> f64 {
        real_decomp::largest_singular_value(m)
    }

    fn cartan(&self, m: &Matrix<f64>) -> Result<CartanParts<f64>> {
        real_decomp::cartan(m)
    }

    fn iwasawa(&self, m: &Matrix<f64>) -> Result<IwasawaParts<f64>> {
        real_decomp::iwasawa(m)
    }

    fn is_isometry(&self, k: &Matrix<f64>, tol: f64) -> bool {
        let ktk = &k.transpose() * k;
        let d = k.rows();
        let orthogonal = (0..d).all(|i| {
            (0..d).all(|j| {
                let target = if i == j { 1.0 } else { 0.0 };
                (ktk[(i, j)] - target).abs() <= tol
            })
        });
        orthogonal && (crate::projlin::determinant(self, k) - 1.0).abs() <= tol
    }

    fn is_unit_determinant(&self, det: &f64) -> bool {
        (det - 1.0).abs() <= REAL_DET_TOL
    }

    fn is_proximal(&self, m: &Matrix<f64>) -> bool {
        crate::walk::proximal::real_is_proximal(m)
    }
}

/// The rationals with the `p`-adic absolute value, elements kept exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PAdic {
    prime: u64,
}

impl PAdic {
    pub fn new(prime: u64) -> Result<Self> {
        FieldSpec::padic(prime)?;
        Ok(PAdic { prime })
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn valuation(&self, x: &BigRational) -> Valuation {
        rational_valuation(x, self.prime)
    }

    /// Minimum valuation over the entries (`Infinite` for the zero vector).
    pub fn min_valuation(&self, xs: &[BigRational]) -> Valuation {
        xs.iter()
            .map(|x| self.valuation(x))
            .min()
            .unwrap_or(Valuation::Infinite)
    }

    pub fn power(&self, k: i64) -> BigRational {
        prime_power(self.prime, k)
    }

    /// Whether `x` lies in the valuation ring `Z_(p)`.
    pub fn is_integral(&self, x: &BigRational) -> bool {
        self.valuation(x) >= Valuation::Finite(0)
    }
}

impl LocalField for PAdic {
    type Elem = BigRational;
    type Scale = i64;

    fn spec(&self) -> FieldSpec {
        FieldSpec::NonArchimedean { prime: self.prime }
    }

    fn is_exact(&self) -> bool {
        true
    }

    fn abs(&self, x: &BigRational) -> f64 {
        padic_abs_from_valuation(self.valuation(x), self.prime)
    }

    fn log_abs(&self, x: &BigRational) -> f64 {
        match self.valuation(x) {
            Valuation::Infinite => f64::NEG_INFINITY,
            Valuation::Finite(v) => -(v as f64) * (self.prime as f64).ln(),
        }
    }

    fn cmp_abs(&self, a: &BigRational, b: &BigRational) -> Ordering {
        // larger absolute value = smaller valuation
        self.valuation(b).cmp(&self.valuation(a))
    }

    fn magnitude(&self, x: &BigRational) -> Magnitude {
        Magnitude::padic(self.prime, self.valuation(x))
    }

    fn from_i64(&self, n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    fn from_scalar(&self, s: &Scalar) -> Result<BigRational> {
        s.to_rational()
            .ok_or_else(|| Error::Parse(format!("{s} has no exact rational value")))
    }

    fn to_scalar(&self, x: &BigRational) -> Scalar {
        Scalar::Rational(x.clone())
    }

    fn scale_log(&self, m: i64) -> f64 {
        -(m as f64) * (self.prime as f64).ln()
    }

    fn scale_factor(&self, m: i64) -> BigRational {
        self.power(m)
    }

    fn normalize_entries(&self, xs: &mut [BigRational]) -> i64 {
        match self.min_valuation(xs) {
            Valuation::Infinite => 0,
            Valuation::Finite(m) => {
                if m != 0 {
                    let f = self.power(-m);
                    for x in xs.iter_mut() {
                        *x = &*x * &f;
                    }
                }
                m
            }
        }
    }

    fn vector_norm(&self, xs: &[BigRational]) -> f64 {
        padic_abs_from_valuation(self.min_valuation(xs), self.prime)
    }

    fn log_vector_norm(&self, xs: &[BigRational]) -> f64 {
        match self.min_valuation(xs) {
            Valuation::Infinite => f64::NEG_INFINITY,
            Valuation::Finite(v) => -(v as f64) * (self.prime as f64).ln(),
        }
    }

    /// Divides by the first coordinate of minimal valuation, which becomes exactly 1.
    fn canonical_representative(&self, xs: &[BigRational]) -> Vec<BigRational> {
        let m = self.min_valuation(xs);
        match xs.iter().find(|x| self.valuation(x) == m && !x.is_zero()) {
            Some(pivot) => {
                let pivot = pivot.clone();
                xs.iter().map(|x| x / &pivot).collect()
            }
            None => xs.to_vec(),
        }
    }

    fn operator_norm(&self, m: &Matrix<BigRational>) -> f64 {
        self.vector_norm(m.data())
    }

    fn cartan(&self, m: &Matrix<BigRational>) -> Result<CartanParts<BigRational>> {
        padic_decomp::cartan(self, m)
    }

    fn iwasawa(&self, m: &Matrix<BigRational>) -> Result<IwasawaParts<BigRational>> {
        padic_decomp::iwasawa(self, m)
    }

    fn is_isometry(&self, k: &Matrix<BigRational>, _tol: f64) -> bool {
        k.data().iter().all(|x| self.is_integral(x))
            && self.valuation(&crate::projlin::determinant(self, k)) == Valuation::Finite(0)
    }

    fn is_unit_determinant(&self, det: &BigRational) -> bool {
        det == &BigRational::from_integer(1.into())
    }

    fn is_proximal(&self, m: &Matrix<BigRational>) -> bool {
        crate::walk::proximal::padic_is_proximal(self, m)
    }
}
