//! Cartan (`KAK`) and Iwasawa (`KAN`) decompositions in `SL_d`.
//!
//! Over the reals `K = SO(d)` and the Cartan decomposition is a sign-repaired
//! singular value decomposition. Over `Q_p` the isometries of the max norm are
//! `GL_d(Z_(p))` and the decomposition comes from a Smith normal form over the
//! valuation ring. Both constructions are deterministic so that every derived
//! quantity (attracting point, repelling hyperplane, ratios) is reproducible.

pub(crate) mod padic;
pub(crate) mod real;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::projlin::{determinant, Covector, Matrix, SlMatrix, Vector};
use crate::scalar::LocalField;

/// Raw output of a field-specific Cartan routine: `m = k · diag(a) · u`.
#[derive(Clone, Debug, PartialEq)]
pub struct CartanParts<E> {
    pub k: Matrix<E>,
    pub k_inv: Matrix<E>,
    pub a: Vec<E>,
    pub u: Matrix<E>,
    pub u_inv: Matrix<E>,
}

/// Raw output of a field-specific Iwasawa routine: `m = k · diag(a) · n`.
#[derive(Clone, Debug, PartialEq)]
pub struct IwasawaParts<E> {
    pub k: Matrix<E>,
    pub a: Vec<E>,
    pub n: Matrix<E>,
}

/// `g = k · diag(a) · u` with `|a_1| ≥ … ≥ |a_d|`, plus the attracting point
/// `v = [k e_1]` and the functional `h = e_1^* ∘ u` whose kernel is the
/// repelling hyperplane `[Span(u⁻¹e_2, …, u⁻¹e_d)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct KakDecomposition<E> {
    pub k: Matrix<E>,
    pub a: Vec<E>,
    pub u: Matrix<E>,
    pub k_inv: Matrix<E>,
    pub u_inv: Matrix<E>,
    pub v: Vector<E>,
    pub h: Covector<E>,
}

impl<E: crate::projlin::Ring> KakDecomposition<E> {
    fn from_parts<F: LocalField<Elem = E>>(field: &F, p: CartanParts<E>) -> Self {
        let v = Vector(field.canonical_representative(&p.k.column(0)));
        let h = Covector(field.canonical_representative(p.u.row(0)));
        KakDecomposition {
            k: p.k,
            a: p.a,
            u: p.u,
            k_inv: p.k_inv,
            u_inv: p.u_inv,
            v,
            h,
        }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// `|a_i|` for each diagonal entry.
    pub fn a_abs<F: LocalField<Elem = E>>(&self, field: &F) -> Vec<f64> {
        self.a.iter().map(|x| field.abs(x)).collect()
    }

    /// `|a_2 / a_1|`, the contraction ratio.
    pub fn ratio<F: LocalField<Elem = E>>(&self, field: &F) -> f64 {
        (field.log_abs(&self.a[1]) - field.log_abs(&self.a[0])).exp()
    }

    /// `k · diag(a) · u`.
    pub fn reconstruct(&self) -> Matrix<E> {
        let mut ka = self.k.clone();
        for (j, aj) in self.a.iter().enumerate() {
            ka.scale_col(j, aj);
        }
        &ka * &self.u
    }

    /// `u⁻¹ e_1`: the input direction that `g` stretches the most.
    pub fn top_input_direction(&self) -> Vec<E> {
        self.u_inv.column(0)
    }

    /// `e_1^* ∘ k⁻¹`, so that `h ∝ (e_1^* ∘ k⁻¹) ∘ g`.
    pub fn top_output_functional(&self) -> Vec<E> {
        self.k_inv.row(0).to_vec()
    }
}

/// Cartan decomposition of a determinant-one matrix.
pub fn kak<F: LocalField>(field: &F, g: &SlMatrix<F::Elem>) -> KakDecomposition<F::Elem> {
    kak_of_matrix(field, g.matrix()).expect("unimodular matrices have a Cartan decomposition")
}

/// Cartan decomposition of any invertible matrix (used for the unit parts of
/// scaled products, whose determinant is not one).
pub fn kak_of_matrix<F: LocalField>(
    field: &F,
    m: &Matrix<F::Elem>,
) -> Result<KakDecomposition<F::Elem>> {
    if !m.is_square() || m.rows() < 2 {
        return Err(Error::Invariant("Cartan decomposition needs a square matrix, d >= 2".into()));
    }
    Ok(KakDecomposition::from_parts(field, field.cartan(m)?))
}

/// Cartan decomposition of `g⁻¹` derived from that of `g`:
/// `g⁻¹ = (u⁻¹ J)(J⁻¹ a⁻¹ J)(J⁻¹ k⁻¹)` with `J` the determinant-one signed
/// reversal permutation, so the diagonal is the reversed reciprocals.
pub fn kak_inverse<F: LocalField>(
    field: &F,
    dec: &KakDecomposition<F::Elem>,
) -> KakDecomposition<F::Elem> {
    let d = dec.dim();
    let j = signed_reversal::<F::Elem>(d);
    let jt = j.transpose();
    let k = &dec.u_inv * &j;
    let k_inv = &jt * &dec.u;
    let u = &jt * &dec.k_inv;
    let u_inv = &dec.k * &j;
    let a = dec
        .a
        .iter()
        .rev()
        .map(|x| F::Elem::one() / x.clone())
        .collect();
    KakDecomposition::from_parts(field, CartanParts { k, k_inv, a, u, u_inv })
}

/// `e_i ↦ ±e_{d-1-i}`, with the sign of column 0 chosen so the determinant is one.
pub fn signed_reversal<E: crate::projlin::Ring>(d: usize) -> Matrix<E> {
    let mut j = Matrix::from_fn(d, d, |r, c| if r + c == d - 1 { E::one() } else { E::zero() });
    // det of the plain reversal is (-1)^(d(d-1)/2)
    if (d * (d - 1) / 2) % 2 == 1 {
        j[(d - 1, 0)] = -E::one();
    }
    j
}

/// `g = k · diag(a) · n` with `n` upper unitriangular.
#[derive(Clone, Debug, PartialEq)]
pub struct IwasawaDecomposition<E> {
    pub k: Matrix<E>,
    pub a: Vec<E>,
    pub n: Matrix<E>,
}

impl<E: crate::projlin::Ring> IwasawaDecomposition<E> {
    pub fn reconstruct(&self) -> Matrix<E> {
        let mut ka = self.k.clone();
        for (j, aj) in self.a.iter().enumerate() {
            ka.scale_col(j, aj);
        }
        &ka * &self.n
    }
}

pub fn iwasawa<F: LocalField>(field: &F, g: &SlMatrix<F::Elem>) -> IwasawaDecomposition<F::Elem> {
    iwasawa_of_matrix(field, g.matrix()).expect("unimodular matrices have an Iwasawa decomposition")
}

pub fn iwasawa_of_matrix<F: LocalField>(
    field: &F,
    m: &Matrix<F::Elem>,
) -> Result<IwasawaDecomposition<F::Elem>> {
    if !m.is_square() || m.rows() < 2 {
        return Err(Error::Invariant("Iwasawa decomposition needs a square matrix, d >= 2".into()));
    }
    if determinant(field, m).is_zero() {
        return Err(Error::Domain("singular matrix".into()));
    }
    let p = field.iwasawa(m)?;
    Ok(IwasawaDecomposition { k: p.k, a: p.a, n: p.n })
}

/// `(|a_i(g)| / |ã_i(g)|)_i`: Cartan versus Iwasawa diagonal parts.
pub fn kak_kan_ratio<F: LocalField>(field: &F, g: &SlMatrix<F::Elem>) -> Vec<f64> {
    let c = kak(field, g);
    let i = iwasawa(field, g);
    c.a.iter()
        .zip(&i.a)
        .map(|(x, y)| (field.log_abs(x) - field.log_abs(y)).exp())
        .collect()
}

#[cfg(test)]
mod tests;
