//! Vectors, covectors and determinant-one matrices over a local field,
//! together with the exterior square, the canonical norms and the
//! Fubini-Study metric on projective space.

mod matrix;
mod scaled;

pub use matrix::{dot, Matrix, Ring};
pub use scaled::{scaled_multiply, ScaledMatrix};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{FieldSpec, LocalField, PAdic, Scalar, Valuation};

/// A column vector; as a projective point it stands for the line it spans.
#[derive(Clone, Debug, PartialEq)]
pub struct Vector<E>(pub Vec<E>);

/// A linear functional `f(x) = Σ f_i x_i`; as a projective object it stands
/// for the hyperplane `Ker f`.
#[derive(Clone, Debug, PartialEq)]
pub struct Covector<E>(pub Vec<E>);

impl<E: Ring> Vector<E> {
    pub fn basis(d: usize, i: usize) -> Self {
        Vector((0..d).map(|j| if i == j { E::one() } else { E::zero() }).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }
}

impl<E: Ring> Covector<E> {
    pub fn basis(d: usize, i: usize) -> Self {
        Covector(Vector::basis(d, i).0)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn apply(&self, x: &Vector<E>) -> E {
        dot(&self.0, &x.0)
    }
}

/// A square matrix of determinant one (exactly for the p-adics, within
/// [`crate::scalar::REAL_DET_TOL`] for the reals).
#[derive(Clone, Debug, PartialEq)]
pub struct SlMatrix<E>(Matrix<E>);

impl<E: Ring> SlMatrix<E> {
    pub fn new<F: LocalField<Elem = E>>(field: &F, m: Matrix<E>) -> Result<Self> {
        if !m.is_square() || m.rows() < 2 {
            return Err(Error::Invariant(format!(
                "expected a square matrix of size at least 2, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let det = determinant(field, &m);
        if !field.is_unit_determinant(&det) {
            return Err(Error::Invariant(format!(
                "matrix is not unimodular (det = {})",
                field.to_scalar(&det)
            )));
        }
        Ok(SlMatrix(m))
    }

    pub fn from_rows<F: LocalField<Elem = E>>(field: &F, rows: Vec<Vec<E>>) -> Result<Self> {
        SlMatrix::new(field, Matrix::from_rows(rows))
    }

    /// Wraps a matrix the caller knows to be unimodular.
    #[cfg(test)]
    pub(crate) fn new_unchecked(m: Matrix<E>) -> Self {
        SlMatrix(m)
    }

    pub fn identity(d: usize) -> Self {
        SlMatrix(Matrix::identity(d))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &Matrix<E> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix<E> {
        self.0
    }

    pub fn mul(&self, other: &SlMatrix<E>) -> SlMatrix<E> {
        SlMatrix(&self.0 * &other.0)
    }

    /// Exact over the p-adics.
    pub fn inverse<F: LocalField<Elem = E>>(&self, field: &F) -> SlMatrix<E> {
        SlMatrix(inverse(field, &self.0).expect("unimodular matrices are invertible"))
    }
}

/// Determinant by Gaussian elimination with pivoting on the largest absolute value.
pub fn determinant<F: LocalField>(field: &F, m: &Matrix<F::Elem>) -> F::Elem {
    assert!(m.is_square());
    let d = m.rows();
    let mut a = m.clone();
    let mut det = F::Elem::one();
    for c in 0..d {
        let pivot = (c..d)
            .filter(|&r| !a[(r, c)].is_zero())
            .max_by(|&r, &s| field.cmp_abs(&a[(r, c)], &a[(s, c)]).then(s.cmp(&r)));
        let Some(p) = pivot else {
            return F::Elem::zero();
        };
        if p != c {
            a.swap_rows(p, c);
            det = -det;
        }
        let piv = a[(c, c)].clone();
        det = det * piv.clone();
        for r in c + 1..d {
            if a[(r, c)].is_zero() {
                continue;
            }
            let factor = -(a[(r, c)].clone() / piv.clone());
            a.add_row_multiple(r, c, &factor);
        }
    }
    det
}

/// Inverse by Gauss-Jordan elimination.
pub fn inverse<F: LocalField>(field: &F, m: &Matrix<F::Elem>) -> Result<Matrix<F::Elem>> {
    assert!(m.is_square());
    let d = m.rows();
    let mut a = m.clone();
    let mut inv = Matrix::identity(d);
    for c in 0..d {
        let pivot = (c..d)
            .filter(|&r| !a[(r, c)].is_zero())
            .max_by(|&r, &s| field.cmp_abs(&a[(r, c)], &a[(s, c)]).then(s.cmp(&r)))
            .ok_or_else(|| Error::Domain("singular matrix".into()))?;
        a.swap_rows(pivot, c);
        inv.swap_rows(pivot, c);
        let piv_inv = F::Elem::one() / a[(c, c)].clone();
        a.scale_row(c, &piv_inv);
        inv.scale_row(c, &piv_inv);
        for r in 0..d {
            if r == c || a[(r, c)].is_zero() {
                continue;
            }
            let factor = -a[(r, c)].clone();
            a.add_row_multiple(r, c, &factor);
            inv.add_row_multiple(r, c, &factor);
        }
    }
    Ok(inv)
}

/// Index pairs `(i, j)`, `i < j`, in lexicographic order: the basis `e_i ∧ e_j` of `⋀²`.
pub fn wedge_basis(d: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(d * (d - 1) / 2);
    for i in 0..d {
        for j in i + 1..d {
            out.push((i, j));
        }
    }
    out
}

/// Coordinates of `x ∧ y` in the lexicographic wedge basis.
pub fn wedge<E: Ring>(x: &[E], y: &[E]) -> Vec<E> {
    assert_eq!(x.len(), y.len());
    wedge_basis(x.len())
        .into_iter()
        .map(|(i, j)| x[i].clone() * y[j].clone() - x[j].clone() * y[i].clone())
        .collect()
}

/// Matrix of the induced action of `g` on `⋀² k^d`.
pub fn exterior_square<E: Ring>(g: &Matrix<E>) -> Matrix<E> {
    assert!(g.is_square());
    let basis = wedge_basis(g.rows());
    Matrix::from_fn(basis.len(), basis.len(), |r, c| {
        let (i, j) = basis[r];
        let (k, l) = basis[c];
        g[(i, k)].clone() * g[(j, l)].clone() - g[(i, l)].clone() * g[(j, k)].clone()
    })
}

pub fn vector_norm<F: LocalField>(field: &F, x: &Vector<F::Elem>) -> f64 {
    field.vector_norm(&x.0)
}

pub fn operator_norm<F: LocalField>(field: &F, g: &Matrix<F::Elem>) -> f64 {
    field.operator_norm(g)
}

/// `g·f = f ∘ g⁻¹`.
pub fn dual_action<F: LocalField>(
    field: &F,
    g: &SlMatrix<F::Elem>,
    f: &Covector<F::Elem>,
) -> Covector<F::Elem> {
    let g_inv = g.inverse(field);
    Covector(g_inv.matrix().vec_mul(&f.0))
}

fn nonzero_or_domain<E: Ring>(xs: &[E], what: &str) -> Result<()> {
    if xs.iter().all(Zero::is_zero) {
        Err(Error::Domain(format!("{what} is zero")))
    } else {
        Ok(())
    }
}

/// `δ([x],[y]) = ‖x∧y‖ / (‖x‖‖y‖)`.
pub fn fubini_study<F: LocalField>(
    field: &F,
    x: &Vector<F::Elem>,
    y: &Vector<F::Elem>,
) -> Result<f64> {
    fubini_study_raw(field, &x.0, &y.0)
}

/// Fubini-Study distance on any pair of coordinate lists (points or functionals).
pub fn fubini_study_raw<F: LocalField>(field: &F, x: &[F::Elem], y: &[F::Elem]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension { expected: x.len(), found: y.len() });
    }
    nonzero_or_domain(x, "first vector")?;
    nonzero_or_domain(y, "second vector")?;
    // unit representatives keep the wedge well scaled
    let xu = field.canonical_representative(x);
    let yu = field.canonical_representative(y);
    let num = field.vector_norm(&wedge(&xu, &yu));
    let den = field.vector_norm(&xu) * field.vector_norm(&yu);
    Ok((num / den).min(1.0))
}

/// `δ([x], Ker f) = |f(x)| / (‖f‖‖x‖)`.
pub fn dist_point_hyperplane<F: LocalField>(
    field: &F,
    x: &Vector<F::Elem>,
    f: &Covector<F::Elem>,
) -> Result<f64> {
    dist_point_hyperplane_raw(field, &x.0, &f.0)
}

pub fn dist_point_hyperplane_raw<F: LocalField>(
    field: &F,
    x: &[F::Elem],
    f: &[F::Elem],
) -> Result<f64> {
    if x.len() != f.len() {
        return Err(Error::Dimension { expected: x.len(), found: f.len() });
    }
    nonzero_or_domain(x, "point")?;
    nonzero_or_domain(f, "functional")?;
    let xu = field.canonical_representative(x);
    let fu = field.canonical_representative(f);
    let num = field.abs(&dot(&fu, &xu));
    let den = field.vector_norm(&xu) * field.vector_norm(&fu);
    Ok((num / den).min(1.0))
}

/// Exact p-adic Fubini-Study distance as a valuation: `δ = p^(-v)`.
pub fn padic_fubini_study_valuation(
    field: &PAdic,
    x: &[num_rational::BigRational],
    y: &[num_rational::BigRational],
) -> Valuation {
    let w = field.min_valuation(&wedge(x, y));
    match (w, field.min_valuation(x), field.min_valuation(y)) {
        (Valuation::Finite(w), Valuation::Finite(a), Valuation::Finite(b)) => {
            Valuation::Finite(w - a - b)
        }
        _ => Valuation::Infinite,
    }
}

/// Exact p-adic point-to-hyperplane distance as a valuation.
pub fn padic_hyperplane_valuation(
    field: &PAdic,
    x: &[num_rational::BigRational],
    f: &[num_rational::BigRational],
) -> Valuation {
    let num = field.valuation(&dot(f, x));
    match (num, field.min_valuation(x), field.min_valuation(f)) {
        (Valuation::Finite(n), Valuation::Finite(a), Valuation::Finite(b)) => {
            Valuation::Finite(n - a - b)
        }
        _ => Valuation::Infinite,
    }
}

/// `δ([M x], [M y])` computed without forming `M x` and `M y` as nearby unit
/// vectors: `‖⋀²M (x∧y)‖ / (‖Mx‖ ‖My‖)`, all magnitudes kept in log form.
///
/// `wedge_m` must be the separately accumulated exterior square of the same
/// product as `m`; recomputing it from the unit part of `m` would cancel
/// catastrophically once the product is numerically rank one.
pub fn image_distance<F: LocalField>(
    field: &F,
    m: &ScaledMatrix<F>,
    wedge_m: &ScaledMatrix<F>,
    x: &[F::Elem],
    y: &[F::Elem],
) -> f64 {
    let w = wedge(x, y);
    let log_num = field.scale_log(wedge_m.scale) + field.log_vector_norm(&wedge_m.unit.mul_vec(&w));
    let log_den = 2.0 * field.scale_log(m.scale)
        + field.log_vector_norm(&m.unit.mul_vec(x))
        + field.log_vector_norm(&m.unit.mul_vec(y));
    if log_num == f64::NEG_INFINITY {
        return 0.0;
    }
    (log_num - log_den).exp().min(1.0)
}

/// Lipschitz constant of `([x],[f]) ↦ δ([x], Ker f)` for the sum metric on
/// `P(V) × P(V*)`: `√2` for the reals, `1` for the p-adics.
pub fn pairing_lipschitz_constant(spec: &FieldSpec) -> f64 {
    match spec {
        FieldSpec::Archimedean => std::f64::consts::SQRT_2,
        FieldSpec::NonArchimedean { .. } => 1.0,
    }
}

/// Converts a list of scalar rows into a matrix over `field`.
pub fn matrix_from_scalars<F: LocalField>(
    field: &F,
    rows: &[Vec<Scalar>],
) -> Result<Matrix<F::Elem>> {
    let d = rows.len();
    let mut out = Vec::with_capacity(d);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != rows[0].len() {
            return Err(Error::Parse(format!("row {i} has {} entries, expected {}", row.len(), rows[0].len())));
        }
        out.push(row.iter().map(|s| field.from_scalar(s)).collect::<Result<Vec<_>>>()?);
    }
    Ok(Matrix::from_rows(out))
}

/// Serialized matrix: a header object with the dimension and field, then
/// row-major rows of scalar strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub header: MatrixHeader,
    pub entries: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixHeader {
    pub d: usize,
    pub field: FieldSpec,
}

impl MatrixFile {
    pub fn from_matrix<F: LocalField>(field: &F, m: &Matrix<F::Elem>) -> Self {
        MatrixFile {
            header: MatrixHeader { d: m.rows(), field: field.spec() },
            entries: m
                .to_rows()
                .iter()
                .map(|row| row.iter().map(|x| field.to_scalar(x).to_string()).collect())
                .collect(),
        }
    }

    pub fn scalars(&self) -> Result<Vec<Vec<Scalar>>> {
        if self.entries.len() != self.header.d {
            return Err(Error::Dimension { expected: self.header.d, found: self.entries.len() });
        }
        self.entries
            .iter()
            .map(|row| {
                if row.len() != self.header.d {
                    return Err(Error::Dimension { expected: self.header.d, found: row.len() });
                }
                row.iter().map(|s| Scalar::parse(s, &self.header.field)).collect()
            })
            .collect()
    }

    pub fn to_matrix<F: LocalField>(&self, field: &F) -> Result<Matrix<F::Elem>> {
        if field.spec() != self.header.field {
            return Err(Error::Usage(format!(
                "matrix is over {} but {} was requested",
                self.header.field,
                field.spec()
            )));
        }
        matrix_from_scalars(field, &self.scalars()?)
    }
}
