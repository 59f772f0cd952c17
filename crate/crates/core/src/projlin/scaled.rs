use super::{Matrix, SlMatrix};
use crate::scalar::LocalField;

/// A long product stored as `unit × c` where `unit` has largest entry of
/// absolute value one and `c` is carried as a log (reals) or an exponent
/// of `p` (p-adics), so products of any length stay representable.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledMatrix<F: LocalField> {
    pub unit: Matrix<F::Elem>,
    pub scale: F::Scale,
}

impl<F: LocalField> ScaledMatrix<F> {
    pub fn identity(d: usize) -> Self {
        ScaledMatrix {
            unit: Matrix::identity(d),
            scale: F::Scale::default(),
        }
    }

    pub fn from_matrix(field: &F, m: Matrix<F::Elem>) -> Self {
        let mut s = ScaledMatrix {
            unit: m,
            scale: F::Scale::default(),
        };
        s.renormalize(field);
        s
    }

    pub fn dim(&self) -> usize {
        self.unit.rows()
    }

    fn renormalize(&mut self, field: &F) {
        let extra = field.normalize_entries(self.unit.data_mut());
        self.scale = self.scale + extra;
    }

    /// `self ← self · g`.
    pub fn mul_right(&mut self, field: &F, g: &Matrix<F::Elem>) {
        self.unit = &self.unit * g;
        self.renormalize(field);
    }

    /// `self ← g · self`.
    pub fn mul_left(&mut self, field: &F, g: &Matrix<F::Elem>) {
        self.unit = g * &self.unit;
        self.renormalize(field);
    }

    /// `log` of the scale factor.
    pub fn log_scale(&self, field: &F) -> f64 {
        field.scale_log(self.scale)
    }

    /// `log ‖product‖` for the field's operator norm.
    pub fn log_norm(&self, field: &F) -> f64 {
        self.log_scale(field) + field.operator_norm(&self.unit).ln()
    }

    /// The represented product `c · unit` (may overflow for long real products).
    pub fn to_matrix(&self, field: &F) -> Matrix<F::Elem> {
        let c = field.scale_factor(self.scale);
        self.unit.map(|x| x.clone() * c.clone())
    }

    /// `log ‖product · x‖`.
    pub fn log_norm_of_image(&self, field: &F, x: &[F::Elem]) -> f64 {
        self.log_scale(field) + field.log_vector_norm(&self.unit.mul_vec(x))
    }
}

/// `acc · g`, renormalized.
pub fn scaled_multiply<F: LocalField>(
    field: &F,
    acc: &ScaledMatrix<F>,
    g: &SlMatrix<F::Elem>,
) -> ScaledMatrix<F> {
    let mut out = acc.clone();
    out.mul_right(field, g.matrix());
    out
}
