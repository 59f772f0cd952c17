//! Hölder test functions on projective space and its dual, and the
//! asymptotic independence test for the Cartan frames of `S_n`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{tag, MeanEstimate};
use crate::error::{Error, Result};
use crate::projlin::{dist_point_hyperplane_raw, fubini_study_raw, pairing_lipschitz_constant};
use crate::scalar::{FieldSpec, LocalField, Scalar};
use crate::walk::{stream_rng, walk, WalkMeasure};

/// One distance factor, raised to the power `eps` of the test function.
/// Evaluated at a point `[x]` of `P(V)` or at a functional `[f]` of `P(V*)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DistanceFactor {
    /// `δ(·, [y])` for a fixed point or functional `y` of the same space.
    Point(Vec<String>),
    /// `δ([x], Ker f)` at a point, or `δ([y], Ker f)` at a functional `f`
    /// for a fixed vector `y`.
    Hyperplane(Vec<String>),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combine {
    #[default]
    Product,
    Sum,
}

/// `φ = ∏ δᵢ^eps` or `φ = Σ δᵢ^eps` over the listed factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderTestFunction {
    pub factors: Vec<DistanceFactor>,
    #[serde(default)]
    pub combine: Combine,
    pub eps: f64,
}

fn basis_strings(d: usize, i: usize) -> Vec<String> {
    (0..d).map(|j| if j == i { "1".into() } else { "0".into() }).collect()
}

impl HolderTestFunction {
    pub fn single(factor: DistanceFactor, eps: f64) -> Self {
        HolderTestFunction { factors: vec![factor], combine: Combine::Product, eps }
    }

    /// Named functions for dimension `d`: `dist_e1`, `dist_ones`,
    /// `ker_e1`, `ker_ones`, `product_e1_e2`, `sum_e1_ker_e2`.
    pub fn catalog(d: usize, eps: f64) -> Vec<(&'static str, HolderTestFunction)> {
        let e1 = basis_strings(d, 0);
        let e2 = basis_strings(d, 1);
        let ones = vec!["1".to_string(); d];
        let single = |f| HolderTestFunction::single(f, eps);
        vec![
            ("dist_e1", single(DistanceFactor::Point(e1.clone()))),
            ("dist_ones", single(DistanceFactor::Point(ones.clone()))),
            ("ker_e1", single(DistanceFactor::Hyperplane(e1.clone()))),
            ("ker_ones", single(DistanceFactor::Hyperplane(ones))),
            (
                "product_e1_e2",
                HolderTestFunction {
                    factors: vec![DistanceFactor::Point(e1.clone()), DistanceFactor::Point(e2.clone())],
                    combine: Combine::Product,
                    eps,
                },
            ),
            (
                "sum_e1_ker_e2",
                HolderTestFunction {
                    factors: vec![DistanceFactor::Point(e1), DistanceFactor::Hyperplane(e2)],
                    combine: Combine::Sum,
                    eps,
                },
            ),
        ]
    }

    pub fn by_name(name: &str, d: usize, eps: f64) -> Result<Self> {
        Self::catalog(d, eps)
            .into_iter()
            .find(|(n, _)| *n == name)
            .map(|(_, f)| f)
            .ok_or_else(|| Error::Usage(format!("unknown test function {name:?}")))
    }

    /// Upper bound on `‖φ‖_∞ + [φ]_eps`. Each factor is `L`-Lipschitz with
    /// values in `[0, 1]` (`L = 1` for a point, the pairing constant for a
    /// hyperplane), so its `eps` power has Hölder constant `L^eps`; products
    /// and sums add the constants.
    pub fn holder_norm_bound(&self, spec: &FieldSpec) -> f64 {
        let consts = self.factors.iter().map(|f| match f {
            DistanceFactor::Point(_) => 1.0,
            DistanceFactor::Hyperplane(_) => pairing_lipschitz_constant(spec).powf(self.eps),
        });
        let sup = match self.combine {
            Combine::Product => 1.0,
            Combine::Sum => self.factors.len() as f64,
        };
        sup + consts.sum::<f64>()
    }

    /// Parses the reference coordinates over `field` and checks dimensions.
    pub fn bind<F: LocalField>(&self, field: &F, d: usize) -> Result<BoundTestFunction<F>> {
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::Domain(format!("test function exponent must lie in (0, 1], got {}", self.eps)));
        }
        if self.factors.is_empty() {
            return Err(Error::Usage("test function needs at least one factor".into()));
        }
        let spec = field.spec();
        let parse = |coords: &[String], i: usize| -> Result<Vec<F::Elem>> {
            if coords.len() != d {
                return Err(Error::Dimension { expected: d, found: coords.len() });
            }
            let xs = coords
                .iter()
                .map(|s| field.from_scalar(&Scalar::parse(s, &spec)?))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::Parse(format!("factors[{i}]: {e}")))?;
            if xs.iter().all(num_traits::Zero::is_zero) {
                return Err(Error::Domain(format!("factors[{i}] is zero")));
            }
            Ok(xs)
        };
        let factors = self
            .factors
            .iter()
            .enumerate()
            .map(|(i, f)| match f {
                DistanceFactor::Point(c) => parse(c, i).map(|x| (false, x)),
                DistanceFactor::Hyperplane(c) => parse(c, i).map(|x| (true, x)),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BoundTestFunction { factors, combine: self.combine, eps: self.eps, field: field.clone() })
    }
}

/// A [`HolderTestFunction`] with coordinates parsed over a field.
#[derive(Clone, Debug)]
pub struct BoundTestFunction<F: LocalField> {
    /// `(is_hyperplane, coordinates)`.
    factors: Vec<(bool, Vec<F::Elem>)>,
    combine: Combine,
    eps: f64,
    field: F,
}

impl<F: LocalField> BoundTestFunction<F> {
    pub fn eval(&self, z: &[F::Elem]) -> f64 {
        let vals = self.factors.iter().map(|(hyper, y)| {
            let d = if *hyper {
                dist_point_hyperplane_raw(&self.field, z, y)
            } else {
                fubini_study_raw(&self.field, z, y)
            };
            d.expect("bound factors are nonzero and of matching dimension").powf(self.eps)
        });
        match self.combine {
            Combine::Product => vals.product(),
            Combine::Sum => vals.sum(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Independence {
    /// `|E φ₁(X)φ₂(Y) − E φ₁(X) E φ₂(Y)|` with `X = k(S_n)e₁`, `Y = e₁*∘u(S_n)`.
    pub discrepancy: f64,
    /// Standard error of the empirical covariance.
    pub std_err: f64,
    pub mean_joint: f64,
    pub mean_first: f64,
    pub mean_second: f64,
    pub n: usize,
    pub reps: usize,
}

/// Empirical covariance of `φ₁` at the attracting direction and `φ₂` at the
/// repelling functional of `S_n`.
pub fn independence_test<F: LocalField>(
    m: &WalkMeasure<F>,
    phi1: &HolderTestFunction,
    phi2: &HolderTestFunction,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<Independence> {
    if n == 0 || reps < 2 {
        return Err(Error::Domain("need n >= 1 and at least two repetitions".into()));
    }
    let field = m.field();
    let f1 = phi1.bind(field, m.dim())?;
    let f2 = phi2.bind(field, m.dim())?;
    let pairs: Vec<(f64, f64)> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let s = walk(m, n, stream_rng(seed, &[tag::INDEPENDENCE, r as u64]));
            let dec = s.right_kak(field);
            (f1.eval(&dec.v.0), f2.eval(&dec.h.0))
        })
        .collect();
    let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let ma = MeanEstimate::of(&a).mean;
    let mb = MeanEstimate::of(&b).mean;
    let joint = MeanEstimate::of(&pairs.iter().map(|p| p.0 * p.1).collect::<Vec<_>>()).mean;
    let centred = MeanEstimate::of(&pairs.iter().map(|p| (p.0 - ma) * (p.1 - mb)).collect::<Vec<_>>());
    Ok(Independence {
        discrepancy: (joint - ma * mb).abs(),
        std_err: centred.std_err,
        mean_joint: joint,
        mean_first: ma,
        mean_second: mb,
        n,
        reps,
    })
}
