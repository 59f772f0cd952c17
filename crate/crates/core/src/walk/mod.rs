//! Finitely supported measures on `SL_d`, seeded sampling, and the two walk
//! orders `M_n = X₁⋯X_n` and `S_n = X_n⋯X₁` built from one increment sequence.

pub(crate) mod proximal;
mod rng;

pub use proximal::find_proximal_product;
pub use rng::{splitmix64, stream_id, stream_rng, RNG_ALGORITHM};

use std::io::Write;
use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomp::{kak_of_matrix, KakDecomposition};
use crate::error::{Error, Result};
use crate::projlin::{exterior_square, matrix_from_scalars, Matrix, ScaledMatrix, SlMatrix};
use crate::scalar::{parse_exact, FieldSpec, LocalField, PAdic, Real, Scalar};

/// A probability measure with finitely many atoms and exact rational weights.
#[derive(Clone, Debug)]
pub struct WalkMeasure<F: LocalField> {
    field: F,
    atoms: Vec<SlMatrix<F::Elem>>,
    wedges: Vec<Matrix<F::Elem>>,
    probs: Vec<BigRational>,
    /// `⌊(p₀ + … + p_i)·2⁶⁴⌋`; the last entry is exactly `2⁶⁴`.
    thresholds: Vec<u128>,
}

impl<F: LocalField> WalkMeasure<F> {
    pub fn new(field: F, atoms: Vec<SlMatrix<F::Elem>>, probs: Vec<BigRational>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Invariant("a measure needs at least one atom".into()));
        }
        if atoms.len() != probs.len() {
            return Err(Error::Invariant(format!("{} atoms but {} probabilities", atoms.len(), probs.len())));
        }
        let d = atoms[0].dim();
        if let Some(i) = atoms.iter().position(|a| a.dim() != d) {
            return Err(Error::Invariant(format!("atoms[{i}] has dimension {}, expected {d}", atoms[i].dim())));
        }
        if let Some(i) = probs.iter().position(|p| !p.is_positive()) {
            return Err(Error::Invariant(format!("probs[{i}] = {} is not positive", probs[i])));
        }
        let total = probs.iter().fold(BigRational::zero(), |a, p| a + p);
        if !total.is_one() {
            return Err(Error::Invariant(format!("probabilities sum to {total}, not 1")));
        }
        let mut cum = BigRational::zero();
        let thresholds = probs
            .iter()
            .map(|p| {
                cum += p;
                let t: BigInt = (cum.numer() << 64u32) / cum.denom();
                u128::try_from(t).expect("cumulative probability is at most 1")
            })
            .collect();
        let wedges = atoms.iter().map(|a| exterior_square(a.matrix())).collect();
        Ok(WalkMeasure { field, atoms, wedges, probs, thresholds })
    }

    pub fn point_mass(field: F, g: SlMatrix<F::Elem>) -> Self {
        Self::new(field, vec![g], vec![BigRational::one()]).expect("a point mass is a valid measure")
    }

    pub fn uniform(field: F, atoms: Vec<SlMatrix<F::Elem>>) -> Result<Self> {
        let n = BigInt::from(atoms.len());
        let probs = vec![BigRational::new(BigInt::one(), n); atoms.len()];
        Self::new(field, atoms, probs)
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].dim()
    }

    pub fn atoms(&self) -> &[SlMatrix<F::Elem>] {
        &self.atoms
    }

    pub fn probs(&self) -> &[BigRational] {
        &self.probs
    }

    /// Index of the next increment; consumes exactly one `u64` draw.
    pub fn sample_index(&self, rng: &mut ChaCha8Rng) -> usize {
        let x = rng.next_u64() as u128;
        self.thresholds.partition_point(|&t| t <= x)
    }

    /// The file form of this measure.
    pub fn to_file(&self) -> MeasureFile {
        MeasureFile {
            field: self.field.spec(),
            d: self.dim(),
            atoms: self
                .atoms
                .iter()
                .map(|a| {
                    a.matrix()
                        .to_rows()
                        .iter()
                        .map(|row| row.iter().map(|x| self.field.to_scalar(x).to_string()).collect())
                        .collect()
                })
                .collect(),
            probs: self.probs.iter().map(|p| p.to_string()).collect(),
        }
    }
}

/// Draws one increment of `m`.
pub fn sample_increment<'a, F: LocalField>(m: &'a WalkMeasure<F>, rng: &mut ChaCha8Rng) -> &'a SlMatrix<F::Elem> {
    &m.atoms[m.sample_index(rng)]
}

/// Measure file: `{field, d, atoms, probs}` with scalar strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureFile {
    pub field: FieldSpec,
    pub d: usize,
    pub atoms: Vec<Vec<Vec<String>>>,
    pub probs: Vec<String>,
}

impl MeasureFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: MeasureFile = serde_json::from_str(text)?;
        file.field.validate().map_err(|e| Error::Parse(format!("field: {e}")))?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    /// Builds the measure over `field`, naming the offending entry on failure.
    pub fn to_measure<F: LocalField>(&self, field: F) -> Result<WalkMeasure<F>> {
        if field.spec() != self.field {
            return Err(Error::Usage(format!("measure is over {} but {} was requested", self.field, field.spec())));
        }
        if self.d < 2 {
            return Err(Error::Parse(format!("d: must be at least 2, got {}", self.d)));
        }
        let mut atoms = Vec::with_capacity(self.atoms.len());
        for (i, rows) in self.atoms.iter().enumerate() {
            if rows.len() != self.d || rows.iter().any(|r| r.len() != self.d) {
                return Err(Error::Parse(format!("atoms[{i}]: expected a {0}x{0} matrix", self.d)));
            }
            let scalars = rows
                .iter()
                .enumerate()
                .map(|(r, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(c, s)| {
                            Scalar::parse(s, &self.field).map_err(|e| Error::Parse(format!("atoms[{i}][{r}][{c}]: {e}")))
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            let m = matrix_from_scalars(&field, &scalars).map_err(|e| Error::Parse(format!("atoms[{i}]: {e}")))?;
            atoms.push(SlMatrix::new(&field, m).map_err(|e| Error::Invariant(format!("atoms[{i}]: {e}")))?);
        }
        let probs = self
            .probs
            .iter()
            .enumerate()
            .map(|(i, s)| parse_exact(s).map_err(|e| Error::Parse(format!("probs[{i}]: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        WalkMeasure::new(field, atoms, probs)
    }

    pub fn into_any(&self) -> Result<AnyMeasure> {
        Ok(match self.field {
            FieldSpec::Archimedean => AnyMeasure::Real(self.to_measure(Real)?),
            FieldSpec::NonArchimedean { prime } => AnyMeasure::PAdic(self.to_measure(PAdic::new(prime)?)?),
        })
    }
}

/// A measure over whichever field its file names.
#[derive(Clone, Debug)]
pub enum AnyMeasure {
    Real(WalkMeasure<Real>),
    PAdic(WalkMeasure<PAdic>),
}

impl AnyMeasure {
    pub fn spec(&self) -> FieldSpec {
        match self {
            AnyMeasure::Real(m) => m.field.spec(),
            AnyMeasure::PAdic(m) => m.field.spec(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            AnyMeasure::Real(m) => m.dim(),
            AnyMeasure::PAdic(m) => m.dim(),
        }
    }
}

/// Both walk orders after `step` increments, each with the exterior square
/// tracked separately so `a₂/a₁` stays accurate after the unit parts become
/// numerically rank one.
#[derive(Clone, Debug)]
pub struct WalkState<F: LocalField> {
    pub step: usize,
    /// `M_n = X₁⋯X_n`.
    pub left: ScaledMatrix<F>,
    /// `S_n = X_n⋯X₁`.
    pub right: ScaledMatrix<F>,
    pub left_wedge: ScaledMatrix<F>,
    pub right_wedge: ScaledMatrix<F>,
    pub rng: ChaCha8Rng,
}

impl<F: LocalField> WalkState<F> {
    pub fn new(d: usize, rng: ChaCha8Rng) -> Self {
        let w = d * (d - 1) / 2;
        WalkState {
            step: 0,
            left: ScaledMatrix::identity(d),
            right: ScaledMatrix::identity(d),
            left_wedge: ScaledMatrix::identity(w),
            right_wedge: ScaledMatrix::identity(w),
            rng,
        }
    }

    /// Samples one increment `X` and sets `M ← M·X`, `S ← X·S`. Returns the atom index.
    pub fn advance(&mut self, m: &WalkMeasure<F>) -> usize {
        let i = m.sample_index(&mut self.rng);
        let (x, wx) = (m.atoms[i].matrix(), &m.wedges[i]);
        self.left.mul_right(&m.field, x);
        self.right.mul_left(&m.field, x);
        self.left_wedge.mul_right(&m.field, wx);
        self.right_wedge.mul_left(&m.field, wx);
        self.step += 1;
        i
    }

    /// Advances until `step == n` (no-op if already there).
    pub fn run_to(&mut self, m: &WalkMeasure<F>, n: usize) {
        while self.step < n {
            self.advance(m);
        }
    }

    pub fn log_norm_left(&self, field: &F) -> f64 {
        self.left.log_norm(field)
    }

    pub fn log_norm_right(&self, field: &F) -> f64 {
        self.right.log_norm(field)
    }

    /// `log|a₂/a₁|` of `M_n`, from `‖⋀²M‖ / ‖M‖²`.
    pub fn log_ratio_left(&self, field: &F) -> f64 {
        (self.left_wedge.log_norm(field) - 2.0 * self.left.log_norm(field)).min(0.0)
    }

    /// `log|a₂/a₁|` of `S_n`.
    pub fn log_ratio_right(&self, field: &F) -> f64 {
        (self.right_wedge.log_norm(field) - 2.0 * self.right.log_norm(field)).min(0.0)
    }

    /// Cartan decomposition of the unit part of `M_n` (same `k`, `u` as `M_n`).
    pub fn left_kak(&self, field: &F) -> KakDecomposition<F::Elem> {
        kak_of_matrix(field, &self.left.unit).expect("walk products are invertible")
    }

    pub fn right_kak(&self, field: &F) -> KakDecomposition<F::Elem> {
        kak_of_matrix(field, &self.right.unit).expect("walk products are invertible")
    }
}

/// A walk of `n` steps driven by `rng`.
pub fn walk<F: LocalField>(m: &WalkMeasure<F>, n: usize, rng: ChaCha8Rng) -> WalkState<F> {
    let mut s = WalkState::new(m.dim(), rng);
    s.run_to(m, n);
    s
}

fn check_compatible<F: LocalField>(m: &WalkMeasure<F>, m2: &WalkMeasure<F>) -> Result<()> {
    if m.field.spec() != m2.field.spec() {
        return Err(Error::Usage(format!("measures over {} and {}", m.field.spec(), m2.field.spec())));
    }
    if m.dim() != m2.dim() {
        return Err(Error::Dimension { expected: m.dim(), found: m2.dim() });
    }
    Ok(())
}

/// `count` independent walks of length `n`: walk 0 follows `m`, the others
/// follow `m2`; walk `i` uses the stream `stream_rng(seed, [i])`.
pub fn run_independent_walks<F: LocalField>(
    m: &WalkMeasure<F>,
    m2: &WalkMeasure<F>,
    count: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<WalkState<F>>> {
    if count == 0 {
        return Err(Error::Domain("count must be at least 1".into()));
    }
    check_compatible(m, m2)?;
    Ok((0..count)
        .into_par_iter()
        .map(|i| walk(if i == 0 { m } else { m2 }, n, stream_rng(seed, &[i as u64])))
        .collect())
}

/// One line of a trajectory dump. `v` is the attracting point of `M_n`,
/// `h` the repelling functional of `S_n` (the frames that converge), and
/// `a_ratio = |a₂/a₁|(M_n)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub n: usize,
    #[serde(rename = "log_norm_M")]
    pub log_norm_m: f64,
    #[serde(rename = "log_norm_S")]
    pub log_norm_s: f64,
    pub a_ratio: f64,
    pub v: Vec<String>,
    pub h: Vec<String>,
}

pub fn step_record<F: LocalField>(field: &F, s: &WalkState<F>) -> StepRecord {
    let strings = |xs: &[F::Elem]| xs.iter().map(|x| field.to_scalar(x).to_string()).collect();
    StepRecord {
        n: s.step,
        log_norm_m: s.log_norm_left(field),
        log_norm_s: s.log_norm_right(field),
        a_ratio: s.log_ratio_left(field).exp(),
        v: strings(&s.left_kak(field).v.0),
        h: strings(&s.right_kak(field).h.0),
    }
}

/// Records for steps `1..=n` of one walk.
pub fn trajectory<F: LocalField>(m: &WalkMeasure<F>, n: usize, rng: ChaCha8Rng) -> Vec<StepRecord> {
    let mut s = WalkState::new(m.dim(), rng);
    (0..n)
        .map(|_| {
            s.advance(m);
            step_record(&m.field, &s)
        })
        .collect()
}

pub fn write_jsonl<W: Write>(records: &[StepRecord], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests;
