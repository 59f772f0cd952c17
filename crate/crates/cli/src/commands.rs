//! Subcommands that act on matrix files rather than experiment configs.

use std::path::Path;

use freewalk::decomp::kak_of_matrix;
use freewalk::pingpong::{certify_real_enclosed, pingpong_report, ProximalityCertificate};
use freewalk::projlin::{matrix_from_scalars, Matrix, MatrixFile, SlMatrix};
use freewalk::scalar::{parse_exact, FieldSpec, LocalField, PAdic, Real, Scalar};
use freewalk::stats::{format_float, OUTPUT_DIGITS};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn elem_string<F: LocalField>(field: &F, x: &F::Elem) -> String {
    match field.to_scalar(x) {
        Scalar::Real(v) => format_float(v, OUTPUT_DIGITS),
        s => s.to_string(),
    }
}

fn rows_json<F: LocalField>(field: &F, m: &Matrix<F::Elem>) -> Value {
    m.to_rows().iter().map(|row| row.iter().map(|x| elem_string(field, x)).collect::<Vec<_>>()).collect()
}

fn kak_json<F: LocalField>(field: &F, m: &Matrix<F::Elem>) -> CliResult<Value> {
    let dec = kak_of_matrix(field, m)?;
    let list = |xs: &[F::Elem]| xs.iter().map(|x| elem_string(field, x)).collect::<Vec<_>>();
    let rebuilt = dec.reconstruct();
    let reconstruction = if field.is_exact() {
        json!({ "exact": &rebuilt == m })
    } else {
        let err = rebuilt.data().iter().zip(m.data()).map(|(a, b)| field.abs(&(a.clone() - b.clone()))).fold(0.0, f64::max);
        json!({ "max_abs_error": err })
    };
    Ok(json!({
        "field": field.spec(),
        "d": m.rows(),
        "k": rows_json(field, &dec.k),
        "a": list(&dec.a),
        "u": rows_json(field, &dec.u),
        "v": list(&dec.v.0),
        "h": list(&dec.h.0),
        "log_abs_a": dec.a.iter().map(|x| field.log_abs(x)).collect::<Vec<_>>(),
        "reconstruction": reconstruction,
    }))
}

/// Cartan decomposition of the matrix in `path`.
pub fn kak(path: &Path) -> CliResult<Value> {
    let origin = path.display().to_string();
    let file: MatrixFile = serde_json::from_str(&read(path)?).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
    match file.header.field {
        FieldSpec::Archimedean => kak_json(&Real, &file.to_matrix(&Real).map_err(|e| CliError::input(&origin, e))?),
        FieldSpec::NonArchimedean { prime } => {
            let p = PAdic::new(prime).map_err(|e| CliError::input(&origin, e))?;
            kak_json(&p, &file.to_matrix(&p).map_err(|e| CliError::input(&origin, e))?)
        }
    }
}

/// Candidate ping-pong generators.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorsFile {
    pub field: FieldSpec,
    pub d: usize,
    pub generators: Vec<Vec<Vec<String>>>,
}

impl GeneratorsFile {
    fn check_shape(&self, origin: &str) -> CliResult<()> {
        for (i, g) in self.generators.iter().enumerate() {
            if g.len() != self.d || g.iter().any(|row| row.len() != self.d) {
                return Err(CliError::Config(format!("{origin}: generators[{i}] is not {0}×{0}", self.d)));
            }
        }
        Ok(())
    }

    fn matrices<F: LocalField>(&self, field: &F, origin: &str) -> CliResult<Vec<SlMatrix<F::Elem>>> {
        self.generators
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let ctx = || format!("{origin}: generators[{i}]");
                let scalars = g
                    .iter()
                    .map(|row| row.iter().map(|s| Scalar::parse(s, &self.field)).collect::<freewalk::Result<Vec<_>>>())
                    .collect::<freewalk::Result<Vec<_>>>()
                    .map_err(|e| CliError::input(ctx(), e))?;
                let m = matrix_from_scalars(field, &scalars).map_err(|e| CliError::input(ctx(), e))?;
                SlMatrix::new(field, m).map_err(|e| CliError::input(ctx(), e))
            })
            .collect()
    }

    fn exact_matrices(&self, origin: &str) -> CliResult<Vec<Matrix<num_rational::BigRational>>> {
        self.generators
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let rows = g
                    .iter()
                    .map(|row| row.iter().map(|s| parse_exact(s)).collect::<freewalk::Result<Vec<_>>>())
                    .collect::<freewalk::Result<Vec<_>>>()
                    .map_err(|e| CliError::input(format!("{origin}: generators[{i}]"), e))?;
                Ok(Matrix::from_rows(rows))
            })
            .collect()
    }
}

/// Ping-pong certificate for the generators in `path`. Real generators are
/// checked in floating point, or with interval enclosures of their exact
/// decimal entries when `exact` is set; p-adic generators are always exact.
pub fn certify(path: &Path, r: f64, eps: f64, exact: bool) -> CliResult<ProximalityCertificate> {
    let origin = path.display().to_string();
    let file: GeneratorsFile =
        serde_json::from_str(&read(path)?).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
    file.check_shape(&origin)?;
    Ok(match file.field {
        FieldSpec::Archimedean if exact => {
            let gens = file.exact_matrices(&origin)?;
            // unimodularity is checked on the float images before enclosing
            file.matrices(&Real, &origin)?;
            certify_real_enclosed(&gens, r, eps)?
        }
        FieldSpec::Archimedean => pingpong_report(&Real, &file.matrices(&Real, &origin)?, r, eps)?,
        FieldSpec::NonArchimedean { prime } => {
            let p = PAdic::new(prime).map_err(|e| CliError::input(&origin, e))?;
            pingpong_report(&p, &file.matrices(&p, &origin)?, r, eps)?
        }
    })
}
