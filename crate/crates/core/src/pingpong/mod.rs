//! Contraction and proximality predicates, ping-pong certification of free
//! subgroups, and an exact word-enumeration oracle to cross-check them.
//!
//! Contraction is certified only through the sufficient condition
//! `|a₂/a₁| ≤ ε²`; a negative verdict never proves that a tuple is not free.

mod certified;
mod oracle;

pub use certified::certify_real_enclosed;
pub use oracle::{evaluate_word, free_word_oracle, free_word_oracle_exact, Letter, OracleVerdict, Word, MAX_ORACLE_LEN};

use rayon::prelude::*;
use serde::Serialize;

use crate::decomp::{kak, kak_inverse, KakDecomposition};
use crate::error::{Error, Result};
use crate::projlin::{dist_point_hyperplane_raw, dot, Covector, SlMatrix, Vector};
use crate::scalar::{FieldSpec, LocalField, Magnitude};

/// Attracting point, repelling hyperplane and contraction strength of one matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ContractionData<E> {
    pub v: Vector<E>,
    pub h: Covector<E>,
    /// `|a₂/a₁|`.
    pub ratio: Magnitude,
    /// `δ(v, Ker h)`.
    pub separation: Magnitude,
    /// Bound on the Fubini-Study error of the stored `v` and `h` (certified mode only).
    pub angle_error: f64,
}

/// Contraction data of `g` and of `g⁻¹`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorData<E> {
    pub forward: ContractionData<E>,
    pub inverse: ContractionData<E>,
}

impl<E> GeneratorData<E> {
    pub fn side(&self, inverse: bool) -> &ContractionData<E> {
        if inverse {
            &self.inverse
        } else {
            &self.forward
        }
    }
}

/// `δ([x], Ker f)` in the field's most precise form (exact for the p-adics).
pub fn hyperplane_magnitude<F: LocalField>(field: &F, x: &[F::Elem], f: &[F::Elem]) -> Magnitude {
    if field.is_exact() {
        // canonical representatives have norm exactly one
        let xu = field.canonical_representative(x);
        let fu = field.canonical_representative(f);
        field.magnitude(&dot(&fu, &xu))
    } else {
        Magnitude::from_value(dist_point_hyperplane_raw(field, x, f).unwrap_or(0.0))
    }
}

/// Contraction data read off a Cartan decomposition. `log_ratio` overrides
/// `log|a₂/a₁|` when the caller has it more accurately (from an exterior
/// square tracked alongside a long product).
pub fn contraction_from_kak<F: LocalField>(
    field: &F,
    dec: &KakDecomposition<F::Elem>,
    log_ratio: Option<f64>,
) -> ContractionData<F::Elem> {
    let ratio = match log_ratio {
        Some(l) => Magnitude::from_log(l.min(0.0)),
        None if field.is_exact() => field.magnitude(&(dec.a[1].clone() / dec.a[0].clone())),
        None => Magnitude::from_log((field.log_abs(&dec.a[1]) - field.log_abs(&dec.a[0])).min(0.0)),
    };
    let separation = hyperplane_magnitude(field, &dec.v.0, &dec.h.0);
    ContractionData { v: dec.v.clone(), h: dec.h.clone(), ratio, separation, angle_error: 0.0 }
}

/// `v = k·e₁`, `h = e₁*∘u`, `ratio = |a₂/a₁|` and `separation = δ(v, Ker h)`.
pub fn contraction_data<F: LocalField>(field: &F, g: &SlMatrix<F::Elem>) -> ContractionData<F::Elem> {
    contraction_from_kak(field, &kak(field, g), None)
}

/// Contraction data of a matrix and its inverse from one decomposition.
pub fn generator_data_from_kak<F: LocalField>(
    field: &F,
    dec: &KakDecomposition<F::Elem>,
    log_ratios: Option<(f64, f64)>,
) -> GeneratorData<F::Elem> {
    let inv = kak_inverse(field, dec);
    GeneratorData {
        forward: contraction_from_kak(field, dec, log_ratios.map(|p| p.0)),
        inverse: contraction_from_kak(field, &inv, log_ratios.map(|p| p.1)),
    }
}

pub fn generator_data<F: LocalField>(field: &F, g: &SlMatrix<F::Elem>) -> GeneratorData<F::Elem> {
    generator_data_from_kak(field, &kak(field, g), None)
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("eps must lie in (0, 1), got {eps}")))
    }
}

/// Requires `r > 2·eps > 0`.
pub fn check_thresholds(r: f64, eps: f64) -> Result<()> {
    check_eps(eps)?;
    if r.is_finite() && r > 2.0 * eps {
        Ok(())
    } else {
        Err(Error::Domain(format!("need r > 2·eps > 0, got r = {r}, eps = {eps}")))
    }
}

/// Whether `|a₂/a₁| ≤ eps²`, which guarantees that `[g]` is `eps`-contracting.
pub fn is_eps_contracting<F: LocalField>(
    field: &F,
    g: &SlMatrix<F::Elem>,
    eps: f64,
) -> Result<(bool, ContractionData<F::Elem>)> {
    check_eps(eps)?;
    let data = contraction_data(field, g);
    Ok((data.ratio.certainly_le_square(eps), data))
}

fn side_is_proximal<E>(c: &ContractionData<E>, r: f64, eps: f64) -> (bool, bool) {
    (c.ratio.certainly_le_square(eps), c.separation.certainly_gt(r))
}

/// Both `g` and `g⁻¹` are `eps`-contracting with separation `> r`.
pub fn is_very_proximal<F: LocalField>(field: &F, g: &SlMatrix<F::Elem>, r: f64, eps: f64) -> Result<bool> {
    check_thresholds(r, eps)?;
    let data = generator_data(field, g);
    Ok([false, true].iter().all(|&inv| {
        let (c, s) = side_is_proximal(data.side(inv), r, eps);
        c && s
    }))
}

/// Outcome of the ping-pong tuple test on precomputed contraction data.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TupleCheck {
    /// Per generator, `[g, g⁻¹]`: `ratio ≤ eps²`.
    pub own_contraction: Vec<[bool; 2]>,
    /// Per generator, `[g, g⁻¹]`: `separation > r`.
    pub own_separation: Vec<[bool; 2]>,
    /// `δ(v_a, H_b)` for `a, b` ranging over `g_0, g_0⁻¹, g_1, …`; `None`
    /// inside the diagonal blocks, where no condition applies.
    pub cross_margins: Vec<Vec<Option<Magnitude>>>,
    pub contraction_ok: bool,
    pub separation_ok: bool,
    pub cross_ok: bool,
}

impl TupleCheck {
    pub fn verdict(&self) -> bool {
        self.contraction_ok && self.separation_ok && self.cross_ok
    }

    /// Smallest off-diagonal margin (by its certified lower value).
    pub fn min_cross_margin(&self) -> Option<f64> {
        self.cross_margins
            .iter()
            .flatten()
            .flatten()
            .map(Magnitude::value)
            .min_by(f64::total_cmp)
    }
}

/// Ping-pong test with a caller-supplied margin function, so the certified
/// path can substitute rigorous lower bounds.
pub fn evaluate_tuple<E: Sync>(
    data: &[GeneratorData<E>],
    r: f64,
    eps: f64,
    margin: impl Fn(&ContractionData<E>, &ContractionData<E>) -> Magnitude + Sync,
) -> TupleCheck {
    let m = data.len();
    let mut own_contraction = Vec::with_capacity(m);
    let mut own_separation = Vec::with_capacity(m);
    for g in data {
        let (c0, s0) = side_is_proximal(&g.forward, r, eps);
        let (c1, s1) = side_is_proximal(&g.inverse, r, eps);
        own_contraction.push([c0, c1]);
        own_separation.push([s0, s1]);
    }
    let cross_margins: Vec<Vec<Option<Magnitude>>> = (0..2 * m)
        .into_par_iter()
        .map(|a| {
            (0..2 * m)
                .map(|b| {
                    if a / 2 == b / 2 {
                        None
                    } else {
                        let pa = data[a / 2].side(a % 2 == 1);
                        let hb = data[b / 2].side(b % 2 == 1);
                        Some(margin(pa, hb))
                    }
                })
                .collect()
        })
        .collect();
    let cross_ok = cross_margins.iter().flatten().flatten().all(|x| x.certainly_ge(r));
    TupleCheck {
        contraction_ok: own_contraction.iter().flatten().all(|&b| b),
        separation_ok: own_separation.iter().flatten().all(|&b| b),
        own_contraction,
        own_separation,
        cross_margins,
        cross_ok,
    }
}

/// Ping-pong test with margins `δ(v_a, Ker h_b)` computed in the field.
pub fn check_tuple<F: LocalField>(field: &F, data: &[GeneratorData<F::Elem>], r: f64, eps: f64) -> TupleCheck {
    evaluate_tuple(data, r, eps, |a, b| hyperplane_magnitude(field, &a.v.0, &b.h.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// The generators form a ping-pong tuple, hence generate a free group.
    Certified,
    /// The sufficient condition failed; freeness is undecided.
    NotCertified,
}

/// How the numbers in a certificate were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificationMethod {
    /// Floating-point reals: an empirical check, not a proof.
    Float,
    /// Interval enclosures over the reals: comparisons hold at the endpoints.
    Interval,
    /// Exact p-adic arithmetic.
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionRecord {
    pub v: Vec<String>,
    pub h: Vec<String>,
    pub ratio: Magnitude,
    pub separation: Magnitude,
    pub angle_error: f64,
}

impl ContractionRecord {
    pub fn new<F: LocalField>(field: &F, c: &ContractionData<F::Elem>) -> Self {
        let s = |xs: &[F::Elem]| xs.iter().map(|x| field.to_scalar(x).to_string()).collect();
        ContractionRecord {
            v: s(&c.v.0),
            h: s(&c.h.0),
            ratio: c.ratio,
            separation: c.separation,
            angle_error: c.angle_error,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeneratorRecord {
    pub entries: Vec<Vec<String>>,
    pub forward: ContractionRecord,
    pub inverse: ContractionRecord,
    pub very_proximal: bool,
}

/// The data witnessing (or failing to witness) a ping-pong tuple.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProximalityCertificate {
    pub verdict: Verdict,
    pub method: CertificationMethod,
    pub field: FieldSpec,
    pub r: f64,
    pub eps: f64,
    pub generators: Vec<GeneratorRecord>,
    pub cross_margins: Vec<Vec<Option<Magnitude>>>,
    pub min_cross_margin: Option<f64>,
    pub contraction_ok: bool,
    pub separation_ok: bool,
    pub cross_ok: bool,
    pub note: &'static str,
}

pub const SUFFICIENT_ONLY_NOTE: &str =
    "contraction is certified through |a2/a1| <= eps^2 only; not_certified does not imply the group is not free";

impl ProximalityCertificate {
    pub(crate) fn assemble<F: LocalField>(
        field: &F,
        method: CertificationMethod,
        entries: Vec<Vec<Vec<String>>>,
        data: &[GeneratorData<F::Elem>],
        check: TupleCheck,
        r: f64,
        eps: f64,
    ) -> Self {
        let generators = entries
            .into_iter()
            .zip(data)
            .enumerate()
            .map(|(i, (entries, g))| GeneratorRecord {
                entries,
                forward: ContractionRecord::new(field, &g.forward),
                inverse: ContractionRecord::new(field, &g.inverse),
                very_proximal: check.own_contraction[i].iter().all(|&b| b)
                    && check.own_separation[i].iter().all(|&b| b),
            })
            .collect();
        ProximalityCertificate {
            verdict: if check.verdict() { Verdict::Certified } else { Verdict::NotCertified },
            method,
            field: field.spec(),
            r,
            eps,
            generators,
            min_cross_margin: check.min_cross_margin(),
            cross_margins: check.cross_margins,
            contraction_ok: check.contraction_ok,
            separation_ok: check.separation_ok,
            cross_ok: check.cross_ok,
            note: SUFFICIENT_ONLY_NOTE,
        }
    }

    pub fn is_certified(&self) -> bool {
        self.verdict == Verdict::Certified
    }
}

/// Runs the ping-pong test and returns the full record whatever the outcome.
pub fn pingpong_report<F: LocalField>(
    field: &F,
    gs: &[SlMatrix<F::Elem>],
    r: f64,
    eps: f64,
) -> Result<ProximalityCertificate> {
    check_thresholds(r, eps)?;
    if gs.len() < 2 {
        return Err(Error::Domain(format!("a ping-pong tuple needs at least 2 generators, got {}", gs.len())));
    }
    let d = gs[0].dim();
    if let Some(g) = gs.iter().find(|g| g.dim() != d) {
        return Err(Error::Dimension { expected: d, found: g.dim() });
    }
    let data: Vec<_> = gs.par_iter().map(|g| generator_data(field, g)).collect();
    let check = check_tuple(field, &data, r, eps);
    let entries = gs
        .iter()
        .map(|g| {
            g.matrix()
                .to_rows()
                .iter()
                .map(|row| row.iter().map(|x| field.to_scalar(x).to_string()).collect())
                .collect()
        })
        .collect();
    let method = if field.is_exact() { CertificationMethod::Exact } else { CertificationMethod::Float };
    Ok(ProximalityCertificate::assemble(field, method, entries, &data, check, r, eps))
}

/// Whether `gs` is a ping-pong tuple for `(r, eps)`; the certificate is
/// returned only on success.
pub fn is_pingpong_tuple<F: LocalField>(
    field: &F,
    gs: &[SlMatrix<F::Elem>],
    r: f64,
    eps: f64,
) -> Result<(bool, Option<ProximalityCertificate>)> {
    let report = pingpong_report(field, gs, r, eps)?;
    if report.is_certified() {
        Ok((true, Some(report)))
    } else {
        Ok((false, None))
    }
}

#[cfg(test)]
mod tests;
