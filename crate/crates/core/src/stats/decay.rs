//! Probability that independent walks fail to form a ping-pong tuple.

use rayon::prelude::*;
use serde::Serialize;

use super::{tag, validate_grid, wilson_interval, DecayEstimate, Z95};
use crate::error::{Error, Result};
use crate::pingpong::{check_thresholds, check_tuple, generator_data_from_kak, GeneratorData};
use crate::scalar::LocalField;
use crate::walk::{stream_rng, walk, WalkMeasure, WalkState};

/// Ping-pong data of `S_n` and `S_n⁻¹`. For real `d = 2` both contraction
/// ratios come from the exterior square; in higher dimension the inverse
/// ratio is read off the unit part. Exact fields use their exact ratios.
pub fn walk_generator_data<F: LocalField>(field: &F, s: &WalkState<F>) -> GeneratorData<F::Elem> {
    let dec = s.right_kak(field);
    let lr = s.log_ratio_right(field);
    if field.is_exact() {
        return generator_data_from_kak(field, &dec, None);
    }
    if dec.dim() == 2 {
        generator_data_from_kak(field, &dec, Some((lr, lr)))
    } else {
        let mut data = generator_data_from_kak(field, &dec, None);
        data.forward = crate::pingpong::contraction_from_kak(field, &dec, Some(lr));
        data
    }
}

/// Number of failing repetitions at one grid point for each condition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConditionBreakdown {
    pub n: usize,
    pub own_contraction: usize,
    pub own_separation: usize,
    pub cross_margin: usize,
    pub reps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PingPongDecay {
    pub estimate: DecayEstimate,
    pub breakdown: Vec<ConditionBreakdown>,
    pub r_base: f64,
    pub eps_base: f64,
}

fn check_bases(r_base: f64, eps_base: f64) -> Result<()> {
    if !(eps_base > 0.0 && eps_base < 1.0) {
        return Err(Error::Domain(format!("eps base must lie in (0, 1), got {eps_base}")));
    }
    if !(r_base > eps_base && r_base < 1.0) {
        return Err(Error::Domain(format!("r base must lie in (eps base, 1), got {r_base}")));
    }
    Ok(())
}

/// For each `n` in `grid`, the fraction of independent pairs `(S_n, S'_n)`
/// (from `m` and `m2`) that are not `(r_base^n, eps_base^n)`-ping-pong.
///
/// Grid points with `r_base^n ≤ 2·eps_base^n` are outside the range where
/// the thresholds are meaningful; they are reported with `valid = false`
/// and left out of the rate fit.
pub fn pingpong_decay<F: LocalField>(
    m: &WalkMeasure<F>,
    m2: &WalkMeasure<F>,
    r_base: f64,
    eps_base: f64,
    grid: &[usize],
    reps: usize,
    seed: u64,
) -> Result<PingPongDecay> {
    check_bases(r_base, eps_base)?;
    validate_grid(grid)?;
    if m.field().spec() != m2.field().spec() || m.dim() != m2.dim() {
        return Err(Error::Usage("both measures must live on the same field and dimension".into()));
    }
    if reps == 0 {
        return Err(Error::Domain("reps must be positive".into()));
    }
    let field = m.field();
    let mut counts = Vec::with_capacity(grid.len());
    let mut breakdown = Vec::with_capacity(grid.len());
    for (gi, &n) in grid.iter().enumerate() {
        let (r, eps) = (r_base.powi(n as i32), eps_base.powi(n as i32));
        let flags: Vec<[bool; 4]> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let path = |w: u64| stream_rng(seed, &[tag::PINGPONG, gi as u64, rep as u64, w]);
                let a = walk(m, n, path(0));
                let b = walk(m2, n, path(1));
                let data = [walk_generator_data(field, &a), walk_generator_data(field, &b)];
                let t = check_tuple(field, &data, r, eps);
                [!t.verdict(), !t.contraction_ok, !t.separation_ok, !t.cross_ok]
            })
            .collect();
        let count = |j: usize| flags.iter().filter(|f| f[j]).count();
        counts.push((count(0), reps, r > 2.0 * eps));
        breakdown.push(ConditionBreakdown {
            n,
            own_contraction: count(1),
            own_separation: count(2),
            cross_margin: count(3),
            reps,
        });
    }
    Ok(PingPongDecay { estimate: DecayEstimate::from_proportions(grid, &counts), breakdown, r_base, eps_base })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TupleDecay {
    pub l: usize,
    pub n: usize,
    pub r: f64,
    pub eps: f64,
    pub failures: usize,
    pub reps: usize,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub std_err: f64,
    /// `l(l−1)·ρ̂ⁿ` when a pair rate `ρ̂` is supplied.
    pub union_bound: Option<f64>,
}

/// Fraction of `l` independent copies of `S_n` that fail to be an
/// `(r, eps)`-ping-pong tuple.
pub fn tuple_decay<F: LocalField>(
    m: &WalkMeasure<F>,
    l: usize,
    r: f64,
    eps: f64,
    n: usize,
    reps: usize,
    seed: u64,
    rho_hat: Option<f64>,
) -> Result<TupleDecay> {
    tuple_decay_mixed(&vec![m; l], r, eps, n, reps, seed, rho_hat)
}

/// As [`tuple_decay`] with walk `i` driven by `measures[i]`.
pub fn tuple_decay_mixed<F: LocalField>(
    measures: &[&WalkMeasure<F>],
    r: f64,
    eps: f64,
    n: usize,
    reps: usize,
    seed: u64,
    rho_hat: Option<f64>,
) -> Result<TupleDecay> {
    let l = measures.len();
    if l < 2 {
        return Err(Error::Domain(format!("tuple size must be at least 2, got {l}")));
    }
    check_thresholds(r, eps)?;
    if n == 0 || reps == 0 {
        return Err(Error::Domain("n and reps must be positive".into()));
    }
    let field = measures[0].field();
    if measures.iter().any(|m| m.field().spec() != field.spec() || m.dim() != measures[0].dim()) {
        return Err(Error::Usage("all measures must live on the same field and dimension".into()));
    }
    let failures = (0..reps)
        .into_par_iter()
        .filter(|&rep| {
            let data: Vec<_> = measures
                .iter()
                .enumerate()
                .map(|(w, m)| walk_generator_data(field, &walk(m, n, stream_rng(seed, &[tag::TUPLE, rep as u64, w as u64]))))
                .collect();
            !check_tuple(field, &data, r, eps).verdict()
        })
        .count();
    let p_hat = failures as f64 / reps as f64;
    let (ci_lo, ci_hi) = wilson_interval(failures, reps, Z95);
    Ok(TupleDecay {
        l,
        n,
        r,
        eps,
        failures,
        reps,
        p_hat,
        ci_lo,
        ci_hi,
        std_err: (p_hat * (1.0 - p_hat) / reps as f64).sqrt(),
        union_bound: rho_hat.map(|rho| (l * (l - 1)) as f64 * rho.powi(n as i32)),
    })
}
