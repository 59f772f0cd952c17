//! Regularity probe for the stationary measure and the KAK versus KAN
//! boundedness diagnostic.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::{tag, wilson_interval, Z95};
use crate::error::{Error, Result};
use crate::projlin::{dist_point_hyperplane_raw, Covector};
use crate::scalar::LocalField;
use crate::walk::{stream_rng, walk, WalkMeasure, WalkState};

/// `count` functionals drawn from the rotation-invariant Gaussian law.
pub fn random_hyperplanes(d: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<Covector<f64>> {
    (0..count).map(|_| Covector((0..d).map(|_| rng.sample(StandardNormal)).collect())).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HyperplaneTail {
    pub hyperplane: Vec<String>,
    pub hits: usize,
    pub fraction: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeResult {
    pub n: usize,
    pub reps: usize,
    pub t: f64,
    /// `tⁿ`.
    pub threshold: f64,
    pub tails: Vec<HyperplaneTail>,
    pub sup_fraction: f64,
}

/// Estimates `ν{δ(Z, Ker f) ≤ tⁿ}` for each hyperplane, with `Z` sampled as
/// `M_n[x₀]`, `x₀ = (1, …, 1)`.
pub fn invariant_measure_probe<F: LocalField>(
    m: &WalkMeasure<F>,
    n: usize,
    reps: usize,
    hyperplanes: &[Covector<F::Elem>],
    t: f64,
    seed: u64,
) -> Result<ProbeResult> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!("t must lie in (0, 1), got {t}")));
    }
    if n == 0 || reps == 0 {
        return Err(Error::Domain("n and reps must be positive".into()));
    }
    let field = m.field();
    let d = m.dim();
    for f in hyperplanes {
        if f.dim() != d {
            return Err(Error::Dimension { expected: d, found: f.dim() });
        }
        if f.is_zero() {
            return Err(Error::Domain("hyperplane functional is zero".into()));
        }
    }
    let threshold = t.powi(n as i32);
    let ones: Vec<F::Elem> = (0..d).map(|_| field.from_i64(1)).collect();
    let hits: Vec<Vec<bool>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let s = walk(m, n, stream_rng(seed, &[tag::PROBE, r as u64]));
            let z = s.left.unit.mul_vec(&ones);
            hyperplanes
                .iter()
                .map(|f| dist_point_hyperplane_raw(field, &z, &f.0).expect("checked dimensions") <= threshold)
                .collect()
        })
        .collect();
    let tails: Vec<HyperplaneTail> = hyperplanes
        .iter()
        .enumerate()
        .map(|(j, f)| {
            let k = hits.iter().filter(|h| h[j]).count();
            let (ci_lo, ci_hi) = wilson_interval(k, reps, Z95);
            HyperplaneTail {
                hyperplane: f.0.iter().map(|x| field.to_scalar(x).to_string()).collect(),
                hits: k,
                fraction: k as f64 / reps as f64,
                ci_lo,
                ci_hi,
            }
        })
        .collect();
    let sup_fraction = tails.iter().map(|t| t.fraction).fold(0.0, f64::max);
    Ok(ProbeResult { n, reps, t, threshold, tails, sup_fraction })
}

/// `log ‖A Ã⁻¹‖ = log maxᵢ |aᵢ/ãᵢ|` where `M = k A u` and `M = k̃ Ã ñ`,
/// from `‖M‖/‖M e₁‖` and, for `d = 3`, the same ratio on `⋀²M`.
fn log_kak_kan<F: LocalField>(field: &F, s: &WalkState<F>) -> Result<f64> {
    let d = s.left.dim();
    let e = |len: usize, i: usize| (0..len).map(|j| field.from_i64((i == j) as i64)).collect::<Vec<_>>();
    let l1 = s.left.log_norm(field) - s.left.log_norm_of_image(field, &e(d, 0));
    match d {
        2 => Ok(l1),
        3 => {
            // log(a₁a₂/(ã₁ã₂)) from the first column of ⋀²M; log(a₃/ã₃) = −that
            let l12 = s.left_wedge.log_norm(field) - s.left_wedge.log_norm_of_image(field, &e(3, 0));
            let l2 = l12 - l1;
            Ok(l1.max(l2).max(-l12))
        }
        _ => Err(Error::Usage(format!("KAK versus KAN diagnostic supports d = 2 or 3, got {d}"))),
    }
}

/// `‖A_n Ã_n⁻¹‖` for `n = 1..=n_max` along one walk `M_n`.
pub fn kak_kan_trajectory<F: LocalField>(m: &WalkMeasure<F>, n_max: usize, rng: ChaCha8Rng) -> Result<Vec<f64>> {
    let field = m.field();
    let mut s = WalkState::new(m.dim(), rng);
    let mut out = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        s.advance(m);
        out.push(log_kak_kan(field, &s)?.exp());
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KakKanBoundedness {
    pub n_max: usize,
    pub trajectories: usize,
    /// Trajectories whose max over the second half stays within twice the
    /// max over the first half.
    pub bounded: usize,
    pub fraction: f64,
    pub overall_max: f64,
}

pub fn kak_kan_boundedness<F: LocalField>(m: &WalkMeasure<F>, n_max: usize, reps: usize, seed: u64) -> Result<KakKanBoundedness> {
    if n_max < 2 || reps == 0 {
        return Err(Error::Domain("need n_max >= 2 and reps >= 1".into()));
    }
    let half = n_max / 2;
    let curves = (0..reps)
        .into_par_iter()
        .map(|r| kak_kan_trajectory(m, n_max, stream_rng(seed, &[tag::KAK_KAN, r as u64])))
        .collect::<Result<Vec<_>>>()?;
    let max_of = |xs: &[f64]| xs.iter().copied().fold(0.0f64, f64::max);
    let bounded = curves.iter().filter(|c| max_of(&c[half - 1..]) <= 2.0 * max_of(&c[..half])).count();
    Ok(KakKanBoundedness {
        n_max,
        trajectories: reps,
        bounded,
        fraction: bounded as f64 / reps as f64,
        overall_max: curves.iter().map(|c| max_of(c)).fold(0.0, f64::max),
    })
}
