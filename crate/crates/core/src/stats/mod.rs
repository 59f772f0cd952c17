//! Monte Carlo estimators and rate fits for the limit theorems on random
//! products: Lyapunov exponents, convergence of directions and Cartan
//! frames, asymptotic independence, and the decay of the probability that
//! independent walks fail to play ping-pong.
//!
//! Every estimator is a pure function of its inputs and seed. Each
//! (experiment, grid point, repetition, walk) task draws from its own
//! stream of [`crate::walk::stream_rng`], so thread count never changes a
//! result.

mod decay;
mod frames;
mod holder;
mod inference;
mod output;
mod probe;

pub use decay::{pingpong_decay, tuple_decay, tuple_decay_mixed, walk_generator_data, ConditionBreakdown, PingPongDecay, TupleDecay};
pub use frames::{default_horizon, direction_convergence, kak_convergence, FrameGeometry, KakConvergence};
pub use holder::{independence_test, BoundTestFunction, Combine, DistanceFactor, HolderTestFunction, Independence};
pub use inference::{
    ks_coefficient, ks_two_sample, weighted_line_fit, wilson_interval, KsTest, LineFit, MeanEstimate, Z95, Z99,
};
pub use output::{format_float, round_json_floats, round_sig, OUTPUT_DIGITS};
pub use probe::{
    invariant_measure_probe, kak_kan_boundedness, kak_kan_trajectory, random_hyperplanes, HyperplaneTail,
    KakKanBoundedness, ProbeResult,
};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::walk::{stream_rng, walk, WalkMeasure};
use crate::scalar::LocalField;

/// First component of every stream path, one per experiment.
pub(crate) mod tag {
    pub const LYAPUNOV: u64 = 1;
    pub const MOMENT: u64 = 2;
    pub const DIRECTION: u64 = 3;
    pub const KAK: u64 = 4;
    pub const PROBE: u64 = 5;
    pub const INDEPENDENCE: u64 = 6;
    pub const PINGPONG: u64 = 7;
    pub const TUPLE: u64 = 8;
    pub const KAK_KAN: u64 = 9;
}

/// Whether a decay curve holds proportions (Wilson intervals) or means
/// (normal intervals).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    Proportion,
    Mean,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayPoint {
    pub n: usize,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub reps: usize,
    /// False when the point's parameters are degenerate; such points are
    /// reported but left out of the fit.
    pub valid: bool,
}

impl DecayPoint {
    fn half_width(&self) -> f64 {
        0.5 * (self.ci_hi - self.ci_lo)
    }
}

/// Fit of `log p̂(n) ≈ intercept + n·log ρ̂`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub log_rho: f64,
    pub rho: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
    /// `inverse_ci_width` or, when some interval has zero width, `uniform`.
    pub weighting: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayEstimate {
    pub kind: EstimateKind,
    pub grid: Vec<usize>,
    pub points: Vec<DecayPoint>,
    pub fit: Option<RateFit>,
}

pub(crate) fn validate_grid(grid: &[usize]) -> Result<()> {
    if grid.is_empty() || grid[0] == 0 {
        return Err(Error::Usage("grid must be non-empty with positive entries".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Usage(format!("grid must be strictly increasing, got {grid:?}")));
    }
    Ok(())
}

impl DecayEstimate {
    /// `counts[i] = (failures, trials, valid)` at `grid[i]`. The fit uses
    /// valid points with `0 < p̂ < 1`, weighted by inverse Wilson width.
    pub fn from_proportions(grid: &[usize], counts: &[(usize, usize, bool)]) -> Self {
        let points: Vec<DecayPoint> = grid
            .iter()
            .zip(counts)
            .map(|(&n, &(k, reps, valid))| {
                let (ci_lo, ci_hi) = wilson_interval(k, reps, Z95);
                DecayPoint { n, p_hat: k as f64 / reps.max(1) as f64, ci_lo, ci_hi, reps, valid }
            })
            .collect();
        let usable: Vec<&DecayPoint> =
            points.iter().filter(|p| p.valid && p.p_hat > 0.0 && p.p_hat < 1.0).collect();
        let fit = Self::fit(&usable);
        DecayEstimate { kind: EstimateKind::Proportion, grid: grid.to_vec(), points, fit }
    }

    /// `samples[i]` are the per-repetition values at `grid[i]`. The fit uses
    /// points with positive mean, weighted by inverse normal-interval width.
    pub fn from_means(grid: &[usize], samples: &[Vec<f64>]) -> Self {
        let points: Vec<DecayPoint> = grid
            .iter()
            .zip(samples)
            .map(|(&n, xs)| {
                let e = MeanEstimate::of(xs);
                let hw = if e.std_err.is_finite() { e.half_width(Z95) } else { 0.0 };
                DecayPoint { n, p_hat: e.mean, ci_lo: e.mean - hw, ci_hi: e.mean + hw, reps: xs.len(), valid: true }
            })
            .collect();
        let usable: Vec<&DecayPoint> = points.iter().filter(|p| p.p_hat > 0.0).collect();
        let fit = Self::fit(&usable);
        DecayEstimate { kind: EstimateKind::Mean, grid: grid.to_vec(), points, fit }
    }

    fn fit(usable: &[&DecayPoint]) -> Option<RateFit> {
        let xs: Vec<f64> = usable.iter().map(|p| p.n as f64).collect();
        let ys: Vec<f64> = usable.iter().map(|p| p.p_hat.ln()).collect();
        let widths: Vec<f64> = usable.iter().map(|p| p.ci_hi - p.ci_lo).collect();
        let (ws, weighting) = if widths.iter().all(|w| *w > 0.0 && w.is_finite()) {
            (widths.iter().map(|w| 1.0 / w).collect(), "inverse_ci_width")
        } else {
            (vec![1.0; widths.len()], "uniform")
        };
        weighted_line_fit(&xs, &ys, &ws).map(|f| RateFit {
            log_rho: f.slope,
            rho: f.slope.exp(),
            intercept: f.intercept,
            r_squared: f.r_squared,
            points: f.points,
            weighting,
        })
    }

    pub fn p_hat(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.p_hat).collect()
    }

    pub fn point(&self, n: usize) -> Option<&DecayPoint> {
        self.points.iter().find(|p| p.n == n)
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].p_hat < w[0].p_hat)
    }

    /// Indices `k` with `p̂(n_{k+1}) − p̂(n_k) > slack·(w_k + w_{k+1})`, where
    /// `w` is the interval half-width: increases beyond sampling noise.
    pub fn monotone_violations(&self, slack: f64) -> Vec<usize> {
        self.points
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1].p_hat - w[0].p_hat > slack * (w[0].half_width() + w[1].half_width()))
            .map(|(k, _)| k)
            .collect()
    }

    /// CSV with columns `n,p_hat,ci_lo,ci_hi,reps`.
    pub fn to_csv(&self) -> String {
        let f = |x: f64| format_float(x, OUTPUT_DIGITS);
        let mut out = String::from("n,p_hat,ci_lo,ci_hi,reps\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{},{},{}\n", p.n, f(p.p_hat), f(p.ci_lo), f(p.ci_hi), p.reps));
        }
        out
    }
}

/// 95% half-widths of the [`LyapunovEstimate`] components.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LyapunovHalfWidths {
    pub lambda1: f64,
    pub lambda12: f64,
    pub gap: f64,
    pub lambda1_from_vector: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LyapunovEstimate {
    /// Mean of `(1/n) log ‖S_n‖`.
    pub lambda1_hat: f64,
    /// Mean of `(1/n) log ‖⋀²S_n‖`, estimating `λ₁ + λ₂`.
    pub lambda12_hat: f64,
    /// `2·λ̂₁ − λ̂₁₂`, estimating `λ₁ − λ₂`.
    pub gap_hat: f64,
    /// Mean of `(1/n) log ‖S_n x‖` with `x = (1, …, 1)`.
    pub lambda1_from_vector: f64,
    pub ci_half_widths: LyapunovHalfWidths,
    pub std_errs: LyapunovHalfWidths,
    pub n: usize,
    pub reps: usize,
}

/// Across-trajectory means of the normalized log norms of `S_n` and `⋀²S_n`.
/// The gap interval uses the per-trajectory gap `2ℓ₁ − ℓ₁₂`, which accounts
/// for the correlation between the two norms.
pub fn lyapunov_estimate<F: LocalField>(m: &WalkMeasure<F>, n: usize, reps: usize, seed: u64) -> Result<LyapunovEstimate> {
    if n < 10 || reps < 10 {
        return Err(Error::Domain(format!("need n >= 10 and reps >= 10, got n = {n}, reps = {reps}")));
    }
    let field = m.field();
    let ones: Vec<F::Elem> = (0..m.dim()).map(|_| field.from_i64(1)).collect();
    let nf = n as f64;
    let per_rep: Vec<[f64; 3]> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let s = walk(m, n, stream_rng(seed, &[tag::LYAPUNOV, r as u64]));
            [
                s.log_norm_right(field) / nf,
                s.right_wedge.log_norm(field) / nf,
                s.right.log_norm_of_image(field, &ones) / nf,
            ]
        })
        .collect();
    let col = |j: usize| per_rep.iter().map(|v| v[j]).collect::<Vec<_>>();
    let l1 = MeanEstimate::of(&col(0));
    let l12 = MeanEstimate::of(&col(1));
    let lx = MeanEstimate::of(&col(2));
    let gap = MeanEstimate::of(&per_rep.iter().map(|v| 2.0 * v[0] - v[1]).collect::<Vec<_>>());
    let se = LyapunovHalfWidths {
        lambda1: l1.std_err,
        lambda12: l12.std_err,
        gap: gap.std_err,
        lambda1_from_vector: lx.std_err,
    };
    Ok(LyapunovEstimate {
        lambda1_hat: l1.mean,
        lambda12_hat: l12.mean,
        gap_hat: 2.0 * l1.mean - l12.mean,
        lambda1_from_vector: lx.mean,
        ci_half_widths: LyapunovHalfWidths {
            lambda1: se.lambda1 * Z95,
            lambda12: se.lambda12 * Z95,
            gap: se.gap * Z95,
            lambda1_from_vector: se.lambda1_from_vector * Z95,
        },
        std_errs: se,
        n,
        reps,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapTest {
    pub positive: bool,
    pub gap_hat: f64,
    pub half_width: f64,
    /// `gap_hat − half_width`.
    pub margin: f64,
    /// For `d = 2`: whether `|λ̂₁ + λ̂₂| = |λ̂₁₂|` lies within its interval.
    pub sl2_sum_within_ci: Option<bool>,
}

/// Positive iff the gap exceeds its 95% half-width.
pub fn gap_test(est: &LyapunovEstimate, d: usize) -> GapTest {
    let margin = est.gap_hat - est.ci_half_widths.gap;
    GapTest {
        positive: margin > 0.0,
        gap_hat: est.gap_hat,
        half_width: est.ci_half_widths.gap,
        margin,
        sl2_sum_within_ci: (d == 2).then(|| est.lambda12_hat.abs() <= est.ci_half_widths.lambda12),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentRatio {
    /// Max over basis vectors of `per_basis`.
    pub value: f64,
    /// `(mean of (‖S_n‖/‖S_n e_j‖)^eps)^(1/n)` for each `j`.
    pub per_basis: Vec<f64>,
    pub eps: f64,
    pub n: usize,
    pub reps: usize,
}

/// `max_j (E[(‖S_n‖/‖S_n e_j‖)^eps])^(1/n)`, with the mean taken in log
/// space so large ratios do not overflow.
pub fn moment_ratio<F: LocalField>(m: &WalkMeasure<F>, eps: f64, n: usize, reps: usize, seed: u64) -> Result<MomentRatio> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0, 1], got {eps}")));
    }
    if n == 0 || reps == 0 {
        return Err(Error::Domain("n and reps must be positive".into()));
    }
    let field = m.field();
    let d = m.dim();
    let terms: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let s = walk(m, n, stream_rng(seed, &[tag::MOMENT, r as u64]));
            let total = s.log_norm_right(field);
            (0..d)
                .map(|j| {
                    let e: Vec<F::Elem> = (0..d).map(|i| field.from_i64((i == j) as i64)).collect();
                    eps * (total - s.right.log_norm_of_image(field, &e))
                })
                .collect()
        })
        .collect();
    let per_basis: Vec<f64> = (0..d)
        .map(|j| {
            let ts: Vec<f64> = terms.iter().map(|t| t[j]).collect();
            let top = ts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lme = top + (ts.iter().map(|t| (t - top).exp()).sum::<f64>() / reps as f64).ln();
            (lme / n as f64).exp()
        })
        .collect();
    let value = per_basis.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(MomentRatio { value, per_basis, eps, n, reps })
}
