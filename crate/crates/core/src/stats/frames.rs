//! Convergence of pushed-forward directions and of the Cartan frames of
//! random products.

use rayon::prelude::*;
use serde::Serialize;

use super::{tag, validate_grid, DecayEstimate};
use crate::decomp::kak_of_matrix;
use crate::error::{Error, Result};
use crate::projlin::{fubini_study_raw, image_distance, Matrix, ScaledMatrix};
use crate::scalar::{LocalField, PAdic, Real};
use crate::walk::{stream_rng, WalkMeasure, WalkState};

/// Field-specific evaluation of how far the attracting direction of a long
/// product moves when the product is extended.
pub trait FrameGeometry: LocalField {
    /// `δ(v(A), v(A·T))` where `A` is a scaled product with separately
    /// tracked exterior square and `T` is only needed up to scale.
    fn attracting_drift(&self, head: &ScaledMatrix<Self>, head_wedge: &ScaledMatrix<Self>, tail: &Matrix<Self::Elem>) -> f64;
}

impl FrameGeometry for Real {
    /// Writes `A = k a u`, so `δ(v(A), v(AT)) = δ(e₁, v(a·uT))`. The singular
    /// values of the graded matrix `a·uT` are resolved with `a₂/a₁` taken
    /// from the exterior square, which stays accurate when `A` is
    /// numerically rank one. For `d ≥ 3` the lower ratios come from the
    /// unit part and are clamped below `a₂/a₁`.
    fn attracting_drift(&self, head: &ScaledMatrix<Real>, head_wedge: &ScaledMatrix<Real>, tail: &Matrix<f64>) -> f64 {
        let dec = kak_of_matrix(self, &head.unit).expect("walk products are invertible");
        let d = dec.dim();
        let r2 = (head_wedge.log_norm(self) - 2.0 * head.log_norm(self)).min(0.0).exp();
        let mut w = &dec.u * tail;
        let top = w.data().iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if top > 0.0 {
            w = w.map(|x| x / top);
        }
        if d == 2 {
            let (w1, w2) = (w.row(0), w.row(1));
            let a = w1[0] * w1[0] + w1[1] * w1[1];
            let b = r2 * (w1[0] * w2[0] + w1[1] * w2[1]);
            let c = r2 * r2 * (w2[0] * w2[0] + w2[1] * w2[1]);
            let theta = 0.5 * (2.0 * b).atan2(a - c);
            return theta.sin().abs();
        }
        let a1 = dec.a[0].abs();
        let mut grades = vec![1.0, r2];
        grades.extend(dec.a[2..].iter().map(|x| (x.abs() / a1).min(r2)));
        let mut b = w;
        for (i, g) in grades.iter().enumerate() {
            b.scale_row(i, g);
        }
        let v = kak_of_matrix(self, &b).expect("graded tail product is invertible").v.0;
        let tail_norm = v[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
        (tail_norm / self.vector_norm(&v)).min(1.0)
    }
}

impl FrameGeometry for PAdic {
    /// Exact: both directions come from Cartan decompositions over ℚ.
    fn attracting_drift(&self, head: &ScaledMatrix<PAdic>, _head_wedge: &ScaledMatrix<PAdic>, tail: &Matrix<Self::Elem>) -> f64 {
        let v1 = kak_of_matrix(self, &head.unit).expect("walk products are invertible").v;
        let v2 = kak_of_matrix(self, &(&head.unit * tail)).expect("walk products are invertible").v;
        fubini_study_raw(self, &v1.0, &v2.0).expect("attracting directions are nonzero")
    }
}

/// A walk to the horizon with the products frozen at each grid point and
/// the remaining increments multiplied out on both sides.
struct Checkpoints<F: LocalField> {
    /// `M_n`, `⋀²M_n`, `S_n`, `⋀²S_n` per grid point.
    states: Vec<WalkState<F>>,
    /// `X_{n+1}⋯X_N`, so `M_N = M_n · tail_left`.
    tail_left: Vec<Matrix<F::Elem>>,
    /// `X_N⋯X_{n+1}`, so `S_N = tail_right · S_n`.
    tail_right: Vec<Matrix<F::Elem>>,
}

fn checkpoints<F: LocalField>(m: &WalkMeasure<F>, grid: &[usize], horizon: usize, state: WalkState<F>) -> Checkpoints<F> {
    let field = m.field();
    let mut state = state;
    let mut indices = Vec::with_capacity(horizon);
    let mut states = Vec::with_capacity(grid.len());
    let mut next = 0;
    while state.step < horizon {
        indices.push(state.advance(m));
        if next < grid.len() && state.step == grid[next] {
            states.push(state.clone());
            next += 1;
        }
    }
    let d = m.dim();
    let mut tl = ScaledMatrix::<F>::identity(d);
    let mut tr = ScaledMatrix::<F>::identity(d);
    let mut tail_left = vec![Matrix::identity(d); grid.len()];
    let mut tail_right = vec![Matrix::identity(d); grid.len()];
    let mut k = grid.len();
    for step in (0..horizon).rev() {
        // tails currently hold X_{step+2}⋯X_N
        while k > 0 && grid[k - 1] == step + 1 {
            k -= 1;
            tail_left[k] = tl.unit.clone();
            tail_right[k] = tr.unit.clone();
        }
        let x = m.atoms()[indices[step]].matrix();
        tl.mul_left(field, x);
        tr.mul_right(field, x);
    }
    Checkpoints { states, tail_left, tail_right }
}

/// Horizon used when none is given: four times the largest grid point.
pub fn default_horizon(grid: &[usize]) -> usize {
    4 * grid.last().copied().unwrap_or(0)
}

fn check_horizon(grid: &[usize], horizon: Option<usize>) -> Result<usize> {
    validate_grid(grid)?;
    let top = *grid.last().expect("grid is non-empty");
    let horizon = horizon.unwrap_or_else(|| default_horizon(grid));
    if horizon < 2 * top {
        return Err(Error::Usage(format!("horizon {horizon} must be at least twice the largest grid point {top}")));
    }
    Ok(horizon)
}

/// Mean of `δ(M_n[x], M_N[x])` at each grid point, with `M_N` sharing the
/// increments of `M_n`, and the fitted geometric rate. The horizon `N`
/// defaults to [`default_horizon`].
pub fn direction_convergence<F: LocalField>(
    m: &WalkMeasure<F>,
    x: &[F::Elem],
    grid: &[usize],
    horizon: Option<usize>,
    reps: usize,
    seed: u64,
) -> Result<DecayEstimate> {
    let horizon = check_horizon(grid, horizon)?;
    if x.len() != m.dim() {
        return Err(Error::Dimension { expected: m.dim(), found: x.len() });
    }
    if x.iter().all(num_traits::Zero::is_zero) {
        return Err(Error::Domain("starting vector is zero".into()));
    }
    if reps < 2 {
        return Err(Error::Domain("need at least two repetitions".into()));
    }
    let field = m.field();
    let per_rep: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let state = WalkState::new(m.dim(), stream_rng(seed, &[tag::DIRECTION, r as u64]));
            let cp = checkpoints(m, grid, horizon, state);
            cp.states
                .iter()
                .zip(&cp.tail_left)
                .map(|(s, t)| image_distance(field, &s.left, &s.left_wedge, x, &t.mul_vec(x)))
                .collect()
        })
        .collect();
    Ok(DecayEstimate::from_means(grid, &transpose(&per_rep, grid.len())))
}

fn transpose(per_rep: &[Vec<f64>], points: usize) -> Vec<Vec<f64>> {
    (0..points).map(|k| per_rep.iter().map(|v| v[k]).collect()).collect()
}

/// Mean drift of the attracting direction `k(M_n)e₁` and of the repelling
/// functional `e₁*∘u(S_n)` between step `n` and the horizon.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KakConvergence {
    /// `δ(k(M_n)e₁, k(M_N)e₁)`.
    pub k_curve: DecayEstimate,
    /// `δ(e₁*∘u(S_n), e₁*∘u(S_N))`.
    pub u_curve: DecayEstimate,
}

/// The functional `e₁*∘u(S)` spans the attracting direction of `Sᵀ`, so
/// the second curve reuses [`FrameGeometry::attracting_drift`] on transposes.
pub fn kak_convergence<F: FrameGeometry>(
    m: &WalkMeasure<F>,
    grid: &[usize],
    horizon: Option<usize>,
    reps: usize,
    seed: u64,
) -> Result<KakConvergence> {
    let horizon = check_horizon(grid, horizon)?;
    if reps < 2 {
        return Err(Error::Domain("need at least two repetitions".into()));
    }
    let field = m.field();
    let transposed = |s: &ScaledMatrix<F>| ScaledMatrix::<F> { unit: s.unit.transpose(), scale: s.scale };
    let per_rep: Vec<(Vec<f64>, Vec<f64>)> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let state = WalkState::new(m.dim(), stream_rng(seed, &[tag::KAK, r as u64]));
            let cp = checkpoints(m, grid, horizon, state);
            let k: Vec<f64> = cp
                .states
                .iter()
                .zip(&cp.tail_left)
                .map(|(s, t)| field.attracting_drift(&s.left, &s.left_wedge, t))
                .collect();
            let u: Vec<f64> = cp
                .states
                .iter()
                .zip(&cp.tail_right)
                .map(|(s, t)| field.attracting_drift(&transposed(&s.right), &transposed(&s.right_wedge), &t.transpose()))
                .collect();
            (k, u)
        })
        .collect();
    let ks: Vec<Vec<f64>> = per_rep.iter().map(|p| p.0.clone()).collect();
    let us: Vec<Vec<f64>> = per_rep.iter().map(|p| p.1.clone()).collect();
    Ok(KakConvergence {
        k_curve: DecayEstimate::from_means(grid, &transpose(&ks, grid.len())),
        u_curve: DecayEstimate::from_means(grid, &transpose(&us, grid.len())),
    })
}
