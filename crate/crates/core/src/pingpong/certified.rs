//! Ping-pong certification over the reals with rigorous error bounds.
//!
//! The generators are exact rationals enclosed in intervals. For each of
//! `g` and `g⁻¹` (the latter enclosed as the adjugate, which has the same
//! projective action) a floating-point SVD supplies approximate top singular
//! vectors `ũ`, `w̃`; everything claimed about the true matrix is then
//! bounded in interval arithmetic:
//!
//! * `σ₁ ≥ ‖g w̃‖ / ‖w̃‖` and `σ₁σ₂ ≤ ‖⋀²g‖_F`, so `σ₂/σ₁ ≤ ‖⋀²g‖_F / σ₁²`;
//! * Wedin's residual bound puts the true top singular vectors within
//!   `η = max(‖r₁‖, ‖r₂‖) / (σ̃ − σ₂)` (sine of the angle) of `ũ`, `w̃`;
//! * `([x],[f]) ↦ δ([x], Ker f)` is `√2`-Lipschitz in each argument, so
//!   every separation computed from `ũ`, `w̃` moves by at most `√2·η` per side.

use num_rational::BigRational;
use rayon::prelude::*;

use super::{evaluate_tuple, CertificationMethod, ContractionData, GeneratorData, ProximalityCertificate};
use crate::decomp::kak_of_matrix;
use crate::error::{Error, Result};
use crate::projlin::{wedge_basis, Covector, Matrix, Vector};
use crate::scalar::{rational_to_f64, Interval, LocalField, Magnitude, Real};

type IMat = Vec<Vec<Interval>>;

fn enclose(q: &BigRational) -> Interval {
    let f = rational_to_f64(q);
    match BigRational::from_float(f) {
        Some(exact) if &exact == q => Interval::point(f),
        _ => Interval::new(f.next_down(), f.next_up()),
    }
}

fn norm(xs: &[Interval]) -> Interval {
    Interval::sum(xs.iter().map(|x| x.square())).sqrt()
}

fn mat_vec(m: &IMat, x: &[f64]) -> Vec<Interval> {
    m.iter()
        .map(|row| Interval::sum(row.iter().zip(x).map(|(a, &b)| *a * Interval::point(b))))
        .collect()
}

fn mat_t_vec(m: &IMat, x: &[f64]) -> Vec<Interval> {
    let d = m.len();
    (0..d)
        .map(|j| Interval::sum((0..d).map(|i| m[i][j] * Interval::point(x[i]))))
        .collect()
}

fn point_norm(x: &[f64]) -> Interval {
    norm(&x.iter().map(|&v| Interval::point(v)).collect::<Vec<_>>())
}

fn dot_points(x: &[f64], y: &[f64]) -> Interval {
    Interval::sum(x.iter().zip(y).map(|(&a, &b)| Interval::point(a) * Interval::point(b)))
}

/// Determinant by cofactor expansion along the first row (d is small).
fn det(m: &IMat) -> Interval {
    let d = m.len();
    if d == 1 {
        return m[0][0];
    }
    Interval::sum((0..d).map(|j| {
        let term = m[0][j] * det(&minor(m, 0, j));
        if j % 2 == 0 {
            term
        } else {
            -term
        }
    }))
}

fn minor(m: &IMat, row: usize, col: usize) -> IMat {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != row)
        .map(|(_, r)| r.iter().enumerate().filter(|(j, _)| *j != col).map(|(_, x)| *x).collect())
        .collect()
}

/// `adj(m)`, a positive multiple of `m⁻¹` when `det m > 0`.
fn adjugate(m: &IMat) -> IMat {
    let d = m.len();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let c = det(&minor(m, j, i));
                    if (i + j) % 2 == 0 {
                        c
                    } else {
                        -c
                    }
                })
                .collect()
        })
        .collect()
}

fn wedge_frobenius(m: &IMat) -> Interval {
    let basis = wedge_basis(m.len());
    let mut acc = Vec::with_capacity(basis.len() * basis.len());
    for &(i, j) in &basis {
        for &(k, l) in &basis {
            acc.push((m[i][k] * m[j][l] - m[i][l] * m[j][k]).square());
        }
    }
    Interval::sum(acc).sqrt()
}

/// Certified data for one side (`g` or `g⁻¹`).
struct Side {
    u: Vec<f64>,
    w: Vec<f64>,
    ratio_hi: f64,
    separation: Interval,
    eta: f64,
}

fn certify_side(m: &IMat) -> Result<Side> {
    let d = m.len();
    let mid = Matrix::from_fn(d, d, |i, j| m[i][j].mid());
    let dec = kak_of_matrix(&Real, &mid)?;
    let u: Vec<f64> = dec.k.column(0);
    let w: Vec<f64> = dec.u.row(0).to_vec();
    let nu = point_norm(&u);
    let nw = point_norm(&w);

    let gw = mat_vec(m, &w);
    let sigma1 = norm(&gw) / nw;
    let sigma1_lo = Interval::point(sigma1.lo.max(0.0));
    let wedge_hi = Interval::point(wedge_frobenius(m).hi);
    let sigma2_hi = (wedge_hi / sigma1_lo).hi;
    let ratio_hi = (Interval::point(sigma2_hi) / sigma1_lo).hi.min(1.0);

    let s_tilde = Interval::point(sigma1.mid());
    let r1: Vec<Interval> = gw
        .iter()
        .zip(&u)
        .map(|(gwi, &ui)| *gwi / nw - s_tilde * Interval::point(ui) / nu)
        .collect();
    let gtu = mat_t_vec(m, &u);
    let r2: Vec<Interval> = gtu
        .iter()
        .zip(&w)
        .map(|(gti, &wi)| *gti / nu - s_tilde * Interval::point(wi) / nw)
        .collect();
    let residual = norm(&r1).max(norm(&r2));
    let gap = s_tilde - Interval::point(sigma2_hi);
    let eta = if gap.lo > 0.0 { (residual / gap).hi.min(1.0) } else { 1.0 };

    let approx = (dot_points(&u, &w) / (nu * nw)).abs();
    let slack = Interval::point(2.0 * std::f64::consts::SQRT_2) * Interval::point(eta);
    let separation = Interval::new((approx - slack).lo.max(0.0), (approx + slack).hi.min(1.0));
    Ok(Side { u, w, ratio_hi, separation, eta })
}

fn side_data(s: &Side) -> ContractionData<f64> {
    ContractionData {
        v: Vector(Real.canonical_representative(&s.u)),
        h: Covector(Real.canonical_representative(&s.w)),
        ratio: Magnitude::Enclosure { lo: 0.0, hi: s.ratio_hi },
        separation: Magnitude::from_interval(s.separation),
        angle_error: s.eta,
    }
}

/// Certified lower bound for `δ(v_a, Ker h_b)`.
fn cross_margin(a: &ContractionData<f64>, b: &ContractionData<f64>) -> Magnitude {
    let approx = (dot_points(&a.v.0, &b.h.0) / (point_norm(&a.v.0) * point_norm(&b.h.0))).abs();
    let slack = Interval::point(std::f64::consts::SQRT_2) * (Interval::point(a.angle_error) + Interval::point(b.angle_error));
    Magnitude::from_interval(Interval::new((approx - slack).lo.max(0.0), (approx + slack).hi.min(1.0)))
}

/// Ping-pong certification of real matrices with exact rational entries,
/// every comparison made at a rigorous interval endpoint.
pub fn certify_real_enclosed(gens: &[Matrix<BigRational>], r: f64, eps: f64) -> Result<ProximalityCertificate> {
    super::check_thresholds(r, eps)?;
    if gens.len() < 2 {
        return Err(Error::Domain(format!("a ping-pong tuple needs at least 2 generators, got {}", gens.len())));
    }
    let d = gens[0].rows();
    for g in gens {
        if !g.is_square() || g.rows() != d || d < 2 {
            return Err(Error::Dimension { expected: d, found: g.rows() });
        }
    }
    let data: Vec<GeneratorData<f64>> = gens
        .par_iter()
        .map(|g| {
            let im: IMat = g.to_rows().iter().map(|row| row.iter().map(enclose).collect()).collect();
            if det(&im).hi <= 0.0 {
                return Err(Error::Invariant("generator determinant is not positive".into()));
            }
            let fwd = certify_side(&im)?;
            let inv = certify_side(&adjugate(&im))?;
            Ok(GeneratorData { forward: side_data(&fwd), inverse: side_data(&inv) })
        })
        .collect::<Result<_>>()?;
    let check = evaluate_tuple(&data, r, eps, cross_margin);
    let entries = gens
        .iter()
        .map(|g| g.to_rows().iter().map(|row| row.iter().map(|x| x.to_string()).collect()).collect())
        .collect();
    Ok(ProximalityCertificate::assemble(&Real, CertificationMethod::Interval, entries, &data, check, r, eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn adjugate_times_matrix_is_det_identity() {
        let m: IMat = [[2.0, 3.0, 1.0], [1.0, 2.0, 1.0], [0.0, 1.0, 2.0]]
            .iter()
            .map(|r| r.iter().map(|&x| Interval::point(x)).collect())
            .collect();
        let adj = adjugate(&m);
        for i in 0..3 {
            for j in 0..3 {
                let s = Interval::sum((0..3).map(|k| m[i][k] * adj[k][j]));
                assert!(s.contains(if i == j { 1.0 } else { 0.0 }));
            }
        }
        assert!(det(&m).contains(1.0));
    }

    #[test]
    fn enclosure_contains_decimal() {
        let x = q(1, 10);
        let i = enclose(&x);
        assert!(BigRational::from_float(i.lo).unwrap() <= x && x <= BigRational::from_float(i.hi).unwrap());
        assert_eq!(enclose(&q(3, 4)), Interval::point(0.75));
    }

    #[test]
    fn diagonal_side_is_tight() {
        let m: IMat = vec![
            vec![Interval::point(100.0), Interval::ZERO],
            vec![Interval::ZERO, Interval::point(0.01)],
        ];
        let s = certify_side(&m).unwrap();
        assert!(s.eta < 1e-13, "{}", s.eta);
        assert!((s.ratio_hi - 1e-4).abs() < 1e-15, "{}", s.ratio_hi);
        assert!(s.separation.lo > 1.0 - 1e-14);
    }
}
