use super::*;
use crate::projlin::{fubini_study_raw, padic_fubini_study_valuation, padic_hyperplane_valuation, Matrix};
use crate::scalar::{PAdic, Real, Valuation};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn qi(n: i64) -> BigRational {
    q(n, 1)
}

fn rsl(rows: &[&[f64]]) -> SlMatrix<f64> {
    SlMatrix::new(&Real, Matrix::from_rows(rows.iter().map(|r| r.to_vec()).collect())).unwrap()
}

fn rotation(theta: f64) -> Matrix<f64> {
    Matrix::from_rows(vec![vec![theta.cos(), -theta.sin()], vec![theta.sin(), theta.cos()]])
}

fn diag100() -> SlMatrix<f64> {
    rsl(&[&[100.0, 0.0], &[0.0, 0.01]])
}

fn conjugate_45() -> SlMatrix<f64> {
    let r = rotation(std::f64::consts::FRAC_PI_4);
    let m = &(&r * diag100().matrix()) * &r.transpose();
    SlMatrix::new(&Real, m).unwrap()
}

#[test]
fn contraction_data_of_diagonal() {
    let c = contraction_data(&Real, &diag100());
    assert_eq!(c.v, Vector(vec![1.0, 0.0]));
    assert_eq!(c.h, Covector(vec![1.0, 0.0]));
    assert!((c.ratio.value() - 1e-4).abs() < 1e-18);
    assert_eq!(c.separation.value(), 1.0);
}

#[test]
fn contraction_data_of_rotation_and_shear() {
    let c = contraction_data(&Real, &rsl(&[&[0.0, -1.0], &[1.0, 0.0]]));
    assert!((c.ratio.value() - 1.0).abs() < 1e-15);
    let c = contraction_data(&Real, &rsl(&[&[1.0, 2.0], &[0.0, 1.0]]));
    let s2 = 2f64.sqrt();
    assert!((c.ratio.value() - (s2 - 1.0) / (s2 + 1.0)).abs() < 1e-12);
    assert!((c.ratio.value() - 0.17157).abs() < 1e-5);
}

#[test]
fn eps_contracting_examples() {
    assert!(is_eps_contracting(&Real, &diag100(), 0.02).unwrap().0);
    assert!(!is_eps_contracting(&Real, &diag100(), 0.005).unwrap().0);
    assert!(!is_eps_contracting(&Real, &SlMatrix::identity(2), 0.9).unwrap().0);
    assert!(matches!(is_eps_contracting(&Real, &diag100(), 1.0), Err(Error::Domain(_))));
    assert!(matches!(is_eps_contracting(&Real, &diag100(), 0.0), Err(Error::Domain(_))));
}

#[test]
fn very_proximal_examples() {
    assert!(is_very_proximal(&Real, &diag100(), 0.5, 0.02).unwrap());
    assert!(!is_very_proximal(&Real, &SlMatrix::identity(2), 0.5, 0.02).unwrap());
    assert!(is_very_proximal(&Real, &conjugate_45(), 0.5, 0.02).unwrap());
    assert!(matches!(is_very_proximal(&Real, &diag100(), 0.03, 0.02), Err(Error::Domain(_))));
}

#[test]
fn pingpong_pair_examples() {
    let (ok, cert) = is_pingpong_tuple(&Real, &[diag100(), conjugate_45()], 0.5, 0.02).unwrap();
    assert!(ok);
    let cert = cert.unwrap();
    for m in cert.cross_margins.iter().flatten().flatten() {
        assert!((m.value() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }
    assert_eq!(cert.method, CertificationMethod::Float);

    // δ(v_{a⁻¹}, H_a) = δ([e₂], Ker e₁*)... across the duplicate it is 0
    let report = pingpong_report(&Real, &[diag100(), diag100()], 0.5, 0.02).unwrap();
    assert!(!report.is_certified());
    assert!(!report.cross_ok && report.contraction_ok && report.separation_ok);
    assert_eq!(report.min_cross_margin, Some(0.0));

    let (ok, cert) = is_pingpong_tuple(&Real, &[SlMatrix::identity(2), SlMatrix::identity(2)], 0.5, 0.02).unwrap();
    assert!(!ok && cert.is_none());
    assert!(pingpong_report(&Real, &[diag100()], 0.5, 0.02).is_err());
}

fn padic_pair() -> (PAdic, Vec<SlMatrix<BigRational>>) {
    let p = PAdic::new(3).unwrap();
    let a = Matrix::diagonal(&[q(1, 9), qi(9)]);
    let w = Matrix::from_rows(vec![vec![qi(1), qi(1)], vec![qi(1), qi(2)]]);
    let w_inv = crate::projlin::inverse(&p, &w).unwrap();
    let b = &(&w * &a) * &w_inv;
    (p, vec![SlMatrix::new(&p, a).unwrap(), SlMatrix::new(&p, b).unwrap()])
}

#[test]
fn padic_pair_is_certified_exactly() {
    let (p, gens) = padic_pair();
    let cert = pingpong_report(&p, &gens, 0.5, 0.125).unwrap();
    assert!(cert.is_certified());
    assert_eq!(cert.method, CertificationMethod::Exact);
    for g in &cert.generators {
        assert_eq!(g.forward.ratio, Magnitude::PadicPower { prime: 3, valuation: Some(4) });
    }
    for m in cert.cross_margins.iter().flatten().flatten() {
        assert_eq!(*m, Magnitude::PadicPower { prime: 3, valuation: Some(0) });
    }
    // 3⁻⁴ = 1/81 > (1/10)²
    assert!(!pingpong_report(&p, &gens, 0.5, 0.1).unwrap().is_certified());
    let exact: Vec<_> = gens.iter().map(|g| g.matrix().clone()).collect();
    assert_eq!(free_word_oracle_exact(&exact, 8).unwrap(), OracleVerdict::NoRelationFound { max_len: 8 });
}

#[test]
fn interval_certificate_for_rational_rotation_pair() {
    let a = Matrix::diagonal(&[qi(100), q(1, 100)]);
    let r = Matrix::from_rows(vec![vec![q(3, 5), q(-4, 5)], vec![q(4, 5), q(3, 5)]]);
    let b = &(&r * &a) * &r.transpose();
    let cert = certify_real_enclosed(&[a.clone(), b.clone()], 0.5, 0.02).unwrap();
    assert!(cert.is_certified(), "{cert:?}");
    assert_eq!(cert.method, CertificationMethod::Interval);
    let mut margins: Vec<f64> = cert.cross_margins.iter().flatten().flatten().map(Magnitude::value).collect();
    margins.sort_by(f64::total_cmp);
    assert!((margins[0] - 0.6).abs() < 1e-9 && (margins[margins.len() - 1] - 0.8).abs() < 1e-9);
    // r above the smallest margin cannot be certified
    assert!(!certify_real_enclosed(&[a.clone(), b.clone()], 0.61, 0.02).unwrap().is_certified());
    // duplicated generator fails
    assert!(!certify_real_enclosed(&[a.clone(), a], 0.5, 0.02).unwrap().is_certified());
}

#[test]
fn interval_and_float_modes_agree_on_clear_cases() {
    let ab = Matrix::from_rows(vec![vec![qi(5), qi(2)], vec![qi(2), qi(1)]]);
    let ab_inv_t = Matrix::from_rows(vec![vec![qi(5), qi(-2)], vec![qi(-2), qi(1)]]);
    let enclosed = certify_real_enclosed(&[ab.clone(), ab_inv_t.clone()], 0.5, 0.2).unwrap();
    let floats: Vec<_> = [&ab, &ab_inv_t]
        .iter()
        .map(|m| SlMatrix::new(&Real, m.map(crate::scalar::rational_to_f64)).unwrap())
        .collect();
    let plain = pingpong_report(&Real, &floats, 0.5, 0.2).unwrap();
    assert!(enclosed.is_certified() && plain.is_certified());
    for (x, y) in enclosed.cross_margins.iter().flatten().flatten().zip(plain.cross_margins.iter().flatten().flatten()) {
        assert!(x.value() <= y.value() + 1e-15);
        assert!((x.value() - y.value()).abs() < 1e-9);
    }
}

#[test]
fn non_free_pair_is_never_certified() {
    let a = rsl(&[&[1.0, 1.0], &[0.0, 1.0]]);
    let b = rsl(&[&[1.0, 0.0], &[1.0, 1.0]]);
    for eps in [0.05, 0.1, 0.2, 0.3, 0.4, 0.45, 0.49] {
        for r in [2.0 * eps + 1e-3, (2.0 * eps + 1.0) / 2.0, 0.999] {
            if r <= 2.0 * eps {
                continue;
            }
            assert!(!pingpong_report(&Real, &[a.clone(), b.clone()], r, eps).unwrap().is_certified());
        }
    }
}

fn exact_pair(a: [[i64; 2]; 2], b: [[i64; 2]; 2]) -> Vec<Matrix<BigRational>> {
    [a, b]
        .iter()
        .map(|m| Matrix::from_rows(m.iter().map(|r| r.iter().map(|&x| qi(x)).collect()).collect()))
        .collect()
}

#[test]
fn oracle_finds_relation_in_non_free_pair() {
    let gens = exact_pair([[1, 1], [0, 1]], [[1, 0], [1, 1]]);
    let v = free_word_oracle_exact(&gens, 12).unwrap();
    let word = v.relation().expect("relation").clone();
    assert!(word.is_reduced());
    assert_eq!(evaluate_word(&gens, &word).unwrap(), Matrix::identity(2));
    // (a·b⁻¹·a)⁴ is the classical relation: a·b⁻¹·a has order 4
    let aba = [(0, false), (1, true), (0, false)];
    let w12 = Word(
        (0..4)
            .flat_map(|_| aba.iter().map(|&(g, i)| Letter { generator: g, inverse: i }))
            .collect(),
    );
    assert_eq!(w12.len(), 12);
    assert!(w12.is_reduced());
    assert_eq!(evaluate_word(&gens, &w12).unwrap(), Matrix::identity(2));
    let quarter = Word(aba.iter().map(|&(g, i)| Letter { generator: g, inverse: i }).collect());
    let rot = evaluate_word(&gens, &quarter).unwrap();
    assert_eq!(rot, Matrix::from_rows(vec![vec![qi(0), qi(1)], vec![qi(-1), qi(0)]]));
}

#[test]
fn oracle_scalar_entry_point() {
    let gens = vec![vec![
        vec![crate::scalar::Scalar::Rational(qi(1)), crate::scalar::Scalar::Rational(qi(0))],
        vec![crate::scalar::Scalar::Rational(qi(0)), crate::scalar::Scalar::Rational(qi(1))],
    ]];
    assert_eq!(free_word_oracle(&gens, 1).unwrap().relation().unwrap().to_string(), "a");
}

#[test]
fn certified_words_in_sanov_pair_are_free_to_length_ten() {
    // ab and a⁻¹b⁻¹ for a = [[1,2],[0,1]], b = [[1,0],[2,1]]
    let gens = exact_pair([[5, 2], [2, 1]], [[5, -2], [-2, 1]]);
    let floats: Vec<_> = gens
        .iter()
        .map(|m| SlMatrix::new(&Real, m.map(crate::scalar::rational_to_f64)).unwrap())
        .collect();
    assert!(pingpong_report(&Real, &floats, 0.5, 0.2).unwrap().is_certified());
    assert_eq!(free_word_oracle_exact(&gens, 10).unwrap(), OracleVerdict::NoRelationFound { max_len: 10 });
}

fn real_contracting(theta1: f64, theta2: f64, s: f64) -> SlMatrix<f64> {
    let m = &(&rotation(theta1) * &Matrix::diagonal(&[s, 1.0 / s])) * &rotation(theta2);
    SlMatrix::new(&Real, m).unwrap()
}

fn padic_contracting(p: &PAdic, k1: (i64, i64, i64), k2: (i64, i64, i64), m: i64) -> SlMatrix<BigRational> {
    let pi = p.prime() as i64;
    let k = |(a, b, c): (i64, i64, i64)| {
        Matrix::from_rows(vec![vec![qi(1 + pi * a), qi(b)], vec![qi(pi * c), qi(1)]])
    };
    // det k = 1 + p(a − bc): a unit, so k ∈ GL₂(Z_(p)); rescale to determinant one
    let kk1 = k(k1);
    let kk2 = k(k2);
    let d1 = crate::projlin::determinant(p, &kk1);
    let d2 = crate::projlin::determinant(p, &kk2);
    let a = Matrix::diagonal(&[p.power(-m) / (d1 * d2), p.power(m)]);
    SlMatrix::new(p, &(&kk1 * &a) * &kk2).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn real_contraction_mapping_property(
        t1 in 0.0f64..6.3, t2 in 0.0f64..6.3, eps_i in 0usize..3, extra in 1.0f64..50.0,
        xs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1000),
    ) {
        let eps = [0.3, 0.1, 0.02][eps_i];
        let g = real_contracting(t1, t2, extra / eps);
        let (ok, c) = is_eps_contracting(&Real, &g, eps).unwrap();
        prop_assert!(ok);
        for (a, b) in xs {
            let x = [a, b];
            if a == 0.0 && b == 0.0 {
                continue;
            }
            let dxh = dist_point_hyperplane_raw(&Real, &x, &c.h.0).unwrap();
            if dxh <= eps {
                continue;
            }
            let gx = g.matrix().mul_vec(&x);
            let d = fubini_study_raw(&Real, &gx, &c.v.0).unwrap();
            prop_assert!(d <= c.ratio.value() / dxh + 1e-9);
            prop_assert!(d < eps);
        }
    }

    #[test]
    fn padic_contraction_mapping_property(
        k1 in (-5i64..5, -5i64..5, -5i64..5), k2 in (-5i64..5, -5i64..5, -5i64..5), m in 1i64..4, pi in 0usize..3,
        xs in prop::collection::vec((-40i64..40, 1i64..40, -40i64..40, 1i64..40), 100),
    ) {
        let p = PAdic::new([2u64, 3, 5][pi]).unwrap();
        let g = padic_contracting(&p, k1, k2, m);
        let c = contraction_data(&p, &g);
        // ratio = p^{-2m}; the largest eps with eps² ≥ ratio is p^{-m}
        let Magnitude::PadicPower { valuation: Some(vr), .. } = c.ratio else { panic!() };
        prop_assert_eq!(vr, 2 * m);
        let eps_v = m; // eps = p^{-m}
        for (a, b, cc, d) in xs {
            let x = vec![q(a, b), q(cc, d)];
            if x.iter().all(|t| t.is_zero()) {
                continue;
            }
            let Valuation::Finite(vxh) = padic_hyperplane_valuation(&p, &x, &c.h.0) else { continue };
            // δ(x, H) > eps  ⇔  v(δ) < eps_v
            if vxh >= eps_v {
                continue;
            }
            let gx = g.matrix().mul_vec(&x);
            let vd = padic_fubini_study_valuation(&p, &gx, &c.v.0);
            // δ(gx, v) ≤ ratio / δ(x, H)  ⇔  v(δ(gx,v)) ≥ vr − vxh
            prop_assert!(vd >= Valuation::Finite(vr - vxh));
            prop_assert!(vd > Valuation::Finite(eps_v));
        }
    }

    #[test]
    fn ratio_is_isometry_invariant(t0 in 0.0f64..6.3, t1 in 0.0f64..6.3, t2 in 0.0f64..6.3, t3 in 0.0f64..6.3, s in 1.0f64..30.0) {
        let g = real_contracting(t1, t2, s);
        let moved = SlMatrix::new(&Real, &(&rotation(t0) * g.matrix()) * &rotation(t3)).unwrap();
        let a = contraction_data(&Real, &g).ratio.value();
        let b = contraction_data(&Real, &moved).ratio.value();
        prop_assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn padic_ratio_is_isometry_invariant(k1 in (-5i64..5, -5i64..5, -5i64..5), k2 in (-5i64..5, -5i64..5, -5i64..5), m in 0i64..4) {
        let p = PAdic::new(5).unwrap();
        let g = padic_contracting(&p, (0, 0, 0), (0, 0, 0), m);
        let moved = padic_contracting(&p, k1, k2, m);
        prop_assert_eq!(contraction_data(&p, &g).ratio, contraction_data(&p, &moved).ratio);
    }

    #[test]
    fn eps_contraction_is_monotone(t1 in 0.0f64..6.3, t2 in 0.0f64..6.3, s in 1.0f64..30.0, e1 in 0.01f64..0.99, e2 in 0.01f64..0.99) {
        let g = real_contracting(t1, t2, s);
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        if is_eps_contracting(&Real, &g, lo).unwrap().0 {
            prop_assert!(is_eps_contracting(&Real, &g, hi).unwrap().0);
        }
    }
}
