use super::*;
use crate::projlin::{exterior_square, operator_norm};
use crate::scalar::{PAdic, Real, Valuation};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn qi(n: i64) -> BigRational {
    q(n, 1)
}

fn rmat(rows: &[&[f64]]) -> Matrix<f64> {
    Matrix::from_rows(rows.iter().map(|r| r.to_vec()).collect())
}

fn rel_err(a: &Matrix<f64>, b: &Matrix<f64>) -> f64 {
    let diff = a - b;
    let n = |m: &Matrix<f64>| m.data().iter().map(|x| x * x).sum::<f64>().sqrt();
    n(&diff) / n(b)
}

/// Product of elementary operations: a random element of `SL_d(Z[1/p])`
/// when `p > 1`, or of `SL_d(Z)` when `p == 1`.
fn elementary_product(d: usize, ops: &[(usize, usize, i64, i64)], p: i64) -> Matrix<BigRational> {
    let mut m = Matrix::<BigRational>::identity(d);
    for &(i, j, c, e) in ops {
        let (i, j) = (i % d, j % d);
        if i == j {
            // diag(.., p^e, .., p^-e, ..) on coordinates i and i+1
            if p > 1 {
                let k = (i + 1) % d;
                let pe = BigRational::from_integer(BigInt::from(p).pow(e.unsigned_abs() as u32));
                let (x, y) = if e >= 0 { (pe.clone(), BigRational::one() / pe) } else { (BigRational::one() / &pe, pe) };
                m.scale_row(i, &x);
                m.scale_row(k, &y);
            }
        } else {
            let c = if p > 1 && e < 0 { q(c, p.pow((-e) as u32)) } else { qi(c) };
            m.add_row_multiple(i, j, &c);
        }
    }
    m
}

fn ops_strategy() -> impl Strategy<Value = Vec<(usize, usize, i64, i64)>> {
    prop::collection::vec((0usize..3, 0usize..3, -4i64..5, -2i64..3), 1..12)
}

#[test]
fn kak_identity_is_trivial() {
    let id = SlMatrix::<f64>::identity(3);
    let dec = kak(&Real, &id);
    assert_eq!(dec.a, vec![1.0; 3]);
    assert!(rel_err(&dec.reconstruct(), id.matrix()) < 1e-15);
    let p = PAdic::new(5).unwrap();
    let dec = kak(&p, &SlMatrix::<BigRational>::identity(2));
    assert_eq!(dec.a, vec![qi(1), qi(1)]);
    assert_eq!(dec.k, Matrix::identity(2));
    assert_eq!(dec.u, Matrix::identity(2));
}

#[test]
fn kak_of_positive_diagonal() {
    let g = SlMatrix::new(&Real, rmat(&[&[4.0, 0.0], &[0.0, 0.25]])).unwrap();
    let dec = kak(&Real, &g);
    assert_eq!(dec.a, vec![4.0, 0.25]);
    assert!(rel_err(&dec.k, &Matrix::identity(2)) < 1e-15);
    assert!(rel_err(&dec.u, &Matrix::identity(2)) < 1e-15);
    assert_eq!(dec.v, Vector(vec![1.0, 0.0]));
    assert_eq!(dec.h, Covector(vec![1.0, 0.0]));
}

#[test]
fn padic_kak_orders_by_absolute_value() {
    let p = PAdic::new(2).unwrap();
    let g = SlMatrix::new(&p, Matrix::diagonal(&[qi(2), q(1, 2)])).unwrap();
    let dec = kak(&p, &g);
    // |1/2|_2 = 2 comes first
    assert_eq!(dec.a, vec![q(1, 2), qi(2)]);
    assert_eq!(dec.a_abs(&p), vec![2.0, 0.5]);
    assert!(p.is_isometry(&dec.k, 0.0));
    assert!(p.is_isometry(&dec.u, 0.0));
    assert_eq!(dec.reconstruct(), *g.matrix());
    // the attracting point is [e₂]
    assert_eq!(dec.v, Vector(vec![qi(0), qi(1)]));
}

#[test]
fn kak_of_shear() {
    let g = SlMatrix::new(&Real, rmat(&[&[1.0, 2.0], &[0.0, 1.0]])).unwrap();
    let dec = kak(&Real, &g);
    // gᵀg has trace 6 and determinant 1
    let s1 = (3.0 + 8f64.sqrt()).sqrt();
    assert!((dec.a[0] - s1).abs() < 1e-12);
    assert!((dec.a[1] - 1.0 / s1).abs() < 1e-12);
    assert!((dec.a[0] - 2.414213562373095).abs() < 1e-12);
    assert!((dec.a[1] - 0.41421356237309515).abs() < 1e-12);
    assert!(rel_err(&dec.reconstruct(), g.matrix()) < 1e-14);
    assert!(Real.is_isometry(&dec.k, 1e-12));
    assert!(Real.is_isometry(&dec.u, 1e-12));
}

#[test]
fn sign_repair_keeps_factors_in_so() {
    // a reflection-heavy input: the raw SVD of this matrix returns factors
    // with determinant −1 for some backends
    let g = SlMatrix::new(&Real, rmat(&[&[0.0, -1.0], &[1.0, 0.0]])).unwrap();
    let dec = kak(&Real, &g);
    assert!(Real.is_isometry(&dec.k, 1e-12));
    assert!(Real.is_isometry(&dec.u, 1e-12));
    assert!(rel_err(&dec.reconstruct(), g.matrix()) < 1e-14);
    let m = rmat(&[&[2.0, 1.0, 0.0], &[1.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
    let dec = kak_of_matrix(&Real, &m).unwrap();
    assert!(Real.is_isometry(&dec.k, 1e-12) && Real.is_isometry(&dec.u, 1e-12));
}

#[test]
fn kak_of_inverse_reverses_reciprocals() {
    let g = SlMatrix::new(&Real, rmat(&[&[2.0, 3.0, 1.0], &[1.0, 2.0, 1.0], &[0.0, 1.0, 2.0]])).unwrap();
    let dec = kak(&Real, &g);
    let inv = kak_inverse(&Real, &dec);
    let direct = kak(&Real, &g.inverse(&Real));
    for i in 0..3 {
        assert!((inv.a[i] - 1.0 / dec.a[2 - i]).abs() < 1e-12);
        assert!((inv.a[i] - direct.a[i]).abs() < 1e-10);
    }
    assert!(rel_err(&inv.reconstruct(), g.inverse(&Real).matrix()) < 1e-12);
    assert!(Real.is_isometry(&inv.k, 1e-12) && Real.is_isometry(&inv.u, 1e-12));

    let p = PAdic::new(3).unwrap();
    let g = SlMatrix::new(&p, elementary_product(3, &[(0, 1, 5, -1), (1, 1, 0, 2), (2, 0, 1, 0)], 3)).unwrap();
    let dec = kak(&p, &g);
    let inv = kak_inverse(&p, &dec);
    assert_eq!(inv.reconstruct(), *g.inverse(&p).matrix());
    let direct = kak(&p, &g.inverse(&p));
    assert_eq!(inv.a, direct.a);
    assert!(p.is_isometry(&inv.k, 0.0) && p.is_isometry(&inv.u, 0.0));
}

#[test]
fn signed_reversal_has_unit_determinant() {
    for d in 2..7 {
        let j = signed_reversal::<BigRational>(d);
        let p = PAdic::new(2).unwrap();
        assert_eq!(determinant(&p, &j), qi(1), "d = {d}");
    }
}

#[test]
fn derived_point_and_hyperplane_use_outer_factors() {
    let p = PAdic::new(5).unwrap();
    let g = SlMatrix::new(&p, elementary_product(2, &[(0, 1, 3, -2), (1, 0, 2, 0), (0, 0, 0, 1)], 5)).unwrap();
    let dec = kak(&p, &g);
    assert_eq!(dec.v.0, p.canonical_representative(&dec.k.column(0)));
    // h = e₁* ∘ u is the dual action of u⁻¹ on e₁*
    let u_inv = SlMatrix::new_unchecked(dec.u_inv.clone());
    let h = crate::projlin::dual_action(&p, &u_inv, &Covector::basis(2, 0));
    assert_eq!(dec.h.0, p.canonical_representative(&h.0));
    // k⁻¹ and u⁻¹ really are inverses
    assert_eq!(&dec.k * &dec.k_inv, Matrix::identity(2));
    assert_eq!(&dec.u * &dec.u_inv, Matrix::identity(2));
}

#[test]
fn iwasawa_examples() {
    let id = SlMatrix::<f64>::identity(2);
    let dec = iwasawa(&Real, &id);
    assert_eq!(dec.a, vec![1.0, 1.0]);
    assert!(rel_err(&dec.n, &Matrix::identity(2)) < 1e-15);

    let n = SlMatrix::new(&Real, rmat(&[&[1.0, 5.0, -2.0], &[0.0, 1.0, 3.0], &[0.0, 0.0, 1.0]])).unwrap();
    let dec = iwasawa(&Real, &n);
    assert!(rel_err(&dec.k, &Matrix::identity(3)) < 1e-15);
    for a in &dec.a {
        assert!((a - 1.0).abs() < 1e-15);
    }
    assert!(rel_err(&dec.n, n.matrix()) < 1e-15);

    let g = SlMatrix::new(&Real, rmat(&[&[3.0, 0.0], &[0.0, 1.0 / 3.0]])).unwrap();
    let dec = iwasawa(&Real, &g);
    assert!((dec.a[0] - 3.0).abs() < 1e-15 && (dec.a[1] - 1.0 / 3.0).abs() < 1e-15);
    assert!(rel_err(&dec.k, &Matrix::identity(2)) < 1e-15);

    let p = PAdic::new(3).unwrap();
    let n = SlMatrix::new(&p, Matrix::from_rows(vec![vec![qi(1), q(2, 9)], vec![qi(0), qi(1)]])).unwrap();
    let dec = iwasawa(&p, &n);
    assert_eq!(dec.k, Matrix::identity(2));
    assert_eq!(dec.a, vec![qi(1), qi(1)]);
    assert_eq!(dec.n, *n.matrix());
}

#[test]
fn iwasawa_rejects_singular_input() {
    assert!(iwasawa_of_matrix(&Real, &rmat(&[&[1.0, 2.0], &[2.0, 4.0]])).is_err());
    let p = PAdic::new(2).unwrap();
    let m = Matrix::from_rows(vec![vec![qi(1), qi(2)], vec![qi(2), qi(4)]]);
    assert!(iwasawa_of_matrix(&p, &m).is_err());
    assert!(kak_of_matrix(&p, &m).is_err());
}

#[test]
fn kak_kan_ratio_on_diagonal_is_one() {
    let id = SlMatrix::<f64>::identity(3);
    assert_eq!(kak_kan_ratio(&Real, &id), vec![1.0; 3]);
    let g = SlMatrix::new(&Real, rmat(&[&[5.0, 0.0], &[0.0, 0.2]])).unwrap();
    for r in kak_kan_ratio(&Real, &g) {
        assert!((r - 1.0).abs() < 1e-15);
    }
    let p = PAdic::new(2).unwrap();
    let g = SlMatrix::new(&p, Matrix::diagonal(&[q(1, 4), qi(4)])).unwrap();
    assert_eq!(kak_kan_ratio(&p, &g), vec![1.0, 1.0]);
}

#[test]
fn kak_kan_ratio_on_integer_word_is_finite() {
    let a = SlMatrix::new(&Real, rmat(&[&[1.0, 2.0], &[0.0, 1.0]])).unwrap();
    let b = SlMatrix::new(&Real, rmat(&[&[1.0, 0.0], &[2.0, 1.0]])).unwrap();
    let mut g = SlMatrix::<f64>::identity(2);
    for i in 0..20 {
        g = g.mul(if i % 3 == 0 { &b } else { &a });
    }
    for r in kak_kan_ratio(&Real, &g) {
        assert!(r.is_finite() && r > 0.0);
    }
}

fn check_real_invariants(g: &Matrix<f64>) -> Result<(), TestCaseError> {
    let dec = kak_of_matrix(&Real, g).unwrap();
    prop_assert!(rel_err(&dec.reconstruct(), g) <= 1e-9);
    prop_assert!(dec.a.windows(2).all(|w| w[0] >= w[1]));
    prop_assert!(dec.a.iter().all(|&x| x > 0.0));
    prop_assert!((dec.a.iter().product::<f64>() - 1.0).abs() < 1e-6);
    prop_assert!(Real.is_isometry(&dec.k, 1e-9) && Real.is_isometry(&dec.u, 1e-9));
    let norm = operator_norm(&Real, g);
    prop_assert!((dec.a[0] - norm).abs() <= 1e-9 * norm);
    let w = operator_norm(&Real, &exterior_square(g));
    prop_assert!((dec.a[0] * dec.a[1] - w).abs() <= 1e-9 * w);
    Ok(())
}

fn check_padic_invariants(p: &PAdic, g: &Matrix<BigRational>) -> Result<(), TestCaseError> {
    let dec = kak_of_matrix(p, g).unwrap();
    prop_assert_eq!(&dec.reconstruct(), g);
    prop_assert!(p.is_isometry(&dec.k, 0.0) && p.is_isometry(&dec.u, 0.0));
    let vals: Vec<i64> = dec.a.iter().map(|x| p.valuation(x).finite().unwrap()).collect();
    prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    for (x, &v) in dec.a.iter().zip(&vals) {
        prop_assert_eq!(x, &p.power(v));
    }
    prop_assert_eq!(vals.iter().sum::<i64>(), 0);
    // |a₁| = max |g_ij|,  |a₁ a₂| = max |⋀²g|
    prop_assert_eq!(Valuation::Finite(vals[0]), p.min_valuation(g.data()));
    prop_assert_eq!(Valuation::Finite(vals[0] + vals[1]), p.min_valuation(exterior_square(g).data()));
    let inv = kak_inverse(p, &dec);
    let direct = kak_of_matrix(p, &crate::projlin::inverse(p, g).unwrap()).unwrap();
    prop_assert_eq!(inv.a, direct.a);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn real_kak_invariants(ops in ops_strategy(), d in 2usize..4) {
        let g = elementary_product(d, &ops, 2).map(crate::scalar::rational_to_f64);
        check_real_invariants(&g)?;
    }

    #[test]
    fn padic_kak_invariants(ops in ops_strategy(), d in 2usize..4, pi in 0usize..3) {
        let prime = [2u64, 3, 5][pi];
        let p = PAdic::new(prime).unwrap();
        let g = elementary_product(d, &ops, prime as i64);
        check_padic_invariants(&p, &g)?;
    }

    #[test]
    fn iwasawa_invariants(ops in ops_strategy(), d in 2usize..4) {
        let p = PAdic::new(3).unwrap();
        let g = elementary_product(d, &ops, 3);
        let dec = iwasawa_of_matrix(&p, &g).unwrap();
        prop_assert_eq!(&dec.reconstruct(), &g);
        prop_assert!(p.is_isometry(&dec.k, 0.0));
        for i in 0..d {
            prop_assert_eq!(&dec.n[(i, i)], &qi(1));
            for j in 0..i {
                prop_assert!(dec.n[(i, j)].is_zero());
            }
            let v = p.valuation(&dec.a[i]).finite().unwrap();
            prop_assert_eq!(&dec.a[i], &p.power(v));
        }

        let gr = g.map(crate::scalar::rational_to_f64);
        let dec = iwasawa_of_matrix(&Real, &gr).unwrap();
        prop_assert!(rel_err(&dec.reconstruct(), &gr) <= 1e-9);
        prop_assert!(Real.is_isometry(&dec.k, 1e-9));
        prop_assert!(dec.a.iter().all(|&x| x > 0.0));
        for i in 0..d {
            prop_assert_eq!(dec.n[(i, i)], 1.0);
            for j in 0..i {
                prop_assert!(dec.n[(i, j)].abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn real_kak_inverse_matches_direct(ops in ops_strategy()) {
        let g = elementary_product(3, &ops, 2).map(crate::scalar::rational_to_f64);
        let dec = kak_of_matrix(&Real, &g).unwrap();
        let inv = kak_inverse(&Real, &dec);
        let direct = kak_of_matrix(&Real, &crate::projlin::inverse(&Real, &g).unwrap()).unwrap();
        for i in 0..3 {
            prop_assert!((inv.a[i] - direct.a[i]).abs() <= 1e-9 * direct.a[0]);
        }
    }
}

