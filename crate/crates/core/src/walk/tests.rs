use super::*;
use crate::projlin::exterior_square;

fn qi(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn real_sl(rows: &[[f64; 2]; 2]) -> SlMatrix<f64> {
    SlMatrix::new(&Real, Matrix::from_rows(rows.iter().map(|r| r.to_vec()).collect())).unwrap()
}

fn padic_sl(p: &PAdic, rows: Vec<Vec<BigRational>>) -> SlMatrix<BigRational> {
    SlMatrix::new(p, Matrix::from_rows(rows)).unwrap()
}

fn positive_measure() -> WalkMeasure<Real> {
    WalkMeasure::uniform(Real, vec![real_sl(&[[2.0, 1.0], [1.0, 1.0]]), real_sl(&[[1.0, 1.0], [1.0, 2.0]])]).unwrap()
}

fn padic_measure() -> WalkMeasure<PAdic> {
    let p = PAdic::new(3).unwrap();
    let atoms = vec![
        padic_sl(&p, vec![vec![qi(1), qi(3)], vec![qi(0), qi(1)]]),
        padic_sl(&p, vec![vec![q(1, 3), qi(0)], vec![qi(1), qi(3)]]),
        padic_sl(&p, vec![vec![qi(2), qi(1)], vec![qi(1), qi(1)]]),
    ];
    WalkMeasure::new(p, atoms, vec![q(1, 2), q(1, 3), q(1, 6)]).unwrap()
}

#[test]
fn thresholds_partition_the_u64_range() {
    let m = positive_measure();
    assert_eq!(m.thresholds, vec![1u128 << 63, 1u128 << 64]);
    let pm = padic_measure();
    assert_eq!(*pm.thresholds.last().unwrap(), 1u128 << 64);
    assert!(pm.thresholds.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn point_mass_always_returns_its_atom() {
    let m = WalkMeasure::point_mass(Real, real_sl(&[[2.0, 0.0], [0.0, 0.5]]));
    let mut rng = stream_rng(1, &[]);
    assert!((0..1000).all(|_| m.sample_index(&mut rng) == 0));
}

#[test]
fn sampling_consumes_one_draw() {
    let m = padic_measure();
    let mut a = stream_rng(5, &[3]);
    let mut b = stream_rng(5, &[3]);
    m.sample_index(&mut a);
    b.next_u64();
    assert_eq!(a.next_u64(), b.next_u64());
}

#[test]
fn measure_validation() {
    let g = real_sl(&[[2.0, 1.0], [1.0, 1.0]]);
    assert!(matches!(WalkMeasure::new(Real, vec![g.clone()], vec![q(1, 2)]), Err(Error::Invariant(_))));
    assert!(matches!(
        WalkMeasure::new(Real, vec![g.clone(), g.clone()], vec![qi(1), qi(0)]),
        Err(Error::Invariant(_))
    ));
    assert!(matches!(WalkMeasure::<Real>::new(Real, vec![], vec![]), Err(Error::Invariant(_))));
    let g3 = SlMatrix::identity(3);
    assert!(WalkMeasure::new(Real, vec![g, g3], vec![q(1, 2), q(1, 2)]).is_err());
}

#[test]
fn first_step_products_agree() {
    let m = positive_measure();
    let mut s = WalkState::new(2, stream_rng(9, &[0]));
    let i = s.advance(&m);
    let x = m.atoms()[i].matrix();
    for p in [&s.left, &s.right] {
        let got = p.to_matrix(&Real);
        for (a, b) in got.data().iter().zip(x.data()) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}

#[test]
fn point_mass_walk_is_a_power() {
    let p = PAdic::new(2).unwrap();
    let g = padic_sl(&p, vec![vec![qi(3), qi(4)], vec![qi(2), qi(3)]]);
    let m = WalkMeasure::point_mass(p, g.clone());
    let s = walk(&m, 12, stream_rng(0, &[]));
    let mut power = Matrix::identity(2);
    for _ in 0..12 {
        power = &power * g.matrix();
    }
    assert_eq!(s.left.to_matrix(&p), power);
    assert_eq!(s.right.to_matrix(&p), power);

    let d = real_sl(&[[2.0, 0.0], [0.0, 0.5]]);
    let s = walk(&WalkMeasure::point_mass(Real, d), 40, stream_rng(0, &[]));
    assert!((s.log_norm_left(&Real) - 40.0 * 2f64.ln()).abs() < 1e-12);
    assert!((s.log_ratio_left(&Real) + 80.0 * 2f64.ln()).abs() < 1e-12);
    assert!((s.log_ratio_right(&Real) + 80.0 * 2f64.ln()).abs() < 1e-12);
}

#[test]
fn walks_are_bit_reproducible() {
    let m = positive_measure();
    let a = walk(&m, 200, stream_rng(42, &[7]));
    let b = walk(&m, 200, stream_rng(42, &[7]));
    assert_eq!(a.left, b.left);
    assert_eq!(a.right_wedge, b.right_wedge);
    let c = walk(&m, 200, stream_rng(43, &[7]));
    assert_ne!(a.left, c.left);
}

#[test]
fn independent_walks_follow_their_measures() {
    let g = real_sl(&[[2.0, 1.0], [1.0, 1.0]]);
    let h = real_sl(&[[1.0, 0.0], [3.0, 1.0]]);
    let mg = WalkMeasure::point_mass(Real, g.clone());
    let mh = WalkMeasure::point_mass(Real, h.clone());
    let ws = run_independent_walks(&mg, &mh, 2, 5, 1).unwrap();
    let power = |x: &SlMatrix<f64>| (0..5).fold(Matrix::identity(2), |acc, _| &acc * x.matrix());
    for (w, x) in ws.iter().zip([&g, &h]) {
        let got = w.left.to_matrix(&Real);
        let want = power(x);
        for (a, b) in got.data().iter().zip(want.data()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    let m = positive_measure();
    let one = run_independent_walks(&m, &m, 1, 30, 11).unwrap();
    assert_eq!(one[0].left, walk(&m, 30, stream_rng(11, &[0])).left);
    let a = run_independent_walks(&m, &m, 8, 30, 11).unwrap();
    let b = run_independent_walks(&m, &m, 8, 30, 11).unwrap();
    assert!(a.iter().zip(&b).all(|(x, y)| x.left == y.left && x.right == y.right));
    assert!(run_independent_walks(&m, &m, 0, 30, 11).is_err());
}

#[test]
fn scaled_products_match_direct_products() {
    let m = padic_measure();
    let p = *m.field();
    for seed in 0..5 {
        let mut s = WalkState::new(2, stream_rng(seed, &[]));
        let mut left = Matrix::identity(2);
        let mut right = Matrix::identity(2);
        for _ in 0..30 {
            let i = s.advance(&m);
            left = &left * m.atoms()[i].matrix();
            right = m.atoms()[i].matrix() * &right;
        }
        assert_eq!(s.left.to_matrix(&p), left);
        assert_eq!(s.right.to_matrix(&p), right);
        assert_eq!(s.left_wedge.to_matrix(&p), exterior_square(&left));
    }

    let m = positive_measure();
    for seed in 0..5 {
        let mut s = WalkState::new(2, stream_rng(seed, &[]));
        let mut left = Matrix::identity(2);
        for _ in 0..30 {
            let i = s.advance(&m);
            left = &left * m.atoms()[i].matrix();
        }
        let got = s.left.to_matrix(&Real);
        let scale = left.data().iter().fold(0.0f64, |a, x| a.max(x.abs()));
        for (a, b) in got.data().iter().zip(left.data()) {
            assert!((a - b).abs() <= 1e-8 * scale);
        }
    }
}

#[test]
fn measure_file_round_trip_and_diagnostics() {
    let m = padic_measure();
    let file = m.to_file();
    let text = serde_json::to_string(&file).unwrap();
    let back = MeasureFile::parse(&text).unwrap();
    assert_eq!(back, file);
    let any = back.into_any().unwrap();
    assert!(matches!(any, AnyMeasure::PAdic(_)));
    assert_eq!(any.spec(), FieldSpec::NonArchimedean { prime: 3 });

    let bad_det = r#"{"field":{"kind":"archimedean"},"d":2,
        "atoms":[[["1","0"],["0","1"]],[["2","0"],["0","1"]]],"probs":["1/2","1/2"]}"#;
    let err = MeasureFile::parse(bad_det).unwrap().into_any().unwrap_err().to_string();
    assert!(err.contains("atoms[1]"), "{err}");

    let bad_probs = r#"{"field":{"kind":"archimedean"},"d":2,"atoms":[[["1","0"],["0","1"]]],"probs":["0.9"]}"#;
    let err = MeasureFile::parse(bad_probs).unwrap().into_any().unwrap_err().to_string();
    assert!(err.contains("sum"), "{err}");

    let bad_entry = r#"{"field":{"kind":"nonarchimedean","prime":5},"d":2,"atoms":[[["1","x"],["0","1"]]],"probs":["1"]}"#;
    let err = MeasureFile::parse(bad_entry).unwrap().into_any().unwrap_err().to_string();
    assert!(err.contains("atoms[0][0][1]"), "{err}");

    let malformed = "{\n  \"field\": {\"kind\": \"archimedean\"},\n  \"d\": 2,\n  \"atoms\": [[[\"1\"]]\n}";
    let err = MeasureFile::parse(malformed).unwrap_err().to_string();
    assert!(err.contains("line"), "{err}");

    let composite = r#"{"field":{"kind":"nonarchimedean","prime":6},"d":2,"atoms":[],"probs":[]}"#;
    assert!(MeasureFile::parse(composite).is_err());
}

#[test]
fn trajectory_dump_has_one_record_per_step() {
    let m = positive_measure();
    let recs = trajectory(&m, 5, stream_rng(3, &[]));
    assert_eq!(recs.iter().map(|r| r.n).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5]);
    let mut buf = Vec::new();
    write_jsonl(&recs, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 5);
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    for key in ["n", "log_norm_M", "log_norm_S", "a_ratio", "v", "h"] {
        assert!(first.get(key).is_some(), "{key}");
    }
    // symmetric atoms: S_n = M_nᵀ, so the norms agree
    for r in &recs {
        assert!((r.log_norm_m - r.log_norm_s).abs() < 1e-12);
    }
}

#[test]
fn proximal_search() {
    let m = positive_measure();
    assert_eq!(find_proximal_product(&m, 12, 8, &mut stream_rng(0, &[])).map(|w| w.len()), Some(1));
    let rot = real_sl(&[[0.0, -1.0], [1.0, 0.0]]);
    let m = WalkMeasure::point_mass(Real, rot);
    assert_eq!(find_proximal_product(&m, 12, 8, &mut stream_rng(0, &[])), None);
    let pm = padic_measure();
    assert!(find_proximal_product(&pm, 12, 8, &mut stream_rng(0, &[])).is_some());
}
