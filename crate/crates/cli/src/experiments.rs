//! The Monte Carlo experiments behind the config-driven subcommands.

use freewalk::projlin::Covector;
use freewalk::scalar::{LocalField, Scalar};
use freewalk::stats::{
    default_horizon, direction_convergence, format_float, gap_test, independence_test, invariant_measure_probe,
    kak_convergence, lyapunov_estimate, moment_ratio, pingpong_decay, random_hyperplanes, tuple_decay,
    FrameGeometry, HolderTestFunction, OUTPUT_DIGITS,
};
use freewalk::walk::{find_proximal_product, stream_rng, AnyMeasure, WalkMeasure};
use serde_json::{json, Value};

use crate::config::{ExperimentKind, Resolved, TestFunctionSpec};
use crate::error::{CliError, CliResult};

/// Stream tags for randomness drawn by the front end itself, disjoint from
/// the estimators' tags.
const PROXIMAL_SEARCH_TAG: u64 = 100;
const HYPERPLANE_TAG: u64 = 101;

/// Slack, in Wilson half-widths, allowed when reporting non-monotone grids.
pub const MONOTONE_SLACK: f64 = 2.0;

/// Files produced by an experiment, in write order.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<(String, String)>,
    pub summary: Vec<String>,
}

fn f(x: f64) -> String {
    format_float(x, OUTPUT_DIGITS)
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("results serialize")
}

/// Heuristic check of the contraction hypothesis: a proximal element among
/// short random products of the atoms.
fn proximality_warning<F: LocalField>(m: &WalkMeasure<F>, seed: u64) -> Option<String> {
    let mut rng = stream_rng(seed, &[PROXIMAL_SEARCH_TAG]);
    match find_proximal_product(m, 12, 16, &mut rng) {
        Some(_) => None,
        None => Some(
            "no proximal element among sampled products of length <= 12; the measure may not be contracting and \
             the limit theorems need not apply"
                .into(),
        ),
    }
}

fn parse_vector<F: LocalField>(field: &F, coords: &[String], d: usize, what: &str) -> CliResult<Vec<F::Elem>> {
    if coords.len() != d {
        return Err(CliError::Config(format!("{what} has {} coordinates, expected {d}", coords.len())));
    }
    coords
        .iter()
        .enumerate()
        .map(|(i, s)| {
            Scalar::parse(s, &field.spec())
                .and_then(|x| field.from_scalar(&x))
                .map_err(|e| CliError::input(format!("{what}[{i}]"), e))
        })
        .collect()
}

fn resolve_test_function(spec: &Option<TestFunctionSpec>, default: &str, d: usize, eps: f64) -> CliResult<HolderTestFunction> {
    match spec {
        None => Ok(HolderTestFunction::by_name(default, d, eps)?),
        Some(TestFunctionSpec::Named(name)) => Ok(HolderTestFunction::by_name(name, d, eps)?),
        Some(TestFunctionSpec::Custom(h)) => Ok(h.clone()),
    }
}

fn sidecar(res: &Resolved, result: Value, warnings: &[String]) -> Value {
    json!({
        "schema": "freewalk/result/v1",
        "experiment": res.kind.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "rng": freewalk::walk::RNG_ALGORITHM,
        "config": res.echo(),
        "result": result,
        "warnings": warnings,
    })
}

pub fn run(res: &Resolved) -> CliResult<(Artifacts, Value)> {
    let m2 = res.measure2.as_ref().map(|m| &m.measure);
    match (&res.measure.measure, m2) {
        (AnyMeasure::Real(m), None) => run_typed(res, m, m),
        (AnyMeasure::Real(m), Some(AnyMeasure::Real(m2))) => run_typed(res, m, m2),
        (AnyMeasure::PAdic(m), None) => run_typed(res, m, m),
        (AnyMeasure::PAdic(m), Some(AnyMeasure::PAdic(m2))) => run_typed(res, m, m2),
        _ => Err(CliError::Config("measure and measure2 must share a field".into())),
    }
}

fn run_typed<F: FrameGeometry>(res: &Resolved, m: &WalkMeasure<F>, m2: &WalkMeasure<F>) -> CliResult<(Artifacts, Value)> {
    let warnings: Vec<String> = proximality_warning(m, res.seed).into_iter().collect();
    let (artifacts, result) = match res.kind {
        ExperimentKind::Lyapunov => lyapunov(res, m)?,
        ExperimentKind::Decay => decay(res, m, m2)?,
        ExperimentKind::Direction => direction(res, m)?,
        ExperimentKind::Independence => independence(res, m)?,
        ExperimentKind::Invariant => invariant(res, m)?,
        ExperimentKind::Tuple => tuple(res, m)?,
        k @ (ExperimentKind::Kak | ExperimentKind::Certify) => {
            return Err(CliError::Config(format!("{} takes a matrix file, not an experiment config", k.name())))
        }
    };
    Ok((artifacts, sidecar(res, result, &warnings)))
}

fn lyapunov<F: FrameGeometry>(res: &Resolved, m: &WalkMeasure<F>) -> CliResult<(Artifacts, Value)> {
    let cfg = &res.config;
    let n = cfg.require(&cfg.n, "n")?;
    let est = lyapunov_estimate(m, n, cfg.reps, res.seed)?;
    let gap = gap_test(&est, m.dim());
    let moment = cfg.moment_eps.map(|eps| moment_ratio(m, eps, n, cfg.reps, res.seed)).transpose()?;
    let mut csv = String::from("quantity,estimate,ci_lo,ci_hi,std_err,n,reps\n");
    let hw = &est.ci_half_widths;
    let se = &est.std_errs;
    for (name, x, h, s) in [
        ("lambda1_hat", est.lambda1_hat, hw.lambda1, se.lambda1),
        ("lambda12_hat", est.lambda12_hat, hw.lambda12, se.lambda12),
        ("gap_hat", est.gap_hat, hw.gap, se.gap),
        ("lambda1_from_vector", est.lambda1_from_vector, hw.lambda1_from_vector, se.lambda1_from_vector),
    ] {
        csv.push_str(&format!("{name},{},{},{},{},{n},{}\n", f(x), f(x - h), f(x + h), f(s), cfg.reps));
    }
    let summary = vec![
        format!("lambda1_hat = {} ± {}", f(est.lambda1_hat), f(hw.lambda1)),
        format!("gap_hat = {} ± {} ({})", f(est.gap_hat), f(hw.gap), if gap.positive { "positive" } else { "not positive" }),
    ];
    let result = json!({ "estimate": to_value(&est), "gap_test": to_value(&gap), "moment_ratio": to_value(&moment) });
    Ok((Artifacts { files: vec![("lyapunov.csv".into(), csv)], summary }, result))
}

fn decay<F: FrameGeometry>(res: &Resolved, m: &WalkMeasure<F>, m2: &WalkMeasure<F>) -> CliResult<(Artifacts, Value)> {
    let cfg = &res.config;
    let grid = cfg.require(&cfg.grid, "grid")?;
    let r_base = cfg.require(&cfg.r_base, "r_base")?;
    let eps_base = cfg.require(&cfg.eps_base, "eps_base")?;
    let d = pingpong_decay(m, m2, r_base, eps_base, &grid, cfg.reps, res.seed)?;
    let violations = d.estimate.monotone_violations(MONOTONE_SLACK);
    let summary = vec![match &d.estimate.fit {
        Some(fit) => format!("fitted rho = {} (R² = {})", f(fit.rho), f(fit.r_squared)),
        None => "no rate fit (fewer than two usable grid points)".into(),
    }];
    let result = json!({
        "estimate": to_value(&d.estimate),
        "breakdown": to_value(&d.breakdown),
        "monotone_slack": MONOTONE_SLACK,
        "monotone_violations": violations,
    });
    Ok((Artifacts { files: vec![("decay.csv".into(), d.estimate.to_csv())], summary }, result))
}

fn direction<F: FrameGeometry>(res: &Resolved, m: &WalkMeasure<F>) -> CliResult<(Artifacts, Value)> {
    let cfg = &res.config;
    let grid = cfg.require(&cfg.grid, "grid")?;
    let field = m.field();
    let x = match &cfg.x {
        Some(coords) => parse_vector(field, coords, m.dim(), "x")?,
        None => (0..m.dim()).map(|_| field.from_i64(1)).collect(),
    };
    let horizon = cfg.horizon.unwrap_or_else(|| default_horizon(&grid));
    let dir = direction_convergence(m, &x, &grid, Some(horizon), cfg.reps, res.seed)?;
    let kak = kak_convergence(m, &grid, Some(horizon), cfg.reps, res.seed)?;
    let rho = |e: &freewalk::stats::DecayEstimate| e.fit.as_ref().map_or("n/a".into(), |fit| f(fit.rho));
    let summary = vec![format!(
        "fitted rho: direction {}, k-frame {}, u-frame {}",
        rho(&dir),
        rho(&kak.k_curve),
        rho(&kak.u_curve)
    )];
    let result = json!({
        "horizon": horizon,
        "direction": to_value(&dir),
        "k_frame": to_value(&kak.k_curve),
        "u_frame": to_value(&kak.u_curve),
    });
    let files = vec![
        ("direction.csv".into(), dir.to_csv()),
        ("kak_k.csv".into(), kak.k_curve.to_csv()),
        ("kak_u.csv".into(), kak.u_curve.to_csv()),
    ];
    Ok((Artifacts { files, summary }, result))
}

fn independence<F: FrameGeometry>(res: &Resolved, m: &WalkMeasure<F>) -> CliResult<(Artifacts, Value)> {
    let cfg = &res.config;
    let grid = match (&cfg.grid, cfg.n) {
        (Some(g), _) => g.clone(),
        (None, Some(n)) => vec![n],
        (None, None) => return Err(CliError::Config("missing required field \"grid\" (or \"n\")".into())),
    };
    let eps = cfg.holder_eps.unwrap_or(1.0);
    let phi1 = resolve_test_function(&cfg.phi1, "dist_e1", m.dim(), eps)?;
    let phi2 = resolve_test_function(&cfg.phi2, "ker_e1", m.dim(), eps)?;
    let spec = m.field().spec();
    let mut csv = String::from("n,discrepancy,std_err,reps\n");
    let mut points = Vec::new();
    for &n in &grid {
        let r = independence_test(m, &phi1, &phi2, n, cfg.reps, res.seed)?;
        csv.push_str(&format!("{n},{},{},{}\n", f(r.discrepancy), f(r.std_err), r.reps));
        points.push(r);
    }
    let summary = points.iter().map(|p| format!("n = {}: discrepancy {} (SE {})", p.n, f(p.discrepancy), f(p.std_err))).collect();
    let result = json!({
        "phi1": to_value(&phi1),
        "phi2": to_value(&phi2),
        "holder_norm_bounds": [phi1.holder_norm_bound(&spec), phi2.holder_norm_bound(&spec)],
        "points": to_value(&points),
    });
    Ok((Artifacts { files: vec![("independence.csv".into(), csv)], summary }, result))
}

fn invariant<F: FrameGeometry>(res: &Resolved, m: &WalkMeasure<F>) -> CliResult<(Artifacts, Value)> {
    let cfg = &res.config;
    let n = cfg.require(&cfg.n, "n")?;
    let t = cfg.require(&cfg.t, "t")?;
    let field = m.field();
    let d = m.dim();
    let mut hyperplanes = Vec::new();
    for (i, coords) in cfg.hyperplanes.iter().flatten().enumerate() {
        hyperplanes.push(Covector(parse_vector(field, coords, d, &format!("hyperplanes[{i}]"))?));
    }
    if let Some(count) = cfg.random_hyperplanes {
        if !field.spec().is_archimedean() {
            return Err(CliError::Config("random_hyperplanes needs an archimedean measure".into()));
        }
        for h in random_hyperplanes(d, count, &mut stream_rng(res.seed, &[HYPERPLANE_TAG])) {
            let elems = h.0.iter().map(|x| field.from_scalar(&Scalar::Real(*x))).collect::<freewalk::Result<Vec<_>>>()?;
            hyperplanes.push(Covector(elems));
        }
    }
    if hyperplanes.is_empty() {
        return Err(CliError::Config("give \"hyperplanes\" and/or \"random_hyperplanes\"".into()));
    }
    let probe = invariant_measure_probe(m, n, cfg.reps, &hyperplanes, t, res.seed)?;
    let mut csv = String::from("hyperplane,fraction,ci_lo,ci_hi,reps\n");
    for (i, tail) in probe.tails.iter().enumerate() {
        csv.push_str(&format!("{i},{},{},{},{}\n", f(tail.fraction), f(tail.ci_lo), f(tail.ci_hi), probe.reps));
    }
    let summary = vec![format!("sup fraction = {} at threshold {}", f(probe.sup_fraction), f(probe.threshold))];
    Ok((Artifacts { files: vec![("invariant.csv".into(), csv)], summary }, to_value(&probe)))
}

fn tuple<F: FrameGeometry>(res: &Resolved, m: &WalkMeasure<F>) -> CliResult<(Artifacts, Value)> {
    let cfg = &res.config;
    let l = cfg.require(&cfg.l, "l")?;
    let n = cfg.require(&cfg.n, "n")?;
    let power = |base: Option<f64>| base.map(|b| b.powi(n as i32));
    let r = cfg.r.or(power(cfg.r_base)).ok_or_else(|| CliError::Config("give \"r\" or \"r_base\"".into()))?;
    let eps = cfg.eps.or(power(cfg.eps_base)).ok_or_else(|| CliError::Config("give \"eps\" or \"eps_base\"".into()))?;
    // pair rate: given directly, or fitted from a pair experiment on the grid
    let pair = match (cfg.rho_hat, &cfg.grid, cfg.r_base, cfg.eps_base) {
        (None, Some(grid), Some(rb), Some(eb)) => Some(pingpong_decay(m, m, rb, eb, grid, cfg.reps, res.seed)?),
        _ => None,
    };
    let rho_hat = cfg.rho_hat.or(pair.as_ref().and_then(|p| p.estimate.fit.as_ref().map(|fit| fit.rho)));
    let t = tuple_decay(m, l, r, eps, n, cfg.reps, res.seed, rho_hat)?;
    let bound = t.union_bound.map_or("".to_string(), f);
    let csv = format!(
        "l,n,r,eps,p_hat,ci_lo,ci_hi,reps,union_bound\n{l},{n},{},{},{},{},{},{},{bound}\n",
        f(r),
        f(eps),
        f(t.p_hat),
        f(t.ci_lo),
        f(t.ci_hi),
        t.reps
    );
    let summary = vec![format!(
        "failure fraction {} ± {} (SE), union bound {}",
        f(t.p_hat),
        f(t.std_err),
        if bound.is_empty() { "n/a" } else { &bound }
    )];
    let result = json!({
        "tuple": to_value(&t),
        "pair_estimate": pair.as_ref().map(|p| to_value(&p.estimate)),
    });
    Ok((Artifacts { files: vec![("tuple.csv".into(), csv)], summary }, result))
}
