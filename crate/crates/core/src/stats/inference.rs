//! Confidence intervals, weighted rate fits and the two-sample
//! Kolmogorov–Smirnov test.

use serde::Serialize;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;
/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.575_829_303_548_901;

/// Wilson score interval for `successes / trials` at normal quantile `z`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = p + z2 / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let denom = 1.0 + z2 / n;
    let lo = if successes == 0 { 0.0 } else { ((centre - spread) / denom).max(0.0) };
    let hi = if successes == trials { 1.0 } else { ((centre + spread) / denom).min(1.0) };
    (lo, hi)
}

/// Sample mean and its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub count: usize,
}

impl MeanEstimate {
    /// Shifted two-pass formulas: identical samples give exactly that value
    /// and a standard error of exactly zero.
    pub fn of(xs: &[f64]) -> Self {
        let count = xs.len();
        if count == 0 {
            return MeanEstimate { mean: f64::NAN, std_err: f64::NAN, count };
        }
        let shift = xs[0];
        let n = count as f64;
        let mean = shift + xs.iter().map(|x| x - shift).sum::<f64>() / n;
        let std_err = if count < 2 {
            f64::NAN
        } else {
            let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
            (ss / (n - 1.0) / n).sqrt()
        };
        MeanEstimate { mean, std_err, count }
    }

    pub fn half_width(&self, z: f64) -> f64 {
        z * self.std_err
    }
}

/// Weighted least-squares line `y ≈ intercept + slope·x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Weighted coefficient of determination.
    pub r_squared: f64,
    pub points: usize,
}

/// Needs at least two distinct abscissae and positive finite weights.
pub fn weighted_line_fit(xs: &[f64], ys: &[f64], ws: &[f64]) -> Option<LineFit> {
    let pts: Vec<(f64, f64, f64)> = xs
        .iter()
        .zip(ys)
        .zip(ws)
        .map(|((&x, &y), &w)| (x, y, w))
        .filter(|&(x, y, w)| x.is_finite() && y.is_finite() && w.is_finite() && w > 0.0)
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let xbar = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let ybar = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - xbar) * (p.0 - xbar)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - xbar) * (p.1 - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_res: f64 = pts.iter().map(|p| p.2 * (p.1 - intercept - slope * p.0).powi(2)).sum();
    let ss_tot: f64 = pts.iter().map(|p| p.2 * (p.1 - ybar).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Some(LineFit { slope, intercept, r_squared, points: pts.len() })
}

/// Outcome of a two-sample Kolmogorov–Smirnov test at level 1%.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KsTest {
    pub statistic: f64,
    pub critical_value: f64,
    pub reject: bool,
}

/// `c(α)` for `α = 0.01`: `√(−ln(α/2)/2)`.
pub fn ks_coefficient(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

/// `D = sup |F_a − F_b|` against the asymptotic 1% critical value
/// `c(0.01)·√((n+m)/(nm))`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsTest {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = if a[i].total_cmp(&b[j]).is_le() { a[i] } else { b[j] };
        while i < n && a[i] == x {
            i += 1;
        }
        while j < m && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let (nf, mf) = (n as f64, m as f64);
    let critical_value = ks_coefficient(0.01) * ((nf + mf) / (nf * mf)).sqrt();
    KsTest { statistic: d, critical_value, reject: d > critical_value }
}
