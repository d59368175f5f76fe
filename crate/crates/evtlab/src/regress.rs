//! Ordinary least-squares log-linear fits used to recover scaling exponents,
//! expansion rates, and tail power laws from sequences of fitted GEV
//! parameters or empirical survival functions.

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct LinFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
}

impl LinFit {
    /// Flat JSON envelope `{m, b, r2, n}`.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "m": self.slope,
            "b": self.intercept,
            "r2": self.r_squared,
            "n": self.residuals.len(),
        })
    }
}

/// Least-squares line through `(xs, ys)`.
pub fn ols(xs: &[f64], ys: &[f64]) -> Result<LinFit> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidInput(format!(
            "x and y lengths differ: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData("need at least 2 points for a line".into()));
    }
    if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite regression input".into()));
    }
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    if sxx < 1e-30 {
        return Err(Error::DegenerateInput("regressor is constant".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let residuals: Vec<f64> =
        xs.iter().zip(ys).map(|(x, y)| y - (intercept + slope * x)).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - ybar) * (y - ybar)).sum();
    let r_squared = if ss_tot < 1e-30 { 1.0 } else { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) };
    Ok(LinFit { slope, intercept, r_squared, residuals })
}

fn check_log_domain(label: &str, vs: &[f64]) -> Result<()> {
    if vs.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput(format!("{label} must be positive for a log fit")));
    }
    Ok(())
}

/// Power-law fit of k-average locations: regress `log mu2(k)` on `log k`.
/// The slope estimates the exponent of `g(k, T) ~ k^m` and the intercept
/// estimates `log mu1`.
pub fn estimate_g_exponent_average(ks: &[usize], mu2s: &[f64]) -> Result<LinFit> {
    if ks.contains(&0) {
        return Err(Error::InvalidInput("window lengths must be >= 1".into()));
    }
    check_log_domain("locations", mu2s)?;
    let xs: Vec<f64> = ks.iter().map(|&k| (k as f64).ln()).collect();
    let ys: Vec<f64> = mu2s.iter().map(|m| m.ln()).collect();
    ols(&xs, &ys)
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaEstimate {
    /// Expansion rate recovered from the slope: `exp(-m / xi)`.
    pub lambda: f64,
    /// Implied extremal index `1 - 1/lambda`.
    pub theta: f64,
    pub fit: LinFit,
}

/// Exponential-decay fit of k-exceedance locations: regress `log mu2(k)` on
/// `k - 1`. Under `mu2(k) = lambda^(-(k-1) xi) mu1` the slope is
/// `-xi log lambda`, so `lambda = exp(-m/xi)` and `theta = 1 - 1/lambda`;
/// the intercept estimates `log mu1`.
pub fn estimate_lambda_exceedance(ks: &[usize], mu2s: &[f64], xi: f64) -> Result<LambdaEstimate> {
    if xi == 0.0 || !xi.is_finite() {
        return Err(Error::InvalidInput("shape xi must be nonzero".into()));
    }
    if ks.contains(&0) {
        return Err(Error::InvalidInput("window lengths must be >= 1".into()));
    }
    check_log_domain("locations", mu2s)?;
    let xs: Vec<f64> = ks.iter().map(|&k| (k - 1) as f64).collect();
    let ys: Vec<f64> = mu2s.iter().map(|m| m.ln()).collect();
    let fit = ols(&xs, &ys)?;
    let lambda = (-fit.slope / xi).exp();
    Ok(LambdaEstimate { lambda, theta: 1.0 - 1.0 / lambda, fit })
}

#[derive(Debug, Clone, Serialize)]
pub struct LogGFit {
    pub fit: LinFit,
}

impl LogGFit {
    /// Predicted factor `g(k) = exp(b + m (k - 1))`.
    pub fn g_hat(&self, k: usize) -> f64 {
        (self.fit.intercept + self.fit.slope * (k - 1) as f64).exp()
    }
}

/// Recover `log g(k, T) = log(sigma2(k)/sigma1) - xi log(theta2(k)/theta1)`
/// from fitted scales and extremal indices, and fit it linearly against
/// `k - 1`.
pub fn estimate_log_g(
    ks: &[usize],
    sigma2s: &[f64],
    theta2s: &[f64],
    xi: f64,
    sigma1: f64,
    theta1: f64,
) -> Result<LogGFit> {
    if ks.len() != sigma2s.len() || ks.len() != theta2s.len() {
        return Err(Error::InvalidInput("k, sigma2 and theta2 sequences must align".into()));
    }
    if ks.contains(&0) {
        return Err(Error::InvalidInput("window lengths must be >= 1".into()));
    }
    check_log_domain("scales", sigma2s)?;
    check_log_domain("extremal indices", theta2s)?;
    check_log_domain("base scale", &[sigma1])?;
    check_log_domain("base extremal index", &[theta1])?;
    let xs: Vec<f64> = ks.iter().map(|&k| (k - 1) as f64).collect();
    let ys: Vec<f64> = sigma2s
        .iter()
        .zip(theta2s)
        .map(|(&s2, &t2)| (s2 / sigma1).ln() - xi * (t2 / theta1).ln())
        .collect();
    Ok(LogGFit { fit: ols(&xs, &ys)? })
}

/// Log-log fit of the empirical survival function above the
/// `quantile_floor` quantile: regress `log P(X > u)` on `log u` at the
/// observed order statistics. For a Fréchet tail the slope estimates
/// `-1/xi`. At least 50 exceedances above the floor are required.
pub fn fit_tail_power_law(values: &[f64], quantile_floor: f64) -> Result<LinFit> {
    if !(0.0..1.0).contains(&quantile_floor) {
        return Err(Error::InvalidInput(format!(
            "quantile floor must lie in [0,1), got {quantile_floor}"
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite sample".into()));
    }
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    // Tail sample: everything strictly above the floor quantile.
    let m = ((1.0 - quantile_floor) * n as f64).floor() as usize;
    if m < 50 {
        return Err(Error::InsufficientData(format!(
            "tail fit needs at least 50 exceedances above the floor, found {m}"
        )));
    }
    let tail = &sorted[..m];
    if tail.iter().any(|&u| u <= 0.0) {
        return Err(Error::InvalidInput("tail thresholds must be positive for a log fit".into()));
    }
    if (tail[0] - tail[m - 1]).abs() < 1e-30 {
        return Err(Error::InsufficientData("tail is degenerate (constant values)".into()));
    }
    // r-th largest value has empirical survival r/n.
    let xs: Vec<f64> = tail.iter().map(|u| u.ln()).collect();
    let ys: Vec<f64> = (1..=m).map(|r| (r as f64 / n as f64).ln()).collect();
    ols(&xs, &ys)
}
