//! Generalized extreme value (GEV) distribution: CDF, return levels, the
//! power/rescale parameter transforms, and maximum-likelihood fitting of
//! block maxima.
//!
//! Parameterization: location `mu`, scale `sigma > 0`, shape `xi`, with CDF
//! `G(y) = exp(-[1 + xi (y - mu) / sigma]^(-1/xi))` on the support
//! `{y : 1 + xi (y - mu) / sigma > 0}`, and the Gumbel form
//! `exp(-exp(-(y - mu) / sigma))` at `xi = 0`. Shape `xi > 0` is the Fréchet
//! (fat-tailed) family, `xi < 0` the Weibull (bounded) family.

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::simplex::{self, SimplexOptions};

/// Below this |xi| the Gumbel branch is used to avoid catastrophic
/// cancellation in `[1 + xi z]^(-1/xi)`.
pub const GUMBEL_SWITCH: f64 = 1e-8;

/// Fits with `xi <= -0.5` lack the usual MLE regularity (asymptotic
/// normality) and are flagged.
pub const SHAPE_WARNING_THRESHOLD: f64 = -0.5;

/// Minimum sample size accepted by [`fit_gev_mle`].
pub const MIN_FIT_SAMPLES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevParams {
    pub mu: f64,
    pub sigma: f64,
    pub xi: f64,
}

impl GevParams {
    pub fn new(mu: f64, sigma: f64, xi: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() || !mu.is_finite() || !xi.is_finite() {
            return Err(Error::InvalidInput(format!(
                "GEV parameters require finite mu, xi and sigma > 0 (got mu={mu}, sigma={sigma}, xi={xi})"
            )));
        }
        Ok(Self { mu, sigma, xi })
    }

    /// True if `y` lies in the open support `1 + xi (y - mu) / sigma > 0`.
    pub fn in_support(&self, y: f64) -> bool {
        if self.xi.abs() < GUMBEL_SWITCH {
            return true;
        }
        1.0 + self.xi * (y - self.mu) / self.sigma > 0.0
    }
}

/// GEV CDF, clamped to 0/1 outside the support.
pub fn gev_cdf(p: &GevParams, y: f64) -> f64 {
    let z = (y - p.mu) / p.sigma;
    if p.xi.abs() < GUMBEL_SWITCH {
        (-(-z).exp()).exp()
    } else {
        let t = 1.0 + p.xi * z;
        if t <= 0.0 {
            // Below the lower endpoint (xi > 0) the mass is 0; above the
            // upper endpoint (xi < 0) it is 1.
            if p.xi > 0.0 {
                0.0
            } else {
                1.0
            }
        } else {
            (-t.powf(-1.0 / p.xi)).exp()
        }
    }
}

/// Return level `z_p` with `G(z_p) = 1 - prob`: the level exceeded on average
/// once every `1/prob` blocks.
pub fn return_level(p: &GevParams, prob: f64) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::InvalidInput(format!("return probability must be in (0,1), got {prob}")));
    }
    let w = -(1.0 - prob).ln(); // -log(1 - p)
    if p.xi.abs() < GUMBEL_SWITCH {
        Ok(p.mu - p.sigma * w.ln())
    } else {
        Ok(p.mu - p.sigma / p.xi * (1.0 - w.powf(-p.xi)))
    }
}

/// Parameters of `G^theta` for `theta` in (0, 1]: same shape,
/// `mu' = mu - sigma/xi (1 - theta^xi)`, `sigma' = sigma theta^xi`
/// (`mu' = mu + sigma ln theta`, `sigma' = sigma` at `xi = 0`).
pub fn power_transform(p: &GevParams, theta: f64) -> Result<GevParams> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidInput(format!("power exponent must be in (0,1], got {theta}")));
    }
    if p.xi.abs() < GUMBEL_SWITCH {
        GevParams::new(p.mu + p.sigma * theta.ln(), p.sigma, p.xi)
    } else {
        let tp = theta.powf(p.xi);
        GevParams::new(p.mu - p.sigma / p.xi * (1.0 - tp), p.sigma * tp, p.xi)
    }
}

/// Parameters of `t -> G(gamma t)` for `gamma > 0`: same shape,
/// `mu' = mu / gamma`, `sigma' = sigma / gamma`.
pub fn rescale_transform(p: &GevParams, gamma: f64) -> Result<GevParams> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidInput(format!("rescale factor must be > 0, got {gamma}")));
    }
    GevParams::new(p.mu / gamma, p.sigma / gamma, p.xi)
}

/// Diagnostic `xi mu / sigma`; approximately 1 for block maxima of a pure
/// Fréchet tail normalized with zero centering sequence.
pub fn frechet_consistency(p: &GevParams) -> f64 {
    p.xi * p.mu / p.sigma
}

/// Negative log-likelihood of `xs` under `p`; `+inf` when any sample is
/// outside the support (or `sigma <= 0`).
pub fn gev_nll(p: &GevParams, xs: &[f64]) -> f64 {
    if !(p.sigma > 0.0) {
        return f64::INFINITY;
    }
    let n = xs.len() as f64;
    let mut nll = n * p.sigma.ln();
    if p.xi.abs() < GUMBEL_SWITCH {
        for &x in xs {
            let z = (x - p.mu) / p.sigma;
            nll += z + (-z).exp();
        }
    } else {
        let inv_xi = 1.0 / p.xi;
        for &x in xs {
            let t = 1.0 + p.xi * (x - p.mu) / p.sigma;
            if t <= 0.0 {
                return f64::INFINITY;
            }
            nll += (1.0 + inv_xi) * t.ln() + t.powf(-inv_xi);
        }
    }
    nll
}

/// One inverse-CDF draw from `p`.
pub fn sample_gev<R: Rng + ?Sized>(p: &GevParams, rng: &mut R) -> f64 {
    // u in (0,1); G(z) = u corresponds to return probability 1 - u.
    let u: f64 = rng.random::<f64>().max(1e-300);
    return_level(p, 1.0 - u).expect("probability is interior by construction")
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub params: GevParams,
    pub neg_log_likelihood: f64,
    pub converged: bool,
    pub n_samples: usize,
    /// Standard errors of (mu, sigma, xi) from the inverse observed
    /// information, when the numerical Hessian is positive definite.
    pub stderrs: Option<[f64; 3]>,
    /// Set when the fitted shape is <= -0.5 (see [`SHAPE_WARNING_THRESHOLD`]).
    pub shape_warning: bool,
}

impl FitResult {
    /// Flat JSON envelope with keys `mu, sigma, xi, nll, converged, n`.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "mu": self.params.mu,
            "sigma": self.params.sigma,
            "xi": self.params.xi,
            "nll": self.neg_log_likelihood,
            "converged": self.converged,
            "n": self.n_samples,
        })
    }
}

/// Maximum-likelihood GEV fit of block maxima.
///
/// Starts from Gumbel moment estimates (`sigma0 = sd sqrt(6)/pi`,
/// `mu0 = mean - 0.5772 sigma0`, `xi0 = 0.1`), minimizes the negative
/// log-likelihood with a Nelder-Mead simplex over `(mu, ln sigma, xi)`, and
/// restarts once from a perturbed initial point if the first pass does not
/// converge.
pub fn fit_gev_mle(maxima: &[f64]) -> Result<FitResult> {
    if maxima.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "GEV fit needs at least {MIN_FIT_SAMPLES} block maxima, got {}",
            maxima.len()
        )));
    }
    if maxima.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("non-finite block maximum".into()));
    }
    let n = maxima.len() as f64;
    let mean = maxima.iter().sum::<f64>() / n;
    let var = maxima.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if var == 0.0 {
        return Err(Error::DegenerateInput("all block maxima are equal".into()));
    }

    let sigma0 = var.sqrt() * 6.0_f64.sqrt() / std::f64::consts::PI;
    let mu0 = mean - 0.5772 * sigma0;
    let init = [mu0, sigma0.ln(), 0.1];

    let objective = |p: &[f64]| {
        let params = GevParams { mu: p[0], sigma: p[1].exp(), xi: p[2] };
        gev_nll(&params, maxima)
    };

    let opts = SimplexOptions::default();
    let mut best = simplex::minimize(objective, &init, &opts);
    if !best.converged {
        // One restart: fresh simplex around the best point found so far,
        // with the shape nudged off its current value.
        let restart = [best.x[0], best.x[1], best.x[2] + 0.05];
        let second = simplex::minimize(objective, &restart, &opts);
        if second.converged || second.fmin < best.fmin {
            best = second;
        }
    }

    if !best.fmin.is_finite() {
        return Err(Error::FitFailed("likelihood not finite at the optimum".into()));
    }
    let params = GevParams::new(best.x[0], best.x[1].exp(), best.x[2])?;
    let stderrs = observed_information_stderrs(&params, maxima);
    Ok(FitResult {
        params,
        neg_log_likelihood: best.fmin,
        converged: best.converged,
        n_samples: maxima.len(),
        stderrs,
        shape_warning: params.xi <= SHAPE_WARNING_THRESHOLD,
    })
}

/// Central-difference Hessian of the NLL at `p`, inverted for standard
/// errors. Returns `None` near the support boundary or when the Hessian is
/// not positive definite.
fn observed_information_stderrs(p: &GevParams, xs: &[f64]) -> Option<[f64; 3]> {
    let theta = [p.mu, p.sigma, p.xi];
    let f = |t: &[f64; 3]| -> f64 {
        if t[1] <= 0.0 {
            return f64::INFINITY;
        }
        gev_nll(&GevParams { mu: t[0], sigma: t[1], xi: t[2] }, xs)
    };
    let h: Vec<f64> = theta.iter().map(|v| 1e-4 * v.abs().max(1e-2)).collect();
    let mut hess = [[0.0_f64; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let mut tpp = theta;
            let mut tpm = theta;
            let mut tmp = theta;
            let mut tmm = theta;
            tpp[i] += h[i];
            tpp[j] += h[j];
            tpm[i] += h[i];
            tpm[j] -= h[j];
            tmp[i] -= h[i];
            tmp[j] += h[j];
            tmm[i] -= h[i];
            tmm[j] -= h[j];
            let v = (f(&tpp) - f(&tpm) - f(&tmp) + f(&tmm)) / (4.0 * h[i] * h[j]);
            if !v.is_finite() {
                return None;
            }
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    let inv = invert3(&hess)?;
    let mut out = [0.0; 3];
    for (i, o) in out.iter_mut().enumerate() {
        if inv[i][i] <= 0.0 {
            return None;
        }
        *o = inv[i][i].sqrt();
    }
    Some(out)
}

fn invert3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det.abs() < 1e-300 || !det.is_finite() {
        return None;
    }
    let adj = [
        [
            m[1][1] * m[2][2] - m[1][2] * m[2][1],
            m[0][2] * m[2][1] - m[0][1] * m[2][2],
            m[0][1] * m[1][2] - m[0][2] * m[1][1],
        ],
        [
            m[1][2] * m[2][0] - m[1][0] * m[2][2],
            m[0][0] * m[2][2] - m[0][2] * m[2][0],
            m[0][2] * m[1][0] - m[0][0] * m[1][2],
        ],
        [
            m[1][0] * m[2][1] - m[1][1] * m[2][0],
            m[0][1] * m[2][0] - m[0][0] * m[2][1],
            m[0][0] * m[1][1] - m[0][1] * m[1][0],
        ],
    ];
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = adj[i][j] / det;
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn cdf_at_location_gumbel() {
        let p = GevParams::new(0.0, 1.0, 0.0).unwrap();
        assert!(close(gev_cdf(&p, 0.0), (-1.0_f64).exp(), 1e-12));
    }

    #[test]
    fn cdf_frechet_hand_value() {
        // xi=1, mu=sigma=1, y=2: t = 1 + (2-1) = 2, G = exp(-1/2).
        let p = GevParams::new(1.0, 1.0, 1.0).unwrap();
        assert!(close(gev_cdf(&p, 2.0), (-0.5_f64).exp(), 1e-12));
    }

    #[test]
    fn cdf_clamps_outside_support() {
        // xi = -0.5: support extends up to mu + sigma/|xi| = mu + 2 sigma.
        let p = GevParams::new(0.0, 1.0, -0.5).unwrap();
        assert_eq!(gev_cdf(&p, 2.5), 1.0);
        assert!(gev_cdf(&p, -50.0) < 1e-12);
        // xi = +0.5: support starts at mu - sigma/xi = -2.
        let q = GevParams::new(0.0, 1.0, 0.5).unwrap();
        assert_eq!(gev_cdf(&q, -2.5), 0.0);
    }

    #[test]
    fn cdf_nondecreasing() {
        let p = GevParams::new(1.0, 2.0, 0.4).unwrap();
        let mut last = -1.0;
        let mut y = -10.0;
        while y < 50.0 {
            let c = gev_cdf(&p, y);
            assert!(c >= last);
            last = c;
            y += 0.25;
        }
    }

    #[test]
    fn return_level_hand_values() {
        let gumbel = GevParams::new(0.0, 1.0, 0.0).unwrap();
        let p = 1.0 - (-1.0_f64).exp();
        assert!(close(return_level(&gumbel, p).unwrap(), 0.0, 1e-12));

        let frechet = GevParams::new(1.0, 1.0, 1.0).unwrap();
        assert!(close(return_level(&frechet, p).unwrap(), 1.0, 1e-12));

        assert!(return_level(&gumbel, 0.0).is_err());
        assert!(return_level(&gumbel, 1.0).is_err());
    }

    #[test]
    fn return_level_round_trip() {
        let mut rng = stream_rng(11, 0);
        for _ in 0..1000 {
            let p = GevParams::new(
                rng.random_range(-5.0..5.0),
                rng.random_range(0.1..4.0),
                rng.random_range(-0.9..1.5),
            )
            .unwrap();
            let q: f64 = rng.random_range(0.001..0.999);
            let z = return_level(&p, q).unwrap();
            assert!(
                close(gev_cdf(&p, z), 1.0 - q, 1e-10),
                "round trip failed for {p:?} at q={q}"
            );
        }
    }

    #[test]
    fn return_level_monotone_in_return_period() {
        // Larger return period 1/p means a higher level.
        let p = GevParams::new(2.0, 1.0, 0.3).unwrap();
        let mut last = f64::INFINITY;
        for i in 1..100 {
            let z = return_level(&p, i as f64 / 100.0).unwrap();
            assert!(z <= last);
            last = z;
        }
    }

    #[test]
    fn power_transform_hand_values() {
        let p = GevParams::new(2.0, 1.0, 1.0).unwrap();
        let t = power_transform(&p, 0.5).unwrap();
        assert!(close(t.mu, 1.5, 1e-12));
        assert!(close(t.sigma, 0.5, 1e-12));
        assert_eq!(t.xi, 1.0);

        let id = power_transform(&p, 1.0).unwrap();
        assert_eq!(id, p);
        assert!(power_transform(&p, 0.0).is_err());
        assert!(power_transform(&p, 1.5).is_err());
    }

    #[test]
    fn power_transform_pointwise_identity() {
        let mut rng = stream_rng(12, 0);
        for _ in 0..1000 {
            let p = GevParams::new(
                rng.random_range(-3.0..3.0),
                rng.random_range(0.2..3.0),
                rng.random_range(-0.8..1.2),
            )
            .unwrap();
            let theta: f64 = rng.random_range(0.05..1.0);
            let q = power_transform(&p, theta).unwrap();
            let y: f64 = rng.random_range(-10.0..20.0);
            let lhs = gev_cdf(&q, y);
            let rhs = gev_cdf(&p, y).powf(theta);
            assert!(close(lhs, rhs, 1e-10), "G^theta mismatch: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn power_transform_composes() {
        let mut rng = stream_rng(13, 0);
        for _ in 0..200 {
            let p = GevParams::new(
                rng.random_range(-3.0..3.0),
                rng.random_range(0.2..3.0),
                rng.random_range(-0.8..1.2),
            )
            .unwrap();
            let (t1, t2): (f64, f64) = (rng.random_range(0.1..1.0), rng.random_range(0.1..1.0));
            let a = power_transform(&power_transform(&p, t1).unwrap(), t2).unwrap();
            let b = power_transform(&p, t1 * t2).unwrap();
            assert!(close(a.mu, b.mu, 1e-10));
            assert!(close(a.sigma, b.sigma, 1e-10));
            assert_eq!(a.xi, b.xi);
        }
    }

    #[test]
    fn power_transform_gumbel_limit() {
        let p0 = GevParams::new(1.0, 2.0, 0.0).unwrap();
        let t = power_transform(&p0, 0.3).unwrap();
        assert!(close(t.mu, 1.0 + 2.0 * 0.3_f64.ln(), 1e-12));
        assert_eq!(t.sigma, 2.0);
    }

    #[test]
    fn rescale_transform_hand_values() {
        let p = GevParams::new(4.0, 2.0, 0.3).unwrap();
        let r = rescale_transform(&p, 2.0).unwrap();
        assert_eq!(r, GevParams::new(2.0, 1.0, 0.3).unwrap());
        assert_eq!(rescale_transform(&p, 1.0).unwrap(), p);
        assert!(rescale_transform(&p, 0.0).is_err());
        assert!(rescale_transform(&p, -1.0).is_err());
    }

    #[test]
    fn rescale_transform_pointwise_identity() {
        let mut rng = stream_rng(14, 0);
        for _ in 0..1000 {
            let p = GevParams::new(
                rng.random_range(-3.0..3.0),
                rng.random_range(0.2..3.0),
                rng.random_range(-0.8..1.2),
            )
            .unwrap();
            let gamma: f64 = rng.random_range(0.1..5.0);
            let q = rescale_transform(&p, gamma).unwrap();
            let t: f64 = rng.random_range(-5.0..5.0);
            assert!(
                close(gev_cdf(&q, t), gev_cdf(&p, gamma * t), 1e-10),
                "rescale identity failed"
            );
        }
    }

    #[test]
    fn gumbel_switch_continuity() {
        let a = GevParams::new(0.5, 1.3, 1e-9).unwrap();
        let b = GevParams::new(0.5, 1.3, 0.0).unwrap();
        let mut y = -5.0;
        while y < 10.0 {
            assert!((gev_cdf(&a, y) - gev_cdf(&b, y)).abs() < 1e-6);
            y += 0.1;
        }
    }

    #[test]
    fn frechet_consistency_hand_values() {
        assert!(close(frechet_consistency(&GevParams::new(2.0, 1.0, 0.5).unwrap()), 1.0, 1e-12));
        assert!(close(frechet_consistency(&GevParams::new(1.0, 1.0, 1.0).unwrap()), 1.0, 1e-12));
    }

    #[test]
    fn fit_recovers_known_parameters() {
        let truth = GevParams::new(2.0, 1.0, 0.3).unwrap();
        let mut rng = stream_rng(15, 0);
        let sample: Vec<f64> = (0..5000).map(|_| sample_gev(&truth, &mut rng)).collect();
        let fit = fit_gev_mle(&sample).unwrap();
        assert!(fit.converged);
        assert!(close(fit.params.mu, truth.mu, 0.10), "mu = {}", fit.params.mu);
        assert!(close(fit.params.sigma, truth.sigma, 0.10), "sigma = {}", fit.params.sigma);
        assert!(close(fit.params.xi, truth.xi, 0.05), "xi = {}", fit.params.xi);
        // Likelihood at the fit is no worse than at the truth.
        assert!(fit.neg_log_likelihood <= gev_nll(&truth, &sample) + 1e-6);
        assert!(!fit.shape_warning);
        if let Some(se) = fit.stderrs {
            assert!(se.iter().all(|s| *s > 0.0 && *s < 1.0));
        }
    }

    #[test]
    fn fit_gumbel_data_gives_near_zero_shape() {
        let truth = GevParams::new(0.0, 1.0, 0.0).unwrap();
        let mut rng = stream_rng(16, 0);
        let sample: Vec<f64> = (0..5000).map(|_| sample_gev(&truth, &mut rng)).collect();
        let fit = fit_gev_mle(&sample).unwrap();
        assert!(fit.params.xi > -0.05 && fit.params.xi < 0.05, "xi = {}", fit.params.xi);
    }

    #[test]
    fn fit_flags_strongly_bounded_shapes() {
        let truth = GevParams::new(0.0, 1.0, -0.7).unwrap();
        let mut rng = stream_rng(17, 0);
        let sample: Vec<f64> = (0..4000).map(|_| sample_gev(&truth, &mut rng)).collect();
        let fit = fit_gev_mle(&sample).unwrap();
        assert!(fit.params.xi < -0.5, "xi = {}", fit.params.xi);
        assert!(fit.shape_warning);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(matches!(fit_gev_mle(&[1.0; 50]), Err(Error::DegenerateInput(_))));
        assert!(matches!(fit_gev_mle(&[1.0, 2.0, 3.0]), Err(Error::InsufficientData(_))));
        let mut xs = vec![1.0; 25];
        xs[3] = f64::NAN;
        assert!(fit_gev_mle(&xs).is_err());
    }

    #[test]
    fn fit_result_json_envelope() {
        let fit = FitResult {
            params: GevParams::new(1.0, 2.0, 0.1).unwrap(),
            neg_log_likelihood: 12.5,
            converged: true,
            n_samples: 100,
            stderrs: None,
            shape_warning: false,
        };
        let v = fit.to_json();
        assert_eq!(v["mu"], 1.0);
        assert_eq!(v["sigma"], 2.0);
        assert_eq!(v["n"], 100);
        assert_eq!(v["converged"], true);
    }
}
