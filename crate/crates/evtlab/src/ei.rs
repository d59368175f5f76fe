//! Extremal index estimation and closed-form values.
//!
//! The extremal index `theta` in `P(M_n <= u_n(tau)) -> exp(-theta tau)`
//! measures clustering of exceedances; `1/theta` is roughly the mean cluster
//! size. Two estimators are provided: the bias-corrected interexceedance
//! intervals estimator and the cluster-start ratio (the fraction of
//! exceedances followed by `q` non-exceedances). Closed-form values are
//! available for the map/observable/functional combinations with known
//! theory.

use serde::Serialize;

use crate::dynamics::{is_fixed_point, MapModel};
use crate::error::{Error, Result};
use crate::observables::{circle_dist, Functional, Observable, TargetSet};
use crate::scaling;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EiMethod {
    FerroSegers,
    ClusterRatio { q: usize, threshold: f64 },
    Theoretical,
}

#[derive(Debug, Clone, Serialize)]
pub struct EIEstimate {
    pub theta: f64,
    pub method: EiMethod,
    pub n_exceedances: usize,
}

fn exceedance_indices(series: &[f64], threshold: f64) -> Vec<usize> {
    series
        .iter()
        .enumerate()
        .filter_map(|(i, &x)| (x > threshold).then_some(i))
        .collect()
}

/// Interexceedance intervals within one series.
fn gaps(series: &[f64], threshold: f64) -> (usize, Vec<f64>) {
    let idx = exceedance_indices(series, threshold);
    let g = idx.windows(2).map(|w| (w[1] - w[0]) as f64).collect();
    (idx.len(), g)
}

// `gaps.len()` is N-1 for a single series with N exceedances; pooled callers
// pass the total gap count.
fn theta_from_gaps(gaps: &[f64]) -> f64 {
    let m = gaps.len() as f64;
    let theta = if gaps.iter().all(|&t| t <= 2.0) {
        let s1: f64 = gaps.iter().sum();
        let s2: f64 = gaps.iter().map(|t| t * t).sum();
        2.0 * s1 * s1 / (m * s2)
    } else {
        let s1: f64 = gaps.iter().map(|t| t - 1.0).sum();
        let s2: f64 = gaps.iter().map(|t| (t - 1.0) * (t - 2.0)).sum();
        2.0 * s1 * s1 / (m * s2)
    };
    if theta.is_finite() {
        theta.clamp(f64::MIN_POSITIVE, 1.0)
    } else {
        1.0
    }
}

/// Intervals estimator of the extremal index from interexceedance times
/// `T_1 .. T_(N-1)`: `2 (sum T)^2 / ((N-1) sum T^2)` when all gaps are at
/// most 2, and the bias-corrected form
/// `2 (sum (T-1))^2 / ((N-1) sum (T-1)(T-2))` otherwise, clamped to (0, 1].
pub fn ferro_segers(series: &[f64], threshold: f64) -> Result<EIEstimate> {
    let (n, g) = gaps(series, threshold);
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "intervals estimator needs at least 2 exceedances, found {n}"
        )));
    }
    Ok(EIEstimate { theta: theta_from_gaps(&g), method: EiMethod::FerroSegers, n_exceedances: n })
}

/// Intervals estimator with interexceedance times pooled across several
/// independent series (no artificial gaps across series boundaries).
pub fn ferro_segers_pooled(series_list: &[Vec<f64>], threshold: f64) -> Result<EIEstimate> {
    let mut n_total = 0;
    let mut pooled = Vec::new();
    for s in series_list {
        let (n, mut g) = gaps(s, threshold);
        n_total += n;
        pooled.append(&mut g);
    }
    if pooled.is_empty() || n_total < 2 {
        return Err(Error::InsufficientData(format!(
            "intervals estimator needs at least 2 exceedances in one series, found {n_total}"
        )));
    }
    Ok(EIEstimate {
        theta: theta_from_gaps(&pooled),
        method: EiMethod::FerroSegers,
        n_exceedances: n_total,
    })
}

/// Cluster-start ratio: among indices `i <= len - q - 1` with `X_i > u`, the
/// fraction whose next `q` values all stay at or below `u`. With `q = 0` the
/// condition is empty and the ratio is 1.
pub fn cluster_ratio(series: &[f64], threshold: f64, q: usize) -> Result<EIEstimate> {
    if series.len() <= q {
        return Err(Error::InvalidInput(format!(
            "series of length {} cannot support gap parameter q={q}",
            series.len()
        )));
    }
    let mut n_exceed = 0usize;
    let mut n_starts = 0usize;
    for i in 0..series.len() - q {
        if series[i] > threshold {
            n_exceed += 1;
            if series[i + 1..=i + q].iter().all(|&x| x <= threshold) {
                n_starts += 1;
            }
        }
    }
    if n_exceed == 0 {
        return Err(Error::InsufficientData("no exceedances above the threshold".into()));
    }
    let theta = (n_starts as f64 / n_exceed as f64).clamp(f64::MIN_POSITIVE, 1.0);
    Ok(EIEstimate {
        theta,
        method: EiMethod::ClusterRatio { q, threshold },
        n_exceedances: n_exceed,
    })
}

/// Closed-form extremal index for the covered combinations:
///
/// * observable maximized on an invariant set, k-exceedance functional (any
///   k) or the base series: `1 - 1/lambda`, or `1 - 1/lambda^(m-1)` for the
///   coupled synchrony diagonal;
/// * k-average at a generic non-recurrent point (Fréchet): `1/k`;
/// * k-average of a Fréchet observable at the doubling-map fixed point 0:
///   the geometric-series cluster formula (equal to `1 - 1/lambda` at k=1).
///
/// Anything else is an unsupported case.
pub fn theoretical_ei(
    map: &MapModel,
    target: &TargetSet,
    functional: &Functional,
    obs: &Observable,
) -> Result<f64> {
    map.validate()?;
    obs.validate()?;
    functional.validate()?;
    let k = functional.k();

    match target {
        TargetSet::SynchronyDiagonal => {
            let MapModel::Coupled { beta, gamma, m } = *map else {
                return Err(Error::UnsupportedTarget(
                    "the synchrony diagonal is a target only for coupled maps".into(),
                ));
            };
            let lambda = (1.0 - gamma) * beta;
            match functional {
                Functional::KExceedance(_) => Ok(1.0 - lambda.powi(-(m as i32 - 1))),
                Functional::KAverage(1) => Ok(1.0 - lambda.powi(-(m as i32 - 1))),
                Functional::KAverage(_) => Err(Error::UnsupportedCase(
                    "no closed-form extremal index for k-averages at the synchrony diagonal".into(),
                )),
            }
        }
        TargetSet::Point(x0) => {
            if x0.dim() != map.dim() {
                return Err(Error::DimensionMismatch { expected: map.dim(), got: x0.dim() });
            }
            let fixed = is_fixed_point(map, x0)?;
            if fixed {
                let lambda = crate::dynamics::expansion_rate(map, target)?;
                match functional {
                    Functional::KExceedance(_) | Functional::KAverage(1) => Ok(1.0 - 1.0 / lambda),
                    Functional::KAverage(_) => {
                        let at_zero = matches!(map, MapModel::Doubling)
                            && circle_dist(x0.coords[0], 0.0) < 1e-12;
                        let alpha = obs.alpha();
                        if at_zero && alpha > 0.0 {
                            Ok(scaling::ei_double0_average(alpha, k))
                        } else {
                            Err(Error::UnsupportedCase(
                                "closed-form k-average extremal index at a fixed point is known \
                                 only for the Fréchet observable at 0 under doubling"
                                    .into(),
                            ))
                        }
                    }
                }
            } else {
                // Generic non-recurrent point: the base series has index 1.
                match functional {
                    Functional::KExceedance(1) | Functional::KAverage(1) => Ok(1.0),
                    Functional::KAverage(_) => {
                        if obs.alpha() > 0.0 {
                            Ok(1.0 / k as f64)
                        } else {
                            Err(Error::UnsupportedCase(
                                "no closed-form extremal index for Weibull k-averages at a \
                                 non-recurrent point"
                                    .into(),
                            ))
                        }
                    }
                    Functional::KExceedance(_) => Err(Error::UnsupportedCase(
                        "no closed-form extremal index for k-exceedances at a non-recurrent point"
                            .into(),
                    )),
                }
            }
        }
    }
}
