//! End-to-end orchestration: block maxima, empirical return levels, the
//! simulate/fit/predict experiment runner, climate CSV ingestion, and
//! return-level comparison tables.
//!
//! Everything here is a pure function of its inputs; simulation and
//! bootstrap randomness comes from per-index streams, so results are
//! identical under any evaluation order and the per-trajectory and per-k
//! work can safely run concurrently.

pub mod climate;

pub use climate::{ingest_csv, pooled_yearly_maxima, yearly_block_maxima, CsvSchema, IngestReport, RejectedRow, StationSeries};

use serde::{Deserialize, Serialize};

use crate::dynamics::{self, MapModel, SimConfig, StatePoint};
use crate::ei::{self, EIEstimate};
use crate::error::{Error, Result};
use crate::evt::{self, FitResult, GevParams};
use crate::observables::{self, Functional, Observable, TargetSet};
use crate::rng::stream_rng;
use crate::scaling::{self, ScalingInput, ScalingPrediction, ScalingRule, TailKind};

/// Block maxima of one or more series, pooled.
#[derive(Debug, Clone, Serialize)]
pub struct BlockMaxSeries {
    pub maxima: Vec<f64>,
    pub block_length: usize,
    pub n_blocks: usize,
    pub source_label: String,
}

/// Maxima over consecutive non-overlapping blocks of length `n`; a trailing
/// partial block is discarded.
pub fn block_maxima(series: &[f64], n: usize) -> Result<BlockMaxSeries> {
    block_maxima_pooled(std::slice::from_ref(&series), n, "series")
}

/// Block maxima over several series (blocks never straddle series
/// boundaries), pooled in order.
pub fn block_maxima_pooled<S: AsRef<[f64]>>(
    series_list: &[S],
    n: usize,
    label: &str,
) -> Result<BlockMaxSeries> {
    if n == 0 {
        return Err(Error::InvalidInput("block length must be at least 1".into()));
    }
    let mut maxima = Vec::new();
    for s in series_list {
        for chunk in s.as_ref().chunks_exact(n) {
            maxima.push(chunk.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        }
    }
    if maxima.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no complete block of length {n} in the input"
        )));
    }
    let n_blocks = maxima.len();
    Ok(BlockMaxSeries { maxima, block_length: n, n_blocks, source_label: label.to_string() })
}

/// Linear-interpolation quantile of a sorted sample (`q` in [0, 1]).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Quantile of an unsorted sample.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    quantile_sorted(&s, q)
}

/// Empirical return levels of block maxima: the `1 - p` order-statistic
/// quantile for each exceedance probability `p`. Requires at least 5 maxima
/// in the tail beyond each requested level: `(1 - p) n_blocks >= 5`.
pub fn empirical_return_levels_from_maxima(maxima: &[f64], probs: &[f64]) -> Result<Vec<f64>> {
    let n = maxima.len() as f64;
    let mut sorted = maxima.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    probs
        .iter()
        .map(|&p| {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidInput(format!("probability must be in (0,1), got {p}")));
            }
            if p * n < 5.0 {
                return Err(Error::InsufficientData(format!(
                    "need (1-p) * n_blocks >= 5 tail maxima for p = {p}, have {}",
                    p * n
                )));
            }
            Ok(quantile_sorted(&sorted, 1.0 - p))
        })
        .collect()
}

/// Block a raw series and read empirical return levels off the maxima.
pub fn empirical_return_levels(series: &[f64], n: usize, probs: &[f64]) -> Result<Vec<f64>> {
    let bm = block_maxima(series, n)?;
    empirical_return_levels_from_maxima(&bm.maxima, probs)
}

fn default_k_min() -> usize {
    1
}
fn default_threshold_quantile() -> f64 {
    0.99
}
fn default_weibull_cap() -> f64 {
    1.0
}
fn default_x0() -> String {
    "0.0".into()
}
fn default_n_trajectories() -> usize {
    500
}
fn default_trajectory_length() -> usize {
    10_000
}
fn default_noise() -> f64 {
    1e-8
}

/// Flat experiment description, deserializable from a key = value TOML file.
///
/// Keys: `map` (doubling | beta | toral | coupled) with `beta`, `gamma`, `m`,
/// `toral_a..toral_d` as needed; `observable` (frechet | weibull) with
/// `alpha` (negative for weibull) and `weibull_cap`; `target` (point |
/// diagonal) with `x0` as comma-separated coordinates; `functional`
/// (exceedance | average) with `k_min`, `k_max`; `n_trajectories`,
/// `trajectory_length`, `master_seed`, `noise_amplitude`, `block_length`,
/// `threshold_quantile`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub map: String,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub m: Option<usize>,
    pub toral_a: Option<i64>,
    pub toral_b: Option<i64>,
    pub toral_c: Option<i64>,
    pub toral_d: Option<i64>,
    pub observable: String,
    pub alpha: f64,
    #[serde(default = "default_weibull_cap")]
    pub weibull_cap: f64,
    pub target: String,
    #[serde(default = "default_x0")]
    pub x0: String,
    pub functional: String,
    #[serde(default = "default_k_min")]
    pub k_min: usize,
    pub k_max: usize,
    #[serde(default = "default_n_trajectories")]
    pub n_trajectories: usize,
    #[serde(default = "default_trajectory_length")]
    pub trajectory_length: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_noise")]
    pub noise_amplitude: f64,
    pub block_length: usize,
    #[serde(default = "default_threshold_quantile")]
    pub threshold_quantile: f64,
}

/// Functional family selector (the window length varies per run).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionalKind {
    Exceedance,
    Average,
}

impl FunctionalKind {
    pub fn with_k(self, k: usize) -> Functional {
        match self {
            FunctionalKind::Exceedance => Functional::KExceedance(k),
            FunctionalKind::Average => Functional::KAverage(k),
        }
    }
}

pub struct ResolvedExperiment {
    pub map: MapModel,
    pub observable: Observable,
    pub kind: FunctionalKind,
    pub sim: SimConfig,
    pub block_length: usize,
    pub k_min: usize,
    pub k_max: usize,
    pub threshold_quantile: f64,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Data(format!("config parse error: {e}")))
    }

    pub fn resolve(&self) -> Result<ResolvedExperiment> {
        let map = match self.map.as_str() {
            "doubling" => MapModel::Doubling,
            "beta" => MapModel::Beta {
                beta: self.beta.ok_or_else(|| Error::InvalidInput("beta map needs `beta`".into()))?,
            },
            "toral" => MapModel::Toral {
                a: self.toral_a.ok_or_else(|| Error::InvalidInput("toral map needs `toral_a`".into()))?,
                b: self.toral_b.ok_or_else(|| Error::InvalidInput("toral map needs `toral_b`".into()))?,
                c: self.toral_c.ok_or_else(|| Error::InvalidInput("toral map needs `toral_c`".into()))?,
                d: self.toral_d.ok_or_else(|| Error::InvalidInput("toral map needs `toral_d`".into()))?,
            },
            "coupled" => MapModel::Coupled {
                beta: self.beta.ok_or_else(|| Error::InvalidInput("coupled map needs `beta`".into()))?,
                gamma: self
                    .gamma
                    .ok_or_else(|| Error::InvalidInput("coupled map needs `gamma`".into()))?,
                m: self.m.ok_or_else(|| Error::InvalidInput("coupled map needs `m`".into()))?,
            },
            other => return Err(Error::InvalidInput(format!("unknown map `{other}`"))),
        };
        map.validate()?;

        let target = match self.target.as_str() {
            "diagonal" => TargetSet::SynchronyDiagonal,
            "point" => {
                let coords: Vec<f64> = self
                    .x0
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::InvalidInput(format!("bad x0 component `{t}`")))
                    })
                    .collect::<Result<_>>()?;
                TargetSet::Point(StatePoint::new(coords))
            }
            other => return Err(Error::InvalidInput(format!("unknown target `{other}`"))),
        };

        let observable = match self.observable.as_str() {
            "frechet" => Observable::Frechet { alpha: self.alpha, target },
            "weibull" => Observable::Weibull { cap: self.weibull_cap, alpha: self.alpha, target },
            other => return Err(Error::InvalidInput(format!("unknown observable `{other}`"))),
        };
        observable.validate()?;

        let kind = match self.functional.as_str() {
            "exceedance" => FunctionalKind::Exceedance,
            "average" => FunctionalKind::Average,
            other => return Err(Error::InvalidInput(format!("unknown functional `{other}`"))),
        };

        if self.k_min < 1 || self.k_max < self.k_min {
            return Err(Error::InvalidInput(format!(
                "window range [{}, {}] is empty or starts below 1",
                self.k_min, self.k_max
            )));
        }
        // Sampling sanity guard: windows must stay small next to a block.
        if self.k_max > self.block_length / 10 {
            return Err(Error::InvalidInput(format!(
                "k_max = {} exceeds block_length/10 = {}",
                self.k_max,
                self.block_length / 10
            )));
        }
        if !(self.threshold_quantile > 0.0 && self.threshold_quantile < 1.0) {
            return Err(Error::InvalidInput("threshold_quantile must lie in (0,1)".into()));
        }

        let sim = SimConfig {
            n_trajectories: self.n_trajectories,
            trajectory_length: self.trajectory_length,
            master_seed: self.master_seed,
            noise_amplitude: self.noise_amplitude,
        };
        sim.validate()?;

        Ok(ResolvedExperiment {
            map,
            observable,
            kind,
            sim,
            block_length: self.block_length,
            k_min: self.k_min,
            k_max: self.k_max,
            threshold_quantile: self.threshold_quantile,
        })
    }
}

/// One window length of an experiment: maximum-likelihood fit, intervals
/// estimate of the extremal index, and the closed-form prediction anchored at
/// the k = 1 fit. Fit failures are recorded per k, not propagated.
#[derive(Debug, Clone, Serialize)]
pub struct KRow {
    pub k: usize,
    pub mle: Option<FitResult>,
    pub fit_error: Option<String>,
    pub theta_fs: Option<f64>,
    pub prediction: Option<ScalingPrediction>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentOutput {
    pub base: FitResult,
    pub base_theta: EIEstimate,
    pub rows: Vec<KRow>,
}

impl ExperimentOutput {
    /// True when no window length produced a successful fit.
    pub fn all_fits_failed(&self) -> bool {
        self.rows.iter().all(|r| r.mle.is_none())
    }
}

/// Which closed-form rule applies to this experiment.
fn prediction_plan(exp: &ResolvedExperiment) -> Option<ScalingRule> {
    let target = exp.observable.target();
    let invariant = match target {
        TargetSet::SynchronyDiagonal => matches!(exp.map, MapModel::Coupled { .. }),
        TargetSet::Point(p) => dynamics::is_fixed_point(&exp.map, p).unwrap_or(false),
    };
    let frechet = matches!(exp.observable, Observable::Frechet { .. });
    match (exp.kind, invariant, frechet) {
        (FunctionalKind::Exceedance, true, true) => Some(ScalingRule::ExceedanceFrechet),
        (FunctionalKind::Exceedance, true, false) => Some(ScalingRule::ExceedanceWeibull),
        (FunctionalKind::Average, false, true) => Some(ScalingRule::AverageNonrecurrent),
        (FunctionalKind::Average, true, true) => {
            let at_zero = matches!(exp.map, MapModel::Doubling)
                && matches!(target, TargetSet::Point(p)
                    if observables::circle_dist(p.coords[0], 0.0) < 1e-12);
            at_zero.then_some(ScalingRule::AverageDoublingFixed)
        }
        _ => None,
    }
}

fn predict_for_k(
    rule: ScalingRule,
    exp: &ResolvedExperiment,
    base: &GevParams,
    theta1_hat: f64,
    k: usize,
) -> Result<ScalingPrediction> {
    let alpha = exp.observable.alpha();
    let (g, theta1, theta2, tail) = match rule {
        ScalingRule::ExceedanceFrechet | ScalingRule::ExceedanceWeibull => {
            let lambda = dynamics::expansion_rate(&exp.map, exp.observable.target())?;
            let tail = if matches!(rule, ScalingRule::ExceedanceFrechet) {
                TailKind::Frechet
            } else {
                TailKind::Weibull
            };
            // The extremal index does not change with k in this regime.
            (scaling::g_invariant_exceedance(lambda, alpha, k), theta1_hat, theta1_hat, tail)
        }
        ScalingRule::AverageNonrecurrent => {
            if base.xi <= 0.0 {
                return Err(Error::WrongTail(format!(
                    "k-average rule needs a fitted Fréchet shape, got xi = {}",
                    base.xi
                )));
            }
            (
                scaling::g_generic_average(base.xi, k),
                theta1_hat,
                theta1_hat / k as f64,
                TailKind::Frechet,
            )
        }
        ScalingRule::AverageDoublingFixed => (
            scaling::g_double0_average(alpha, k),
            0.5,
            scaling::ei_double0_average(alpha, k),
            TailKind::Frechet,
        ),
        ScalingRule::FrechetScaling | ScalingRule::WeibullScaling => {
            return Err(Error::UnsupportedCase(
                "general scaling rules need explicit (g, theta) inputs".into(),
            ))
        }
    };
    let input = ScalingInput { base: *base, theta1, theta2, g, tail };
    let mut pred = match tail {
        TailKind::Frechet => scaling::predict_frechet(&input)?,
        TailKind::Weibull => scaling::predict_weibull(&input)?,
    };
    pred.rule = rule;
    Ok(pred)
}

/// Run the full experiment: simulate trajectories, evaluate the observable,
/// and for every window length in the configured range fit the GEV to pooled
/// block maxima of the windowed series, estimate the extremal index, and
/// compute the closed-form prediction anchored at the k = 1 fit.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let exp = cfg.resolve()?;
    let trajectories = dynamics::simulate(&exp.map, &exp.sim)?;
    let series: Vec<Vec<f64>> = trajectories
        .iter()
        .map(|t| observables::evaluate_series(&exp.observable, t))
        .collect::<Result<_>>()?;
    drop(trajectories);

    // Base (k = 1) fit anchors every prediction.
    let base_bm = block_maxima_pooled(&series, exp.block_length, "base")?;
    let base = evt::fit_gev_mle(&base_bm.maxima)
        .map_err(|e| Error::FitFailed(format!("base series fit failed: {e}")))?;
    let pooled_threshold = |per_k_series: &[Vec<f64>], q: f64| -> f64 {
        let mut all: Vec<f64> =
            per_k_series.iter().flat_map(|s| s.iter().copied()).filter(|v| v.is_finite()).collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        quantile_sorted(&all, q)
    };
    let base_threshold = pooled_threshold(&series, exp.threshold_quantile);
    let base_theta = ei::ferro_segers_pooled(&series, base_threshold)?;

    let rule = prediction_plan(&exp);
    let mut rows = Vec::with_capacity(exp.k_max - exp.k_min + 1);
    for k in exp.k_min..=exp.k_max {
        let functional = exp.kind.with_k(k);
        let derived: Vec<Vec<f64>> = series
            .iter()
            .map(|s| observables::functional_series(s, &functional))
            .collect::<Result<_>>()?;

        let (mle, fit_error) = match block_maxima_pooled(&derived, exp.block_length, "windowed")
            .and_then(|bm| evt::fit_gev_mle(&bm.maxima))
        {
            Ok(fit) => (Some(fit), None),
            Err(e) => (None, Some(e.to_string())),
        };

        let threshold = pooled_threshold(&derived, exp.threshold_quantile);
        let theta_fs = ei::ferro_segers_pooled(&derived, threshold).ok().map(|e| e.theta);

        let prediction = rule
            .and_then(|r| predict_for_k(r, &exp, &base.params, base_theta.theta, k).ok());

        rows.push(KRow { k, mle, fit_error, theta_fs, prediction });
    }

    Ok(ExperimentOutput { base, base_theta, rows })
}

/// Per-k parameter table with columns
/// `k,mu_mle,sigma_mle,xi_mle,theta_fs,mu_pred,sigma_pred,xi_pred,theta_pred,g`.
/// Missing entries (failed fits, no applicable rule) are left empty.
pub fn params_by_k_csv(out: &ExperimentOutput) -> String {
    let mut s =
        String::from("k,mu_mle,sigma_mle,xi_mle,theta_fs,mu_pred,sigma_pred,xi_pred,theta_pred,g\n");
    let fmt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x}"));
    for row in &out.rows {
        let p = row.prediction.as_ref();
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            row.k,
            fmt(row.mle.as_ref().map(|f| f.params.mu)),
            fmt(row.mle.as_ref().map(|f| f.params.sigma)),
            fmt(row.mle.as_ref().map(|f| f.params.xi)),
            fmt(row.theta_fs),
            fmt(p.map(|p| p.derived.mu)),
            fmt(p.map(|p| p.derived.sigma)),
            fmt(p.map(|p| p.derived.xi)),
            fmt(p.map(|p| p.theta2)),
            fmt(p.map(|p| p.g_used)),
        ));
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct ReturnLevelRow {
    pub prob: f64,
    pub return_period: f64,
    pub z_mle: f64,
    pub z_pred: f64,
    pub z_empirical: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReturnLevelTable {
    pub rows: Vec<ReturnLevelRow>,
    pub n_bootstrap: usize,
}

impl ReturnLevelTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("prob,return_period,z_mle,z_pred,z_empirical,ci_lower,ci_upper\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.prob, r.return_period, r.z_mle, r.z_pred, r.z_empirical, r.ci_lower, r.ci_upper
            ));
        }
        s
    }
}

/// Compare return levels of an MLE fit and a scaling prediction against the
/// empirical quantiles of a long-run block-maxima sample, with a parametric
/// bootstrap band around the empirical levels: a GEV is fitted to the
/// empirical maxima, `n_bootstrap` synthetic samples of the same size are
/// drawn from it, and the 2.5%/97.5% quantiles of their empirical levels
/// bracket each row.
pub fn compare_return_levels(
    mle: &GevParams,
    predicted: &GevParams,
    empirical: &BlockMaxSeries,
    probs: &[f64],
    n_bootstrap: usize,
    seed: u64,
) -> Result<ReturnLevelTable> {
    if n_bootstrap == 0 {
        return Err(Error::InvalidInput("need at least one bootstrap replicate".into()));
    }
    let z_emp = empirical_return_levels_from_maxima(&empirical.maxima, probs)?;
    let emp_fit = evt::fit_gev_mle(&empirical.maxima)?;
    let n = empirical.maxima.len();

    let mut boot_levels: Vec<Vec<f64>> = vec![Vec::with_capacity(n_bootstrap); probs.len()];
    for b in 0..n_bootstrap {
        let mut rng = stream_rng(seed, b as u64);
        let mut sample: Vec<f64> = (0..n).map(|_| evt::sample_gev(&emp_fit.params, &mut rng)).collect();
        sample.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        for (i, &p) in probs.iter().enumerate() {
            boot_levels[i].push(quantile_sorted(&sample, 1.0 - p));
        }
    }

    let mut rows = Vec::with_capacity(probs.len());
    for (i, &p) in probs.iter().enumerate() {
        boot_levels[i].sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        rows.push(ReturnLevelRow {
            prob: p,
            return_period: 1.0 / p,
            z_mle: evt::return_level(mle, p)?,
            z_pred: evt::return_level(predicted, p)?,
            z_empirical: z_emp[i],
            ci_lower: quantile_sorted(&boot_levels[i], 0.025),
            ci_upper: quantile_sorted(&boot_levels[i], 0.975),
        });
    }
    Ok(ReturnLevelTable { rows, n_bootstrap })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_maxima_hand_values() {
        let bm = block_maxima(&[1.0, 3.0, 2.0, 5.0, 4.0, 0.0], 2).unwrap();
        assert_eq!(bm.maxima, vec![3.0, 5.0, 4.0]);
        assert_eq!(bm.n_blocks, 3);

        let bm2 = block_maxima(&[1.0, 3.0, 2.0, 5.0, 4.0, 0.0, 9.0], 2).unwrap();
        assert_eq!(bm2.maxima, vec![3.0, 5.0, 4.0], "trailing partial block must be dropped");

        let id = block_maxima(&[1.0, 3.0, 2.0], 1).unwrap();
        assert_eq!(id.maxima, vec![1.0, 3.0, 2.0]);

        assert!(block_maxima(&[1.0], 2).is_err());
    }

    #[test]
    fn blockmax_commutes_with_identity_window() {
        let xs: Vec<f64> = (0..100).map(|i| ((i * 7919) % 101) as f64).collect();
        let w = observables::functional_series(&xs, &Functional::KExceedance(1)).unwrap();
        let a = block_maxima(&xs, 10).unwrap();
        let b = block_maxima(&w, 10).unwrap();
        assert_eq!(a.maxima, b.maxima);
    }

    #[test]
    fn empirical_levels_median() {
        let maxima: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        let z = empirical_return_levels_from_maxima(&maxima, &[0.5]).unwrap();
        assert!((z[0] - 500.5).abs() < 1e-9);
    }

    #[test]
    fn empirical_levels_tail_guard() {
        let maxima: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert!(empirical_return_levels_from_maxima(&maxima, &[0.01]).is_err());
        assert!(empirical_return_levels_from_maxima(&maxima, &[0.5]).is_ok());
    }

    #[test]
    fn config_round_trip_and_guards() {
        let text = r#"
map = "doubling"
observable = "frechet"
alpha = 1.0
target = "point"
x0 = "0.0"
functional = "exceedance"
k_max = 6
n_trajectories = 10
trajectory_length = 1000
block_length = 100
"#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        let exp = cfg.resolve().unwrap();
        assert_eq!(exp.map, MapModel::Doubling);
        assert_eq!(exp.k_min, 1);
        assert_eq!(exp.sim.noise_amplitude, 1e-8);

        let mut bad = cfg.clone();
        bad.k_max = 50; // beyond block_length / 10
        assert!(bad.resolve().is_err());

        let mut weird = cfg.clone();
        weird.map = "spiral".into();
        assert!(weird.resolve().is_err());
    }

    #[test]
    fn experiment_k1_prediction_equals_fit() {
        let cfg = ExperimentConfig {
            map: "doubling".into(),
            beta: None,
            gamma: None,
            m: None,
            toral_a: None,
            toral_b: None,
            toral_c: None,
            toral_d: None,
            observable: "frechet".into(),
            alpha: 1.0,
            weibull_cap: 1.0,
            target: "point".into(),
            x0: "0.0".into(),
            functional: "exceedance".into(),
            k_min: 1,
            k_max: 1,
            n_trajectories: 40,
            trajectory_length: 2000,
            master_seed: 12,
            noise_amplitude: 1e-8,
            block_length: 500,
            threshold_quantile: 0.99,
        };
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.rows.len(), 1);
        let row = &out.rows[0];
        let pred = row.prediction.as_ref().expect("rule applies at k = 1");
        let fit = row.mle.as_ref().expect("fit succeeds");
        assert!((pred.derived.mu - out.base.params.mu).abs() < 1e-12);
        assert!((pred.derived.sigma - out.base.params.sigma).abs() < 1e-12);
        assert_eq!(pred.derived.xi, out.base.params.xi);
        // k = 1 row is the base series itself.
        assert_eq!(fit.params, out.base.params);
    }

    #[test]
    fn experiment_is_deterministic() {
        let cfg = ExperimentConfig {
            map: "doubling".into(),
            beta: None,
            gamma: None,
            m: None,
            toral_a: None,
            toral_b: None,
            toral_c: None,
            toral_d: None,
            observable: "frechet".into(),
            alpha: 1.0,
            weibull_cap: 1.0,
            target: "point".into(),
            x0: "0.0".into(),
            functional: "exceedance".into(),
            k_min: 1,
            k_max: 3,
            n_trajectories: 20,
            trajectory_length: 2000,
            master_seed: 5,
            noise_amplitude: 1e-8,
            block_length: 400,
            threshold_quantile: 0.99,
        };
        let a = params_by_k_csv(&run_experiment(&cfg).unwrap());
        let b = params_by_k_csv(&run_experiment(&cfg).unwrap());
        assert_eq!(a, b);
        assert!(a.starts_with("k,mu_mle,sigma_mle,xi_mle,theta_fs,mu_pred,sigma_pred,xi_pred,theta_pred,g\n"));
        assert_eq!(a.lines().count(), 4);
    }

    #[test]
    fn return_level_table_identical_params_and_monotonicity() {
        let p = GevParams::new(10.0, 5.0, 0.2).unwrap();
        let mut rng = stream_rng(77, 0);
        let maxima: Vec<f64> = (0..2000).map(|_| evt::sample_gev(&p, &mut rng)).collect();
        let bm = BlockMaxSeries {
            maxima,
            block_length: 100,
            n_blocks: 2000,
            source_label: "synthetic".into(),
        };
        let probs = [0.5, 0.2, 0.1, 0.05, 0.01];
        let table = compare_return_levels(&p, &p, &bm, &probs, 200, 9).unwrap();
        let mut last_mle = f64::NEG_INFINITY;
        let mut last_emp = f64::NEG_INFINITY;
        for r in &table.rows {
            assert_eq!(r.z_mle, r.z_pred, "identical parameters give identical columns");
            assert!(r.z_mle >= last_mle, "levels must grow with the return period");
            assert!(r.z_empirical >= last_emp);
            assert!(r.ci_lower <= r.ci_upper);
            last_mle = r.z_mle;
            last_emp = r.z_empirical;
        }
        let csv = table.to_csv();
        assert!(csv.starts_with("prob,return_period,"));
        assert_eq!(csv.lines().count(), 1 + probs.len());
    }
}
