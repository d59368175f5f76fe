//! Distance observables maximized on a target set, and the windowed
//! functionals (run minimum, run average) applied to their time series.
//!
//! Two observable families are supported, classified by the tail of their
//! extremes: the Fréchet case `phi(x) = d(x, S)^(-alpha)` with `alpha > 0`
//! (unbounded, fat-tailed) and the Weibull case `phi(x) = C - d(x, S)^(-alpha)`
//! with `C > 0, alpha < 0` (bounded above by `C`). The Weibull exponent is
//! stored negative, so the evaluated value is `C - d^|alpha|`.

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::dynamics::StatePoint;
use crate::error::{Error, Result};

/// Set on which an observable is maximized.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetSet {
    /// A single point; distances use the wrap-around metric per coordinate.
    Point(StatePoint),
    /// The diagonal `x_1 = ... = x_m` of a coupled system; distance is the
    /// Euclidean norm of the component orthogonal to the diagonal.
    SynchronyDiagonal,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    /// `d(x, S)^(-alpha)`, `alpha > 0`.
    Frechet { alpha: f64, target: TargetSet },
    /// `C - d(x, S)^(-alpha)`, `C > 0`, `alpha < 0`.
    Weibull { cap: f64, alpha: f64, target: TargetSet },
}

impl Observable {
    pub fn validate(&self) -> Result<()> {
        match self {
            Observable::Frechet { alpha, .. } => {
                if *alpha > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidInput(format!(
                        "Frechet observable requires alpha > 0, got {alpha}"
                    )))
                }
            }
            Observable::Weibull { cap, alpha, .. } => {
                if *alpha < 0.0 && *cap > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidInput(format!(
                        "Weibull observable requires C > 0 and alpha < 0, got C={cap}, alpha={alpha}"
                    )))
                }
            }
        }
    }

    pub fn target(&self) -> &TargetSet {
        match self {
            Observable::Frechet { target, .. } | Observable::Weibull { target, .. } => target,
        }
    }

    pub fn alpha(&self) -> f64 {
        match self {
            Observable::Frechet { alpha, .. } | Observable::Weibull { alpha, .. } => *alpha,
        }
    }

    /// Value reported when the orbit lands exactly on the target set.
    pub fn saturated_value(&self) -> f64 {
        match self {
            Observable::Frechet { .. } => f64::INFINITY,
            Observable::Weibull { cap, .. } => *cap,
        }
    }
}

/// Windowed functional applied to an observable series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Functional {
    /// Minimum over k consecutive values (k successive exceedances).
    KExceedance(usize),
    /// Mean over k consecutive values.
    KAverage(usize),
}

impl Functional {
    pub fn k(&self) -> usize {
        match *self {
            Functional::KExceedance(k) | Functional::KAverage(k) => k,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k() >= 1 {
            Ok(())
        } else {
            Err(Error::InvalidInput("window length k must be at least 1".into()))
        }
    }
}

/// Wrap-around distance on the circle for coordinates in `[0, 1)`.
pub fn circle_dist(x: f64, y: f64) -> f64 {
    let d = (x - y).abs();
    d.min(1.0 - d)
}

/// Distance from `x` to the target set: wrap-around metric (dimension 1),
/// Euclidean norm of wrapped coordinate differences (point targets in higher
/// dimension), or `||x - mean(x) 1||_2` for the synchrony diagonal.
pub fn distance_to_set(x: &StatePoint, target: &TargetSet) -> Result<f64> {
    match target {
        TargetSet::Point(p) => {
            if p.dim() != x.dim() {
                return Err(Error::DimensionMismatch { expected: p.dim(), got: x.dim() });
            }
            if x.dim() == 1 {
                Ok(circle_dist(x.coords[0], p.coords[0]))
            } else {
                let sq: f64 = x
                    .coords
                    .iter()
                    .zip(&p.coords)
                    .map(|(&a, &b)| {
                        let d = circle_dist(a, b);
                        d * d
                    })
                    .sum();
                Ok(sq.sqrt())
            }
        }
        TargetSet::SynchronyDiagonal => {
            if x.dim() < 2 {
                return Err(Error::DimensionMismatch { expected: 2, got: x.dim() });
            }
            let mean = x.coords.iter().sum::<f64>() / x.dim() as f64;
            let sq: f64 = x.coords.iter().map(|&c| (c - mean) * (c - mean)).sum();
            Ok(sq.sqrt())
        }
    }
}

/// Evaluate the observable at one point. A zero distance signals the
/// on-target condition; simulation callers substitute
/// [`Observable::saturated_value`].
pub fn evaluate(obs: &Observable, x: &StatePoint) -> Result<f64> {
    obs.validate()?;
    let d = distance_to_set(x, obs.target())?;
    if d == 0.0 {
        return Err(Error::OnTarget);
    }
    Ok(match obs {
        Observable::Frechet { alpha, .. } => d.powf(-alpha),
        Observable::Weibull { cap, alpha, .. } => cap - d.powf(-alpha),
    })
}

/// Observable series along a trajectory; on-target points saturate.
pub fn evaluate_series(obs: &Observable, trajectory: &[StatePoint]) -> Result<Vec<f64>> {
    trajectory
        .iter()
        .map(|p| match evaluate(obs, p) {
            Ok(v) => Ok(v),
            Err(Error::OnTarget) => Ok(obs.saturated_value()),
            Err(e) => Err(e),
        })
        .collect()
}

/// Sliding-window functional of a series; output length is
/// `len - k + 1` (windows fully inside the series).
pub fn functional_series(values: &[f64], f: &Functional) -> Result<Vec<f64>> {
    f.validate()?;
    let k = f.k();
    if values.len() < k {
        return Err(Error::InvalidInput(format!(
            "series of length {} is shorter than the window k={k}",
            values.len()
        )));
    }
    let n_out = values.len() - k + 1;
    match f {
        Functional::KExceedance(_) => {
            // Monotone deque of (index, value), increasing values.
            let mut out = Vec::with_capacity(n_out);
            let mut deque: std::collections::VecDeque<(usize, f64)> =
                std::collections::VecDeque::new();
            for (i, &v) in values.iter().enumerate() {
                while deque.back().is_some_and(|&(_, b)| b >= v) {
                    deque.pop_back();
                }
                deque.push_back((i, v));
                if i + 1 >= k {
                    while deque.front().is_some_and(|&(j, _)| j + k <= i) {
                        deque.pop_front();
                    }
                    out.push(deque.front().expect("window is non-empty").1);
                }
            }
            Ok(out)
        }
        Functional::KAverage(_) => {
            let inv_k = 1.0 / k as f64;
            Ok((0..n_out).map(|i| values[i..i + k].iter().sum::<f64>() * inv_k).collect())
        }
    }
}

/// Analytic maximum of the 2-exceedance `min(phi(x), phi(2x mod 1))` of
/// `phi(x) = d(x, x0)^(-alpha)` on the doubling map, for `x0` in `(0, 1/2)`:
/// the maximum `(3/x0)^alpha` is attained at `x = 2 x0 / 3`.
pub fn example61_analytic(x0: f64, alpha: f64) -> Result<(f64, f64)> {
    if !(x0 > 0.0 && x0 < 0.5) {
        return Err(Error::UnsupportedCase(format!(
            "analytic 2-exceedance maximum requires x0 in (0, 1/2), got {x0}"
        )));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidInput(format!("alpha must be > 0, got {alpha}")));
    }
    Ok((2.0 * x0 / 3.0, (3.0 / x0).powf(alpha)))
}

/// Single-column CSV with header `value`.
pub fn write_series_csv<W: Write>(mut w: W, values: &[f64]) -> Result<()> {
    writeln!(w, "value")?;
    for v in values {
        writeln!(w, "{v}")?;
    }
    Ok(())
}

/// Read a single-column CSV with header `value`.
pub fn read_series_csv<R: Read>(r: R) -> Result<Vec<f64>> {
    let mut lines = BufReader::new(r).lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == "value" => {}
        Some(Ok(h)) => return Err(Error::Data(format!("expected header 'value', got '{h}'"))),
        Some(Err(e)) => return Err(e.into()),
        None => return Err(Error::Data("empty series file".into())),
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        out.push(
            t.parse::<f64>()
                .map_err(|_| Error::Data(format!("line {}: cannot parse '{t}'", i + 2)))?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{orbit, wrap_unit, MapModel};
    use crate::rng::stream_rng;
    use rand::Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn wraparound_distance() {
        let x = StatePoint::scalar(0.9);
        let t = TargetSet::Point(StatePoint::scalar(0.0));
        assert!(close(distance_to_set(&x, &t).unwrap(), 0.1, 1e-15));
    }

    #[test]
    fn diagonal_distance_hand_values() {
        let t = TargetSet::SynchronyDiagonal;
        let d = distance_to_set(&StatePoint::new(vec![1.0, 0.0, 0.0]), &t).unwrap();
        assert!(close(d, 6.0_f64.sqrt() / 3.0, 1e-15));
        let z = distance_to_set(&StatePoint::new(vec![0.4, 0.4, 0.4]), &t).unwrap();
        assert!(z < 1e-15, "synchronous point must sit on the diagonal, d = {z}");
    }

    #[test]
    fn distance_dimension_errors() {
        let t = TargetSet::Point(StatePoint::scalar(0.0));
        assert!(distance_to_set(&StatePoint::new(vec![0.1, 0.2]), &t).is_err());
        assert!(distance_to_set(&StatePoint::scalar(0.1), &TargetSet::SynchronyDiagonal).is_err());
    }

    #[test]
    fn evaluate_frechet() {
        let obs = Observable::Frechet { alpha: 1.0, target: TargetSet::Point(StatePoint::scalar(0.0)) };
        assert!(close(evaluate(&obs, &StatePoint::scalar(0.25)).unwrap(), 4.0, 1e-15));

        let obs02 =
            Observable::Frechet { alpha: 0.2, target: TargetSet::Point(StatePoint::scalar(0.0)) };
        assert!(close(evaluate(&obs02, &StatePoint::scalar(0.5)).unwrap(), 0.5_f64.powf(-0.2), 1e-15));
        assert!(close(evaluate(&obs02, &StatePoint::scalar(0.5)).unwrap(), 1.148698, 1e-6));
    }

    #[test]
    fn evaluate_weibull() {
        let obs = Observable::Weibull {
            cap: 1.0,
            alpha: -0.4,
            target: TargetSet::Point(StatePoint::scalar(0.0)),
        };
        let v = evaluate(&obs, &StatePoint::scalar(0.5)).unwrap();
        assert!(close(v, 1.0 - 0.5_f64.powf(0.4), 1e-15));
        assert!(close(v, 0.24214, 1e-5));
        // Bounded above by the cap.
        assert!(v <= 1.0);
    }

    #[test]
    fn on_target_signals() {
        let obs = Observable::Frechet { alpha: 1.0, target: TargetSet::Point(StatePoint::scalar(0.3)) };
        assert!(matches!(evaluate(&obs, &StatePoint::scalar(0.3)), Err(Error::OnTarget)));
        let series = evaluate_series(&obs, &[StatePoint::scalar(0.3)]).unwrap();
        assert_eq!(series[0], f64::INFINITY);
    }

    #[test]
    fn observable_monotonicity_in_distance() {
        let frechet =
            Observable::Frechet { alpha: 0.7, target: TargetSet::Point(StatePoint::scalar(0.0)) };
        let weibull = Observable::Weibull {
            cap: 2.0,
            alpha: -0.7,
            target: TargetSet::Point(StatePoint::scalar(0.0)),
        };
        let mut last_f = f64::INFINITY;
        let mut last_w = 2.0;
        for i in 1..50 {
            let x = StatePoint::scalar(i as f64 / 100.0);
            let f = evaluate(&frechet, &x).unwrap();
            let w = evaluate(&weibull, &x).unwrap();
            assert!(f < last_f, "Frechet must strictly decrease in d");
            assert!(w < last_w, "Weibull must strictly decrease in d (increase toward C as d->0)");
            last_f = f;
            last_w = w;
        }
    }

    #[test]
    fn functional_series_hand_values() {
        let xs = [1.0, 4.0, 2.0, 5.0];
        assert_eq!(
            functional_series(&xs, &Functional::KExceedance(2)).unwrap(),
            vec![1.0, 2.0, 2.0]
        );
        assert_eq!(
            functional_series(&xs, &Functional::KAverage(2)).unwrap(),
            vec![2.5, 3.0, 3.5]
        );
        assert_eq!(functional_series(&xs, &Functional::KExceedance(1)).unwrap(), xs.to_vec());
        assert_eq!(functional_series(&xs, &Functional::KAverage(1)).unwrap(), xs.to_vec());
        assert!(functional_series(&xs[..1], &Functional::KAverage(2)).is_err());
    }

    #[test]
    fn functional_series_window_bounds() {
        let mut rng = stream_rng(3, 0);
        let xs: Vec<f64> = (0..500).map(|_| rng.random::<f64>() * 10.0).collect();
        for k in [2, 3, 7, 16] {
            let mins = functional_series(&xs, &Functional::KExceedance(k)).unwrap();
            let avgs = functional_series(&xs, &Functional::KAverage(k)).unwrap();
            for i in 0..mins.len() {
                let w = &xs[i..i + k];
                let lo = w.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                assert_eq!(mins[i], lo);
                assert!(avgs[i] >= lo - 1e-12 && avgs[i] <= hi + 1e-12);
                assert!(w.iter().all(|&v| mins[i] <= v));
            }
        }
    }

    #[test]
    fn exceedance_composition_near_fixed_point() {
        // Near 0 the window minimum is the last iterate:
        // min_j phi(T^j x) = phi(T^(k-1) x) = lambda^(-(k-1) alpha) phi(x).
        let alpha = 1.0;
        let obs =
            Observable::Frechet { alpha, target: TargetSet::Point(StatePoint::scalar(0.0)) };
        let x = 1e-6;
        for k in 1..=5 {
            let mut rng = stream_rng(0, 0);
            let o = orbit(&MapModel::Doubling, &StatePoint::scalar(x), k, 0.0, &mut rng).unwrap();
            let series = evaluate_series(&obs, &o).unwrap();
            let window_min = functional_series(&series, &Functional::KExceedance(k)).unwrap()[0];
            let last = *series.last().unwrap();
            let predicted = 2.0_f64.powf(-((k - 1) as f64) * alpha) * series[0];
            assert_eq!(window_min, last);
            assert!(
                (window_min - predicted).abs() / predicted < 1e-3,
                "k={k}: {window_min} vs {predicted}"
            );
        }
    }

    #[test]
    fn analytic_two_exceedance_maximum() {
        let (argmax, maxv) = example61_analytic(0.3, 1.0).unwrap();
        assert!(close(argmax, 0.2, 1e-15));
        assert!(close(maxv, 10.0, 1e-12));
        let (_, maxv2) = example61_analytic(0.3, 2.0).unwrap();
        assert!(close(maxv2, 100.0, 1e-10));
        assert!(example61_analytic(0.6, 1.0).is_err());
        assert!(example61_analytic(0.0, 1.0).is_err());
    }

    #[test]
    fn analytic_maximum_matches_grid_search() {
        // Grid oracle over 1e6 points for min(phi(x), phi(2x mod 1)).
        let x0 = 0.3;
        for alpha in [0.5, 1.0, 2.0] {
            let (_, analytic) = example61_analytic(x0, alpha).unwrap();
            let n = 1_000_000;
            let mut best = f64::NEG_INFINITY;
            for i in 0..n {
                let x = (i as f64 + 0.5) / n as f64;
                let phi = |y: f64| circle_dist(y, x0).powf(-alpha);
                best = best.max(phi(x).min(phi(wrap_unit(2.0 * x))));
            }
            assert!(
                (best - analytic).abs() / analytic < 1e-3,
                "alpha={alpha}: grid {best} vs analytic {analytic}"
            );
        }
    }

    #[test]
    fn series_csv_round_trip() {
        let xs = vec![1.5, -2.0, 3.25];
        let mut buf = Vec::new();
        write_series_csv(&mut buf, &xs).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("value\n"));
        let back = read_series_csv(&buf[..]).unwrap();
        assert_eq!(back, xs);
        assert!(read_series_csv(&b"wrong\n1.0\n"[..]).is_err());
    }
}
