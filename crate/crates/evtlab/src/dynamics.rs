//! Map classes, trajectory simulation with small additive noise, and exact
//! expansion rates at invariant target sets.
//!
//! Three families of uniformly expanding systems are supported:
//!
//! * `Doubling` / `Beta` — piecewise expanding interval maps `x -> beta x
//!   (mod 1)` on the circle;
//! * `Toral` — hyperbolic automorphisms of the 2-torus from an integer matrix
//!   with determinant +-1 and real positive eigenvalues off the unit circle;
//! * `Coupled` — `m` all-to-all coupled beta maps, whose synchrony diagonal
//!   `x_1 = ... = x_m` is an invariant repelling set.
//!
//! All coordinates live in `[0, 1)`. Simulation adds an independent uniform
//! perturbation in `[-eps, eps]` per coordinate after each deterministic step
//! (the noise law is a fixed implementation choice; only its magnitude is
//! physically meaningful) and reduces mod 1. Without noise a binary-float
//! doubling orbit collapses onto the fixed point 0 in about 1100 steps, so
//! statistical runs use eps > 0.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::TargetSet;
use crate::rng::stream_rng;

/// Largest admissible noise amplitude.
pub const MAX_NOISE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MapModel {
    /// `x -> 2x (mod 1)`.
    Doubling,
    /// `x -> beta x (mod 1)`, `beta > 1`.
    Beta { beta: f64 },
    /// Integer matrix `[[a, b], [c, d]]` acting on the 2-torus.
    Toral { a: i64, b: i64, c: i64, d: i64 },
    /// `m` coupled beta maps: each coordinate moves to
    /// `(1 - gamma) T_beta(x_j) + gamma/m sum_k T_beta(x_k)`.
    Coupled { beta: f64, gamma: f64, m: usize },
}

impl MapModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MapModel::Doubling => Ok(()),
            MapModel::Beta { beta } => {
                if beta > 1.0 && beta.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidInput(format!("beta map requires beta > 1, got {beta}")))
                }
            }
            MapModel::Toral { a, b, c, d } => {
                let det = a * d - b * c;
                if det.abs() != 1 {
                    return Err(Error::InvalidInput(format!(
                        "toral matrix must have determinant +-1, got {det}"
                    )));
                }
                let (lo, hi) = toral_eigenvalues(a, b, c, d)?;
                if lo <= 0.0 {
                    return Err(Error::InvalidInput(
                        "toral matrix must have positive eigenvalues".into(),
                    ));
                }
                if (lo - 1.0).abs() < 1e-12 || (hi - 1.0).abs() < 1e-12 {
                    return Err(Error::InvalidInput(
                        "toral matrix must have no eigenvalue on the unit circle".into(),
                    ));
                }
                Ok(())
            }
            MapModel::Coupled { beta, gamma, m } => {
                if !(beta > 1.0) {
                    return Err(Error::InvalidInput(format!(
                        "coupled map requires beta > 1, got {beta}"
                    )));
                }
                if !(gamma > 0.0 && gamma < 1.0) {
                    return Err(Error::InvalidInput(format!(
                        "coupling constant must be in (0,1), got {gamma}"
                    )));
                }
                if m < 2 {
                    return Err(Error::InvalidInput(format!("coupled map requires m >= 2, got {m}")));
                }
                if (1.0 - gamma) * beta <= 1.0 {
                    return Err(Error::InvalidInput(format!(
                        "transverse expansion requires (1-gamma) beta > 1, got {}",
                        (1.0 - gamma) * beta
                    )));
                }
                Ok(())
            }
        }
    }

    /// Phase-space dimension.
    pub fn dim(&self) -> usize {
        match *self {
            MapModel::Doubling | MapModel::Beta { .. } => 1,
            MapModel::Toral { .. } => 2,
            MapModel::Coupled { m, .. } => m,
        }
    }
}

fn toral_eigenvalues(a: i64, b: i64, c: i64, d: i64) -> Result<(f64, f64)> {
    let tr = (a + d) as f64;
    let det = (a * d - b * c) as f64;
    let disc = tr * tr - 4.0 * det;
    if disc <= 0.0 {
        return Err(Error::InvalidInput("toral matrix must have real distinct eigenvalues".into()));
    }
    let s = disc.sqrt();
    Ok(((tr - s) / 2.0, (tr + s) / 2.0))
}

/// Phase-space point with every coordinate in `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePoint {
    pub coords: Vec<f64>,
}

impl StatePoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    /// One-dimensional point.
    pub fn scalar(x: f64) -> Self {
        Self { coords: vec![x] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Reduce into `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let y = x.rem_euclid(1.0);
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_trajectories: usize,
    pub trajectory_length: usize,
    pub master_seed: u64,
    /// Uniform noise amplitude eps; each coordinate receives an independent
    /// perturbation in `[-eps, eps]` after every deterministic step.
    pub noise_amplitude: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_trajectories: 500,
            trajectory_length: 10_000,
            master_seed: 0,
            noise_amplitude: 1e-8,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trajectories == 0 || self.trajectory_length == 0 {
            return Err(Error::InvalidInput(
                "simulation needs at least one trajectory and one step".into(),
            ));
        }
        if !(0.0..=MAX_NOISE).contains(&self.noise_amplitude) {
            return Err(Error::InvalidInput(format!(
                "noise amplitude must lie in [0, {MAX_NOISE}], got {}",
                self.noise_amplitude
            )));
        }
        Ok(())
    }
}

/// One deterministic step of `map`, all coordinates reduced mod 1.
pub fn step(map: &MapModel, x: &StatePoint) -> Result<StatePoint> {
    if x.dim() != map.dim() {
        return Err(Error::DimensionMismatch { expected: map.dim(), got: x.dim() });
    }
    let coords = match *map {
        MapModel::Doubling => vec![wrap_unit(2.0 * x.coords[0])],
        MapModel::Beta { beta } => vec![wrap_unit(beta * x.coords[0])],
        MapModel::Toral { a, b, c, d } => {
            let (u, v) = (x.coords[0], x.coords[1]);
            vec![wrap_unit(a as f64 * u + b as f64 * v), wrap_unit(c as f64 * u + d as f64 * v)]
        }
        MapModel::Coupled { beta, gamma, m } => {
            let driven: Vec<f64> = x.coords.iter().map(|&c| wrap_unit(beta * c)).collect();
            let mean = driven.iter().sum::<f64>() / m as f64;
            driven.iter().map(|&t| wrap_unit((1.0 - gamma) * t + gamma * mean)).collect()
        }
    };
    Ok(StatePoint::new(coords))
}

/// Orbit of length `len` (including the start) with per-step uniform noise of
/// amplitude `noise` drawn from `rng`. With `noise = 0` no draws are made.
pub fn orbit<R: Rng + ?Sized>(
    map: &MapModel,
    start: &StatePoint,
    len: usize,
    noise: f64,
    rng: &mut R,
) -> Result<Vec<StatePoint>> {
    let mut points = Vec::with_capacity(len);
    points.push(start.clone());
    for _ in 1..len {
        let mut next = step(map, points.last().expect("orbit is non-empty"))?;
        if noise > 0.0 {
            for c in next.coords.iter_mut() {
                *c = wrap_unit(*c + rng.random_range(-noise..=noise));
            }
        }
        points.push(next);
    }
    Ok(points)
}

/// Simulate `cfg.n_trajectories` noisy trajectories from uniformly random
/// initial conditions. Trajectory `i` draws all of its randomness (initial
/// point and noise) from stream `(master_seed, i)`, so the output does not
/// depend on generation order.
pub fn simulate(map: &MapModel, cfg: &SimConfig) -> Result<Vec<Vec<StatePoint>>> {
    map.validate()?;
    cfg.validate()?;
    let dim = map.dim();
    let mut out = Vec::with_capacity(cfg.n_trajectories);
    for i in 0..cfg.n_trajectories {
        let mut rng = stream_rng(cfg.master_seed, i as u64);
        let start = StatePoint::new((0..dim).map(|_| rng.random::<f64>()).collect());
        out.push(orbit(map, &start, cfg.trajectory_length, cfg.noise_amplitude, &mut rng)?);
    }
    Ok(out)
}

/// Expansion rate transverse to an invariant target set: `|DT|` at a fixed
/// point of an interval map, the expanding eigenvalue of a toral matrix, and
/// `(1 - gamma) beta` transverse to the coupled synchrony diagonal.
pub fn expansion_rate(map: &MapModel, target: &TargetSet) -> Result<f64> {
    map.validate()?;
    match (map, target) {
        (MapModel::Coupled { beta, gamma, .. }, TargetSet::SynchronyDiagonal) => {
            Ok((1.0 - gamma) * beta)
        }
        (_, TargetSet::SynchronyDiagonal) => Err(Error::UnsupportedTarget(
            "the synchrony diagonal is a target only for coupled maps".into(),
        )),
        (MapModel::Coupled { .. }, TargetSet::Point(_)) => Err(Error::UnsupportedTarget(
            "point targets are not supported for coupled maps; use the synchrony diagonal".into(),
        )),
        (_, TargetSet::Point(x0)) => {
            if !is_fixed_point(map, x0)? {
                return Err(Error::UnsupportedTarget(format!(
                    "{:?} is not a fixed point of the map",
                    x0.coords
                )));
            }
            match *map {
                MapModel::Doubling => Ok(2.0),
                MapModel::Beta { beta } => Ok(beta),
                MapModel::Toral { a, b, c, d } => Ok(toral_eigenvalues(a, b, c, d)?.1),
                MapModel::Coupled { .. } => unreachable!("handled above"),
            }
        }
    }
}

/// True when `step(map, x)` returns to `x` within wrap-around distance 1e-9
/// in every coordinate.
pub fn is_fixed_point(map: &MapModel, x: &StatePoint) -> Result<bool> {
    let y = step(map, x)?;
    Ok(x.coords.iter().zip(&y.coords).all(|(&a, &b)| {
        let d = (a - b).abs();
        d.min(1.0 - d) < 1e-9
    }))
}

/// CSV export: one row per step with header `traj_id,step,x0[,x1,...]`.
pub fn write_trajectories_csv<W: Write>(mut w: W, trajectories: &[Vec<StatePoint>]) -> Result<()> {
    let dim = trajectories.first().and_then(|t| t.first()).map_or(1, StatePoint::dim);
    let mut header = String::from("traj_id,step");
    for i in 0..dim {
        header.push_str(&format!(",x{i}"));
    }
    writeln!(w, "{header}")?;
    for (id, traj) in trajectories.iter().enumerate() {
        for (s, p) in traj.iter().enumerate() {
            write!(w, "{id},{s}")?;
            for c in &p.coords {
                write!(w, ",{c}")?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_doubling() {
        let y = step(&MapModel::Doubling, &StatePoint::scalar(0.3)).unwrap();
        assert!((y.coords[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn step_toral_wraps() {
        let map = MapModel::Toral { a: 2, b: 1, c: 1, d: 1 };
        let y = step(&map, &StatePoint::new(vec![0.5, 0.5])).unwrap();
        assert!((y.coords[0] - 0.5).abs() < 1e-15);
        assert!(y.coords[1].abs() < 1e-15);
    }

    #[test]
    fn step_coupled_preserves_synchrony() {
        let map = MapModel::Coupled { beta: 3.0, gamma: 0.1, m: 3 };
        let y = step(&map, &StatePoint::new(vec![0.37, 0.37, 0.37])).unwrap();
        assert_eq!(y.coords[0], y.coords[1]);
        assert_eq!(y.coords[1], y.coords[2]);
        // The diagonal dynamics is the bare beta map.
        assert!((y.coords[0] - wrap_unit(3.0 * 0.37)).abs() < 1e-15);
    }

    #[test]
    fn step_rejects_dimension_mismatch() {
        let e = step(&MapModel::Doubling, &StatePoint::new(vec![0.1, 0.2]));
        assert!(matches!(e, Err(Error::DimensionMismatch { expected: 1, got: 2 })));
    }

    #[test]
    fn orbit_without_noise_is_exact() {
        let mut rng = stream_rng(0, 0);
        let o = orbit(&MapModel::Doubling, &StatePoint::scalar(0.3), 3, 0.0, &mut rng).unwrap();
        let xs: Vec<f64> = o.iter().map(|p| p.coords[0]).collect();
        assert!((xs[0] - 0.3).abs() < 1e-15);
        assert!((xs[1] - 0.6).abs() < 1e-15);
        assert!((xs[2] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn simulate_is_deterministic() {
        let map = MapModel::Doubling;
        let cfg = SimConfig { n_trajectories: 4, trajectory_length: 100, ..Default::default() };
        let a = simulate(&map, &cfg).unwrap();
        let b = simulate(&map, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trajectories_do_not_depend_on_batch_size() {
        let map = MapModel::Doubling;
        let small = SimConfig { n_trajectories: 3, trajectory_length: 50, ..Default::default() };
        let large = SimConfig { n_trajectories: 6, trajectory_length: 50, ..Default::default() };
        let a = simulate(&map, &small).unwrap();
        let b = simulate(&map, &large).unwrap();
        assert_eq!(a[..], b[..3]);
    }

    #[test]
    fn noise_frees_trajectory_from_fixed_point() {
        let mut rng = stream_rng(7, 0);
        let o = orbit(&MapModel::Doubling, &StatePoint::scalar(0.0), 200, 1e-8, &mut rng).unwrap();
        assert!(o.iter().any(|p| p.coords[0] > 0.1), "orbit stayed trapped at 0");
    }

    #[test]
    fn unnoised_double_precision_orbit_collapses_to_zero() {
        // Each doubling step shifts the mantissa one bit, so an exact orbit
        // from any binary float reaches 0 within ~1100 steps and stays.
        let mut rng = stream_rng(7, 0);
        let o =
            orbit(&MapModel::Doubling, &StatePoint::scalar(0.2137), 2000, 0.0, &mut rng)
                .unwrap();
        assert_eq!(o.last().unwrap().coords[0], 0.0);
    }

    #[test]
    fn emitted_coordinates_stay_in_unit_interval() {
        for map in [
            MapModel::Doubling,
            MapModel::Beta { beta: 3.0 },
            MapModel::Toral { a: 2, b: 1, c: 1, d: 1 },
            MapModel::Coupled { beta: 3.0, gamma: 0.1, m: 3 },
        ] {
            let cfg = SimConfig {
                n_trajectories: 2,
                trajectory_length: 500,
                master_seed: 5,
                noise_amplitude: 1e-8,
            };
            for traj in simulate(&map, &cfg).unwrap() {
                for p in traj {
                    assert!(p.coords.iter().all(|c| (0.0..1.0).contains(c)), "{:?}", p.coords);
                }
            }
        }
    }

    #[test]
    fn synchrony_diagonal_is_invariant_without_noise() {
        let map = MapModel::Coupled { beta: 3.0, gamma: 0.1, m: 3 };
        let mut rng = stream_rng(1, 0);
        let start = StatePoint::new(vec![0.123456, 0.123456, 0.123456]);
        for p in orbit(&map, &start, 1000, 0.0, &mut rng).unwrap() {
            assert_eq!(p.coords[0], p.coords[1]);
            assert_eq!(p.coords[1], p.coords[2]);
        }
    }

    #[test]
    fn long_noisy_doubling_orbit_is_uniform() {
        // Kolmogorov-Smirnov distance of the empirical distribution from
        // uniform over a 1e6-step orbit. The tiny noise keeps the orbit off
        // the dyadic collapse; see `unnoised_double_precision_orbit_collapses_to_zero`.
        let mut rng = stream_rng(2024, 0);
        let o = orbit(&MapModel::Doubling, &StatePoint::scalar(0.37514), 1_000_000, 1e-8, &mut rng)
            .unwrap();
        let mut xs: Vec<f64> = o.iter().map(|p| p.coords[0]).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = xs.len() as f64;
        let mut ks: f64 = 0.0;
        for (i, x) in xs.iter().enumerate() {
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            ks = ks.max((x - lo).abs()).max((x - hi).abs());
        }
        assert!(ks < 0.01, "KS distance from uniform = {ks}");
    }

    #[test]
    fn expansion_rates() {
        let zero = TargetSet::Point(StatePoint::scalar(0.0));
        assert_eq!(expansion_rate(&MapModel::Doubling, &zero).unwrap(), 2.0);

        let coupled = MapModel::Coupled { beta: 3.0, gamma: 0.1, m: 3 };
        let lam = expansion_rate(&coupled, &TargetSet::SynchronyDiagonal).unwrap();
        assert!((lam - 2.7).abs() < 1e-12);

        // Largest root of x^2 - 3x + 1, independently via the quadratic
        // formula: (3 + sqrt(5)) / 2.
        let toral = MapModel::Toral { a: 2, b: 1, c: 1, d: 1 };
        let origin = TargetSet::Point(StatePoint::new(vec![0.0, 0.0]));
        let lam = expansion_rate(&toral, &origin).unwrap();
        assert!((lam - (3.0 + 5.0_f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!((lam - 2.618033988749895).abs() < 1e-12);
    }

    #[test]
    fn expansion_rate_rejects_non_invariant_target() {
        let p = TargetSet::Point(StatePoint::scalar(0.3));
        assert!(matches!(
            expansion_rate(&MapModel::Doubling, &p),
            Err(Error::UnsupportedTarget(_))
        ));
        assert!(matches!(
            expansion_rate(&MapModel::Doubling, &TargetSet::SynchronyDiagonal),
            Err(Error::UnsupportedTarget(_))
        ));
    }

    #[test]
    fn beta_map_fixed_point_rate() {
        // x = 1/2 solves 3x mod 1 = x.
        let map = MapModel::Beta { beta: 3.0 };
        let p = TargetSet::Point(StatePoint::scalar(0.5));
        assert_eq!(expansion_rate(&map, &p).unwrap(), 3.0);
    }

    #[test]
    fn validation_catches_bad_models() {
        assert!(MapModel::Beta { beta: 0.9 }.validate().is_err());
        // Determinant 0.
        assert!(MapModel::Toral { a: 1, b: 1, c: 1, d: 1 }.validate().is_err());
        // Determinant -1 forces a negative eigenvalue.
        assert!(MapModel::Toral { a: 0, b: 1, c: 1, d: 0 }.validate().is_err());
        assert!(MapModel::Toral { a: 2, b: 1, c: 1, d: 1 }.validate().is_ok());
        assert!(MapModel::Coupled { beta: 3.0, gamma: 0.7, m: 3 }.validate().is_err());
        assert!(MapModel::Coupled { beta: 3.0, gamma: 0.1, m: 1 }.validate().is_err());
        let cfg = SimConfig { noise_amplitude: 1e-3, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn csv_export_shape() {
        let map = MapModel::Toral { a: 2, b: 1, c: 1, d: 1 };
        let cfg = SimConfig {
            n_trajectories: 2,
            trajectory_length: 3,
            master_seed: 0,
            noise_amplitude: 0.0,
        };
        let trajs = simulate(&map, &cfg).unwrap();
        let mut buf = Vec::new();
        write_trajectories_csv(&mut buf, &trajs).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "traj_id,step,x0,x1");
        assert_eq!(text.lines().count(), 1 + 2 * 3);
        assert!(text.lines().nth(1).unwrap().starts_with("0,0,"));
    }
}
