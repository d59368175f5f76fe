//! Extreme-value laboratory for chaotic map time series and their windowed
//! functionals.
//!
//! The crate simulates simple uniformly expanding maps (doubling / beta maps,
//! hyperbolic toral automorphisms, all-to-all coupled expanding maps), turns
//! trajectories into observable time series that are maximized on a target
//! set, and studies the extremes of two derived series over sliding windows of
//! length `k`:
//!
//! * the *k-exceedance* `Y_i = min(X_i, ..., X_{i+k-1})` (k successive
//!   over-threshold values, e.g. a k-day heat wave), and
//! * the *k-average* `Y_i = (X_i + ... + X_{i+k-1}) / k`.
//!
//! Block maxima of either series follow a generalized extreme value (GEV)
//! distribution whose parameters are linked to those of the base series by
//! closed-form scaling rules. The crate provides:
//!
//! * [`dynamics`] — map definitions, noisy trajectory simulation, expansion
//!   rates at invariant sets;
//! * [`observables`] — distance observables with Fréchet or Weibull tails,
//!   window functionals, and an analytic benchmark maximum;
//! * [`evt`] — GEV distribution, return levels, parameter transforms, and
//!   maximum-likelihood fitting of block maxima;
//! * [`ei`] — extremal index estimators (interexceedance intervals,
//!   cluster-start ratio) and closed-form values;
//! * [`scaling`] — the scaling-factor algebra `g(k, T)` mapping base GEV
//!   parameters to windowed-functional GEV parameters, plus a Monte Carlo
//!   tail oracle for the doubling-map average case;
//! * [`regress`] — log-linear regressions recovering scaling exponents and
//!   expansion rates from fitted parameter sequences;
//! * [`pipeline`] — block maxima, empirical return levels, experiment
//!   orchestration, climate CSV ingestion, and return-level comparison
//!   tables.

pub mod dynamics;
pub mod ei;
pub mod error;
pub mod evt;
pub mod observables;
pub mod pipeline;
pub mod regress;
pub mod rng;
pub mod scaling;
mod simplex;

pub use error::{Error, Result};
