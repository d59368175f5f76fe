//! Derivative-free Nelder-Mead simplex minimizer.
//!
//! Used for GEV likelihood fitting, where the objective is non-smooth at the
//! support boundary and proposals outside the feasible region evaluate to
//! `+inf`.

pub struct SimplexOptions {
    pub max_iter: usize,
    /// Converged when the objective spread over the simplex drops below this.
    pub tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { max_iter: 5000, tol: 1e-8 }
    }
}

pub struct SimplexResult {
    pub x: Vec<f64>,
    pub fmin: f64,
    pub converged: bool,
}

/// Minimize `f` starting from `x0` with the standard reflection/expansion/
/// contraction/shrink coefficients (1, 2, 1/2, 1/2).
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut p = x0.to_vec();
        let step = if p[i].abs() > 1e-4 { 0.05 * p[i] } else { 0.01 };
        p[i] += step;
        simplex.push(p);
    }
    let mut scores: Vec<f64> = simplex.iter().map(|p| f(p)).collect();

    let mut converged = false;
    for _ in 0..opts.max_iter {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| {
            scores[a].partial_cmp(&scores[b]).unwrap_or(std::cmp::Ordering::Equal)
        });
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];

        if scores[best].is_finite() && (scores[worst] - scores[best]).abs() < opts.tol {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; dim];
        for &idx in order.iter().take(dim) {
            for d in 0..dim {
                centroid[d] += simplex[idx][d];
            }
        }
        for c in centroid.iter_mut() {
            *c /= dim as f64;
        }

        let reflect: Vec<f64> = (0..dim)
            .map(|d| centroid[d] + (centroid[d] - simplex[worst][d]))
            .collect();
        let f_reflect = f(&reflect);

        if f_reflect < scores[second_worst] && f_reflect >= scores[best] {
            simplex[worst] = reflect;
            scores[worst] = f_reflect;
            continue;
        }

        if f_reflect < scores[best] {
            let expand: Vec<f64> = (0..dim)
                .map(|d| centroid[d] + 2.0 * (reflect[d] - centroid[d]))
                .collect();
            let f_expand = f(&expand);
            if f_expand < f_reflect {
                simplex[worst] = expand;
                scores[worst] = f_expand;
            } else {
                simplex[worst] = reflect;
                scores[worst] = f_reflect;
            }
            continue;
        }

        let contract: Vec<f64> = (0..dim)
            .map(|d| centroid[d] + 0.5 * (simplex[worst][d] - centroid[d]))
            .collect();
        let f_contract = f(&contract);
        if f_contract < scores[worst] {
            simplex[worst] = contract;
            scores[worst] = f_contract;
            continue;
        }

        // Shrink toward the best vertex.
        let best_point = simplex[best].clone();
        for &idx in order.iter().skip(1) {
            for d in 0..dim {
                simplex[idx][d] = best_point[d] + 0.5 * (simplex[idx][d] - best_point[d]);
            }
            scores[idx] = f(&simplex[idx]);
        }
    }

    let (arg_best, &fmin) = scores
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal))
        .expect("simplex is non-empty");
    SimplexResult { x: simplex[arg_best].clone(), fmin, converged }
}
