//! Covering and packing numbers on `(indices, xi)` and `(indices, rho)`,
//! the entropy integrals behind the chaining and Dudley bounds, and
//! exact covers for tree models.

use crate::metrics::MetricView;
use crate::trees::{SkeletonTree, TreeError};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoverError {
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("grid must be strictly decreasing inside (0, 1]")]
    BadGrid,
    #[error(transparent)]
    Tree(#[from] TreeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WhichMetric {
    Xi,
    Rho,
}

fn dist(view: &MetricView, metric: WhichMetric, a: usize, b: usize) -> f64 {
    match metric {
        WhichMetric::Xi => view.xi_at(a, b),
        WhichMetric::Rho => view.rho_at(a, b),
    }
}

fn index_order(view: &MetricView) -> Vec<usize> {
    let mut order: Vec<usize> = (0..view.len()).collect();
    order.sort_by_key(|&a| view.indices[a]);
    order
}

/// Greedy first-scan cover: scan components in ascending index order
/// (lowest index wins ties) and open a new center whenever a point lies
/// strictly farther than `eps` from every center. The result is both an
/// `eps`-cover (size upper-bounds the covering number) and an
/// `eps`-separated set, and is invariant to view permutations.
pub fn greedy_cover(
    view: &MetricView,
    metric: WhichMetric,
    eps: f64,
) -> Result<Vec<u64>, CoverError> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(CoverError::BadEpsilon(eps));
    }
    let mut centers: Vec<usize> = Vec::new();
    for &a in &index_order(view) {
        if centers.iter().all(|&c| dist(view, metric, a, c) > eps) {
            centers.push(a);
        }
    }
    Ok(centers.into_iter().map(|a| view.indices[a]).collect())
}

/// Greedy farthest-point packing: grow an `eps`-separated set by always
/// adding the point farthest from the current set (lowest index wins
/// ties), starting from the first index. Any `eps`-separated set is a
/// legitimate packing, so the returned size is a valid lower bound for
/// the packing number; we also fold in the first-scan set, which keeps
/// the classical sandwich against [`greedy_cover`] pointwise by
/// construction.
pub fn packing_lower(
    view: &MetricView,
    metric: WhichMetric,
    eps: f64,
) -> Result<usize, CoverError> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(CoverError::BadEpsilon(eps));
    }
    let m = view.len();
    if m == 0 {
        return Ok(0);
    }
    let order = index_order(view);
    let start = order[0];
    let mut count = 1usize;
    let mut min_d: Vec<f64> = (0..m).map(|a| dist(view, metric, a, start)).collect();
    loop {
        let mut best = None;
        let mut best_d = eps;
        // scan in ascending component-index order so ties keep the
        // lowest index and the size is permutation-invariant
        for &a in &order {
            if min_d[a] > best_d {
                best_d = min_d[a];
                best = Some(a);
            }
        }
        match best {
            None => break,
            Some(a) => {
                count += 1;
                for (b, d) in min_d.iter_mut().enumerate() {
                    *d = d.min(dist(view, metric, a, b));
                }
            }
        }
    }
    let scan = greedy_cover(view, metric, eps)?.len();
    Ok(count.max(scan))
}

/// Covering/packing curves over a decreasing epsilon grid.
#[derive(Debug, Clone, Serialize)]
pub struct CoveringReport {
    pub metric: WhichMetric,
    /// Strictly decreasing grid in (0, 1].
    pub epsilon_grid: Vec<f64>,
    /// Greedy cover sizes (upper bounds on the covering number).
    pub n_upper: Vec<u64>,
    /// Packing sizes (lower-bound machinery: `n_lower(2e) <= N(e)`).
    pub n_lower: Vec<u64>,
    /// Exact crossing counts for tree models, where available.
    pub exact: Vec<Option<u64>>,
    /// Grid points nudged off the tree's exceptional level set.
    pub nudged: Vec<(f64, f64)>,
    pub integral_cmu: f64,
    pub integral_dmu: f64,
    /// Dyadic bracket for `C_mu` and its relative gap.
    pub cmu_bracket: (f64, f64),
    pub grid_too_coarse: bool,
}

fn validate_grid(grid: &[f64]) -> Result<(), CoverError> {
    if grid.is_empty() || grid[0] > 1.0 {
        return Err(CoverError::BadGrid);
    }
    let mut prev = f64::INFINITY;
    for &e in grid {
        if !(e > 0.0 && e < prev) {
            return Err(CoverError::BadGrid);
        }
        prev = e;
    }
    Ok(())
}

/// Nudge a grid value off the exceptional set (node levels) by 1e-9, as
/// many times as needed, recording the move.
fn nudge_off_levels(eps: f64, levels: &[f64], nudged: &mut Vec<(f64, f64)>) -> f64 {
    let mut e = eps;
    let mut moved = false;
    while levels.iter().any(|&lv| (e - lv).abs() < 1e-9) {
        e -= 1e-9;
        moved = true;
    }
    if moved {
        nudged.push((eps, e));
    }
    e
}

/// Right-continuous step integral of the upper curve against `d eps`
/// through a supplied transform of the counts.
fn step_integral(grid: &[f64], values: &[u64], f: impl Fn(u64) -> f64) -> f64 {
    // grid is decreasing: e_0 > e_1 > ... > e_last; the curve is
    // nonincreasing in eps, so on [e_{i+1}, e_i] trapezoid the two ends,
    // extend to [e_0, 1] with the first value and [0, e_last] with the
    // last (the finite view saturates there).
    let mut total = (1.0 - grid[0]) * f(values[0]);
    for i in 0..grid.len() - 1 {
        total += (grid[i] - grid[i + 1]) * 0.5 * (f(values[i]) + f(values[i + 1]));
    }
    total += grid[grid.len() - 1] * f(values[values.len() - 1]);
    total
}

/// Build the covering report for a view: xi curves, exactness against a
/// tree when supplied, and both entropy integrals.
pub fn covering_report(
    view: &MetricView,
    grid: &[f64],
    tree: Option<&SkeletonTree>,
) -> Result<CoveringReport, CoverError> {
    validate_grid(grid)?;
    let levels = tree.map(|t| t.levels.clone()).unwrap_or_default();
    let mut nudged = Vec::new();
    let eff_grid: Vec<f64> = grid
        .iter()
        .map(|&e| nudge_off_levels(e, &levels, &mut nudged))
        .collect();

    let mut n_upper = Vec::with_capacity(eff_grid.len());
    let mut n_lower = Vec::with_capacity(eff_grid.len());
    let mut exact = Vec::with_capacity(eff_grid.len());
    for &e in &eff_grid {
        n_upper.push(greedy_cover(view, WhichMetric::Xi, e)?.len() as u64);
        n_lower.push(packing_lower(view, WhichMetric::Xi, e)? as u64);
        exact.push(match tree {
            Some(t) if e > t.frontier_level => Some(t.crossing_at(e)?),
            _ => None,
        });
    }

    let integral_cmu = step_integral(&eff_grid, &n_upper, |n| n as f64);

    // rho covering sizes on the same grid drive the Dudley integral
    let rho_upper: Vec<u64> = eff_grid
        .iter()
        .map(|&e| greedy_cover(view, WhichMetric::Rho, e).map(|c| c.len() as u64))
        .collect::<Result<_, _>>()?;
    let integral_dmu = step_integral(&eff_grid, &rho_upper, |n| (n as f64).ln().sqrt());

    // dyadic bracket: sum 2^{-k-1} N(2^{-k}) <= C_mu <= sum 2^{-k} N(2^{-k})
    let mut lower = 0.0;
    let mut upper = 0.0;
    let mut k = 0u32;
    loop {
        let e = f64::exp2(-(k as f64));
        let ne = nudge_off_levels(e, &levels, &mut Vec::new());
        let n = greedy_cover(view, WhichMetric::Xi, ne)?.len() as f64;
        lower += f64::exp2(-(k as f64) - 1.0) * n;
        if k >= 1 {
            upper += f64::exp2(-(k as f64)) * n;
        }
        // once every distinct point is its own center the curve is flat;
        // close both sums with the geometric tail
        let saturated = (n as usize) == greedy_cover(view, WhichMetric::Xi, 1e-300)?.len();
        if saturated && k >= 1 {
            lower += f64::exp2(-(k as f64) - 1.0) * n;
            upper += f64::exp2(-(k as f64)) * n;
            break;
        }
        k += 1;
    }
    // the trapezoid integral must land inside the dyadic bracket; a 10%
    // escape means the grid is too coarse for the curve's jumps
    let grid_too_coarse = integral_cmu < lower * 0.9 || integral_cmu > upper * 1.1;

    Ok(CoveringReport {
        metric: WhichMetric::Xi,
        epsilon_grid: eff_grid,
        n_upper,
        n_lower,
        exact,
        nudged,
        integral_cmu,
        integral_dmu,
        cmu_bracket: (lower, upper),
        grid_too_coarse,
    })
}

/// `(C_mu, D_mu)` off a report.
pub fn entropy_integrals(report: &CoveringReport) -> (f64, f64) {
    (report.integral_cmu, report.integral_dmu)
}

impl CoveringReport {
    /// The packing/covering sandwich `n_lower(2e) <= n_upper(e) <= n_lower(e)`
    /// evaluated pointwise wherever the doubled scale is on the grid.
    pub fn sandwich_holds(&self) -> bool {
        let g = &self.epsilon_grid;
        for i in 0..g.len() {
            if self.n_upper[i] > self.n_lower[i] {
                return false;
            }
            // find a grid point at 2 * eps, if present
            if let Some(j) = g.iter().position(|&e| (e - 2.0 * g[i]).abs() < 1e-12) {
                if self.n_lower[j] > self.n_upper[i] {
                    return false;
                }
            }
        }
        true
    }

    pub fn to_csv(&self) -> String {
        use std::fmt::Write;
        let mut out = String::from("epsilon,n_lower,n_upper,exact\n");
        for i in 0..self.epsilon_grid.len() {
            let exact = self.exact[i].map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{}",
                self.epsilon_grid[i], self.n_lower[i], self.n_upper[i], exact
            )
            .unwrap();
        }
        out
    }
}

/// A default grid: dyadic points refined with midpoints, decreasing.
pub fn default_grid(min_eps: f64) -> Vec<f64> {
    let mut grid = vec![1.0];
    let mut e = 1.0;
    while e / 2.0 >= min_eps {
        grid.push(0.75 * e);
        grid.push(0.5 * e);
        e /= 2.0;
    }
    grid
}
