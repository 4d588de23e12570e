//! The two metric structures on component indices.
//!
//! `xi(i,j) = P(X_i != X_j) = p_i + p_j - 2 r_ij` is the disagreement
//! pseudometric; `rho = f(xi)` with
//! `f(x) = min(2/sqrt(3), sqrt(2 / log(2/x)))`, `f(0) = 0`, is the scale
//! under which centered increments are subgaussian.

use crate::process::ProcessSpec;
use crate::rng::{SeedLineage, Stream, StreamClass, StreamId};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("index {0} not present in this view")]
    IndexUnknown(u64),
    #[error("metric axiom check needs at least 3 indices")]
    TooFewIndices,
    #[error(transparent)]
    Process(#[from] crate::process::ProcessError),
    #[error("view document malformed: {0}")]
    BadDocument(String),
}

/// `2 / sqrt(3)`, the cap of the subgaussian metric.
pub const RHO_CAP: f64 = 1.1547005383792515;

/// The crossover point `2 e^{-3/2}` where both branches of `f` meet.
pub const RHO_CROSSOVER: f64 = 0.44626032029685964;

/// `f(x) = min(2/sqrt(3), sqrt(2/log(2/x)))` with `f(0) = 0`; ties at
/// the cap resolve to the cap value.
pub fn rho_of_xi(xi: f64) -> f64 {
    if xi <= 0.0 {
        return 0.0;
    }
    let branch = (2.0 / (2.0 / xi).ln()).sqrt();
    branch.min(RHO_CAP)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MomentSource {
    ClosedForm,
    Empirical { samples: u64 },
}

/// Cached means and cross moments over a finite index set; serves `xi`
/// and `rho` queries.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricView {
    pub indices: Vec<u64>,
    pub p: Vec<f64>,
    /// Row-major symmetric table, `r[a * m + b]`.
    pub r: Vec<f64>,
    /// Standard errors for `r` (empirical views only).
    pub r_se: Option<Vec<f64>>,
    pub source: MomentSource,
}

impl MetricView {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    fn pos(&self, i: u64) -> Result<usize, MetricsError> {
        self.indices
            .iter()
            .position(|&x| x == i)
            .ok_or(MetricsError::IndexUnknown(i))
    }

    #[inline]
    pub fn r_at(&self, a: usize, b: usize) -> f64 {
        self.r[a * self.len() + b]
    }

    /// `xi` by position in the view.
    #[inline]
    pub fn xi_at(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        (self.p[a] + self.p[b] - 2.0 * self.r_at(a, b)).max(0.0)
    }

    #[inline]
    pub fn rho_at(&self, a: usize, b: usize) -> f64 {
        rho_of_xi(self.xi_at(a, b))
    }

    /// `xi` by component index.
    pub fn xi(&self, i: u64, j: u64) -> Result<f64, MetricsError> {
        Ok(self.xi_at(self.pos(i)?, self.pos(j)?))
    }

    pub fn rho(&self, i: u64, j: u64) -> Result<f64, MetricsError> {
        Ok(self.rho_at(self.pos(i)?, self.pos(j)?))
    }

    /// Closed-form view from the catalog moments.
    pub fn closed_form(spec: &ProcessSpec, indices: &[u64]) -> Result<Self, MetricsError> {
        let m = indices.len();
        let mut p = Vec::with_capacity(m);
        for &i in indices {
            p.push(spec.mean(i)?);
        }
        let mut r = vec![0.0; m * m];
        // avoid rebuilding the skeleton per pair for tree views
        if let crate::process::KindParams::WideTree { levels, counts } = &spec.params {
            let tree = crate::trees::build_skeleton(levels, counts, None)
                .map_err(|e| MetricsError::BadDocument(e.to_string()))?;
            for a in 0..m {
                for b in a..m {
                    let v = if a == b {
                        p[a]
                    } else {
                        let d = tree
                            .leaf_distance_by_index(indices[a], indices[b])
                            .map_err(|e| MetricsError::BadDocument(e.to_string()))?;
                        0.5 - d / 2.0
                    };
                    r[a * m + b] = v;
                    r[b * m + a] = v;
                }
            }
        } else {
            for a in 0..m {
                for b in a..m {
                    let v = spec.cross_moment(indices[a], indices[b])?;
                    r[a * m + b] = v;
                    r[b * m + a] = v;
                }
            }
        }
        Ok(MetricView {
            indices: indices.to_vec(),
            p,
            r,
            r_se: None,
            source: MomentSource::ClosedForm,
        })
    }

    /// Long-format CSV (`i,j,r_ij`, diagonal carries the means) behind a
    /// JSON header comment.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write;
        let header = serde_json::json!({
            "indices": self.indices,
            "source": self.source,
        });
        let mut out = format!("# {header}\ni,j,r_ij\n");
        let m = self.len();
        for a in 0..m {
            for b in a..m {
                writeln!(
                    out,
                    "{},{},{}",
                    self.indices[a],
                    self.indices[b],
                    self.r_at(a, b)
                )
                .unwrap();
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, MetricsError> {
        let mut lines = text.lines();
        let head = lines
            .next()
            .ok_or_else(|| MetricsError::BadDocument("empty".into()))?;
        let head = head
            .strip_prefix("# ")
            .ok_or_else(|| MetricsError::BadDocument("missing JSON header".into()))?;
        let meta: serde_json::Value =
            serde_json::from_str(head).map_err(|e| MetricsError::BadDocument(e.to_string()))?;
        let indices: Vec<u64> = serde_json::from_value(meta["indices"].clone())
            .map_err(|e| MetricsError::BadDocument(e.to_string()))?;
        let source: MomentSource = serde_json::from_value(meta["source"].clone())
            .map_err(|e| MetricsError::BadDocument(e.to_string()))?;
        let m = indices.len();
        let mut r = vec![f64::NAN; m * m];
        for line in lines.skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let bad = || MetricsError::BadDocument(format!("bad row {line:?}"));
            let i: u64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let j: u64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let v: f64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let a = indices
                .iter()
                .position(|&x| x == i)
                .ok_or(MetricsError::IndexUnknown(i))?;
            let b = indices
                .iter()
                .position(|&x| x == j)
                .ok_or(MetricsError::IndexUnknown(j))?;
            r[a * m + b] = v;
            r[b * m + a] = v;
        }
        if r.iter().any(|v| v.is_nan()) {
            return Err(MetricsError::BadDocument("incomplete moment table".into()));
        }
        let p = (0..m).map(|a| r[a * m + a]).collect();
        Ok(MetricView {
            indices,
            p,
            r,
            r_se: None,
            source,
        })
    }
}

/// Estimate a view from pooled samples (`replicates` batches of `n`),
/// with standard errors attached. A single pass produces `r` already
/// symmetric; `r_ii` equals the empirical mean exactly.
pub fn empirical_moments(
    spec: &ProcessSpec,
    indices: &[u64],
    n: usize,
    replicates: u64,
    master_seed: u64,
) -> Result<MetricView, MetricsError> {
    let model = crate::latent::local_model(spec, indices)
        .map_err(|e| MetricsError::BadDocument(e.to_string()))?;
    let m = indices.len();
    let mut pair_counts = vec![0u64; m * m];
    let mut total = 0u64;
    for rep in 0..replicates {
        let batch = crate::sampling::sample_model(&model, n, SeedLineage::new(master_seed, rep));
        total += n as u64;
        for s in 0..n {
            let row = &batch.values[s * m..(s + 1) * m];
            for a in 0..m {
                if row[a] == 1 {
                    for b in a..m {
                        if row[b] == 1 {
                            pair_counts[a * m + b] += 1;
                        }
                    }
                }
            }
        }
    }
    let big_n = total as f64;
    let mut r = vec![0.0; m * m];
    let mut se = vec![0.0; m * m];
    for a in 0..m {
        for b in a..m {
            let v = pair_counts[a * m + b] as f64 / big_n;
            let s = (v * (1.0 - v) / big_n).sqrt();
            r[a * m + b] = v;
            r[b * m + a] = v;
            se[a * m + b] = s;
            se[b * m + a] = s;
        }
    }
    let p = (0..m).map(|a| r[a * m + a]).collect();
    Ok(MetricView {
        indices: indices.to_vec(),
        p,
        r,
        r_se: Some(se),
        source: MomentSource::Empirical { samples: total },
    })
}

/// Triangle/symmetry audit of a view.
#[derive(Debug, Clone, Serialize)]
pub struct AxiomReport {
    pub triples_checked: u64,
    pub max_xi_triangle_violation: f64,
    pub max_rho_triangle_violation: f64,
    pub max_symmetry_violation: f64,
    /// Distinct index pairs at xi = 0 (identity-of-indiscernibles
    /// quotient, reported but not counted as a violation).
    pub quotient_pairs: u64,
}

/// Check the metric axioms on all triples when feasible, otherwise on
/// `max_triples` seeded random triples.
pub fn metric_axiom_check(
    view: &MetricView,
    max_triples: u64,
    seed: u64,
) -> Result<AxiomReport, MetricsError> {
    let m = view.len();
    if m < 3 {
        return Err(MetricsError::TooFewIndices);
    }
    let total = m as u64 * (m as u64 - 1) * (m as u64 - 2) / 6;
    let mut max_xi = 0.0f64;
    let mut max_rho = 0.0f64;
    let mut checked = 0u64;
    let mut probe = |a: usize, b: usize, c: usize| {
        let (xab, xbc, xac) = (view.xi_at(a, b), view.xi_at(b, c), view.xi_at(a, c));
        let (rab, rbc, rac) = (rho_of_xi(xab), rho_of_xi(xbc), rho_of_xi(xac));
        for (x, y, z) in [(xac, xab, xbc), (xab, xac, xbc), (xbc, xab, xac)] {
            max_xi = max_xi.max(x - y - z);
        }
        for (x, y, z) in [(rac, rab, rbc), (rab, rac, rbc), (rbc, rab, rac)] {
            max_rho = max_rho.max(x - y - z);
        }
    };
    if total <= max_triples {
        for a in 0..m {
            for b in (a + 1)..m {
                for c in (b + 1)..m {
                    probe(a, b, c);
                    checked += 1;
                }
            }
        }
    } else {
        let s = Stream::new(
            SeedLineage::new(seed, 0),
            StreamId::new(StreamClass::Aux, 1),
        );
        let mut j = 0u64;
        while checked < max_triples {
            let a = (s.unit(j) * m as f64) as usize % m;
            let b = (s.unit(j + 1) * m as f64) as usize % m;
            let c = (s.unit(j + 2) * m as f64) as usize % m;
            j += 3;
            if a == b || b == c || a == c {
                continue;
            }
            probe(a, b, c);
            checked += 1;
        }
    }
    let mut quotient = 0u64;
    let mut max_sym = 0.0f64;
    for a in 0..m {
        for b in (a + 1)..m {
            if view.xi_at(a, b) <= 1e-15 {
                quotient += 1;
            }
            max_sym = max_sym.max((view.xi_at(a, b) - view.xi_at(b, a)).abs());
        }
    }
    Ok(AxiomReport {
        triples_checked: checked,
        max_xi_triangle_violation: max_xi,
        max_rho_triangle_violation: max_rho,
        max_symmetry_violation: max_sym,
        quotient_pairs: quotient,
    })
}

/// Worst second difference of `f` on a uniform grid over
/// `[0, RHO_CROSSOVER]`: positive values mean a concavity violation.
pub fn rho_concavity_violation(grid_points: usize) -> f64 {
    let h = RHO_CROSSOVER / (grid_points + 1) as f64;
    let mut worst = f64::NEG_INFINITY;
    for i in 1..=grid_points {
        let x = i as f64 * h;
        let second = rho_of_xi(x + h) + rho_of_xi(x - h) - 2.0 * rho_of_xi(x);
        worst = worst.max(second);
    }
    worst
}
