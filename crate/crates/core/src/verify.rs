//! Property suites: executable versions of the structural identities
//! and inequalities the catalog constructions satisfy.

use crate::delta::{estimate_delta, DeltaError, DeltaOptions, EstimatorMode};
use crate::latent::local_model;
use crate::metrics::{rho_concavity_violation, rho_of_xi, RHO_CAP, RHO_CROSSOVER};
use crate::process::{
    cubic_block_start, gamma_delta, one_minus_delta, pow2_neg, KindParams, MeanRule, ProcessSpec,
};
use crate::rng::{SeedLineage, Stream, StreamClass, StreamId};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("process has a positively correlated pair ({i},{j}): r={r}, p_i p_j={pp}")]
    CovarianceSignViolation { i: u64, j: u64, r: f64, pp: f64 },
    #[error("witness incomplete: {0}")]
    WitnessIncomplete(String),
    #[error(transparent)]
    Process(#[from] crate::process::ProcessError),
    #[error(transparent)]
    Latent(#[from] crate::latent::LatentError),
    #[error(transparent)]
    Sampling(#[from] crate::sampling::SamplingError),
    #[error(transparent)]
    Delta(#[from] DeltaError),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CheckStatus {
    Pass,
    Fail,
    Inconclusive,
}

/// Outcome of one check: reproducible from `(name, params, seed)`.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub status: CheckStatus,
    /// Worst-case margin; the sign convention is "nonnegative passes".
    pub margin: f64,
    pub tolerance: f64,
    pub params: serde_json::Value,
    pub seed: u64,
}

impl CheckReport {
    fn from_margin(
        name: &str,
        margin: f64,
        tolerance: f64,
        params: serde_json::Value,
        seed: u64,
    ) -> Self {
        CheckReport {
            name: name.to_string(),
            status: if margin >= -tolerance {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            margin,
            tolerance,
            params,
            seed,
        }
    }
}

/// Probe indices: the first `per_block` components of each cubic block
/// up to `max_block` (capped at block 4, past which component indices
/// leave the u64 range; moments only depend on blocks anyway).
pub fn block_probe_indices(max_block: u64, per_block: u64) -> Vec<u64> {
    let mut idx = Vec::new();
    for k in 1..=max_block.min(4) {
        let start = cubic_block_start(k);
        let size = crate::process::cubic_block_size(k).min(per_block as f64) as u64;
        idx.extend(start..start + size);
    }
    idx
}

/// The covariance-twin identity: mu and nu agree on every cross moment.
/// Probed over all block pairs `k, l <= max_block` (in-block pairs
/// included), plus index-level spot checks within the u64 range.
pub fn check_covariance_twins(max_block: u64) -> Result<CheckReport, VerifyError> {
    use crate::process::{mu_cross_block, nu_cross_block};
    let mut worst = 0.0f64;
    let mut pairs = 0u64;
    for k in 1..=max_block {
        for l in k..=max_block {
            worst = worst.max((mu_cross_block(k, l) - nu_cross_block(k, l)).abs());
            pairs += 1;
        }
    }
    let trunc = 1u64 << 62;
    let mu = ProcessSpec::new(
        KindParams::BlockMu {
            block_size_override: None,
        },
        trunc,
    )?;
    let nu = ProcessSpec::new(
        KindParams::BlockNu {
            block_size_override: None,
        },
        trunc,
    )?;
    let probes = block_probe_indices(max_block, 2);
    for (a, &i) in probes.iter().enumerate() {
        for &j in &probes[a..] {
            worst = worst.max((mu.cross_moment(i, j)? - nu.cross_moment(i, j)?).abs());
            pairs += 1;
        }
    }
    Ok(CheckReport::from_margin(
        "covariance_twins",
        1e-12 - worst,
        0.0,
        serde_json::json!({"max_block": max_block, "pairs": pairs, "worst": worst}),
        0,
    ))
}

/// The twins also share every third-order moment: probed over all block
/// triples `<= max_block` and index-level spot checks.
pub fn check_third_moments(max_block: u64) -> Result<CheckReport, VerifyError> {
    use crate::process::{mu_third_block, nu_third_block};
    let mut worst = 0.0f64;
    let mut count = 0u64;
    for a in 1..=max_block {
        for b in a..=max_block {
            for c in b..=max_block {
                worst = worst.max((mu_third_block(a, b, c) - nu_third_block(a, b, c)).abs());
                count += 1;
            }
        }
    }
    let trunc = 1u64 << 62;
    let mu = ProcessSpec::new(
        KindParams::BlockMu {
            block_size_override: None,
        },
        trunc,
    )?;
    let nu = ProcessSpec::new(
        KindParams::BlockNu {
            block_size_override: None,
        },
        trunc,
    )?;
    let probes = block_probe_indices(max_block, 3);
    for (a, &i) in probes.iter().enumerate() {
        for (b, &j) in probes.iter().enumerate().skip(a + 1) {
            for &k in &probes[b + 1..] {
                let d = (mu.third_moment(i, j, k)? - nu.third_moment(i, j, k)?).abs();
                worst = worst.max(d);
                count += 1;
            }
        }
    }
    Ok(CheckReport::from_margin(
        "third_moments",
        1e-12 - worst,
        0.0,
        serde_json::json!({"max_block": max_block, "triples": count, "worst": worst}),
        0,
    ))
}

/// Residuals of the block-nu defining equations for k in [1, k_max],
/// plus the `gamma_k ~ delta_k ~ 2^{-k-1}` asymptotics for k >= 10.
pub fn check_gamma_delta(k_max: u64) -> CheckReport {
    let mut worst_res = 0.0f64;
    let mut worst_ratio = 0.0f64;
    for k in 1..=k_max {
        let (g, d) = gamma_delta(k);
        let u = one_minus_delta(k);
        let c = pow2_neg(k);
        worst_res = worst_res.max((u * g * (2.0 - g) - c).abs());
        worst_res = worst_res.max((g + d - g * d - c).abs());
        if k >= 10 {
            let half_c = pow2_neg(k + 1);
            worst_ratio = worst_ratio.max((g / half_c - 1.0).abs());
            worst_ratio = worst_ratio.max((d / half_c - 1.0).abs());
        }
    }
    let margin = (1e-12 - worst_res).min(0.05 - worst_ratio);
    CheckReport::from_margin(
        "gamma_delta",
        margin,
        0.0,
        serde_json::json!({"k_max": k_max, "worst_residual": worst_res, "worst_ratio_error": worst_ratio}),
        0,
    )
}

/// Grid for the subgaussian-increment inequality.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MgfGrid {
    pub p_steps: usize,
    pub r_steps: usize,
    pub t_steps: usize,
    pub t_max: f64,
}

impl Default for MgfGrid {
    fn default() -> Self {
        MgfGrid {
            p_steps: 99,
            r_steps: 11,
            t_steps: 11,
            t_max: 10.0,
        }
    }
}

/// Verify `E exp(t[(X_i - p_i) - (X_j - p_j)]) <= exp(t^2 / log(2/xi))`
/// over a grid of marginals, feasible cross moments and t >= 0. The
/// left side is the exact four-atom expectation.
pub fn check_mgf_bound(grid: MgfGrid) -> CheckReport {
    let mut min_slack = f64::INFINITY;
    let mut cells = 0u64;
    let ts: Vec<(f64, f64, f64)> = (0..grid.t_steps)
        .map(|ti| {
            let t = grid.t_max * ti as f64 / (grid.t_steps - 1) as f64;
            (t, t.exp(), (-t).exp())
        })
        .collect();
    for pi_i in 1..=grid.p_steps {
        let p1 = pi_i as f64 / (grid.p_steps + 1) as f64;
        for pj_i in 1..=grid.p_steps {
            let p2 = pj_i as f64 / (grid.p_steps + 1) as f64;
            let lo = (p1 + p2 - 1.0).max(0.0);
            let hi = p1.min(p2);
            for ri in 0..grid.r_steps {
                let r = lo + (hi - lo) * ri as f64 / (grid.r_steps - 1) as f64;
                let xi = p1 + p2 - 2.0 * r;
                if xi <= 1e-12 {
                    continue; // the bound degenerates at xi = 0
                }
                let log_2_xi = (2.0 / xi).ln();
                for &(t, et, emt) in &ts {
                    // atoms of X_i - X_j: +1 w.p. p1-r, -1 w.p. p2-r, 0 else
                    let lhs = (-t * (p1 - p2)).exp()
                        * ((p1 - r) * et + (p2 - r) * emt + (1.0 - p1 - p2 + 2.0 * r));
                    let rhs = (t * t / log_2_xi).exp();
                    let slack = rhs - lhs;
                    if slack < min_slack {
                        min_slack = slack;
                    }
                    cells += 1;
                }
            }
        }
    }
    CheckReport::from_margin(
        "mgf_bound",
        min_slack + 1e-9,
        0.0,
        serde_json::json!({"cells": cells, "min_slack": min_slack, "grid": grid}),
        0,
    )
}

/// The subgaussian scale is a metric: `f` is nonnegative, nondecreasing
/// and concave with `f^{-1}(0) = {0}`, the two branches meet at the
/// crossover, and metric triples map to metric triples.
pub fn check_rho_is_metric(triples: u64, seed: u64) -> CheckReport {
    let concavity = rho_concavity_violation(10_000);
    let crossover_gap = (rho_of_xi(RHO_CROSSOVER) - RHO_CAP).abs();
    let zero = rho_of_xi(0.0);
    // sample xi triples satisfying the triangle inequality in [0,1]
    let s = Stream::new(
        SeedLineage::new(seed, 0),
        StreamId::new(StreamClass::Aux, 2),
    );
    let mut worst_triangle = 0.0f64;
    let mut got = 0u64;
    let mut j = 0u64;
    while got < triples {
        let (a, b, c) = (s.unit(j), s.unit(j + 1), s.unit(j + 2));
        j += 3;
        if a > b + c || b > a + c || c > a + b {
            continue;
        }
        got += 1;
        let (fa, fb, fc) = (rho_of_xi(a), rho_of_xi(b), rho_of_xi(c));
        worst_triangle = worst_triangle
            .max(fa - fb - fc)
            .max(fb - fa - fc)
            .max(fc - fa - fb);
    }
    let margin = (1e-9 - concavity)
        .min(1e-12 - crossover_gap)
        .min(1e-12 - worst_triangle)
        .min(if zero == 0.0 { 0.0 } else { -1.0 });
    CheckReport::from_margin(
        "rho_is_metric",
        margin,
        0.0,
        serde_json::json!({
            "concavity_violation": concavity,
            "crossover_gap": crossover_gap,
            "triangle_violation": worst_triangle,
            "triples": got,
        }),
        seed,
    )
}

fn assert_nonpositive_covariance(spec: &ProcessSpec, probes: &[u64]) -> Result<(), VerifyError> {
    for (a, &i) in probes.iter().enumerate() {
        for &j in &probes[a + 1..] {
            let r = spec.cross_moment(i, j)?;
            let pp = spec.mean(i)? * spec.mean(j)?;
            if r > pp + 1e-12 {
                return Err(VerifyError::CovarianceSignViolation { i, j, r, pp });
            }
        }
    }
    Ok(())
}

/// Exact decoupling check for small processes: `P(Z > 0) >= P(Z~ > 0)/2`
/// where `Z` sums the components and `Z~` their independent version,
/// both by exhaustive latent enumeration.
pub fn check_pz_decoupling(spec: &ProcessSpec, d: u64) -> Result<CheckReport, VerifyError> {
    let indices: Vec<u64> = (1..=d.min(spec.truncation)).collect();
    assert_nonpositive_covariance(spec, &indices)?;
    let model = local_model(spec, &indices)?;
    let pmf = model.joint_pmf()?;
    let p_z = 1.0 - pmf[0];
    // marginals from the same pmf
    let mut p_tilde_none = 1.0;
    for c in 0..indices.len() {
        let p_c: f64 = pmf
            .iter()
            .enumerate()
            .filter(|(key, _)| key >> c & 1 == 1)
            .map(|(_, &v)| v)
            .sum();
        p_tilde_none *= 1.0 - p_c;
    }
    let p_z_tilde = 1.0 - p_tilde_none;
    let margin = p_z - 0.5 * p_z_tilde;
    Ok(CheckReport::from_margin(
        &format!("pz_decoupling_{}", spec.kind_name()),
        margin,
        0.0,
        serde_json::json!({"d": indices.len(), "p_z": p_z, "p_z_tilde": p_z_tilde}),
        0,
    ))
}

/// Monte Carlo decoupling check `Delta_n(mu) >= Delta_n(mu~)/4` for a
/// spec with nonpositive pairwise covariances, at joint CI slack. The
/// reverse direction carries no claimed constant and is not tested.
pub fn check_delta_decoupling(
    spec: &ProcessSpec,
    n: usize,
    replicates: u64,
    seed: u64,
) -> Result<CheckReport, VerifyError> {
    let indices: Vec<u64> = (1..=spec.truncation).collect();
    assert_nonpositive_covariance(spec, &indices)?;
    let means: Vec<f64> = indices
        .iter()
        .map(|&i| spec.mean(i))
        .collect::<Result<_, _>>()?;
    let product = ProcessSpec::new(
        KindParams::Product {
            rule: MeanRule::Explicit { values: means },
        },
        spec.truncation,
    )?;
    let opts = DeltaOptions {
        ci_level: 0.99,
        ..DeltaOptions::default()
    };
    let est = estimate_delta(spec, n, replicates, EstimatorMode::Enumerated, seed, &opts)?;
    let est_tilde = estimate_delta(
        &product,
        n,
        replicates,
        EstimatorMode::Enumerated,
        seed ^ 0xabcd,
        &opts,
    )?;
    let margin =
        est.estimate + est.ci_half_width - 0.25 * (est_tilde.estimate - est_tilde.ci_half_width);
    Ok(CheckReport::from_margin(
        &format!("delta_decoupling_{}", spec.kind_name()),
        margin,
        0.0,
        serde_json::json!({
            "n": n,
            "replicates": replicates,
            "delta": est.estimate,
            "delta_tilde": est_tilde.estimate,
            "ratio": est.estimate / est_tilde.estimate.max(1e-300),
            "upper_direction": "not_claimed",
        }),
        seed,
    ))
}

/// One covering event `E_k`: a conjunction of latent literals with a
/// closed-form probability.
#[derive(Debug, Clone)]
pub struct WitnessEvent {
    pub label: String,
    pub prob: f64,
    pub lits: Vec<(StreamId, bool)>,
}

#[derive(Debug, Clone)]
pub enum WitnessCenter {
    /// Another component of the process.
    Component(u64),
    /// An auxiliary random variable of the construction (the centers
    /// need not belong to the process).
    Latent(StreamId),
}

/// A sufficient-condition witness at scale `epsilon`: per component, a
/// center and at most `k_bound` covering events containing the
/// disagreement event.
#[derive(Debug, Clone)]
pub struct ScWitness {
    pub name: String,
    pub epsilon: f64,
    pub k_bound: usize,
    pub events: Vec<WitnessEvent>,
    /// `sup_k log(k+1) / log(1/P(E_k))` over the shipped events.
    pub growth_sup: f64,
    /// `(component, center, event ids)`.
    pub assignments: Vec<(u64, WitnessCenter, Vec<usize>)>,
}

fn growth_sup(events: &[WitnessEvent]) -> f64 {
    events
        .iter()
        .enumerate()
        .map(|(k, e)| ((k + 2) as f64).ln() / (1.0 / e.prob).ln())
        .fold(0.0, f64::max)
}

/// The shipped witnesses. Witnesses are data, not search: these encode
/// the structural inclusions each construction was built around.
pub fn sc_witness(spec: &ProcessSpec, epsilon: f64) -> Result<ScWitness, VerifyError> {
    let mut events = Vec::new();
    let mut assignments = Vec::new();
    match &spec.params {
        KindParams::BlockMu { .. } => {
            // {X_t != Z_0} subset {B_k = 1}, P = 2^{-k}
            let k0 = (1.0 / epsilon).log2().ceil().max(1.0) as u64;
            let kmax = crate::process::cubic_block_of(spec.truncation);
            for k in k0..=kmax {
                events.push(WitnessEvent {
                    label: format!("B_{k}=1"),
                    prob: pow2_neg(k),
                    lits: vec![(StreamId::new(StreamClass::BlockGate, k), true)],
                });
            }
            for t in 1..=spec.truncation {
                let k = crate::process::cubic_block_of(t);
                if k >= k0 {
                    assignments.push((
                        t,
                        WitnessCenter::Latent(StreamId::new(StreamClass::SharedZ0, 0)),
                        vec![(k - k0) as usize],
                    ));
                } else {
                    assignments.push((t, WitnessCenter::Component(t), vec![]));
                }
            }
            Ok(ScWitness {
                name: "blockmu".into(),
                epsilon,
                k_bound: 1,
                growth_sup: growth_sup(&events),
                events,
                assignments,
            })
        }
        KindParams::ThinChain { levels, counts } => {
            // {X_i != X_1} subset E_{k_i}, P(E_k) = 2 eps_k; K = 1 with
            // centers [N_k0]
            let k0 = levels
                .iter()
                .position(|&e| 2.0 * e <= epsilon)
                .ok_or_else(|| {
                    VerifyError::WitnessIncomplete(format!(
                        "no chain level with 2*eps_k <= {epsilon}"
                    ))
                })?
                + 1;
            for k in k0..counts.len() {
                events.push(WitnessEvent {
                    label: format!("E_{k}"),
                    prob: 2.0 * levels[k - 1],
                    lits: (1..=k)
                        .map(|j| (StreamId::new(StreamClass::ChainEvent, j as u64), true))
                        .collect(),
                });
            }
            for i in 1..=spec.truncation {
                match spec.chain_level_of(i)? {
                    Some(k) if k >= k0 && k < counts.len() => {
                        assignments.push((i, WitnessCenter::Component(1), vec![k - k0]));
                    }
                    _ => assignments.push((i, WitnessCenter::Component(i), vec![])),
                }
            }
            Ok(ScWitness {
                name: "thinchain".into(),
                epsilon,
                k_bound: 1,
                growth_sup: growth_sup(&events),
                events,
                assignments,
            })
        }
        KindParams::SqrtDecay => {
            // {X_k != Y_0} = {A_k = 1}, P = 1/sqrt(k)
            let k_eps = (1.0 / (epsilon * epsilon)).ceil() as u64;
            for m in k_eps..=spec.truncation {
                events.push(WitnessEvent {
                    label: format!("A_{m}=1"),
                    prob: 1.0 / (m as f64).sqrt(),
                    lits: vec![(StreamId::new(StreamClass::CompGate, m), true)],
                });
            }
            for i in 1..=spec.truncation {
                if i >= k_eps {
                    assignments.push((
                        i,
                        WitnessCenter::Latent(StreamId::new(StreamClass::SharedZ0, 0)),
                        vec![(i - k_eps) as usize],
                    ));
                } else {
                    assignments.push((i, WitnessCenter::Component(i), vec![]));
                }
            }
            Ok(ScWitness {
                name: "sqrtdecay".into(),
                epsilon,
                k_bound: 1,
                growth_sup: growth_sup(&events),
                events,
                assignments,
            })
        }
        KindParams::BlockSqrt => {
            // {X_i != Y_0} subset {A_l = 1} union {B_i = 1}: K = 2
            let i0 = (1.0 / (epsilon * epsilon)).ceil() as u64;
            let i_eps = 1u64 << i0.min(40);
            let lmax = crate::process::dyadic_block_of(spec.truncation);
            let mut a_event = std::collections::HashMap::new();
            for l in i0..=lmax {
                a_event.insert(l, events.len());
                events.push(WitnessEvent {
                    label: format!("A_{l}=1"),
                    prob: 1.0 / (l as f64).sqrt(),
                    lits: vec![(StreamId::new(StreamClass::BlockGate, l), true)],
                });
            }
            let mut b_event = std::collections::HashMap::new();
            for i in (i_eps + 1)..=spec.truncation {
                b_event.insert(i, events.len());
                events.push(WitnessEvent {
                    label: format!("B_{i}=1"),
                    prob: 1.0 / (i as f64).sqrt(),
                    lits: vec![(StreamId::new(StreamClass::CompGate, i), true)],
                });
            }
            for i in 1..=spec.truncation {
                if i > i_eps {
                    let l = crate::process::dyadic_block_of(i);
                    let ea = *a_event.get(&l).ok_or_else(|| {
                        VerifyError::WitnessIncomplete(format!("missing A-event for block {l}"))
                    })?;
                    let eb = b_event[&i];
                    assignments.push((
                        i,
                        WitnessCenter::Latent(StreamId::new(StreamClass::SharedZ0, 0)),
                        vec![ea, eb],
                    ));
                } else {
                    assignments.push((i, WitnessCenter::Component(i), vec![]));
                }
            }
            Ok(ScWitness {
                name: "blocksqrt".into(),
                epsilon,
                k_bound: 2,
                growth_sup: growth_sup(&events),
                events,
                assignments,
            })
        }
        other => Err(VerifyError::WitnessIncomplete(format!(
            "no shipped witness for kind {}",
            other.kind_name()
        ))),
    }
}

/// Numerically confirm a witness: event probabilities at most epsilon,
/// finite growth statistic, and zero inclusion violations across all
/// sampled disagreements.
pub fn verify_sc_witness(
    spec: &ProcessSpec,
    witness: &ScWitness,
    samples: usize,
    seed: u64,
) -> Result<CheckReport, VerifyError> {
    for ev in &witness.events {
        if ev.prob > witness.epsilon + 1e-12 {
            return Err(VerifyError::WitnessIncomplete(format!(
                "event {} has probability {} > epsilon {}",
                ev.label, ev.prob, witness.epsilon
            )));
        }
    }
    for (_, _, ks) in &witness.assignments {
        if ks.len() > witness.k_bound {
            return Err(VerifyError::WitnessIncomplete("K bound exceeded".into()));
        }
    }
    let indices: Vec<u64> = witness.assignments.iter().map(|&(i, _, _)| i).collect();
    let (batch, trace) =
        crate::sampling::sample_batch_traced(spec, &indices, samples, SeedLineage::new(seed, 0))?;
    // evaluate events per sample
    let mut event_hits: Vec<Vec<bool>> = Vec::with_capacity(witness.events.len());
    for ev in &witness.events {
        let mut hits = vec![true; samples];
        for &(id, want) in &ev.lits {
            let vals = trace.selector(id).ok_or_else(|| {
                VerifyError::WitnessIncomplete(format!(
                    "event {} references unseen latent",
                    ev.label
                ))
            })?;
            for (h, &v) in hits.iter_mut().zip(vals) {
                *h &= v == want;
            }
        }
        event_hits.push(hits);
    }
    let mut violations = 0u64;
    let mut disagreements = 0u64;
    for (c, (i, center, ks)) in witness.assignments.iter().enumerate() {
        let center_vals: Vec<u8> = match center {
            WitnessCenter::Component(j) => {
                let pos = indices.iter().position(|x| x == j).ok_or_else(|| {
                    VerifyError::WitnessIncomplete(format!("center component {j} not sampled"))
                })?;
                (0..samples).map(|s| batch.get(s, pos)).collect()
            }
            WitnessCenter::Latent(id) => {
                let vals = trace
                    .source(*id)
                    .ok_or_else(|| VerifyError::WitnessIncomplete("center latent unseen".into()))?;
                vals.iter().map(|&v| v as u8).collect()
            }
        };
        for s in 0..samples {
            if batch.get(s, c) != center_vals[s] {
                disagreements += 1;
                if !ks.iter().any(|&k| event_hits[k][s]) {
                    violations += 1;
                }
            }
        }
        let _ = i;
    }
    // empirical event frequencies within 4 standard errors
    let mut worst_freq_gap = 0.0f64;
    for (ev, hits) in witness.events.iter().zip(&event_hits) {
        let freq = hits.iter().filter(|&&h| h).count() as f64 / samples as f64;
        let se = (ev.prob * (1.0 - ev.prob) / samples as f64).sqrt();
        worst_freq_gap = worst_freq_gap.max((freq - ev.prob).abs() - 4.0 * se);
    }
    let margin = if violations == 0 && worst_freq_gap <= 0.0 && witness.growth_sup.is_finite() {
        1.0
    } else {
        -(violations as f64) - worst_freq_gap.max(0.0)
    };
    Ok(CheckReport::from_margin(
        &format!("sc_witness_{}", witness.name),
        margin,
        0.0,
        serde_json::json!({
            "epsilon": witness.epsilon,
            "k_bound": witness.k_bound,
            "events": witness.events.len(),
            "samples": samples,
            "disagreements": disagreements,
            "violations": violations,
            "growth_sup": witness.growth_sup,
            "worst_event_freq_gap": worst_freq_gap,
        }),
        seed,
    ))
}

/// Names accepted by [`run_check`], in the order the full suite runs.
pub const SUITE: &[&str] = &[
    "gamma_delta",
    "covariance_twins",
    "third_moments",
    "mgf_bound",
    "rho_metric",
    "pz_xor",
    "pz_product",
    "pz_antipair",
    "delta_decoupling_pnaxor",
    "delta_decoupling_antipair",
    "sc_blockmu",
    "sc_thinchain",
    "sc_sqrtdecay",
    "sc_blocksqrt",
];

fn catalog(name: &str) -> ProcessSpec {
    crate::process::catalog_specs()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| s)
        .expect("catalog entry")
}

/// Run one named check at its default (acceptance-scale) parameters.
pub fn run_check(name: &str, seed: u64, samples: usize) -> Result<CheckReport, VerifyError> {
    match name {
        "gamma_delta" => Ok(check_gamma_delta(40)),
        "covariance_twins" => check_covariance_twins(6),
        "third_moments" => check_third_moments(6),
        "mgf_bound" => Ok(check_mgf_bound(MgfGrid::default())),
        "rho_metric" => Ok(check_rho_is_metric(10_000, seed)),
        "pz_xor" => check_pz_decoupling(&catalog("pnaxor"), 12),
        "pz_product" => {
            let spec = ProcessSpec::new(
                KindParams::Product {
                    rule: MeanRule::PowerLaw { exponent: 2.0 },
                },
                12,
            )?;
            check_pz_decoupling(&spec, 12)
        }
        "pz_antipair" => check_pz_decoupling(&catalog("antipair"), 2),
        "delta_decoupling_pnaxor" => check_delta_decoupling(&catalog("pnaxor"), 16, 600, seed),
        "delta_decoupling_antipair" => check_delta_decoupling(&catalog("antipair"), 16, 600, seed),
        "sc_blockmu" => {
            let spec = ProcessSpec::new(
                KindParams::BlockMu {
                    block_size_override: None,
                },
                300,
            )?;
            verify_sc_witness(&spec, &sc_witness(&spec, 0.25)?, samples, seed)
        }
        "sc_thinchain" => {
            let spec = catalog("thinchain");
            verify_sc_witness(&spec, &sc_witness(&spec, 0.25)?, samples, seed)
        }
        "sc_sqrtdecay" => {
            let spec = catalog("sqrtdecay");
            verify_sc_witness(&spec, &sc_witness(&spec, 0.5)?, samples, seed)
        }
        "sc_blocksqrt" => {
            let spec = catalog("blocksqrt");
            verify_sc_witness(&spec, &sc_witness(&spec, 0.5)?, samples, seed)
        }
        other => Err(VerifyError::WitnessIncomplete(format!(
            "unknown check {other:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{CustomProcess, DecisionList, SourceRef};

    #[test]
    fn twins_pass() {
        let rep = check_covariance_twins(6).unwrap();
        assert_eq!(rep.status, CheckStatus::Pass, "{rep:?}");
        let rep3 = check_third_moments(6).unwrap();
        assert_eq!(rep3.status, CheckStatus::Pass, "{rep3:?}");
    }

    #[test]
    fn gamma_delta_passes() {
        assert_eq!(check_gamma_delta(40).status, CheckStatus::Pass);
    }

    #[test]
    fn mgf_known_cells() {
        // t = 0: both sides 1
        let p = 0.37;
        let lhs = (0f64).exp() * ((p - p * p) + (p - p * p) + (1.0 - 2.0 * p + 2.0 * p * p));
        assert!((lhs - 1.0).abs() < 1e-15);
        // p_i = p_j = 1/2, r = 1/4, t = 1: lhs = cosh^2(1/2)
        let (p1, r, t) = (0.5, 0.25, 1.0f64);
        let lhs = (p1 - r) * t.exp() + (p1 - r) * (-t).exp() + (1.0 - 2.0 * p1 + 2.0 * r);
        let cosh_sq = 0.5f64.cosh() * 0.5f64.cosh();
        assert!((lhs - cosh_sq).abs() < 1e-12);
        let rhs = (1.0 / 4f64.ln()).exp();
        assert!(rhs > lhs, "slack must be positive at this cell");
        // swap symmetry: slack at -t equals slack at t with i and j swapped
        let (pa, pb, rr, tt) = (0.3, 0.7, 0.21, 2.5f64);
        let lhs_fwd = (-(-tt) * (pa - pb)).exp()
            * ((pa - rr) * (-tt).exp() + (pb - rr) * tt.exp() + (1.0 - pa - pb + 2.0 * rr));
        let lhs_swp = (-tt * (pb - pa)).exp()
            * ((pb - rr) * tt.exp() + (pa - rr) * (-tt).exp() + (1.0 - pa - pb + 2.0 * rr));
        assert!((lhs_fwd - lhs_swp).abs() < 1e-12);
    }

    #[test]
    fn mgf_small_grid_passes() {
        let rep = check_mgf_bound(MgfGrid {
            p_steps: 19,
            r_steps: 7,
            t_steps: 6,
            t_max: 10.0,
        });
        assert_eq!(rep.status, CheckStatus::Pass, "{rep:?}");
    }

    #[test]
    fn rho_metric_check_passes() {
        let rep = check_rho_is_metric(10_000, 7);
        assert_eq!(rep.status, CheckStatus::Pass, "{rep:?}");
    }

    fn anti_pair() -> ProcessSpec {
        // (X, 1-X): sampling-without-replacement style anti-correlation
        ProcessSpec::new(
            KindParams::Custom(CustomProcess {
                sources: vec![0.5],
                selectors: vec![],
                components: vec![
                    DecisionList {
                        cases: vec![],
                        default: SourceRef {
                            source: 0,
                            negate: false,
                        },
                    },
                    DecisionList {
                        cases: vec![],
                        default: SourceRef {
                            source: 0,
                            negate: true,
                        },
                    },
                ],
            }),
            2,
        )
        .unwrap()
    }

    #[test]
    fn pz_decoupling_xor_exact() {
        let spec = ProcessSpec::new(KindParams::PnaXor { triples: 1 }, 3).unwrap();
        let rep = check_pz_decoupling(&spec, 3).unwrap();
        assert_eq!(rep.status, CheckStatus::Pass);
        // frozen four-state enumeration: P(Z>0) = 3/4, P(Z~>0) = 7/8
        assert_eq!(rep.params["p_z"], 0.75);
        assert_eq!(rep.params["p_z_tilde"], 0.875);
        assert!(rep.margin >= 0.75 - 0.4375 - 1e-15);
    }

    #[test]
    fn pz_decoupling_other_families() {
        // fully independent: both sides equal, ratio 1 >= 1/2
        let spec = ProcessSpec::new(
            KindParams::Product {
                rule: MeanRule::Constant { value: 0.5 },
            },
            3,
        )
        .unwrap();
        let rep = check_pz_decoupling(&spec, 3).unwrap();
        assert!(
            (rep.params["p_z"].as_f64().unwrap() - rep.params["p_z_tilde"].as_f64().unwrap()).abs()
                < 1e-15
        );
        // anti-correlated pair: P(Z>0) = 1
        let rep = check_pz_decoupling(&anti_pair(), 2).unwrap();
        assert_eq!(rep.params["p_z"], 1.0);
        assert_eq!(rep.status, CheckStatus::Pass);
    }

    #[test]
    fn pz_rejects_positive_correlation() {
        // two copies of the same coin: r = 1/2 > 1/4
        let spec = ProcessSpec::new(
            KindParams::Custom(CustomProcess {
                sources: vec![0.5],
                selectors: vec![],
                components: vec![
                    DecisionList {
                        cases: vec![],
                        default: SourceRef {
                            source: 0,
                            negate: false,
                        },
                    },
                    DecisionList {
                        cases: vec![],
                        default: SourceRef {
                            source: 0,
                            negate: false,
                        },
                    },
                ],
            }),
            2,
        )
        .unwrap();
        assert!(matches!(
            check_pz_decoupling(&spec, 2),
            Err(VerifyError::CovarianceSignViolation { .. })
        ));
    }

    #[test]
    fn delta_decoupling_small() {
        let spec = ProcessSpec::new(KindParams::PnaXor { triples: 1 }, 3).unwrap();
        let rep = check_delta_decoupling(&spec, 4, 400, 21).unwrap();
        assert_eq!(rep.status, CheckStatus::Pass, "{rep:?}");
        let rep = check_delta_decoupling(&anti_pair(), 8, 400, 22).unwrap();
        assert_eq!(rep.status, CheckStatus::Pass, "{rep:?}");
    }

    #[test]
    fn sc_witnesses_verify() {
        let mu = ProcessSpec::new(
            KindParams::BlockMu {
                block_size_override: None,
            },
            300,
        )
        .unwrap();
        let w = sc_witness(&mu, 0.25).unwrap();
        assert_eq!(w.k_bound, 1);
        let rep = verify_sc_witness(&mu, &w, 3000, 3).unwrap();
        assert_eq!(rep.status, CheckStatus::Pass, "{rep:?}");
        assert_eq!(rep.params["violations"], 0);
        assert!(rep.params["disagreements"].as_u64().unwrap() > 0);

        let chain = ProcessSpec::new(
            KindParams::ThinChain {
                levels: vec![0.4, 0.2, 0.1, 0.05],
                counts: vec![1, 2, 4, 8],
            },
            8,
        )
        .unwrap();
        let w = sc_witness(&chain, 0.25).unwrap();
        let rep = verify_sc_witness(&chain, &w, 3000, 4).unwrap();
        assert_eq!(rep.status, CheckStatus::Pass, "{rep:?}");

        let sd = ProcessSpec::new(KindParams::SqrtDecay, 64).unwrap();
        let w = sc_witness(&sd, 0.5).unwrap();
        let rep = verify_sc_witness(&sd, &w, 3000, 5).unwrap();
        assert_eq!(rep.status, CheckStatus::Pass, "{rep:?}");

        let bs = ProcessSpec::new(KindParams::BlockSqrt, 64).unwrap();
        let w = sc_witness(&bs, 0.5).unwrap();
        assert_eq!(w.k_bound, 2);
        let rep = verify_sc_witness(&bs, &w, 3000, 6).unwrap();
        assert_eq!(rep.status, CheckStatus::Pass, "{rep:?}");
    }
}
