//! Catalog of the correlated binary processes under study, with
//! closed-form moments where the constructions admit them.
//!
//! Every process here is a mixture of shared fair coins driven by
//! independent selector bits, except `Product` (independent coordinates
//! with a mean rule) and `PnaXor` (parity construction). Component
//! indices are 1-based and bounded by `truncation`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProcessError {
    #[error("component index {index} exceeds truncation {truncation}")]
    IndexOutOfTruncation { index: u64, truncation: u64 },
    #[error("operation `{op}` is not defined for process kind {kind}")]
    UnsupportedKind {
        op: &'static str,
        kind: &'static str,
    },
    #[error("no closed form available ({0}); use empirical moments")]
    NoClosedForm(String),
    #[error("invalid process spec: {0}")]
    InvalidSpec(String),
    #[error("spec document malformed: {0}")]
    BadDocument(String),
}

/// Mean sequence rule for product measures, `j` is the 1-based index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum MeanRule {
    /// `p_j = value` for all `j`.
    Constant { value: f64 },
    /// `p_j = (j+1)^{-exponent}`.
    PowerLaw { exponent: f64 },
    /// Explicit list, `p_j = values[j-1]`.
    Explicit { values: Vec<f64> },
}

impl MeanRule {
    pub fn mean(&self, j: u64) -> f64 {
        match self {
            MeanRule::Constant { value } => *value,
            MeanRule::PowerLaw { exponent } => ((j + 1) as f64).powf(-exponent),
            MeanRule::Explicit { values } => values[(j - 1) as usize],
        }
    }
}

/// A literal reference to a value source, optionally complemented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceRef {
    pub source: usize,
    #[serde(default)]
    pub negate: bool,
}

/// One guarded case of a decision list: if all listed selector bits have
/// the stated values, the component equals the referenced source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionCase {
    pub when_all: Vec<(usize, bool)>,
    pub then: SourceRef,
}

/// Per-component rule of a custom latent mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionList {
    pub cases: Vec<DecisionCase>,
    pub default: SourceRef,
}

/// Minimal latent-mixture description: independent Bernoulli sources and
/// selectors plus one decision list per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomProcess {
    /// Source means (fair coins are 0.5).
    pub sources: Vec<f64>,
    /// Selector probabilities.
    pub selectors: Vec<f64>,
    pub components: Vec<DecisionList>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KindParams {
    Product { rule: MeanRule },
    BlockMu { block_size_override: Option<u64> },
    BlockNu { block_size_override: Option<u64> },
    ThinChain { levels: Vec<f64>, counts: Vec<u64> },
    WideTree { levels: Vec<f64>, counts: Vec<u64> },
    SqrtDecay,
    BlockSqrt,
    PnaXor { triples: u64 },
    Custom(CustomProcess),
}

/// Declarative description of one catalog distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessSpec {
    pub params: KindParams,
    /// Finite index budget: components served are `1..=truncation`.
    pub truncation: u64,
}

pub const HALF: f64 = 0.5;

/// `2^{-k}` by exponent manipulation (exact for k <= 1022).
#[inline]
pub fn pow2_neg(k: u64) -> f64 {
    f64::exp2(-(k as f64))
}

/// Solve the block-nu parameter system
/// `(1-delta)(2 gamma - gamma^2) = 2^{-k}` and
/// `gamma + delta - gamma delta = 2^{-k}`.
///
/// Eliminating gamma gives `u^2 - c u - (1-c)^2 = 0` for `u = 1 - delta`,
/// `c = 2^{-k}`; the rationalized root avoids the cancellation that makes
/// the naive square-root form lose digits for large `k`.
pub fn gamma_delta(k: u64) -> (f64, f64) {
    assert!(k >= 1, "block index must be >= 1");
    let c = pow2_neg(k);
    let disc = (c * c + 4.0 * (1.0 - c) * (1.0 - c)).sqrt();
    let delta = 2.0 * c * (1.0 - c) / ((2.0 - c) + disc);
    let u = (c + disc) / 2.0;
    let gamma = (c - delta) / u;
    (gamma, delta)
}

/// `1 - delta_k`, computed without cancellation.
pub fn one_minus_delta(k: u64) -> f64 {
    let c = pow2_neg(k);
    let disc = (c * c + 4.0 * (1.0 - c) * (1.0 - c)).sqrt();
    (c + disc) / 2.0
}

/// Block index of component `t` under the cubic partition
/// `S_k = { 2^{(k-1)^3} < t <= 2^{k^3} }`. Component 1 (which the raw
/// partition leaves unassigned) is served by block 1.
pub fn cubic_block_of(t: u64) -> u64 {
    debug_assert!(t >= 1);
    let mut k = 1u64;
    loop {
        let e = k * k * k;
        if e >= 64 || t <= (1u64 << e) {
            return k;
        }
        k += 1;
    }
}

/// True size of cubic block `k`; block 1 holds `{1, 2}`.
pub fn cubic_block_size_ln(k: u64) -> f64 {
    if k == 1 {
        return 2f64.ln();
    }
    let e = (k * k * k) as f64;
    let e_prev = ((k - 1) * (k - 1) * (k - 1)) as f64;
    // ln(2^e - 2^e_prev) = e ln 2 + ln(1 - 2^{e_prev - e})
    e * std::f64::consts::LN_2 + (-f64::exp2(e_prev - e)).ln_1p()
}

/// True size of cubic block `k` as f64 (infinite past the f64 range,
/// callers needing log-scale use [`cubic_block_size_ln`]).
pub fn cubic_block_size(k: u64) -> f64 {
    cubic_block_size_ln(k).exp()
}

/// First component index of cubic block `k` (block 1 starts at 1).
pub fn cubic_block_start(k: u64) -> u64 {
    if k == 1 {
        1
    } else {
        let e = (k - 1) * (k - 1) * (k - 1);
        assert!(e < 64, "block {k} starts beyond u64 index space");
        (1u64 << e) + 1
    }
}

/// Dyadic block of the TC2 construction: `I_l = { 2^{l-1} <= i < 2^l }`.
pub fn dyadic_block_of(i: u64) -> u64 {
    debug_assert!(i >= 1);
    64 - i.leading_zeros() as u64
}

impl KindParams {
    pub fn kind_name(&self) -> &'static str {
        match self {
            KindParams::Product { .. } => "Product",
            KindParams::BlockMu { .. } => "BlockMu",
            KindParams::BlockNu { .. } => "BlockNu",
            KindParams::ThinChain { .. } => "ThinChain",
            KindParams::WideTree { .. } => "WideTree",
            KindParams::SqrtDecay => "SqrtDecay",
            KindParams::BlockSqrt => "BlockSqrt",
            KindParams::PnaXor { .. } => "PnaXor",
            KindParams::Custom(_) => "Custom",
        }
    }
}

fn validate_levels_counts(
    levels: &[f64],
    counts: &[u64],
    allow_half: bool,
) -> Result<(), ProcessError> {
    if levels.is_empty() || levels.len() != counts.len() {
        return Err(ProcessError::InvalidSpec(
            "levels and counts must be non-empty and of equal length".into(),
        ));
    }
    let mut prev = 0.5;
    for (i, &e) in levels.iter().enumerate() {
        let ok_top = if allow_half { e <= prev } else { e < prev };
        if !(e > 0.0 && (if i == 0 { ok_top } else { e < prev })) {
            return Err(ProcessError::InvalidSpec(format!(
                "levels must decrease strictly within (0, 1/2], got {e} after {prev}"
            )));
        }
        prev = e;
    }
    if counts[0] != 1 {
        return Err(ProcessError::InvalidSpec(
            "counts must start at N_1 = 1".into(),
        ));
    }
    if counts.windows(2).any(|w| w[1] < w[0]) {
        return Err(ProcessError::InvalidSpec(
            "counts must be nondecreasing".into(),
        ));
    }
    Ok(())
}

impl ProcessSpec {
    pub fn new(params: KindParams, truncation: u64) -> Result<Self, ProcessError> {
        let spec = ProcessSpec { params, truncation };
        spec.validate()?;
        Ok(spec)
    }

    pub fn kind_name(&self) -> &'static str {
        self.params.kind_name()
    }

    fn validate(&self) -> Result<(), ProcessError> {
        if self.truncation < 1 {
            return Err(ProcessError::InvalidSpec("truncation must be >= 1".into()));
        }
        match &self.params {
            KindParams::Product { rule } => {
                if let MeanRule::Explicit { values } = rule {
                    if (values.len() as u64) < self.truncation {
                        return Err(ProcessError::InvalidSpec(
                            "explicit mean list shorter than truncation".into(),
                        ));
                    }
                    if values.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                        return Err(ProcessError::InvalidSpec("means must lie in [0,1]".into()));
                    }
                }
                if let MeanRule::Constant { value } = rule {
                    if !(0.0..=1.0).contains(value) {
                        return Err(ProcessError::InvalidSpec("means must lie in [0,1]".into()));
                    }
                }
            }
            KindParams::BlockMu {
                block_size_override,
            }
            | KindParams::BlockNu {
                block_size_override,
            } => {
                if block_size_override == &Some(0) {
                    return Err(ProcessError::InvalidSpec(
                        "block size override must be >= 1".into(),
                    ));
                }
            }
            KindParams::ThinChain { levels, counts } => {
                validate_levels_counts(levels, counts, true)?;
                if self.truncation > *counts.last().unwrap() {
                    return Err(ProcessError::InvalidSpec(format!(
                        "thin chain materializes {} components, truncation {} exceeds it",
                        counts.last().unwrap(),
                        self.truncation
                    )));
                }
            }
            KindParams::WideTree { levels, counts } => {
                validate_levels_counts(levels, counts, false)?;
            }
            KindParams::SqrtDecay | KindParams::BlockSqrt => {}
            KindParams::PnaXor { triples } => {
                if *triples == 0 {
                    return Err(ProcessError::InvalidSpec(
                        "PnaXor needs at least one triple".into(),
                    ));
                }
                if self.truncation > 3 * triples {
                    return Err(ProcessError::InvalidSpec(
                        "PnaXor truncation exceeds 3 * triples".into(),
                    ));
                }
            }
            KindParams::Custom(c) => {
                if c.components.is_empty() || (c.components.len() as u64) < self.truncation {
                    return Err(ProcessError::InvalidSpec(
                        "custom process must define every component up to truncation".into(),
                    ));
                }
                if c.sources.iter().any(|&p| !(0.0..=1.0).contains(&p))
                    || c.selectors.iter().any(|&p| !(0.0..=1.0).contains(&p))
                {
                    return Err(ProcessError::InvalidSpec(
                        "probabilities must lie in [0,1]".into(),
                    ));
                }
                for d in &c.components {
                    let refs = d.cases.iter().map(|cs| cs.then).chain([d.default]);
                    for r in refs {
                        if r.source >= c.sources.len() {
                            return Err(ProcessError::InvalidSpec(
                                "source reference out of range".into(),
                            ));
                        }
                    }
                    for cs in &d.cases {
                        if cs.when_all.iter().any(|&(s, _)| s >= c.selectors.len()) {
                            return Err(ProcessError::InvalidSpec(
                                "selector reference out of range".into(),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn check_index(&self, op: &'static str, i: u64) -> Result<(), ProcessError> {
        let _ = op;
        if i < 1 || i > self.truncation {
            return Err(ProcessError::IndexOutOfTruncation {
                index: i,
                truncation: self.truncation,
            });
        }
        Ok(())
    }

    /// Block index of component `t` (cubic blocks for BlockMu/BlockNu,
    /// dyadic for BlockSqrt).
    pub fn block_of(&self, t: u64) -> Result<u64, ProcessError> {
        self.check_index("block_of", t)?;
        match &self.params {
            KindParams::BlockMu { .. } | KindParams::BlockNu { .. } => Ok(cubic_block_of(t)),
            KindParams::BlockSqrt => Ok(dyadic_block_of(t)),
            other => Err(ProcessError::UnsupportedKind {
                op: "block_of",
                kind: other.kind_name(),
            }),
        }
    }

    /// `p_i = E[X_i]`.
    pub fn mean(&self, i: u64) -> Result<f64, ProcessError> {
        self.check_index("mean", i)?;
        match &self.params {
            KindParams::Product { rule } => Ok(rule.mean(i)),
            // Every shared-coin mixture in the catalog has fair marginals.
            _ => Ok(HALF),
        }
    }

    /// Chain level of a thin-chain component: `None` for the anchor
    /// component 1, otherwise `k` with `N_k < i <= N_{k+1}` (1-based
    /// into `levels`).
    pub fn chain_level_of(&self, i: u64) -> Result<Option<usize>, ProcessError> {
        let counts = match &self.params {
            KindParams::ThinChain { counts, .. } => counts,
            other => {
                return Err(ProcessError::UnsupportedKind {
                    op: "chain_level_of",
                    kind: other.kind_name(),
                })
            }
        };
        self.check_index("chain_level_of", i)?;
        if i == 1 {
            return Ok(None);
        }
        // counts is nondecreasing; find k with counts[k-1] < i <= counts[k]
        let k = counts.partition_point(|&n| n < i);
        Ok(Some(k))
    }

    /// `r_ij = E[X_i X_j]` in closed form.
    pub fn cross_moment(&self, i: u64, j: u64) -> Result<f64, ProcessError> {
        self.check_index("cross_moment", i)?;
        self.check_index("cross_moment", j)?;
        if i == j {
            return self.mean(i); // X_i^2 = X_i for binary
        }
        match &self.params {
            KindParams::Product { rule } => Ok(rule.mean(i) * rule.mean(j)),
            KindParams::BlockMu { .. } => Ok(mu_cross_block(cubic_block_of(i), cubic_block_of(j))),
            KindParams::BlockNu { .. } => Ok(nu_cross_block(cubic_block_of(i), cubic_block_of(j))),
            KindParams::ThinChain { levels, .. } => {
                let (a, b) = (i.min(j), i.max(j));
                let xi = match self.chain_level_of(a)? {
                    None => levels[self.chain_level_of(b)?.unwrap() - 1],
                    Some(k) => levels[k - 1],
                };
                Ok(HALF - xi / 2.0)
            }
            KindParams::WideTree { levels, counts } => {
                let tree = crate::trees::build_skeleton(levels, counts, None)
                    .map_err(|e| ProcessError::InvalidSpec(e.to_string()))?;
                let d = tree
                    .leaf_distance_by_index(i, j)
                    .map_err(|e| ProcessError::InvalidSpec(e.to_string()))?;
                Ok(HALF - d / 2.0)
            }
            KindParams::SqrtDecay => {
                let (ai, aj) = (1.0 / (i as f64).sqrt(), 1.0 / (j as f64).sqrt());
                let xi = HALF * (ai + aj - ai * aj);
                Ok(HALF - xi / 2.0)
            }
            KindParams::BlockSqrt => {
                let (l, m) = (dyadic_block_of(i), dyadic_block_of(j));
                let (al, am) = (1.0 / (l as f64).sqrt(), 1.0 / (m as f64).sqrt());
                let (bi, bj) = (1.0 / (i as f64).sqrt(), 1.0 / (j as f64).sqrt());
                let stay = if l == m {
                    (1.0 - al) * (1.0 - bi) * (1.0 - bj)
                } else {
                    (1.0 - al) * (1.0 - am) * (1.0 - bi) * (1.0 - bj)
                };
                let xi = HALF * (1.0 - stay);
                Ok(HALF - xi / 2.0)
            }
            // pairwise independent within a triple, independent across
            KindParams::PnaXor { .. } => Ok(0.25),
            KindParams::Custom(_) => {
                let model = crate::latent::local_model(self, &[i, j])
                    .map_err(|e| ProcessError::NoClosedForm(e.to_string()))?;
                model
                    .exact_moment(&[0, 1])
                    .map_err(|e| ProcessError::NoClosedForm(e.to_string()))
            }
        }
    }

    /// Third-order moment `E[X_i X_j X_k]`, closed form for the
    /// covariance-twin constructions.
    pub fn third_moment(&self, i: u64, j: u64, k: u64) -> Result<f64, ProcessError> {
        self.check_index("third_moment", i)?;
        self.check_index("third_moment", j)?;
        self.check_index("third_moment", k)?;
        let is_mu = matches!(self.params, KindParams::BlockMu { .. });
        if !is_mu && !matches!(self.params, KindParams::BlockNu { .. }) {
            return Err(ProcessError::UnsupportedKind {
                op: "third_moment",
                kind: self.params.kind_name(),
            });
        }
        // binary idempotence collapses repeated indices
        if i == j && j == k {
            return self.mean(i);
        }
        if i == j {
            return self.cross_moment(i, k);
        }
        if i == k || j == k {
            return self.cross_moment(i, j);
        }
        let (bi, bj, bk) = (cubic_block_of(i), cubic_block_of(j), cubic_block_of(k));
        Ok(if is_mu {
            mu_third_block(bi, bj, bk)
        } else {
            nu_third_block(bi, bj, bk)
        })
    }

    /// True in-block component count used by the collapsed kernels,
    /// or the desk-scale override when one is set.
    pub fn effective_block_size_ln(&self, k: u64) -> Result<f64, ProcessError> {
        match &self.params {
            KindParams::BlockMu {
                block_size_override,
            }
            | KindParams::BlockNu {
                block_size_override,
            } => Ok(match block_size_override {
                Some(m) => {
                    let cap = cubic_block_size(k);
                    ((*m as f64).min(cap)).ln()
                }
                None => cubic_block_size_ln(k),
            }),
            other => Err(ProcessError::UnsupportedKind {
                op: "effective_block_size_ln",
                kind: other.kind_name(),
            }),
        }
    }
}

/// Cross moment of mu for components in blocks `k, l`.
pub fn mu_cross_block(k: u64, l: u64) -> f64 {
    if k == l {
        HALF - pow2_neg(k + 2)
    } else {
        HALF - (pow2_neg(k) + pow2_neg(l) - pow2_neg(k + l)) / 4.0
    }
}

/// Cross moment of nu, written in the construction's own parameters.
pub fn nu_cross_block(k: u64, l: u64) -> f64 {
    if k == l {
        let (g, _) = gamma_delta(k);
        let u = one_minus_delta(k);
        HALF - u * g * (2.0 - g) / 4.0
    } else {
        let (gk, _) = gamma_delta(k);
        let (gl, _) = gamma_delta(l);
        let (uk, ul) = (one_minus_delta(k), one_minus_delta(l));
        HALF - (1.0 - (1.0 - gk) * uk * (1.0 - gl) * ul) / 4.0
    }
}

/// `E[Z_0 X_j X_k]` given the per-block stick probabilities
/// `q = P(component resolves to Z_0)`: conditioning on which of the two
/// components stick, the product is `Z_0` (mean 1/2), `Z_0` times one
/// fresh coin (1/4), or `Z_0` times two fresh coins (1/8), which
/// collapses to `(1 + q_b)(1 + q_c) / 8` for distinct blocks.
fn z0_pair_from_stick(q_b: f64, q_c: f64) -> f64 {
    (1.0 + q_b) * (1.0 + q_c) / 8.0
}

/// `E[Z_0 X_j X_k]` for mu with `j, k` in blocks `b, c`.
fn mu_z0_pair(b: u64, c: u64) -> f64 {
    if b == c {
        HALF - 0.375 * pow2_neg(b)
    } else {
        z0_pair_from_stick(1.0 - pow2_neg(b), 1.0 - pow2_neg(c))
    }
}

/// `E[Z_0 X_j X_k]` for nu, in the construction's own parameters.
fn nu_z0_pair(b: u64, c: u64) -> f64 {
    if b == c {
        let (g, d) = gamma_delta(b);
        HALF - (4.0 * g + 2.0 * d - 4.0 * g * d - g * g + g * g * d) / 8.0
    } else {
        let stick = |k: u64| {
            let (g, _) = gamma_delta(k);
            (1.0 - g) * one_minus_delta(k)
        };
        z0_pair_from_stick(stick(b), stick(c))
    }
}

/// Third moment of mu over distinct components in blocks `a, b, c`.
/// When one block differs from the other two (or all differ), the lone
/// component factors through its gate and the rest reduces to a
/// `Z_0`-weighted pair term.
pub fn mu_third_block(a: u64, b: u64, c: u64) -> f64 {
    if a == b && b == c {
        return HALF - 0.375 * pow2_neg(a);
    }
    let (lone, p, q) = lone_block(a, b, c);
    let beta = pow2_neg(lone);
    (1.0 - beta) * mu_z0_pair(p, q) + beta * HALF * mu_cross_block(p, q)
}

pub fn nu_third_block(a: u64, b: u64, c: u64) -> f64 {
    if a == b && b == c {
        let (g, _) = gamma_delta(a);
        let u = one_minus_delta(a);
        return HALF - 3.0 * u * g * (2.0 - g) / 8.0;
    }
    let (lone, p, q) = lone_block(a, b, c);
    let (g, d) = gamma_delta(lone);
    let beta = g + d - g * d;
    (1.0 - beta) * nu_z0_pair(p, q) + beta * HALF * nu_cross_block(p, q)
}

/// Pick a block occurring exactly once among the three (exists whenever
/// they are not all equal) and return it with the remaining pair.
fn lone_block(a: u64, b: u64, c: u64) -> (u64, u64, u64) {
    if a != b && a != c {
        (a, b, c)
    } else if b != a && b != c {
        (b, a, c)
    } else {
        (c, a, b)
    }
}

/// Built-in catalog entries with desk-scale defaults. Truncations are
/// our addition (the constructions are over infinite index sets) and
/// are echoed into every report that uses them.
pub fn catalog_specs() -> Vec<(&'static str, ProcessSpec)> {
    let chain_levels: Vec<f64> = (1..=12).map(pow2_neg).collect();
    let chain_counts: Vec<u64> = (1..=12).map(|k| k * k).collect();
    // wide tree: 300-fold fan-out at the top level, then doubling, which
    // keeps N(eps) * eps bounded below (divergent entropy) while the
    // finite truncation stays wide enough for desk-scale suprema
    let tree_levels: Vec<f64> = (1..=10).map(|k| 0.45 * f64::exp2(1.0 - k as f64)).collect();
    let tree_counts: Vec<u64> = std::iter::once(1)
        .chain((2..=10).map(|k| 300u64 << (k - 2)))
        .collect();
    let tree_leaves = crate::trees::build_skeleton(&tree_levels, &tree_counts, None)
        .map(|t| t.leaf_catalog().len() as u64)
        .unwrap_or(1);
    vec![
        (
            "product_quadratic",
            ProcessSpec::new(
                KindParams::Product {
                    rule: MeanRule::PowerLaw { exponent: 2.0 },
                },
                64,
            )
            .unwrap(),
        ),
        (
            "blockmu",
            ProcessSpec::new(
                KindParams::BlockMu {
                    block_size_override: None,
                },
                1 << 62,
            )
            .unwrap(),
        ),
        (
            "blocknu",
            ProcessSpec::new(
                KindParams::BlockNu {
                    block_size_override: None,
                },
                1 << 62,
            )
            .unwrap(),
        ),
        (
            "thinchain",
            ProcessSpec::new(
                KindParams::ThinChain {
                    levels: chain_levels,
                    counts: chain_counts.clone(),
                },
                *chain_counts.last().unwrap(),
            )
            .unwrap(),
        ),
        (
            "widetree",
            ProcessSpec::new(
                KindParams::WideTree {
                    levels: tree_levels,
                    counts: tree_counts,
                },
                tree_leaves,
            )
            .unwrap(),
        ),
        (
            "sqrtdecay",
            ProcessSpec::new(KindParams::SqrtDecay, 200).unwrap(),
        ),
        (
            "blocksqrt",
            ProcessSpec::new(KindParams::BlockSqrt, 256).unwrap(),
        ),
        (
            "pnaxor",
            ProcessSpec::new(KindParams::PnaXor { triples: 4 }, 12).unwrap(),
        ),
        (
            "antipair",
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
            .unwrap(),
        ),
    ]
}

// ---------------------------------------------------------------------
// JSON document form: {"kind": ..., "params": {...}, "truncation": n}
// ---------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDoc {
    kind: String,
    #[serde(default)]
    params: serde_json::Value,
    truncation: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProductDoc {
    rule: MeanRule,
}

#[derive(Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct BlockDoc {
    #[serde(default)]
    block_size_override: Option<u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LevelsDoc {
    levels: Vec<f64>,
    counts: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PnaDoc {
    triples: u64,
}

impl ProcessSpec {
    pub fn from_json(text: &str) -> Result<Self, ProcessError> {
        let doc: SpecDoc =
            serde_json::from_str(text).map_err(|e| ProcessError::BadDocument(e.to_string()))?;
        let p = doc.params;
        let bad = |e: serde_json::Error| ProcessError::BadDocument(e.to_string());
        let params = match doc.kind.as_str() {
            "Product" => {
                let d: ProductDoc = serde_json::from_value(p).map_err(bad)?;
                KindParams::Product { rule: d.rule }
            }
            "BlockMu" => {
                let d: BlockDoc = if p.is_null() {
                    BlockDoc::default()
                } else {
                    serde_json::from_value(p).map_err(bad)?
                };
                KindParams::BlockMu {
                    block_size_override: d.block_size_override,
                }
            }
            "BlockNu" => {
                let d: BlockDoc = if p.is_null() {
                    BlockDoc::default()
                } else {
                    serde_json::from_value(p).map_err(bad)?
                };
                KindParams::BlockNu {
                    block_size_override: d.block_size_override,
                }
            }
            "ThinChain" => {
                let d: LevelsDoc = serde_json::from_value(p).map_err(bad)?;
                KindParams::ThinChain {
                    levels: d.levels,
                    counts: d.counts,
                }
            }
            "WideTree" => {
                let d: LevelsDoc = serde_json::from_value(p).map_err(bad)?;
                KindParams::WideTree {
                    levels: d.levels,
                    counts: d.counts,
                }
            }
            "SqrtDecay" => KindParams::SqrtDecay,
            "BlockSqrt" => KindParams::BlockSqrt,
            "PnaXor" => {
                let d: PnaDoc = serde_json::from_value(p).map_err(bad)?;
                KindParams::PnaXor { triples: d.triples }
            }
            "Custom" => {
                let d: CustomProcess = serde_json::from_value(p).map_err(bad)?;
                KindParams::Custom(d)
            }
            other => return Err(ProcessError::BadDocument(format!("unknown kind {other:?}"))),
        };
        ProcessSpec::new(params, doc.truncation)
    }

    pub fn to_json(&self) -> String {
        let params = match &self.params {
            KindParams::Product { rule } => serde_json::to_value(ProductDoc { rule: rule.clone() }),
            KindParams::BlockMu {
                block_size_override,
            }
            | KindParams::BlockNu {
                block_size_override,
            } => serde_json::to_value(BlockDoc {
                block_size_override: *block_size_override,
            }),
            KindParams::ThinChain { levels, counts } | KindParams::WideTree { levels, counts } => {
                serde_json::to_value(LevelsDoc {
                    levels: levels.clone(),
                    counts: counts.clone(),
                })
            }
            KindParams::SqrtDecay | KindParams::BlockSqrt => Ok(serde_json::json!({})),
            KindParams::PnaXor { triples } => serde_json::to_value(PnaDoc { triples: *triples }),
            KindParams::Custom(c) => serde_json::to_value(c),
        }
        .expect("catalog params serialize");
        let doc = SpecDoc {
            kind: self.kind_name().to_string(),
            params,
            truncation: self.truncation,
        };
        serde_json::to_string_pretty(&doc).expect("spec document serializes")
    }
}
