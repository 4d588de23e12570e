//! Exact latent-collapse kernel for per-block suprema.
//!
//! Conditional on the latents a block shares across its components
//! (`Z_0` and the block gate/coin), the n-sample value pattern of each
//! component in the block is iid across components, with per-sample
//! success probabilities taking at most four values. The conditional
//! CDF `F` of one component's deviation is therefore a small discrete
//! object, and the block supremum over the TRUE block size `m` has CDF
//! `F^m`, evaluated in log space so that `m = 2^{k^3}` costs nothing.

use crate::process::{gamma_delta, pow2_neg, KindParams, ProcessSpec};
use crate::rng::{SeedLineage, Stream, StreamClass, StreamId};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CollapsedError {
    #[error("collapsed kernel only supports BlockMu/BlockNu, got {0}")]
    UnsupportedKind(&'static str),
    #[error("exact mode caps the pattern space at n <= 30, got n = {n}; fall back to sampled-max")]
    PatternSpaceTooLarge { n: usize },
    #[error(transparent)]
    Process(#[from] crate::process::ProcessError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupMode {
    /// Return the exact conditional distribution of the block supremum.
    ExactExpectation,
    /// Draw the block supremum by inverse-CDF sampling of `F^m`.
    SampledMax,
}

/// Per-sample shared latents of one block and one replicate.
#[derive(Debug, Clone)]
pub struct BlockLatents {
    pub block: u64,
    /// `B_k` (mu) or `D_k` (nu) per sample.
    pub gate: Vec<bool>,
    /// `Y_k` per sample (unused by mu).
    pub coin: Vec<bool>,
}

/// Draw the shared reference coin `Z_0` for samples `0..n`.
pub fn draw_z0(n: usize, lineage: SeedLineage) -> Vec<bool> {
    let s = Stream::new(lineage, StreamId::new(StreamClass::SharedZ0, 0));
    (0..n as u64).map(|j| s.bernoulli(j, 0.5)).collect()
}

/// Draw the block-shared latents, from the same streams the plain
/// sampler uses, so collapsed and enumerated paths agree draw-for-draw.
pub fn draw_block_latents(
    spec: &ProcessSpec,
    k: u64,
    n: usize,
    lineage: SeedLineage,
) -> Result<BlockLatents, CollapsedError> {
    match &spec.params {
        KindParams::BlockMu { .. } => {
            let gate = Stream::new(lineage, StreamId::new(StreamClass::BlockGate, k));
            let p = pow2_neg(k);
            Ok(BlockLatents {
                block: k,
                gate: (0..n as u64).map(|j| gate.bernoulli(j, p)).collect(),
                coin: Vec::new(),
            })
        }
        KindParams::BlockNu { .. } => {
            let (_, delta) = gamma_delta(k);
            let gate = Stream::new(lineage, StreamId::new(StreamClass::BlockGate, k));
            let coin = Stream::new(lineage, StreamId::new(StreamClass::BlockCoin, k));
            Ok(BlockLatents {
                block: k,
                gate: (0..n as u64).map(|j| gate.bernoulli(j, delta)).collect(),
                coin: (0..n as u64).map(|j| coin.bernoulli(j, 0.5)).collect(),
            })
        }
        other => Err(CollapsedError::UnsupportedKind(other.kind_name())),
    }
}

fn binom_pmf(c: usize, p: f64) -> Vec<f64> {
    let mut pmf = vec![0.0; c + 1];
    if p <= 0.0 {
        pmf[0] = 1.0;
        return pmf;
    }
    if p >= 1.0 {
        pmf[c] = 1.0;
        return pmf;
    }
    let q = 1.0 - p;
    pmf[0] = q.powi(c as i32);
    for i in 0..c {
        pmf[i + 1] = pmf[i] * ((c - i) as f64 / (i + 1) as f64) * (p / q);
    }
    pmf
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Exact conditional pmf of one in-block component's sample sum given
/// the shared latents (support `0..=n`).
pub fn component_sum_pmf(
    spec: &ProcessSpec,
    z0: &[bool],
    latents: &BlockLatents,
) -> Result<Vec<f64>, CollapsedError> {
    let n = z0.len();
    assert_eq!(latents.gate.len(), n, "latents drawn for a different n");
    match &spec.params {
        KindParams::BlockMu { .. } => {
            // gate off: the component copies Z_0; gate on: a fair coin
            let base = z0
                .iter()
                .zip(&latents.gate)
                .filter(|&(&z, &g)| z && !g)
                .count();
            let fair = latents.gate.iter().filter(|&&g| g).count();
            let mut pmf = vec![0.0; n + 1];
            for (i, &p) in binom_pmf(fair, 0.5).iter().enumerate() {
                pmf[base + i] = p;
            }
            Ok(pmf)
        }
        KindParams::BlockNu { .. } => {
            let (gamma, _) = gamma_delta(latents.block);
            let g2 = gamma / 2.0;
            // gate on: forced to Y_k; gate off: C Z flips away from Z_0
            // with probability gamma/2 per sample
            let forced: usize = latents
                .gate
                .iter()
                .zip(&latents.coin)
                .filter(|&(&d, &y)| d && y)
                .count();
            let off0 = z0
                .iter()
                .zip(&latents.gate)
                .filter(|&(&z, &d)| !d && !z)
                .count();
            let off1 = z0
                .iter()
                .zip(&latents.gate)
                .filter(|&(&z, &d)| !d && z)
                .count();
            // sum = forced + Binom(off0, g2) + (off1 - Binom(off1, g2))
            let up = binom_pmf(off0, g2);
            let down: Vec<f64> = binom_pmf(off1, g2).into_iter().rev().collect();
            let conv = convolve(&up, &down);
            let mut pmf = vec![0.0; n + 1];
            for (i, &p) in conv.iter().enumerate() {
                pmf[forced + i] = p;
            }
            Ok(pmf)
        }
        other => Err(CollapsedError::UnsupportedKind(other.kind_name())),
    }
}

/// Distribution of one component's deviation `|S/n - 1/2|`, grouped on
/// the exact grid `d/(2n)` for `d = |2S - n|`, with exact upper tails.
#[derive(Debug, Clone)]
pub struct DevDist {
    /// Ascending deviation values.
    pub devs: Vec<f64>,
    /// `tail[i] = P(dev > devs[i])`, by suffix summation.
    pub tail: Vec<f64>,
}

pub fn dev_dist(sum_pmf: &[f64]) -> DevDist {
    let n = sum_pmf.len() - 1;
    // d takes values n % 2, n % 2 + 2, ..., n
    let mut grouped = vec![0.0; n / 2 + 1];
    for (s, &p) in sum_pmf.iter().enumerate() {
        let d = (2 * s).abs_diff(n);
        grouped[(d - n % 2) / 2] += p;
    }
    let devs: Vec<f64> = (0..grouped.len())
        .map(|i| (2 * i + n % 2) as f64 / (2 * n) as f64)
        .collect();
    let mut tail = vec![0.0; grouped.len()];
    let mut acc = 0.0;
    for i in (0..grouped.len()).rev() {
        tail[i] = acc;
        acc += grouped[i];
    }
    DevDist { devs, tail }
}

/// CDF of the max of `exp(ln_m)` iid copies: `F^m` on the same grid.
#[derive(Debug, Clone)]
pub struct SupDist {
    pub devs: Vec<f64>,
    pub cdf: Vec<f64>,
}

pub fn power_dev_dist(d: &DevDist, ln_m: f64) -> SupDist {
    let cdf = d
        .tail
        .iter()
        .map(|&t| {
            if t <= 0.0 {
                1.0
            } else if t >= 1.0 {
                0.0
            } else {
                // F^m = exp(m ln(1-t)) with m = exp(ln_m), in log space
                let neg_ln_f = -(-t).ln_1p();
                let x = ln_m + neg_ln_f.ln();
                if x > 700.0 {
                    0.0
                } else {
                    (-x.exp()).exp()
                }
            }
        })
        .collect();
    SupDist {
        devs: d.devs.clone(),
        cdf,
    }
}

impl SupDist {
    pub fn expectation(&self) -> f64 {
        let mut e = 0.0;
        let mut prev = 0.0;
        for (v, c) in self.devs.iter().zip(&self.cdf) {
            e += v * (c - prev);
            prev = *c;
        }
        e
    }

    /// Inverse-CDF draw.
    pub fn quantile(&self, u: f64) -> f64 {
        for (v, c) in self.devs.iter().zip(&self.cdf) {
            if *c >= u {
                return *v;
            }
        }
        *self.devs.last().expect("nonempty support")
    }
}

pub enum BlockSup {
    Dist(SupDist),
    Draw(f64),
}

/// Conditional block supremum `sup_{t in S_k} |p_hat_t - 1/2|` given the
/// shared latents, over the block's true size (or the desk-scale
/// override when the spec carries one).
pub fn collapsed_block_sup(
    spec: &ProcessSpec,
    k: u64,
    z0: &[bool],
    latents: &BlockLatents,
    mode: SupMode,
    lineage: SeedLineage,
) -> Result<BlockSup, CollapsedError> {
    let n = z0.len();
    if matches!(mode, SupMode::ExactExpectation) && n > 30 {
        return Err(CollapsedError::PatternSpaceTooLarge { n });
    }
    let pmf = component_sum_pmf(spec, z0, latents)?;
    let dd = dev_dist(&pmf);
    let ln_m = spec.effective_block_size_ln(k)?;
    let sup = power_dev_dist(&dd, ln_m);
    match mode {
        SupMode::ExactExpectation => Ok(BlockSup::Dist(sup)),
        SupMode::SampledMax => {
            let u = Stream::new(lineage, StreamId::new(StreamClass::BlockSup, k)).unit(0);
            Ok(BlockSup::Draw(sup.quantile(u)))
        }
    }
}
