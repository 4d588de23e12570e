//! Monte Carlo estimation of the expected maximum empirical deviation.

use crate::collapsed::{
    collapsed_block_sup, draw_block_latents, draw_z0, BlockSup, CollapsedError, SupMode,
};
use crate::latent::{local_model, LatentError, LocalModel};
use crate::process::{cubic_block_size, cubic_block_start, gamma_delta, KindParams, ProcessSpec};
use crate::rng::SeedLineage;
use crate::sampling::{sample_model, sup_deviation, SamplingError};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeltaError {
    #[error("mode {mode:?} unsupported for kind {kind}")]
    ModeUnsupported {
        mode: EstimatorMode,
        kind: &'static str,
    },
    #[error("enumerated mode would materialize {0} components; cap is {MAX_ENUMERATED}")]
    EnumerationTooLarge(u64),
    #[error("need at least 2 replicates, got {0}")]
    TooFewReplicates(u64),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Latent(#[from] LatentError),
    #[error(transparent)]
    Collapsed(#[from] CollapsedError),
    #[error(transparent)]
    Process(#[from] crate::process::ProcessError),
}

const MAX_ENUMERATED: u64 = 1 << 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EstimatorMode {
    /// Materialize components up to the truncation and take the sample
    /// supremum directly.
    Enumerated,
    /// Blockwise exact collapse over true block sizes (mu/nu); for the
    /// tree and chain constructions the sampler is already exact, so
    /// this coincides with enumeration over the materialized catalog.
    Collapsed,
}

/// z quantiles for the supported confidence levels.
pub fn z_for(level: f64) -> f64 {
    if (level - 0.90).abs() < 1e-9 {
        1.6448536269514722
    } else if (level - 0.95).abs() < 1e-9 {
        1.959963984540054
    } else if (level - 0.99).abs() < 1e-9 {
        2.5758293035489004
    } else {
        panic!("unsupported confidence level {level}; use 0.90 / 0.95 / 0.99")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaEstimate {
    pub n: usize,
    pub replicates: u64,
    pub mode: EstimatorMode,
    pub estimate: f64,
    pub ci_half_width: f64,
    pub ci_level: f64,
    /// Truncation policy echoed into every report.
    pub truncation: String,
    pub master_seed: u64,
}

impl DeltaEstimate {
    pub fn ci_low(&self) -> f64 {
        self.estimate - self.ci_half_width
    }
    pub fn ci_high(&self) -> f64 {
        self.estimate + self.ci_half_width
    }
}

#[derive(Debug, Clone)]
pub struct DeltaOptions {
    pub ci_level: f64,
    pub threads: usize,
    /// Override the collapsed-mode block horizon.
    pub block_horizon: Option<u64>,
}

impl Default for DeltaOptions {
    fn default() -> Self {
        DeltaOptions {
            ci_level: 0.95,
            threads: 1,
            block_horizon: None,
        }
    }
}

/// Collapsed-mode block horizon.
///
/// For mu the tail above the horizon contributes at most `2^{-k+1}` to
/// the supremum, which we push below 1e-4 of the estimate's scale
/// (`E|Z_0 deviation| ~ sqrt(2/(pi n))/2`). For nu deeper blocks only
/// grow the supremum; we include every block whose all-ones event is
/// near-certain (`m_k (gamma_k/2)^n >> 1`) up to a cost cap, and report
/// the horizon so truncation is always explicit.
pub fn default_block_horizon(spec: &ProcessSpec, n: usize) -> u64 {
    match spec.params {
        KindParams::BlockMu { .. } => {
            let scale = 0.5 * (2.0 / (std::f64::consts::PI * n as f64)).sqrt();
            let mut k = 3u64;
            while k < 24 && f64::exp2(1.0 - k as f64) >= 1e-4 * scale {
                k += 1;
            }
            k
        }
        KindParams::BlockNu { .. } => {
            let mut k = 3u64;
            while k < 16 {
                let (gamma, _) = gamma_delta(k);
                let ln_hit =
                    (k * k * k) as f64 * std::f64::consts::LN_2 + n as f64 * (gamma / 2.0).ln();
                if ln_hit >= 30.0 {
                    break;
                }
                k += 1;
            }
            k
        }
        _ => 0,
    }
}

fn enumerated_indices(spec: &ProcessSpec) -> Result<Vec<u64>, DeltaError> {
    match &spec.params {
        KindParams::BlockMu {
            block_size_override: Some(m),
        }
        | KindParams::BlockNu {
            block_size_override: Some(m),
        } => {
            // first min(m, |S_k|) components of each block within
            // truncation; block 4 already ends past the u64 index space
            let mut idx = Vec::new();
            for k in 1..=4u64 {
                let start = cubic_block_start(k);
                if start > spec.truncation {
                    break;
                }
                let size = cubic_block_size(k).min(*m as f64) as u64;
                for t in start..start + size {
                    if t <= spec.truncation {
                        idx.push(t);
                    }
                }
            }
            Ok(idx)
        }
        _ => {
            if spec.truncation > MAX_ENUMERATED {
                return Err(DeltaError::EnumerationTooLarge(spec.truncation));
            }
            Ok((1..=spec.truncation).collect())
        }
    }
}

fn truncation_descriptor(spec: &ProcessSpec, mode: EstimatorMode, horizon: u64) -> String {
    match (&spec.params, mode) {
        (
            KindParams::BlockMu {
                block_size_override,
            }
            | KindParams::BlockNu {
                block_size_override,
            },
            m,
        ) => {
            let ovr = match block_size_override {
                Some(v) => format!("override={v}"),
                None => "true-sizes".to_string(),
            };
            match m {
                EstimatorMode::Collapsed => format!("blocks<={horizon};{ovr}"),
                EstimatorMode::Enumerated => format!("indices<={};{ovr}", spec.truncation),
            }
        }
        _ => format!("indices<={}", spec.truncation),
    }
}

/// One collapsed replicate for the block constructions.
fn collapsed_block_statistic(
    spec: &ProcessSpec,
    n: usize,
    horizon: u64,
    lineage: SeedLineage,
    per_component_models: &[Option<LocalModel>],
) -> Result<f64, DeltaError> {
    let z0 = draw_z0(n, lineage);
    let has_override = matches!(
        spec.params,
        KindParams::BlockMu {
            block_size_override: Some(_)
        } | KindParams::BlockNu {
            block_size_override: Some(_)
        }
    );
    if has_override {
        // desk scale: evaluate each materialized component conditionally,
        // consuming exactly the streams the enumerated sampler uses
        let mut sup: f64 = 0.0;
        for model in per_component_models.iter().flatten() {
            let batch = sample_model(model, n, lineage);
            let means = vec![0.5; model.indices.len()];
            sup = sup.max(sup_deviation(&batch, &means)?);
        }
        return Ok(sup);
    }
    if n <= 30 {
        // exact conditional expectation: blocks are independent given
        // Z_0, so the supremum CDF is the product of the block CDFs
        let mut combined: Option<Vec<f64>> = None;
        let mut devs: Vec<f64> = Vec::new();
        for k in 1..=horizon {
            let lat = draw_block_latents(spec, k, n, lineage)?;
            match collapsed_block_sup(spec, k, &z0, &lat, SupMode::ExactExpectation, lineage)? {
                BlockSup::Dist(d) => match combined.as_mut() {
                    None => {
                        devs = d.devs;
                        combined = Some(d.cdf);
                    }
                    Some(acc) => {
                        for (a, c) in acc.iter_mut().zip(&d.cdf) {
                            *a *= c;
                        }
                    }
                },
                BlockSup::Draw(_) => unreachable!(),
            }
        }
        let cdf = combined.expect("horizon >= 1");
        let mut e = 0.0;
        let mut prev = 0.0;
        for (v, c) in devs.iter().zip(&cdf) {
            e += v * (c - prev);
            prev = *c;
        }
        Ok(e)
    } else {
        // beyond the exact-mode pattern cap: one inverse-CDF draw per block
        let mut sup: f64 = 0.0;
        for k in 1..=horizon {
            let lat = draw_block_latents(spec, k, n, lineage)?;
            match collapsed_block_sup(spec, k, &z0, &lat, SupMode::SampledMax, lineage)? {
                BlockSup::Draw(d) => sup = sup.max(d),
                BlockSup::Dist(_) => unreachable!(),
            }
        }
        Ok(sup)
    }
}

/// Estimate `Delta_n` for `spec` by Monte Carlo over replicates.
pub fn estimate_delta(
    spec: &ProcessSpec,
    n: usize,
    replicates: u64,
    mode: EstimatorMode,
    master_seed: u64,
    opts: &DeltaOptions,
) -> Result<DeltaEstimate, DeltaError> {
    if replicates < 2 {
        return Err(DeltaError::TooFewReplicates(replicates));
    }
    if n == 0 {
        return Err(DeltaError::Sampling(SamplingError::EmptySample));
    }
    let kind = spec.kind_name();
    let is_block = matches!(
        spec.params,
        KindParams::BlockMu { .. } | KindParams::BlockNu { .. }
    );
    let collapsible = is_block
        || matches!(
            spec.params,
            KindParams::WideTree { .. } | KindParams::ThinChain { .. }
        );
    if mode == EstimatorMode::Collapsed && !collapsible {
        return Err(DeltaError::ModeUnsupported { mode, kind });
    }

    let horizon = opts
        .block_horizon
        .unwrap_or_else(|| default_block_horizon(spec, n));
    let stats: Vec<Result<f64, DeltaError>> = if mode == EstimatorMode::Collapsed && is_block {
        // per-block component models only materialize under an override
        let has_override = matches!(
            spec.params,
            KindParams::BlockMu {
                block_size_override: Some(_)
            } | KindParams::BlockNu {
                block_size_override: Some(_)
            }
        );
        let per_component_models: Vec<Option<LocalModel>> = if has_override {
            let mut models = Vec::new();
            for k in 1..=4u64.min(horizon) {
                let start = cubic_block_start(k);
                if start > spec.truncation {
                    break;
                }
                let m = match &spec.params {
                    KindParams::BlockMu {
                        block_size_override: Some(m),
                    }
                    | KindParams::BlockNu {
                        block_size_override: Some(m),
                    } => *m,
                    _ => unreachable!(),
                };
                let size = cubic_block_size(k).min(m as f64) as u64;
                let idx: Vec<u64> = (start..start + size)
                    .filter(|&t| t <= spec.truncation)
                    .collect();
                models.push(if idx.is_empty() {
                    None
                } else {
                    Some(local_model(spec, &idx)?)
                });
            }
            models
        } else {
            Vec::new()
        };
        crate::parallel::parallel_map(replicates as usize, opts.threads, |r| {
            collapsed_block_statistic(
                spec,
                n,
                horizon,
                SeedLineage::new(master_seed, r as u64),
                &per_component_models,
            )
        })
    } else {
        // enumerated path (also serves collapsed mode for tree/chain,
        // whose samplers are exact by construction)
        let indices = enumerated_indices(spec)?;
        if indices.is_empty() {
            return Err(DeltaError::EnumerationTooLarge(0));
        }
        let model = local_model(spec, &indices)?;
        let means: Vec<f64> = indices
            .iter()
            .map(|&i| spec.mean(i))
            .collect::<Result<_, _>>()?;
        crate::parallel::parallel_map(replicates as usize, opts.threads, |r| {
            let batch = sample_model(&model, n, SeedLineage::new(master_seed, r as u64));
            Ok(sup_deviation(&batch, &means)?)
        })
    };

    let mut values = Vec::with_capacity(stats.len());
    for s in stats {
        let v = s?;
        debug_assert!(
            (0.0..=1.0).contains(&v),
            "replicate statistic {v} escaped [0,1]"
        );
        values.push(v);
    }
    let reps = values.len() as f64;
    let mean = values.iter().sum::<f64>() / reps;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (reps - 1.0);
    let ci_half = z_for(opts.ci_level) * (var / reps).sqrt();
    Ok(DeltaEstimate {
        n,
        replicates,
        mode,
        estimate: mean,
        ci_half_width: ci_half,
        ci_level: opts.ci_level,
        truncation: truncation_descriptor(spec, mode, horizon),
        master_seed,
    })
}

/// One estimate per `n`, sharing the master seed (common random numbers
/// across the curve keep ordering comparisons tight).
pub fn convergence_curve(
    spec: &ProcessSpec,
    n_list: &[usize],
    replicates: u64,
    mode: EstimatorMode,
    master_seed: u64,
    opts: &DeltaOptions,
) -> Result<Vec<DeltaEstimate>, DeltaError> {
    n_list
        .iter()
        .map(|&n| estimate_delta(spec, n, replicates, mode, master_seed, opts))
        .collect()
}
