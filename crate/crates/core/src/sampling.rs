//! Seeded iid sampling of a process over a finite index set.

use crate::latent::{local_model, LatentError, LocalModel, ModelSampler};
use crate::process::ProcessSpec;
use crate::rng::{SeedLineage, StreamId};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error(transparent)]
    Latent(#[from] LatentError),
    #[error("means vector has length {means}, batch has {cols} columns")]
    LengthMismatch { means: usize, cols: usize },
    #[error("sample count must be >= 1")]
    EmptySample,
}

/// `n x m` binary matrix of iid draws of `m` components.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    /// Row-major: `values[s * m + c]` is sample `s` of column `c`.
    pub values: Vec<u8>,
    pub indices: Vec<u64>,
    pub n: usize,
    pub lineage: SeedLineage,
}

impl SampleBatch {
    #[inline]
    pub fn get(&self, sample: usize, col: usize) -> u8 {
        self.values[sample * self.indices.len() + col]
    }

    /// CSV dump, header `sample_id` then one column per component index.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        out.push_str("sample_id");
        for i in &self.indices {
            write!(out, ",x{i}").unwrap();
        }
        out.push('\n');
        for s in 0..self.n {
            write!(out, "{}", s + 1).unwrap();
            for c in 0..self.indices.len() {
                write!(out, ",{}", self.get(s, c)).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Per-sample values of every latent the batch touched, keyed by stream
/// id; lets callers evaluate latent-event predicates (witness checks).
#[derive(Debug, Clone)]
pub struct LatentTrace {
    pub selectors: Vec<(StreamId, Vec<bool>)>,
    pub sources: Vec<(StreamId, Vec<bool>)>,
}

impl LatentTrace {
    pub fn selector(&self, id: StreamId) -> Option<&[bool]> {
        self.selectors
            .iter()
            .find(|(i, _)| *i == id)
            .map(|(_, v)| v.as_slice())
    }

    pub fn source(&self, id: StreamId) -> Option<&[bool]> {
        self.sources
            .iter()
            .find(|(i, _)| *i == id)
            .map(|(_, v)| v.as_slice())
    }
}

fn run_model(
    model: &LocalModel,
    n: usize,
    lineage: SeedLineage,
    trace: bool,
) -> (SampleBatch, Option<LatentTrace>) {
    let sampler = ModelSampler::new(model, lineage);
    let m = model.indices.len();
    let mut values = vec![0u8; n * m];
    let mut sel = vec![false; model.selectors.len()];
    let mut src = vec![false; model.sources.len()];
    let mut tr = trace.then(|| LatentTrace {
        selectors: model
            .selectors
            .iter()
            .map(|l| (l.id, Vec::with_capacity(n)))
            .collect(),
        sources: model
            .sources
            .iter()
            .map(|l| (l.id, Vec::with_capacity(n)))
            .collect(),
    });
    for s in 0..n {
        sampler.draw_into(s as u64, &mut sel, &mut src);
        if let Some(t) = tr.as_mut() {
            for (i, &v) in sel.iter().enumerate() {
                t.selectors[i].1.push(v);
            }
            for (i, &v) in src.iter().enumerate() {
                t.sources[i].1.push(v);
            }
        }
        for c in 0..m {
            values[s * m + c] = model.eval(c, &sel, &src) as u8;
        }
    }
    (
        SampleBatch {
            values,
            indices: model.indices.clone(),
            n,
            lineage,
        },
        tr,
    )
}

/// Draw `n` iid samples of `spec` restricted to `indices`. Shared
/// latents are consistent across columns within every sample, and two
/// batches with equal `(spec, indices, n, lineage)` are bit-identical.
pub fn sample_batch(
    spec: &ProcessSpec,
    indices: &[u64],
    n: usize,
    lineage: SeedLineage,
) -> Result<SampleBatch, SamplingError> {
    if n == 0 {
        return Err(SamplingError::EmptySample);
    }
    let model = local_model(spec, indices)?;
    Ok(run_model(&model, n, lineage, false).0)
}

/// Same as [`sample_batch`] but also returns the latent values.
pub fn sample_batch_traced(
    spec: &ProcessSpec,
    indices: &[u64],
    n: usize,
    lineage: SeedLineage,
) -> Result<(SampleBatch, LatentTrace), SamplingError> {
    if n == 0 {
        return Err(SamplingError::EmptySample);
    }
    let model = local_model(spec, indices)?;
    let (batch, trace) = run_model(&model, n, lineage, true);
    Ok((batch, trace.unwrap()))
}

/// Sample an already-built local model (avoids rebuilding trees).
pub fn sample_model(model: &LocalModel, n: usize, lineage: SeedLineage) -> SampleBatch {
    run_model(model, n, lineage, false).0
}

/// Exact sampling of the tree process on a catalog subset, despite the
/// infinite paths: node values are generated down to each leaf's
/// materialized frontier with the edge-switch probabilities, and the
/// residual infinite tail collapses into a single Bernoulli switch of
/// probability `1 - sqrt(1 - 2 eps_frontier)` that replaces the leaf
/// value by an independent fair coin. Every leaf has marginal mean 1/2.
pub fn sample_tree_process(
    tree: &crate::trees::SkeletonTree,
    leaves: &[u64],
    n: usize,
    lineage: SeedLineage,
) -> Result<SampleBatch, SamplingError> {
    if n == 0 {
        return Err(SamplingError::EmptySample);
    }
    let model = crate::latent::tree_local_model(tree, tree.leaf_catalog().len() as u64, leaves)?;
    Ok(run_model(&model, n, lineage, false).0)
}

/// Column means of a batch.
pub fn empirical_means(batch: &SampleBatch) -> Vec<f64> {
    let m = batch.indices.len();
    let mut sums = vec![0u64; m];
    for s in 0..batch.n {
        for (c, sum) in sums.iter_mut().enumerate() {
            *sum += batch.get(s, c) as u64;
        }
    }
    sums.into_iter()
        .map(|s| s as f64 / batch.n as f64)
        .collect()
}

/// One replicate's supremum deviation: `max_j |mean_j - true_means[j]|`.
pub fn sup_deviation(batch: &SampleBatch, true_means: &[f64]) -> Result<f64, SamplingError> {
    if true_means.len() != batch.indices.len() {
        return Err(SamplingError::LengthMismatch {
            means: true_means.len(),
            cols: batch.indices.len(),
        });
    }
    let means = empirical_means(batch);
    Ok(means
        .iter()
        .zip(true_means)
        .map(|(m, t)| (m - t).abs())
        .fold(0.0, f64::max))
}
