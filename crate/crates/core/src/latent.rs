//! Local latent-mixture models.
//!
//! Every catalog construction assigns each component a value drawn from
//! a small pool of shared coins, chosen by independent selector bits
//! (the parity triples additionally XOR two coins). For a finite index
//! set we materialize just the latents those components touch. The same
//! model drives the seeded sampler, exact moment enumeration (the
//! independent oracle for the closed forms), and the exhaustive joint
//! pmf used by the decoupling checks.

use crate::process::{
    cubic_block_of, dyadic_block_of, gamma_delta, pow2_neg, KindParams, ProcessSpec,
};
use crate::rng::{SeedLineage, Stream, StreamClass, StreamId};
use crate::trees::SkeletonTree;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatentError {
    #[error("enumeration too large: {bits} latent bits (cap {cap})")]
    EnumerationTooLarge { bits: usize, cap: usize },
    #[error(transparent)]
    Process(#[from] crate::process::ProcessError),
    #[error("tree error: {0}")]
    Tree(String),
}

/// One independent Bernoulli latent with its stream address.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Latent {
    pub id: StreamId,
    pub prob: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SrcLit {
    pub source: usize,
    pub negate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CompValue {
    Lit(SrcLit),
    Xor(SrcLit, SrcLit),
}

/// Ordered decision list: the first case whose selector literals all
/// hold decides the component; otherwise the default applies.
#[derive(Debug, Clone, PartialEq)]
pub struct CompRule {
    pub cases: Vec<(Vec<(usize, bool)>, CompValue)>,
    pub default: CompValue,
}

#[derive(Debug, Clone)]
pub struct LocalModel {
    pub indices: Vec<u64>,
    pub selectors: Vec<Latent>,
    pub sources: Vec<Latent>,
    pub components: Vec<CompRule>,
}

const ENUM_CAP_BITS: usize = 24;

struct Builder {
    selectors: Vec<Latent>,
    sources: Vec<Latent>,
    sel_index: std::collections::HashMap<StreamId, usize>,
    src_index: std::collections::HashMap<StreamId, usize>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            selectors: Vec::new(),
            sources: Vec::new(),
            sel_index: std::collections::HashMap::new(),
            src_index: std::collections::HashMap::new(),
        }
    }

    fn selector(&mut self, class: StreamClass, index: u64, prob: f64) -> usize {
        let id = StreamId::new(class, index);
        *self.sel_index.entry(id).or_insert_with(|| {
            self.selectors.push(Latent { id, prob });
            self.selectors.len() - 1
        })
    }

    fn source(&mut self, class: StreamClass, index: u64, prob: f64) -> usize {
        let id = StreamId::new(class, index);
        *self.src_index.entry(id).or_insert_with(|| {
            self.sources.push(Latent { id, prob });
            self.sources.len() - 1
        })
    }
}

fn lit(source: usize) -> CompValue {
    CompValue::Lit(SrcLit {
        source,
        negate: false,
    })
}

/// Build the minimal latent model serving `indices` of `spec`.
pub fn local_model(spec: &ProcessSpec, indices: &[u64]) -> Result<LocalModel, LatentError> {
    for &i in indices {
        if i < 1 || i > spec.truncation {
            return Err(crate::process::ProcessError::IndexOutOfTruncation {
                index: i,
                truncation: spec.truncation,
            }
            .into());
        }
    }
    let mut b = Builder::new();
    let mut components = Vec::with_capacity(indices.len());
    match &spec.params {
        KindParams::Product { rule } => {
            for &i in indices {
                let s = b.source(StreamClass::CompCoin, i, rule.mean(i));
                components.push(CompRule {
                    cases: vec![],
                    default: lit(s),
                });
            }
        }
        KindParams::BlockMu { .. } => {
            let z0 = b.source(StreamClass::SharedZ0, 0, 0.5);
            for &t in indices {
                let k = cubic_block_of(t);
                let gate = b.selector(StreamClass::BlockGate, k, pow2_neg(k));
                let own = b.source(StreamClass::CompCoin, t, 0.5);
                components.push(CompRule {
                    cases: vec![(vec![(gate, true)], lit(own))],
                    default: lit(z0),
                });
            }
        }
        KindParams::BlockNu { .. } => {
            let z0 = b.source(StreamClass::SharedZ0, 0, 0.5);
            for &t in indices {
                let k = cubic_block_of(t);
                let (gamma, delta) = gamma_delta(k);
                let d = b.selector(StreamClass::BlockGate, k, delta);
                let yk = b.source(StreamClass::BlockCoin, k, 0.5);
                let c = b.selector(StreamClass::CompGate, t, gamma);
                let own = b.source(StreamClass::CompCoin, t, 0.5);
                components.push(CompRule {
                    cases: vec![(vec![(d, true)], lit(yk)), (vec![(c, true)], lit(own))],
                    default: lit(z0),
                });
            }
        }
        KindParams::ThinChain { levels, .. } => {
            let anchor = b.source(StreamClass::CompCoin, 1, 0.5);
            for &i in indices {
                match spec.chain_level_of(i)? {
                    None => components.push(CompRule {
                        cases: vec![],
                        default: lit(anchor),
                    }),
                    Some(k) => {
                        // E_k = intersection of U_j <= eps_j / eps_{j-1}
                        let mut conj = Vec::with_capacity(k);
                        let mut prev = 0.5;
                        for j in 1..=k {
                            let ratio = levels[j - 1] / prev;
                            prev = levels[j - 1];
                            conj.push((b.selector(StreamClass::ChainEvent, j as u64, ratio), true));
                        }
                        let own = b.source(StreamClass::CompCoin, i, 0.5);
                        components.push(CompRule {
                            cases: vec![(conj, lit(own))],
                            default: lit(anchor),
                        });
                    }
                }
            }
        }
        KindParams::WideTree { levels, counts } => {
            let tree = crate::trees::build_skeleton(levels, counts, None)
                .map_err(|e| LatentError::Tree(e.to_string()))?;
            return tree_local_model(&tree, spec.truncation, indices);
        }
        KindParams::SqrtDecay => {
            let y0 = b.source(StreamClass::SharedZ0, 0, 0.5);
            for &k in indices {
                let a = b.selector(StreamClass::CompGate, k, 1.0 / (k as f64).sqrt());
                let own = b.source(StreamClass::CompCoin, k, 0.5);
                components.push(CompRule {
                    cases: vec![(vec![(a, true)], lit(own))],
                    default: lit(y0),
                });
            }
        }
        KindParams::BlockSqrt => {
            let y0 = b.source(StreamClass::SharedZ0, 0, 0.5);
            for &i in indices {
                let l = dyadic_block_of(i);
                let a = b.selector(StreamClass::BlockGate, l, 1.0 / (l as f64).sqrt());
                let bi = b.selector(StreamClass::CompGate, i, 1.0 / (i as f64).sqrt());
                let own = b.source(StreamClass::CompCoin, i, 0.5);
                components.push(CompRule {
                    cases: vec![(vec![(a, true)], lit(own)), (vec![(bi, true)], lit(own))],
                    default: lit(y0),
                });
            }
        }
        KindParams::PnaXor { .. } => {
            for &i in indices {
                let triple = (i - 1) / 3;
                let pos = (i - 1) % 3;
                let s1 = b.source(StreamClass::CompCoin, 3 * triple + 1, 0.5);
                let s2 = b.source(StreamClass::CompCoin, 3 * triple + 2, 0.5);
                let value = match pos {
                    0 => lit(s1),
                    1 => lit(s2),
                    _ => CompValue::Xor(
                        SrcLit {
                            source: s1,
                            negate: false,
                        },
                        SrcLit {
                            source: s2,
                            negate: false,
                        },
                    ),
                };
                components.push(CompRule {
                    cases: vec![],
                    default: value,
                });
            }
        }
        KindParams::Custom(c) => {
            let src_map: Vec<usize> = c
                .sources
                .iter()
                .enumerate()
                .map(|(i, &p)| b.source(StreamClass::CustomSrc, i as u64, p))
                .collect();
            let sel_map: Vec<usize> = c
                .selectors
                .iter()
                .enumerate()
                .map(|(i, &p)| b.selector(StreamClass::CustomSel, i as u64, p))
                .collect();
            for &i in indices {
                let d = &c.components[(i - 1) as usize];
                let conv = |r: crate::process::SourceRef| {
                    CompValue::Lit(SrcLit {
                        source: src_map[r.source],
                        negate: r.negate,
                    })
                };
                components.push(CompRule {
                    cases: d
                        .cases
                        .iter()
                        .map(|cs| {
                            (
                                cs.when_all.iter().map(|&(s, v)| (sel_map[s], v)).collect(),
                                conv(cs.then),
                            )
                        })
                        .collect(),
                    default: conv(d.default),
                });
            }
        }
    }
    Ok(LocalModel {
        indices: indices.to_vec(),
        selectors: b.selectors,
        sources: b.sources,
        components,
    })
}

/// Latent model over catalog leaves of a prebuilt skeleton tree. The
/// value of a leaf is the coin of the deepest switched node on its path
/// (the residual infinite tail collapses into one switch of probability
/// `1 - sqrt(1 - 2 eps_frontier)`), else the root coin. Every leaf has
/// marginal mean 1/2.
pub fn tree_local_model(
    tree: &SkeletonTree,
    truncation: u64,
    indices: &[u64],
) -> Result<LocalModel, LatentError> {
    let mut b = Builder::new();
    let mut components = Vec::with_capacity(indices.len());
    let root_coin = b.source(StreamClass::TreeCoin, 0, 0.5);
    for &i in indices {
        if i < 1 || i > truncation {
            return Err(crate::process::ProcessError::IndexOutOfTruncation {
                index: i,
                truncation,
            }
            .into());
        }
        let leaf = tree.leaf(i).map_err(|e| LatentError::Tree(e.to_string()))?;
        let mut cases = Vec::with_capacity(leaf.nodes.len() + 1);
        // deepest decision first: tail, then nodes frontier-to-top; tail
        // streams are keyed by exit edge, so leaves sharing a frontier
        // node keep independent residual tails
        let tail_sel = b.selector(
            StreamClass::TailSwitch,
            leaf.tail_edge as u64,
            tree.tail_switch_prob(leaf),
        );
        let tail_coin = b.source(StreamClass::TailCoin, leaf.tail_edge as u64, 0.5);
        cases.push((vec![(tail_sel, true)], lit(tail_coin)));
        for &v in leaf.nodes.iter().skip(1).rev() {
            let sel = b.selector(StreamClass::TreeSwitch, v as u64, tree.edge_switch_prob(v));
            let coin = b.source(StreamClass::TreeCoin, v as u64, 0.5);
            cases.push((vec![(sel, true)], lit(coin)));
        }
        components.push(CompRule {
            cases,
            default: lit(root_coin),
        });
    }
    Ok(LocalModel {
        indices: indices.to_vec(),
        selectors: b.selectors,
        sources: b.sources,
        components,
    })
}

impl LocalModel {
    fn value_of(rule: &CompRule, sel: &[bool]) -> CompValue {
        for (conj, v) in &rule.cases {
            if conj.iter().all(|&(s, want)| sel[s] == want) {
                return v.clone();
            }
        }
        rule.default.clone()
    }

    /// Evaluate component `c` given latent bit assignments.
    pub fn eval(&self, c: usize, sel: &[bool], src: &[bool]) -> bool {
        let read = |l: SrcLit| src[l.source] ^ l.negate;
        match Self::value_of(&self.components[c], sel) {
            CompValue::Lit(l) => read(l),
            CompValue::Xor(a, bb) => read(a) ^ read(bb),
        }
    }

    fn has_xor(&self) -> bool {
        self.components.iter().any(|r| {
            matches!(r.default, CompValue::Xor(..))
                || r.cases.iter().any(|(_, v)| matches!(v, CompValue::Xor(..)))
        })
    }

    /// Exact `E[prod_{c in comps} X_c]` by enumerating selector
    /// assignments (and source assignments when parity values appear).
    pub fn exact_moment(&self, comps: &[usize]) -> Result<f64, LatentError> {
        let need_sources = self.has_xor();
        let sel_bits = self.selectors.len();
        let src_bits = if need_sources { self.sources.len() } else { 0 };
        if sel_bits + src_bits > ENUM_CAP_BITS {
            return Err(LatentError::EnumerationTooLarge {
                bits: sel_bits + src_bits,
                cap: ENUM_CAP_BITS,
            });
        }
        let mut total = 0.0;
        let mut sel = vec![false; sel_bits];
        for mask in 0u64..(1u64 << sel_bits) {
            for (i, s) in sel.iter_mut().enumerate() {
                *s = mask >> i & 1 == 1;
            }
            let mut w = 1.0;
            for (i, l) in self.selectors.iter().enumerate() {
                w *= if sel[i] { l.prob } else { 1.0 - l.prob };
            }
            if w == 0.0 {
                continue;
            }
            if need_sources {
                let mut src = vec![false; src_bits];
                for smask in 0u64..(1u64 << src_bits) {
                    for (i, s) in src.iter_mut().enumerate() {
                        *s = smask >> i & 1 == 1;
                    }
                    let mut ws = w;
                    for (i, l) in self.sources.iter().enumerate() {
                        ws *= if src[i] { l.prob } else { 1.0 - l.prob };
                    }
                    if ws != 0.0 && comps.iter().all(|&c| self.eval(c, &sel, &src)) {
                        total += ws;
                    }
                }
            } else {
                // group literals per source: X and 1-X in the same
                // product annihilate, repeats collapse (binary values)
                let mut plain = vec![false; self.sources.len()];
                let mut neg = vec![false; self.sources.len()];
                for &c in comps {
                    match Self::value_of(&self.components[c], &sel) {
                        CompValue::Lit(l) => {
                            if l.negate {
                                neg[l.source] = true;
                            } else {
                                plain[l.source] = true;
                            }
                        }
                        CompValue::Xor(..) => unreachable!(),
                    }
                }
                let mut factor = 1.0;
                for (i, l) in self.sources.iter().enumerate() {
                    factor *= match (plain[i], neg[i]) {
                        (true, true) => 0.0,
                        (true, false) => l.prob,
                        (false, true) => 1.0 - l.prob,
                        (false, false) => 1.0,
                    };
                }
                total += w * factor;
            }
        }
        Ok(total)
    }

    /// Full joint pmf over the modeled components, by exhaustive latent
    /// enumeration. The outcome key packs component values little-endian.
    pub fn joint_pmf(&self) -> Result<Vec<f64>, LatentError> {
        let bits = self.selectors.len() + self.sources.len();
        if bits > 20 {
            return Err(LatentError::EnumerationTooLarge { bits, cap: 20 });
        }
        let mut pmf = vec![0.0; 1 << self.components.len()];
        let (ns, nz) = (self.selectors.len(), self.sources.len());
        let mut sel = vec![false; ns];
        let mut src = vec![false; nz];
        for mask in 0u64..(1u64 << bits) {
            for (i, s) in sel.iter_mut().enumerate() {
                *s = mask >> i & 1 == 1;
            }
            for (i, s) in src.iter_mut().enumerate() {
                *s = mask >> (ns + i) & 1 == 1;
            }
            let mut w = 1.0;
            for (i, l) in self.selectors.iter().enumerate() {
                w *= if sel[i] { l.prob } else { 1.0 - l.prob };
            }
            for (i, l) in self.sources.iter().enumerate() {
                w *= if src[i] { l.prob } else { 1.0 - l.prob };
            }
            if w == 0.0 {
                continue;
            }
            let mut key = 0usize;
            for c in 0..self.components.len() {
                key |= (self.eval(c, &sel, &src) as usize) << c;
            }
            pmf[key] += w;
        }
        Ok(pmf)
    }
}

/// Per-replicate sampler over a local model: every latent draws from its
/// own counter stream, so values depend only on `(lineage, id, sample)`.
pub struct ModelSampler<'m> {
    pub model: &'m LocalModel,
    sel_streams: Vec<Stream>,
    src_streams: Vec<Stream>,
}

impl<'m> ModelSampler<'m> {
    pub fn new(model: &'m LocalModel, lineage: SeedLineage) -> Self {
        ModelSampler {
            model,
            sel_streams: model
                .selectors
                .iter()
                .map(|l| Stream::new(lineage, l.id))
                .collect(),
            src_streams: model
                .sources
                .iter()
                .map(|l| Stream::new(lineage, l.id))
                .collect(),
        }
    }

    /// Draw all latents of sample `j` into the provided buffers.
    pub fn draw_into(&self, j: u64, sel: &mut [bool], src: &mut [bool]) {
        for (i, s) in self.sel_streams.iter().enumerate() {
            sel[i] = s.bernoulli(j, self.model.selectors[i].prob);
        }
        for (i, s) in self.src_streams.iter().enumerate() {
            src[i] = s.bernoulli(j, self.model.sources[i].prob);
        }
    }
}
