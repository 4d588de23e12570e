//! Skeleton trees: the balanced equidistant tree whose crossing-edge
//! count at level `eps` realizes a prescribed covering-number function.
//!
//! The builder follows the layered splitting scheme exactly: layer `r`
//! has edge slots `e(r, s)` for `s < 2^r`, processed in the fractal
//! order; a split either ends the edge with a new node at the current
//! level or, when the edge already hangs from a node at that level,
//! replaces it by two sibling edges on the same node. Construction
//! stops once the supplied count sequence is exhausted (or an explicit
//! split budget runs out); everything below the last realized level is
//! represented by dangling edges.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("inconsistent level/count sequences: {0}")]
    InconsistentSequences(String),
    #[error("unknown leaf index {0}")]
    UnknownLeaf(u64),
    #[error("level {eps} coincides with a node level {node_level} (perturb the grid)")]
    LevelCoincidesWithNode { eps: f64, node_level: f64 },
    #[error("level {eps} is at or below the construction frontier {frontier}")]
    BelowFrontier { eps: f64, frontier: f64 },
    #[error("layer order only materialized up to r = 26, requested {0}")]
    OrderTooDeep(u32),
}

/// Fractal split order: `Order(0) = (0)`,
/// `Order(r) = (2i : i in Order(r-1)) ++ (2i+1 : i in Order(r-1))`.
pub fn order_sequence(r: u32) -> Result<Vec<u64>, TreeError> {
    if r > 26 {
        return Err(TreeError::OrderTooDeep(r));
    }
    let mut ord = vec![0u64];
    for _ in 0..r {
        let mut next = Vec::with_capacity(ord.len() * 2);
        next.extend(ord.iter().map(|i| 2 * i));
        next.extend(ord.iter().map(|i| 2 * i + 1));
        ord = next;
    }
    Ok(ord)
}

#[derive(Debug, Clone, Serialize)]
pub struct Node {
    /// Creation index, root = 0; rendered as `v(level_k, id+1)` in exports.
    pub id: usize,
    /// Level index: 0 for the root (at 1/2), else 1-based into `levels`.
    pub level_k: usize,
    pub eps: f64,
    pub parent: Option<usize>,
    /// Live child edges in creation order (leftmost first).
    pub child_edges: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Edge {
    pub layer: u32,
    pub slot: u64,
    pub top: usize,
    /// `None` while dangling (stands for an unbuilt infinite subtree).
    pub end: Option<usize>,
    pub deleted: bool,
}

#[derive(Debug, Clone)]
pub struct LeafPath {
    /// Node ids from the root down to the frontier node.
    pub nodes: Vec<usize>,
    /// Deepest materialized node; the residual infinite tail hangs here.
    pub frontier: usize,
    /// The dangling edge the leaf exits through. Distinct leaves may
    /// share the frontier node but never the exit edge, and their
    /// residual tails are independent.
    pub tail_edge: usize,
}

#[derive(Debug, Clone)]
pub struct SkeletonTree {
    pub levels: Vec<f64>,
    pub counts: Vec<u64>,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    /// Level current at the start of each completed layer pass.
    pub layer_start_level: Vec<usize>,
    /// Crossing counts are exact only strictly above this level.
    pub frontier_level: f64,
    pub splits: u64,
    leaves: Vec<LeafPath>,
}

/// Build the skeleton for `(levels, counts)`; `split_budget` optionally
/// caps the number of split operations (the stopping rule is otherwise
/// "counts exhausted", i.e. the last count value has been realized).
pub fn build_skeleton(
    levels: &[f64],
    counts: &[u64],
    split_budget: Option<u64>,
) -> Result<SkeletonTree, TreeError> {
    if levels.is_empty() || levels.len() != counts.len() {
        return Err(TreeError::InconsistentSequences(
            "levels and counts must be non-empty and of equal length".into(),
        ));
    }
    let mut prev = 0.5;
    for &e in levels {
        if !(e > 0.0 && e < prev) {
            return Err(TreeError::InconsistentSequences(format!(
                "levels must strictly decrease within (0, 1/2), got {e} after {prev}"
            )));
        }
        prev = e;
    }
    if counts[0] != 1 || counts.windows(2).any(|w| w[1] < w[0]) {
        return Err(TreeError::InconsistentSequences(
            "counts must be nondecreasing with N_1 = 1".into(),
        ));
    }

    let last = counts.len(); // 1-based level L
    let mut nodes = vec![Node {
        id: 0,
        level_k: 0,
        eps: 0.5,
        parent: None,
        child_edges: vec![0],
    }];
    let mut edges = vec![Edge {
        layer: 0,
        slot: 0,
        top: 0,
        end: None,
        deleted: false,
    }];
    let mut layers: Vec<Vec<usize>> = vec![vec![0]];
    let mut layer_start_level = Vec::new();

    let mut k = 1usize; // current level, 1-based
    let mut m = 1u64; // realized crossing count below the current level
    let mut splits = 0u64;

    // skip levels whose target count is already met
    while k < last && m >= counts[k] {
        k += 1;
    }

    'passes: for r in 0.. {
        if k >= last || layers[r].is_empty() {
            break;
        }
        layer_start_level.push(k);
        let order = order_sequence(r as u32)?;
        let mut next_layer = vec![usize::MAX; 2 * layers[r].len()];
        for &s in &order {
            if k >= last || split_budget.is_some_and(|b| splits >= b) {
                layers.push(
                    next_layer
                        .into_iter()
                        .filter(|&e| e != usize::MAX)
                        .collect(),
                );
                break 'passes;
            }
            let ei = layers[r][s as usize];
            let top = edges[ei].top;
            let eps_k = levels[k - 1];
            let attach = if nodes[top].level_k < k {
                // end this edge with a fresh node at the current level
                let nid = nodes.len();
                nodes.push(Node {
                    id: nid,
                    level_k: k,
                    eps: eps_k,
                    parent: Some(top),
                    child_edges: Vec::new(),
                });
                edges[ei].end = Some(nid);
                nid
            } else {
                // edge already hangs from a node at this level: replace it
                edges[ei].deleted = true;
                nodes[top].child_edges.retain(|&c| c != ei);
                top
            };
            for half in 0..2u64 {
                let new_e = edges.len();
                edges.push(Edge {
                    layer: r as u32 + 1,
                    slot: 2 * s + half,
                    top: attach,
                    end: None,
                    deleted: false,
                });
                nodes[attach].child_edges.push(new_e);
                next_layer[(2 * s + half) as usize] = new_e;
            }
            m += 1;
            splits += 1;
            while k < last && m >= counts[k] {
                k += 1;
            }
        }
        layers.push(next_layer);
    }

    let frontier_level = levels[k - 1];
    let mut tree = SkeletonTree {
        levels: levels.to_vec(),
        counts: counts.to_vec(),
        nodes,
        edges,
        layer_start_level,
        frontier_level,
        splits,
        leaves: Vec::new(),
    };
    tree.leaves = tree.collect_leaves();
    Ok(tree)
}

impl SkeletonTree {
    fn path_to(&self, node: usize) -> Vec<usize> {
        let mut path = vec![node];
        let mut cur = node;
        while let Some(p) = self.nodes[cur].parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Catalog Q, truncated: in the infinite construction every node
    /// carries the leaf of its leftmost descent; within a finite build
    /// the distinct leaves correspond exactly to the dangling edges
    /// (each stands for an unbuilt infinite subtree and the leftmost
    /// descent into it), listed in edge-creation order.
    fn collect_leaves(&self) -> Vec<LeafPath> {
        let mut out = Vec::new();
        for (ei, e) in self.edges.iter().enumerate() {
            if e.deleted || e.end.is_some() {
                continue;
            }
            out.push(LeafPath {
                nodes: self.path_to(e.top),
                frontier: e.top,
                tail_edge: ei,
            });
        }
        out
    }

    pub fn leaf_catalog(&self) -> &[LeafPath] {
        &self.leaves
    }

    pub fn leaf(&self, index_1based: u64) -> Result<&LeafPath, TreeError> {
        if index_1based < 1 || index_1based as usize > self.leaves.len() {
            return Err(TreeError::UnknownLeaf(index_1based));
        }
        Ok(&self.leaves[(index_1based - 1) as usize])
    }

    /// Tree distance between catalog leaves: the level of the last
    /// common node of the two paths (0 for identical leaves). Two
    /// leaves exiting the same frontier node through different dangling
    /// edges diverge exactly there.
    pub fn leaf_distance(&self, a: &LeafPath, b: &LeafPath) -> f64 {
        if a.tail_edge == b.tail_edge {
            return 0.0;
        }
        let mut last = 0usize;
        for (x, y) in a.nodes.iter().zip(b.nodes.iter()) {
            if x != y {
                break;
            }
            last = *x;
        }
        self.nodes[last].eps
    }

    pub fn leaf_distance_by_index(&self, i: u64, j: u64) -> Result<f64, TreeError> {
        Ok(self.leaf_distance(self.leaf(i)?, self.leaf(j)?))
    }

    /// Switch probability of the edge into `node` from its parent.
    pub fn edge_switch_prob(&self, node: usize) -> f64 {
        let parent = self.nodes[node].parent.expect("root has no incoming edge");
        let ec = (1.0 - 2.0 * self.nodes[node].eps).sqrt();
        let ep = (1.0 - 2.0 * self.nodes[parent].eps).sqrt();
        (ec - ep) / ec
    }

    /// Probability that a leaf's residual infinite tail overrides the
    /// frontier value: `1 - sqrt(1 - 2 eps_frontier)`.
    pub fn tail_switch_prob(&self, leaf: &LeafPath) -> f64 {
        1.0 - (1.0 - 2.0 * self.nodes[leaf.frontier].eps).sqrt()
    }

    /// Exact number of edges crossing level `eps`. Dangling edges stand
    /// for unbuilt infinite subtrees, so the count is only exact above
    /// the frontier; node levels are the exceptional set.
    pub fn crossing_at(&self, eps: f64) -> Result<u64, TreeError> {
        if eps <= self.frontier_level {
            return Err(TreeError::BelowFrontier {
                eps,
                frontier: self.frontier_level,
            });
        }
        for &lv in &self.levels {
            if (eps - lv).abs() < 1e-12 {
                return Err(TreeError::LevelCoincidesWithNode {
                    eps,
                    node_level: lv,
                });
            }
        }
        let mut count = 0u64;
        for e in &self.edges {
            if e.deleted {
                continue;
            }
            let top_eps = self.nodes[e.top].eps;
            let below = match e.end {
                Some(child) => self.nodes[child].eps < eps,
                None => true,
            };
            if top_eps > eps && below {
                count += 1;
            }
        }
        Ok(count)
    }

    /// Crossing counts per layer-`r` subtree at level `eps`
    /// (min, max over the `2^r` slots). Valid for `eps` below the level
    /// at which layer `r` started and above the frontier.
    pub fn subtree_crossing_spread(&self, r: usize, eps: f64) -> Result<(u64, u64), TreeError> {
        if r >= self.layer_start_level.len() {
            return Err(TreeError::InconsistentSequences(format!(
                "layer {r} was never processed"
            )));
        }
        let k_r = self.layer_start_level[r];
        if eps >= self.levels[k_r - 1] {
            return Err(TreeError::InconsistentSequences(format!(
                "audit level {eps} must lie below the layer-{r} start level {}",
                self.levels[k_r - 1]
            )));
        }
        if eps <= self.frontier_level {
            return Err(TreeError::BelowFrontier {
                eps,
                frontier: self.frontier_level,
            });
        }
        let slots = 1u64 << r;
        let mut per = vec![0u64; slots as usize];
        for e in &self.edges {
            if e.deleted {
                continue;
            }
            let top_eps = self.nodes[e.top].eps;
            let below = match e.end {
                Some(child) => self.nodes[child].eps < eps,
                None => true,
            };
            if top_eps > eps && below {
                assert!(
                    e.layer as usize >= r,
                    "crossing edge below the layer start level must belong to layer >= r"
                );
                per[(e.slot >> (e.layer as usize - r)) as usize] += 1;
            }
        }
        Ok((
            per.iter().copied().min().unwrap(),
            per.iter().copied().max().unwrap(),
        ))
    }

    pub fn node_label(&self, id: usize) -> String {
        format!("v({},{})", self.nodes[id].level_k, id + 1)
    }

    /// Deterministic DOT export of the materialized topology.
    pub fn export_dot(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        out.push_str("digraph skeleton {\n");
        for n in &self.nodes {
            writeln!(
                out,
                "  n{} [label=\"{}\" level=\"{}\"];",
                n.id,
                self.node_label(n.id),
                n.eps
            )
            .unwrap();
        }
        for e in &self.edges {
            if e.deleted {
                continue;
            }
            if let Some(end) = e.end {
                let len = self.nodes[e.top].eps - self.nodes[end].eps;
                writeln!(out, "  n{} -> n{} [label=\"{}\"];", e.top, end, len).unwrap();
            }
        }
        out.push_str("}\n");
        out
    }

    /// JSON dump (nodes, edges, levels) for external rendering.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct EdgeDump {
            from: usize,
            to: usize,
            length: f64,
        }
        #[derive(Serialize)]
        struct Dump<'a> {
            levels: &'a [f64],
            counts: &'a [u64],
            frontier_level: f64,
            splits: u64,
            nodes: Vec<serde_json::Value>,
            edges: Vec<EdgeDump>,
        }
        let nodes = self
            .nodes
            .iter()
            .map(|n| {
                serde_json::json!({
                    "id": n.id,
                    "label": self.node_label(n.id),
                    "level_k": n.level_k,
                    "eps": n.eps,
                    "parent": n.parent,
                })
            })
            .collect();
        let edges = self
            .edges
            .iter()
            .filter(|e| !e.deleted)
            .filter_map(|e| {
                e.end.map(|end| EdgeDump {
                    from: e.top,
                    to: end,
                    length: self.nodes[e.top].eps - self.nodes[end].eps,
                })
            })
            .collect();
        let dump = Dump {
            levels: &self.levels,
            counts: &self.counts,
            frontier_level: self.frontier_level,
            splits: self.splits,
            nodes,
            edges,
        };
        serde_json::to_string_pretty(&dump).expect("tree dump serializes")
    }
}

/// Assemble a chain process over the same `(levels, counts)` data a
/// skeleton tree would use: nested events `E_k` with `P(E_k) = 2 eps_k`
/// exactly, components at level `k` following their own coin on `E_k`
/// and the anchor coin otherwise.
pub fn thin_chain_build(
    levels: &[f64],
    counts: &[u64],
    truncation: u64,
) -> Result<crate::process::ProcessSpec, crate::process::ProcessError> {
    crate::process::ProcessSpec::new(
        crate::process::KindParams::ThinChain {
            levels: levels.to_vec(),
            counts: counts.to_vec(),
        },
        truncation,
    )
}

/// Labelled edge of a parsed DOT export: `(top, end, length)`.
pub type DotEdge = (String, String, f64);

/// Parse the output of [`SkeletonTree::export_dot`] back into labelled
/// topology.
pub fn parse_dot(text: &str) -> Result<(Vec<String>, Vec<DotEdge>), String> {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if let Some((from, rest)) = line.split_once(" -> ") {
            let (to, attrs) = rest.split_once(' ').ok_or("edge without attributes")?;
            let len: f64 = attrs
                .split("label=\"")
                .nth(1)
                .and_then(|s| s.split('"').next())
                .ok_or("edge without label")?
                .parse()
                .map_err(|e| format!("bad edge length: {e}"))?;
            edges.push((from.trim().to_string(), to.trim().to_string(), len));
        } else if line.starts_with('n') && line.contains("[label=") {
            let name = line.split_whitespace().next().unwrap().to_string();
            nodes.push(name);
        }
    }
    Ok((nodes, edges))
}
