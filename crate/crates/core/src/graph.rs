//! In-memory graph representation, validation, and the input augmentations
//! applied before encoding (virtual node, random node features).

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Reserved category id used for nodes/edges introduced by augmentation.
pub const RESERVED_CATEGORY: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeMark {
    Original,
    FeatureNode,
    VirtualNode,
}

/// Undirected graph with per-node categorical feature channels, optional
/// continuous features, optional edge categories, and node marks.
///
/// Edges are stored once as unordered pairs. Categorical channels are total
/// on the stored nodes; a graph with no feature payload has `node_categories`
/// rows of width zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    pub graph_id: String,
    pub num_nodes: usize,
    pub edges: Vec<(usize, usize)>,
    /// Per-node category ids, one row per node, one column per channel.
    pub node_categories: Vec<Vec<u32>>,
    pub node_continuous: Option<Vec<Vec<f64>>>,
    pub edge_categories: Option<Vec<u32>>,
    /// Real-valued per-edge attributes, produced by the continuous-feature
    /// structuralization variant.
    pub edge_values: Option<Vec<f64>>,
    pub node_marks: Vec<NodeMark>,
    pub labels: Option<Vec<f64>>,
    pub label_mask: Option<Vec<bool>>,
}

impl Graph {
    /// A featureless graph with all-original marks.
    pub fn new(graph_id: impl Into<String>, num_nodes: usize, edges: Vec<(usize, usize)>) -> Self {
        Graph {
            graph_id: graph_id.into(),
            num_nodes,
            edges,
            node_categories: vec![Vec::new(); num_nodes],
            node_continuous: None,
            edge_categories: None,
            edge_values: None,
            node_marks: vec![NodeMark::Original; num_nodes],
            labels: None,
            label_mask: None,
        }
    }

    /// Number of categorical channels (width of the category rows).
    pub fn num_channels(&self) -> usize {
        self.node_categories.first().map_or(0, |row| row.len())
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.num_nodes];
        for &(u, v) in &self.edges {
            if u < self.num_nodes {
                deg[u] += 1;
            }
            if v < self.num_nodes {
                deg[v] += 1;
            }
        }
        deg
    }

    pub fn adjacency_lists(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_nodes];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj
    }

    /// Connected components as sorted node-index lists, ordered by smallest member.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let adj = self.adjacency_lists();
        let mut seen = vec![false; self.num_nodes];
        let mut comps = Vec::new();
        for start in 0..self.num_nodes {
            if seen[start] {
                continue;
            }
            let mut stack = vec![start];
            let mut comp = Vec::new();
            seen[start] = true;
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    pub fn original_node_indices(&self) -> Vec<usize> {
        (0..self.num_nodes)
            .filter(|&v| self.node_marks[v] == NodeMark::Original)
            .collect()
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every structural invariant and returns the list of violations.
pub fn validate(g: &Graph) -> ValidationReport {
    let mut v = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, &(a, b)) in g.edges.iter().enumerate() {
        if a >= g.num_nodes || b >= g.num_nodes {
            v.push(format!("edge {i} ({a},{b}): edge endpoint out of range"));
            continue;
        }
        if a == b {
            v.push(format!("edge {i} ({a},{b}): self-loop"));
            continue;
        }
        let key = (a.min(b), a.max(b));
        if !seen.insert(key) {
            v.push(format!("edge {i} ({a},{b}): duplicate undirected edge"));
        }
    }
    if g.node_categories.len() != g.num_nodes {
        v.push(format!(
            "node_categories has {} rows, expected {}",
            g.node_categories.len(),
            g.num_nodes
        ));
    } else if let Some(first) = g.node_categories.first() {
        let d = first.len();
        for (i, row) in g.node_categories.iter().enumerate() {
            if row.len() != d {
                v.push(format!("node {i} has {} categories, expected {d}", row.len()));
            }
        }
    }
    if let Some(cont) = &g.node_continuous {
        if cont.len() != g.num_nodes {
            v.push(format!(
                "node_continuous has {} rows, expected {}",
                cont.len(),
                g.num_nodes
            ));
        } else if let Some(first) = cont.first() {
            let c = first.len();
            for (i, row) in cont.iter().enumerate() {
                if row.len() != c {
                    v.push(format!("node {i} has {} continuous values, expected {c}", row.len()));
                }
            }
        }
    }
    if let Some(ec) = &g.edge_categories {
        if ec.len() != g.edges.len() {
            v.push(format!(
                "edge_categories has {} entries, expected {}",
                ec.len(),
                g.edges.len()
            ));
        }
    }
    if let Some(ev) = &g.edge_values {
        if ev.len() != g.edges.len() {
            v.push(format!(
                "edge_values has {} entries, expected {}",
                ev.len(),
                g.edges.len()
            ));
        }
    }
    if g.node_marks.len() != g.num_nodes {
        v.push(format!(
            "node_marks has {} entries, expected {}",
            g.node_marks.len(),
            g.num_nodes
        ));
    }
    if let (Some(y), Some(mask)) = (&g.labels, &g.label_mask) {
        if y.len() != mask.len() {
            v.push(format!(
                "labels has {} entries but mask has {}",
                y.len(),
                mask.len()
            ));
        }
    }
    ValidationReport { violations: v }
}

/// Adds a virtual node connected to every pre-existing node.
///
/// The new node carries mark `VirtualNode`; its category row (when channels
/// exist) and the new edges' categories use [`RESERVED_CATEGORY`].
pub fn add_virtual_node(g: &Graph) -> Result<Graph> {
    if g.num_nodes == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut out = g.clone();
    let vn = g.num_nodes;
    out.num_nodes += 1;
    out.node_marks.push(NodeMark::VirtualNode);
    let d = g.num_channels();
    out.node_categories.push(vec![RESERVED_CATEGORY; d]);
    if let Some(cont) = &mut out.node_continuous {
        let c = cont.first().map_or(0, |r| r.len());
        cont.push(vec![0.0; c]);
    }
    for v in 0..vn {
        out.edges.push((v, vn));
        if let Some(ec) = &mut out.edge_categories {
            ec.push(RESERVED_CATEGORY);
        }
        if let Some(ev) = &mut out.edge_values {
            ev.push(0.0);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RandomFeatureSpec {
    pub dim: usize,
    pub seed: u64,
}

impl Default for RandomFeatureSpec {
    fn default() -> Self {
        RandomFeatureSpec { dim: 20, seed: 0 }
    }
}

/// Standard-normal node features, keyed by (seed, graph_id) so per-graph
/// generation is order-independent across workers.
pub fn inject_random_features(g: &Graph, spec: &RandomFeatureSpec) -> Result<Vec<Vec<f64>>> {
    if spec.dim == 0 {
        return Err(Error::Config("random feature dim must be >= 1".into()));
    }
    let mut hasher = Sha256::new();
    hasher.update(spec.seed.to_le_bytes());
    hasher.update(g.graph_id.as_bytes());
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    let mut rng = ChaCha20Rng::from_seed(seed);
    let feats = (0..g.num_nodes)
        .map(|_| {
            (0..spec.dim)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect()
        })
        .collect();
    Ok(feats)
}
