//! Feature-structuralization: encodes feature information as additional
//! structure. Categorical channels become feature-nodes wired to the nodes
//! carrying each category; edge categories go through an incidence-network
//! representation first; continuous channels become one feature-node per
//! channel with the values stored on the new edges. The transformed graph
//! keeps only node marks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{validate, Graph, NodeMark};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructuralizationResult {
    pub graph: Graph,
    /// Original node index -> index in the transformed graph.
    pub original_node_map: Vec<usize>,
    /// (channel, category) -> feature-node index in the transformed graph.
    pub feature_node_index: BTreeMap<(usize, u32), usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformMode {
    Categorical,
    Edge,
    Continuous,
    Auto,
}

/// Node/edge growth summary emitted by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransformStats {
    pub graphs: usize,
    pub nodes_before: usize,
    pub nodes_after: usize,
    pub edges_before: usize,
    pub edges_after: usize,
}

fn check_input(g: &Graph) -> Result<()> {
    let report = validate(g);
    if !report.is_valid() {
        return Err(Error::InvalidGraph {
            graph_id: g.graph_id.clone(),
            reason: report.violations.join("; "),
        });
    }
    if g.node_marks.iter().any(|&m| m != NodeMark::Original) {
        return Err(Error::AlreadyTransformed(g.graph_id.clone()));
    }
    Ok(())
}

struct Builder {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    /// Values for valued edges; only materialized when a continuous phase runs.
    edge_values: Vec<f64>,
    has_values: bool,
    marks: Vec<NodeMark>,
    feature_node_index: BTreeMap<(usize, u32), usize>,
}

impl Builder {
    fn push_edge(&mut self, u: usize, v: usize, value: f64) {
        self.edges.push((u, v));
        self.edge_values.push(value);
    }

    /// Adds one feature-node per (channel, category) present, wired to every
    /// node carrying that category. Channels are partial: `None` entries
    /// (e.g. original nodes in the edge-channel) get no feature edge.
    fn apply_categorical(&mut self, channels: &[Vec<Option<u32>>]) {
        for (i, channel) in channels.iter().enumerate() {
            let mut categories: Vec<u32> = channel.iter().flatten().copied().collect();
            categories.sort_unstable();
            categories.dedup();
            for cat in categories {
                let fnode = self.num_nodes;
                self.num_nodes += 1;
                self.marks.push(NodeMark::FeatureNode);
                self.feature_node_index.insert((i, cat), fnode);
                for (v, entry) in channel.iter().enumerate() {
                    if *entry == Some(cat) {
                        self.push_edge(v, fnode, 0.0);
                    }
                }
            }
        }
    }
}

fn structuralize_impl(
    g: &Graph,
    do_edge: bool,
    do_categorical: bool,
    do_continuous: bool,
) -> Result<StructuralizationResult> {
    check_input(g)?;
    let n = g.num_nodes;
    let d = g.num_channels();

    let mut builder = Builder {
        num_nodes: n,
        edges: Vec::new(),
        edge_values: Vec::new(),
        has_values: do_continuous,
        marks: vec![NodeMark::Original; n],
        feature_node_index: BTreeMap::new(),
    };

    // Partial categorical channels over the (possibly edge-materialized) node set.
    let mut channels: Vec<Vec<Option<u32>>> = (0..d)
        .map(|i| (0..n).map(|v| Some(g.node_categories[v][i])).collect())
        .collect();

    if do_edge {
        let edge_cats = g
            .edge_categories
            .as_ref()
            .ok_or_else(|| Error::NothingToStructuralize("graph has no edge categories".into()))?;
        // Incidence network: each original edge becomes a node adjacent to
        // its two endpoints; the original edge itself is not kept.
        let mut edge_channel: Vec<Option<u32>> = vec![None; n];
        for (j, &(u, v)) in g.edges.iter().enumerate() {
            let enode = builder.num_nodes;
            builder.num_nodes += 1;
            builder.marks.push(NodeMark::FeatureNode);
            builder.push_edge(u, enode, 0.0);
            builder.push_edge(v, enode, 0.0);
            for channel in &mut channels {
                channel.push(None);
            }
            edge_channel.push(Some(edge_cats[j]));
        }
        channels.push(edge_channel);
    } else {
        builder.edges.extend_from_slice(&g.edges);
        builder.edge_values.extend(std::iter::repeat(0.0).take(g.edges.len()));
    }

    if do_categorical {
        if channels.is_empty() {
            return Err(Error::NothingToStructuralize(
                "graph has no categorical channels".into(),
            ));
        }
        builder.apply_categorical(&channels);
    }

    if do_continuous {
        let cont = g.node_continuous.as_ref().ok_or_else(|| {
            Error::NothingToStructuralize("graph has no continuous features".into())
        })?;
        let c = cont.first().map_or(0, |r| r.len());
        if c == 0 {
            return Err(Error::NothingToStructuralize(
                "continuous feature matrix has zero columns".into(),
            ));
        }
        let channel_offset = d + usize::from(do_edge);
        for k in 0..c {
            let fnode = builder.num_nodes;
            builder.num_nodes += 1;
            builder.marks.push(NodeMark::FeatureNode);
            builder.feature_node_index.insert((channel_offset + k, 0), fnode);
            for v in 0..n {
                builder.push_edge(v, fnode, cont[v][k]);
            }
        }
    }

    let graph = Graph {
        graph_id: g.graph_id.clone(),
        num_nodes: builder.num_nodes,
        edges: builder.edges,
        node_categories: vec![Vec::new(); builder.num_nodes],
        node_continuous: None,
        edge_categories: None,
        edge_values: builder.has_values.then_some(builder.edge_values),
        node_marks: builder.marks,
        labels: g.labels.clone(),
        label_mask: g.label_mask.clone(),
    };
    Ok(StructuralizationResult {
        graph,
        original_node_map: (0..n).collect(),
        feature_node_index: builder.feature_node_index,
    })
}

/// Categorical structuralization: one feature-node per (channel, category)
/// present, connected to the nodes attributed with that category.
pub fn structuralize_categorical(g: &Graph) -> Result<StructuralizationResult> {
    if g.num_channels() == 0 {
        check_input(g)?;
        return Err(Error::NothingToStructuralize(
            "graph has no categorical channels".into(),
        ));
    }
    structuralize_impl(g, false, true, false)
}

/// Incidence-network variant: edges become nodes carrying the edge category
/// as a categorical channel, then categorical structuralization applies.
pub fn structuralize_edge_features(g: &Graph) -> Result<StructuralizationResult> {
    structuralize_impl(g, true, true, false)
}

/// Continuous variant: one feature-node per continuous channel, connected to
/// all original nodes, with the channel values stored as edge attributes.
pub fn structuralize_continuous(g: &Graph) -> Result<StructuralizationResult> {
    structuralize_impl(g, false, false, true)
}

/// Applies whichever transforms the graph's payload calls for, in the fixed
/// order edge -> categorical -> continuous.
pub fn structuralize_auto(g: &Graph) -> Result<StructuralizationResult> {
    let do_edge = g.edge_categories.is_some();
    let do_categorical = do_edge || g.num_channels() > 0;
    let do_continuous = g.node_continuous.as_ref().map_or(0, |c| c.first().map_or(0, |r| r.len())) > 0;
    if !do_categorical && !do_continuous {
        check_input(g)?;
        return Err(Error::NothingToStructuralize(
            "graph carries no feature payload".into(),
        ));
    }
    structuralize_impl(g, do_edge, do_categorical, do_continuous)
}

pub fn structuralize(g: &Graph, mode: TransformMode) -> Result<StructuralizationResult> {
    match mode {
        TransformMode::Categorical => structuralize_categorical(g),
        TransformMode::Edge => structuralize_edge_features(g),
        TransformMode::Continuous => structuralize_continuous(g),
        TransformMode::Auto => structuralize_auto(g),
    }
}
