//! JSONL graph serialization: one graph object per line.
//!
//! Transformed graphs carry their node marks as a single extra categorical
//! channel with reserved ids, so plain and transformed graphs share one
//! payload format. Ingestion strips the mark channel back out when present.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{validate, Graph, NodeMark};

pub const MARK_ORIGINAL: u32 = u32::MAX - 2;
pub const MARK_FEATURE_NODE: u32 = u32::MAX - 1;
pub const MARK_VIRTUAL_NODE: u32 = u32::MAX;

#[derive(Debug, Serialize, Deserialize)]
struct GraphRecord {
    id: String,
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    node_cat: Vec<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    node_cont: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    edge_cat: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    edge_val: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    y: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    y_mask: Option<Vec<bool>>,
}

fn mark_to_id(m: NodeMark) -> u32 {
    match m {
        NodeMark::Original => MARK_ORIGINAL,
        NodeMark::FeatureNode => MARK_FEATURE_NODE,
        NodeMark::VirtualNode => MARK_VIRTUAL_NODE,
    }
}

fn id_to_mark(id: u32) -> Option<NodeMark> {
    match id {
        MARK_ORIGINAL => Some(NodeMark::Original),
        MARK_FEATURE_NODE => Some(NodeMark::FeatureNode),
        MARK_VIRTUAL_NODE => Some(NodeMark::VirtualNode),
        _ => None,
    }
}

fn to_record(g: &Graph) -> GraphRecord {
    let has_marks = g.node_marks.iter().any(|&m| m != NodeMark::Original);
    let node_cat = if has_marks {
        g.node_categories
            .iter()
            .zip(&g.node_marks)
            .map(|(row, &m)| {
                let mut row = row.clone();
                row.push(mark_to_id(m));
                row
            })
            .collect()
    } else {
        g.node_categories.clone()
    };
    GraphRecord {
        id: g.graph_id.clone(),
        num_nodes: g.num_nodes,
        edges: g.edges.clone(),
        node_cat,
        node_cont: g.node_continuous.clone(),
        edge_cat: g.edge_categories.clone(),
        edge_val: g.edge_values.clone(),
        y: g.labels.clone(),
        y_mask: g.label_mask.clone(),
    }
}

fn from_record(r: GraphRecord) -> std::result::Result<Graph, String> {
    // Detect a trailing mark channel: every row's last id is a reserved mark id.
    let has_mark_channel = !r.node_cat.is_empty()
        && r.node_cat
            .iter()
            .all(|row| row.last().map_or(false, |&id| id_to_mark(id).is_some()));
    let (node_categories, node_marks) = if has_mark_channel {
        let mut cats = Vec::with_capacity(r.node_cat.len());
        let mut marks = Vec::with_capacity(r.node_cat.len());
        for mut row in r.node_cat {
            let mark = id_to_mark(row.pop().unwrap()).unwrap();
            cats.push(row);
            marks.push(mark);
        }
        (cats, marks)
    } else {
        let marks = vec![NodeMark::Original; r.num_nodes];
        (r.node_cat, marks)
    };
    let g = Graph {
        graph_id: r.id,
        num_nodes: r.num_nodes,
        edges: r.edges,
        node_categories,
        node_continuous: r.node_cont,
        edge_categories: r.edge_cat,
        edge_values: r.edge_val,
        node_marks,
        labels: r.y,
        label_mask: r.y_mask,
    };
    let report = validate(&g);
    if !report.is_valid() {
        return Err(report.violations.join("; "));
    }
    Ok(g)
}

pub fn parse_graph_line(line: &str, line_no: usize) -> Result<Graph> {
    let record: GraphRecord = serde_json::from_str(line).map_err(|e| Error::MalformedLine {
        line: line_no,
        reason: e.to_string(),
    })?;
    from_record(record).map_err(|reason| Error::MalformedLine { line: line_no, reason })
}

pub fn read_jsonl(path: &Path) -> Result<Vec<Graph>> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut graphs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        graphs.push(parse_graph_line(&line, i + 1)?);
    }
    Ok(graphs)
}

pub fn graph_to_json_line(g: &Graph) -> Result<String> {
    Ok(serde_json::to_string(&to_record(g))?)
}

pub fn write_jsonl(path: &Path, graphs: &[Graph]) -> Result<()> {
    let file = File::create(path)?;
    let mut writer = BufWriter::new(file);
    for g in graphs {
        writeln!(writer, "{}", graph_to_json_line(g)?)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_plain_graph() {
        let mut g = Graph::new("g0", 3, vec![(0, 1), (1, 2)]);
        g.node_categories = vec![vec![0], vec![1], vec![0]];
        let line = graph_to_json_line(&g).unwrap();
        let back = parse_graph_line(&line, 1).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn round_trip_marked_graph() {
        let mut g = Graph::new("g1", 2, vec![(0, 1)]);
        g.node_marks = vec![NodeMark::Original, NodeMark::FeatureNode];
        let line = graph_to_json_line(&g).unwrap();
        let back = parse_graph_line(&line, 1).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_graph_line("{not json", 7).unwrap_err();
        assert!(err.to_string().starts_with("line 7"));
    }

    #[test]
    fn invalid_graph_rejected_with_line_number() {
        let line = r#"{"id":"bad","num_nodes":2,"edges":[[0,5]],"node_cat":[[],[]]}"#;
        let err = parse_graph_line(line, 3).unwrap_err();
        assert!(err.to_string().contains("line 3"));
        assert!(err.to_string().contains("out of range"));
    }
}
