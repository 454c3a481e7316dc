//! Columnar target/prediction file format: a fixed magic, a JSON header
//! declaring block names, widths and provenance, then a little-endian f64
//! payload (graphs in header order, node rows of the full block width).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pse::{Provenance, PseTargets, TargetBlock};

const MAGIC: &[u8; 8] = b"PSETGT01";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockHeader {
    pub name: String,
    pub provenance: Provenance,
    pub width: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphHeader {
    pub id: String,
    pub node_ids: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetFileHeader {
    pub blocks: Vec<BlockHeader>,
    pub graphs: Vec<GraphHeader>,
    /// Digest of the producing configuration, for provenance tracking.
    #[serde(default)]
    pub config_digest: String,
}

fn layout_of(t: &PseTargets) -> Vec<BlockHeader> {
    t.blocks
        .iter()
        .map(|b| BlockHeader {
            name: b.name.clone(),
            provenance: b.provenance,
            width: b.width(),
        })
        .collect()
}

pub fn write_targets(path: &Path, targets: &[PseTargets], config_digest: &str) -> Result<()> {
    let first = targets
        .first()
        .ok_or_else(|| Error::TargetFormat("cannot write empty target set".into()))?;
    let blocks = layout_of(first);
    for t in targets {
        let l = layout_of(t);
        if l.iter().map(|b| (&b.name, b.width)).ne(blocks.iter().map(|b| (&b.name, b.width))) {
            return Err(Error::TargetFormat(format!(
                "inconsistent block layout in graph {}",
                t.graph_id
            )));
        }
    }
    let header = TargetFileHeader {
        blocks,
        graphs: targets
            .iter()
            .map(|t| GraphHeader {
                id: t.graph_id.clone(),
                node_ids: t.node_ids.clone(),
            })
            .collect(),
        config_digest: config_digest.to_string(),
    };
    let header_bytes = serde_json::to_vec(&header)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(header_bytes.len() as u32).to_le_bytes())?;
    w.write_all(&header_bytes)?;
    for t in targets {
        for i in 0..t.node_ids.len() {
            for x in t.row(i) {
                w.write_all(&x.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_targets(path: &Path) -> Result<Vec<PseTargets>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::TargetFormat("bad magic".into()));
    }
    let mut len_bytes = [0u8; 4];
    r.read_exact(&mut len_bytes)?;
    let header_len = u32::from_le_bytes(len_bytes) as usize;
    let mut header_bytes = vec![0u8; header_len];
    r.read_exact(&mut header_bytes)?;
    let header: TargetFileHeader = serde_json::from_slice(&header_bytes)?;
    let total_width: usize = header.blocks.iter().map(|b| b.width).sum();
    let mut out = Vec::with_capacity(header.graphs.len());
    for gh in &header.graphs {
        let rows = gh.node_ids.len();
        let mut raw = vec![0u8; rows * total_width * 8];
        r.read_exact(&mut raw).map_err(|_| {
            Error::TargetFormat(format!("truncated payload for graph {}", gh.id))
        })?;
        let mut values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let mut blocks: Vec<TargetBlock> = header
            .blocks
            .iter()
            .map(|b| TargetBlock {
                name: b.name.clone(),
                provenance: b.provenance,
                rows: Vec::with_capacity(rows),
            })
            .collect();
        for _ in 0..rows {
            for (bi, bh) in header.blocks.iter().enumerate() {
                let row: Vec<f64> = (0..bh.width).map(|_| values.next().unwrap()).collect();
                blocks[bi].rows.push(row);
            }
        }
        out.push(PseTargets {
            graph_id: gh.id.clone(),
            node_ids: gh.node_ids.clone(),
            blocks,
        });
    }
    Ok(out)
}

/// Human-readable CSV dump: one row per (graph, node), columns qualified by
/// block group key and column index.
pub fn dump_csv<W: Write>(targets: &[PseTargets], out: &mut W) -> Result<()> {
    let Some(first) = targets.first() else {
        return Ok(());
    };
    let mut header = vec!["graph_id".to_string(), "node_id".to_string()];
    for b in &first.blocks {
        for c in 0..b.width() {
            header.push(format!("{}[{}]", b.group_key(), c));
        }
    }
    writeln!(out, "{}", header.join(","))?;
    for t in targets {
        for (i, &node) in t.node_ids.iter().enumerate() {
            let mut fields = vec![t.graph_id.clone(), node.to_string()];
            fields.extend(t.row(i).iter().map(|x| x.to_string()));
            writeln!(out, "{}", fields.join(","))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::pse::{assemble_targets, PseConfig, TargetMode};
    use tempfile::tempdir;

    #[test]
    fn round_trip_target_file() {
        let mut g = Graph::new("k3", 3, vec![(0, 1), (1, 2), (0, 2)]);
        g.node_categories = vec![vec![0], vec![0], vec![1]];
        let t = assemble_targets(&g, &PseConfig::default(), TargetMode::Structuralized).unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.pset");
        write_targets(&path, &[t.clone()], "digest").unwrap();
        let back = read_targets(&path).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].graph_id, "k3");
        assert_eq!(back[0].total_width(), t.total_width());
        for i in 0..3 {
            assert_eq!(back[0].row(i), t.row(i));
        }
    }

    #[test]
    fn csv_dump_has_expected_shape() {
        let g = Graph::new("e", 2, vec![(0, 1)]);
        let t = assemble_targets(&g, &PseConfig::default(), TargetMode::Plain).unwrap();
        let mut buf = Vec::new();
        dump_csv(&[t], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0].split(',').count(), 2 + 55);
    }
}
