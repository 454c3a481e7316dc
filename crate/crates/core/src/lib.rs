//! Feature-structuralization and positional/structural graph encodings.
//!
//! The crate covers the full desk-scale pipeline: graph ingestion and
//! validation, feature-structuralization, the P/SE target battery (Laplacian
//! eigenvector PEs and eigenvalues, electrostatic PEs, random-walk SEs,
//! heat-kernel-diagonal SEs), dataset mixing and sampling, a linear probe
//! trained with the MAE + cosine loss under AdamW and a cosine-warmup
//! schedule, and R² evaluation with heatmap-ready reporting.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod graph;
pub mod io;
pub mod pipeline;
pub mod probe;
pub mod pse;
pub mod structuralize;
pub mod synth;
pub mod targets_io;

pub use error::{Error, Result};
pub use graph::{add_virtual_node, inject_random_features, validate, Graph, NodeMark, RandomFeatureSpec};
pub use pse::{assemble_targets, LaplacianKind, PseConfig, PseTargets, TargetMode};
pub use structuralize::{structuralize, StructuralizationResult, TransformMode};
