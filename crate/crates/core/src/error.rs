use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph {graph_id}: {reason}")]
    InvalidGraph { graph_id: String, reason: String },

    #[error("cannot augment empty graph")]
    EmptyGraph,

    #[error("nothing to structuralize: {0}")]
    NothingToStructuralize(String),

    #[error("graph {0} already contains non-original marks")]
    AlreadyTransformed(String),

    #[error("graph too large for dense solvers: {num_nodes} nodes (limit {limit})")]
    GraphTooLarge { num_nodes: usize, limit: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("schema mismatch in channel {channel}: {reason}")]
    SchemaMismatch { channel: usize, reason: String },

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown target group: {0}")]
    UnknownGroup(String),

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("target file format error: {0}")]
    TargetFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
