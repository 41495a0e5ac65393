use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("encoding range: {0}")]
    EncodingRange(String),

    #[error("malformed gene word {word:#018x}: {reason}")]
    MalformedGene { word: u64, reason: String },

    #[error("invalid genome {genome_id}: {reason}")]
    InvalidGenome { genome_id: u32, reason: String },

    #[error("genome {genome_id} is not in canonical order")]
    NonCanonical { genome_id: u32 },

    #[error("population format error at byte {offset}: {reason}")]
    Format { offset: usize, reason: String },

    #[error("missing fitness for genome {0}")]
    MissingFitness(u32),

    #[error("empty population")]
    EmptyPopulation,

    #[error("PE count must be at least 1")]
    ZeroPes,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("activation of node {0} is not available")]
    MissingActivation(u16),

    #[error("genome {0} contains a cycle among enabled connections")]
    CyclicGenome(u32),

    #[error("unknown {kind} code {code}")]
    UnknownCode { kind: &'static str, code: u8 },

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("invalid energy table: {0}")]
    Energy(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("reference/streaming mismatch in generation {generation}:\n{report}")]
    CompareMismatch { generation: u32, report: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
