use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("network has no reaction channels")]
    NoChannels,
    #[error("channel `{channel}`: rate constant {rate} is negative or not finite")]
    NegativeRate { channel: String, rate: f64 },
    #[error("channel `{channel}`: reactant order {order} is not an elementary law (0, 1 or 2)")]
    UnsupportedOrder { channel: String, order: u32 },
    #[error("channel `{channel}` references species index {index} out of range")]
    SpeciesOutOfRange { channel: String, index: u32 },
    #[error("firing `{channel}` would make `{species}` negative")]
    NegativePopulation { channel: String, species: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown species `{name}`")]
    UnknownSpecies { line: usize, name: String },
    #[error("line {line}: duplicate species `{name}`")]
    DuplicateSpecies { line: usize, name: String },
    #[error("line {line}: {source}")]
    Model {
        line: usize,
        #[source]
        source: ModelError,
    },
    #[error(transparent)]
    Network(ModelError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpatialError {
    #[error("domain side {domain} is not an integer multiple of subvolume side {side}")]
    NonDivisibleDomain { domain: f64, side: f64 },
    #[error("mesh dimensions must be positive and side length > 0")]
    InvalidMesh,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error("event queue corrupted: {0}")]
    Corrupted(String),
}
