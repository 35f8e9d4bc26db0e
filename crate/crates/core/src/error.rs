use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QdError {
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error("unsupported group for irrep table: {0}")]
    UnsupportedGroup(String),
    #[error("lattice construction failed: {0}")]
    Lattice(String),
    #[error("inconsistent region map at edge {edge}: {reason}")]
    RegionMap { edge: String, reason: String },
    #[error("ribbon path error: {0}")]
    RibbonPath(String),
    #[error("ribbon geometry error: {0}")]
    RibbonGeometry(String),
    #[error("dimension mismatch on slot {slot}: {detail}")]
    DimensionMismatch { slot: usize, detail: String },
    #[error("states live on different lattices")]
    LatticeMismatch,
    #[error("vertex {0} has its stabilizer disabled")]
    DisabledStabilizer(usize),
    #[error("label {label} is not in the spectrum of the {region} region")]
    LabelRegion { label: String, region: String },
    #[error("projector family is inconsistent: probabilities sum to {0}")]
    Consistency(f64),
    #[error("operator is not gauge covariant at non-root vertex {0}")]
    GaugeViolation(usize),
    #[error("state has zero norm after {0}")]
    ZeroNorm(String),
    #[error("closed ribbon required: {0}")]
    OpenRibbon(String),
    #[error("wall error: {0}")]
    Wall(String),
    #[error("schedule error: {0}")]
    Schedule(String),
    #[error("unsupported gate: {0}")]
    UnsupportedGate(String),
    #[error("placement error: {0}")]
    Placement(String),
    #[error("routing error: {0}")]
    Routing(String),
    #[error("protocol stage {stage} failed: {reason}")]
    Protocol { stage: String, reason: String },
    #[error("resource limit exceeded: {0}")]
    Resource(String),
}

pub type Result<T> = std::result::Result<T, QdError>;
