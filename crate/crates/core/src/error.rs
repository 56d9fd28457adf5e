use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("disconnected")]
    Disconnected,
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("disconnected support")]
    DisconnectedSupport,
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error("window too large for exact enumeration ({sites} free sites, cap {cap})")]
    WindowTooLarge { sites: usize, cap: usize },
    #[error("unbounded cell")]
    UnboundedCell,
    #[error("invalid boundary condition: {0}")]
    InvalidBoundary(String),
    #[error("inconsistent labels: {0}")]
    InconsistentLabels(String),
    #[error("R2 too small: {0}")]
    R2TooSmall(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no witness found: {0}")]
    NoWitness(String),
    #[error("differing exterior labels")]
    DifferentExteriorLabels,
    #[error("radius insufficient: {0}")]
    RadiusInsufficient(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("invalid ground state: {0}")]
    InvalidGroundState(String),
    #[error("invalid isometry: {0}")]
    InvalidIsometry(String),
    #[error("missing assumption report")]
    MissingAssumptionReport,
    #[error("cap exceeded: {0}")]
    CapExceeded(String),
    #[error("incomplete enumeration")]
    IncompleteEnumeration,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable machine-readable tag used in CLI error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Disconnected => "disconnected",
            Error::InvalidGraph(_) => "invalid_graph",
            Error::DisconnectedSupport => "disconnected_support",
            Error::InvalidShape(_) => "invalid_shape",
            Error::InvalidConfiguration(_) => "invalid_configuration",
            Error::WindowTooLarge { .. } => "window_too_large",
            Error::UnboundedCell => "unbounded_cell",
            Error::InvalidBoundary(_) => "invalid_boundary_condition",
            Error::InconsistentLabels(_) => "inconsistent_labels",
            Error::R2TooSmall(_) => "r2_too_small",
            Error::Precondition(_) => "precondition",
            Error::NoWitness(_) => "no_witness",
            Error::DifferentExteriorLabels => "different_exterior_labels",
            Error::RadiusInsufficient(_) => "radius_insufficient",
            Error::BudgetExceeded(_) => "budget_exceeded",
            Error::InvalidGroundState(_) => "invalid_ground_state",
            Error::InvalidIsometry(_) => "invalid_isometry",
            Error::MissingAssumptionReport => "missing_assumption_report",
            Error::CapExceeded(_) => "cap_exceeded",
            Error::IncompleteEnumeration => "incomplete_enumeration",
            Error::Parse(_) => "parse",
            Error::Schema { .. } => "schema",
            Error::Io(_) => "io",
        }
    }
}
