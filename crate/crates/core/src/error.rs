use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the engine can report. Each variant maps onto a stable
/// machine-readable code shared by the service, the CLI and the C ABI.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("unknown dimension `{0}`")]
    UnknownDimension(String),
    #[error("unknown measure `{0}`")]
    UnknownMeasure(String),
    #[error("unknown value `{0}`")]
    UnknownValue(String),
    #[error("value `{value}` belongs to dimension `{actual}`, not `{listed}`")]
    WrongDimension {
        value: String,
        listed: String,
        actual: String,
    },
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("name `{0}` is already used by a real or scenario value")]
    NameCollision(String),
    #[error("query names its own target scenario `{0}`")]
    SelfReference(String),
    #[error("no rows can be resolved for {0}")]
    EmptyResolution(String),
    #[error("query selects no values for dimension `{0}`")]
    EmptySelection(String),
    #[error("query names scenario value `{0}`; plain selection works on real values only")]
    ScenarioInRealQuery(String),
    #[error("non-finite factor for measure `{0}`")]
    NonFiniteFactor(String),
    #[error("no entry with key {0}")]
    MissingKey(String),
    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("line {line}: cannot parse `{cell}` in measure column `{column}` as a finite number")]
    MeasureParse { line: usize, column: String, cell: String },
    #[error("value `{value}` appears in both `{first}` and `{second}`")]
    DuplicateValue {
        value: String,
        first: String,
        second: String,
    },
    #[error("malformed csv: {0}")]
    Csv(String),
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("parse error at column {position}: {message}")]
    QueryParse { position: usize, message: String },
    #[error("no cube loaded")]
    NoCube,
}

impl Error {
    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidSchema(_) => "INVALID_SCHEMA",
            Error::SchemaMismatch(_) => "SCHEMA_MISMATCH",
            Error::UnknownDimension(_) => "UNKNOWN_DIMENSION",
            Error::UnknownMeasure(_) => "UNKNOWN_MEASURE",
            Error::UnknownValue(_) => "UNKNOWN_VALUE",
            Error::WrongDimension { .. } => "WRONG_DIMENSION",
            Error::UnknownScenario(_) => "UNKNOWN_SCENARIO",
            Error::NameCollision(_) => "NAME_COLLISION",
            Error::SelfReference(_) => "SELF_REFERENCE",
            Error::EmptyResolution(_) => "EMPTY_RESOLUTION",
            Error::EmptySelection(_) => "EMPTY_SELECTION",
            Error::ScenarioInRealQuery(_) => "SCENARIO_IN_REAL_QUERY",
            Error::NonFiniteFactor(_) => "NON_FINITE_FACTOR",
            Error::MissingKey(_) => "MISSING_KEY",
            Error::IndexOutOfRange { .. } => "INDEX_OUT_OF_RANGE",
            Error::MissingColumn(_) => "MISSING_COLUMN",
            Error::MeasureParse { .. } => "MEASURE_PARSE",
            Error::DuplicateValue { .. } => "DUPLICATE_VALUE",
            Error::Csv(_) => "CSV",
            Error::MalformedDocument(_) => "MALFORMED_DOCUMENT",
            Error::QueryParse { .. } => "QUERY_PARSE",
            Error::NoCube => "NO_CUBE",
        }
    }
}
