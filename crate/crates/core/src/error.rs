use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("masked softmax row {row} has no unmasked entries")]
    EmptySoftmaxRow { row: usize },

    #[error("backward requires a scalar loss, got shape {0:?}")]
    NonScalarLoss((usize, usize)),

    #[error("invalid price panel: {0}")]
    InvalidPanel(String),

    #[error("row {row}: non-positive price {value} for {ticker}")]
    NonPositivePrice {
        row: usize,
        ticker: String,
        value: f64,
    },

    #[error("row {row}: duplicate observation for {ticker} on {date}")]
    DuplicateObservation {
        row: usize,
        ticker: String,
        date: String,
    },

    #[error("industry map is missing tickers: {}", .0.join(", "))]
    MissingIndustry(Vec<String>),

    #[error("conflicting industry codes for {ticker}: {first} vs {second}")]
    ConflictingIndustry {
        ticker: String,
        first: String,
        second: String,
    },

    #[error("date index {t} needs {needed} days of history")]
    InsufficientHistory { t: usize, needed: usize },

    #[error("date index {t} + horizon {horizon} is beyond the last date index {last}")]
    InsufficientFuture { t: usize, horizon: usize, last: usize },

    #[error("index {index} out of bounds (len {len})")]
    OutOfBounds { index: usize, len: usize },

    #[error("degenerate series for firm {firm}: {what}")]
    DegenerateSeries { firm: usize, what: &'static str },

    #[error("non-finite feature for firm {firm}, column {column}")]
    NonFiniteFeature { firm: usize, column: usize },

    #[error("need at least {needed} firms per leg, have {have}")]
    TooFewFirms { needed: usize, have: usize },

    #[error("zero volatility: sharpe ratio undefined")]
    ZeroVolatility,

    #[error("need at least {needed} return periods, have {have}")]
    TooFewPeriods { needed: usize, have: usize },

    #[error("return {value} at period {period} is a total loss")]
    TotalLoss { period: usize, value: f64 },

    #[error("reports do not share period dates")]
    MismatchedPeriods,

    #[error("training diverged (non-finite loss at epoch {epoch})")]
    Divergence { epoch: usize },

    #[error("every grid cell failed to train")]
    AllCellsFailed,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
