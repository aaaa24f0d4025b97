use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("insufficient data: need at least {needed} observations, have {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("parse error at row {row}, column {column} ({header}): cannot read {value:?} as a finite real")]
    Parse {
        row: usize,
        column: usize,
        header: String,
        value: String,
    },

    #[error("bad date {value:?} at row {row}: {reason}")]
    Date {
        row: usize,
        value: String,
        reason: String,
    },

    #[error("date gap: missing {missing}")]
    Gap { missing: NaiveDate },

    #[error("duplicate date {0}")]
    Duplicate(NaiveDate),

    #[error("malformed csv: {0}")]
    Csv(String),

    #[error("series {0:?} is constant on the training split; cannot normalize")]
    ConstantSeries(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("non-finite loss at epoch {epoch} (first offending window {window})")]
    NonFiniteLoss { epoch: usize, window: usize },

    #[error("incompatible parameter file: {0}")]
    Incompatible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Dimension {
            op,
            detail: detail.into(),
        }
    }

    /// True for failures caused by the input data rather than by configuration
    /// or numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::InsufficientData { .. }
                | Error::Parse { .. }
                | Error::Date { .. }
                | Error::Gap { .. }
                | Error::Duplicate(_)
                | Error::Csv(_)
                | Error::ConstantSeries(_)
                | Error::Range(_)
                | Error::Io(_)
        )
    }

    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFiniteLoss { .. } | Error::UndefinedMetric(_))
    }
}
