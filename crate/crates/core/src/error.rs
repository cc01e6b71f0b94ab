use thiserror::Error;

pub type Result<T, E = LrrError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LrrError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        got: String,
    },

    #[error("column index {index} out of range for {cols} columns")]
    IndexOutOfRange { index: usize, cols: usize },

    #[error("column {0} has (near) zero norm and cannot be normalized")]
    DegenerateColumn(usize),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("dual certificate inapplicable: psi = {psi} >= 1")]
    CertificateInapplicable { psi: f64 },

    #[error("AUC undefined: ground truth contains a single class")]
    UndefinedAuc,

    #[error("infeasible generation spec: {0}")]
    InfeasibleSpec(String),

    #[error("instance has no ground truth for {0}")]
    MissingGroundTruth(&'static str),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LrrError {
    pub(crate) fn mismatch(op: &'static str, expected: impl ToString, got: impl ToString) -> Self {
        LrrError::DimensionMismatch {
            op,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}
