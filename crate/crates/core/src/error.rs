use thiserror::Error;

/// Every failure the library can report.
///
/// Variants carry a stable machine-readable code (see [`Error::code`]) that
/// the CLI copies into its reports, and fall into one of three exit-code
/// classes (see [`Error::exit_code`]).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("atom {id} has non-positive weight {weight}")]
    NonPositiveWeight { id: i64, weight: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite entry in operator")]
    NonFinite,
    #[error("integrated form is not real: hermitian defect {defect:.3e} exceeds {tol:.3e}")]
    NotRealForm { defect: f64, tol: f64 },
    #[error("operator is singular (smallest singular value {sigma_min:.3e})")]
    Singular { sigma_min: f64 },
    #[error("‖K‖ = {norm} < 1")]
    NormTooSmall { norm: f64 },
    #[error("empty operator list")]
    EmptyList,
    #[error("coefficient {index} is zero")]
    ZeroCoefficient { index: usize },
    #[error("operator is not positive semidefinite (λ_min = {lambda_min:.3e})")]
    NotPsd { lambda_min: f64 },
    #[error("constants must lie in [0, 1): {0}")]
    BadConstants(String),
    #[error("operator is not positive: {0}")]
    NotPositive(String),
    #[error("commutation test failed: ‖MK − KM‖ = {defect:.3e} > {tol:.3e}")]
    CommutationFail { defect: f64, tol: f64 },
    #[error("range inclusion failed: {0}")]
    RangeFail(String),
    #[error("system is not δ-tight: ‖herm(S) − δKK*‖ = {defect:.3e}")]
    NotTight { defect: f64 },
    #[error("K is rank deficient (rank {rank} < {dim})")]
    RankDeficientK { rank: usize, dim: usize },
    #[error("parameter cap violated: {0}")]
    CapViolated(String),
    #[error("bad inputs: {0}")]
    BadInputs(String),
    #[error("perturbation hypothesis fails (worst slack {worst_slack:.3e})")]
    HypothesisFail { worst_slack: f64 },
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("controller is not invertible (σ_min = {sigma_min:.3e})")]
    NotInvertible { sigma_min: f64 },
    #[error("could not draw a full-rank Φ after {attempts} attempts")]
    SingularPhi { attempts: usize },
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Schema(_) => "SchemaError",
            Error::DimMismatch(_) => "DimMismatch",
            Error::NonPositiveWeight { .. } => "NonPositiveWeight",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::NonFinite => "NonFinite",
            Error::NotRealForm { .. } => "NotRealForm",
            Error::Singular { .. } => "Singular",
            Error::NormTooSmall { .. } => "NormTooSmall",
            Error::EmptyList => "EmptyList",
            Error::ZeroCoefficient { .. } => "ZeroCoefficient",
            Error::NotPsd { .. } => "NotPSD",
            Error::BadConstants(_) => "BadConstants",
            Error::NotPositive(_) => "NotPositive",
            Error::CommutationFail { .. } => "CommutationFail",
            Error::RangeFail(_) => "RangeFail",
            Error::NotTight { .. } => "NotTight",
            Error::RankDeficientK { .. } => "RankDeficientK",
            Error::CapViolated(_) => "CapViolated",
            Error::BadInputs(_) => "BadInputs",
            Error::HypothesisFail { .. } => "HypothesisFail",
            Error::LengthMismatch(_) => "LengthMismatch",
            Error::NotInvertible { .. } => "NotInvertible",
            Error::SingularPhi { .. } => "SingularPhi",
            Error::Io(_) => "IoError",
        }
    }

    /// 1 = certification failure, 2 = input error, 3 = numerical breakdown.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Schema(_)
            | Error::DimMismatch(_)
            | Error::NonPositiveWeight { .. }
            | Error::ShapeMismatch(_)
            | Error::NonFinite
            | Error::EmptyList
            | Error::ZeroCoefficient { .. }
            | Error::BadConstants(_)
            | Error::CapViolated(_)
            | Error::BadInputs(_)
            | Error::LengthMismatch(_)
            | Error::Io(_) => 2,
            Error::Singular { .. } | Error::SingularPhi { .. } => 3,
            _ => 1,
        }
    }
}
