use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteInput { row: usize, col: usize },
    #[error("kernel bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("dimension mismatch: expected {expected} columns, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("matrix must have at least one row and one column, got {rows}x{cols}")]
    EmptyMatrix { rows: usize, cols: usize },
    #[error("degenerate kernel: zero Frobenius norm (constant features or constant labels)")]
    DegenerateKernel,
    #[error("degenerate random alignment {0:e}: below the 1e-12 floor")]
    DegenerateRa(f64),
    #[error("too few samples: need more than {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("too few items: need at least {needed}, got {got}")]
    TooFewItems { needed: usize, got: usize },
    #[error("constant series: correlation is undefined")]
    ConstantSeries,
    #[error("label {label} out of range for {num_classes} classes")]
    InvalidLabel { label: u32, num_classes: u32 },
    #[error("class {class} has {count} samples, need at least {needed}")]
    ClassTooSmall { class: u32, count: usize, needed: usize },
    #[error("requested {requested} components, numerical rank is {rank}")]
    RankDeficient { requested: usize, rank: usize },
    #[error("invalid component count {k}: must be in 1..={max}")]
    InvalidComponents { k: usize, max: usize },
    #[error("unknown estimator `{0}`")]
    UnknownEstimator(String),
    #[error("{0} required")]
    MissingInput(&'static str),
    #[error("invalid parameters: {0}")]
    InvalidSpec(String),
}

impl Error {
    /// True for errors that signal degenerate input data rather than a
    /// misconfiguration.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteInput { .. }
                | Error::DegenerateKernel
                | Error::DegenerateRa(_)
                | Error::ConstantSeries
                | Error::RankDeficient { .. }
                | Error::ClassTooSmall { .. }
                | Error::TooFewSamples { .. }
                | Error::TooFewItems { .. }
        )
    }
}

/// Non-fatal conditions reported next to a result.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Warning {
    /// PCA was asked for more components than the data's numerical rank.
    RankDeficient { requested: usize, rank: usize },
    /// The probe pool was smaller than the requested probe size.
    ProbeCapped { requested: usize, available: usize },
    /// A target was left out of the aggregate.
    TargetExcluded { target: String, reason: String },
}

impl core::fmt::Display for Warning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Warning::RankDeficient { requested, rank } => {
                write!(f, "requested {requested} components, truncated to rank {rank}")
            }
            Warning::ProbeCapped { requested, available } => {
                write!(f, "probe size {requested} capped to pool size {available}")
            }
            Warning::TargetExcluded { target, reason } => {
                write!(f, "target `{target}` excluded: {reason}")
            }
        }
    }
}
