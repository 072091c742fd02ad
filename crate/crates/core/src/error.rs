use thiserror::Error;

/// Errors raised anywhere in the geometry pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("jet order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },
    #[error("jet variable count mismatch: {left} vs {right}")]
    NvarsMismatch { left: usize, right: usize },
    #[error("unsupported jet shape: {nvars} variables at order {order}")]
    UnsupportedShape { nvars: usize, order: usize },
    #[error("division by a jet whose value is zero")]
    DivisionByZero,
    #[error("{function} evaluated on its branch cut at {value}")]
    BranchCut {
        function: &'static str,
        value: String,
    },
    #[error("jet order exhausted: {0}")]
    OrderExhausted(String),
    #[error("form degree overflow: {left} + {right} > {dim}")]
    DegreeOverflow {
        left: usize,
        right: usize,
        dim: usize,
    },
    #[error("form shape mismatch: {0}")]
    FormShape(String),
    #[error("basis form is zero")]
    ZeroBasis,
    #[error("singular frame (condition number {cond:.3e})")]
    SingularFrame { cond: f64 },
    #[error("CR structure is not normalized: {0}")]
    NotNormalized(String),
    #[error("field `{field}` vanishes at the sample point")]
    FieldVanishes { field: &'static str },
    #[error("point outside the safe domain: {0}")]
    DomainGuard(String),
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("point has {got} coordinates, chart expects {expected}")]
    PointDimension { got: usize, expected: usize },
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;

impl GeomError {
    /// Errors caused by the sample point itself rather than by the setup;
    /// sweeps skip such points and count them.
    pub fn is_singularity(&self) -> bool {
        matches!(
            self,
            GeomError::DivisionByZero
                | GeomError::BranchCut { .. }
                | GeomError::SingularFrame { .. }
                | GeomError::FieldVanishes { .. }
                | GeomError::DomainGuard(_)
                | GeomError::ZeroBasis
        )
    }
}
