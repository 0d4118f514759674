use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("duplicate attribute `{0}`")]
    DuplicateAttribute(String),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("heterogeneous bag: {0}")]
    HeterogeneousBag(String),
    #[error("invalid pattern: {0}")]
    InvalidPattern(String),
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("kind mismatch: {0}")]
    KindMismatch(String),
    #[error("aggregation over a non-bag attribute `{0}`")]
    AggregationOnNonBag(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),

    #[error("inadmissible change: {0}")]
    InadmissibleChange(String),
    #[error("reparameterization breaks the plan: {0}")]
    SchemaBroken(String),
    #[error("reparameterization changes the output schema: {0}")]
    RootSchemaChanged(String),
    #[error("search space of {needed} combinations exceeds the budget of {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("invalid attribute alternative: {0}")]
    InvalidAlternative(String),
    #[error("{count} schema alternatives exceed the maximum of {max}")]
    TooManyAlternatives { count: usize, max: usize },

    #[error("annotation column `{0}` already present")]
    DuplicateLabel(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error("{path}:{line}: {msg}")]
    ParseLine { path: String, line: usize, msg: String },
    #[error("{path}:{line}: schema violation: {msg}")]
    SchemaViolation { path: String, line: usize, msg: String },
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// Stable, module-qualified error code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DuplicateAttribute(_) => "model.duplicate_attribute",
            Error::UnknownAttribute(_) => "model.unknown_attribute",
            Error::TypeMismatch(_) => "model.type_mismatch",
            Error::HeterogeneousBag(_) => "model.heterogeneous_bag",
            Error::InvalidPattern(_) => "model.invalid_pattern",
            Error::Parse(_) => "model.parse",
            Error::InvalidPlan(_) => "engine.invalid_plan",
            Error::KindMismatch(_) => "engine.kind_mismatch",
            Error::AggregationOnNonBag(_) => "engine.aggregation_on_non_bag",
            Error::UnknownRelation(_) => "engine.unknown_relation",
            Error::InadmissibleChange(_) => "reparam.inadmissible_change",
            Error::SchemaBroken(_) => "reparam.schema_broken",
            Error::RootSchemaChanged(_) => "reparam.root_schema_changed",
            Error::BudgetExceeded { .. } => "reparam.budget_exceeded",
            Error::InvalidAlternative(_) => "alternatives.invalid_alternative",
            Error::TooManyAlternatives { .. } => "alternatives.too_many",
            Error::DuplicateLabel(_) => "tracing.duplicate_label",
            Error::PreconditionViolated(_) => "explain.precondition_violated",
            Error::Io { .. } => "cli.io",
            Error::ParseLine { .. } => "cli.parse",
            Error::SchemaViolation { .. } => "cli.schema_violation",
            Error::Config(_) => "cli.config",
        }
    }

    /// Process exit code: 2 for a violated precondition, 4 for everything
    /// else (configuration, parsing, schema and budget problems).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::PreconditionViolated(_) => 2,
            _ => 4,
        }
    }
}
