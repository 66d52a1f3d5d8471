use thiserror::Error;

/// Errors raised by the library.
///
/// Every variant has a stable short name (see [`Error::kind`]) which the
/// command-line front end reports in its machine-readable error objects.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid interval [{lo}, {hi}]: bounds must satisfy lo < hi")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid point {value} lies outside the domain {domain}")]
    GridOutsideDomain { value: f64, domain: String },
    #[error("bad grid: {0}")]
    BadGrid(String),
    #[error("empty sample")]
    EmptySample,
    #[error("value {value} lies outside the domain {domain}")]
    DomainViolation { value: f64, domain: String },
    #[error("root solver did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("order k = {k} must satisfy 1 <= k <= n = {n}")]
    BadK { k: usize, n: usize },
    #[error("input {0} must be strictly positive")]
    NonpositiveInput(f64),
    #[error("weight p({x}) = {weight} must be strictly positive")]
    NonpositiveWeight { x: f64, weight: f64 },
    #[error("sample of size {len} is too small (need at least {min})")]
    SampleTooSmall { len: usize, min: usize },
    #[error("leading coefficient (sum of multipliers) is zero")]
    ZeroLeadingCoefficient,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("distribution `{0}` only provides a sampler; quadrature is unsupported")]
    SamplerOnlyUnsupported(String),
    #[error("quadrature budget exceeded: estimate {estimate} with error bound {error_bound}")]
    QuadratureBudgetExceeded { estimate: f64, error_bound: f64 },
    #[error("expectation diverges: {0}")]
    Divergent(String),
    #[error("no root of t -> E D(xi, t) exists in the integrability region: {0}")]
    NoRootInDomain(String),
    #[error("value {value} lies outside the image of the generator ({image})")]
    InverseDomain { value: f64, image: String },
    #[error("minimum found at the boundary of the search grid (index {index})")]
    GridTooCoarse { index: usize },
    #[error("finite-difference stencil at t = {t} leaves the domain")]
    BoundaryStep { t: f64 },
    #[error("degenerate distribution: E D(xi, t0)^2 = {m2}")]
    DegenerateDistribution { m2: f64 },
    #[error("E[-d/dt D(xi, t0)] = {d1} is not strictly positive")]
    NonpositiveSlope { d1: f64 },
    #[error("the deviation mean {t0} is not an interior point of the integrability interval")]
    NotInteriorPoint { t0: f64 },
    #[error("generator derivative vanishes at {0}")]
    ZeroDerivative(f64),
    #[error("threshold {x} is not beyond the mean: E D(xi, x) = {slope} >= 0")]
    NotBeyondMean { x: f64, slope: f64 },
    #[error("objective is flat: the infimum over c > 0 is approached only as c -> infinity")]
    FlatObjective,
    #[error("threshold {y} is outside the admissible range ({lo}, {hi})")]
    OutOfRange { y: f64, lo: f64, hi: f64 },
    #[error("empty input")]
    EmptyInput,
}

impl Error {
    /// Stable identifier of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInterval { .. } => "InvalidInterval",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::GridOutsideDomain { .. } => "GridOutsideDomain",
            Error::BadGrid(_) => "BadGrid",
            Error::EmptySample => "EmptySample",
            Error::DomainViolation { .. } => "DomainViolation",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::BadK { .. } => "BadK",
            Error::NonpositiveInput(_) => "NonpositiveInput",
            Error::NonpositiveWeight { .. } => "NonpositiveWeight",
            Error::SampleTooSmall { .. } => "SampleTooSmall",
            Error::ZeroLeadingCoefficient => "ZeroLeadingCoefficient",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::SamplerOnlyUnsupported(_) => "SamplerOnlyUnsupported",
            Error::QuadratureBudgetExceeded { .. } => "QuadratureBudgetExceeded",
            Error::Divergent(_) => "Divergent",
            Error::NoRootInDomain(_) => "NoRootInDomain",
            Error::InverseDomain { .. } => "InverseDomain",
            Error::GridTooCoarse { .. } => "GridTooCoarse",
            Error::BoundaryStep { .. } => "BoundaryStep",
            Error::DegenerateDistribution { .. } => "DegenerateDistribution",
            Error::NonpositiveSlope { .. } => "NonpositiveSlope",
            Error::NotInteriorPoint { .. } => "NotInteriorPoint",
            Error::ZeroDerivative(_) => "ZeroDerivative",
            Error::NotBeyondMean { .. } => "NotBeyondMean",
            Error::FlatObjective => "FlatObjective",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::EmptyInput => "EmptyInput",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
