use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("antiderivative of an η^-1 term is not a Laurent polynomial")]
    NonPolynomialAntiderivative,
    #[error("evaluation at η = 0 of a polynomial with a negative exponent")]
    EvalAtPole,
    #[error("exponent {exponent} is below the supported minimum of -1")]
    PoleTooDeep { exponent: i32 },
    #[error("non-finite coefficient at exponent {exponent}")]
    NonFiniteCoefficient { exponent: i32 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("boundary-condition system is singular (condition number {condition:.3e})")]
    SingularBoundarySystem { condition: f64 },
    #[error("invalid linear problem: {0}")]
    InvalidProblem(String),
    #[error("no value supplied for auxiliary parameter `{0}`")]
    MissingParameter(String),
    #[error("auxiliary product keeps a pole (minimum exponent {min_exponent})")]
    PoleNotCancelled { min_exponent: i32 },
    #[error("parameter `{0}` divides a stage-two auxiliary function and must be non-zero")]
    ZeroDivisor(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid flow parameters: {0}")]
    InvalidParams(String),
    #[error("unknown case `{0}`")]
    UnknownCase(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("invalid objective: {0}")]
    InvalidObjective(String),
    #[error("no start made progress within {iterations} iterations")]
    NoProgress { iterations: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("step size must be positive and divide 1 exactly (got {0})")]
    InvalidStep(f64),
    #[error("state became non-finite at η = {eta}")]
    NonFiniteState { eta: f64 },
    #[error("shooting did not converge: {0}")]
    ShootingDiverged(String),
    #[error("homogeneous trial solutions coincide; affine solve is singular")]
    DegenerateHomogeneous,
    #[error("velocity solution is on a different grid (n = {found}, expected {expected})")]
    GridMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}
