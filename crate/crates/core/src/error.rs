use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("eps_max must lie in (0, 1], got {0}")]
    EpsMax(f64),
    #[error("eps_min must lie in (0, eps_max={eps_max}), got {eps_min}")]
    EpsMin { eps_min: f64, eps_max: f64 },
    #[error("grid needs at least 2 samples, got {0}")]
    Count(usize),
    #[error("tail_fraction must lie in (0, 1], got {0}")]
    TailFraction(f64),
    #[error("tail has {0} samples; at least 2 are needed")]
    TailTooShort(usize),
}

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Grid(#[from] GridError),

    #[error("malformed gauge spec {spec:?}: {reason}")]
    MalformedSpec { spec: String, reason: String },
    #[error("gauge leaves (0, 1] at eps={eps:e} (value {value:e})")]
    InvalidGauge { eps: f64, value: f64 },

    #[error("lexical error at byte {position}: unexpected {found:?}")]
    Lex { position: usize, found: char },
    #[error("parse error at byte {position}: expected {}", expected.join(" or "))]
    Parse {
        position: usize,
        expected: Vec<String>,
    },
    #[error("unbound name {0:?}")]
    UnboundName(String),
    #[error("variable u{index} out of range for a function of {dim} variables")]
    VariableOutOfRange { index: usize, dim: usize },

    #[error("not invertible: strict positivity fails (m up to {m_max}), witness eps={eps:e}")]
    NotInvertible { eps: f64, m_max: u32 },
    #[error("not invertible in the ring: |det| fails the positivity test (m up to {m_max}) at eps={eps:e}")]
    NotInvertibleInRing { eps: f64, m_max: u32 },
    #[error("every tail sample is exactly zero: exactly negligible on grid")]
    AllZeroTail,
    #[error("need at least 2 nonzero tail samples for an order fit, got {0}")]
    TooFewSamples(usize),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("domain violation in {op} at eps={eps:e}")]
    DomainViolation { op: String, eps: f64 },
    #[error("value is not moderate at eps={eps:e} (|x| > rho^-{n_max})")]
    ModerationFailure { eps: f64, n_max: u32 },
    #[error("unknown builtin {0:?}")]
    UnknownBuiltin(String),
    #[error("builtin {builtin} requires parameter {param:?}")]
    MissingParam { builtin: String, param: String },

    #[error("orbit left the domain at step {step}, eps={eps:e}")]
    OrbitLeftDomain { step: usize, eps: f64 },
    #[error("g(x0) = x0 exactly: x0 is already a fixed point")]
    DegenerateOrbit,
    #[error("map is not certified as a contraction on the orbit")]
    NotContraction,
    #[error("no sharp convergence after {steps} steps (q = {q})")]
    NoSharpConvergence { steps: usize, q: f64 },
    #[error("differential not invertible at iterate {iterate}, eps={eps:e}")]
    DifferentialNotInvertible { iterate: usize, eps: f64 },
    #[error("all sampled |u - v| vanish at eps={eps:e}")]
    SamplingDegenerate { eps: f64 },
    #[error("differential not invertible inside the ball at {point:?}, eps={eps:e}")]
    NotInvertibleInBall { point: Vec<f64>, eps: f64 },
    #[error("insufficient data: {usable} usable errors at eps={eps:e}, need 3")]
    InsufficientData { eps: f64, usable: usize },
    #[error("no fixed point found at eps={eps:e}; best residual {best_residual:e}")]
    NoFixedPointFound { eps: f64, best_residual: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
