use foliation_expr::ExprError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("metric is not positive definite at {point:?}")]
    NotPositiveDefinite { point: Vec<f64> },
    #[error("metric matrix is singular at {point:?}")]
    SingularMetric { point: Vec<f64> },
    #[error("rank deficient: {0}")]
    RankDeficient(String),
    #[error("misuse: {0}")]
    Misuse(String),
    #[error("geodesic left the chart domain at t = {time} (point {point:?})")]
    BoundaryExit { time: f64, point: Vec<f64> },
    #[error("geodesic drifted out of the leaf at t = {time} (normal speed fraction {drift:.3e})")]
    LeafDrift { time: f64, drift: f64 },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("{file}:{line}: {message}")]
    Scenario {
        file: String,
        line: usize,
        message: String,
    },
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("unknown {kind} `{name}` in scenario {scenario}")]
    UnknownItem {
        kind: &'static str,
        name: String,
        scenario: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
