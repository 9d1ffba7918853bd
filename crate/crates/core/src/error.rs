use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid director: norm {norm}")]
    InvalidDirector { norm: f64 },
    #[error("invalid Q-tensor: trace defect {trace_defect:e}, min eigenvalue {min_eigenvalue:e}")]
    InvalidQTensor { trace_defect: f64, min_eigenvalue: f64 },
    #[error("invalid sampling: {0}")]
    InvalidSampling(String),
    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),
    #[error("region not covered by the triangulation")]
    Coverage,
    #[error("incompatible inputs: {0}")]
    Incompatible(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid scaling: {0}")]
    InvalidScaling(String),
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("unsupported potential: {0}")]
    UnsupportedPotential(String),
    #[error("optimization failed, best residual {best_residual:e}")]
    OptimizationFailure { best_residual: f64 },
    #[error("mean constraint infeasible, best residual {best_residual:e}")]
    Infeasible { best_residual: f64 },
    #[error("degenerate loop: |A| = {min_modulus} < 0.5")]
    DegenerateLoop { min_modulus: f64 },
    #[error("vortex center lies on a lattice site")]
    SingularSite,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("internal consistency failure: {0}")]
    Internal(String),
    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
