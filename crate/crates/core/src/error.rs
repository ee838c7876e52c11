use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("site {site} out of range 1..={n_qubits}")]
    SiteOutOfRange { site: usize, n_qubits: usize },
    #[error("site {0} appears more than once")]
    DuplicateSite(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("invalid density operator: {0}")]
    InvalidDensity(String),
    #[error("operator is not Hermitian (max defect {0:e})")]
    NotHermitian(f64),
    #[error("step-size instability at t = {t} μs: norm drift {drift:e} in one step")]
    StepInstability { t: f64, drift: f64 },
    #[error("positivity violated at t = {t} μs: minimum eigenvalue {min_eigenvalue:e}")]
    PositivityViolation { t: f64, min_eigenvalue: f64 },
    #[error("dense superoperator guard: {n_qubits} qubits exceeds the limit of {limit}")]
    DimensionGuard { n_qubits: usize, limit: usize },
    #[error("time-dependent Hamiltonian where a static one is required")]
    NotStatic,
    #[error(
        "ambiguous null-space cutoff: singular value {value:e} within a factor 10 of threshold {threshold:e}"
    )]
    AmbiguousCutoff { value: f64, threshold: f64 },
    #[error("integration step {dt} μs does not divide the noise section {dt_section} μs")]
    SectionMismatch { dt: f64, dt_section: f64 },
    #[error("duplicate seed {0} in ensemble seed list")]
    DuplicateSeed(u64),
    #[error("fit failed: {0}")]
    FitFailure(String),
    #[error("no conserved classifier candidate passed validation: {0}")]
    ClassifierValidation(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}
