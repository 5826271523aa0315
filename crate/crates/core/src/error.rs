use thiserror::Error;

/// Errors shared across the geometry, sampling and counting kernels.
#[derive(Debug, Error)]
pub enum GeomError {
    #[error("zero vector cannot represent a projective point (norm {norm:e})")]
    ZeroVector { norm: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("vector is not horizontal at the base point (residual {residual:e})")]
    NotHorizontal { residual: f64 },

    #[error("frames are based at different projective points (gap {gap:e})")]
    BasePointMismatch { gap: f64 },

    #[error("degenerate frame: real Gram determinant {det:e}")]
    DegenerateFrame { det: f64 },

    #[error("vector is not a real unit vector (defect {defect:e})")]
    NotUnit { defect: f64 },

    #[error("matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("flow step too large: energy drift {drift:e} exceeds 1e-6")]
    StepTooLarge { drift: f64 },

    #[error("degenerate spectrum: eigenvalue gap {gap:e} below 1e-8")]
    DegenerateSpectrum { gap: f64 },

    #[error("Newton seed exceeded the iteration budget of {budget}")]
    ConvergenceBudgetExceeded { budget: usize },

    #[error("too many non-transverse samples excluded: fraction {fraction}")]
    TooManyExcluded { fraction: f64 },

    #[error("unsupported model for this operation: {reason}")]
    UnsupportedModel { reason: String },
}

pub type Result<T> = std::result::Result<T, GeomError>;
