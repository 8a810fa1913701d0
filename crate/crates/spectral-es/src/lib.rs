//! Spectral clustering for stochastic blockmodels.
//!
//! Provides SBM sampling and latent-position utilities, adjacency/Laplacian
//! spectral embeddings, the curved-Gaussian limit covariance functions of the
//! embeddings, four mixture-fitting engines (full-GMM EM, generic curved ES,
//! and the tied ES variants for the ASE and LSE), and clustering/estimation
//! scoring helpers.

pub mod embedding;
pub mod evaluation;
pub mod graph_model;
pub mod limit_covariance;
pub mod linalg;
pub mod mixture_engines;
pub mod rng;

pub use embedding::{ase, ase_to_lse, lse, normalized_laplacian, procrustes_align, Embedding};
pub use graph_model::{
    canonical_latent_positions, expand_latent_positions, sample_sbm, BlockModel, Graph,
    LatentConfig,
};
pub use mixture_engines::{EngineKind, MixtureState, Responsibilities, RunReport};

/// Errors produced by the numerical kernels and fitting engines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix is not positive semidefinite (eigenvalue {0})")]
    NotPsd(f64),
    #[error("probability vector is not on the simplex")]
    NotASimplex,
    #[error("invalid block matrix entry {0} (must lie strictly in (0,1))")]
    InvalidEdgeProbability(f64),
    #[error("latent positions invalid: dot product {0} outside (0,1)")]
    InvalidLatentDotProduct(f64),
    #[error("label {0} out of range for {1} blocks")]
    LabelOutOfRange(usize, usize),
    #[error("insufficient positive spectrum: eigenvalue {1} of the top {0} is nonpositive")]
    InsufficientPositiveSpectrum(usize, f64),
    #[error("isolated vertex: row {0} has zero degree")]
    IsolatedVertex(usize),
    #[error("nonpositive degree {0}")]
    NonpositiveDegree(f64),
    #[error("degenerate latent configuration: condition number {0:.3e}")]
    DegenerateLatentConfiguration(f64),
    #[error("nonpositive scaled-mean denominator for block {0}")]
    NonpositiveScaledMean(usize),
    #[error("nonpositive dot product with the mean direction for block {0}")]
    NonpositiveMeanProjection(usize),
    #[error("invalid empirical scaling: point {0} has nonpositive projection on the mean")]
    InvalidEmpiricalScaling(usize),
    #[error("covariance not positive definite")]
    CovarianceNotPd,
    #[error("component {0} collapsed (responsibility mass {1:.3e})")]
    ComponentCollapse(usize, f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("LAPACK routine {0} failed with info = {1}")]
    Lapack(&'static str, i32),
}

pub type Result<T> = std::result::Result<T, Error>;
