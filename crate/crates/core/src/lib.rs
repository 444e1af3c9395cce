//! Decomposition of non-orthogonally superposed complex geometric sequences.
//!
//! A superposition of `k` geometric sequences is mapped to simplexes in a
//! virtual `k`-dimensional space; the volumes of consecutive simplexes form a
//! geometric sequence exactly when the assumed order matches `k`, and the
//! volume quotients of the combinatorial simplexes equal the elementary
//! symmetric polynomials of the common ratios. That reduces the whole
//! decomposition to one polynomial root-finding plus one linear solve.
//!
//! The crate provides:
//! * [`linalg`] — self-contained dense complex kernels (determinant, SVD,
//!   least squares, polynomial roots),
//! * [`sequence`] — domain types and synthesis,
//! * [`simplex`] — search spaces, volume series, and volume quotients,
//! * [`decompose`] — the exact (noiseless) pipeline,
//! * [`denoise`] — Hankel low-rank de-noising and noisy order estimation,
//! * [`noinfra`] — a link-level Monte Carlo simulator comparing random-access
//!   reception via sequence decomposition against an orthogonal-subcarrier
//!   baseline with successive interference cancellation,
//! * [`formats`] — the CSV/JSON interchange formats used by the CLI.

pub mod decompose;
pub mod denoise;
pub mod error;
pub mod formats;
pub mod linalg;
pub mod noinfra;
pub mod seeding;
pub mod sequence;
pub mod simplex;

pub use error::{Error, Result, Warning};
pub use sequence::{
    match_components, nmse, synthesize, ComplexSequence, Decomposition, GeometricComponent,
    IndexPattern,
};
