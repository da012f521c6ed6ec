//! Interpolatory HDG methods for semilinear reaction-diffusion equations on
//! 2D triangular meshes.
//!
//! Three method variants (A, B, C) share degree-k flux and trace spaces and
//! differ in the scalar space; all of them build a local degree-(k+1)
//! reconstruction of the scalar that drives both the stabilization and an
//! interpolatory treatment of the reaction term, so every matrix is
//! assembled and factorized once per run. Static condensation reduces the
//! global system to interior-face unknowns.
//!
//! The narrative guide lives in `book/` and is mirrored into [`book`] so its
//! snippets run as doc-tests; start with [`book::introduction`]. The
//! `hdg-interp` binary drives convergence sweeps from the command line.

pub mod basis;
pub mod degree;
pub mod error;
pub mod mesh;
pub mod operators;
pub mod problem;
pub mod projector;
pub mod quadrature;
pub mod skyline;
pub mod solve;
pub mod state;
pub mod stepping;
pub mod study;
pub mod system;

pub use degree::{DegreeConfig, Variant};
pub use error::{Error, Result};
pub use mesh::Mesh;
pub use problem::{ManufacturedProblem, Nonlinearity};
pub use state::FieldState;
pub use stepping::{DtPolicy, InitialCondition, IntegrateStats, TimeConfig};

/// The guide from `book/`, one module per chapter. Keeping the chapters in
/// the docs makes `cargo test --doc` run every code snippet in the book.
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}

    #[doc = include_str!("../../../book/src/meshes.md")]
    pub mod meshes {}

    #[doc = include_str!("../../../book/src/reference-elements.md")]
    pub mod reference_elements {}

    #[doc = include_str!("../../../book/src/projections-and-reconstruction.md")]
    pub mod projections_and_reconstruction {}

    #[doc = include_str!("../../../book/src/condensed-solver.md")]
    pub mod condensed_solver {}

    #[doc = include_str!("../../../book/src/time-stepping.md")]
    pub mod time_stepping {}

    #[doc = include_str!("../../../book/src/convergence-studies.md")]
    pub mod convergence_studies {}
}
