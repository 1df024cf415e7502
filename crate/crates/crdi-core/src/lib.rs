//! Covariant relativistic dynamical inversion.
//!
//! Given a matrix-spinor ansatz, this crate computes the electromagnetic
//! potential that makes the Dirac equation hold, constructs the closed-form
//! solution families (relativistic hydrogen ground state and the zero
//! chiral-angle magnetic families), and verifies everything numerically:
//! Dirac residuals in cartesian and curved-frame forms, continuity
//! constraints, bilinear normalization, and cross-route agreement of two
//! independent inversion paths.
//!
//! Grid sweeps are data-parallel (rayon) by default; build with
//! `--no-default-features` for the sequential fallback. Results are
//! bit-for-bit reproducible either way: parallel maps preserve point order
//! and reductions run sequentially.

pub mod algebra;
pub mod clifford;
pub mod error;
pub mod geometry;
pub mod inversion;
mod jets;
pub mod ode;
pub mod quad;
pub mod solutions;
pub mod spinor;
pub mod verify;

pub use algebra::{CMat4, Mat4, C64};
pub use error::{Error, Result};
pub use geometry::{Chart, ChartKind, ChartPoint, SpinConnection, Tetrad, TetradField};
pub use inversion::{DerivMode, FrameGeometry, Inversion, PhysConsts, PotentialField, SpinorField};
pub use solutions::{Family, FamilySpec, SolutionConfig};
pub use spinor::{ColumnSpinor, MatrixSpinor};
pub use verify::{GridSpec, ResidualReport, Tolerances};
