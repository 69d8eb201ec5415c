//! Upwind discontinuous Galerkin solver for the convective Cahn–Hilliard
//! equation with degenerate mobility `M(u) = u(1-u)`.
//!
//! The phase field `u` is approximated by piecewise constants and the
//! chemical potential `mu` and the regularized phase `w` by continuous
//! piecewise linears on a conforming triangulation. Both the transport of the
//! phase by the velocity field and the nonlinear mobility flux are upwinded,
//! which keeps every discrete solution inside `[0, 1]`.
//!
//! Module map:
//!
//! * [`mesh`]: triangulations with oriented edge topology.
//! * [`fespace`]: P0/P1 fields, mass and stiffness operators, norms.
//! * [`upwind`]: positive/negative parts, mobility splitting, upwind forms.
//! * [`transport`]: backward-Euler P0 upwind transport solvers.
//! * [`cch`]: the coupled `(u, mu, w)` scheme and its Newton solver.
//! * [`harness`]: experiment presets, diagnostics, VTK/CSV output and
//!   convergence studies.
//!
//! Assembly loops run on rayon when the `parallel` feature is enabled (the
//! default). Every parallel loop produces per-item contributions that are
//! reduced in a fixed order, so results are bit-identical to the sequential
//! path selected by [`Exec::Sequential`].

pub mod cch;
pub mod error;
mod exec;
pub mod fespace;
pub mod harness;
pub mod mesh;
pub mod sparse;
pub mod transport;
pub mod upwind;

pub use error::{MeshError, SolverError};
pub use exec::Exec;
pub use fespace::{P0Field, P1Field};
pub use mesh::TriMesh;
pub use sparse::CsrMatrix;
