//! Operator formalism for classical mechanics on phase-space forms: an exact
//! Grassmann fiber algebra with Berezin integration, the family of scalar
//! products on inhomogeneous forms (positive-definite, gauge, symplectic and
//! their one-parameter generalizations), hermiticity diagnostics of the
//! Lie-derivative Hamiltonian, physical-subspace extraction, and Jacobi-field
//! dynamics along classical trajectories.

pub mod canonical;
pub mod dynamics;
pub mod error;
pub mod grassmann;
pub mod identities;
pub mod lie;
pub mod linalg;
pub mod metrics;
pub mod nogo;
pub mod physical;
pub mod states;

pub use error::{Error, Result};
pub use grassmann::{Algebra, GrassmannOperator, Multivector, Parity};
pub use metrics::{Metric, MetricFamily};
