//! Resource-bounded entanglement measures on top of an exact density-matrix
//! simulator for round-based LOCC circuits.
//!
//! * [`linalg`]: dense complex matrices over qubit registers.
//! * [`states`], [`entropy`]: states, fidelity, entropies and the scalar
//!   functions used by the bounds.
//! * [`locc`]: LOCC circuits, gate accounting, combinators and stock protocols.
//! * [`measures`]: error functionals and bound certificates.
//! * [`packing`]: separated packings of rotated EPR states.
//! * [`harness`]: executable property checks with structured records.

pub mod entropy;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod locc;
pub mod measures;
pub mod packing;
pub mod poly;
pub mod random;
pub mod states;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, RegisterLayout};
pub use poly::Polynomial;
pub use states::{BipartiteState, DensityMatrix, Key, PureState};
