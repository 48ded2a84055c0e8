//! Lattice phi^4 simulation workbench.
//!
//! Builds the digitized scalar-field Hamiltonian, evolves it with product
//! formulas, LCU block encodings driven by qubitization and QSP, and HHKL
//! patching, and compares gate costs. Every construction is checked
//! against exact dense linear algebra.

pub mod circuit;
pub mod dense;
pub mod error;
pub mod field;
pub mod fit;
pub mod hhkl;
pub mod lcu;
pub mod lowering;
pub mod pauli;
pub mod qsp;
pub mod resources;
pub mod trotter;
pub mod walk;

pub use error::{SimError, SimResult};
