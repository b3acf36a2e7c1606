//! Exact numerics for a two-level system attached to the first site of a
//! Bose-Hubbard chain.
//!
//! The crate builds the composite `spin ⊗ Fock` Hamiltonian, diagonalizes it
//! densely, evolves pure states and pure-state ensembles exactly, and measures
//! the quantities used to judge the Born-Markov picture of the bath:
//! system-bath entanglement, bath correlation functions, level-spacing
//! statistics and the factorization of bath expectation values.
//!
//! Everything here is `no_std` + `alloc`. File formats, caching and the
//! experiment runner live in the `born-markov-lab` crate.

#![no_std]
// NaN-rejecting `!(x > 0.0)` checks and index loops over small fixed
// matrices are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod correlation;
pub mod error;
pub mod evolution;
pub mod fock_basis;
pub mod levelstats;
pub mod lindblad;
pub mod linalg;
pub mod operators;
pub mod reduced;
pub mod spectra;

pub use error::{Error, Result};
pub use evolution::{EnsembleState, StateVector, TimeGrid};
pub use fock_basis::{FockBasis, FockState};
pub use operators::{BasisTag, ModelParams, SparseOperator};
pub use spectra::EigenSystem;

pub use num_complex::Complex64;

pub(crate) mod prelude {
    pub use alloc::vec;
    pub use alloc::vec::Vec;
    pub use num_complex::Complex64;
    #[allow(unused_imports)]
    pub use num_traits::Float;
}
