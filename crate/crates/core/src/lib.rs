//! Zero-energy degeneracy of the staggered Heisenberg chain: exact
//! representation-theoretic counting, numerical verification, an analytic
//! zero-mode basis, and its entanglement and stability properties.

pub mod cli_io;
pub mod dynamics;
pub mod error;
pub mod hamiltonian;
pub mod lattice_group;
pub mod spectral;
pub mod spin_basis;
pub mod su2_char_ring;
pub mod zero_states;

pub use error::{Result, ZedError};
