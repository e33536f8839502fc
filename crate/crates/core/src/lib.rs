//! S-arithmetic quadratic forms: p-adic arithmetic, classification, Witt lifting,
//! S-lattices, volume constants and lattice-point counting.

pub mod error;
pub mod exec;
pub mod linalg;
pub mod padic;
pub mod ortho;
pub mod qform;
pub mod slattice;
pub mod volume;
pub mod counting;

pub use error::{Error, Result};
