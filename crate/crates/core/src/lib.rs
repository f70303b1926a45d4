//! Tunneling between two radial wells in a constant magnetic field:
//! radial ground states, Agmon actions, exact tail representations,
//! the hopping coefficient and a planar reference solver.

pub mod agmon;
pub mod error;
pub mod hopping;
pub mod logval;
pub mod planar;
pub mod potential;
pub mod quadrature;
pub mod radial;
pub mod tail;
pub mod tridiag;

pub use error::{Error, Result};
pub use logval::{LogComplex, LogScalar, Sign};
pub use potential::{PotentialSpec, Profile};
