//! Gaussian dynamics of harmonic oscillator networks used as structured
//! environments: network generation, normal modes, open-system channels,
//! spectral densities, excitation transport, and non-Markovianity witnesses.

pub mod cli;
pub mod error;
pub mod gaussian;
pub mod hamiltonian;
pub mod linalg;
pub mod netgen;
pub mod nonmarkov;
pub mod opensys;
pub mod quadrature;
pub mod spectral;
pub mod transport;

pub use error::{Error, Result};
