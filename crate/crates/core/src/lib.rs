//! Generalized bicycle quantum LDPC codes: construction, anisotropic
//! min-sum decoding, labeled automorphism analysis of degenerate error
//! patterns, ensemble selection and Monte Carlo estimation of logical error
//! rates.

pub mod cli;
pub mod code;
pub mod decoder;
pub mod ensemble;
pub mod equivariance;
pub mod gf2;
pub mod sim;
pub mod symmetry;
