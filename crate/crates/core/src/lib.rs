//! Numerical calculus for Berezin quantization on the unit sphere of C^n.
//!
//! The library builds truncated models of the Hilbert space `O` of boundary
//! values of holomorphic functions on the complex sphere and of the entire
//! function space `E_{n,p}` on C^n, together with the coherent states, the
//! reproducing kernels, the isometry between the two spaces, Berezin symbols
//! of Toeplitz operators and the induced star product. Every closed form is
//! paired with an independent series, quadrature or brute-force oracle so the
//! identities and semiclassical expansions can be machine-checked.

pub mod berezin;
pub mod cli;
mod dd;
pub mod hilbert;
pub mod kernels;
pub mod multiindex;
pub mod quadrature;
pub mod specfun;
pub mod star;
pub mod util;

pub use hilbert::{BasisSide, CoeffVector, Model, ModelParams};
pub use multiindex::{IndexSet, MultiIndex};
pub use num_complex::Complex64;

/// Library-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("expansion size bound exceeded: {0}")]
    SizeBound(String),
    #[error("neither multi-index dominates the other; closed form does not cover this case")]
    NotDominated,
    #[error("basis/parameter mismatch: {0}")]
    Mismatch(String),
    #[error("singular set: coherent-state overlap vanishes (w.z = 0 or a zero of I_(n+p-1)): {0}")]
    SingularSet(String),
    #[error("quadrature rule construction failed: {0}")]
    Quadrature(String),
    #[error("asymptotic expansion requested outside its validity region: {0}")]
    AsymptoticRegion(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
