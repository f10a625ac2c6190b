//! Inverse-engineering and optimal-control designs for fast quantum
//! protocols: harmonic-trap expansion and transport, and a dissipative
//! spin-1/2 rotation.

pub mod ansatz;
pub mod expansion;
pub mod numerics;
pub mod spin;
pub mod transport;

use thiserror::Error;

pub use ansatz::AnsatzError;
pub use numerics::NumericsError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Ansatz(#[from] AnsatzError),
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("formula used outside its validity domain: {0}")]
    Domain(String),
    #[error("scaling factor is not positive at s = {0}")]
    NonPositiveScaling(f64),
    #[error("target r_f = {target} is unreachable; reachable interval is [{rmin}, {rmax}]")]
    Unreachable { target: f64, rmin: f64, rmax: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

/// Uniform grid of `n >= 2` points on `[a, b]`, hitting both ends exactly.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| if i == n - 1 { b } else { a + (b - a) * i as f64 / (n - 1) as f64 })
        .collect()
}
