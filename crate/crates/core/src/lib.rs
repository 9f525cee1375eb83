//! Numerical core for one-frequency quasi-periodic Schrödinger operators
//!
//! ```text
//! (Hφ)(n) = φ(n+1) + φ(n−1) + λ v(x + nω) φ(n)
//! ```
//!
//! with Gevrey-class potentials `v` and Diophantine frequencies `ω`.
//!
//! The crate is `no_std` (it needs `alloc`). Grid scans are expressed through
//! the [`Executor`] trait; [`Sequential`] runs them in order, and the `qpspec`
//! crate supplies a thread-pool implementation. Every scan collects results in
//! index order, so outputs do not depend on the executor.
//!
//! Modules, bottom-up:
//!
//! - [`numtheory`]: continued fractions, `‖nω‖`, Diophantine and β diagnostics
//! - [`potential`]: Fourier-defined Gevrey potentials, truncation, level-set probe
//! - [`cocycle`]: renormalized transfer-matrix products, `u_n`, `L_n`, avalanche principle
//! - [`determinant`]: signed-log Dirichlet determinants
//! - [`operator`]: finite Dirichlet restrictions, Sturm bisection, Green's functions
//! - [`deviation`]: grid-measured large-deviation and Wegner sets
//! - [`spectrum`]: interval sets, finite-volume spectra, spectral segments, homogeneity

#![no_std]

extern crate alloc;

pub mod cocycle;
pub mod determinant;
pub mod deviation;
mod exec;
mod fmath;
pub mod numtheory;
pub mod operator;
pub mod potential;
mod rng;
pub mod spectrum;

pub use exec::{Executor, Sequential};

/// Crate version, echoed into run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use rng::SplitMix64;
