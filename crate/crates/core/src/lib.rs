//! Conversion-matrix method of moments (CMMoM).
//!
//! Frequency-domain analysis of surfaces that carry periodically time-varying
//! lumped loads or space-time modulated surface materials. The pipeline is
//!
//! - [`mesh`]: triangulated surfaces and RWG basis enumeration (the "ports"),
//! - [`efie`]: single-frequency EFIE impedance, Gram and excitation operators,
//!   far fields and backscatter,
//! - [`cm`]: conversion-matrix algebra over the harmonic comb
//!   `ω_k = ω_c + k ω_0`,
//! - [`solver`]: direct and Schur-compressed solution of the harmonic system,
//! - [`power`]: extinction, radiation, absorption and time-varying power split,
//! - [`scenario`]: declarative JSON scenarios and result files.
//!
//! Data-parallel loops go through [`exec`], which uses rayon when the
//! `parallel` feature is enabled and falls back to plain iterators otherwise.

pub mod cm;
pub mod consts;
pub mod efie;
pub mod error;
pub mod exec;
pub mod linalg;
pub mod mesh;
pub mod power;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
