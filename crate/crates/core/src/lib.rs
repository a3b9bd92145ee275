//! Numerical laboratory for linear and semilinear Klein-Gordon equations in
//! Minkowski and de Sitter space-time.
//!
//! The crate evaluates the hypergeometric kernels `E`, `K0`, `K1` of the
//! de Sitter integral transform, builds solutions of the linear equations from
//! wave-equation oracles, checks the associated maximum principles, runs the
//! semilinear (Higgs potential) machinery, and reproduces at desk scale the
//! 3-D finite-difference simulation of bubble formation, including detection
//! of sign-change regions and their topology.
//!
//! The crate is `no_std`-compatible (with `alloc`); all I/O, file formats and
//! the command-line front end live in the companion `kgds` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bubbles;
pub mod kernels;
pub(crate) mod math;
pub mod quad;
pub mod semilinear;
pub mod sim;
pub mod specfun;
pub mod transform;
pub mod wave;
