//! I/O, file formats, configuration and the threaded simulation driver for
//! the kgds numerical laboratory.  All numerics live in `kgds-core`; this
//! crate owns everything that touches the operating system.

pub mod config;
pub mod io;
pub mod manifest;
pub mod runner;

/// Formats a float with 17 significant digits so every output value
/// round-trips exactly through text.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}
