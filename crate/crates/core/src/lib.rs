//! Kreiss constants, transient growth and structured controller synthesis.

pub mod error;
pub mod fixtures;
pub mod matcore;
pub mod nlsim;
pub mod synth;
pub mod sysmodel;
pub mod transient;

pub use error::{KreissError, Result};
