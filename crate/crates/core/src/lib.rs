//! Phase retrieval from two-window STFT magnitudes on a discrete grid.

pub mod cli;
pub mod error;
pub mod forge;
pub mod io;
pub mod local;
pub mod roots;
pub mod selftest;
pub mod signal;
pub mod stft;
pub mod stitch;
pub mod verify;
pub mod window;

pub use error::{Error, Result};
