pub mod atomic;
pub mod calibration;
pub mod cli;
pub mod cooling;
pub mod designer;
pub mod error;
pub mod fit;
pub mod liouvillian;
pub mod spectrum;

pub use error::{Error, Result};
