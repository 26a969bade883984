pub mod config;
pub mod constraints;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod linegraph;
pub mod milp;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
