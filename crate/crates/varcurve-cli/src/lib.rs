//! Library surface of the experiment harness. The binary in `main.rs` is a
//! thin argument-parsing shell over these modules; integration tests drive
//! them directly.

pub mod config;
pub mod density;
pub mod experiment;
pub mod histogram;
