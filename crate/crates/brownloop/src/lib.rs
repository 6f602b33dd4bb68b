//! Command-line front end and file formats for `brownloop-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod exec;
pub mod expr;
pub mod pathfile;
pub mod verify;
