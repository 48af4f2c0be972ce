//! A small logic engine bridged to a soft-typed object kernel.
//!
//! Logic code creates and messages kernel objects through `new/2`,
//! `send/2` and `get/3`, defines kernel classes in its own syntax, and
//! passes arbitrary terms to methods by reference.

pub mod bridge;
pub mod cli;
pub mod compiler;
pub mod engine;
pub mod error;
pub mod hostdata;
pub mod kernel;
pub mod runtime;
pub mod syntax;
pub mod term;
pub mod toolkit;

pub use error::Error;
pub use runtime::{Options, Runtime};
