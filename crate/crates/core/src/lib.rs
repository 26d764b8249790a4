#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod completion;
pub mod error;
pub mod exec;
pub mod forward;
pub mod imaging;
pub mod prolate;
pub mod scene;
pub mod specfun;

pub use error::{Error, Result};
pub use exec::Execution;
