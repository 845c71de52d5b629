pub mod cli;
pub mod config;
pub mod dqn;
pub mod dynamics;
pub mod environment;
pub mod error;
pub mod ga;
pub mod io;

pub use error::{Error, Result};
