pub mod cli;
pub mod config;
pub mod data;
pub mod diffcore;
pub mod error;
pub mod evaluation;
pub mod gradcheck;
pub mod loss;
pub mod model;
pub mod training;
pub mod workflow;

pub use error::{Error, Result};
