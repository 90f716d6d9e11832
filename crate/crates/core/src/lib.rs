pub mod engine;
pub mod error;
pub mod linalg;
pub mod model;
pub mod random;
pub mod records;
pub mod scenarios;

pub use error::{Error, Result};
