pub mod classifier;
pub mod corpus;
pub mod embedding;
pub mod engine;
pub mod error;
pub mod feedback;
pub mod eval;
pub mod linalg;
pub mod pipeline;
pub mod router;
pub mod service;
pub mod text;
pub mod textsearch;

pub use error::{Error, Result};
