pub mod bowtie;
pub mod cli;
pub mod classify;
pub mod continuation;
pub mod discretize;
pub mod error;
pub mod elliptic;
pub mod graph;
pub mod linalg;
pub mod ode;
pub mod poly;
pub mod render;
pub mod shooting;
pub mod spectrum;

pub use error::{Error, Result};
