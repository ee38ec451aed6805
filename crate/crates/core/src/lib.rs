pub mod affect;
pub mod corpus;
pub mod detector;
pub mod error;
pub mod identity;
pub mod io;
pub mod models;
pub mod nn;
pub mod pipeline;
pub mod sampler;
pub mod stats;
pub mod viz;

pub use error::{Error, Result};
