pub mod error;
pub mod bundle;
pub mod detect;
pub mod eval;
pub mod features;
pub mod linalg;
pub mod mlp;
pub mod pipeline;
pub mod synth;
pub mod trace;

pub use error::{Error, Result};
