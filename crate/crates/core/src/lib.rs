pub mod classifiers;
pub mod config;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod lp;
pub mod manifest;
pub mod mfcc;
pub mod pipeline;
pub mod preprocess;
pub mod signal_io;
pub mod source;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
