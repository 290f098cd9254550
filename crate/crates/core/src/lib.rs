//! Recurrent neural CRF sequence labeling.

pub mod cli;
pub mod crf;
pub mod data;
pub mod embed;
pub mod error;
pub mod numkern;
pub mod rnn;
pub mod train;

pub use error::{Error, Result};
