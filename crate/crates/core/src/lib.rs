//! Nonlinearity-tolerant 8D modulation formats obtained by set-partitioning
//! PDM-QPSK, together with a coherent WDM fiber-transmission Monte Carlo
//! simulator used to evaluate them.

pub mod channel;
pub mod cli;
pub mod config;
pub mod dsp;
pub mod error;
pub mod formats;
pub mod geom8d;
pub mod montecarlo;
pub mod plot;
pub mod validation;
pub mod waveform;

pub use error::{Error, Result};
