//! Physics-constrained denoising autoencoder for multi-channel 1 Hz sensor
//! time series, with a synthetic sensor simulator, classical baselines and
//! evaluation metrics.

// `!(x > 0.0)` deliberately rejects NaN; index loops mirror the math.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod autodiff;
pub mod baselines;
pub mod channels;
pub mod config;
pub mod data;
pub mod error;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod sim;
pub mod train;

pub use channels::{ChannelMeta, Family, PerFamily, N_ENV, N_TARGETS, TARGET_NAMES};
pub use data::SeriesFrame;
pub use error::{Error, Result};
