//! The denoising network and its checkpoint format.

pub mod checkpoint;
pub mod config;
pub mod network;
pub mod params;
pub mod probe;

pub use config::{ModelConfig, Variant};
pub use network::{merge_families, smooth, split_families, Pc2daeModel};
pub use params::{Bindings, ParamStore};
