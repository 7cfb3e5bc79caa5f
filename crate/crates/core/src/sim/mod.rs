//! Synthetic plume scenarios and the sensor corruption model.

pub mod corrupt;
pub mod ec;
pub mod scenario;

pub use corrupt::{corrupt, CorruptionConfig};
pub use ec::{ec_compensate, EcChannelModel, TempLookup};
pub use scenario::{generate_clean, PlumeScenario, PulseEvent, ScenarioConfig};
