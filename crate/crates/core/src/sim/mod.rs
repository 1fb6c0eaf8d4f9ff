//! Synthetic truckload market: lanes, carriers, weekly demand, spot prices
//! and routing-guide waterfalls with known acceptance behavior.

pub mod config;
pub mod emit;
pub mod engine;
pub mod truth;
pub mod world;

pub use config::{published_truth, PricingStrategy, ScenarioConfig};
pub use emit::{emit_training_corpus, GroundTruth};
pub use engine::{simulate, SimulationLog, SpotFill, WeeklyMetrics};
pub use world::{generate_world, World};
