//! Kick-event behaviour prediction: world states, feature extraction under
//! ten player-ordering methods, labelled datasets, dense networks and the
//! evaluation tooling around them.

pub mod analysis;
pub mod dataset;
pub mod error;
pub mod events;
pub mod features;
pub mod labels;
pub mod neuralnet;
pub mod ordering;
pub mod seed;
pub mod state;
pub mod synthgen;
pub mod target;

pub use analysis::{AblationConfig, AblationReport, ImportanceReport, MatchMetrics, MatchRecord};
pub use dataset::Dataset;
pub use error::{DatasetError, Error, EventFileError, ModelFormatError, Result};
pub use features::{FeatureRow, FeatureSchema};
pub use labels::{Category, Description, KickAction, LabelRow};
pub use neuralnet::{DenseNetwork, TrainConfig};
pub use ordering::{Ordering, OrderingMethod};
pub use state::{Flavor, NoiseConfig, PlayerState, Side, Vec2, WorldState};
pub use synthgen::{EpisodeConfig, KickEvent};
pub use target::PredictionTarget;
