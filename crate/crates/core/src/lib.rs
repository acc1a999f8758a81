pub mod baseline;
pub mod checkpoint;
pub mod corpus;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod lifepath;
pub mod matrix;
pub mod model;
pub mod seed;
pub mod trainer;

pub use checkpoint::Checkpoint;
pub use dataset::{EventDataset, Vocabulary};
pub use error::{Error, Result};
pub use geometry::Geometry;
pub use lifepath::TransitionGraph;
pub use matrix::Matrix;
pub use model::{DropoutSpec, Gradients, HiddenTrajectory, LossBreakdown, ModelParams};
pub use trainer::{train, TrainConfig, TrainLog, TrainerState};
