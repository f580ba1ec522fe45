mod adam;
mod trainer;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use trainer::{mean_loss, sample_gradient, train, TrainConfig, TrainReport};
