//! Run settings read from a TOML file. Every key is optional; missing keys
//! take the defaults below.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::SplitRatios;
use crate::error::{Error, Result};
use crate::loss::HuberDelta;
use crate::model::{HeadWidths, ModelConfig, TcnConfig};
use crate::training::{AdamConfig, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub window: usize,
    pub hidden_channels: usize,
    pub num_blocks: usize,
    pub kernel_size: usize,
    pub dilation_base: usize,
    pub d_mlp: usize,
    pub d_h: usize,
    pub d_a: usize,

    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub huber_delta: f64,
    /// Seeds both parameter initialization and the epoch shuffles.
    pub seed: u64,
    pub early_stop_patience: Option<usize>,

    pub train_ratio: f64,
    pub val_ratio: f64,
    pub test_ratio: f64,
}

impl Default for Settings {
    fn default() -> Self {
        let widths = HeadWidths::default();
        let adam = AdamConfig::default();
        let train = TrainConfig::default();
        let split = SplitRatios::default();
        Self {
            window: 12,
            hidden_channels: 16,
            num_blocks: 3,
            kernel_size: 3,
            dilation_base: 2,
            d_mlp: widths.d_mlp,
            d_h: widths.d_h,
            d_a: widths.d_a,
            epochs: train.epochs,
            batch_size: train.batch_size,
            learning_rate: adam.learning_rate,
            adam_beta1: adam.beta1,
            adam_beta2: adam.beta2,
            adam_epsilon: adam.epsilon,
            huber_delta: train.huber_delta.get(),
            seed: train.seed,
            early_stop_patience: train.early_stop_patience,
            train_ratio: split.train,
            val_ratio: split.val,
            test_ratio: split.test,
        }
    }
}

impl Settings {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Settings = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks everything that does not depend on the data.
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::Config("window must be at least 1".into()));
        }
        // any positive input width works for the structural checks
        self.model_config(1)?;
        self.train_config()?.validate()?;
        self.split_ratios().validate()
    }

    pub fn model_config(&self, input_channels: usize) -> Result<ModelConfig> {
        let tcn = TcnConfig {
            input_channels,
            hidden_channels: self.hidden_channels,
            num_blocks: self.num_blocks,
            kernel_size: self.kernel_size,
            dilation_base: self.dilation_base,
        };
        let widths = HeadWidths {
            d_mlp: self.d_mlp,
            d_h: self.d_h,
            d_a: self.d_a,
        };
        ModelConfig::new(tcn, widths, self.window)
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        Ok(TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            adam: AdamConfig {
                learning_rate: self.learning_rate,
                beta1: self.adam_beta1,
                beta2: self.adam_beta2,
                epsilon: self.adam_epsilon,
            },
            huber_delta: HuberDelta::new(self.huber_delta).map_err(|e| Error::Config(e.to_string()))?,
            seed: self.seed,
            early_stop_patience: self.early_stop_patience,
        })
    }

    pub fn split_ratios(&self) -> SplitRatios {
        SplitRatios {
            train: self.train_ratio,
            val: self.val_ratio,
            test: self.test_ratio,
        }
    }
}
