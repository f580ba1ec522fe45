use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::params::ModelParams;
use crate::data::{FeatureSpec, SplitRatios};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "pricecast-checkpoint/1";

/// Everything needed to rebuild a trained forecaster: architecture,
/// weights, and the fitted feature encoding.
///
/// Stored as JSON. Floats are written in shortest round-trip form and
/// parsed exactly, so save → load reproduces every weight bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub config: ModelConfig,
    pub params: ModelParams,
    pub features: Option<FeatureSpec>,
    pub split: Option<SplitRatios>,
}

impl Checkpoint {
    pub fn new(config: ModelConfig, params: ModelParams) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            config,
            params,
            features: None,
            split: None,
        }
    }

    pub fn with_features(mut self, features: FeatureSpec, split: SplitRatios) -> Self {
        self.features = Some(features);
        self.split = Some(split);
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut ckpt: Checkpoint = serde_json::from_str(text)?;
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!(
                "unsupported format {:?}",
                ckpt.format
            )));
        }
        ckpt.config
            .validate()
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        ckpt.params
            .validate(&ckpt.config)
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        if let Some(spec) = &ckpt.features {
            if spec.dim() != ckpt.config.tcn.input_channels {
                return Err(Error::Checkpoint(format!(
                    "feature dimension {} does not match input channels {}",
                    spec.dim(),
                    ckpt.config.tcn.input_channels
                )));
            }
        }
        ckpt.params.set_requires_grad(true);
        Ok(ckpt)
    }

    pub fn bit_eq(&self, other: &Checkpoint) -> bool {
        self.config == other.config
            && self.params.bit_eq(&other.params)
            && self.features == other.features
            && self.split == other.split
    }
}

pub fn save_checkpoint(path: impl AsRef<Path>, ckpt: &Checkpoint) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, ckpt.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcore::Tensor;
    use crate::model::init_params;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn json_round_trip_is_bit_exact(seed in any::<u64>(), bits in proptest::collection::vec(any::<u64>(), 16)) {
            let cfg = ModelConfig::with_defaults(4).unwrap();
            let mut params = init_params(&cfg, seed);
            // overwrite attn.w with arbitrary finite bit patterns
            let vals: Vec<f64> = bits
                .iter()
                .map(|&b| f64::from_bits(b))
                .map(|v| if v.is_finite() { v } else { -0.0 })
                .collect();
            params.attn_w = Tensor::new(vec![16, 16], vals.iter().cycle().take(256).copied().collect()).unwrap();
            let ckpt = Checkpoint::new(cfg, params);
            let back = Checkpoint::from_json(&ckpt.to_json().unwrap()).unwrap();
            prop_assert!(back.bit_eq(&ckpt));
        }
    }

    #[test]
    fn file_round_trip() {
        let cfg = ModelConfig::with_defaults(3).unwrap();
        let ckpt = Checkpoint::new(cfg, init_params(&cfg, 5));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_checkpoint(&path, &ckpt).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert!(back.bit_eq(&ckpt));
        assert!(back.params.tensors().iter().all(|t| t.requires_grad()));
    }

    #[test]
    fn mismatched_shapes_are_rejected() {
        let cfg = ModelConfig::with_defaults(3).unwrap();
        let mut params = init_params(&cfg, 5);
        params.out_w = Tensor::zeros(vec![1, 3]);
        let text = Checkpoint::new(cfg, params).to_json().unwrap();
        assert!(matches!(Checkpoint::from_json(&text), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn non_finite_payload_is_rejected() {
        let cfg = ModelConfig::with_defaults(3).unwrap();
        let text = Checkpoint::new(cfg, init_params(&cfg, 5)).to_json().unwrap();
        let broken = text.replacen("\"data\": [\n", "\"data\": [\n null,", 1);
        assert!(Checkpoint::from_json(&broken).is_err());
    }
}
