use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the residual dilated-causal convolution stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TcnConfig {
    pub input_channels: usize,
    pub hidden_channels: usize,
    pub num_blocks: usize,
    pub kernel_size: usize,
    /// Block `i` uses dilation `dilation_base^i`.
    pub dilation_base: usize,
}

impl TcnConfig {
    pub fn dilation(&self, block: usize) -> usize {
        self.dilation_base.pow(block as u32)
    }

    /// `1 + (K−1)·Σ base^i` over all blocks.
    pub fn receptive_field(&self) -> usize {
        let span: usize = (0..self.num_blocks).map(|i| self.dilation(i)).sum();
        1 + (self.kernel_size - 1) * span
    }

    pub fn block_in_channels(&self, block: usize) -> usize {
        if block == 0 {
            self.input_channels
        } else {
            self.hidden_channels
        }
    }

    pub fn validate(&self, window: usize) -> Result<()> {
        let counts = [
            ("input_channels", self.input_channels),
            ("hidden_channels", self.hidden_channels),
            ("num_blocks", self.num_blocks),
            ("kernel_size", self.kernel_size),
            ("dilation_base", self.dilation_base),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        let rf = self.receptive_field();
        if rf < window {
            return Err(Error::Config(format!(
                "receptive field {rf} is shorter than window length {window}; \
                 the network cannot see the whole window"
            )));
        }
        Ok(())
    }
}

/// Widths of the layers after the convolution stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadWidths {
    pub d_mlp: usize,
    pub d_h: usize,
    pub d_a: usize,
}

impl Default for HeadWidths {
    fn default() -> Self {
        Self {
            d_mlp: 32,
            d_h: 16,
            d_a: 16,
        }
    }
}

/// Full architecture description, validated on construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub tcn: TcnConfig,
    pub widths: HeadWidths,
    pub window: usize,
}

impl ModelConfig {
    pub fn new(tcn: TcnConfig, widths: HeadWidths, window: usize) -> Result<Self> {
        let cfg = Self { tcn, widths, window };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Default architecture for `input_channels` features: window 12,
    /// 3 blocks of 16 channels, kernel 3, dilation base 2.
    pub fn with_defaults(input_channels: usize) -> Result<Self> {
        Self::new(
            TcnConfig {
                input_channels,
                hidden_channels: 16,
                num_blocks: 3,
                kernel_size: 3,
                dilation_base: 2,
            },
            HeadWidths::default(),
            12,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::Config("window must be at least 1".into()));
        }
        let HeadWidths { d_mlp, d_h, d_a } = self.widths;
        if d_mlp == 0 || d_h == 0 || d_a == 0 {
            return Err(Error::Config("layer widths must be at least 1".into()));
        }
        self.tcn.validate(self.window)
    }
}
