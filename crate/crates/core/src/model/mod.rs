//! The forecasting network: a residual dilated-causal convolution stack,
//! a per-step MLP, additive attention pooling and an affine output head.

mod checkpoint;
mod config;
mod forward;
mod params;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use config::{HeadWidths, ModelConfig, TcnConfig};
pub use forward::{
    attention_graph, attention_pool, forward, forward_graph, mlp_forward, mlp_graph, tcn_forward,
    tcn_graph, ParamVars,
};
pub use params::{init_params, ModelParams, TcnBlockParams};
