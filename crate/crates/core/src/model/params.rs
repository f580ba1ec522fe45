use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use crate::diffcore::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcnBlockParams {
    /// `[C_out × C_in × K]`
    pub kernel: Tensor,
    /// `[C_out]`
    pub bias: Tensor,
    /// 1×1 residual projection `[C_out × C_in × 1]`, present only when the
    /// block changes the channel count.
    pub projection: Option<Tensor>,
}

/// Every learnable weight of the forecaster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub blocks: Vec<TcnBlockParams>,
    pub mlp_w1: Tensor,
    pub mlp_b1: Tensor,
    pub mlp_w2: Tensor,
    pub mlp_b2: Tensor,
    pub attn_w: Tensor,
    pub attn_b: Tensor,
    pub attn_v: Tensor,
    pub out_w: Tensor,
    pub out_b: Tensor,
}

impl ModelParams {
    /// All tensors in a fixed order, paired with stable names.
    pub fn named(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (i, b) in self.blocks.iter().enumerate() {
            out.push((format!("tcn.{i}.kernel"), &b.kernel));
            out.push((format!("tcn.{i}.bias"), &b.bias));
            if let Some(p) = &b.projection {
                out.push((format!("tcn.{i}.projection"), p));
            }
        }
        out.push(("mlp.w1".into(), &self.mlp_w1));
        out.push(("mlp.b1".into(), &self.mlp_b1));
        out.push(("mlp.w2".into(), &self.mlp_w2));
        out.push(("mlp.b2".into(), &self.mlp_b2));
        out.push(("attn.w".into(), &self.attn_w));
        out.push(("attn.b".into(), &self.attn_b));
        out.push(("attn.v".into(), &self.attn_v));
        out.push(("out.w".into(), &self.out_w));
        out.push(("out.b".into(), &self.out_b));
        out
    }

    pub fn tensors(&self) -> Vec<&Tensor> {
        self.named().into_iter().map(|(_, t)| t).collect()
    }

    /// Same order as [`ModelParams::named`].
    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        for b in &mut self.blocks {
            out.push(&mut b.kernel);
            out.push(&mut b.bias);
            if let Some(p) = &mut b.projection {
                out.push(p);
            }
        }
        out.extend([
            &mut self.mlp_w1,
            &mut self.mlp_b1,
            &mut self.mlp_w2,
            &mut self.mlp_b2,
            &mut self.attn_w,
            &mut self.attn_b,
            &mut self.attn_v,
            &mut self.out_w,
            &mut self.out_b,
        ]);
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn set_requires_grad(&mut self, flag: bool) {
        for t in self.tensors_mut() {
            t.set_requires_grad(flag);
        }
    }

    pub fn clear_grads(&mut self) {
        for t in self.tensors_mut() {
            t.clear_grad();
        }
    }

    pub fn bit_eq(&self, other: &ModelParams) -> bool {
        let (a, b) = (self.tensors(), other.tensors());
        a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.bit_eq(y))
    }

    /// The shape every tensor must have under `cfg`, in [`named`] order.
    ///
    /// [`named`]: ModelParams::named
    pub fn expected_shapes(cfg: &ModelConfig) -> Vec<(String, Vec<usize>)> {
        let tcn = &cfg.tcn;
        let c = tcn.hidden_channels;
        let w = &cfg.widths;
        let mut out = Vec::new();
        for i in 0..tcn.num_blocks {
            let c_in = tcn.block_in_channels(i);
            out.push((format!("tcn.{i}.kernel"), vec![c, c_in, tcn.kernel_size]));
            out.push((format!("tcn.{i}.bias"), vec![c]));
            if c_in != c {
                out.push((format!("tcn.{i}.projection"), vec![c, c_in, 1]));
            }
        }
        out.push(("mlp.w1".into(), vec![w.d_mlp, c]));
        out.push(("mlp.b1".into(), vec![w.d_mlp]));
        out.push(("mlp.w2".into(), vec![w.d_h, w.d_mlp]));
        out.push(("mlp.b2".into(), vec![w.d_h]));
        out.push(("attn.w".into(), vec![w.d_a, w.d_h]));
        out.push(("attn.b".into(), vec![w.d_a]));
        out.push(("attn.v".into(), vec![w.d_a]));
        out.push(("out.w".into(), vec![1, w.d_h]));
        out.push(("out.b".into(), vec![1]));
        out
    }

    /// Checks that every tensor has the shape `cfg` implies.
    pub fn validate(&self, cfg: &ModelConfig) -> Result<()> {
        if self.blocks.len() != cfg.tcn.num_blocks {
            return Err(Error::Config(format!(
                "expected {} blocks, found {}",
                cfg.tcn.num_blocks,
                self.blocks.len()
            )));
        }
        let expected = Self::expected_shapes(cfg);
        let actual = self.named();
        if expected.len() != actual.len() {
            return Err(Error::Config(
                "residual projections do not match the channel layout".into(),
            ));
        }
        for ((ename, eshape), (aname, t)) in expected.iter().zip(&actual) {
            if ename != aname || eshape.as_slice() != t.shape() {
                return Err(Error::Dimension {
                    op: "model params",
                    left: eshape.clone(),
                    right: t.shape().to_vec(),
                });
            }
        }
        Ok(())
    }
}

fn glorot(rng: &mut ChaCha8Rng, shape: Vec<usize>, fan_in: usize, fan_out: usize) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.random_range(-limit..=limit)).collect();
    Tensor::new(shape, data)
        .expect("uniform draws are finite")
        .requiring_grad()
}

fn zeros(shape: Vec<usize>) -> Tensor {
    Tensor::zeros(shape).requiring_grad()
}

/// Glorot-uniform weights and zero biases, fully determined by `seed`.
pub fn init_params(cfg: &ModelConfig, seed: u64) -> ModelParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tcn = &cfg.tcn;
    let c = tcn.hidden_channels;
    let k = tcn.kernel_size;
    let w = cfg.widths;

    let blocks = (0..tcn.num_blocks)
        .map(|i| {
            let c_in = tcn.block_in_channels(i);
            let kernel = glorot(&mut rng, vec![c, c_in, k], c_in * k, c * k);
            let projection = (c_in != c).then(|| glorot(&mut rng, vec![c, c_in, 1], c_in, c));
            TcnBlockParams {
                kernel,
                bias: zeros(vec![c]),
                projection,
            }
        })
        .collect();

    ModelParams {
        blocks,
        mlp_w1: glorot(&mut rng, vec![w.d_mlp, c], c, w.d_mlp),
        mlp_b1: zeros(vec![w.d_mlp]),
        mlp_w2: glorot(&mut rng, vec![w.d_h, w.d_mlp], w.d_mlp, w.d_h),
        mlp_b2: zeros(vec![w.d_h]),
        attn_w: glorot(&mut rng, vec![w.d_a, w.d_h], w.d_h, w.d_a),
        attn_b: zeros(vec![w.d_a]),
        attn_v: glorot(&mut rng, vec![w.d_a], w.d_a, 1),
        out_w: glorot(&mut rng, vec![1, w.d_h], w.d_h, 1),
        out_b: zeros(vec![1]),
    }
}
