//! Forward pass: TCN → per-step MLP → attention pooling → affine head.

use super::config::{ModelConfig, TcnConfig};
use super::params::ModelParams;
use crate::diffcore::{Tape, Tensor, Var};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
struct BlockVars {
    kernel: Var,
    bias: Var,
    projection: Option<Var>,
}

/// Model parameters recorded as leaves on one tape.
#[derive(Debug, Clone)]
pub struct ParamVars {
    blocks: Vec<BlockVars>,
    mlp_w1: Var,
    mlp_b1: Var,
    mlp_w2: Var,
    mlp_b2: Var,
    attn_w: Var,
    attn_b: Var,
    attn_v: Var,
    out_w: Var,
    out_b: Var,
}

impl ParamVars {
    /// Records every parameter. With `track` false they are constants and
    /// nothing downstream keeps gradient state.
    pub fn register(tape: &mut Tape, params: &ModelParams, track: bool) -> Self {
        let mut put = |t: &Tensor| {
            let mut t = t.clone();
            t.set_requires_grad(track);
            tape.leaf(t)
        };
        let blocks = params
            .blocks
            .iter()
            .map(|b| BlockVars {
                kernel: put(&b.kernel),
                bias: put(&b.bias),
                projection: b.projection.as_ref().map(&mut put),
            })
            .collect();
        Self {
            blocks,
            mlp_w1: put(&params.mlp_w1),
            mlp_b1: put(&params.mlp_b1),
            mlp_w2: put(&params.mlp_w2),
            mlp_b2: put(&params.mlp_b2),
            attn_w: put(&params.attn_w),
            attn_b: put(&params.attn_b),
            attn_v: put(&params.attn_v),
            out_w: put(&params.out_w),
            out_b: put(&params.out_b),
        }
    }

    /// Same order as [`ModelParams::named`].
    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        for b in &self.blocks {
            out.push(b.kernel);
            out.push(b.bias);
            out.extend(b.projection);
        }
        out.extend([
            self.mlp_w1,
            self.mlp_b1,
            self.mlp_w2,
            self.mlp_b2,
            self.attn_w,
            self.attn_b,
            self.attn_v,
            self.out_w,
            self.out_b,
        ]);
        out
    }

    /// Gradients after `tape.backward`, zero-filled where none arrived.
    pub fn grads(&self, tape: &Tape) -> Vec<Vec<f64>> {
        self.vars()
            .into_iter()
            .map(|v| match tape.grad(v) {
                Some(g) => g.to_vec(),
                None => vec![0.0; tape.value(v).len()],
            })
            .collect()
    }
}

pub fn tcn_graph(tape: &mut Tape, x: Var, cfg: &TcnConfig, p: &ParamVars) -> Result<Var> {
    let shape = tape.value(x).shape().to_vec();
    let len = match shape.as_slice() {
        &[f, l] if f == cfg.input_channels => l,
        _ => {
            return Err(Error::Dimension {
                op: "tcn_forward",
                left: shape,
                right: vec![cfg.input_channels],
            })
        }
    };
    if len == 0 {
        return Err(Error::EmptySequence("tcn_forward"));
    }
    cfg.validate(len)?;
    if p.blocks.len() != cfg.num_blocks {
        return Err(Error::Config(format!(
            "config has {} blocks, params have {}",
            cfg.num_blocks,
            p.blocks.len()
        )));
    }

    let mut h = x;
    for (i, block) in p.blocks.iter().enumerate() {
        let conv = tape.causal_conv1d(h, block.kernel, cfg.dilation(i))?;
        let conv = tape.add_bias(conv, block.bias)?;
        let act = tape.relu(conv)?;
        let residual = match block.projection {
            Some(proj) => tape.causal_conv1d(h, proj, 1)?,
            None => h,
        };
        h = tape.add(act, residual)?;
    }
    Ok(h)
}

/// `W2·ReLU(W1·h + b1) + b2` applied to every column of `h [C×L]`.
pub fn mlp_graph(tape: &mut Tape, h: Var, p: &ParamVars) -> Result<Var> {
    let z = tape.matmul(p.mlp_w1, h)?;
    let z = tape.add_bias(z, p.mlp_b1)?;
    let z = tape.relu(z)?;
    let z = tape.matmul(p.mlp_w2, z)?;
    tape.add_bias(z, p.mlp_b2)
}

/// Additive attention over the columns of `hs [d_h×L]`. Returns the
/// context vector `[d_h]` and the weights `[L]`.
pub fn attention_graph(tape: &mut Tape, hs: Var, p: &ParamVars) -> Result<(Var, Var)> {
    let shape = tape.value(hs).shape().to_vec();
    let (d_h, len) = match shape.as_slice() {
        &[d, l] => (d, l),
        _ => {
            return Err(Error::Dimension {
                op: "attention_pool",
                left: shape,
                right: vec![],
            })
        }
    };
    if len == 0 {
        return Err(Error::EmptySequence("attention_pool"));
    }
    let d_a = tape.value(p.attn_v).len();

    let s = tape.matmul(p.attn_w, hs)?;
    let s = tape.add_bias(s, p.attn_b)?;
    let s = tape.tanh(s)?;
    let v_row = tape.reshape(p.attn_v, vec![1, d_a])?;
    let scores = tape.matmul(v_row, s)?;
    let scores = tape.reshape(scores, vec![len])?;
    let alpha = tape.softmax(scores)?;
    let alpha_col = tape.reshape(alpha, vec![len, 1])?;
    let c = tape.matmul(hs, alpha_col)?;
    let c = tape.reshape(c, vec![d_h])?;
    Ok((c, alpha))
}

/// Full forward pass producing a one-element prediction.
pub fn forward_graph(tape: &mut Tape, x: Var, cfg: &ModelConfig, p: &ParamVars) -> Result<Var> {
    let h = tcn_graph(tape, x, &cfg.tcn, p)?;
    let h = mlp_graph(tape, h, p)?;
    let (c, _) = attention_graph(tape, h, p)?;
    let d_h = tape.value(c).len();
    let c = tape.reshape(c, vec![d_h, 1])?;
    let y = tape.matmul(p.out_w, c)?;
    let y = tape.add_bias(y, p.out_b)?;
    tape.reshape(y, vec![1])
}

fn untracked<T>(
    params: &ModelParams,
    f: impl FnOnce(&mut Tape, &ParamVars) -> Result<T>,
) -> Result<T> {
    let mut tape = Tape::new();
    let p = ParamVars::register(&mut tape, params, false);
    f(&mut tape, &p)
}

pub fn tcn_forward(x: &Tensor, cfg: &TcnConfig, params: &ModelParams) -> Result<Tensor> {
    untracked(params, |tape, p| {
        let x = tape.constant(x.clone());
        let out = tcn_graph(tape, x, cfg, p)?;
        Ok(tape.value(out).clone())
    })
}

/// Accepts a single step `[C]` or a sequence of steps `[C×L]`.
pub fn mlp_forward(h: &Tensor, params: &ModelParams) -> Result<Tensor> {
    untracked(params, |tape, p| {
        let single = h.shape().len() == 1;
        let hv = if single {
            tape.constant(h.reshaped(vec![h.len(), 1])?)
        } else {
            tape.constant(h.clone())
        };
        let out = mlp_graph(tape, hv, p)?;
        let t = tape.value(out).clone();
        if single {
            t.reshaped(vec![t.len()])
        } else {
            Ok(t)
        }
    })
}

pub fn attention_pool(hs: &Tensor, params: &ModelParams) -> Result<(Tensor, Tensor)> {
    untracked(params, |tape, p| {
        let hv = tape.constant(hs.clone());
        let (c, alpha) = attention_graph(tape, hv, p)?;
        Ok((tape.value(c).clone(), tape.value(alpha).clone()))
    })
}

/// Standardized-unit prediction for one window `[F×L]`.
pub fn forward(x: &Tensor, cfg: &ModelConfig, params: &ModelParams) -> Result<f64> {
    untracked(params, |tape, p| {
        let xv = tape.constant(x.clone());
        let y = forward_graph(tape, xv, cfg, p)?;
        tape.value(y).item()
    })
}
