#![allow(dead_code, clippy::needless_range_loop)]

use pricecast::diffcore::Tensor;
use pricecast::model::{init_params, HeadWidths, ModelConfig, ModelParams, TcnConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Plain nested-loop evaluation of the network, written against the raw
/// parameter buffers with no shared code path.
pub fn reference_forward(x: &[f64], f: usize, l: usize, cfg: &ModelConfig, p: &ModelParams) -> f64 {
    let t = &cfg.tcn;
    // h[c][time]
    let mut h: Vec<Vec<f64>> = (0..f).map(|c| x[c * l..(c + 1) * l].to_vec()).collect();
    for (i, block) in p.blocks.iter().enumerate() {
        let d = t.dilation_base.pow(i as u32);
        let k = t.kernel_size;
        let c_in = h.len();
        let c_out = t.hidden_channels;
        let kern = block.kernel.data();
        let bias = block.bias.data();
        let mut next = vec![vec![0.0; l]; c_out];
        for o in 0..c_out {
            for time in 0..l {
                let mut acc = bias[o];
                for c in 0..c_in {
                    for j in 0..k {
                        let back = (k - 1 - j) * d;
                        if time >= back {
                            acc += kern[(o * c_in + c) * k + j] * h[c][time - back];
                        }
                    }
                }
                let residual = match &block.projection {
                    Some(proj) => (0..c_in).map(|c| proj.data()[o * c_in + c] * h[c][time]).sum(),
                    None => h[o][time],
                };
                next[o][time] = acc.max(0.0) + residual;
            }
        }
        h = next;
    }

    let w = &cfg.widths;
    let c = h.len();
    // per-step MLP into m[step][d_h]
    let mut m = vec![vec![0.0; w.d_h]; l];
    for time in 0..l {
        let mut hidden = vec![0.0; w.d_mlp];
        for (a, hv) in hidden.iter_mut().enumerate() {
            let mut s = p.mlp_b1.data()[a];
            for ch in 0..c {
                s += p.mlp_w1.data()[a * c + ch] * h[ch][time];
            }
            *hv = s.max(0.0);
        }
        for b in 0..w.d_h {
            let mut s = p.mlp_b2.data()[b];
            for (a, hv) in hidden.iter().enumerate() {
                s += p.mlp_w2.data()[b * w.d_mlp + a] * hv;
            }
            m[time][b] = s;
        }
    }

    let mut scores = vec![0.0; l];
    for time in 0..l {
        let mut e = 0.0;
        for a in 0..w.d_a {
            let mut s = p.attn_b.data()[a];
            for b in 0..w.d_h {
                s += p.attn_w.data()[a * w.d_h + b] * m[time][b];
            }
            e += p.attn_v.data()[a] * s.tanh();
        }
        scores[time] = e;
    }
    let top = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - top).exp()).collect();
    let z: f64 = exps.iter().sum();

    let mut y = p.out_b.data()[0];
    for b in 0..w.d_h {
        let ctx: f64 = (0..l).map(|time| exps[time] / z * m[time][b]).sum();
        y += p.out_w.data()[b] * ctx;
    }
    y
}

/// A random architecture that satisfies the receptive-field constraint.
pub fn random_config(rng: &mut ChaCha8Rng) -> ModelConfig {
    loop {
        let tcn = TcnConfig {
            input_channels: rng.random_range(1..5),
            hidden_channels: rng.random_range(1..6),
            num_blocks: rng.random_range(1..4),
            kernel_size: rng.random_range(2..5),
            dilation_base: rng.random_range(1..4),
        };
        let widths = HeadWidths {
            d_mlp: rng.random_range(1..7),
            d_h: rng.random_range(1..6),
            d_a: rng.random_range(1..6),
        };
        let window = rng.random_range(1..=tcn.receptive_field().min(16));
        if let Ok(cfg) = ModelConfig::new(tcn, widths, window) {
            return cfg;
        }
    }
}

/// Parameters with every tensor, biases included, drawn at random.
pub fn random_params(cfg: &ModelConfig, rng: &mut ChaCha8Rng) -> ModelParams {
    let mut p = init_params(cfg, rng.random());
    for t in p.tensors_mut() {
        t.data_mut().iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
    }
    p
}

pub fn random_window(f: usize, l: usize, rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::new(vec![f, l], (0..f * l).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
