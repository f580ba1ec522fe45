//! Central finite-difference check of every parameter gradient of the
//! batch Huber loss on a small seeded model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::diffcore::{Tape, Tensor};
use crate::error::Result;
use crate::loss::{huber_mean, HuberDelta};
use crate::model::{forward, forward_graph, init_params, HeadWidths, ModelConfig, ModelParams, ParamVars, TcnConfig};

pub const FD_EPSILON: f64 = 1e-5;
pub const REL_TOLERANCE: f64 = 1e-4;
// Denominator floor so gradients that are zero up to roundoff compare absolutely.
const REL_FLOOR: f64 = 1e-6;

/// Residuals `target − prediction` of the check batch, chosen to cover both
/// Huber regimes at `δ = 1` and to stay clear of the kink.
const RESIDUALS: [f64; 4] = [0.3, -2.5, 1.7, -0.6];

#[derive(Debug, Clone, Serialize)]
pub struct TensorCheck {
    pub name: String,
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub seed: u64,
    pub checks: Vec<TensorCheck>,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// F = 2, L = 4, one block of kernel 4 widening to 3 channels (so the
/// residual projection is exercised), d_mlp = 3, d_h = 2, d_a = 2.
pub fn tiny_config() -> ModelConfig {
    let tcn = TcnConfig {
        input_channels: 2,
        hidden_channels: 3,
        num_blocks: 1,
        kernel_size: 4,
        dilation_base: 2,
    };
    let widths = HeadWidths {
        d_mlp: 3,
        d_h: 2,
        d_a: 2,
    };
    ModelConfig::new(tcn, widths, 4).expect("tiny config is valid")
}

pub fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(REL_FLOOR)
}

struct Problem {
    cfg: ModelConfig,
    params: ModelParams,
    inputs: Vec<Tensor>,
    targets: Vec<f64>,
    delta: HuberDelta,
}

impl Problem {
    fn seeded(seed: u64) -> Result<Self> {
        let cfg = tiny_config();
        let mut params = init_params(&cfg, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        // nonzero biases so no pre-activation starts exactly at a kink
        let names: Vec<String> = params.named().into_iter().map(|(n, _)| n).collect();
        for (name, t) in names.iter().zip(params.tensors_mut()) {
            let leaf = name.rsplit('.').next().unwrap_or_default();
            if leaf.starts_with('b') {
                t.data_mut().iter_mut().for_each(|v| *v = rng.random_range(-0.3..0.3));
            }
        }
        let (f, l) = (cfg.tcn.input_channels, cfg.window);
        let inputs = (0..RESIDUALS.len())
            .map(|_| Tensor::new(vec![f, l], (0..f * l).map(|_| rng.random_range(-1.5..1.5)).collect()))
            .collect::<Result<Vec<_>>>()?;
        let mut problem = Self {
            cfg,
            params,
            inputs,
            targets: Vec::new(),
            delta: HuberDelta::default(),
        };
        problem.targets = problem
            .predictions(&problem.params)?
            .iter()
            .zip(RESIDUALS)
            .map(|(p, r)| p + r)
            .collect();
        Ok(problem)
    }

    fn predictions(&self, params: &ModelParams) -> Result<Vec<f64>> {
        self.inputs.iter().map(|x| forward(x, &self.cfg, params)).collect()
    }

    fn loss(&self, params: &ModelParams) -> Result<f64> {
        huber_mean(&self.targets, &self.predictions(params)?, self.delta)
    }

    fn analytic(&self) -> Result<Vec<Vec<f64>>> {
        let mut tape = Tape::new();
        let vars = ParamVars::register(&mut tape, &self.params, true);
        let mut outs = Vec::with_capacity(self.inputs.len());
        for x in &self.inputs {
            let x = tape.constant(x.clone());
            outs.push(forward_graph(&mut tape, x, &self.cfg, &vars)?);
        }
        let batch = tape.stack(&outs)?;
        let loss = tape.huber(batch, &self.targets, self.delta.get())?;
        tape.backward(loss)?;
        Ok(vars.grads(&tape))
    }
}

pub fn run_gradcheck(seed: u64) -> Result<GradCheckReport> {
    let problem = Problem::seeded(seed)?;
    let analytic = problem.analytic()?;
    let names: Vec<String> = problem.params.named().into_iter().map(|(n, _)| n).collect();
    let mut checks = Vec::with_capacity(names.len());

    for (ti, name) in names.into_iter().enumerate() {
        let mut check = TensorCheck {
            name,
            max_rel_error: 0.0,
            worst_index: 0,
            analytic: 0.0,
            numeric: 0.0,
        };
        for (j, &a) in analytic[ti].iter().enumerate() {
            let mut shifted = problem.params.clone();
            let base = shifted.tensors()[ti].data()[j];
            shifted.tensors_mut()[ti].data_mut()[j] = base + FD_EPSILON;
            let up = problem.loss(&shifted)?;
            shifted.tensors_mut()[ti].data_mut()[j] = base - FD_EPSILON;
            let down = problem.loss(&shifted)?;
            let numeric = (up - down) / (2.0 * FD_EPSILON);
            let err = relative_error(a, numeric);
            if err >= check.max_rel_error {
                check.max_rel_error = err;
                check.worst_index = j;
                check.analytic = a;
                check.numeric = numeric;
            }
        }
        log::debug!("{}: max rel error {:.3e}", check.name, check.max_rel_error);
        checks.push(check);
    }

    let max_rel_error = checks.iter().map(|c| c.max_rel_error).fold(0.0, f64::max);
    Ok(GradCheckReport {
        seed,
        checks,
        max_rel_error,
        tolerance: REL_TOLERANCE,
        passed: max_rel_error < REL_TOLERANCE,
    })
}
