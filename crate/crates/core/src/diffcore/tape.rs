//! Linear computation tape with reverse-mode gradient propagation.
//!
//! Operations append nodes in execution order, so every node's inputs
//! precede it. [`Tape::backward`] walks the nodes once in reverse and
//! sums contributions from every use of a value.

use super::kernels;
use super::tensor::{check_finite, Tensor};
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Matmul { a: usize, b: usize, m: usize, k: usize, n: usize },
    Add { a: usize, b: usize },
    AddBias { x: usize, bias: usize, cols: usize },
    Conv { x: usize, kernel: usize, dims: kernels::ConvDims },
    Relu { x: usize },
    Tanh { x: usize },
    Softmax { x: usize },
    Reshape { x: usize },
    Mul { a: usize, b: usize },
    Sum { x: usize },
    Stack { parts: Vec<usize> },
    Huber { pred: usize, target: Vec<f64>, delta: f64 },
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
}

#[derive(Debug, Default, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Records an input tensor. Its `requires_grad` flag is kept.
    pub fn leaf(&mut self, tensor: Tensor) -> Var {
        self.nodes.push(Node {
            value: tensor,
            op: Op::Leaf,
        });
        Var(self.nodes.len() - 1)
    }

    /// Records an input that never receives a gradient.
    pub fn constant(&mut self, mut tensor: Tensor) -> Var {
        tensor.set_requires_grad(false);
        self.leaf(tensor)
    }

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.0].value
    }

    pub fn grad(&self, var: Var) -> Option<&[f64]> {
        self.nodes[var.0].value.grad()
    }

    fn shape(&self, var: Var) -> &[usize] {
        self.nodes[var.0].value.shape()
    }

    fn tracks(&self, idx: usize) -> bool {
        self.nodes[idx].value.requires_grad()
    }

    fn push(
        &mut self,
        op_name: &'static str,
        shape: Vec<usize>,
        data: Vec<f64>,
        inputs: &[usize],
        op: Op,
    ) -> Result<Var> {
        check_finite(op_name, &data)?;
        let mut value = Tensor::from_parts_unchecked(shape, data);
        if inputs.iter().any(|&i| self.tracks(i)) {
            value.set_requires_grad(true);
        }
        self.nodes.push(Node { value, op });
        Ok(Var(self.nodes.len() - 1))
    }

    fn dims2(&self, op: &'static str, var: Var) -> Result<(usize, usize)> {
        match *self.shape(var) {
            [r, c] => Ok((r, c)),
            _ => Err(Error::Dimension {
                op,
                left: self.shape(var).to_vec(),
                right: vec![],
            }),
        }
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.dims2("matmul", a)?;
        let (k2, n) = self.dims2("matmul", b)?;
        if k != k2 {
            return Err(Error::Dimension {
                op: "matmul",
                left: self.shape(a).to_vec(),
                right: self.shape(b).to_vec(),
            });
        }
        let out = kernels::matmul(self.value(a).data(), self.value(b).data(), m, k, n);
        self.push(
            "matmul",
            vec![m, n],
            out,
            &[a.0, b.0],
            Op::Matmul { a: a.0, b: b.0, m, k, n },
        )
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let out = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(x, y)| x + y)
            .collect();
        let shape = self.shape(a).to_vec();
        self.push("add", shape, out, &[a.0, b.0], Op::Add { a: a.0, b: b.0 })
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let out = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(x, y)| x * y)
            .collect();
        let shape = self.shape(a).to_vec();
        self.push("mul", shape, out, &[a.0, b.0], Op::Mul { a: a.0, b: b.0 })
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::Dimension {
                op,
                left: self.shape(a).to_vec(),
                right: self.shape(b).to_vec(),
            });
        }
        Ok(())
    }

    /// Adds `bias[r]` to every entry of row `r` of a 2-D `x`.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (rows, cols) = self.dims2("add_bias", x)?;
        if self.shape(bias) != [rows] {
            return Err(Error::Dimension {
                op: "add_bias",
                left: self.shape(x).to_vec(),
                right: self.shape(bias).to_vec(),
            });
        }
        let b = self.value(bias).data();
        let out = self
            .value(x)
            .data()
            .chunks(cols.max(1))
            .zip(b)
            .flat_map(|(row, &bv)| row.iter().map(move |v| v + bv))
            .collect();
        self.push(
            "add_bias",
            vec![rows, cols],
            out,
            &[x.0, bias.0],
            Op::AddBias { x: x.0, bias: bias.0, cols },
        )
    }

    /// Causal dilated 1-D convolution of `x [C_in×T]` with
    /// `kernel [C_out×C_in×K]`, left-padded by `(K−1)·dilation` zeros.
    pub fn causal_conv1d(&mut self, x: Var, kernel: Var, dilation: usize) -> Result<Var> {
        let dims = kernels::conv_dims(self.shape(x), self.shape(kernel), dilation)?;
        let out = kernels::causal_conv1d(self.value(x).data(), self.value(kernel).data(), dims);
        self.push(
            "causal_conv1d",
            vec![dims.c_out, dims.t],
            out,
            &[x.0, kernel.0],
            Op::Conv { x: x.0, kernel: kernel.0, dims },
        )
    }

    pub fn relu(&mut self, x: Var) -> Result<Var> {
        let out = self.value(x).data().iter().map(|&v| v.max(0.0)).collect();
        let shape = self.shape(x).to_vec();
        self.push("relu", shape, out, &[x.0], Op::Relu { x: x.0 })
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var> {
        let out = self.value(x).data().iter().map(|v| v.tanh()).collect();
        let shape = self.shape(x).to_vec();
        self.push("tanh", shape, out, &[x.0], Op::Tanh { x: x.0 })
    }

    pub fn softmax(&mut self, x: Var) -> Result<Var> {
        match *self.shape(x) {
            [0] => return Err(Error::EmptySequence("softmax")),
            [_] => {}
            _ => {
                return Err(Error::Dimension {
                    op: "softmax",
                    left: self.shape(x).to_vec(),
                    right: vec![],
                })
            }
        }
        let out = kernels::softmax(self.value(x).data());
        let shape = self.shape(x).to_vec();
        self.push("softmax", shape, out, &[x.0], Op::Softmax { x: x.0 })
    }

    pub fn reshape(&mut self, x: Var, shape: Vec<usize>) -> Result<Var> {
        let n: usize = shape.iter().product();
        if n != self.value(x).len() {
            return Err(Error::Dimension {
                op: "reshape",
                left: self.shape(x).to_vec(),
                right: shape,
            });
        }
        let out = self.value(x).data().to_vec();
        self.push("reshape", shape, out, &[x.0], Op::Reshape { x: x.0 })
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let s = self.value(x).data().iter().sum();
        self.push("sum", vec![], vec![s], &[x.0], Op::Sum { x: x.0 })
    }

    /// Concatenates one-element values into a vector.
    pub fn stack(&mut self, parts: &[Var]) -> Result<Var> {
        let mut out = Vec::with_capacity(parts.len());
        for &p in parts {
            out.push(self.value(p).item()?);
        }
        let idx: Vec<usize> = parts.iter().map(|p| p.0).collect();
        self.push("stack", vec![parts.len()], out, &idx, Op::Stack { parts: idx.clone() })
    }

    /// Mean Huber loss of predictions against fixed targets.
    pub fn huber(&mut self, pred: Var, target: &[f64], delta: f64) -> Result<Var> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Parameter {
                op: "huber",
                message: format!("delta must be positive, got {delta}"),
            });
        }
        let n = self.value(pred).len();
        if n != target.len() {
            return Err(Error::Dimension {
                op: "huber",
                left: self.shape(pred).to_vec(),
                right: vec![target.len()],
            });
        }
        if n == 0 {
            return Err(Error::EmptySequence("huber"));
        }
        check_finite("huber", target)?;
        let loss = kernels::huber_mean(target, self.value(pred).data(), delta);
        self.push(
            "huber",
            vec![],
            vec![loss],
            &[pred.0],
            Op::Huber { pred: pred.0, target: target.to_vec(), delta },
        )
    }

    /// Propagates `∂loss/∂v` to every tracked value reachable from `loss`.
    ///
    /// Gradients from earlier passes are discarded first. Values that the
    /// pass does not reach keep `grad() == None`.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.value(loss).len() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        for node in &mut self.nodes {
            node.value.clear_grad();
        }
        if !self.tracks(loss.0) {
            return Ok(());
        }

        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![1.0]);

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            if !self.tracks(i) {
                continue;
            }
            self.propagate(i, &g, &mut grads);
            self.nodes[i].value.set_grad(g)?;
        }
        Ok(())
    }

    fn propagate(&self, i: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[i];
        let tracks = |j: usize| self.tracks(j);
        let mut accum = |j: usize, f: &mut dyn FnMut(&mut [f64])| {
            if !tracks(j) {
                return;
            }
            let len = self.nodes[j].value.len();
            let slot = grads[j].get_or_insert_with(|| vec![0.0; len]);
            f(slot);
        };
        let data = |j: usize| self.nodes[j].value.data();

        match &node.op {
            Op::Leaf => {}
            &Op::Matmul { a, b, m, k, n } => {
                // dA = dC·Bᵀ, dB = Aᵀ·dC
                accum(a, &mut |ga| kernels::matmul_grad_a(g, data(b), ga, m, k, n));
                accum(b, &mut |gb| kernels::matmul_grad_b(data(a), g, gb, m, k, n));
            }
            &Op::Add { a, b } => {
                accum(a, &mut |ga| add_into(ga, g));
                accum(b, &mut |gb| add_into(gb, g));
            }
            &Op::AddBias { x, bias, cols } => {
                accum(x, &mut |gx| add_into(gx, g));
                accum(bias, &mut |gb| {
                    for (slot, row) in gb.iter_mut().zip(g.chunks(cols.max(1))) {
                        *slot += row.iter().sum::<f64>();
                    }
                });
            }
            &Op::Conv { x, kernel, dims } => {
                accum(x, &mut |gx| kernels::conv_grad_input(g, data(kernel), gx, dims));
                accum(kernel, &mut |gk| kernels::conv_grad_kernel(g, data(x), gk, dims));
            }
            &Op::Relu { x } => {
                let xv = data(x);
                accum(x, &mut |gx| {
                    for ((s, &gi), &xi) in gx.iter_mut().zip(g).zip(xv) {
                        if xi > 0.0 {
                            *s += gi;
                        }
                    }
                });
            }
            &Op::Tanh { x } => {
                let y = node.value.data();
                accum(x, &mut |gx| {
                    for ((s, &gi), &yi) in gx.iter_mut().zip(g).zip(y) {
                        *s += gi * (1.0 - yi * yi);
                    }
                });
            }
            &Op::Softmax { x } => {
                let y = node.value.data();
                let dot: f64 = g.iter().zip(y).map(|(gi, yi)| gi * yi).sum();
                accum(x, &mut |gx| {
                    for ((s, &gi), &yi) in gx.iter_mut().zip(g).zip(y) {
                        *s += yi * (gi - dot);
                    }
                });
            }
            &Op::Reshape { x } => accum(x, &mut |gx| add_into(gx, g)),
            &Op::Mul { a, b } => {
                accum(a, &mut |ga| {
                    for ((s, &gi), &bi) in ga.iter_mut().zip(g).zip(data(b)) {
                        *s += gi * bi;
                    }
                });
                accum(b, &mut |gb| {
                    for ((s, &gi), &ai) in gb.iter_mut().zip(g).zip(data(a)) {
                        *s += gi * ai;
                    }
                });
            }
            &Op::Sum { x } => accum(x, &mut |gx| gx.iter_mut().for_each(|s| *s += g[0])),
            Op::Stack { parts } => {
                for (k, &p) in parts.iter().enumerate() {
                    accum(p, &mut |gp| gp[0] += g[k]);
                }
            }
            Op::Huber { pred, target, delta } => {
                let pv = data(*pred);
                let scale = g[0] / target.len() as f64;
                accum(*pred, &mut |gp| {
                    for ((s, &p), &y) in gp.iter_mut().zip(pv).zip(target.iter()) {
                        *s += scale * kernels::huber_grad_pred(y, p, *delta);
                    }
                });
            }
        }
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}
