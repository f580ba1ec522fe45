//! Differentiable computation core: tensors, the recording tape, and the
//! operations the forecaster is built from.
//!
//! The free functions here evaluate one operation on plain tensors without
//! recording anything. Use a [`Tape`] when gradients are needed.

mod kernels;
mod tape;
mod tensor;

pub use tape::{Tape, Var};
pub use tensor::Tensor;

use crate::error::Result;

fn eval(f: impl FnOnce(&mut Tape) -> Result<Var>) -> Result<Tensor> {
    let mut tape = Tape::new();
    let out = f(&mut tape)?;
    let mut value = tape.value(out).clone();
    value.set_requires_grad(false);
    Ok(value)
}

pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    eval(|t| {
        let (a, b) = (t.constant(a.clone()), t.constant(b.clone()));
        t.matmul(a, b)
    })
}

pub fn causal_dilated_conv1d(x: &Tensor, kernel: &Tensor, dilation: usize) -> Result<Tensor> {
    eval(|t| {
        let (x, k) = (t.constant(x.clone()), t.constant(kernel.clone()));
        t.causal_conv1d(x, k, dilation)
    })
}

pub fn relu(x: &Tensor) -> Result<Tensor> {
    eval(|t| {
        let x = t.constant(x.clone());
        t.relu(x)
    })
}

pub fn tanh_op(x: &Tensor) -> Result<Tensor> {
    eval(|t| {
        let x = t.constant(x.clone());
        t.tanh(x)
    })
}

pub fn softmax(x: &Tensor) -> Result<Tensor> {
    eval(|t| {
        let x = t.constant(x.clone());
        t.softmax(x)
    })
}
