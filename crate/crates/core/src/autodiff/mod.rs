//! Tape-based reverse-mode automatic differentiation over dense tensors.
//!
//! Operations are recorded on a [`Graph`] as they execute. Gradients come
//! from [`Tensor::backward`]; [`Tensor::backward_as_graph`] records the
//! backward pass itself so penalties on gradient norms can be differentiated
//! again.
//!
//! ```
//! use wtc::autodiff::Graph;
//!
//! let g = Graph::<f64>::new();
//! let x = g.leaf(vec![2.0], &[1]).unwrap();
//! let y = x.mul(&x).unwrap().mul(&x).unwrap().sum().unwrap(); // x^3
//! let dy = y.backward_as_graph(&x).unwrap();                  // 3x^2 = 12
//! assert_eq!(dy.data(), &[12.0]);
//! let d2y = dy.sum().unwrap().backward(&[&x]).unwrap();       // 6x = 12
//! assert_eq!(d2y[0].data(), &[12.0]);
//! ```

mod backward;
mod check;
mod graph;
mod ops;

pub use check::{finite_difference_gradient, relative_error, vector_relative_error};
pub use graph::{Graph, NodeId, Tensor};

use crate::error::{shape_err, Result};
use crate::scalar::Scalar;

/// Primitive selector for [`apply`].
#[derive(Clone, Debug, PartialEq)]
pub enum OpKind {
    MatMul,
    Add,
    Sub,
    Mul,
    Relu,
    Exp,
    Log,
    Square,
    Sqrt,
    Sum,
    Mean,
    Reshape(Vec<usize>),
    Slice { axis: usize, start: usize, end: usize },
    Concat { axis: usize },
    BroadcastAdd,
    Negate,
    Abs,
}

/// Applies a primitive by kind. Equivalent to calling the matching
/// [`Tensor`] method.
pub fn apply<T: Scalar>(kind: &OpKind, inputs: &[&Tensor<T>]) -> Result<Tensor<T>> {
    let arity = match kind {
        OpKind::MatMul | OpKind::Add | OpKind::Sub | OpKind::Mul | OpKind::BroadcastAdd => Some(2),
        OpKind::Concat { .. } => None,
        _ => Some(1),
    };
    if let Some(n) = arity {
        if inputs.len() != n {
            return Err(shape_err(
                "apply",
                format!("{kind:?} takes {n} inputs, got {}", inputs.len()),
            ));
        }
    }
    let a = inputs.first().copied();
    let a = || a.ok_or_else(|| shape_err("apply", "no inputs"));
    match kind {
        OpKind::MatMul => inputs[0].matmul(inputs[1]),
        OpKind::Add => inputs[0].add(inputs[1]),
        OpKind::Sub => inputs[0].sub(inputs[1]),
        OpKind::Mul => inputs[0].mul(inputs[1]),
        OpKind::BroadcastAdd => inputs[0].broadcast_add(inputs[1]),
        OpKind::Relu => a()?.relu(),
        OpKind::Exp => a()?.exp(),
        OpKind::Log => a()?.log(),
        OpKind::Square => a()?.square(),
        OpKind::Sqrt => a()?.sqrt(),
        OpKind::Sum => a()?.sum(),
        OpKind::Mean => a()?.mean(),
        OpKind::Reshape(shape) => a()?.reshape(shape),
        OpKind::Slice { axis, start, end } => a()?.slice(*axis, *start, *end),
        OpKind::Concat { axis } => Tensor::concat(inputs, *axis),
        OpKind::Negate => a()?.neg(),
        OpKind::Abs => a()?.abs(),
    }
}
