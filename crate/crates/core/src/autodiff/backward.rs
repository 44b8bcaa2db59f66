//! Reverse sweep over the tape.
//!
//! Every vector-Jacobian product is written with the same tensor primitives
//! used in the forward pass. In a plain backward pass the operands are
//! detached, so nothing is recorded; in a differentiable pass they stay
//! tracked and the gradient itself becomes part of the graph.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::graph::{numel, Graph, NodeId, Op, Tensor, Value};

fn vjp<T: Scalar>(
    op: &Op<T>,
    parents: &[Tensor<T>],
    out: &Tensor<T>,
    g: &Tensor<T>,
    wanted: &[bool],
) -> Result<Vec<Option<Tensor<T>>>> {
    let graph = g.graph();
    let p = |i: usize| &parents[i];
    let need = |i: usize| wanted[i];
    let mut res: Vec<Option<Tensor<T>>> = vec![None; parents.len()];
    match *op {
        Op::Leaf => {}
        Op::MatMul { ta, tb } => {
            if need(0) {
                res[0] = Some(if ta {
                    p(1).matmul_t(g, tb, true)?
                } else {
                    g.matmul_t(p(1), false, !tb)?
                });
            }
            if need(1) {
                res[1] = Some(if tb {
                    g.matmul_t(p(0), true, ta)?
                } else {
                    p(0).matmul_t(g, !ta, false)?
                });
            }
        }
        Op::Add => {
            res[0] = need(0).then(|| g.clone());
            res[1] = need(1).then(|| g.clone());
        }
        Op::Sub => {
            res[0] = need(0).then(|| g.clone());
            if need(1) {
                res[1] = Some(g.neg()?);
            }
        }
        Op::Mul => {
            if need(0) {
                res[0] = Some(g.mul(p(1))?);
            }
            if need(1) {
                res[1] = Some(g.mul(p(0))?);
            }
        }
        Op::Div => {
            if need(0) {
                res[0] = Some(g.div(p(1))?);
            }
            if need(1) {
                res[1] = Some(g.mul(out)?.div(p(1))?.neg()?);
            }
        }
        Op::Neg => res[0] = Some(g.neg()?),
        Op::Abs => {
            let sign = p(0)
                .data()
                .iter()
                .map(|&x| {
                    if x > T::zero() {
                        T::one()
                    } else if x < T::zero() {
                        -T::one()
                    } else {
                        T::zero()
                    }
                })
                .collect();
            let sign = graph.constant(sign, p(0).shape())?;
            res[0] = Some(g.mul(&sign)?);
        }
        Op::Relu => {
            // Subgradient 0 at the kink.
            let mask = p(0)
                .data()
                .iter()
                .map(|&x| if x > T::zero() { T::one() } else { T::zero() })
                .collect();
            let mask = graph.constant(mask, p(0).shape())?;
            res[0] = Some(g.mul(&mask)?);
        }
        Op::Exp => res[0] = Some(g.mul(out)?),
        Op::Log => res[0] = Some(g.div(p(0))?),
        Op::Square => res[0] = Some(g.mul(p(0))?.scale(T::lit(2.0))?),
        Op::Sqrt => res[0] = Some(g.div(&out.scale(T::lit(2.0))?)?),
        Op::Scale(c) => res[0] = Some(g.scale(c)?),
        Op::AddScalar(_) => res[0] = Some(g.clone()),
        Op::Sum => res[0] = Some(g.broadcast_to(p(0).shape())?),
        Op::Mean => {
            let n = T::from_usize(p(0).numel()).unwrap();
            res[0] = Some(g.scale(T::one() / n)?.broadcast_to(p(0).shape())?);
        }
        Op::SumAxis => res[0] = Some(g.broadcast_to(p(0).shape())?),
        Op::Broadcast => {
            let src = p(0).shape().to_vec();
            let reduced = if numel(&src) == 1 {
                g.sum()?
            } else if src[0] == 1 {
                g.sum_axis(0)?
            } else {
                g.sum_axis(1)?
            };
            res[0] = Some(reduced.reshape(&src)?);
        }
        Op::AddRow => {
            res[0] = need(0).then(|| g.clone());
            if need(1) {
                res[1] = Some(g.sum_axis(0)?.reshape(p(1).shape())?);
            }
        }
        Op::Reshape => res[0] = Some(g.reshape(p(0).shape())?),
        Op::Slice { axis, start, end } => {
            let (r, c) = p(0).dims2("slice")?;
            let len = if axis == 0 { r } else { c };
            let pad = |n: usize| -> Result<Tensor<T>> {
                if axis == 0 {
                    graph.zeros(&[n, c])
                } else {
                    graph.zeros(&[r, n])
                }
            };
            let mut pieces = Vec::with_capacity(3);
            if start > 0 {
                pieces.push(pad(start)?);
            }
            pieces.push(g.clone());
            if end < len {
                pieces.push(pad(len - end)?);
            }
            let refs: Vec<&Tensor<T>> = pieces.iter().collect();
            res[0] = Some(Tensor::concat(&refs, axis)?);
        }
        Op::Concat { axis } => {
            let mut offset = 0;
            for (i, part) in parents.iter().enumerate() {
                let (r, c) = part.dims2("concat")?;
                let size = if axis == 0 { r } else { c };
                if need(i) {
                    res[i] = Some(g.slice(axis, offset, offset + size)?);
                }
                offset += size;
            }
        }
        Op::Transpose => res[0] = Some(g.transpose()?),
    }
    Ok(res)
}

impl<T: Scalar> Graph<T> {
    /// Reverse sweep from `output`, visiting node ids in `[lowest, output]`.
    /// Returns accumulated gradients indexed by node id.
    fn sweep(&self, output: &Tensor<T>, lowest: NodeId, create_graph: bool) -> Result<Vec<Option<Tensor<T>>>> {
        if self.tape.borrow().consumed {
            return Err(Error::GraphConsumed);
        }
        if output.numel() != 1 {
            return Err(Error::NotScalar(output.shape().to_vec()));
        }
        let Some(out_id) = output.val.id else {
            return Ok(Vec::new());
        };
        let mut grads: Vec<Option<Tensor<T>>> = vec![None; out_id + 1];
        grads[out_id] = Some(self.full(output.shape(), T::one())?);

        let view = |v: &Value<T>| -> Tensor<T> {
            if create_graph {
                self.wrap(v.clone())
            } else {
                self.wrap(v.untracked())
            }
        };

        for id in (lowest..=out_id).rev() {
            let Some(g) = grads[id].take() else {
                continue;
            };
            let (op, parents, out) = {
                let tape = self.tape.borrow();
                let node = &tape.nodes[id];
                (node.op.clone(), node.parents.clone(), node.out.clone())
            };
            if !matches!(op, Op::Leaf) {
                let wanted: Vec<bool> = parents.iter().map(|p| p.id.is_some_and(|pid| pid >= lowest)).collect();
                if wanted.iter().any(|&w| w) {
                    let parent_views: Vec<Tensor<T>> = parents.iter().map(view).collect();
                    let contribs = vjp(&op, &parent_views, &view(&out), &g, &wanted)?;
                    for ((p, c), w) in parents.iter().zip(contribs).zip(&wanted) {
                        let (Some(pid), Some(c), true) = (p.id, c, *w) else {
                            continue;
                        };
                        grads[pid] = Some(match grads[pid].take() {
                            None => c,
                            Some(acc) => acc.add(&c)?,
                        });
                    }
                }
            }
            grads[id] = Some(g);
        }
        Ok(grads)
    }

    fn gather(&self, grads: &[Option<Tensor<T>>], wrt: &[&Tensor<T>]) -> Result<Vec<Tensor<T>>> {
        wrt.iter()
            .map(|w| match w.val.id.and_then(|id| grads.get(id).cloned().flatten()) {
                Some(g) => Ok(g),
                None => self.zeros(w.shape()),
            })
            .collect()
    }

    fn lowest_id(wrt: &[&Tensor<T>]) -> NodeId {
        wrt.iter().filter_map(|w| w.val.id).min().unwrap_or(0)
    }

    fn consume(&self) {
        let mut tape = self.tape.borrow_mut();
        tape.consumed = true;
        for node in tape.nodes.iter_mut() {
            node.parents = Vec::new();
        }
    }
}

impl<T: Scalar> Tensor<T> {
    /// Gradients of this scalar with respect to each tensor in `wrt`
    /// (aligned by position). Unreachable or constant inputs get zeros.
    ///
    /// The tape is released afterwards; a second backward on the same graph
    /// fails with [`Error::GraphConsumed`].
    pub fn backward(&self, wrt: &[&Tensor<T>]) -> Result<Vec<Tensor<T>>> {
        let graph = self.graph.clone();
        let grads = graph.sweep(self, Graph::lowest_id(wrt), false)?;
        let out = graph.gather(&grads, wrt)?;
        graph.consume();
        Ok(out)
    }

    /// Like [`Tensor::backward`] but keeps the tape alive.
    pub fn backward_retain(&self, wrt: &[&Tensor<T>]) -> Result<Vec<Tensor<T>>> {
        let grads = self.graph.sweep(self, Graph::lowest_id(wrt), false)?;
        self.graph.gather(&grads, wrt)
    }

    /// Gradient with respect to `wrt` expressed as tracked graph nodes, so it
    /// can itself be differentiated.
    pub fn backward_as_graph(&self, wrt: &Tensor<T>) -> Result<Tensor<T>> {
        let grads = self.graph.sweep(self, Graph::lowest_id(&[wrt]), true)?;
        Ok(self.graph.gather(&grads, &[wrt])?.remove(0))
    }
}
