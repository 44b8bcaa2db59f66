use std::cell::RefCell;
use std::fmt;
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type NodeId = usize;

/// Detached view of a tensor: its values, shape and (for tracked tensors)
/// the tape node that produced it.
#[derive(Debug)]
pub(crate) struct Value<T> {
    pub data: Rc<[T]>,
    pub shape: Vec<usize>,
    pub id: Option<NodeId>,
}

impl<T> Clone for Value<T> {
    fn clone(&self) -> Self {
        Value {
            data: Rc::clone(&self.data),
            shape: self.shape.clone(),
            id: self.id,
        }
    }
}

impl<T> Value<T> {
    pub fn untracked(&self) -> Self {
        Value {
            data: Rc::clone(&self.data),
            shape: self.shape.clone(),
            id: None,
        }
    }
}

/// Recorded primitive. Shapes needed by backward rules are recovered from
/// the saved parent values.
#[derive(Clone, Debug)]
pub(crate) enum Op<T> {
    Leaf,
    MatMul { ta: bool, tb: bool },
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Abs,
    Relu,
    Exp,
    Log,
    Square,
    Sqrt,
    Scale(T),
    AddScalar(T),
    Sum,
    Mean,
    SumAxis,
    Broadcast,
    AddRow,
    Reshape,
    Slice { axis: usize, start: usize, end: usize },
    Concat { axis: usize },
    Transpose,
}

impl<T> Op<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::MatMul { .. } => "matmul",
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Div => "div",
            Op::Neg => "negate",
            Op::Abs => "abs",
            Op::Relu => "relu",
            Op::Exp => "exp",
            Op::Log => "log",
            Op::Square => "square",
            Op::Sqrt => "sqrt",
            Op::Scale(_) => "scale",
            Op::AddScalar(_) => "add_scalar",
            Op::Sum => "sum",
            Op::Mean => "mean",
            Op::SumAxis => "sum_axis",
            Op::Broadcast => "broadcast",
            Op::AddRow => "broadcast_add",
            Op::Reshape => "reshape",
            Op::Slice { .. } => "slice",
            Op::Concat { .. } => "concat",
            Op::Transpose => "transpose",
        }
    }
}

pub(crate) struct Node<T> {
    pub op: Op<T>,
    pub parents: Vec<Value<T>>,
    pub out: Value<T>,
}

pub(crate) struct Tape<T> {
    pub nodes: Vec<Node<T>>,
    pub consumed: bool,
}

/// Append-only tape of differentiable operations.
///
/// A graph is cheap to clone (shared handle) and is meant to be rebuilt for
/// every optimization step. It is confined to one thread.
pub struct Graph<T> {
    pub(crate) tape: Rc<RefCell<Tape<T>>>,
}

impl<T> Clone for Graph<T> {
    fn clone(&self) -> Self {
        Graph {
            tape: Rc::clone(&self.tape),
        }
    }
}

impl<T: Scalar> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T> fmt::Debug for Graph<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tape = self.tape.borrow();
        f.debug_struct("Graph")
            .field("nodes", &tape.nodes.len())
            .field("consumed", &tape.consumed)
            .finish()
    }
}

/// Dense row-major array bound to a [`Graph`].
///
/// Tracked tensors (leaves and anything computed from them) carry a node id;
/// constants carry none and never receive gradients.
pub struct Tensor<T> {
    pub(crate) graph: Graph<T>,
    pub(crate) val: Value<T>,
}

impl<T> Clone for Tensor<T> {
    fn clone(&self) -> Self {
        Tensor {
            graph: self.graph.clone(),
            val: self.val.clone(),
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for Tensor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.val.shape)
            .field("node", &self.val.id)
            .field("data", &&self.val.data[..])
            .finish()
    }
}

pub(crate) fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

pub(crate) fn check_finite<T: Scalar>(op: &str, data: &[T]) -> Result<()> {
    if data.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { op: op.to_string() })
    }
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Graph {
            tape: Rc::new(RefCell::new(Tape {
                nodes: Vec::new(),
                consumed: false,
            })),
        }
    }

    /// Number of recorded nodes.
    pub fn len(&self) -> usize {
        self.tape.borrow().nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn same_as(&self, other: &Graph<T>) -> bool {
        Rc::ptr_eq(&self.tape, &other.tape)
    }

    fn validate(data: &[T], shape: &[usize], op: &'static str) -> Result<()> {
        if shape.contains(&0) {
            return Err(Error::Shape {
                op,
                detail: format!("zero-sized dimension in {shape:?}"),
            });
        }
        if data.len() != numel(shape) {
            return Err(Error::Shape {
                op,
                detail: format!("{} values for shape {:?}", data.len(), shape),
            });
        }
        check_finite(op, data)
    }

    /// Differentiable input (parameter or observed value we want gradients for).
    pub fn leaf(&self, data: Vec<T>, shape: &[usize]) -> Result<Tensor<T>> {
        Self::validate(&data, shape, "leaf")?;
        let mut tape = self.tape.borrow_mut();
        if tape.consumed {
            return Err(Error::GraphConsumed);
        }
        let id = tape.nodes.len();
        let out = Value {
            data: data.into(),
            shape: shape.to_vec(),
            id: Some(id),
        };
        tape.nodes.push(Node {
            op: Op::Leaf,
            parents: Vec::new(),
            out: out.clone(),
        });
        Ok(Tensor {
            graph: self.clone(),
            val: out,
        })
    }

    /// Untracked tensor; gradients never flow into it.
    pub fn constant(&self, data: Vec<T>, shape: &[usize]) -> Result<Tensor<T>> {
        Self::validate(&data, shape, "constant")?;
        Ok(self.wrap(Value {
            data: data.into(),
            shape: shape.to_vec(),
            id: None,
        }))
    }

    pub fn scalar(&self, v: T) -> Result<Tensor<T>> {
        self.constant(vec![v], &[])
    }

    pub fn full(&self, shape: &[usize], v: T) -> Result<Tensor<T>> {
        self.constant(vec![v; numel(shape)], shape)
    }

    pub fn zeros(&self, shape: &[usize]) -> Result<Tensor<T>> {
        self.full(shape, T::zero())
    }

    pub(crate) fn wrap(&self, val: Value<T>) -> Tensor<T> {
        Tensor {
            graph: self.clone(),
            val,
        }
    }

    /// Registers the result of a primitive. A node is appended only when at
    /// least one parent is tracked.
    pub(crate) fn record(
        &self,
        op: Op<T>,
        parents: &[&Value<T>],
        data: Vec<T>,
        shape: Vec<usize>,
    ) -> Result<Tensor<T>> {
        debug_assert_eq!(data.len(), numel(&shape));
        check_finite(op.name(), &data)?;
        let tracked = parents.iter().any(|p| p.id.is_some());
        let mut out = Value {
            data: data.into(),
            shape,
            id: None,
        };
        if tracked {
            let mut tape = self.tape.borrow_mut();
            if tape.consumed {
                return Err(Error::GraphConsumed);
            }
            let id = tape.nodes.len();
            out.id = Some(id);
            tape.nodes.push(Node {
                op,
                parents: parents.iter().map(|p| (*p).clone()).collect(),
                out: out.clone(),
            });
        }
        Ok(self.wrap(out))
    }
}

impl<T: Scalar> Tensor<T> {
    pub fn shape(&self) -> &[usize] {
        &self.val.shape
    }

    pub fn data(&self) -> &[T] {
        &self.val.data
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.val.data.to_vec()
    }

    pub fn numel(&self) -> usize {
        self.val.data.len()
    }

    /// Tape node id, absent for constants.
    pub fn node_id(&self) -> Option<NodeId> {
        self.val.id
    }

    pub fn is_tracked(&self) -> bool {
        self.val.id.is_some()
    }

    pub fn graph(&self) -> &Graph<T> {
        &self.graph
    }

    /// Value of a single-element tensor.
    pub fn item(&self) -> Result<T> {
        if self.numel() == 1 {
            Ok(self.val.data[0])
        } else {
            Err(Error::NotScalar(self.val.shape.clone()))
        }
    }

    /// Same values, cut from the tape.
    pub fn detach(&self) -> Tensor<T> {
        self.graph.wrap(self.val.untracked())
    }

    /// Rows and columns of a rank-2 tensor.
    pub fn dims2(&self, op: &'static str) -> Result<(usize, usize)> {
        match self.val.shape[..] {
            [r, c] => Ok((r, c)),
            _ => Err(Error::Shape {
                op,
                detail: format!("expected rank 2, got {:?}", self.val.shape),
            }),
        }
    }

    pub(crate) fn same_graph(&self, other: &Tensor<T>, op: &'static str) -> Result<()> {
        if self.graph.same_as(&other.graph) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "{op}: operands belong to different graphs"
            )))
        }
    }
}
