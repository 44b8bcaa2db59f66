//! Forward definitions of the primitive set.

use crate::error::{shape_err, Error, Result};
use crate::scalar::Scalar;

use super::graph::{numel, Op, Tensor};

impl<T: Scalar> Tensor<T> {
    fn unary(&self, op: Op<T>, f: impl Fn(T) -> T) -> Result<Tensor<T>> {
        let data = self.val.data.iter().map(|&x| f(x)).collect();
        self.graph.record(op, &[&self.val], data, self.val.shape.clone())
    }

    fn binary(&self, rhs: &Tensor<T>, op: Op<T>, f: impl Fn(T, T) -> T) -> Result<Tensor<T>> {
        let name = op.name();
        self.same_graph(rhs, name)?;
        if self.val.shape != rhs.val.shape {
            return Err(shape_err(name, format!("{:?} vs {:?}", self.val.shape, rhs.val.shape)));
        }
        let data = self
            .val
            .data
            .iter()
            .zip(rhs.val.data.iter())
            .map(|(&a, &b)| f(a, b))
            .collect();
        self.graph
            .record(op, &[&self.val, &rhs.val], data, self.val.shape.clone())
    }

    pub fn add(&self, rhs: &Tensor<T>) -> Result<Tensor<T>> {
        self.binary(rhs, Op::Add, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Tensor<T>) -> Result<Tensor<T>> {
        self.binary(rhs, Op::Sub, |a, b| a - b)
    }

    /// Elementwise product.
    pub fn mul(&self, rhs: &Tensor<T>) -> Result<Tensor<T>> {
        self.binary(rhs, Op::Mul, |a, b| a * b)
    }

    pub fn div(&self, rhs: &Tensor<T>) -> Result<Tensor<T>> {
        self.binary(rhs, Op::Div, |a, b| a / b)
    }

    pub fn neg(&self) -> Result<Tensor<T>> {
        self.unary(Op::Neg, |x| -x)
    }

    pub fn abs(&self) -> Result<Tensor<T>> {
        self.unary(Op::Abs, |x| x.abs())
    }

    pub fn relu(&self) -> Result<Tensor<T>> {
        self.unary(Op::Relu, |x| if x > T::zero() { x } else { T::zero() })
    }

    pub fn exp(&self) -> Result<Tensor<T>> {
        self.unary(Op::Exp, |x| x.exp())
    }

    pub fn log(&self) -> Result<Tensor<T>> {
        if let Some(bad) = self.val.data.iter().find(|&&x| x < T::zero()) {
            return Err(Error::Domain {
                op: "log",
                detail: format!("negative input {bad}"),
            });
        }
        self.unary(Op::Log, |x| x.ln())
    }

    pub fn square(&self) -> Result<Tensor<T>> {
        self.unary(Op::Square, |x| x * x)
    }

    pub fn sqrt(&self) -> Result<Tensor<T>> {
        if let Some(bad) = self.val.data.iter().find(|&&x| x < T::zero()) {
            return Err(Error::Domain {
                op: "sqrt",
                detail: format!("negative input {bad}"),
            });
        }
        self.unary(Op::Sqrt, |x| x.sqrt())
    }

    /// Multiplication by a fixed scalar.
    pub fn scale(&self, c: T) -> Result<Tensor<T>> {
        self.unary(Op::Scale(c), |x| x * c)
    }

    pub fn add_scalar(&self, c: T) -> Result<Tensor<T>> {
        self.unary(Op::AddScalar(c), |x| x + c)
    }

    /// Sum of all entries, shape `[]`.
    pub fn sum(&self) -> Result<Tensor<T>> {
        let s = self.val.data.iter().copied().sum();
        self.graph.record(Op::Sum, &[&self.val], vec![s], vec![])
    }

    /// Mean of all entries, shape `[]`.
    pub fn mean(&self) -> Result<Tensor<T>> {
        let n = T::from_usize(self.numel()).unwrap();
        let s: T = self.val.data.iter().copied().sum();
        self.graph.record(Op::Mean, &[&self.val], vec![s / n], vec![])
    }

    /// Sum along `axis` of a matrix, keeping the reduced axis with size 1.
    pub fn sum_axis(&self, axis: usize) -> Result<Tensor<T>> {
        let (r, c) = self.dims2("sum_axis")?;
        let x = &self.val.data;
        let (data, shape) = match axis {
            0 => {
                let mut out = vec![T::zero(); c];
                for row in x.chunks_exact(c) {
                    for (o, &v) in out.iter_mut().zip(row) {
                        *o += v;
                    }
                }
                (out, vec![1, c])
            }
            1 => (
                x.chunks_exact(c).map(|row| row.iter().copied().sum()).collect(),
                vec![r, 1],
            ),
            _ => return Err(shape_err("sum_axis", format!("axis {axis} on rank 2"))),
        };
        self.graph.record(Op::SumAxis, &[&self.val], data, shape)
    }

    /// Row sums as a column, `[B, d] -> [B, 1]`.
    pub fn sum_rows(&self) -> Result<Tensor<T>> {
        self.sum_axis(1)
    }

    /// Expands a single value, a `[1, n]` row or an `[m, 1]` column.
    pub fn broadcast_to(&self, shape: &[usize]) -> Result<Tensor<T>> {
        let src = &self.val.shape;
        let n = numel(shape);
        let x = &self.val.data;
        let data: Vec<T> = if x.len() == 1 {
            vec![x[0]; n]
        } else {
            match (src.as_slice(), shape) {
                ([1, c], [_, c2]) if c == c2 => x.iter().copied().cycle().take(n).collect(),
                ([r, 1], [r2, c]) if r == r2 => x.iter().flat_map(|&v| std::iter::repeat_n(v, *c)).collect(),
                _ => return Err(shape_err("broadcast", format!("cannot broadcast {src:?} to {shape:?}"))),
            }
        };
        if shape.contains(&0) {
            return Err(shape_err("broadcast", "zero-sized target"));
        }
        self.graph.record(Op::Broadcast, &[&self.val], data, shape.to_vec())
    }

    /// Adds a bias row (`[n]` or `[1, n]`) to every row of an `[m, n]` matrix.
    pub fn broadcast_add(&self, bias: &Tensor<T>) -> Result<Tensor<T>> {
        self.same_graph(bias, "broadcast_add")?;
        let (_, c) = self.dims2("broadcast_add")?;
        let ok = matches!(bias.val.shape[..], [n] if n == c) || matches!(bias.val.shape[..], [1, n] if n == c);
        if !ok {
            return Err(shape_err(
                "broadcast_add",
                format!("{:?} + {:?}", self.val.shape, bias.val.shape),
            ));
        }
        let b = &bias.val.data;
        let data = self
            .val
            .data
            .chunks_exact(c)
            .flat_map(|row| row.iter().zip(b.iter()).map(|(&x, &y)| x + y))
            .collect();
        self.graph
            .record(Op::AddRow, &[&self.val, &bias.val], data, self.val.shape.clone())
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor<T>> {
        if numel(shape) != self.numel() || shape.contains(&0) {
            return Err(shape_err("reshape", format!("{:?} -> {:?}", self.val.shape, shape)));
        }
        self.graph
            .record(Op::Reshape, &[&self.val], self.val.data.to_vec(), shape.to_vec())
    }

    /// Half-open range `[start, end)` along `axis` of a matrix.
    pub fn slice(&self, axis: usize, start: usize, end: usize) -> Result<Tensor<T>> {
        let (r, c) = self.dims2("slice")?;
        let len = if axis == 0 { r } else { c };
        if axis > 1 || start >= end || end > len {
            return Err(shape_err(
                "slice",
                format!("axis {axis} range {start}..{end} of {:?}", self.val.shape),
            ));
        }
        let x = &self.val.data;
        let (data, shape) = if axis == 0 {
            (x[start * c..end * c].to_vec(), vec![end - start, c])
        } else {
            (
                x.chunks_exact(c)
                    .flat_map(|row| row[start..end].iter().copied())
                    .collect(),
                vec![r, end - start],
            )
        };
        self.graph
            .record(Op::Slice { axis, start, end }, &[&self.val], data, shape)
    }

    /// Column range of a matrix.
    pub fn slice_cols(&self, start: usize, end: usize) -> Result<Tensor<T>> {
        self.slice(1, start, end)
    }

    /// Joins matrices along `axis`.
    pub fn concat(parts: &[&Tensor<T>], axis: usize) -> Result<Tensor<T>> {
        let first = parts.first().ok_or(Error::Empty("concat"))?;
        let mut dims = Vec::with_capacity(parts.len());
        for p in parts {
            p.same_graph(first, "concat")?;
            dims.push(p.dims2("concat")?);
        }
        let (r0, c0) = dims[0];
        let data: Vec<T>;
        let shape;
        match axis {
            0 => {
                if dims.iter().any(|&(_, c)| c != c0) {
                    return Err(shape_err("concat", format!("column counts {dims:?}")));
                }
                data = parts.iter().flat_map(|p| p.val.data.iter().copied()).collect();
                shape = vec![dims.iter().map(|d| d.0).sum(), c0];
            }
            1 => {
                if dims.iter().any(|&(r, _)| r != r0) {
                    return Err(shape_err("concat", format!("row counts {dims:?}")));
                }
                let total: usize = dims.iter().map(|d| d.1).sum();
                let mut out = Vec::with_capacity(r0 * total);
                for i in 0..r0 {
                    for (p, &(_, c)) in parts.iter().zip(&dims) {
                        out.extend_from_slice(&p.val.data[i * c..(i + 1) * c]);
                    }
                }
                data = out;
                shape = vec![r0, total];
            }
            _ => return Err(shape_err("concat", format!("axis {axis} on rank 2"))),
        }
        let vals: Vec<_> = parts.iter().map(|p| &p.val).collect();
        first.graph.record(Op::Concat { axis }, &vals, data, shape)
    }

    pub fn transpose(&self) -> Result<Tensor<T>> {
        let (r, c) = self.dims2("transpose")?;
        let x = &self.val.data;
        let mut out = Vec::with_capacity(r * c);
        for j in 0..c {
            for i in 0..r {
                out.push(x[i * c + j]);
            }
        }
        self.graph.record(Op::Transpose, &[&self.val], out, vec![c, r])
    }

    pub fn matmul(&self, rhs: &Tensor<T>) -> Result<Tensor<T>> {
        self.matmul_t(rhs, false, false)
    }

    /// `op(self) * op(rhs)` where `op` optionally transposes.
    pub fn matmul_t(&self, rhs: &Tensor<T>, ta: bool, tb: bool) -> Result<Tensor<T>> {
        self.same_graph(rhs, "matmul")?;
        let (ar, ac) = self.dims2("matmul")?;
        let (br, bc) = rhs.dims2("matmul")?;
        let (m, k, rsa, csa) = if ta { (ac, ar, 1, ac) } else { (ar, ac, ac, 1) };
        let (k2, n, rsb, csb) = if tb { (bc, br, 1, bc) } else { (br, bc, bc, 1) };
        if k != k2 {
            return Err(shape_err(
                "matmul",
                format!("{:?} x {:?} (ta={ta}, tb={tb})", self.val.shape, rhs.val.shape),
            ));
        }
        let mut out = vec![T::zero(); m * n];
        // SAFETY: strides describe the row-major buffers checked above.
        unsafe {
            T::gemm(
                m,
                k,
                n,
                T::one(),
                self.val.data.as_ptr(),
                rsa as isize,
                csa as isize,
                rhs.val.data.as_ptr(),
                rsb as isize,
                csb as isize,
                T::zero(),
                out.as_mut_ptr(),
                n as isize,
                1,
            );
        }
        self.graph
            .record(Op::MatMul { ta, tb }, &[&self.val, &rhs.val], out, vec![m, n])
    }
}
