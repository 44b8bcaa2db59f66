use rand::Rng;

use crate::autodiff::{Graph, Tensor};
use crate::error::{shape_err, Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    None,
}

/// Named parameter array. Names are stable and double as checkpoint keys.
#[derive(Clone, Debug, PartialEq)]
pub struct Param<T> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

/// Fully connected network. Parameters are stored as
/// `[weight_0, bias_0, weight_1, bias_1, ...]` with weights `[fan_in, fan_out]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseNet<T> {
    params: Vec<Param<T>>,
    activations: Vec<Activation>,
}

/// Parameters of a [`DenseNet`] registered on one graph.
pub struct BoundNet<'a, T> {
    net: &'a DenseNet<T>,
    tensors: Vec<Tensor<T>>,
}

impl<T: Scalar> DenseNet<T> {
    /// Kaiming-uniform weights in `±sqrt(6 / fan_in)`, zero biases.
    ///
    /// `sizes` lists layer widths including input and output, so it has one
    /// more entry than `activations`.
    pub fn init<R: Rng + ?Sized>(
        prefix: &str,
        sizes: &[usize],
        activations: &[Activation],
        rng: &mut R,
    ) -> Result<Self> {
        if sizes.len() < 2 || activations.is_empty() {
            return Err(Error::Empty("dense network layer list"));
        }
        if activations.len() != sizes.len() - 1 {
            return Err(Error::InvalidArgument(format!(
                "{} layer sizes need {} activations, got {}",
                sizes.len(),
                sizes.len() - 1,
                activations.len()
            )));
        }
        if sizes.contains(&0) {
            return Err(Error::InvalidArgument("layer sizes must be positive".into()));
        }
        let mut params = Vec::with_capacity(2 * activations.len());
        for (i, pair) in sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = (6.0 / fan_in as f64).sqrt();
            let weight = (0..fan_in * fan_out)
                .map(|_| T::lit(rng.random_range(-bound..=bound)))
                .collect();
            params.push(Param {
                name: format!("{prefix}.layer{i}.weight"),
                shape: vec![fan_in, fan_out],
                data: weight,
            });
            params.push(Param {
                name: format!("{prefix}.layer{i}.bias"),
                shape: vec![fan_out],
                data: vec![T::zero(); fan_out],
            });
        }
        Ok(DenseNet {
            params,
            activations: activations.to_vec(),
        })
    }

    /// ReLU on every hidden layer, identity on the output layer.
    pub fn mlp<R: Rng + ?Sized>(prefix: &str, sizes: &[usize], rng: &mut R) -> Result<Self> {
        let n = sizes.len().saturating_sub(1);
        let mut acts = vec![Activation::Relu; n];
        if let Some(last) = acts.last_mut() {
            *last = Activation::None;
        }
        Self::init(prefix, sizes, &acts, rng)
    }

    /// Rebuilds a network from explicit parameters (e.g. a checkpoint).
    pub fn from_params(params: Vec<Param<T>>, activations: Vec<Activation>) -> Result<Self> {
        if params.len() != 2 * activations.len() || activations.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{} parameters for {} layers",
                params.len(),
                activations.len()
            )));
        }
        let mut prev_out: Option<usize> = None;
        for pair in params.chunks(2) {
            let (w, b) = (&pair[0], &pair[1]);
            let [fan_in, fan_out] = w.shape[..] else {
                return Err(shape_err("dense", format!("weight shape {:?}", w.shape)));
            };
            if b.shape != [fan_out]
                || w.data.len() != fan_in * fan_out
                || b.data.len() != fan_out
                || prev_out.is_some_and(|p| p != fan_in)
            {
                return Err(shape_err(
                    "dense",
                    format!("inconsistent layer {} / {}", w.name, b.name),
                ));
            }
            prev_out = Some(fan_out);
        }
        Ok(DenseNet { params, activations })
    }

    pub fn params(&self) -> &[Param<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param<T>] {
        &mut self.params
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn input_dim(&self) -> usize {
        self.params[0].shape[0]
    }

    pub fn output_dim(&self) -> usize {
        self.params[self.params.len() - 1].shape[0]
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.input_dim()];
        sizes.extend(self.params.iter().step_by(2).map(|w| w.shape[1]));
        sizes
    }

    pub fn num_parameters(&self) -> usize {
        self.params.iter().map(|p| p.data.len()).sum()
    }

    /// Registers parameters as differentiable leaves.
    pub fn bind<'a>(&'a self, graph: &Graph<T>) -> Result<BoundNet<'a, T>> {
        let tensors = self
            .params
            .iter()
            .map(|p| graph.leaf(p.data.clone(), &p.shape))
            .collect::<Result<_>>()?;
        Ok(BoundNet { net: self, tensors })
    }

    /// Registers parameters as constants: gradients still flow to the input
    /// but not into the weights.
    pub fn bind_frozen<'a>(&'a self, graph: &Graph<T>) -> Result<BoundNet<'a, T>> {
        let tensors = self
            .params
            .iter()
            .map(|p| graph.constant(p.data.clone(), &p.shape))
            .collect::<Result<_>>()?;
        Ok(BoundNet { net: self, tensors })
    }

    /// Clamps every parameter into `[-c, c]`.
    pub fn clip(&mut self, c: T) {
        for p in &mut self.params {
            for v in &mut p.data {
                *v = v.max(-c).min(c);
            }
        }
    }
}

impl<T: Scalar> BoundNet<'_, T> {
    /// `x: [batch, in] -> [batch, out]`.
    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let (_, cols) = x.dims2("dense forward")?;
        if cols != self.net.input_dim() {
            return Err(shape_err(
                "dense forward",
                format!("input width {cols}, network expects {}", self.net.input_dim()),
            ));
        }
        let mut h = x.clone();
        for (pair, act) in self.tensors.chunks(2).zip(&self.net.activations) {
            h = h.matmul(&pair[0])?.broadcast_add(&pair[1])?;
            if *act == Activation::Relu {
                h = h.relu()?;
            }
        }
        Ok(h)
    }

    /// Bound parameter tensors, aligned with [`DenseNet::params`].
    pub fn tensors(&self) -> &[Tensor<T>] {
        &self.tensors
    }

    pub fn tensor_refs(&self) -> Vec<&Tensor<T>> {
        self.tensors.iter().collect()
    }
}
