//! Critic-based Wasserstein-1 estimation of the total correlation and of the
//! prior-matching gap.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::autodiff::{Graph, Tensor};
use crate::error::{shape_err, Error, Result};
use crate::models::HIDDEN;
use crate::nn::{AdamState, BoundNet, DenseNet};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CriticRole {
    /// `f`: joint vs. product of marginals.
    Wtc,
    /// `g`: factored posterior vs. prior.
    Prior,
}

impl CriticRole {
    pub fn prefix(self) -> &'static str {
        match self {
            CriticRole::Wtc => "critic_f",
            CriticRole::Prior => "critic_g",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Critic<T> {
    pub role: CriticRole,
    pub net: DenseNet<T>,
}

impl<T: Scalar> Critic<T> {
    /// `d -> 256 -> 256 -> 256 -> 1` with ReLU hidden layers.
    pub fn new<R: Rng + ?Sized>(role: CriticRole, latent_dim: usize, rng: &mut R) -> Result<Self> {
        let net = DenseNet::mlp(role.prefix(), &[latent_dim, HIDDEN, HIDDEN, HIDDEN, 1], rng)?;
        Ok(Critic { role, net })
    }

    pub fn from_net(role: CriticRole, net: DenseNet<T>) -> Result<Self> {
        if net.output_dim() != 1 {
            return Err(shape_err("critic", format!("output width {}", net.output_dim())));
        }
        Ok(Critic { role, net })
    }

    pub fn input_dim(&self) -> usize {
        self.net.input_dim()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LipschitzMode {
    GradientPenalty,
    WeightClip,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WtcConfig<T> {
    /// Gradient-penalty coefficient.
    pub lambda: T,
    pub mode: LipschitzMode,
    /// Weight bound in clip mode.
    pub clip: T,
    /// Critic updates per autoencoder update.
    pub critic_steps: usize,
}

impl<T: Scalar> Default for WtcConfig<T> {
    fn default() -> Self {
        WtcConfig {
            lambda: T::lit(10.0),
            mode: LipschitzMode::GradientPenalty,
            clip: T::lit(0.01),
            critic_steps: 1,
        }
    }
}

impl<T: Scalar> WtcConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= T::zero()) || !self.lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("penalty coefficient {}", self.lambda)));
        }
        if !(self.clip > T::zero()) || !self.clip.is_finite() {
            return Err(Error::InvalidArgument(format!("clip bound {}", self.clip)));
        }
        if self.critic_steps == 0 {
            return Err(Error::InvalidArgument("critic steps must be positive".into()));
        }
        Ok(())
    }
}

/// One independent row permutation per latent column:
/// `out[i][j] = z[perms[j][i]][j]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DimPermutation {
    pub rows: usize,
    pub perms: Vec<Vec<usize>>,
}

impl DimPermutation {
    /// Uniform random permutations (Fisher-Yates), column by column.
    pub fn draw<R: Rng + ?Sized>(rows: usize, dim: usize, rng: &mut R) -> Self {
        let perms = (0..dim)
            .map(|_| {
                let mut p: Vec<usize> = (0..rows).collect();
                p.shuffle(rng);
                p
            })
            .collect();
        DimPermutation { rows, perms }
    }

    pub fn dim(&self) -> usize {
        self.perms.len()
    }

    pub fn apply<T: Copy>(&self, z: &[T]) -> Result<Vec<T>> {
        let d = self.dim();
        if z.len() != self.rows * d {
            return Err(shape_err(
                "permute_dims",
                format!("{} values for {} x {d}", z.len(), self.rows),
            ));
        }
        let mut out = z.to_vec();
        for (j, p) in self.perms.iter().enumerate() {
            for (i, &src) in p.iter().enumerate() {
                out[i * d + j] = z[src * d + j];
            }
        }
        Ok(out)
    }

    /// Differentiable version: each column is multiplied by a constant
    /// permutation matrix, so gradients route back to the source rows.
    pub fn apply_tensor<T: Scalar>(&self, z: &Tensor<T>) -> Result<Tensor<T>> {
        let (b, d) = z.dims2("permute_dims")?;
        if b != self.rows || d != self.dim() {
            return Err(shape_err(
                "permute_dims",
                format!("tensor {:?} for {} x {}", z.shape(), self.rows, self.dim()),
            ));
        }
        let g = z.graph();
        let cols = self
            .perms
            .iter()
            .enumerate()
            .map(|(j, p)| {
                let mut m = vec![T::zero(); b * b];
                for (i, &src) in p.iter().enumerate() {
                    m[i * b + src] = T::one();
                }
                g.constant(m, &[b, b])?.matmul(&z.slice_cols(j, j + 1)?)
            })
            .collect::<Result<Vec<_>>>()?;
        Tensor::concat(&cols.iter().collect::<Vec<_>>(), 1)
    }
}

/// Shuffles every column of a row-major `rows x dim` batch independently.
pub fn permute_dims<T: Copy, R: Rng + ?Sized>(z: &[T], rows: usize, dim: usize, rng: &mut R) -> Result<Vec<T>> {
    DimPermutation::draw(rows, dim, rng).apply(z)
}

/// `rows x dim` draws from `N(0, I)`.
pub fn sample_prior<T: Scalar, R: Rng + ?Sized>(rows: usize, dim: usize, rng: &mut R) -> Vec<T> {
    (0..rows * dim)
        .map(|_| {
            let e: f64 = StandardNormal.sample(rng);
            T::lit(e)
        })
        .collect()
}

/// Mean critic value on `joint` minus mean on `factored`.
pub fn critic_gap<T: Scalar>(critic: &BoundNet<'_, T>, joint: &Tensor<T>, factored: &Tensor<T>) -> Result<Tensor<T>> {
    if joint.shape() != factored.shape() {
        return Err(shape_err(
            "critic gap",
            format!("{:?} vs {:?}", joint.shape(), factored.shape()),
        ));
    }
    critic.forward(joint)?.mean()?.sub(&critic.forward(factored)?.mean()?)
}

/// Gap between factored-posterior and prior samples under critic `g`.
pub fn prior_gap<T: Scalar>(critic_g: &BoundNet<'_, T>, factored: &Tensor<T>, prior: &Tensor<T>) -> Result<Tensor<T>> {
    critic_gap(critic_g, factored, prior)
}

/// `lambda * mean_rows (||grad f(z_hat)|| - 1)^2` at per-row interpolates
/// `z_hat = eps z + (1 - eps) z_bar`, `eps ~ U(0, 1)`. The result stays
/// differentiable with respect to the critic parameters.
pub fn gradient_penalty<T: Scalar, R: Rng + ?Sized>(
    critic: &BoundNet<'_, T>,
    graph: &Graph<T>,
    joint: &[T],
    factored: &[T],
    rows: usize,
    lambda: T,
    rng: &mut R,
) -> Result<Tensor<T>> {
    if joint.len() != factored.len() || rows == 0 || !joint.len().is_multiple_of(rows) {
        return Err(shape_err(
            "gradient penalty",
            format!("{} and {} values for {rows} rows", joint.len(), factored.len()),
        ));
    }
    if lambda == T::zero() {
        return graph.scalar(T::zero());
    }
    let d = joint.len() / rows;
    let mut interp = Vec::with_capacity(joint.len());
    for i in 0..rows {
        let eps = T::lit(rng.random::<f64>());
        for j in 0..d {
            let k = i * d + j;
            interp.push(eps * joint[k] + (T::one() - eps) * factored[k]);
        }
    }
    let z_hat = graph.leaf(interp, &[rows, d])?;
    let grad = critic.forward(&z_hat)?.sum()?.backward_as_graph(&z_hat)?;
    let norm = grad.square()?.sum_rows()?.add_scalar(T::lit(1e-12))?.sqrt()?;
    norm.add_scalar(-T::one())?.square()?.mean()?.scale(lambda)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticStep<T> {
    /// Gap before the update.
    pub gap: T,
    /// Minimized loss: `-gap` plus the penalty when active.
    pub loss: T,
}

/// One Adam step maximizing `gap(joint, factored)` minus the gradient penalty
/// (or the plain gap followed by weight clipping). Inputs are plain data, so
/// nothing upstream of the critic can move.
pub fn critic_ascent_step<T: Scalar, R: Rng + ?Sized>(
    critic: &mut Critic<T>,
    optimizer: &mut AdamState<T>,
    joint: &[T],
    factored: &[T],
    rows: usize,
    cfg: &WtcConfig<T>,
    rng: &mut R,
) -> Result<CriticStep<T>> {
    let d = critic.input_dim();
    if joint.len() != rows * d || factored.len() != rows * d {
        return Err(shape_err(
            "critic step",
            format!("{} and {} values for {rows} x {d}", joint.len(), factored.len()),
        ));
    }
    let g = Graph::new();
    let bound = critic.net.bind(&g)?;
    let zj = g.constant(joint.to_vec(), &[rows, d])?;
    let zf = g.constant(factored.to_vec(), &[rows, d])?;
    let gap = critic_gap(&bound, &zj, &zf)?;
    let mut loss = gap.neg()?;
    if cfg.mode == LipschitzMode::GradientPenalty {
        loss = loss.add(&gradient_penalty(&bound, &g, joint, factored, rows, cfg.lambda, rng)?)?;
    }
    let step = CriticStep {
        gap: gap.item()?,
        loss: loss.item()?,
    };
    let grads = loss.backward(&bound.tensor_refs())?;
    drop(bound);
    let grad_refs: Vec<&[T]> = grads.iter().map(|t| t.data()).collect();
    optimizer.step(critic.net.params_mut(), &grad_refs)?;
    if cfg.mode == LipschitzMode::WeightClip {
        critic.net.clip(cfg.clip);
    }
    Ok(step)
}

/// Critic estimate of the Wasserstein total correlation of a batch: the gap
/// between `z` and a fresh per-dimension permutation of it.
pub fn wtc_estimate<T: Scalar, R: Rng + ?Sized>(critic: &Critic<T>, z: &[T], rows: usize, rng: &mut R) -> Result<T> {
    let d = critic.input_dim();
    let z_bar = permute_dims(z, rows, d, rng)?;
    frozen_gap(critic, z, &z_bar, rows)
}

/// Gap under a frozen critic, without recording a tape.
pub fn frozen_gap<T: Scalar>(critic: &Critic<T>, a: &[T], b: &[T], rows: usize) -> Result<T> {
    let d = critic.input_dim();
    if a.len() != rows * d || b.len() != rows * d {
        return Err(shape_err(
            "critic gap",
            format!("{} and {} values for {rows} x {d}", a.len(), b.len()),
        ));
    }
    let g = Graph::new();
    let bound = critic.net.bind_frozen(&g)?;
    let ta = g.constant(a.to_vec(), &[rows, d])?;
    let tb = g.constant(b.to_vec(), &[rows, d])?;
    critic_gap(&bound, &ta, &tb)?.item()
}
