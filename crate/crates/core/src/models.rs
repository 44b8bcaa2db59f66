//! Gaussian encoder, Bernoulli decoder and the non-adversarial loss terms.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::autodiff::{Graph, Tensor};
use crate::error::{shape_err, Error, Result};
use crate::nn::{Activation, BoundNet, DenseNet};
use crate::scalar::Scalar;

pub const LATENT_DIM: usize = 10;
pub const HIDDEN: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Vae,
    BetaVae,
    Wae,
    WtcVae,
    WtcWae,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Vae,
        ModelKind::BetaVae,
        ModelKind::Wae,
        ModelKind::WtcVae,
        ModelKind::WtcWae,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Vae => "vae",
            ModelKind::BetaVae => "beta-vae",
            ModelKind::Wae => "wae",
            ModelKind::WtcVae => "wtc-vae",
            ModelKind::WtcWae => "wtc-wae",
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    /// Whether the model carries a KL term (the WAE family does not).
    pub fn has_kl(self) -> bool {
        matches!(self, ModelKind::Vae | ModelKind::BetaVae | ModelKind::WtcVae)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model kind `{s}`")))
    }
}

/// Encoder producing `[mu | logvar]` and decoder producing Bernoulli logits.
#[derive(Clone, Debug, PartialEq)]
pub struct GenerativeModel<T> {
    pub kind: ModelKind,
    pub latent_dim: usize,
    pub encoder: DenseNet<T>,
    pub decoder: DenseNet<T>,
}

#[derive(Clone)]
pub struct EncoderOutput<T> {
    pub mu: Tensor<T>,
    pub logvar: Tensor<T>,
}

pub struct BoundModel<'a, T> {
    pub encoder: BoundNet<'a, T>,
    pub decoder: BoundNet<'a, T>,
    latent_dim: usize,
}

impl<T: Scalar> GenerativeModel<T> {
    /// Dense `[input, 256, 256, 2d]` encoder and `[d, 256, 256, input]` decoder.
    pub fn new<R: Rng + ?Sized>(kind: ModelKind, input_dim: usize, latent_dim: usize, rng: &mut R) -> Result<Self> {
        let encoder = DenseNet::mlp("encoder", &[input_dim, HIDDEN, HIDDEN, 2 * latent_dim], rng)?;
        let decoder = DenseNet::mlp("decoder", &[latent_dim, HIDDEN, HIDDEN, input_dim], rng)?;
        Self::from_parts(kind, encoder, decoder)
    }

    pub fn from_parts(kind: ModelKind, encoder: DenseNet<T>, decoder: DenseNet<T>) -> Result<Self> {
        let latent_dim = decoder.input_dim();
        if latent_dim == 0 || encoder.output_dim() != 2 * latent_dim {
            return Err(shape_err(
                "generative model",
                format!(
                    "encoder emits {} values, decoder takes {latent_dim} latents",
                    encoder.output_dim()
                ),
            ));
        }
        if decoder.output_dim() != encoder.input_dim() {
            return Err(shape_err(
                "generative model",
                format!(
                    "decoder emits {} pixels, encoder reads {}",
                    decoder.output_dim(),
                    encoder.input_dim()
                ),
            ));
        }
        Ok(GenerativeModel {
            kind,
            latent_dim,
            encoder,
            decoder,
        })
    }

    /// Model whose posterior mean is the affine map `x W + b` with unit
    /// variance; used to plug known-good representations into the metrics.
    pub fn from_affine_encoder<R: Rng + ?Sized>(
        kind: ModelKind,
        weight: &[T],
        bias: &[T],
        input_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let d = bias.len();
        if d == 0 || weight.len() != input_dim * d {
            return Err(shape_err(
                "affine encoder",
                format!("weight of {} entries for {input_dim} x {d}", weight.len()),
            ));
        }
        let mut w = vec![T::zero(); input_dim * 2 * d];
        for i in 0..input_dim {
            w[i * 2 * d..i * 2 * d + d].copy_from_slice(&weight[i * d..(i + 1) * d]);
        }
        let mut b = vec![T::zero(); 2 * d];
        b[..d].copy_from_slice(bias);
        let mut encoder = DenseNet::init("encoder", &[input_dim, 2 * d], &[Activation::None], rng)?;
        encoder.params_mut()[0].data = w;
        encoder.params_mut()[1].data = b;
        let decoder = DenseNet::mlp("decoder", &[d, HIDDEN, HIDDEN, input_dim], rng)?;
        Self::from_parts(kind, encoder, decoder)
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.input_dim()
    }

    pub fn bind<'a>(&'a self, graph: &Graph<T>) -> Result<BoundModel<'a, T>> {
        Ok(BoundModel {
            encoder: self.encoder.bind(graph)?,
            decoder: self.decoder.bind(graph)?,
            latent_dim: self.latent_dim,
        })
    }

    pub fn bind_frozen<'a>(&'a self, graph: &Graph<T>) -> Result<BoundModel<'a, T>> {
        Ok(BoundModel {
            encoder: self.encoder.bind_frozen(graph)?,
            decoder: self.decoder.bind_frozen(graph)?,
            latent_dim: self.latent_dim,
        })
    }

    /// Posterior means for `rows` flattened inputs, computed in chunks
    /// without recording a tape.
    pub fn encode_means(&self, x: &[T], rows: usize) -> Result<Vec<T>> {
        let n_in = self.input_dim();
        if x.len() != rows * n_in {
            return Err(shape_err(
                "encode means",
                format!("{} values for {rows} rows of width {n_in}", x.len()),
            ));
        }
        const CHUNK: usize = 512;
        let mut out = Vec::with_capacity(rows * self.latent_dim);
        for start in (0..rows).step_by(CHUNK) {
            let end = (start + CHUNK).min(rows);
            let g = Graph::new();
            let bound = self.bind_frozen(&g)?;
            let xb = g.constant(x[start * n_in..end * n_in].to_vec(), &[end - start, n_in])?;
            out.extend_from_slice(bound.encode(&xb)?.mu.data());
        }
        Ok(out)
    }
}

impl<T: Scalar> BoundModel<'_, T> {
    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    /// Splits the encoder head into `mu` (first `d` columns) and `logvar`.
    pub fn encode(&self, x: &Tensor<T>) -> Result<EncoderOutput<T>> {
        let head = self.encoder.forward(x)?;
        let d = self.latent_dim;
        Ok(EncoderOutput {
            mu: head.slice_cols(0, d)?,
            logvar: head.slice_cols(d, 2 * d)?,
        })
    }

    /// Bernoulli logits.
    pub fn decode(&self, z: &Tensor<T>) -> Result<Tensor<T>> {
        self.decoder.forward(z)
    }
}

/// `z = mu + exp(logvar / 2) * eps` with `eps ~ N(0, I)` drawn row-major.
pub fn reparameterize<T: Scalar, R: Rng + ?Sized>(out: &EncoderOutput<T>, rng: &mut R) -> Result<Tensor<T>> {
    let eps = (0..out.mu.numel())
        .map(|_| {
            let e: f64 = StandardNormal.sample(rng);
            T::lit(e)
        })
        .collect();
    reparameterize_with(out, eps)
}

/// Reparameterization with caller-supplied noise.
pub fn reparameterize_with<T: Scalar>(out: &EncoderOutput<T>, eps: Vec<T>) -> Result<Tensor<T>> {
    let eps = out.mu.graph().constant(eps, out.mu.shape())?;
    let sigma = out.logvar.scale(T::lit(0.5))?.exp()?;
    out.mu.add(&sigma.mul(&eps)?)
}

/// Batch mean of `0.5 * sum_j (mu^2 + sigma^2 - 1 - log sigma^2)`.
pub fn kl_to_standard_normal<T: Scalar>(out: &EncoderOutput<T>) -> Result<Tensor<T>> {
    let (b, _) = out.mu.dims2("kl")?;
    let per = out
        .mu
        .square()?
        .add(&out.logvar.exp()?)?
        .sub(&out.logvar)?
        .add_scalar(-T::one())?;
    per.sum()?.scale(T::lit(0.5) / T::lit(b as f64))
}

/// Batch mean of the per-image summed Bernoulli NLL,
/// `softplus(l) - x l` with `softplus(l) = relu(l) + log(1 + exp(-|l|))`.
pub fn recon_nll<T: Scalar>(x: &Tensor<T>, logits: &Tensor<T>) -> Result<Tensor<T>> {
    if x.shape() != logits.shape() {
        return Err(shape_err(
            "recon nll",
            format!("targets {:?} vs logits {:?}", x.shape(), logits.shape()),
        ));
    }
    if let Some(v) = x.data().iter().find(|v| !(**v >= T::zero() && **v <= T::one())) {
        return Err(Error::Domain {
            op: "recon nll",
            detail: format!("target {v} outside [0, 1]"),
        });
    }
    let (b, _) = logits.dims2("recon nll")?;
    let softplus = logits
        .relu()?
        .add(&logits.abs()?.neg()?.exp()?.add_scalar(T::one())?.log()?)?;
    softplus.sub(&x.mul(logits)?)?.sum()?.scale(T::one() / T::lit(b as f64))
}

pub struct ElboTerms<T> {
    pub recon: Tensor<T>,
    pub kl: Tensor<T>,
    pub z: Tensor<T>,
    pub posterior: EncoderOutput<T>,
}

pub fn elbo_terms<T: Scalar, R: Rng + ?Sized>(
    model: &BoundModel<'_, T>,
    x: &Tensor<T>,
    rng: &mut R,
) -> Result<ElboTerms<T>> {
    let posterior = model.encode(x)?;
    let z = reparameterize(&posterior, rng)?;
    let logits = model.decode(&z)?;
    Ok(ElboTerms {
        recon: recon_nll(x, &logits)?,
        kl: kl_to_standard_normal(&posterior)?,
        z,
        posterior,
    })
}
