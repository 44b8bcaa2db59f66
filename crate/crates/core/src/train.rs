//! Min-max training loops for the WTC autoencoders and their baselines.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{Graph, Tensor};
use crate::data::{sample_batch, FactorDataset};
use crate::error::{Error, Result};
use crate::models::{
    kl_to_standard_normal, recon_nll, reparameterize, BoundModel, GenerativeModel, ModelKind, LATENT_DIM,
};
use crate::nn::{AdamConfig, AdamState};
use crate::scalar::Scalar;
use crate::wtc::{critic_ascent_step, critic_gap, sample_prior, Critic, CriticRole, DimPermutation, WtcConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig<T> {
    pub kind: ModelKind,
    /// KL weight for the VAE family, prior-critic weight for the WAE family.
    pub beta: T,
    /// Weight of the Wasserstein total correlation term.
    pub gamma: T,
    pub lr: T,
    pub batch: usize,
    pub steps: usize,
    pub seed: u64,
    pub latent_dim: usize,
    pub wtc: WtcConfig<T>,
}

impl<T: Scalar> TrainConfig<T> {
    /// Defaults for `kind`: batch 64, Adam at 1e-4, 20k steps, `beta = 1`
    /// (4 for beta-VAE) and `gamma = 10` for the WTC models.
    pub fn new(kind: ModelKind) -> Self {
        let beta = if kind == ModelKind::BetaVae { 4.0 } else { 1.0 };
        let gamma = if matches!(kind, ModelKind::WtcVae | ModelKind::WtcWae) {
            10.0
        } else {
            0.0
        };
        TrainConfig {
            kind,
            beta: T::lit(beta),
            gamma: T::lit(gamma),
            lr: T::lit(1e-4),
            batch: 64,
            steps: 20_000,
            seed: 0,
            latent_dim: LATENT_DIM,
            wtc: WtcConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.beta >= T::zero()) || !self.beta.is_finite() {
            return bad(format!("beta must be finite and nonnegative, got {}", self.beta));
        }
        if !(self.gamma >= T::zero()) || !self.gamma.is_finite() {
            return bad(format!("gamma must be finite and nonnegative, got {}", self.gamma));
        }
        if !(self.lr > T::zero()) || !self.lr.is_finite() {
            return bad(format!("learning rate must be positive, got {}", self.lr));
        }
        if self.batch == 0 {
            return bad("batch size must be positive".into());
        }
        if self.latent_dim == 0 {
            return bad("latent dimension must be positive".into());
        }
        self.wtc.validate()
    }

    /// Settings that are legal but outside the recommended range.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.kind == ModelKind::WtcWae && self.gamma < self.beta {
            out.push(format!(
                "wtc-wae with gamma {} < beta {} favours the prior term over disentanglement",
                self.gamma, self.beta
            ));
        }
        out
    }

    fn adam(&self) -> AdamConfig<T> {
        AdamConfig {
            lr: self.lr,
            ..AdamConfig::default()
        }
    }
}

/// Independent random streams split from one master seed, so changing one
/// consumer never shifts the draws of another.
#[derive(Clone, Debug)]
pub struct Streams {
    pub init: ChaCha8Rng,
    pub data: ChaCha8Rng,
    pub reparam: ChaCha8Rng,
    pub permute: ChaCha8Rng,
    pub gp: ChaCha8Rng,
    pub prior: ChaCha8Rng,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        let stream = |id: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(id);
            rng
        };
        Streams {
            init: stream(0),
            data: stream(1),
            reparam: stream(2),
            permute: stream(3),
            gp: stream(4),
            prior: stream(5),
        }
    }
}

/// One logged training step. Terms a model does not have are 0.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TrainRecord {
    pub step: usize,
    /// Autoencoder objective: `recon + beta kl + gamma wtc_gap` (VAE family)
    /// or `recon + beta prior_gap + gamma wtc_gap` (WAE family).
    pub total: f64,
    pub recon: f64,
    pub kl: f64,
    /// `f(z) - f(z_bar)` under the updated critic.
    pub wtc_gap: f64,
    /// `g(z_bar) - g(z')` (or `g(z) - g(z')` for the WAE baseline).
    pub prior_gap: f64,
    /// Loss minimized by the total-correlation critic.
    pub critic_f: f64,
    /// Loss minimized by the prior critic.
    pub critic_g: f64,
}

impl TrainRecord {
    /// Train-log CSV header; `total` is derivable and not written.
    pub const COLUMNS: [&'static str; 7] = ["step", "recon", "kl", "wtc_gap", "prior_gap", "critic_f", "critic_g"];

    /// Values in [`Self::COLUMNS`] order after `step`.
    pub fn values(&self) -> [f64; 6] {
        [
            self.recon,
            self.kl,
            self.wtc_gap,
            self.prior_gap,
            self.critic_f,
            self.critic_g,
        ]
    }
}

pub type TrainLog = Vec<TrainRecord>;

/// Adam states for every trainable component.
#[derive(Clone, Debug, PartialEq)]
pub struct Optimizers<T> {
    pub encoder: AdamState<T>,
    pub decoder: AdamState<T>,
    pub critic_f: Option<AdamState<T>>,
    pub critic_g: Option<AdamState<T>>,
}

/// Everything a run carries between steps.
#[derive(Clone, Debug)]
pub struct Trainer<T> {
    pub cfg: TrainConfig<T>,
    pub model: GenerativeModel<T>,
    pub critic_f: Option<Critic<T>>,
    pub critic_g: Option<Critic<T>>,
    pub optimizers: Optimizers<T>,
    pub streams: Streams,
    pub step: usize,
}

fn needs_critics(kind: ModelKind) -> (bool, bool) {
    match kind {
        ModelKind::Vae | ModelKind::BetaVae => (false, false),
        ModelKind::Wae => (false, true),
        ModelKind::WtcVae => (true, false),
        ModelKind::WtcWae => (true, true),
    }
}

impl<T: Scalar> Trainer<T> {
    /// Initializes the model, then the critics, from the `init` stream.
    pub fn new(cfg: TrainConfig<T>, input_dim: usize) -> Result<Self> {
        cfg.validate()?;
        let mut streams = Streams::new(cfg.seed);
        let model = GenerativeModel::new(cfg.kind, input_dim, cfg.latent_dim, &mut streams.init)?;
        let (want_f, want_g) = needs_critics(cfg.kind);
        let critic_f = want_f
            .then(|| Critic::new(CriticRole::Wtc, cfg.latent_dim, &mut streams.init))
            .transpose()?;
        let critic_g = want_g
            .then(|| Critic::new(CriticRole::Prior, cfg.latent_dim, &mut streams.init))
            .transpose()?;
        let adam = cfg.adam();
        let optimizers = Optimizers {
            encoder: AdamState::new(adam, model.encoder.params()),
            decoder: AdamState::new(adam, model.decoder.params()),
            critic_f: critic_f.as_ref().map(|c| AdamState::new(adam, c.net.params())),
            critic_g: critic_g.as_ref().map(|c| AdamState::new(adam, c.net.params())),
        };
        Ok(Trainer {
            cfg,
            model,
            critic_f,
            critic_g,
            optimizers,
            streams,
            step: 0,
        })
    }

    /// Runs one step of the algorithm matching the model kind.
    pub fn step(&mut self, ds: &FactorDataset) -> Result<TrainRecord> {
        let step = self.step;
        let Trainer {
            cfg,
            model,
            critic_f,
            critic_g,
            optimizers,
            streams,
            ..
        } = self;
        let record = match cfg.kind {
            ModelKind::Vae | ModelKind::BetaVae | ModelKind::Wae => {
                train_step_baseline(model, critic_g.as_mut(), optimizers, ds, cfg, streams, step)?
            }
            ModelKind::WtcVae => {
                let critic = critic_f.as_mut().ok_or(Error::InvalidArgument(
                    "wtc-vae needs a total-correlation critic".into(),
                ))?;
                train_step_wtc_vae(model, critic, optimizers, ds, cfg, streams, step)?
            }
            ModelKind::WtcWae => match (critic_f.as_mut(), critic_g.as_mut()) {
                (Some(f), Some(g)) => train_step_wtc_wae(model, f, g, optimizers, ds, cfg, streams, step)?,
                _ => {
                    return Err(Error::InvalidArgument("wtc-wae needs two critics".into()));
                }
            },
        };
        self.step += 1;
        Ok(record)
    }
}

/// Renames a non-finite failure after the loss term that produced it.
fn term<V>(r: Result<V>, name: &'static str, step: usize) -> Result<V> {
    r.map_err(|e| match e {
        Error::NonFinite { .. } => Error::NonFiniteLoss { term: name, step },
        other => other,
    })
}

fn finite<T: Scalar>(v: T, name: &'static str, step: usize) -> Result<f64> {
    let v = v.as_f64();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteLoss { term: name, step })
    }
}

fn opt_for<'a, T>(o: &'a mut Option<AdamState<T>>, name: &str) -> Result<&'a mut AdamState<T>> {
    o.as_mut()
        .ok_or_else(|| Error::InvalidArgument(format!("missing optimizer for {name}")))
}

/// Forward pass shared by every variant: batch, posterior, reparameterized
/// `z` and the reconstruction term.
struct Forward<'a, T> {
    bound: BoundModel<'a, T>,
    kl: Option<Tensor<T>>,
    recon: Tensor<T>,
    z: Tensor<T>,
}

fn forward<'a, T: Scalar>(
    model: &'a GenerativeModel<T>,
    g: &Graph<T>,
    ds: &FactorDataset,
    cfg: &TrainConfig<T>,
    streams: &mut Streams,
    step: usize,
) -> Result<Forward<'a, T>> {
    let batch = sample_batch::<T, _>(ds, cfg.batch, &mut streams.data)?;
    let bound = model.bind(g)?;
    let x = batch.tensor(g)?;
    let posterior = term(bound.encode(&x), "encoder", step)?;
    let z = term(reparameterize(&posterior, &mut streams.reparam), "z", step)?;
    let logits = term(bound.decode(&z), "decoder", step)?;
    let recon = term(recon_nll(&x, &logits), "recon", step)?;
    let kl = if cfg.kind.has_kl() {
        Some(term(kl_to_standard_normal(&posterior), "kl", step)?)
    } else {
        None
    };
    Ok(Forward { bound, kl, recon, z })
}

/// Backpropagates `loss` into the encoder and decoder and takes one Adam step.
fn descend<T: Scalar>(
    model: &mut GenerativeModel<T>,
    bound: BoundModel<'_, T>,
    opt: &mut Optimizers<T>,
    loss: &Tensor<T>,
    step: usize,
) -> Result<()> {
    let n_enc = bound.encoder.tensors().len();
    let mut refs = bound.encoder.tensor_refs();
    refs.extend(bound.decoder.tensor_refs());
    let grads = term(loss.backward(&refs), "total", step)?;
    drop(bound);
    let grads: Vec<&[T]> = grads.iter().map(|t| t.data()).collect();
    term(
        opt.encoder.step(model.encoder.params_mut(), &grads[..n_enc]),
        "total",
        step,
    )?;
    term(
        opt.decoder.step(model.decoder.params_mut(), &grads[n_enc..]),
        "total",
        step,
    )
}

/// One step of the WTC-VAE algorithm: sample a batch and `z`, permute, take
/// a critic ascent step on detached `z`, then descend on
/// `recon + beta kl + gamma (f(z) - f(z_bar))` with the critic frozen.
pub fn train_step_wtc_vae<T: Scalar>(
    model: &mut GenerativeModel<T>,
    critic: &mut Critic<T>,
    opt: &mut Optimizers<T>,
    ds: &FactorDataset,
    cfg: &TrainConfig<T>,
    streams: &mut Streams,
    step: usize,
) -> Result<TrainRecord> {
    if cfg.kind != ModelKind::WtcVae {
        return Err(Error::InvalidArgument(format!("wtc-vae step on a {} config", cfg.kind)));
    }
    let g = Graph::new();
    let snapshot = model.clone();
    let fw = forward(&snapshot, &g, ds, cfg, streams, step)?;
    let kl = fw.kl.expect("wtc-vae has a kl term");
    let rows = cfg.batch;
    let d = cfg.latent_dim;
    let perm = DimPermutation::draw(rows, d, &mut streams.permute);
    let z_data = fw.z.to_vec();
    let z_bar_data = perm.apply(&z_data)?;

    let opt_f = opt_for(&mut opt.critic_f, "critic_f")?;
    let mut critic_loss = T::zero();
    for _ in 0..cfg.wtc.critic_steps {
        let s = term(
            critic_ascent_step(critic, opt_f, &z_data, &z_bar_data, rows, &cfg.wtc, &mut streams.gp),
            "critic_f",
            step,
        )?;
        critic_loss = s.loss;
    }

    let frozen = critic.net.bind_frozen(&g)?;
    let z_bar = perm.apply_tensor(&fw.z)?;
    let gap = term(critic_gap(&frozen, &fw.z, &z_bar), "wtc_gap", step)?;
    let mut loss = term(fw.recon.add(&kl.scale(cfg.beta)?), "total", step)?;
    if cfg.gamma != T::zero() {
        loss = term(loss.add(&gap.scale(cfg.gamma)?), "total", step)?;
    }
    let record = TrainRecord {
        step,
        total: finite(loss.item()?, "total", step)?,
        recon: finite(fw.recon.item()?, "recon", step)?,
        kl: finite(kl.item()?, "kl", step)?,
        wtc_gap: finite(gap.item()?, "wtc_gap", step)?,
        prior_gap: 0.0,
        critic_f: finite(critic_loss, "critic_f", step)?,
        critic_g: 0.0,
    };
    descend(model, fw.bound, opt, &loss, step)?;
    Ok(record)
}

/// One step of the WTC-WAE algorithm: critic `f` on `(z, z_bar)`, critic `g`
/// on `(z_bar, z')` with `z' ~ N(0, I)`, then descent on
/// `recon + beta (g(z_bar) - g(z')) + gamma (f(z) - f(z_bar))`.
/// Gradients reach the encoder through both `z` and the permuted `z_bar`.
#[allow(clippy::too_many_arguments)]
pub fn train_step_wtc_wae<T: Scalar>(
    model: &mut GenerativeModel<T>,
    critic_f: &mut Critic<T>,
    critic_g: &mut Critic<T>,
    opt: &mut Optimizers<T>,
    ds: &FactorDataset,
    cfg: &TrainConfig<T>,
    streams: &mut Streams,
    step: usize,
) -> Result<TrainRecord> {
    if cfg.kind != ModelKind::WtcWae {
        return Err(Error::InvalidArgument(format!("wtc-wae step on a {} config", cfg.kind)));
    }
    let g = Graph::new();
    let snapshot = model.clone();
    let fw = forward(&snapshot, &g, ds, cfg, streams, step)?;
    let rows = cfg.batch;
    let d = cfg.latent_dim;
    let perm = DimPermutation::draw(rows, d, &mut streams.permute);
    let z_data = fw.z.to_vec();
    let z_bar_data = perm.apply(&z_data)?;
    let prior_data: Vec<T> = sample_prior(rows, d, &mut streams.prior);

    let (mut loss_f, mut loss_g) = (T::zero(), T::zero());
    let opt_f = opt_for(&mut opt.critic_f, "critic_f")?;
    for _ in 0..cfg.wtc.critic_steps {
        loss_f = term(
            critic_ascent_step(critic_f, opt_f, &z_data, &z_bar_data, rows, &cfg.wtc, &mut streams.gp),
            "critic_f",
            step,
        )?
        .loss;
    }
    let opt_g = opt_for(&mut opt.critic_g, "critic_g")?;
    for _ in 0..cfg.wtc.critic_steps {
        loss_g = term(
            critic_ascent_step(
                critic_g,
                opt_g,
                &z_bar_data,
                &prior_data,
                rows,
                &cfg.wtc,
                &mut streams.gp,
            ),
            "critic_g",
            step,
        )?
        .loss;
    }

    let frozen_f = critic_f.net.bind_frozen(&g)?;
    let frozen_g = critic_g.net.bind_frozen(&g)?;
    let z_bar = perm.apply_tensor(&fw.z)?;
    let z_prior = g.constant(prior_data, &[rows, d])?;
    let wtc_gap = term(critic_gap(&frozen_f, &fw.z, &z_bar), "wtc_gap", step)?;
    let prior_gap = term(critic_gap(&frozen_g, &z_bar, &z_prior), "prior_gap", step)?;
    let mut loss = fw.recon.clone();
    if cfg.beta != T::zero() {
        loss = term(loss.add(&prior_gap.scale(cfg.beta)?), "total", step)?;
    }
    if cfg.gamma != T::zero() {
        loss = term(loss.add(&wtc_gap.scale(cfg.gamma)?), "total", step)?;
    }
    let record = TrainRecord {
        step,
        total: finite(loss.item()?, "total", step)?,
        recon: finite(fw.recon.item()?, "recon", step)?,
        kl: 0.0,
        wtc_gap: finite(wtc_gap.item()?, "wtc_gap", step)?,
        prior_gap: finite(prior_gap.item()?, "prior_gap", step)?,
        critic_f: finite(loss_f, "critic_f", step)?,
        critic_g: finite(loss_g, "critic_g", step)?,
    };
    descend(model, fw.bound, opt, &loss, step)?;
    Ok(record)
}

/// VAE and beta-VAE: descent on `recon + beta kl`. WAE: a prior critic step
/// on `(z, z')`, then descent on `recon + beta (g(z) - g(z'))`.
pub fn train_step_baseline<T: Scalar>(
    model: &mut GenerativeModel<T>,
    critic_g: Option<&mut Critic<T>>,
    opt: &mut Optimizers<T>,
    ds: &FactorDataset,
    cfg: &TrainConfig<T>,
    streams: &mut Streams,
    step: usize,
) -> Result<TrainRecord> {
    let g = Graph::new();
    let snapshot = model.clone();
    let fw = forward(&snapshot, &g, ds, cfg, streams, step)?;
    let recon = finite(fw.recon.item()?, "recon", step)?;
    match cfg.kind {
        ModelKind::Vae | ModelKind::BetaVae => {
            let kl = fw.kl.clone().expect("vae has a kl term");
            let loss = term(fw.recon.add(&kl.scale(cfg.beta)?), "total", step)?;
            let record = TrainRecord {
                step,
                total: finite(loss.item()?, "total", step)?,
                recon,
                kl: finite(kl.item()?, "kl", step)?,
                ..TrainRecord::default()
            };
            descend(model, fw.bound, opt, &loss, step)?;
            Ok(record)
        }
        ModelKind::Wae => {
            let critic = critic_g.ok_or(Error::InvalidArgument("wae needs a prior critic".into()))?;
            let rows = cfg.batch;
            let d = cfg.latent_dim;
            let z_data = fw.z.to_vec();
            let prior_data: Vec<T> = sample_prior(rows, d, &mut streams.prior);
            let opt_g = opt_for(&mut opt.critic_g, "critic_g")?;
            let mut loss_g = T::zero();
            for _ in 0..cfg.wtc.critic_steps {
                loss_g = term(
                    critic_ascent_step(critic, opt_g, &z_data, &prior_data, rows, &cfg.wtc, &mut streams.gp),
                    "critic_g",
                    step,
                )?
                .loss;
            }
            let frozen = critic.net.bind_frozen(&g)?;
            let z_prior = g.constant(prior_data, &[rows, d])?;
            let gap = term(critic_gap(&frozen, &fw.z, &z_prior), "prior_gap", step)?;
            let mut loss = fw.recon.clone();
            if cfg.beta != T::zero() {
                loss = term(loss.add(&gap.scale(cfg.beta)?), "total", step)?;
            }
            let record = TrainRecord {
                step,
                total: finite(loss.item()?, "total", step)?,
                recon,
                prior_gap: finite(gap.item()?, "prior_gap", step)?,
                critic_g: finite(loss_g, "critic_g", step)?,
                ..TrainRecord::default()
            };
            descend(model, fw.bound, opt, &loss, step)?;
            Ok(record)
        }
        other => Err(Error::InvalidArgument(format!("baseline step on a {other} config"))),
    }
}

/// Runs `cfg.steps` steps, handing each record to `on_record` as soon as it
/// exists so callers can persist partial logs of an aborted run.
pub fn train_with<T: Scalar>(
    cfg: TrainConfig<T>,
    ds: &FactorDataset,
    mut on_record: impl FnMut(&TrainRecord) -> Result<()>,
) -> Result<Trainer<T>> {
    let mut trainer = Trainer::new(cfg, ds.image_size())?;
    for _ in 0..trainer.cfg.steps {
        let record = trainer.step(ds)?;
        on_record(&record)?;
    }
    Ok(trainer)
}

/// Trains to completion and returns the final state with the full log.
pub fn train<T: Scalar>(cfg: TrainConfig<T>, ds: &FactorDataset) -> Result<(Trainer<T>, TrainLog)> {
    let mut log = Vec::with_capacity(cfg.steps);
    let trainer = train_with(cfg, ds, |r| {
        log.push(*r);
        Ok(())
    })?;
    Ok((trainer, log))
}
