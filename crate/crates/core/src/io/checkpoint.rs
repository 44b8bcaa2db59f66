//! WTCK checkpoint format, little-endian:
//!
//! ```text
//! "WTCK"
//! u32 version
//! u32 metadata length, metadata block:
//!     u8 kind, u32 latent dim, u32 input dim,
//!     f64 beta, f64 gamma, f64 lr, u32 batch, u64 steps, u64 seed,
//!     f64 lambda, u8 lipschitz mode, f64 clip, u32 critic steps,
//!     u64 final step
//! u32 tensor count, then per tensor:
//!     u8 name length, name, u32 rank, rank x u32 dims, f64 payload
//! ```
//!
//! Tensor names carry the component prefix (`encoder.`, `decoder.`,
//! `critic_f.`, `critic_g.`). Every network is dense with ReLU between
//! layers and a linear head.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::models::{GenerativeModel, ModelKind};
use crate::nn::{Activation, DenseNet, Param};
use crate::scalar::Scalar;
use crate::train::{TrainConfig, Trainer};
use crate::wtc::{Critic, CriticRole, LipschitzMode, WtcConfig};

pub const CKPT_MAGIC: &[u8; 4] = b"WTCK";
pub const CKPT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint<T> {
    pub config: TrainConfig<T>,
    pub model: GenerativeModel<T>,
    pub critic_f: Option<Critic<T>>,
    pub critic_g: Option<Critic<T>>,
    /// Number of completed training steps.
    pub step: usize,
}

impl<T: Scalar> Checkpoint<T> {
    pub fn from_trainer(t: &Trainer<T>) -> Self {
        Checkpoint {
            config: t.cfg.clone(),
            model: t.model.clone(),
            critic_f: t.critic_f.clone(),
            critic_g: t.critic_g.clone(),
            step: t.step,
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let c = &self.config;
        let mut meta = Vec::new();
        meta.push(c.kind.code());
        put_u32(&mut meta, self.model.latent_dim, "latent dim")?;
        put_u32(&mut meta, self.model.input_dim(), "input dim")?;
        for v in [c.beta, c.gamma, c.lr] {
            meta.extend_from_slice(&v.as_f64().to_le_bytes());
        }
        put_u32(&mut meta, c.batch, "batch")?;
        meta.extend_from_slice(&(c.steps as u64).to_le_bytes());
        meta.extend_from_slice(&c.seed.to_le_bytes());
        meta.extend_from_slice(&c.wtc.lambda.as_f64().to_le_bytes());
        meta.push(match c.wtc.mode {
            LipschitzMode::GradientPenalty => 0,
            LipschitzMode::WeightClip => 1,
        });
        meta.extend_from_slice(&c.wtc.clip.as_f64().to_le_bytes());
        put_u32(&mut meta, c.wtc.critic_steps, "critic steps")?;
        meta.extend_from_slice(&(self.step as u64).to_le_bytes());

        let mut params: Vec<&Param<T>> = Vec::new();
        params.extend(self.model.encoder.params());
        params.extend(self.model.decoder.params());
        for critic in [&self.critic_f, &self.critic_g].into_iter().flatten() {
            params.extend(critic.net.params());
        }

        let mut buf = Vec::new();
        buf.extend_from_slice(CKPT_MAGIC);
        buf.extend_from_slice(&CKPT_VERSION.to_le_bytes());
        put_u32(&mut buf, meta.len(), "metadata length")?;
        buf.extend_from_slice(&meta);
        put_u32(&mut buf, params.len(), "tensor count")?;
        for p in params {
            let name = p.name.as_bytes();
            let len = u8::try_from(name.len())
                .map_err(|_| Error::Format(format!("tensor name `{}` longer than 255 bytes", p.name)))?;
            buf.push(len);
            buf.extend_from_slice(name);
            put_u32(&mut buf, p.shape.len(), "rank")?;
            for &d in &p.shape {
                put_u32(&mut buf, d, "dimension")?;
            }
            for v in &p.data {
                buf.extend_from_slice(&v.as_f64().to_le_bytes());
            }
        }
        Ok(buf)
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut cur = Cursor { buf, pos: 0 };
        if cur.take(4, "magic")? != CKPT_MAGIC {
            return Err(Error::Format("bad magic, not a WTCK checkpoint".into()));
        }
        let version = cur.u32("version")? as u32;
        if version != CKPT_VERSION {
            return Err(Error::Version {
                found: version,
                expected: CKPT_VERSION,
            });
        }
        let meta_len = cur.u32("metadata length")?;
        let mut m = Cursor {
            buf: cur.take(meta_len, "metadata")?,
            pos: 0,
        };
        let code = m.u8("model kind")?;
        let kind =
            ModelKind::from_code(code).ok_or_else(|| Error::Format(format!("unknown model kind code {code}")))?;
        let latent_dim = m.u32("latent dim")?;
        let input_dim = m.u32("input dim")?;
        let beta = m.scalar::<T>("beta")?;
        let gamma = m.scalar::<T>("gamma")?;
        let lr = m.scalar::<T>("lr")?;
        let batch = m.u32("batch")?;
        let steps = m.u64("steps")? as usize;
        let seed = m.u64("seed")?;
        let lambda = m.scalar::<T>("lambda")?;
        let mode = match m.u8("lipschitz mode")? {
            0 => LipschitzMode::GradientPenalty,
            1 => LipschitzMode::WeightClip,
            other => return Err(Error::Format(format!("unknown lipschitz mode {other}"))),
        };
        let clip = m.scalar::<T>("clip")?;
        let critic_steps = m.u32("critic steps")?;
        let step = m.u64("final step")? as usize;
        if m.pos != m.buf.len() {
            return Err(Error::Format("metadata block longer than its fields".into()));
        }
        let config = TrainConfig {
            kind,
            beta,
            gamma,
            lr,
            batch,
            steps,
            seed,
            latent_dim,
            wtc: WtcConfig {
                lambda,
                mode,
                clip,
                critic_steps,
            },
        };

        let count = cur.u32("tensor count")?;
        let mut groups: [Vec<Param<T>>; 4] = Default::default();
        for _ in 0..count {
            let len = cur.u8("name length")? as usize;
            let name = String::from_utf8(cur.take(len, "tensor name")?.to_vec())
                .map_err(|_| Error::Format("tensor name is not UTF-8".into()))?;
            let rank = cur.u32("rank")?;
            let mut shape = Vec::with_capacity(rank.min(8));
            for _ in 0..rank {
                shape.push(cur.u32("dimension")?);
            }
            let numel = shape
                .iter()
                .try_fold(1usize, |a, &d| a.checked_mul(d))
                .ok_or_else(|| Error::Format(format!("tensor `{name}` size overflows")))?;
            let bytes = numel
                .checked_mul(8)
                .ok_or_else(|| Error::Format(format!("tensor `{name}` size overflows")))?;
            let data = cur
                .take(bytes, "tensor payload")?
                .chunks_exact(8)
                .map(|b| T::lit(f64::from_le_bytes(b.try_into().unwrap())))
                .collect();
            let slot = ["encoder.", "decoder.", "critic_f.", "critic_g."]
                .iter()
                .position(|p| name.starts_with(p))
                .ok_or_else(|| Error::Format(format!("tensor `{name}` has no known component prefix")))?;
            groups[slot].push(Param { name, shape, data });
        }
        if cur.pos != buf.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes after tensors",
                buf.len() - cur.pos
            )));
        }
        let [enc, dec, f, g] = groups;
        let model = GenerativeModel::from_parts(kind, dense(enc)?, dense(dec)?)?;
        if model.latent_dim != latent_dim || model.input_dim() != input_dim {
            return Err(Error::Format(format!(
                "tensors describe a {}->{} model, metadata says {input_dim}->{latent_dim}",
                model.input_dim(),
                model.latent_dim
            )));
        }
        let critic = |params: Vec<Param<T>>, role| -> Result<Option<Critic<T>>> {
            if params.is_empty() {
                Ok(None)
            } else {
                Critic::from_net(role, dense(params)?).map(Some)
            }
        };
        Ok(Checkpoint {
            config,
            model,
            critic_f: critic(f, CriticRole::Wtc)?,
            critic_g: critic(g, CriticRole::Prior)?,
            step,
        })
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(&self.to_bytes()?)?;
        Ok(())
    }

    pub fn read<R: Read>(mut input: R) -> Result<Self> {
        let mut buf = Vec::new();
        input.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

fn dense<T: Scalar>(params: Vec<Param<T>>) -> Result<DenseNet<T>> {
    let layers = params.len() / 2;
    let mut acts = vec![Activation::Relu; layers];
    if let Some(last) = acts.last_mut() {
        *last = Activation::None;
    }
    DenseNet::from_params(params, acts)
}

fn put_u32(buf: &mut Vec<u8>, v: usize, what: &str) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Format(format!("{what} {v} exceeds u32")))?;
    buf.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Format(format!("truncated while reading {what}")))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()) as usize)
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn scalar<T: Scalar>(&mut self, what: &str) -> Result<T> {
        Ok(T::lit(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap())))
    }
}
