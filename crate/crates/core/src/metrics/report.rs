use rand::Rng;

use super::dependency::{mig, modularity, wdg, Representation};
use super::factorvae::{factor_vae_score, FactorVaeConfig};
use crate::autodiff::Graph;
use crate::data::{Batch, FactorDataset};
use crate::error::{shape_err, Result};
use crate::models::{recon_nll, GenerativeModel};
use crate::scalar::Scalar;

/// Anything that maps dataset rows to latent means.
pub trait Embedding {
    fn latent_dim(&self) -> usize;

    /// `N x d` latent means for every row of `ds`.
    fn embed_dataset(&self, ds: &FactorDataset) -> Result<Vec<f64>>;
}

impl<T: Scalar> Embedding for GenerativeModel<T> {
    fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    fn embed_dataset(&self, ds: &FactorDataset) -> Result<Vec<f64>> {
        check_width(self, ds)?;
        let batch: Batch<T> = Batch::from_rows(ds, (0..ds.len()).collect(), false);
        Ok(self
            .encode_means(&batch.x, batch.rows)?
            .into_iter()
            .map(Scalar::as_f64)
            .collect())
    }
}

fn check_width<T: Scalar>(model: &GenerativeModel<T>, ds: &FactorDataset) -> Result<()> {
    if model.input_dim() != ds.image_size() {
        return Err(shape_err(
            "evaluate",
            format!(
                "model reads {} pixels, dataset images have {}",
                model.input_dim(),
                ds.image_size()
            ),
        ));
    }
    Ok(())
}

/// Per-image summed Bernoulli NLL over the whole dataset, decoding the
/// posterior means.
pub fn reconstruction_nll<T: Scalar>(model: &GenerativeModel<T>, ds: &FactorDataset) -> Result<f64> {
    check_width(model, ds)?;
    const CHUNK: usize = 512;
    let mut total = 0.0;
    for start in (0..ds.len()).step_by(CHUNK) {
        let rows: Vec<usize> = (start..(start + CHUNK).min(ds.len())).collect();
        let n = rows.len();
        let batch: Batch<T> = Batch::from_rows(ds, rows, false);
        let g = Graph::new();
        let bound = model.bind_frozen(&g)?;
        let x = batch.tensor(&g)?;
        let logits = bound.decode(&bound.encode(&x)?.mu)?;
        total += recon_nll(&x, &logits)?.item()?.as_f64() * n as f64;
    }
    Ok(total / ds.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalConfig {
    pub runs: usize,
    /// Rows sampled with replacement into each run's representation.
    pub samples: usize,
    pub bins: usize,
    pub factor_vae: FactorVaeConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            runs: 10,
            samples: 12_800,
            bins: 20,
            factor_vae: FactorVaeConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    /// Mean and sample standard deviation (0 for a single value).
    pub fn of(values: &[f64]) -> Summary {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Summary { mean, std }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub wdg: Summary,
    pub factor_vae: Summary,
    pub mig: Summary,
    pub modularity: Summary,
    /// `None` when only an embedding was evaluated.
    pub recon: Option<f64>,
    pub runs: usize,
    /// Per-run values in the order wdg, factor_vae, mig, modularity.
    pub per_run: Vec<[f64; 4]>,
}

/// Repeats every metric `cfg.runs` times on fresh row samples.
pub fn evaluate_embedding<R: Rng + ?Sized>(
    embedding: &[f64],
    dim: usize,
    ds: &FactorDataset,
    cfg: &EvalConfig,
    rng: &mut R,
) -> Result<MetricReport> {
    if cfg.runs == 0 || cfg.samples == 0 {
        return Err(crate::Error::InvalidArgument(format!("{cfg:?}")));
    }
    let mut per_run = Vec::with_capacity(cfg.runs);
    for _ in 0..cfg.runs {
        let rows: Vec<usize> = (0..cfg.samples).map(|_| rng.random_range(0..ds.len())).collect();
        let rep = Representation::from_embedding(embedding, dim, ds, &rows)?;
        per_run.push([
            wdg(&rep)?,
            factor_vae_score(embedding, dim, ds, &cfg.factor_vae, rng)?,
            mig(&rep, cfg.bins)?,
            modularity(&rep, cfg.bins)?,
        ]);
    }
    let column = |j: usize| Summary::of(&per_run.iter().map(|r| r[j]).collect::<Vec<_>>());
    Ok(MetricReport {
        wdg: column(0),
        factor_vae: column(1),
        mig: column(2),
        modularity: column(3),
        recon: None,
        runs: cfg.runs,
        per_run,
    })
}

pub fn evaluate<T: Scalar, R: Rng + ?Sized>(
    model: &GenerativeModel<T>,
    ds: &FactorDataset,
    cfg: &EvalConfig,
    rng: &mut R,
) -> Result<MetricReport> {
    let embedding = model.embed_dataset(ds)?;
    let mut report = evaluate_embedding(&embedding, model.latent_dim, ds, cfg, rng)?;
    report.recon = Some(reconstruction_nll(model, ds)?);
    Ok(report)
}
