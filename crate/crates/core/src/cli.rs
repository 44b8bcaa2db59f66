//! The `wtc` command-line surface. Every command is deterministic given
//! `--seed`; without it a seed is drawn from entropy and printed.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{gen_linear_gaussian, gen_toysprites, load_fds, save_fds, FactorDataset};
use crate::error::{Error, Result};
use crate::io::{
    append_report, read_report, summarize, write_pgm, write_rank_corr, write_summary, write_sweep_report, Checkpoint,
    ReportRow, RunKey, TrainLogWriter, RANK_METRICS,
};
use crate::metrics::{evaluate, rank_correlation_matrix, EvalConfig};
use crate::models::ModelKind;
use crate::train::{train_with, TrainConfig, Trainer};

const CSV_HELP: &str = "\
CSV schemas:
  train log   step,recon,kl,wtc_gap,prior_gap,critic_f,critic_g
  report      model,gamma,beta,seed,steps,wdg,factorvae,mig,modularity,recon,wall_s
              (each run adds a mean row and a `<model>_std` row of standard deviations)
  sweep       report columns plus status (`ok` or `error: <message>`)
  summary     model,gamma,runs,{wdg,factorvae,mig,modularity,recon}_{mean,std}
  rank-corr   metric,factorvae,mig,wdg,modularity";

#[derive(Parser, Debug)]
#[command(name = "wtc", version, about = "Wasserstein total correlation autoencoders", after_help = CSV_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a factor dataset and write it as FDS.
    GenData(GenDataArgs),
    /// Train one model; writes `checkpoint.wtck` and `train_log.csv` into --out.
    Train(TrainArgs),
    /// Evaluate a checkpoint and append a mean row and a std row to --out.
    Eval(EvalArgs),
    /// Train and evaluate a gamma x seed grid; writes report.csv and summary.csv.
    Sweep(SweepArgs),
    /// Decode a sweep of one latent dimension around an anchor image as PGM.
    Traverse(TraverseArgs),
    /// Spearman matrix of the four metrics across report rows.
    RankCorr(RankCorrArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DatasetName {
    ToySprites,
    LinearGaussian,
}

#[derive(Args, Debug)]
pub struct GenDataArgs {
    #[arg(long, value_enum)]
    pub dataset: DatasetName,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Canvas height (toy-sprites, default 16).
    #[arg(long)]
    pub height: Option<usize>,
    /// Canvas width (toy-sprites, default 16) or observation dimension
    /// (linear-gaussian, default 12).
    #[arg(long)]
    pub width: Option<usize>,
    /// Factor cardinalities for linear-gaussian.
    #[arg(long, value_delimiter = ',', default_value = "5,5,5,5")]
    pub cardinalities: Vec<usize>,
    /// Observation noise for linear-gaussian.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    #[arg(long, value_parser = parse_kind)]
    pub model: ModelKind,
    /// KL weight (VAE family) or prior-critic weight (WAE family).
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 20_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
    #[arg(long, default_value_t = 1)]
    pub critic_steps: usize,
    /// Gradient-penalty coefficient.
    #[arg(long, default_value_t = 10.0)]
    pub lambda: f64,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    /// Rows sampled per evaluation run.
    #[arg(long, default_value_t = 12_800)]
    pub samples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub gammas: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub seeds: Vec<u64>,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TraverseArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub dim: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub min: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub max: f64,
    #[arg(long)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub anchor: usize,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RankCorrArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub reports: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_kind(s: &str) -> std::result::Result<ModelKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn seed_or_entropy(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random();
        eprintln!("seed: {s}");
        s
    })
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData(a) => cmd_gen_data(&a).map(|_| ()),
        Command::Train(a) => cmd_train(&a).map(|_| ()),
        Command::Eval(a) => cmd_eval(&a).map(|_| ()),
        Command::Sweep(a) => cmd_sweep(&a).map(|_| ()),
        Command::Traverse(a) => cmd_traverse(&a),
        Command::RankCorr(a) => cmd_rank_corr(&a).map(|_| ()),
    }
}

pub fn cmd_gen_data(a: &GenDataArgs) -> Result<FactorDataset> {
    let seed = seed_or_entropy(a.seed);
    let ds = match a.dataset {
        DatasetName::ToySprites => gen_toysprites(seed, a.height.unwrap_or(16), a.width.unwrap_or(16))?,
        DatasetName::LinearGaussian => {
            if a.height.is_some_and(|h| h != 1) {
                return Err(Error::InvalidArgument(
                    "linear-gaussian observations have height 1".into(),
                ));
            }
            gen_linear_gaussian(seed, &a.cardinalities, a.width.unwrap_or(12), a.noise)?.dataset
        }
    };
    save_fds(&ds, &a.out)?;
    Ok(ds)
}

fn train_config(m: &ModelArgs, gamma: Option<f64>, seed: u64) -> TrainConfig<f64> {
    let mut cfg = TrainConfig::new(m.model);
    if let Some(b) = m.beta {
        cfg.beta = b;
    }
    if let Some(g) = gamma {
        cfg.gamma = g;
    }
    cfg.steps = m.steps;
    cfg.lr = m.lr;
    cfg.batch = m.batch;
    cfg.seed = seed;
    cfg.wtc.critic_steps = m.critic_steps;
    cfg.wtc.lambda = m.lambda;
    cfg
}

/// Trains with a streamed log at `dir/train_log.csv` and writes
/// `dir/checkpoint.wtck`. The log keeps every completed step on abort.
pub fn train_to_dir(cfg: TrainConfig<f64>, ds: &FactorDataset, dir: &Path) -> Result<Trainer<f64>> {
    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }
    fs::create_dir_all(dir)?;
    let mut log = TrainLogWriter::new(fs::File::create(dir.join("train_log.csv"))?)?;
    let trainer = train_with(cfg, ds, |r| log.write(r))?;
    Checkpoint::from_trainer(&trainer).save(dir.join("checkpoint.wtck"))?;
    Ok(trainer)
}

pub fn cmd_train(a: &TrainArgs) -> Result<Trainer<f64>> {
    let seed = seed_or_entropy(a.seed);
    let ds = load_fds(&a.data)?;
    train_to_dir(train_config(&a.model, a.gamma, seed), &ds, &a.out)
}

fn check_width(ck: &Checkpoint<f64>, ds: &FactorDataset) -> Result<()> {
    if ck.model.input_dim() != ds.image_size() {
        return Err(Error::InvalidArgument(format!(
            "checkpoint expects {} inputs, dataset images have {}",
            ck.model.input_dim(),
            ds.image_size()
        )));
    }
    Ok(())
}

fn run_key(cfg: &TrainConfig<f64>, steps: usize) -> RunKey {
    RunKey {
        model: cfg.kind.name().to_string(),
        gamma: cfg.gamma,
        beta: cfg.beta,
        seed: cfg.seed,
        steps,
    }
}

/// Evaluates a checkpoint; the metric stream is seeded by `seed` alone.
pub fn evaluate_checkpoint(
    ck: &Checkpoint<f64>,
    ds: &FactorDataset,
    cfg: &EvalConfig,
    seed: u64,
) -> Result<crate::metrics::MetricReport> {
    check_width(ck, ds)?;
    evaluate(&ck.model, ds, cfg, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn cmd_eval(a: &EvalArgs) -> Result<[ReportRow; 2]> {
    let seed = seed_or_entropy(a.seed);
    let ck = Checkpoint::<f64>::load(&a.ckpt)?;
    let ds = load_fds(&a.data)?;
    let cfg = EvalConfig {
        runs: a.runs,
        samples: a.samples,
        ..EvalConfig::default()
    };
    let start = Instant::now();
    let report = evaluate_checkpoint(&ck, &ds, &cfg, seed)?;
    let rows = ReportRow::pair(&run_key(&ck.config, ck.step), &report, start.elapsed().as_secs_f64());
    append_report(&a.out, &rows)?;
    Ok(rows)
}

/// Runs the grid cell by cell. A failing cell is recorded with its error in
/// the status column and the sweep moves on.
pub fn cmd_sweep(a: &SweepArgs) -> Result<Vec<(ReportRow, String)>> {
    let ds = load_fds(&a.data)?;
    fs::create_dir_all(&a.out)?;
    let eval_cfg = EvalConfig {
        runs: a.runs,
        ..EvalConfig::default()
    };
    let mut rows = Vec::new();
    for &gamma in &a.gammas {
        for &seed in &a.seeds {
            let cfg = train_config(&a.model, Some(gamma), seed);
            let key = run_key(&cfg, cfg.steps);
            let dir = a.out.join(format!("{}_g{gamma}_s{seed}", cfg.kind));
            let start = Instant::now();
            let outcome = train_to_dir(cfg, &ds, &dir)
                .and_then(|t| evaluate_checkpoint(&Checkpoint::from_trainer(&t), &ds, &eval_cfg, seed));
            let wall = start.elapsed().as_secs_f64();
            match outcome {
                Ok(report) => {
                    let [mean, std] = ReportRow::pair(&key, &report, wall);
                    eprintln!(
                        "{} gamma {gamma} seed {seed}: wdg {:.4} factorvae {:.4} recon {:.2} ({wall:.0}s)",
                        key.model, mean.wdg, mean.factorvae, mean.recon
                    );
                    rows.push((mean, "ok".to_string()));
                    rows.push((std, "ok".to_string()));
                }
                Err(e) => {
                    eprintln!("{} gamma {gamma} seed {seed}: {e}", key.model);
                    rows.push((ReportRow::failed(&key, wall), format!("error: {e}")));
                }
            }
        }
    }
    write_sweep_report(a.out.join("report.csv"), &rows)?;
    let ok: Vec<ReportRow> = rows.iter().filter(|(_, s)| s == "ok").map(|(r, _)| r.clone()).collect();
    write_summary(a.out.join("summary.csv"), &summarize(&ok))?;
    Ok(rows)
}

/// `steps` frames side by side (`steps * W` by `H`): the anchor's posterior
/// mean with dimension `dim` swept linearly over `[min, max]`, decoded to
/// Bernoulli means.
pub fn traverse(
    ck: &Checkpoint<f64>,
    ds: &FactorDataset,
    anchor: usize,
    dim: usize,
    range: (f64, f64),
    steps: usize,
) -> Result<(usize, usize, Vec<u8>)> {
    check_width(ck, ds)?;
    let d = ck.model.latent_dim;
    if dim >= d {
        return Err(Error::InvalidArgument(format!(
            "dimension {dim} out of range for {d} latents"
        )));
    }
    if anchor >= ds.len() {
        return Err(Error::InvalidArgument(format!(
            "anchor {anchor} beyond {} images",
            ds.len()
        )));
    }
    if steps == 0 {
        return Err(Error::InvalidArgument("traversal needs at least one step".into()));
    }
    if ds.channels != 1 {
        return Err(Error::InvalidArgument("traversal writes grayscale only".into()));
    }
    let x: Vec<f64> = ds.image(anchor).iter().map(|&p| p as f64 / 255.0).collect();
    let mu = ck.model.encode_means(&x, 1)?;
    let mut z = Vec::with_capacity(steps * d);
    for k in 0..steps {
        let t = if steps == 1 { 0.0 } else { k as f64 / (steps - 1) as f64 };
        let mut row = mu.clone();
        row[dim] = range.0 + (range.1 - range.0) * t;
        z.extend(row);
    }
    let g = crate::autodiff::Graph::new();
    let bound = ck.model.bind_frozen(&g)?;
    let logits = bound.decode(&g.constant(z, &[steps, d])?)?;
    let (h, w) = (ds.height, ds.width);
    let mut grid = vec![0u8; steps * w * h];
    for (k, frame) in logits.data().chunks(h * w).enumerate() {
        for r in 0..h {
            for c in 0..w {
                let p = 1.0 / (1.0 + (-frame[r * w + c]).exp());
                grid[r * steps * w + k * w + c] = (255.0 * p).round() as u8;
            }
        }
    }
    Ok((steps * w, h, grid))
}

pub fn cmd_traverse(a: &TraverseArgs) -> Result<()> {
    let ck = Checkpoint::<f64>::load(&a.ckpt)?;
    let ds = load_fds(&a.data)?;
    let (w, h, px) = traverse(&ck, &ds, a.anchor, a.dim, (a.min, a.max), a.steps)?;
    write_pgm(&a.out, w, h, &px)
}

/// Spearman matrix over all mean rows of the given reports, in
/// [`RANK_METRICS`] order.
pub fn cmd_rank_corr(a: &RankCorrArgs) -> Result<Vec<f64>> {
    let mut rows = Vec::new();
    for p in &a.reports {
        rows.extend(read_report(p)?);
    }
    if rows.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "rank correlation needs at least 3 runs, got {}",
            rows.len()
        )));
    }
    let columns: Vec<Vec<f64>> = (0..RANK_METRICS.len())
        .map(|j| rows.iter().map(|r| r.metrics()[j]).collect())
        .collect();
    let m = rank_correlation_matrix(&columns)?;
    write_rank_corr(&a.out, &m)?;
    Ok(m)
}
