use rand::seq::index;
use rand::Rng;

use crate::data::FactorDataset;
use crate::error::{shape_err, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FactorVaeConfig {
    /// Rows embedded to estimate the global per-dimension variance.
    pub variance_samples: usize,
    pub batch: usize,
    pub train_votes: usize,
    pub eval_votes: usize,
    /// Dimensions with global variance below this are ignored.
    pub prune_threshold: f64,
}

impl Default for FactorVaeConfig {
    fn default() -> Self {
        FactorVaeConfig {
            variance_samples: 12_800,
            batch: 64,
            train_votes: 10_000,
            eval_votes: 5_000,
            prune_threshold: 0.05,
        }
    }
}

/// Population variance of column `i` of a row-major `n x dim` block.
fn variance(codes: &[f64], dim: usize, i: usize) -> f64 {
    let n = (codes.len() / dim) as f64;
    let mean = codes.iter().skip(i).step_by(dim).sum::<f64>() / n;
    codes
        .iter()
        .skip(i)
        .step_by(dim)
        .map(|c| (c - mean).powi(2))
        .sum::<f64>()
        / n
}

/// FactorVAE disentanglement score from a full-dataset embedding
/// (`embedding[row * dim + i]`).
pub fn factor_vae_score<R: Rng + ?Sized>(
    embedding: &[f64],
    dim: usize,
    ds: &FactorDataset,
    cfg: &FactorVaeConfig,
    rng: &mut R,
) -> Result<f64> {
    if dim == 0 || embedding.len() != ds.len() * dim {
        return Err(shape_err(
            "factor score",
            format!(
                "embedding of {} values for {} rows, d = {dim}",
                embedding.len(),
                ds.len()
            ),
        ));
    }
    factor_vae_score_with(
        |rows: &[usize], _: &mut R| {
            Ok(rows
                .iter()
                .flat_map(|&r| embedding[r * dim..(r + 1) * dim].iter().copied())
                .collect())
        },
        dim,
        ds,
        cfg,
        rng,
    )
}

/// FactorVAE score with codes produced on demand by `embed(rows, rng)`
/// (`rows.len() x dim`, row-major), for stochastic representations.
///
/// Each vote fixes a random factor at a random value, draws a batch of rows
/// sharing it, and pairs the fixed factor with the surviving dimension of
/// lowest variance relative to its global variance. A majority-vote classifier
/// fitted on the training votes is scored on fresh evaluation votes.
pub fn factor_vae_score_with<R, F>(
    mut embed: F,
    dim: usize,
    ds: &FactorDataset,
    cfg: &FactorVaeConfig,
    rng: &mut R,
) -> Result<f64>
where
    R: Rng + ?Sized,
    F: FnMut(&[usize], &mut R) -> Result<Vec<f64>>,
{
    let kk = ds.num_factors();
    if kk < 2 {
        return Err(Error::InvalidArgument("factor score needs at least two factors".into()));
    }
    if dim == 0 || cfg.batch == 0 || cfg.variance_samples == 0 || cfg.eval_votes == 0 {
        return Err(Error::InvalidArgument(format!("d = {dim}, {cfg:?}")));
    }
    let n = ds.len();
    let sample: Vec<usize> = (0..cfg.variance_samples).map(|_| rng.random_range(0..n)).collect();
    let codes = embed(&sample, rng)?;
    if codes.len() != sample.len() * dim {
        return Err(shape_err(
            "factor score",
            format!("{} codes for {} rows", codes.len(), sample.len()),
        ));
    }
    let global: Vec<f64> = (0..dim).map(|i| variance(&codes, dim, i)).collect();
    let active: Vec<usize> = (0..dim).filter(|&i| global[i] >= cfg.prune_threshold).collect();
    if active.is_empty() {
        return Err(Error::AllDimensionsPruned);
    }
    let groups: Vec<Vec<Vec<usize>>> = (0..kk)
        .map(|k| (0..ds.cardinalities[k]).map(|v| ds.rows_with(k, v)).collect())
        .collect();

    let mut vote = |rng: &mut R| -> Result<(usize, usize)> {
        let k = rng.random_range(0..kk);
        let v = rng.random_range(0..ds.cardinalities[k]);
        let pool = &groups[k][v];
        let rows: Vec<usize> = if pool.len() >= cfg.batch {
            index::sample(rng, pool.len(), cfg.batch)
                .iter()
                .map(|j| pool[j])
                .collect()
        } else {
            (0..cfg.batch).map(|_| pool[rng.random_range(0..pool.len())]).collect()
        };
        let codes = embed(&rows, rng)?;
        let mut best = active[0];
        let mut best_ratio = f64::INFINITY;
        for &i in &active {
            let ratio = variance(&codes, dim, i) / global[i];
            if ratio < best_ratio {
                best_ratio = ratio;
                best = i;
            }
        }
        Ok((best, k))
    };

    let mut counts = vec![0usize; dim * kk];
    for _ in 0..cfg.train_votes {
        let (i, k) = vote(rng)?;
        counts[i * kk + k] += 1;
    }
    // majority class per dimension, lowest factor index on ties
    let class: Vec<usize> = counts
        .chunks(kk)
        .map(|c| {
            let mut best = 0;
            for (k, &v) in c.iter().enumerate() {
                if v > c[best] {
                    best = k;
                }
            }
            best
        })
        .collect();
    let mut correct = 0;
    for _ in 0..cfg.eval_votes {
        let (i, k) = vote(rng)?;
        if class[i] == k {
            correct += 1;
        }
    }
    Ok(correct as f64 / cfg.eval_votes as f64)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    use super::*;
    use crate::data::gen_linear_gaussian;

    fn dataset() -> FactorDataset {
        gen_linear_gaussian(0, &[8, 8, 8], 6, 0.0).unwrap().dataset
    }

    #[test]
    fn exact_factors_score_one() {
        let ds = dataset();
        let emb: Vec<f64> = ds.factors.iter().map(|&v| v as f64 / 7.0).collect();
        let s = factor_vae_score(
            &emb,
            3,
            &ds,
            &FactorVaeConfig::default(),
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap();
        assert_eq!(s, 1.0);
    }

    #[test]
    fn noise_scores_at_chance() {
        let ds = dataset();
        let noise = |rows: &[usize], rng: &mut ChaCha8Rng| {
            Ok((0..rows.len() * 5)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect())
        };
        let cfg = FactorVaeConfig::default();
        let s = factor_vae_score_with(noise, 5, &ds, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let p: f64 = 1.0 / 3.0;
        let sigma = (p * (1.0 - p) / 5000.0).sqrt();
        assert!((s - p).abs() < 3.0 * sigma, "{s}");
    }

    #[test]
    fn collapsed_dimensions_are_pruned() {
        let ds = dataset();
        let emb = vec![0.01; ds.len() * 2];
        let r = factor_vae_score(
            &emb,
            2,
            &ds,
            &FactorVaeConfig::default(),
            &mut ChaCha8Rng::seed_from_u64(0),
        );
        assert!(matches!(r, Err(Error::AllDimensionsPruned)));
    }

    #[test]
    fn single_dimension_is_bounded_by_majority_frequency() {
        let ds = gen_linear_gaussian(0, &[8, 8], 4, 0.0).unwrap().dataset;
        let emb: Vec<f64> = ds.factors.chunks(2).map(|f| f[0] as f64).collect();
        let cfg = FactorVaeConfig::default();
        let s = factor_vae_score(&emb, 1, &ds, &cfg, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        // one dimension means one predicted class; K = 2 factors drawn evenly
        assert!(s <= 0.5 + 3.0 * (0.25f64 / 5000.0).sqrt());
    }

    #[test]
    fn seeded_calls_agree() {
        let ds = dataset();
        let emb: Vec<f64> = ds.factors.iter().map(|&v| (v as f64).sin()).collect();
        let cfg = FactorVaeConfig {
            train_votes: 500,
            eval_votes: 300,
            ..Default::default()
        };
        let a = factor_vae_score(&emb, 3, &ds, &cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = factor_vae_score(&emb, 3, &ds, &cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
