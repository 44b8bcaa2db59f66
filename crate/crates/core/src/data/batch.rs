use rand::seq::index;
use rand::Rng;

use super::FactorDataset;
use crate::autodiff::{Graph, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Images as a `B x (H*W*C)` matrix of `pixel / 255` values.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch<T> {
    pub x: Vec<T>,
    pub rows: usize,
    pub cols: usize,
    /// Source row of each batch row.
    pub indices: Vec<usize>,
    pub factors: Option<Vec<u16>>,
    /// Set when the candidate set was smaller than `B` and rows repeat.
    pub with_replacement: bool,
}

impl<T: Scalar> Batch<T> {
    pub fn from_rows(ds: &FactorDataset, indices: Vec<usize>, with_factors: bool) -> Self {
        let cols = ds.image_size();
        let mut x = Vec::with_capacity(indices.len() * cols);
        for &r in &indices {
            x.extend(ds.image(r).iter().map(|&p| T::lit(p as f64 / 255.0)));
        }
        let factors = with_factors.then(|| indices.iter().flat_map(|&r| ds.factor_row(r).iter().copied()).collect());
        Batch {
            x,
            rows: indices.len(),
            cols,
            indices,
            factors,
            with_replacement: false,
        }
    }

    pub fn tensor(&self, graph: &Graph<T>) -> Result<Tensor<T>> {
        graph.constant(self.x.clone(), &[self.rows, self.cols])
    }
}

/// Uniform sample of `b` distinct rows.
pub fn sample_batch<T: Scalar, R: Rng + ?Sized>(ds: &FactorDataset, b: usize, rng: &mut R) -> Result<Batch<T>> {
    let n = ds.len();
    if b == 0 || b > n {
        return Err(Error::InvalidArgument(format!(
            "batch size {b} for a dataset of {n} rows"
        )));
    }
    let rows = index::sample(rng, n, b).into_vec();
    Ok(Batch::from_rows(ds, rows, true))
}

/// Uniform sample of rows whose factor `k` equals `value`. Falls back to
/// sampling with replacement (and flags it) when fewer than `b` rows qualify.
pub fn sample_fixed_factor_batch<T: Scalar, R: Rng + ?Sized>(
    ds: &FactorDataset,
    k: usize,
    value: usize,
    b: usize,
    rng: &mut R,
) -> Result<Batch<T>> {
    if k >= ds.num_factors() || value >= ds.cardinalities[k] {
        return Err(Error::InvalidArgument(format!(
            "factor {k} value {value} out of range for cardinalities {:?}",
            ds.cardinalities
        )));
    }
    if b == 0 {
        return Err(Error::InvalidArgument("batch size 0".into()));
    }
    let candidates = ds.rows_with(k, value);
    if candidates.is_empty() {
        return Err(Error::EmptyFactorValue { factor: k, value });
    }
    let (rows, replaced) = if candidates.len() >= b {
        let picks = index::sample(rng, candidates.len(), b);
        (picks.iter().map(|i| candidates[i]).collect(), false)
    } else {
        let rows = (0..b)
            .map(|_| candidates[rng.random_range(0..candidates.len())])
            .collect();
        (rows, true)
    };
    let mut batch = Batch::from_rows(ds, rows, true);
    batch.with_replacement = replaced;
    Ok(batch)
}
