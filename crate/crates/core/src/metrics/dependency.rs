//! Representation container and the factor-dependency metrics: WDG, MIG and
//! Modularity.

use super::info::{discretize, entropy, mutual_information};
use super::wasserstein::w1_sorted_cdf;
use crate::data::FactorDataset;
use crate::error::{shape_err, Error, Result};

/// `N x d` latent means aligned with an `N x K` factor table.
#[derive(Clone, Debug, PartialEq)]
pub struct Representation {
    pub codes: Vec<f64>,
    pub rows: usize,
    pub dim: usize,
    pub factors: Vec<u16>,
    pub cardinalities: Vec<usize>,
    /// Per-dimension standard deviation over the rows (1 for constant
    /// dimensions).
    pub scale: Vec<f64>,
}

fn population_std(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = v.clone().count() as f64;
    let mean = v.clone().sum::<f64>() / n;
    (v.map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

impl Representation {
    pub fn new(codes: Vec<f64>, dim: usize, factors: Vec<u16>, cardinalities: Vec<usize>) -> Result<Self> {
        if dim == 0 || codes.is_empty() || !codes.len().is_multiple_of(dim) {
            return Err(shape_err("representation", format!("{} codes, d = {dim}", codes.len())));
        }
        let rows = codes.len() / dim;
        if cardinalities.is_empty() || factors.len() != rows * cardinalities.len() {
            return Err(shape_err(
                "representation",
                format!("{} factor entries for {rows} rows", factors.len()),
            ));
        }
        if codes.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                op: "representation".into(),
            });
        }
        let scale = (0..dim)
            .map(|i| {
                let s = population_std((0..rows).map(|r| codes[r * dim + i]));
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Representation {
            codes,
            rows,
            dim,
            factors,
            cardinalities,
            scale,
        })
    }

    /// Selects `rows` (repeats allowed) out of a full-dataset embedding.
    pub fn from_embedding(embedding: &[f64], dim: usize, ds: &FactorDataset, rows: &[usize]) -> Result<Self> {
        if embedding.len() != ds.len() * dim {
            return Err(shape_err(
                "representation",
                format!(
                    "embedding of {} values for {} rows, d = {dim}",
                    embedding.len(),
                    ds.len()
                ),
            ));
        }
        let codes = rows
            .iter()
            .flat_map(|&r| embedding[r * dim..(r + 1) * dim].iter().copied())
            .collect();
        let factors = rows.iter().flat_map(|&r| ds.factor_row(r).iter().copied()).collect();
        Self::new(codes, dim, factors, ds.cardinalities.clone())
    }

    pub fn num_factors(&self) -> usize {
        self.cardinalities.len()
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.codes[r * self.dim + i]).collect()
    }

    /// Column divided by its standard deviation.
    pub fn normalized_column(&self, i: usize) -> Vec<f64> {
        (0..self.rows)
            .map(|r| self.codes[r * self.dim + i] / self.scale[i])
            .collect()
    }

    pub fn factor_column(&self, k: usize) -> Vec<usize> {
        let kk = self.num_factors();
        (0..self.rows).map(|r| self.factors[r * kk + k] as usize).collect()
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Frequency-weighted mean over the values of factor `k` of the W1 distance
/// between the conditional and marginal distributions of a (normalized)
/// column.
fn dependency_of(column: &[f64], marginal_sorted: &[f64], labels: &[usize], card: usize, k: usize) -> Result<f64> {
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); card];
    for (&z, &v) in column.iter().zip(labels) {
        groups[v].push(z);
    }
    let n = column.len() as f64;
    let mut total = 0.0;
    for (v, g) in groups.into_iter().enumerate() {
        if g.is_empty() {
            return Err(Error::EmptyFactorValue { factor: k, value: v });
        }
        let w = g.len() as f64 / n;
        total += w * w1_sorted_cdf(&sorted(g), marginal_sorted);
    }
    Ok(total)
}

/// Wasserstein dependency between latent dimension `i` and factor `k`.
pub fn wasserstein_dependency(rep: &Representation, i: usize, k: usize) -> Result<f64> {
    let col = rep.normalized_column(i);
    let marginal = sorted(col.clone());
    dependency_of(&col, &marginal, &rep.factor_column(k), rep.cardinalities[k], k)
}

/// `K x d` matrix of Wasserstein dependencies, row-major.
pub fn dependency_matrix(rep: &Representation) -> Result<Vec<f64>> {
    let (d, kk) = (rep.dim, rep.num_factors());
    let labels: Vec<Vec<usize>> = (0..kk).map(|k| rep.factor_column(k)).collect();
    let mut out = vec![0.0; kk * d];
    for i in 0..d {
        let col = rep.normalized_column(i);
        let marginal = sorted(col.clone());
        for k in 0..kk {
            out[k * d + i] = dependency_of(&col, &marginal, &labels[k], rep.cardinalities[k], k)?;
        }
    }
    Ok(out)
}

/// Highest minus second-highest entry; the argmax is the lowest index among
/// ties, so duplicated maxima give a gap of zero.
pub(crate) fn top_gap(row: &[f64]) -> f64 {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    let second = row
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    row[best] - second
}

/// Mean over factors of the gap between the two largest dependencies in a
/// `K x d` dependency matrix.
pub fn wdg_from_matrix(matrix: &[f64], num_factors: usize, dim: usize) -> f64 {
    matrix.chunks(dim).take(num_factors).map(top_gap).sum::<f64>() / num_factors as f64
}

pub fn wdg(rep: &Representation) -> Result<f64> {
    if rep.dim < 2 {
        return Err(Error::InvalidArgument(
            "wdg needs at least two latent dimensions".into(),
        ));
    }
    Ok(wdg_from_matrix(&dependency_matrix(rep)?, rep.num_factors(), rep.dim))
}

/// `d x K` histogram mutual information between binned latents and factors.
pub fn mi_matrix(rep: &Representation, bins: usize) -> Vec<f64> {
    let kk = rep.num_factors();
    let labels: Vec<Vec<usize>> = (0..kk).map(|k| rep.factor_column(k)).collect();
    let mut out = Vec::with_capacity(rep.dim * kk);
    for i in 0..rep.dim {
        let binned = discretize(&rep.column(i), bins);
        out.extend(labels.iter().map(|l| mutual_information(&binned, l)));
    }
    out
}

/// Mutual information gap. Factors with zero entropy in the sample carry no
/// information to split and are left out of the average.
pub fn mig(rep: &Representation, bins: usize) -> Result<f64> {
    if rep.dim < 2 {
        return Err(Error::InvalidArgument(
            "mig needs at least two latent dimensions".into(),
        ));
    }
    let kk = rep.num_factors();
    let mi = mi_matrix(rep, bins);
    let mut total = 0.0;
    let mut used = 0;
    for k in 0..kk {
        let h = entropy(&rep.factor_column(k));
        if h <= 0.0 {
            continue;
        }
        let col: Vec<f64> = (0..rep.dim).map(|i| mi[i * kk + k]).collect();
        total += top_gap(&col) / h;
        used += 1;
    }
    if used == 0 {
        return Err(Error::InvalidArgument("every factor is constant in the sample".into()));
    }
    Ok(total / used as f64)
}

/// Modularity: mean over dimensions of `1 - delta_i` with
/// `delta_i = sum_{k != k*} m_ik^2 / (m_ik*^2 (K - 1))`.
pub fn modularity(rep: &Representation, bins: usize) -> Result<f64> {
    let kk = rep.num_factors();
    if kk < 2 {
        return Err(Error::InvalidArgument("modularity needs at least two factors".into()));
    }
    let mi = mi_matrix(rep, bins);
    let score: f64 = mi
        .chunks(kk)
        .map(|row| {
            let mut best = 0;
            for (k, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = k;
                }
            }
            let top = row[best];
            if top <= 0.0 {
                return 1.0;
            }
            let delta: f64 = row
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != best)
                .map(|(_, &m)| m * m)
                .sum::<f64>()
                / (top * top * (kk - 1) as f64);
            1.0 - delta
        })
        .sum();
    Ok((score / rep.dim as f64).max(0.0))
}
