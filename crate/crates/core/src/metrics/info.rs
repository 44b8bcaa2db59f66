//! Histogram estimators: entropy, mutual information, total correlation.

use std::collections::BTreeMap;

use crate::error::{shape_err, Result};

/// Equal-width bin index of each value over the observed range. A constant
/// column lands entirely in bin 0.
pub fn discretize(values: &[f64], bins: usize) -> Vec<usize> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if bins <= 1 || !(hi > lo) {
        return vec![0; values.len()];
    }
    let width = (hi - lo) / bins as f64;
    values
        .iter()
        .map(|&v| (((v - lo) / width) as usize).min(bins - 1))
        .collect()
}

fn entropy_of_counts<'a>(counts: impl Iterator<Item = &'a usize>, n: usize) -> f64 {
    let n = n as f64;
    counts
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Plug-in entropy (nats) of discrete labels.
pub fn entropy(labels: &[usize]) -> f64 {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_default() += 1;
    }
    entropy_of_counts(counts.values(), labels.len())
}

/// Plug-in mutual information (nats) between two aligned label sequences.
pub fn mutual_information(a: &[usize], b: &[usize]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut joint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1;
    }
    let mi = entropy(a) + entropy(b) - entropy_of_counts(joint.values(), a.len());
    mi.max(0.0)
}

/// Histogram estimate of the total correlation `sum_j H(x_j) - H(x)` of
/// `n x d` samples, each coordinate binned into `bins` equal-width bins.
pub fn histogram_total_correlation(x: &[f64], d: usize, bins: usize) -> Result<f64> {
    if d == 0 || !x.len().is_multiple_of(d) || x.is_empty() {
        return Err(shape_err("total correlation", format!("{} values, d = {d}", x.len())));
    }
    let n = x.len() / d;
    let cols: Vec<Vec<usize>> = (0..d)
        .map(|j| discretize(&(0..n).map(|i| x[i * d + j]).collect::<Vec<_>>(), bins))
        .collect();
    let marginals: f64 = cols.iter().map(|c| entropy(c)).sum();
    let mut joint: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for i in 0..n {
        *joint.entry(cols.iter().map(|c| c[i]).collect()).or_default() += 1;
    }
    Ok((marginals - entropy_of_counts(joint.values(), n)).max(0.0))
}
