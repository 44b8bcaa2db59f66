use crate::error::{Error, Result};

/// 1-based ranks with ties receiving the average of their positions.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        return Err(Error::ZeroRankVariance);
    }
    Ok(cov / (va * vb).sqrt())
}

/// Spearman's rho: Pearson correlation of average ranks.
pub fn rank_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "rank correlation needs equal lengths of at least 3, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    pearson(&average_ranks(a), &average_ranks(b))
}

/// Symmetric `m x m` Spearman matrix (row-major) over metric columns.
pub fn rank_correlation_matrix(columns: &[Vec<f64>]) -> Result<Vec<f64>> {
    let m = columns.len();
    let mut out = vec![1.0; m * m];
    for i in 0..m {
        for j in i + 1..m {
            let r = rank_correlation(&columns[i], &columns[j])?;
            out[i * m + j] = r;
            out[j * m + i] = r;
        }
    }
    // validates single columns too (degenerate lengths, zero variance)
    for c in columns {
        rank_correlation(c, c)?;
    }
    Ok(out)
}
