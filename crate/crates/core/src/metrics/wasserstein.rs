use crate::error::{shape_err, Error, Result};

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Wasserstein-1 between two 1D empirical measures.
///
/// Equal sizes pair sorted order statistics; otherwise the integral of
/// `|F_a - F_b|` over the merged support is evaluated exactly.
pub fn w1_empirical_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("w1 sample set"));
    }
    let (sa, sb) = (sorted(a), sorted(b));
    if sa.len() == sb.len() {
        let n = sa.len() as f64;
        return Ok(sa.iter().zip(&sb).map(|(x, y)| (x - y).abs()).sum::<f64>() / n);
    }
    Ok(w1_sorted_cdf(&sa, &sb))
}

/// CDF form of W1 for pre-sorted inputs of any sizes.
pub(crate) fn w1_sorted_cdf(sa: &[f64], sb: &[f64]) -> f64 {
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut total = 0.0;
    let mut prev = sa[0].min(sb[0]);
    while i < sa.len() || j < sb.len() {
        let x = match (sa.get(i), sb.get(j)) {
            (Some(&p), Some(&q)) => p.min(q),
            (Some(&p), None) => p,
            (None, Some(&q)) => q,
            (None, None) => unreachable!(),
        };
        total += (i as f64 / na - j as f64 / nb).abs() * (x - prev);
        while i < sa.len() && sa[i] == x {
            i += 1;
        }
        while j < sb.len() && sb[j] == x {
            j += 1;
        }
        prev = x;
    }
    total
}

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method
/// with potentials, O(n^3)). Returns `assignment[row] = col`.
pub fn min_cost_assignment(cost: &[f64], n: usize) -> Result<Vec<usize>> {
    if cost.len() != n * n {
        return Err(shape_err("assignment", format!("{} costs for {n} x {n}", cost.len())));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite {
            op: "assignment".into(),
        });
    }
    // 1-based internals: column 0 is a virtual source.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r = owner[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for c in 1..=n {
                if !used[c] {
                    let cur = cost[(r - 1) * n + (c - 1)] - u[r] - v[c];
                    if cur < minv[c] {
                        minv[c] = cur;
                        way[c] = col0;
                    }
                    if minv[c] < delta {
                        delta = minv[c];
                        col1 = c;
                    }
                }
            }
            for c in 0..=n {
                if used[c] {
                    u[owner[c]] += delta;
                    v[c] -= delta;
                } else {
                    minv[c] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            owner[col0] = owner[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for c in 1..=n {
        assignment[owner[c] - 1] = c - 1;
    }
    Ok(assignment)
}

/// Exact W1 between two equal-size empirical measures in `R^d` (rows of `x`
/// and `y`) under Euclidean cost.
pub fn exact_empirical_w1_nd(x: &[f64], y: &[f64], d: usize) -> Result<f64> {
    if d == 0 || !x.len().is_multiple_of(d) || x.len() != y.len() {
        return Err(shape_err(
            "exact w1",
            format!("{} and {} values with dimension {d}", x.len(), y.len()),
        ));
    }
    let n = x.len() / d;
    if n == 0 {
        return Err(Error::Empty("exact w1 sample set"));
    }
    let mut cost = vec![0.0; n * n];
    for i in 0..n {
        let xi = &x[i * d..(i + 1) * d];
        for j in 0..n {
            let yj = &y[j * d..(j + 1) * d];
            cost[i * n + j] = xi.iter().zip(yj).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        }
    }
    let assignment = min_cost_assignment(&cost, n)?;
    Ok(assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i * n + j])
        .sum::<f64>()
        / n as f64)
}
