use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{factor_grid, FactorDataset};
use crate::error::{Error, Result};

/// Linear-Gaussian oracle dataset: `x = A u + noise`, with `u` the factor
/// values scaled into `[0, 1]`.
///
/// `observations` keeps the real-valued `x`; `dataset` stores it quantized to
/// bytes (`pixel = round(255 * (x - offset) / range)`) in a `1 x d` image so it
/// can go through the same file format and batch pipeline as images.
#[derive(Clone, Debug)]
pub struct LinearGaussian {
    pub dataset: FactorDataset,
    /// `N * d` real observations.
    pub observations: Vec<f64>,
    /// `d * K` mixing matrix, row-major.
    pub mixing: Vec<f64>,
    pub offset: f64,
    pub range: f64,
}

/// Inverse of a small square matrix by Gauss-Jordan elimination with partial
/// pivoting. Returns `None` when (numerically) singular.
fn invert(mut a: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[pivot * n + col].abs() < 1e-10 * scale {
            return None;
        }
        for j in 0..n {
            a.swap(col * n + j, pivot * n + j);
            inv.swap(col * n + j, pivot * n + j);
        }
        let p = a[col * n + col];
        for j in 0..n {
            a[col * n + j] /= p;
            inv[col * n + j] /= p;
        }
        for i in 0..n {
            if i != col {
                let f = a[i * n + col];
                if f != 0.0 {
                    for j in 0..n {
                        a[i * n + j] -= f * a[col * n + j];
                        inv[i * n + j] -= f * inv[col * n + j];
                    }
                }
            }
        }
    }
    Some(inv)
}

fn normalized_factor(v: u16, card: usize) -> f64 {
    if card > 1 {
        v as f64 / (card - 1) as f64
    } else {
        0.0
    }
}

pub fn gen_linear_gaussian(seed: u64, cardinalities: &[usize], d: usize, noise_sigma: f64) -> Result<LinearGaussian> {
    let k = cardinalities.len();
    if k == 0 || cardinalities.contains(&0) {
        return Err(Error::InvalidArgument(format!("cardinalities {cardinalities:?}")));
    }
    if d < k {
        return Err(Error::InvalidArgument(format!(
            "observation dimension {d} below factor count {k}"
        )));
    }
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("noise sigma {noise_sigma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Redraw until A has full column rank (probability of a redraw ~ 0).
    let mixing = loop {
        let a: Vec<f64> = (0..d * k).map(|_| StandardNormal.sample(&mut rng)).collect();
        if invert(gram(&a, d, k), k).is_some() {
            break a;
        }
    };

    let factors = factor_grid(cardinalities);
    let n = factors.len() / k;
    let mut observations = Vec::with_capacity(n * d);
    for row in factors.chunks(k) {
        let u: Vec<f64> = row
            .iter()
            .zip(cardinalities)
            .map(|(&v, &c)| normalized_factor(v, c))
            .collect();
        for i in 0..d {
            let clean: f64 = (0..k).map(|j| mixing[i * k + j] * u[j]).sum();
            let noise = if noise_sigma > 0.0 {
                let e: f64 = StandardNormal.sample(&mut rng);
                noise_sigma * e
            } else {
                0.0
            };
            observations.push(clean + noise);
        }
    }
    let lo = observations.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = observations.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = if hi > lo { hi - lo } else { 1.0 };
    let images = observations
        .iter()
        .map(|&x| (255.0 * (x - lo) / range).round().clamp(0.0, 255.0) as u8)
        .collect();

    Ok(LinearGaussian {
        dataset: FactorDataset {
            height: 1,
            width: d,
            channels: 1,
            images,
            factors,
            cardinalities: cardinalities.to_vec(),
            names: (0..k).map(|j| format!("factor{j}")).collect(),
        },
        observations,
        mixing,
        offset: lo,
        range,
    })
}

/// `A^T A` for a row-major `d x k` matrix.
fn gram(a: &[f64], d: usize, k: usize) -> Vec<f64> {
    let mut g = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            g[i * k + j] = (0..d).map(|r| a[r * k + i] * a[r * k + j]).sum();
        }
    }
    g
}

impl LinearGaussian {
    pub fn num_factors(&self) -> usize {
        self.dataset.num_factors()
    }

    pub fn obs_dim(&self) -> usize {
        self.dataset.width
    }

    /// Moore-Penrose pseudo-inverse `(A^T A)^-1 A^T`, `K x d` row-major.
    pub fn pseudo_inverse(&self) -> Vec<f64> {
        let (d, k) = (self.obs_dim(), self.num_factors());
        let inv = invert(gram(&self.mixing, d, k), k).expect("full column rank by construction");
        let mut p = vec![0.0; k * d];
        for i in 0..k {
            for j in 0..d {
                p[i * d + j] = (0..k).map(|l| inv[i * k + l] * self.mixing[j * k + l]).sum();
            }
        }
        p
    }

    /// Ideal linear encoder applied to the real observations of `rows`.
    pub fn ideal_codes(&self, rows: &[usize]) -> Vec<f64> {
        let (d, k) = (self.obs_dim(), self.num_factors());
        let p = self.pseudo_inverse();
        let mut out = Vec::with_capacity(rows.len() * k);
        for &r in rows {
            let x = &self.observations[r * d..(r + 1) * d];
            for i in 0..k {
                out.push((0..d).map(|j| p[i * d + j] * x[j]).sum());
            }
        }
        out
    }

    /// Affine map from normalized pixels `p / 255` to factor codes:
    /// `codes = weight^T pixels + bias` with `weight` `d x K` row-major.
    pub fn ideal_pixel_encoder(&self) -> (Vec<f64>, Vec<f64>) {
        let (d, k) = (self.obs_dim(), self.num_factors());
        let p = self.pseudo_inverse();
        let mut weight = vec![0.0; d * k];
        for j in 0..d {
            for i in 0..k {
                weight[j * k + i] = self.range * p[i * d + j];
            }
        }
        let bias = (0..k)
            .map(|i| self.offset * (0..d).map(|j| p[i * d + j]).sum::<f64>())
            .collect();
        (weight, bias)
    }
}
