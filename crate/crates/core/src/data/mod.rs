//! Labeled factor datasets: procedural generators, batch sampling and the
//! FDS binary format.

mod batch;
mod fds;
mod linear;
mod sprites;

pub use batch::{sample_batch, sample_fixed_factor_batch, Batch};
pub use fds::{load_fds, read_fds, save_fds, write_fds, FDS_MAGIC};
pub use linear::{gen_linear_gaussian, LinearGaussian};
pub use sprites::{gen_toysprites, SPRITE_SHAPES};

use crate::error::{Error, Result};

/// Images with an exhaustive, row-aligned table of ground-truth factors.
///
/// Rows enumerate the factor grid lexicographically (last factor fastest), so
/// the row index of a factor combination is its mixed-radix number.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorDataset {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    /// `N * H * W * C` pixels, row-major per image.
    pub images: Vec<u8>,
    /// `N * K` factor values, row-major.
    pub factors: Vec<u16>,
    pub cardinalities: Vec<usize>,
    pub names: Vec<String>,
}

/// Lexicographic enumeration of every factor combination.
pub fn factor_grid(cardinalities: &[usize]) -> Vec<u16> {
    let n: usize = cardinalities.iter().product();
    let k = cardinalities.len();
    let mut out = Vec::with_capacity(n * k);
    let mut current = vec![0usize; k];
    for _ in 0..n {
        out.extend(current.iter().map(|&v| v as u16));
        for j in (0..k).rev() {
            current[j] += 1;
            if current[j] < cardinalities[j] {
                break;
            }
            current[j] = 0;
        }
    }
    out
}

impl FactorDataset {
    pub fn len(&self) -> usize {
        self.cardinalities.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_factors(&self) -> usize {
        self.cardinalities.len()
    }

    /// Flattened image size `H * W * C`.
    pub fn image_size(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub fn image(&self, row: usize) -> &[u8] {
        let s = self.image_size();
        &self.images[row * s..(row + 1) * s]
    }

    pub fn factor_row(&self, row: usize) -> &[u16] {
        let k = self.num_factors();
        &self.factors[row * k..(row + 1) * k]
    }

    /// Row index of a factor combination.
    pub fn index_of(&self, values: &[usize]) -> usize {
        values
            .iter()
            .zip(&self.cardinalities)
            .fold(0, |acc, (&v, &c)| acc * c + v)
    }

    /// Rows whose factor `k` equals `value`.
    pub fn rows_with(&self, k: usize, value: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&r| self.factors[r * self.num_factors() + k] as usize == value)
            .collect()
    }

    /// Checks every structural invariant: sizes, factor ranges and full
    /// factorial coverage in lexicographic order.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Format(m));
        if self.cardinalities.is_empty() || self.cardinalities.contains(&0) {
            return bad(format!("cardinalities {:?}", self.cardinalities));
        }
        if self.cardinalities.iter().any(|&c| c > u16::MAX as usize + 1) {
            return bad("cardinality exceeds u16 range".into());
        }
        if self.names.len() != self.cardinalities.len() {
            return bad(format!(
                "{} names for {} factors",
                self.names.len(),
                self.cardinalities.len()
            ));
        }
        let n = self.len();
        if self.factors.len() != n * self.num_factors() {
            return bad(format!(
                "{} factor entries, expected {}",
                self.factors.len(),
                n * self.num_factors()
            ));
        }
        if self.height == 0 || self.width == 0 || self.channels == 0 {
            return bad("zero image dimension".into());
        }
        if self.images.len() != n * self.image_size() {
            return bad(format!(
                "{} pixels, expected {}",
                self.images.len(),
                n * self.image_size()
            ));
        }
        if self.factors != factor_grid(&self.cardinalities) {
            return bad("factor table is not the exhaustive lexicographic grid".into());
        }
        Ok(())
    }
}
