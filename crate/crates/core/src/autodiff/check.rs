use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Central-difference gradient of `f` at `x`, one coordinate at a time.
pub fn finite_difference_gradient<T, F>(mut f: F, x: &[T], h: T) -> Result<Vec<T>>
where
    T: Scalar,
    F: FnMut(&[T]) -> Result<T>,
{
    if !(h > T::zero()) {
        return Err(Error::InvalidArgument(format!("step h must be positive, got {h}")));
    }
    let mut probe = x.to_vec();
    let two_h = h + h;
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe)?;
            probe[i] = x[i] - h;
            let down = f(&probe)?;
            probe[i] = x[i];
            if !(up.is_finite() && down.is_finite()) {
                return Err(Error::NonFinite {
                    op: "finite_difference_gradient".into(),
                });
            }
            Ok((up - down) / two_h)
        })
        .collect()
}

/// Relative error `|a - b| / max(|a|, |b|, floor)`, the comparison used by
/// gradient checks.
pub fn relative_error<T: Scalar>(a: T, b: T, floor: T) -> T {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// `||a - b|| / max(||a||, ||b||, 1e-12)` in the Euclidean norm.
pub fn vector_relative_error<T: Scalar>(a: &[T], b: &[T]) -> T {
    let norm = |v: &mut dyn Iterator<Item = T>| v.map(|x| x * x).sum::<T>().sqrt();
    let diff = norm(&mut a.iter().zip(b).map(|(x, y)| *x - *y));
    let floor = T::lit(1e-12);
    diff / norm(&mut a.iter().copied())
        .max(norm(&mut b.iter().copied()))
        .max(floor)
}
