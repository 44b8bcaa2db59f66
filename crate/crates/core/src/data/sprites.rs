use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{factor_grid, FactorDataset};
use crate::error::{Error, Result};

pub const SPRITE_SHAPES: [&str; 3] = ["square", "disc", "cross"];

const SCALES: usize = 4;
const POSITIONS: usize = 8;
/// Half extents per scale; a sprite covers `2 * h + 1` pixels per side.
const HALF_EXTENTS: [i64; SCALES] = [1, 2, 3, 4];

fn covers(shape: usize, h: i64, dx: i64, dy: i64) -> bool {
    if dx.abs() > h || dy.abs() > h {
        return false;
    }
    match shape {
        0 => true,
        1 => dx * dx + dy * dy <= h * h,
        _ => dx.abs() == dy.abs(),
    }
}

/// Sprite centers along an axis of length `len`, strictly increasing and
/// clipping-free for the largest scale.
fn centers(len: usize) -> Vec<i64> {
    let hmax = HALF_EXTENTS[SCALES - 1];
    let span = len as i64 - 1 - 2 * hmax;
    (0..POSITIONS as i64)
        .map(|p| hmax + (p * span + (POSITIONS as i64 - 1) / 2) / (POSITIONS as i64 - 1))
        .collect()
}

/// Miniature dSprites analog: shape (3) x scale (4) x posX (8) x posY (8)
/// grayscale sprites, 768 images.
///
/// The seed only picks each shape's foreground intensity, so the factor table
/// is seed-independent and every sprite is a pure translation across
/// positions.
pub fn gen_toysprites(seed: u64, height: usize, width: usize) -> Result<FactorDataset> {
    if height < 8 || width < 8 {
        return Err(Error::InvalidArgument(format!(
            "canvas {height}x{width} is below the 8x8 minimum"
        )));
    }
    let need = 2 * HALF_EXTENTS[SCALES - 1] as usize + POSITIONS;
    if height < need || width < need {
        return Err(Error::InvalidArgument(format!(
            "canvas {height}x{width} too small for the largest sprite over {POSITIONS} \
             positions (needs {need}x{need})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let intensity: Vec<u8> = (0..SPRITE_SHAPES.len()).map(|_| rng.random_range(160..=255)).collect();

    let cardinalities = vec![SPRITE_SHAPES.len(), SCALES, POSITIONS, POSITIONS];
    let factors = factor_grid(&cardinalities);
    let (cx, cy) = (centers(width), centers(height));
    let mut images = vec![0u8; factors.len() / 4 * height * width];
    for (img, f) in images.chunks_exact_mut(height * width).zip(factors.chunks(4)) {
        let (shape, scale) = (f[0] as usize, f[1] as usize);
        let h = HALF_EXTENTS[scale];
        let (x0, y0) = (cx[f[2] as usize], cy[f[3] as usize]);
        for dy in -h..=h {
            for dx in -h..=h {
                if covers(shape, h, dx, dy) {
                    let (x, y) = ((x0 + dx) as usize, (y0 + dy) as usize);
                    img[y * width + x] = intensity[shape];
                }
            }
        }
    }
    Ok(FactorDataset {
        height,
        width,
        channels: 1,
        images,
        factors,
        cardinalities,
        names: ["shape", "scale", "posX", "posY"].map(String::from).to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bbox(img: &[u8], w: usize) -> (usize, usize, usize, usize) {
        let on: Vec<(usize, usize)> = img
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0)
            .map(|(i, _)| (i % w, i / w))
            .collect();
        let xs = on.iter().map(|p| p.0);
        let ys = on.iter().map(|p| p.1);
        (
            xs.clone().min().unwrap(),
            xs.max().unwrap(),
            ys.clone().min().unwrap(),
            ys.max().unwrap(),
        )
    }

    #[test]
    fn size_is_product_of_cardinalities() {
        let ds = gen_toysprites(1, 16, 16).unwrap();
        assert_eq!(ds.len(), 3 * 4 * 8 * 8);
        assert_eq!(ds.images.len(), 768 * 256);
        ds.validate().unwrap();
    }

    #[test]
    fn translation_preserves_pixel_multiset() {
        let ds = gen_toysprites(4, 16, 16).unwrap();
        for shape in 0..3 {
            for scale in 0..4 {
                let mut reference: Vec<u8> = ds.image(ds.index_of(&[shape, scale, 0, 3])).to_vec();
                reference.sort_unstable();
                for px in 1..8 {
                    let mut other = ds.image(ds.index_of(&[shape, scale, px, 3])).to_vec();
                    other.sort_unstable();
                    assert_eq!(reference, other);
                }
            }
        }
    }

    #[test]
    fn deterministic_and_factor_table_seed_independent() {
        let a = gen_toysprites(7, 16, 16).unwrap();
        let b = gen_toysprites(7, 16, 16).unwrap();
        assert_eq!(a, b);
        let c = gen_toysprites(8, 16, 16).unwrap();
        assert_eq!(a.factors, c.factors);
    }

    #[test]
    fn geometry_follows_factors() {
        let ds = gen_toysprites(0, 16, 16).unwrap();
        for shape in 0..3 {
            let mut prev_extent = 0;
            for scale in 0..4 {
                let (x0, x1, _, _) = bbox(ds.image(ds.index_of(&[shape, scale, 4, 4])), 16);
                assert!(x1 - x0 > prev_extent || scale == 0);
                prev_extent = x1 - x0;
            }
            let mut prev_center = None;
            for px in 0..8 {
                let (x0, x1, y0, y1) = bbox(ds.image(ds.index_of(&[shape, 3, px, 0])), 16);
                let center = x0 + x1;
                if let Some(p) = prev_center {
                    assert!(center > p);
                }
                prev_center = Some(center);
                assert!(x1 < 16 && y1 < 16 && y0 < 16);
            }
        }
    }

    #[test]
    fn shapes_are_distinct_at_every_scale() {
        let ds = gen_toysprites(0, 16, 16).unwrap();
        for scale in 0..4 {
            let masks: Vec<Vec<bool>> = (0..3)
                .map(|s| {
                    ds.image(ds.index_of(&[s, scale, 2, 2]))
                        .iter()
                        .map(|&p| p > 0)
                        .collect()
                })
                .collect();
            assert_ne!(masks[0], masks[1]);
            assert_ne!(masks[0], masks[2]);
            assert_ne!(masks[1], masks[2]);
        }
    }

    #[test]
    fn small_canvas_is_rejected() {
        assert!(gen_toysprites(0, 7, 16).is_err());
        assert!(gen_toysprites(0, 12, 12).is_err());
        assert!(gen_toysprites(0, 16, 24).is_ok());
    }
}
