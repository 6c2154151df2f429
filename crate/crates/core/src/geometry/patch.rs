use super::image::Plane;
use super::shape::{Point, Shape};
use crate::error::{Error, Result};
use crate::numerics::Tensor3;

/// Patches cropped around a subset of landmarks.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchSet {
    pub patches: Vec<Tensor3>,
    pub source_indices: Vec<usize>,
    pub centers: Vec<Point>,
}

/// Upper-left pixel of the `size × size` window centered on `center`.
///
/// The center rounds to the nearest pixel `c`; the window then spans
/// `[c − size/2, c + (size − 1)/2]`, i.e. rows `c−7 ..= c+6` for size 14.
#[inline]
pub fn patch_origin(center: Point, size: usize) -> (i64, i64) {
    let half = (size / 2) as i64;
    (center.x.round() as i64 - half, center.y.round() as i64 - half)
}

/// Writes the window into `out` (length `size²`), zero-filling pixels that
/// fall outside the image.
pub fn crop_patch_into(image: &Plane, center: Point, size: usize, out: &mut [f64]) {
    debug_assert_eq!(out.len(), size * size);
    let (x0, y0) = patch_origin(center, size);
    let (w, h) = (image.width as i64, image.height as i64);
    for (r, row) in out.chunks_exact_mut(size).enumerate() {
        let y = y0 + r as i64;
        if y < 0 || y >= h {
            row.fill(0.0);
            continue;
        }
        let src = &image.data[y as usize * image.width..(y as usize + 1) * image.width];
        for (c, v) in row.iter_mut().enumerate() {
            let x = x0 + c as i64;
            *v = if x < 0 || x >= w { 0.0 } else { src[x as usize] };
        }
    }
}

pub fn crop_patches(
    image: &Plane,
    shape: &Shape,
    subset: &[usize],
    size: usize,
) -> Result<PatchSet> {
    if let Some(&bad) = subset.iter().find(|&&i| i >= shape.len()) {
        return Err(Error::config(format!(
            "patch index {bad} out of range for {} landmarks",
            shape.len()
        )));
    }
    let mut patches = Vec::with_capacity(subset.len());
    let mut centers = Vec::with_capacity(subset.len());
    for &i in subset {
        let center = shape.points[i];
        let mut data = vec![0.0; size * size];
        crop_patch_into(image, center, size, &mut data);
        patches.push(Tensor3::new(size, size, 1, data)?);
        centers.push(center);
    }
    Ok(PatchSet {
        patches,
        source_indices: subset.to_vec(),
        centers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> Plane {
        Plane {
            width: w,
            height: h,
            data: (0..w * h).map(|i| 1.0 + i as f64).collect(),
        }
    }

    fn single(x: f64, y: f64) -> Shape {
        Shape::new(vec![Point::new(x, y), Point::new(0.0, 0.0)], 0).unwrap()
    }

    #[test]
    fn constant_image_gives_constant_patch() {
        let img = Plane::filled(64, 64, 0.25);
        let ps = crop_patches(&img, &single(32.0, 32.0), &[0], 14).unwrap();
        assert!(ps.patches[0].data.iter().all(|&v| v == 0.25));
    }

    #[test]
    fn corner_landmark_zero_fills_upper_left() {
        let img = Plane::filled(64, 64, 1.0);
        let ps = crop_patches(&img, &single(0.0, 0.0), &[0], 14).unwrap();
        let p = &ps.patches[0];
        for r in 0..14 {
            for c in 0..14 {
                let want = if r < 7 || c < 7 { 0.0 } else { 1.0 };
                assert_eq!(p.at(r, c, 0), want, "({r},{c})");
            }
        }
    }

    #[test]
    fn window_bounds_follow_rounding_rule() {
        let img = ramp(200, 120);
        let ps = crop_patches(&img, &single(100.6, 50.2), &[0], 14).unwrap();
        let p = &ps.patches[0];
        // center rounds to (101, 50): rows 43..=56, cols 94..=107
        assert_eq!(p.at(0, 0, 0), img.get(94, 43));
        assert_eq!(p.at(13, 13, 0), img.get(107, 56));
        assert_eq!(patch_origin(Point::new(100.6, 50.2), 14), (94, 43));
    }

    #[test]
    fn translation_consistency() {
        let img = ramp(40, 40);
        let (dx, dy) = (5usize, 3usize);
        let mut shifted = Plane::filled(40 + dx, 40 + dy, 0.0);
        for y in 0..40 {
            for x in 0..40 {
                shifted.data[(y + dy) * shifted.width + x + dx] = img.get(x, y);
            }
        }
        let s = single(20.3, 17.8);
        let a = crop_patches(&img, &s, &[0], 14).unwrap();
        let b = crop_patches(&shifted, &s.translated(dx as f64, dy as f64), &[0], 14).unwrap();
        assert_eq!(a.patches, b.patches);
    }

    #[test]
    fn index_out_of_range_is_error() {
        let img = Plane::filled(8, 8, 0.0);
        assert!(crop_patches(&img, &single(1.0, 1.0), &[2], 4).is_err());
    }
}
