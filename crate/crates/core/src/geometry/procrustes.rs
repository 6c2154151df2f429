use super::shape::{Point, Shape};
use super::transform::SimilarityTransform;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Alignment {
    /// Maps the input shape onto the reference.
    pub transform: SimilarityTransform,
    pub aligned: Shape,
    /// RMS point distance between `aligned` and the reference.
    pub residual: f64,
}

/// Least-squares similarity alignment of `shape` onto `reference`.
///
/// Closed form for 2-D: with both shapes centered, the optimal rotation is
/// `atan2(Σ x×r, Σ x·r)` and the optimal scale `|Σ x·r + i Σ x×r| / Σ|x|²`.
pub fn procrustes_align(shape: &Shape, reference: &Shape) -> Result<Alignment> {
    if shape.len() != reference.len() {
        return Err(Error::config(format!(
            "cannot align {} landmarks to {}",
            shape.len(),
            reference.len()
        )));
    }
    let cs = shape.centroid();
    let cr = reference.centroid();
    let (mut dot, mut cross, mut norm_s, mut norm_r) = (0.0, 0.0, 0.0, 0.0);
    for (p, r) in shape.points.iter().zip(&reference.points) {
        let (sx, sy) = (p.x - cs.x, p.y - cs.y);
        let (rx, ry) = (r.x - cr.x, r.y - cr.y);
        dot += sx * rx + sy * ry;
        cross += sx * ry - sy * rx;
        norm_s += sx * sx + sy * sy;
        norm_r += rx * rx + ry * ry;
    }
    if norm_r <= 0.0 {
        return Err(Error::Domain(
            "Procrustes reference has zero centered norm".into(),
        ));
    }
    if norm_s <= 0.0 {
        return Err(Error::Domain("Procrustes input has zero centered norm".into()));
    }
    let rotation = cross.atan2(dot);
    let scale = dot.hypot(cross) / norm_s;
    let about_origin = SimilarityTransform::new(scale, rotation, Point::default());
    let moved = about_origin.apply(cs);
    let transform = SimilarityTransform::new(
        scale,
        rotation,
        Point::new(cr.x - moved.x, cr.y - moved.y),
    );
    let aligned = transform.apply_shape(shape);
    let sq: f64 = aligned
        .points
        .iter()
        .zip(&reference.points)
        .map(|(a, r)| (a.x - r.x).powi(2) + (a.y - r.y).powi(2))
        .sum();
    Ok(Alignment {
        transform,
        aligned: Shape {
            frame: reference.frame,
            ..aligned
        },
        residual: (sq / shape.len() as f64).sqrt(),
    })
}

/// Generalized Procrustes mean after a fixed number of align-and-average
/// rounds. The result is centered at the origin with unit centroid size and
/// keeps the orientation of the first (canonicalized) shape.
pub fn mean_shape(shapes: &[Shape], iters: usize) -> Result<Shape> {
    let first = shapes
        .first()
        .ok_or_else(|| Error::Usage("mean shape of an empty set".into()))?;
    let n = first.len();
    if shapes.iter().any(|s| s.len() != n) {
        return Err(Error::config("shapes have differing landmark counts"));
    }
    let anchor = first.canonicalized()?;
    let mut mean = anchor.clone();
    for _ in 0..iters {
        let mut acc = vec![Point::default(); n];
        for s in shapes {
            let a = procrustes_align(s, &mean)?;
            for (dst, p) in acc.iter_mut().zip(&a.aligned.points) {
                dst.x += p.x;
                dst.y += p.y;
            }
        }
        let m = shapes.len() as f64;
        let avg = Shape {
            points: acc.into_iter().map(|p| Point::new(p.x / m, p.y / m)).collect(),
            frame: 0,
        };
        // Pin rotation to the anchor so repeated rounds do not drift.
        let aligned = procrustes_align(&avg, &anchor)?.aligned;
        mean = aligned.canonicalized()?;
    }
    Ok(Shape { frame: 0, ..mean })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::PI;

    fn template() -> Shape {
        Shape::new(
            vec![
                Point::new(0.0, 0.0),
                Point::new(4.0, 0.5),
                Point::new(5.0, 3.0),
                Point::new(1.5, 4.0),
                Point::new(-1.0, 2.0),
            ],
            0,
        )
        .unwrap()
    }

    #[test]
    fn identical_shapes_give_identity() {
        let t = template();
        let a = procrustes_align(&t, &t).unwrap();
        assert!((a.transform.scale - 1.0).abs() < 1e-12);
        assert!(a.transform.rotation.abs() < 1e-12);
        assert!(a.transform.translation.dist(Point::default()) < 1e-12);
        assert!(a.residual < 1e-12);
    }

    #[test]
    fn recovers_known_similarity() {
        let reference = template();
        // shape = reference rotated by −30° and scaled ×2, then shifted
        let forward = SimilarityTransform::new(2.0, -PI / 6.0, Point::new(7.0, -3.0));
        let shape = forward.apply_shape(&reference);
        let a = procrustes_align(&shape, &reference).unwrap();
        assert!((a.transform.rotation - PI / 6.0).abs() < 1e-12);
        assert!((a.transform.scale - 0.5).abs() < 1e-12);
        assert!(a.residual < 1e-9);
    }

    #[test]
    fn degenerate_reference_is_domain_error() {
        let flat = Shape::new(vec![Point::new(1.0, 1.0); 5], 0).unwrap();
        assert!(matches!(
            procrustes_align(&template(), &flat),
            Err(Error::Domain(_))
        ));
    }

    /// Direct least squares over the parameter vector (a, b, tx, ty) of
    /// p ↦ [[a, −b], [b, a]] p + t, solved through the 4×4 normal equations.
    fn least_squares_rms(shape: &Shape, reference: &Shape) -> f64 {
        let mut ata = nalgebra::Matrix4::<f64>::zeros();
        let mut atb = nalgebra::Vector4::<f64>::zeros();
        for (p, r) in shape.points.iter().zip(&reference.points) {
            let rows = [
                (nalgebra::Vector4::new(p.x, -p.y, 1.0, 0.0), r.x),
                (nalgebra::Vector4::new(p.y, p.x, 0.0, 1.0), r.y),
            ];
            for (row, target) in rows {
                ata += row * row.transpose();
                atb += row * target;
            }
        }
        let sol = ata.lu().solve(&atb).unwrap();
        let sq: f64 = shape
            .points
            .iter()
            .zip(&reference.points)
            .map(|(p, r)| {
                let x = sol[0] * p.x - sol[1] * p.y + sol[2];
                let y = sol[1] * p.x + sol[0] * p.y + sol[3];
                (x - r.x).powi(2) + (y - r.y).powi(2)
            })
            .sum();
        (sq / shape.len() as f64).sqrt()
    }

    #[test]
    fn noisy_residual_matches_least_squares_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 0.2).unwrap();
        let reference = template();
        for _ in 0..20 {
            let shape = Shape::new(
                reference
                    .points
                    .iter()
                    .map(|p| Point::new(p.x + noise.sample(&mut rng), p.y + noise.sample(&mut rng)))
                    .collect(),
                0,
            )
            .unwrap();
            let a = procrustes_align(&shape, &reference).unwrap();
            let want = least_squares_rms(&shape, &reference);
            assert!((a.residual - want).abs() < 1e-10, "{} vs {want}", a.residual);
        }
    }

    #[test]
    fn residual_invariant_to_pre_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let reference = template();
        let shape = Shape::new(
            reference
                .points
                .iter()
                .map(|p| Point::new(p.x + rng.random_range(-0.3..0.3), p.y))
                .collect(),
            0,
        )
        .unwrap();
        let base = procrustes_align(&shape, &reference).unwrap().residual;
        for _ in 0..10 {
            let t = SimilarityTransform::new(
                rng.random_range(0.2..5.0),
                rng.random_range(-PI..PI),
                Point::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)),
            );
            let r = procrustes_align(&t.apply_shape(&shape), &reference)
                .unwrap()
                .residual;
            assert!((r - base).abs() < 1e-9);
        }
    }

    #[test]
    fn mean_of_single_shape_is_canonical_copy() {
        let t = template();
        let m = mean_shape(std::slice::from_ref(&t), 5).unwrap();
        let want = t.canonicalized().unwrap();
        for (a, b) in m.points.iter().zip(&want.points) {
            assert!(a.dist(*b) < 1e-12);
        }
    }

    #[test]
    fn mean_of_shape_and_rotated_copy_is_congruent() {
        let t = template();
        let r = SimilarityTransform::new(1.3, 0.9, Point::new(2.0, 2.0)).apply_shape(&t);
        let m = mean_shape(&[t.clone(), r.clone()], 10).unwrap();
        assert!(procrustes_align(&t, &m).unwrap().residual < 1e-9);
        assert!(procrustes_align(&r, &m).unwrap().residual < 1e-9);
    }

    #[test]
    fn mean_of_noisy_copies_approaches_template() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let t = template();
        let sigma = 0.05;
        let noise = Normal::new(0.0, sigma).unwrap();
        let shapes: Vec<Shape> = (0..100)
            .map(|_| {
                let pose = SimilarityTransform::new(
                    rng.random_range(0.5..2.0),
                    rng.random_range(-1.0..1.0),
                    Point::new(rng.random_range(-9.0..9.0), rng.random_range(-9.0..9.0)),
                );
                let noisy = Shape::new(
                    t.points
                        .iter()
                        .map(|p| {
                            Point::new(p.x + noise.sample(&mut rng), p.y + noise.sample(&mut rng))
                        })
                        .collect(),
                    0,
                )
                .unwrap();
                pose.apply_shape(&noisy)
            })
            .collect();
        let m = mean_shape(&shapes, 10).unwrap();
        let canonical = t.canonicalized().unwrap();
        let rel_sigma = sigma / t.centroid_size();
        let rms = procrustes_align(&m, &canonical).unwrap().residual;
        // three standard errors of a 100-sample mean, per coordinate
        assert!(rms < 3.0 * rel_sigma / 10.0, "{rms} vs {rel_sigma}");
    }
}
