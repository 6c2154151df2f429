use super::shape::{Point, Shape};

/// `p ↦ scale · R(rotation) · p + translation`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimilarityTransform {
    pub scale: f64,
    /// Counter-clockwise angle in radians (x right, y down in image space).
    pub rotation: f64,
    pub translation: Point,
}

impl Default for SimilarityTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl SimilarityTransform {
    pub const fn identity() -> Self {
        Self {
            scale: 1.0,
            rotation: 0.0,
            translation: Point::new(0.0, 0.0),
        }
    }

    pub fn new(scale: f64, rotation: f64, translation: Point) -> Self {
        Self {
            scale,
            rotation,
            translation,
        }
    }

    #[inline]
    pub fn apply(&self, p: Point) -> Point {
        let (s, c) = self.rotation.sin_cos();
        Point::new(
            self.scale * (c * p.x - s * p.y) + self.translation.x,
            self.scale * (s * p.x + c * p.y) + self.translation.y,
        )
    }

    pub fn apply_shape(&self, shape: &Shape) -> Shape {
        Shape {
            points: shape.points.iter().map(|&p| self.apply(p)).collect(),
            frame: shape.frame,
        }
    }

    pub fn inverse(&self) -> Self {
        let inv = Self::new(1.0 / self.scale, -self.rotation, Point::default());
        let t = inv.apply(self.translation);
        Self {
            translation: Point::new(-t.x, -t.y),
            ..inv
        }
    }

    /// `self ∘ first`: applies `first`, then `self`.
    pub fn after(&self, first: &SimilarityTransform) -> Self {
        let t = self.apply(first.translation);
        Self::new(self.scale * first.scale, self.rotation + first.rotation, t)
    }
}
