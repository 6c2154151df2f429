use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Ordered landmarks in the pixel frame of one pyramid level.
///
/// Level `l + 1` coordinates are exactly twice those of level `l`.
#[derive(Clone, Debug, PartialEq)]
pub struct Shape {
    pub points: Vec<Point>,
    pub frame: usize,
}

impl Shape {
    pub fn new(points: Vec<Point>, frame: usize) -> Result<Self> {
        let shape = Self { points, frame };
        shape.validate()?;
        Ok(shape)
    }

    /// Builds a shape from interleaved `x0, y0, x1, y1, …` coordinates.
    pub fn from_flat(coords: &[f64], frame: usize) -> Result<Self> {
        if coords.len() % 2 != 0 {
            return Err(Error::config("odd number of shape coordinates"));
        }
        Self::new(
            coords
                .chunks_exact(2)
                .map(|c| Point::new(c[0], c[1]))
                .collect(),
            frame,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() < 2 {
            return Err(Error::config(format!(
                "a shape needs at least 2 landmarks, got {}",
                self.points.len()
            )));
        }
        if self
            .points
            .iter()
            .any(|p| !p.x.is_finite() || !p.y.is_finite())
        {
            return Err(Error::Domain("shape has non-finite coordinates".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn flat(&self) -> Vec<f64> {
        self.points.iter().flat_map(|p| [p.x, p.y]).collect()
    }

    pub fn centroid(&self) -> Point {
        centroid_of(self.points.iter().copied())
    }

    /// Centroid of the landmarks listed in `indices`.
    pub fn centroid_of(&self, indices: &[usize]) -> Point {
        centroid_of(indices.iter().map(|&i| self.points[i]))
    }

    /// Root of the summed squared distances to the centroid.
    pub fn centroid_size(&self) -> f64 {
        let c = self.centroid();
        self.points
            .iter()
            .map(|p| (p.x - c.x).powi(2) + (p.y - c.y).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Shape {
        Shape {
            points: self
                .points
                .iter()
                .map(|p| Point::new(p.x * factor, p.y * factor))
                .collect(),
            frame: self.frame,
        }
    }

    /// Re-expresses the shape in the pixel frame of pyramid level `frame`.
    pub fn to_frame(&self, frame: usize) -> Shape {
        let factor = 2f64.powi(frame as i32 - self.frame as i32);
        Shape {
            frame,
            ..self.scaled(factor)
        }
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Shape {
        Shape {
            points: self
                .points
                .iter()
                .map(|p| Point::new(p.x + dx, p.y + dy))
                .collect(),
            frame: self.frame,
        }
    }

    /// Centered copy with unit centroid size.
    pub fn canonicalized(&self) -> Result<Shape> {
        let size = self.centroid_size();
        if size <= 0.0 || !size.is_finite() {
            return Err(Error::Domain("shape has zero centroid size".into()));
        }
        let c = self.centroid();
        Ok(self.translated(-c.x, -c.y).scaled(1.0 / size))
    }
}

fn centroid_of(points: impl Iterator<Item = Point>) -> Point {
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for p in points {
        sx += p.x;
        sy += p.y;
        n += 1;
    }
    Point::new(sx / n as f64, sy / n as f64)
}

/// Moves a shape one cascade step forward.
///
/// With `upscale` the result lives one pyramid level finer:
/// `next = 2·current + delta`. The final iteration uses `upscale = false`,
/// giving `next = current + delta` in the same frame.
pub fn shape_update(current: &Shape, delta: &[Point], upscale: bool) -> Result<Shape> {
    if delta.len() != current.len() {
        return Err(Error::config(format!(
            "displacement has {} rows for a {}-landmark shape",
            delta.len(),
            current.len()
        )));
    }
    let factor = if upscale { 2.0 } else { 1.0 };
    Ok(Shape {
        points: current
            .points
            .iter()
            .zip(delta)
            .map(|(p, d)| Point::new(factor * p.x + d.x, factor * p.y + d.y))
            .collect(),
        frame: current.frame + usize::from(upscale),
    })
}
